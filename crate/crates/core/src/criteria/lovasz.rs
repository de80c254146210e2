//! Convex surrogate of the Jaccard loss over real-valued scores.

use crate::error::{Error, Result};

/// Jaccard index of two indicator vectors; 1 when both are empty.
pub fn jaccard_index(predicted: &[bool], truth: &[bool]) -> f64 {
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&p, &t) in predicted.iter().zip(truth) {
        inter += usize::from(p && t);
        union += usize::from(p || t);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Lovász hinge of scores `f` against binary `labels`.
///
/// Hinge errors `max(0, 1 - f_i s_i)` with `s_i = ±1` are sorted in
/// decreasing order and weighted by the increments of the Jaccard loss along
/// that order. Returns the loss and its gradient with respect to `f`.
pub fn lovasz_hinge(f: &[f64], labels: &[bool]) -> Result<(f64, Vec<f64>)> {
    if f.is_empty() {
        return Err(Error::Empty("Lovász hinge needs at least one score".into()));
    }
    if f.len() != labels.len() {
        return Err(Error::Invalid(format!(
            "{} scores but {} labels",
            f.len(),
            labels.len()
        )));
    }
    let sign = |t: bool| if t { 1.0 } else { -1.0 };
    let errors: Vec<f64> = f.iter().zip(labels).map(|(&fi, &t)| 1.0 - fi * sign(t)).collect();
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&a, &b| errors[b].total_cmp(&errors[a]).then(a.cmp(&b)));

    let positives = labels.iter().filter(|&&t| t).count() as f64;
    let mut cum_pos = 0.0;
    let mut cum_neg = 0.0;
    let mut prev_jac = 0.0;
    let mut loss = 0.0;
    let mut grad = vec![0.0; f.len()];
    for &idx in &order {
        if labels[idx] {
            cum_pos += 1.0;
        } else {
            cum_neg += 1.0;
        }
        let intersection = positives - cum_pos;
        let union = positives + cum_neg;
        let jac = 1.0 - intersection / union;
        let weight = jac - prev_jac;
        prev_jac = jac;
        if errors[idx] > 0.0 {
            loss += errors[idx] * weight;
            grad[idx] = -sign(labels[idx]) * weight;
        }
    }
    Ok((loss, grad))
}
