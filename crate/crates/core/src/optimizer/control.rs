use crate::error::{Error, Result};

/// Default EMA factor: a loss 100 iterations old has half the weight of the
/// newest one.
pub fn default_ema_factor() -> f64 {
    0.5f64.powf(0.01)
}

/// Normalized geometric moving average, kept as numerator and denominator
/// sums so early values are not biased toward zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ema {
    s: f64,
    num: f64,
    den: f64,
}

impl Ema {
    pub fn new(s: f64) -> Result<Ema> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Config(format!(
                "EMA factor {s} must lie strictly between 0 and 1"
            )));
        }
        Ok(Ema { s, num: 0.0, den: 0.0 })
    }

    pub fn update(&mut self, loss: f64) -> f64 {
        self.num = self.s * self.num + loss;
        self.den = self.s * self.den + 1.0;
        self.num / self.den
    }

    pub fn value(&self) -> Option<f64> {
        (self.den > 0.0).then(|| self.num / self.den)
    }
}

/// EMA of every prefix of `losses`.
pub fn ema_series(losses: &[f64], s: f64) -> Result<Vec<f64>> {
    let mut ema = Ema::new(s)?;
    Ok(losses.iter().map(|&l| ema.update(l)).collect())
}

/// `max(100, floor(n / m) * 300)`.
pub fn patience_for(n: usize, m: usize) -> usize {
    (n / m.max(1) * 300).max(100)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Continue,
    DecayLr,
    Stop,
}

/// Learning-rate annealing on a plateauing EMA loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Patience {
    patience: usize,
    decay: f64,
    min_scale: f64,
    best: f64,
    since: usize,
    scale: f64,
}

impl Patience {
    pub fn new(patience: usize, decay: f64, min_scale: f64) -> Result<Patience> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::Config(format!(
                "decay factor {decay} must lie strictly between 0 and 1"
            )));
        }
        if patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        Ok(Patience {
            patience,
            decay,
            min_scale,
            best: f64::INFINITY,
            since: 0,
            scale: 1.0,
        })
    }

    pub fn patience(&self) -> usize {
        self.patience
    }

    /// Current learning-rate multiplier.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn set_scale(&mut self, scale: f64) {
        self.scale = scale;
        self.since = 0;
    }

    /// Forget the best EMA seen and return to full scale, as after a change
    /// of objective.
    pub fn restart(&mut self) {
        self.best = f64::INFINITY;
        self.set_scale(1.0);
    }

    /// Feed the EMA loss of one iteration.
    pub fn observe(&mut self, ema: f64) -> Action {
        if ema < self.best {
            self.best = ema;
            self.since = 0;
            return Action::Continue;
        }
        self.since += 1;
        if self.since < self.patience {
            return Action::Continue;
        }
        self.since = 0;
        self.scale *= self.decay;
        if self.scale < self.min_scale {
            Action::Stop
        } else {
            Action::DecayLr
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ema_examples() {
        let mut e = Ema::new(0.5).unwrap();
        e.update(4.0);
        assert!((e.update(2.0) - 8.0 / 3.0).abs() < 1e-15);
        let s = default_ema_factor();
        assert!((s.powi(100) - 0.5).abs() < 1e-12);
        for v in ema_series(&[3.25; 50], s).unwrap() {
            assert!((v - 3.25).abs() < 1e-12);
        }
        assert!(Ema::new(1.0).is_err());
        assert_eq!(Ema::new(0.3).unwrap().value(), None);
    }

    #[test]
    fn patience_formula() {
        assert_eq!(patience_for(1023, 32), 9300);
        assert_eq!(patience_for(20, 32), 100);
        assert_eq!(patience_for(288, 32), 2700);
    }

    #[test]
    fn decreasing_never_decays() {
        let mut p = Patience::new(5, 0.7, 1e-3).unwrap();
        for k in 0..1000 {
            assert_eq!(p.observe(1000.0 - k as f64), Action::Continue);
        }
    }

    #[test]
    fn flat_decays_once_after_patience() {
        let mut p = Patience::new(10, 0.7, 1e-3).unwrap();
        let actions: Vec<Action> = (0..11).map(|_| p.observe(1.0)).collect();
        assert_eq!(actions.iter().filter(|a| **a == Action::DecayLr).count(), 1);
        assert_eq!(actions[10], Action::DecayLr);
        assert!((p.scale() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn stops_below_floor() {
        let mut p = Patience::new(1, 0.5, 0.2).unwrap();
        p.observe(1.0);
        assert_eq!(p.observe(1.0), Action::DecayLr);
        assert_eq!(p.observe(1.0), Action::DecayLr);
        assert_eq!(p.observe(1.0), Action::Stop);
    }
}
