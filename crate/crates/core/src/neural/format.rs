//! Persisted forms of a [`CrossingPredictor`].
//!
//! JSON keeps every value at full precision, including the optimizer state.
//! The compact binary form stores the network only, as little-endian
//! 32-bit values:
//!
//! | field            | type           |
//! |------------------|----------------|
//! | magic `SGDP`     | 4 bytes        |
//! | version (1)      | u32            |
//! | hidden width `H` | u32            |
//! | negative slope   | f32            |
//! | momentum         | f32            |
//! | parameter count  | u32            |
//! | parameters       | f32 × count    |
//! | running stats    | f32 × 4H (mean 1, var 1, mean 2, var 2) |
//!
//! Parameters are laid out as `W1 (H×8), b1, γ1, β1, W2 (H×H), b2, γ2, β2,
//! w3 (H), b3`, matrices row-major.

use serde::{Deserialize, Serialize};

use super::{Blocks, CrossingPredictor, NormStats, PredictorConfig};
use crate::error::{Error, Result};

pub const FORMAT_MAGIC: &[u8; 4] = b"SGDP";
pub const FORMAT_VERSION: u32 = 1;
const JSON_FORMAT: &str = "sgdraw-crossing-predictor";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictorFile {
    format: String,
    version: u32,
    config: PredictorConfig,
    params: Vec<f64>,
    norm: [NormStats; 2],
    adam: Adam,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(format!("predictor data: {}", msg.into()))
}

fn check_shapes(config: &PredictorConfig, params: usize, norm: &[NormStats; 2]) -> Result<Blocks> {
    if config.hidden == 0 {
        return Err(invalid("hidden width is zero"));
    }
    let blocks = Blocks::new(config.hidden);
    if params != blocks.len {
        return Err(invalid(format!(
            "{params} parameters, expected {} for width {}",
            blocks.len, config.hidden
        )));
    }
    for s in norm {
        if s.mean.len() != config.hidden || s.var.len() != config.hidden {
            return Err(invalid("normalization statistics have the wrong width"));
        }
    }
    Ok(blocks)
}

impl CrossingPredictor {
    pub fn to_json(&self) -> String {
        let file = PredictorFile {
            format: JSON_FORMAT.to_string(),
            version: FORMAT_VERSION,
            config: self.config,
            params: self.params.clone(),
            norm: self.stats.clone(),
            adam: Adam {
                m: self.adam_m.clone(),
                v: self.adam_v.clone(),
                steps: self.steps,
            },
        };
        serde_json::to_string(&file).expect("predictor serializes")
    }

    pub fn from_json(text: &str) -> Result<CrossingPredictor> {
        let file: PredictorFile = serde_json::from_str(text)?;
        if file.format != JSON_FORMAT || file.version != FORMAT_VERSION {
            return Err(invalid(format!(
                "unsupported format {:?} version {}",
                file.format, file.version
            )));
        }
        let blocks = check_shapes(&file.config, file.params.len(), &file.norm)?;
        if file.adam.m.len() != blocks.len || file.adam.v.len() != blocks.len {
            return Err(invalid("optimizer state has the wrong length"));
        }
        Ok(CrossingPredictor {
            config: file.config,
            blocks,
            params: file.params,
            stats: file.norm,
            adam_m: file.adam.m,
            adam_v: file.adam.v,
            steps: file.adam.steps,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let h = self.config.hidden;
        let mut out = Vec::with_capacity(24 + 4 * (self.params.len() + 4 * h));
        out.extend_from_slice(FORMAT_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(h as u32).to_le_bytes());
        out.extend_from_slice(&(self.config.negative_slope as f32).to_le_bytes());
        out.extend_from_slice(&(self.config.momentum as f32).to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        let stats = self.stats.iter().flat_map(|s| s.mean.iter().chain(&s.var));
        for v in self.params.iter().chain(stats) {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        out
    }

    /// Network from the binary form; optimizer settings take their defaults
    /// and the optimizer state starts empty.
    pub fn from_bytes(bytes: &[u8]) -> Result<CrossingPredictor> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes
                .get(pos..pos + n)
                .ok_or_else(|| invalid("truncated binary data"))?;
            pos += n;
            Ok(s)
        };
        if take(4)? != FORMAT_MAGIC {
            return Err(invalid("bad magic"));
        }
        let mut u32_at = || -> Result<u32> { Ok(u32::from_le_bytes(take(4)?.try_into().unwrap())) };
        let version = u32_at()?;
        if version != FORMAT_VERSION {
            return Err(invalid(format!("unsupported version {version}")));
        }
        let h = u32_at()? as usize;
        let slope = f32::from_bits(u32_at()?);
        let momentum = f32::from_bits(u32_at()?);
        let count = u32_at()? as usize;
        let mut floats = Vec::with_capacity(count + 4 * h);
        for _ in 0..count + 4 * h {
            floats.push(f64::from(f32::from_bits(u32_at()?)));
        }
        let config = PredictorConfig {
            hidden: h,
            negative_slope: f64::from(slope),
            momentum: f64::from(momentum),
            ..PredictorConfig::default()
        };
        let stats_flat = floats.split_off(count);
        let chunk = |k: usize| stats_flat[k * h..(k + 1) * h].to_vec();
        let norm = [
            NormStats {
                mean: chunk(0),
                var: chunk(1),
            },
            NormStats {
                mean: chunk(2),
                var: chunk(3),
            },
        ];
        let blocks = check_shapes(&config, count, &norm)?;
        Ok(CrossingPredictor {
            config,
            blocks,
            adam_m: vec![0.0; count],
            adam_v: vec![0.0; count],
            params: floats,
            stats: norm,
            steps: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;

    fn trained() -> CrossingPredictor {
        let mut net = CrossingPredictor::new(
            PredictorConfig {
                hidden: 8,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        let batch = vec![
            (
                [
                    Point::new(0., 0.),
                    Point::new(1., 1.),
                    Point::new(0., 1.),
                    Point::new(1., 0.),
                ],
                true,
            ),
            (
                [
                    Point::new(0., 0.),
                    Point::new(1., 0.),
                    Point::new(0., 1.),
                    Point::new(1., 1.),
                ],
                false,
            ),
        ];
        for _ in 0..3 {
            net.train_step(&batch).unwrap();
        }
        net
    }

    #[test]
    fn json_is_exact() {
        let net = trained();
        let back = CrossingPredictor::from_json(&net.to_json()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn binary_keeps_f32_precision() {
        let net = trained();
        let bytes = net.to_bytes();
        assert_eq!(&bytes[..4], b"SGDP");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        let back = CrossingPredictor::from_bytes(&bytes).unwrap();
        for (a, b) in net.parameters().iter().zip(back.parameters()) {
            assert_eq!(*b, f64::from(*a as f32));
        }
        let pts = [
            Point::new(0.1, 0.),
            Point::new(1., 0.8),
            Point::new(0., 1.),
            Point::new(1.2, 0.),
        ];
        assert!((net.predict(&pts) - back.predict(&pts)).abs() < 1e-5);
        assert!(CrossingPredictor::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(CrossingPredictor::from_bytes(b"NOPE").is_err());
    }
}
