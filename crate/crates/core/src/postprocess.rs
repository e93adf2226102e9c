//! Rating noise applied before storage and reward decay for repeated
//! recommendations.

use alloc::format;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::math;
use crate::scale::RatingScale;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PostprocessError {
    #[error("unrecognised perturbation {0:?}, expected none, gaussian:<sigma> or greedy:<q>")]
    Syntax(String),
    #[error("gaussian sigma must be positive and finite, got {0}")]
    Sigma(String),
    #[error("greedy flip probability must be in [0, 1], got {0}")]
    Flip(String),
    #[error("shaping q must be in [0, 1], got {0}")]
    ShapeQ(String),
}

/// Noise applied to a raw rating before it is stored.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PerturbConfig {
    #[default]
    None,
    Gaussian {
        sigma: f64,
    },
    /// Moves the rating by one, up or down with equal odds, with
    /// probability `q_flip`.
    Greedy {
        q_flip: f64,
    },
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<(), PostprocessError> {
        match *self {
            PerturbConfig::None => Ok(()),
            PerturbConfig::Gaussian { sigma } => {
                if sigma.is_finite() && sigma > 0.0 {
                    Ok(())
                } else {
                    Err(PostprocessError::Sigma(format!("{sigma}")))
                }
            }
            PerturbConfig::Greedy { q_flip } => {
                if (0.0..=1.0).contains(&q_flip) {
                    Ok(())
                } else {
                    Err(PostprocessError::Flip(format!("{q_flip}")))
                }
            }
        }
    }
}

impl fmt::Display for PerturbConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbConfig::None => f.write_str("none"),
            PerturbConfig::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            PerturbConfig::Greedy { q_flip } => write!(f, "greedy:{q_flip}"),
        }
    }
}

impl FromStr for PerturbConfig {
    type Err = PostprocessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let parsed = if s.eq_ignore_ascii_case("none") {
            PerturbConfig::None
        } else {
            let (kind, value) = s
                .split_once(':')
                .ok_or_else(|| PostprocessError::Syntax(s.into()))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| PostprocessError::Syntax(s.into()))?;
            match kind.trim() {
                k if k.eq_ignore_ascii_case("gaussian") => PerturbConfig::Gaussian { sigma: value },
                k if k.eq_ignore_ascii_case("greedy") => PerturbConfig::Greedy { q_flip: value },
                _ => return Err(PostprocessError::Syntax(s.into())),
            }
        };
        parsed.validate()?;
        Ok(parsed)
    }
}

impl Serialize for PerturbConfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PerturbConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_SHAPING_Q: f64 = 0.7;

fn default_shaping_q() -> f64 {
    DEFAULT_SHAPING_Q
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PostprocessConfig {
    #[serde(default)]
    pub perturb: PerturbConfig,
    #[serde(default = "default_shaping_q")]
    pub shaping_q: f64,
}

impl Default for PostprocessConfig {
    fn default() -> Self {
        PostprocessConfig {
            perturb: PerturbConfig::None,
            shaping_q: DEFAULT_SHAPING_Q,
        }
    }
}

impl PostprocessConfig {
    pub fn validate(&self) -> Result<(), PostprocessError> {
        self.perturb.validate()?;
        if !(0.0..=1.0).contains(&self.shaping_q) {
            return Err(PostprocessError::ShapeQ(format!("{}", self.shaping_q)));
        }
        Ok(())
    }
}

/// Applies `config` to an on-scale rating. The result is always on `scale`.
pub fn perturb<R: Rng + ?Sized>(
    rng: &mut R,
    rating: u8,
    config: &PerturbConfig,
    scale: RatingScale,
) -> u8 {
    let r = i32::from(rating);
    match *config {
        PerturbConfig::None => scale.clamp(r),
        PerturbConfig::Gaussian { sigma } => {
            let noise = Normal::new(0.0, sigma)
                .expect("validated sigma")
                .sample(rng);
            scale.clamp(math::round(f64::from(rating) + noise) as i32)
        }
        PerturbConfig::Greedy { q_flip } => {
            if rng.random_bool(q_flip) {
                let dir = if rng.random_bool(0.5) { 1 } else { -1 };
                // At a scale end the only legal move is inward.
                let moved = if scale.contains((r + dir).clamp(0, 255) as u8) {
                    r + dir
                } else {
                    r - dir
                };
                scale.clamp(moved)
            } else {
                scale.clamp(r)
            }
        }
    }
}

/// `max(1, floor(rating * q^(n_ui / delta_t)))`; identity when `n_ui == 0`.
///
/// A relative slack of 1e-9 keeps products that are mathematically whole
/// numbers from flooring down through float error.
pub fn shape(rating: u8, n_ui: usize, delta_t: u64, q_shape: f64) -> u8 {
    if n_ui == 0 {
        return rating;
    }
    let exponent = n_ui as f64 / delta_t.max(1) as f64;
    let value = f64::from(rating) * math::pow(q_shape, exponent);
    let floored = math::floor(value * (1.0 + 1e-9) + 1e-12);
    (floored as i64).clamp(1, i64::from(rating)) as u8
}
