use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights of the four-term accuracy + smoothness cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothWeights {
    /// Weight on the `p_n` RMSE against measurements.
    pub beta1: f64,
    /// Weight on the `h` RMSE against measurements.
    pub beta2: f64,
    /// Weight on the total variation of the `p_n` estimate.
    pub alpha1: f64,
    /// Weight on the total variation of the `h` estimate.
    pub alpha2: f64,
}

impl Default for SmoothWeights {
    fn default() -> Self {
        Self {
            beta1: 1.0,
            beta2: 60.0,
            alpha1: 10.0,
            alpha2: 5.0,
        }
    }
}

impl SmoothWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("tuning.smooth_weights.{name}"), format!("must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "variant")]
pub enum CostSpec {
    /// Sum of squared position errors against the true trajectory.
    LeastSquares,
    /// Four-term cost against measurements, for when truth is unavailable.
    Smooth(SmoothWeights),
}

/// CLI-facing cost selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostVariant {
    Ls,
    Smooth,
}

impl CostVariant {
    pub fn spec(self, weights: SmoothWeights) -> CostSpec {
        match self {
            CostVariant::Ls => CostSpec::LeastSquares,
            CostVariant::Smooth => CostSpec::Smooth(weights),
        }
    }
}

impl fmt::Display for CostVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostVariant::Ls => "ls",
            CostVariant::Smooth => "smooth",
        })
    }
}

impl FromStr for CostVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ls" | "least_squares" => Ok(CostVariant::Ls),
            "smooth" => Ok(CostVariant::Smooth),
            other => Err(Error::config("cost", format!("unknown cost `{other}` (expected ls|smooth)"))),
        }
    }
}

fn check_lengths(min: usize, series: [&[f64]; 4]) -> Result<usize> {
    let n = series[0].len();
    if series.iter().any(|s| s.len() != n) {
        return Err(Error::InputDomain(format!(
            "series lengths differ: {:?}",
            series.map(|s| s.len())
        )));
    }
    if n < min {
        return Err(Error::InputDomain(format!("need at least {min} samples, got {n}")));
    }
    Ok(n)
}

/// `sum (x - x_hat)^2 + sum (h - h_hat)^2`.
pub fn cost_least_squares(true_x: &[f64], true_h: &[f64], est_x: &[f64], est_h: &[f64]) -> Result<f64> {
    check_lengths(1, [true_x, true_h, est_x, est_h])?;
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    Ok(sq(true_x, est_x) + sq(true_h, est_h))
}

/// `beta1 RMSE(x) + beta2 RMSE(h) + alpha1 sum|diff x_hat| + alpha2 sum|diff h_hat|`, RMSE
/// taken between measurements and estimates.
pub fn cost_smooth(meas_x: &[f64], meas_h: &[f64], est_x: &[f64], est_h: &[f64], w: &SmoothWeights) -> Result<f64> {
    check_lengths(2, [meas_x, meas_h, est_x, est_h])?;
    Ok(w.beta1 * rmse(meas_x, est_x)
        + w.beta2 * rmse(meas_h, est_h)
        + w.alpha1 * total_variation(est_x)
        + w.alpha2 * total_variation(est_h))
}

/// Root-mean-square difference of two equal-length series.
pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let ss: f64 = a.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum();
    (ss / n as f64).sqrt()
}

/// `sum |x[i+1] - x[i]|`.
pub fn total_variation(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}
