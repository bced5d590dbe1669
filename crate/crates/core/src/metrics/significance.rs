//! Paired one-sided t-test across cross-validation folds.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Significance threshold for method comparisons.
pub const ALPHA: f64 = 0.05;

/// Alternative hypothesis about the paired differences `d = a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// `a` tends to exceed `b`.
    Greater,
    /// `a` tends to fall below `b`.
    Less,
}

/// Student-t CDF with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("degrees of freedom are positive")
        .cdf(t)
}

/// One-sided p-value of the paired t-test on `a[i] - b[i]`.
///
/// Zero-variance differences give 0 or 1 by the sign of their mean, and
/// exactly 0.5 when they are all zero.
pub fn paired_t_test_one_sided(a: &[f64], b: &[f64], alternative: Alternative) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::invalid("a paired t-test needs at least two pairs"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("paired t-test inputs must be finite"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sign = match alternative {
        Alternative::Greater => 1.0,
        Alternative::Less => -1.0,
    };
    if var == 0.0 {
        return Ok(match (sign * mean).partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => 0.0,
            Some(std::cmp::Ordering::Less) => 1.0,
            _ => 0.5,
        });
    }
    let t = mean / (var.sqrt() / n.sqrt());
    // Upper tail of `sign * t`, written as a lower tail for accuracy.
    Ok(student_t_cdf(-sign * t, n - 1.0))
}
