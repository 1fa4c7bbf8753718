//! Numerical inverse Laplace transform on the fixed Talbot contour.
//!
//! The contour is `s(θ) = r·θ(cot θ + i)` for `θ ∈ (−π, π)` with
//! `r = 2M/(5t)`, discretized by the trapezoidal rule at `θ_k = kπ/M`.
//! Both half-contours are summed explicitly so matrix-valued originals with
//! complex entries invert correctly (the usual real-part shortcut assumes a
//! real original).

use crate::error::{Error, Result};
use crate::linalg::{cx, CMatrix};
use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct TalbotConfig {
    pub nodes: usize,
}

impl Default for TalbotConfig {
    fn default() -> Self {
        Self { nodes: 32 }
    }
}

/// Invert a matrix-valued Laplace transform at time `t > 0`.
///
/// `transform` must be the analytic continuation of the transform to the
/// complex plane left of the abscissa (rational transforms qualify); it may
/// fail with [`Error::ContourPole`] when the contour hits a singularity.
pub fn talbot_invert<F>(mut transform: F, t: f64, nodes: usize) -> Result<CMatrix>
where
    F: FnMut(Complex64) -> Result<CMatrix>,
{
    if !(t > 0.0) {
        return Err(Error::param("t", format!("Talbot inversion requires t > 0, got {t}")));
    }
    if nodes < 4 {
        return Err(Error::param("nodes", "need at least 4 Talbot nodes"));
    }
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut acc: Option<CMatrix> = None;
    for k in -(nodes as i64 - 1)..=(nodes as i64 - 1) {
        let theta = k as f64 * PI / m;
        let (s, weight) = if k == 0 {
            (cx(r, 0.0), cx(1.0, 0.0))
        } else {
            let cot = theta.cos() / theta.sin();
            let s = cx(r * theta * cot, r * theta);
            // s'(θ)/(i r) = 1 + iσ(θ)
            let sigma = theta + (theta * cot - 1.0) * cot;
            (s, cx(1.0, sigma))
        };
        let value = transform(s)?;
        if value.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::ContourPole { u: s });
        }
        let term = value * ((s * t).exp() * weight);
        acc = Some(match acc {
            None => term,
            Some(a) => a + term,
        });
    }
    let sum = acc.expect("nodes >= 4");
    Ok(sum * cx(r / (2.0 * m), 0.0))
}
