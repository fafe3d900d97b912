//! Local polynomial regression on one edge's binned heights.
//!
//! A degree-`p` polynomial centered at the evaluation offset is fitted by
//! kernel-weighted least squares to the bin heights; the intercept
//! estimates the density and `s!·β̂_s` estimates its `s`-th derivative.
//! The attached covariance is the finite-sample sandwich with the
//! plug-in response variances from [`crate::binning`]; the asymptotic
//! leading bias and variance are available separately as diagnostics.

use alloc::vec::Vec;
use core::fmt;

use crate::binning::{plugin_variance, BinnedEdge};
use crate::kernels::{Kernel, MomentTable};
use crate::linalg::{sandwich_covariance, wls, LinalgError, Mat};
use crate::network::EdgeEnd;

/// A fitted local polynomial at one evaluation offset.
#[derive(Debug, Clone)]
pub struct LocalFit {
    /// Coefficients `β̂₀..β̂_p` of the centered polynomial.
    pub beta_hat: Vec<f64>,
    /// Sandwich covariance of `beta_hat`, `(p+1)×(p+1)`.
    pub covariance: Mat,
    /// Evaluation offset the design is centered at.
    pub x0: f64,
    /// Bandwidth.
    pub h: f64,
    /// Polynomial degree.
    pub degree: usize,
    /// Number of bins with positive kernel weight.
    pub n_effective: usize,
    /// The system was square (`n_effective == p+1`), so the fit
    /// interpolates the in-window heights.
    pub interpolating: bool,
}

impl LocalFit {
    /// Density estimate at the evaluation offset: `β̂₀`.
    pub fn m_hat(&self) -> f64 {
        self.beta_hat[0]
    }

    /// Estimate of the `s`-th derivative, `s!·β̂_s`.
    pub fn derivative(&self, s: usize) -> Option<f64> {
        let b = self.beta_hat.get(s)?;
        let fact: f64 = (1..=s).map(|i| i as f64).product();
        Some(fact * b)
    }

    /// Evaluates the fitted polynomial at an offset near `x0`.
    pub fn predict(&self, x: f64) -> f64 {
        let d = x - self.x0;
        let mut acc = 0.0;
        let mut pow = 1.0;
        for b in &self.beta_hat {
            acc += b * pow;
            pow *= d;
        }
        acc
    }

    /// Variance of the density estimate: covariance `[0,0]`.
    pub fn variance(&self) -> f64 {
        self.covariance[(0, 0)]
    }
}

/// Why a local fit could not be produced.
#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    /// Fewer in-window bins than coefficients.
    Insufficient {
        /// Bins with positive weight.
        n_effective: usize,
        /// Coefficients to estimate (`p+1`).
        needed: usize,
    },
    /// The weighted normal matrix was numerically singular.
    Singular {
        /// 1-norm condition estimate at failure.
        cond: f64,
    },
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::Insufficient { n_effective, needed } => write!(
                f,
                "local fit needs {needed} in-window bins, found {n_effective}; increase h"
            ),
            FitError::Singular { cond } => {
                write!(f, "weighted design is singular (condition estimate {cond:.3e})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FitError {}

impl From<LinalgError> for FitError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { cond } => FitError::Singular { cond },
            LinalgError::Underdetermined { rows, cols } => {
                FitError::Insufficient { n_effective: rows, needed: cols }
            }
        }
    }
}

/// Fits a degree-`p` local polynomial to one edge's bin heights at
/// offset `x0`.
pub fn fit_local_poly(
    bins: &BinnedEdge,
    n_total: u64,
    x0: f64,
    h: f64,
    p: usize,
    k: Kernel,
) -> Result<LocalFit, FitError> {
    let mut xrows: Vec<Vec<f64>> = Vec::new();
    let mut w: Vec<f64> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for (i, &c) in bins.centers.iter().enumerate() {
        let wi = k.eval((c - x0) / h) / h;
        if wi > 0.0 {
            let d = c - x0;
            let mut row = Vec::with_capacity(p + 1);
            let mut pow = 1.0;
            for _ in 0..=p {
                row.push(pow);
                pow *= d;
            }
            xrows.push(row);
            w.push(wi);
            y.push(bins.heights[i]);
        }
    }
    let n_effective = xrows.len();
    if n_effective < p + 1 {
        return Err(FitError::Insufficient { n_effective, needed: p + 1 });
    }
    let x = Mat::from_rows(&xrows);
    let fit = wls(&x, &w, &y)?;

    // Plug-in response variances from the fitted heights.
    let v: Vec<f64> = xrows
        .iter()
        .map(|row| {
            let mut m = 0.0;
            for (b, xi) in fit.beta.iter().zip(row) {
                m += b * xi;
            }
            plugin_variance(m, n_total, bins.actual_width)
        })
        .collect();
    let covariance = sandwich_covariance(&fit.xtwx_inv, &x, &w, &v);

    Ok(LocalFit {
        beta_hat: fit.beta,
        covariance,
        x0,
        h,
        degree: p,
        n_effective,
        interpolating: n_effective == p + 1,
    })
}

/// Density limit of one edge at one of its endpoints.
#[derive(Debug, Clone)]
pub struct VertexEstimate {
    /// Estimated one-sided density limit at the vertex.
    pub value: f64,
    /// Sandwich variance of the limit.
    pub variance: f64,
    /// The edge is shorter than the bandwidth, so the one-sided window
    /// spills past the far endpoint.
    pub short_edge: bool,
    /// The underlying local linear fit.
    pub fit: LocalFit,
}

/// Local linear estimate of an edge's density limit at one endpoint.
pub fn estimate_edge_limit_at_vertex(
    bins: &BinnedEdge,
    n_total: u64,
    end: EdgeEnd,
    h: f64,
    k: Kernel,
) -> Result<VertexEstimate, FitError> {
    let length = bins.actual_width * bins.centers.len() as f64;
    let x0 = end.offset(length);
    let fit = fit_local_poly(bins, n_total, x0, h, 1, k)?;
    Ok(VertexEstimate {
        value: fit.m_hat(),
        variance: fit.variance(),
        short_edge: length < h,
        fit,
    })
}

/// Leading-order asymptotic bias and variance of a local fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Diagnostics {
    /// Plug-in leading bias `½h²·(μ₂²−μ₃μ₁)/(μ₀μ₂−μ₁²)·m̂⁽²⁾`; absent
    /// when the fit has no curvature coefficient (degree < 2).
    pub bias_leading: Option<f64>,
    /// Plug-in leading variance `C·Q` with
    /// `C = m̂/(Nh) − ω·m̂²/(Nh)`.
    pub variance_leading: f64,
}

/// Computes the asymptotic leading bias and variance for a fit, using
/// moments truncated at boundary fraction `c`.
pub fn theorem1_diagnostics(
    fit: &LocalFit,
    n_total: u64,
    width: f64,
    moments: &MomentTable,
) -> Theorem1Diagnostics {
    let m = &moments.mu;
    let bias_leading = if fit.degree >= 2 {
        let m2 = fit.derivative(2).expect("degree >= 2");
        let num = m[2] * m[2] - m[3] * m[1];
        let den = m[0] * m[2] - m[1] * m[1];
        Some(0.5 * fit.h * fit.h * num / den * m2)
    } else {
        None
    };
    let mhat = fit.m_hat();
    let n = n_total as f64;
    let c_const = mhat / (n * fit.h) - width * mhat * mhat / (n * fit.h);
    let q = moments.q().expect("nondegenerate moments");
    Theorem1Diagnostics { bias_leading, variance_leading: c_const * q }
}
