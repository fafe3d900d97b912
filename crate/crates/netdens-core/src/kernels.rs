//! Kernel functions and their truncated moments.
//!
//! Every asymptotic constant in this crate is built from integrals of a
//! kernel `K` over all or part of its support `(-1, 1)`:
//!
//! | quantity | definition |
//! |----------|------------|
//! | `μ_p(c)` | `∫_{-c}^{1} u^p K(u) du` |
//! | `R_p(c)` | `∫_{-c}^{1} u^p K(u)^2 du` |
//!
//! `c ∈ [0, 1]` is the boundary fraction: the distance from the evaluation
//! point to the nearest support boundary divided by the bandwidth. `c = 1`
//! recovers the ordinary interior moments (`μ_0 = 1`, odd moments zero);
//! `c = 0` is a one-sided fit at a vertex or edge end.
//!
//! All kernels here are symmetric, supported on `(-1, 1)`, and integrate
//! to one. Moments are computed by adaptive Simpson quadrature with
//! absolute tolerance `1e-10`; the Epanechnikov kernel additionally has
//! closed-form antiderivatives which are used directly (they are
//! cross-checked against the quadrature in the tests).

use core::fmt;
use core::str::FromStr;

/// Absolute tolerance of the adaptive quadrature used for kernel moments.
pub const QUAD_TOL: f64 = 1e-10;

/// A symmetric probability kernel supported on `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `K(u) = 3/4 (1 - u^2)`. The default everywhere in this crate.
    Epanechnikov,
    /// `K(u) = 15/16 (1 - u^2)^2`.
    Biweight,
    /// `K(u) = 1 - |u|`.
    Triangular,
}

impl Kernel {
    /// Evaluates `K(u)`; zero for `|u| >= 1`.
    pub fn eval(self, u: f64) -> f64 {
        let a = libm::fabs(u);
        if a >= 1.0 {
            return 0.0;
        }
        match self {
            Kernel::Epanechnikov => 0.75 * (1.0 - u * u),
            Kernel::Biweight => {
                let t = 1.0 - u * u;
                0.9375 * t * t
            }
            Kernel::Triangular => 1.0 - a,
        }
    }

    /// Stable lowercase name, accepted back by [`FromStr`].
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Biweight => "biweight",
            Kernel::Triangular => "triangular",
        }
    }
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Epanechnikov
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Error returned when a kernel name is not recognised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownKernel;

impl fmt::Display for UnknownKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown kernel name (expected epanechnikov, biweight, or triangular)")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for UnknownKernel {}

impl FromStr for Kernel {
    type Err = UnknownKernel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            "biweight" => Ok(Kernel::Biweight),
            "triangular" => Ok(Kernel::Triangular),
            _ => Err(UnknownKernel),
        }
    }
}

/// Truncated kernel moments at a fixed boundary fraction `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTable {
    /// Boundary fraction the table was computed at.
    pub c: f64,
    /// `μ_p(c) = ∫_{-c}^{1} u^p K(u) du` for `p = 0..=3`.
    pub mu: [f64; 4],
    /// `R_p(c) = ∫_{-c}^{1} u^p K(u)^2 du` for `p = 0..=2`.
    pub r: [f64; 3],
}

impl MomentTable {
    /// Variance constant `Q(c)` of this table; see [`q_constant`].
    pub fn q(&self) -> Result<f64, DegenerateMoments> {
        let det = self.mu[0] * self.mu[2] - self.mu[1] * self.mu[1];
        if det <= 1e-14 {
            return Err(DegenerateMoments { c: self.c });
        }
        let num = self.r[0] * self.mu[2] * self.mu[2]
            - 2.0 * self.r[1] * self.mu[1] * self.mu[2]
            + self.r[2] * self.mu[1] * self.mu[1];
        Ok(num / (det * det))
    }
}

/// Error from [`q_constant`]: the truncated design is degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateMoments {
    /// Boundary fraction at which `μ_0 μ_2 - μ_1^2` was not positive.
    pub c: f64,
}

impl fmt::Display for DegenerateMoments {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "degenerate kernel moment matrix at boundary fraction {}", self.c)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DegenerateMoments {}

/// `∫_a^b u^p K(u) du`, with `[a, b]` clipped to the support `[-1, 1]`.
pub fn partial_moment(k: Kernel, a: f64, b: f64, p: u32) -> f64 {
    let (a, b) = clip(a, b);
    if a >= b {
        return 0.0;
    }
    match k {
        Kernel::Epanechnikov => epan_antideriv(b, p) - epan_antideriv(a, p),
        _ => adaptive_simpson(&|u| powi(u, p) * k.eval(u), a, b, QUAD_TOL),
    }
}

/// `∫_a^b u^p K(u)^2 du`, with `[a, b]` clipped to the support `[-1, 1]`.
pub fn partial_square_moment(k: Kernel, a: f64, b: f64, p: u32) -> f64 {
    let (a, b) = clip(a, b);
    if a >= b {
        return 0.0;
    }
    match k {
        Kernel::Epanechnikov => epan_sq_antideriv(b, p) - epan_sq_antideriv(a, p),
        _ => adaptive_simpson(
            &|u| {
                let w = k.eval(u);
                powi(u, p) * w * w
            },
            a,
            b,
            QUAD_TOL,
        ),
    }
}

/// Truncated moments `μ_p(c)` and `R_p(c)` for `p` up to 3 (resp. 2).
pub fn truncated_moments(k: Kernel, c: f64) -> MomentTable {
    let mu = [
        partial_moment(k, -c, 1.0, 0),
        partial_moment(k, -c, 1.0, 1),
        partial_moment(k, -c, 1.0, 2),
        partial_moment(k, -c, 1.0, 3),
    ];
    let r = [
        partial_square_moment(k, -c, 1.0, 0),
        partial_square_moment(k, -c, 1.0, 1),
        partial_square_moment(k, -c, 1.0, 2),
    ];
    MomentTable { c, mu, r }
}

/// Variance constant of a local linear fit at boundary fraction `c`.
///
/// This is the `(1,1)` element of `S⁻¹ R S⁻¹` where `S = {μ_{i+j}(c)}` and
/// `R = {R_{i+j}(c)}` are the 2x2 truncated moment matrices of the local
/// linear design. Expanded:
///
/// ```text
/// Q(c) = (R_0 μ_2² - 2 R_1 μ_1 μ_2 + R_2 μ_1²) / (μ_0 μ_2 - μ_1²)²
/// ```
///
/// At `c = 1` this reduces to `R_0` (odd moments vanish and `μ_0 = 1`),
/// the familiar interior value; `μ_0` must be kept in the denominator for
/// `c < 1` or the constant is wrong at boundaries.
pub fn q_constant(k: Kernel, c: f64) -> Result<f64, DegenerateMoments> {
    truncated_moments(k, c).q()
}

fn clip(a: f64, b: f64) -> (f64, f64) {
    (a.max(-1.0), b.min(1.0))
}

// u^p for the small fixed powers used in moment integrands.
fn powi(u: f64, p: u32) -> f64 {
    let mut out = 1.0;
    for _ in 0..p {
        out *= u;
    }
    out
}

// Antiderivative of u^p * 3/4 (1 - u^2).
fn epan_antideriv(t: f64, p: u32) -> f64 {
    let p1 = (p + 1) as f64;
    let p3 = (p + 3) as f64;
    0.75 * (powi(t, p + 1) / p1 - powi(t, p + 3) / p3)
}

// Antiderivative of u^p * 9/16 (1 - u^2)^2.
fn epan_sq_antideriv(t: f64, p: u32) -> f64 {
    let p1 = (p + 1) as f64;
    let p3 = (p + 3) as f64;
    let p5 = (p + 5) as f64;
    0.5625 * (powi(t, p + 1) / p1 - 2.0 * powi(t, p + 3) / p3 + powi(t, p + 5) / p5)
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = simpson(f, a, 0.5 * (a + m), m);
    let right = simpson(f, m, 0.5 * (m + b), b);
    let delta = left + right - whole;
    if depth == 0 || libm::fabs(delta) <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let whole = simpson(f, a, 0.5 * (a + b), b);
    adaptive_step(f, a, b, whole, tol, 48)
}
