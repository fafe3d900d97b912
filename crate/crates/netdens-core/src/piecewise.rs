//! Estimation near vertices under the pretest's decisions.
//!
//! Inside the `h`-window of a vertex the density is modeled as piecewise
//! linear with a shared value at the vertex: one intercept column plus
//! one slope column per edge. Each datum's row chains first-order
//! expansions along its path, so a datum reached through vertices
//! `v₁,…,v_k` contributes `[1, (v₁−x), (v₂−v₁), …, (x_i−v_k)]` spread
//! over the traversed edges' columns, all in signed path coordinates.
//! Data whose paths cross a vertex outside that vertex's accepted group
//! are excluded before assembly, which is exactly the direct-access rule.
//!
//! When the pretest additionally accepts equal slopes at every crossed
//! vertex, identifying the slope columns collapses each row to the single
//! regressor `(x_i − x)`: ordinary local linear regression in signed
//! network distance.
//!
//! [`density_profile`] drives the whole decision per evaluation point:
//! no vertex in the window → plain single-edge fit; crossings into an
//! accepted group → constrained (or equal-slope) fit; everything else →
//! the fit restricted to the evaluation point's own edge.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::binning::{plugin_variance, BinnedNetwork};
use crate::kernels::{partial_moment, partial_square_moment, Kernel};
use crate::linalg::{sandwich_covariance, solve_spd, wls, LinalgError, Mat};
use crate::lpr::{fit_local_poly, FitError};
use crate::network::{
    h_neighborhood, EdgeId, LinearNetwork, NeighborhoodDatum, NetworkError, NetworkPoint,
    VertexId,
};
use crate::vertex_test::VertexOutcome;

/// Which estimator produced a profile value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// No vertex inside the window: plain single-edge fit.
    Interior,
    /// Equal-intercept piecewise fit through accepted vertices.
    Constrained,
    /// Equal intercept and equal slope: local linear in signed distance.
    ConstrainedEqualSlope,
    /// Vertices in the window but no accepted crossings: same-edge data
    /// only.
    EdgeRestricted,
}

impl Regime {
    /// Stable lowercase name used in CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Interior => "interior",
            Regime::Constrained => "constrained",
            Regime::ConstrainedEqualSlope => "constrained_equal_slope",
            Regime::EdgeRestricted => "edge_restricted",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Failure in constrained estimation.
#[derive(Debug, Clone, PartialEq)]
pub enum PiecewiseError {
    /// No data in the window.
    EmptyNeighborhood,
    /// Fewer rows than columns; a larger bandwidth is needed.
    Underdetermined {
        /// Rows available.
        rows: usize,
        /// Columns required.
        cols: usize,
    },
    /// Singular weighted system.
    Singular {
        /// Condition estimate at failure.
        cond: f64,
    },
    /// A single-edge fallback fit failed.
    Fit(FitError),
    /// A query point was malformed.
    Network(NetworkError),
}

impl fmt::Display for PiecewiseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PiecewiseError::EmptyNeighborhood => f.write_str("no data in the bandwidth window"),
            PiecewiseError::Underdetermined { rows, cols } => write!(
                f,
                "constrained design has {rows} rows for {cols} columns; increase h"
            ),
            PiecewiseError::Singular { cond } => {
                write!(f, "constrained system is singular (condition estimate {cond:.3e})")
            }
            PiecewiseError::Fit(e) => write!(f, "{e}"),
            PiecewiseError::Network(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PiecewiseError {}

impl From<FitError> for PiecewiseError {
    fn from(e: FitError) -> Self {
        PiecewiseError::Fit(e)
    }
}

impl From<NetworkError> for PiecewiseError {
    fn from(e: NetworkError) -> Self {
        PiecewiseError::Network(e)
    }
}

impl From<LinalgError> for PiecewiseError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { cond } => PiecewiseError::Singular { cond },
            LinalgError::Underdetermined { rows, cols } => {
                PiecewiseError::Underdetermined { rows, cols }
            }
        }
    }
}

/// Bin centers of a whole histogram flattened to network points, with
/// their heights and widths, in a fixed deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPoints {
    /// Every bin center as a point on the network.
    pub points: Vec<NetworkPoint>,
    /// Height of each bin, parallel to `points`.
    pub heights: Vec<f64>,
    /// Actual bin width of each bin, parallel to `points`.
    pub widths: Vec<f64>,
}

/// Flattens a histogram into regression data points.
pub fn collect_bin_points(binned: &BinnedNetwork) -> BinPoints {
    let mut points = Vec::new();
    let mut heights = Vec::new();
    let mut widths = Vec::new();
    for be in &binned.edges {
        for (i, &c) in be.centers.iter().enumerate() {
            points.push(NetworkPoint { edge: be.edge, offset: c });
            heights.push(be.heights[i]);
            widths.push(be.actual_width);
        }
    }
    BinPoints { points, heights, widths }
}

/// Keeps only data with direct access: at every crossed vertex, both the
/// arriving and the departing edge must belong to that vertex's accepted
/// group.
pub fn filter_by_groups(
    data: &[NeighborhoodDatum],
    outcomes: &BTreeMap<VertexId, VertexOutcome>,
) -> Vec<NeighborhoodDatum> {
    data.iter()
        .filter(|d| {
            d.vertices_crossed.iter().enumerate().all(|(k, v)| {
                let arrive = d.edges_traversed[k];
                let depart = d.edges_traversed[k + 1];
                outcomes
                    .get(v)
                    .map(|o| o.group.contains(&arrive) && o.group.contains(&depart))
                    .unwrap_or(false)
            })
        })
        .cloned()
        .collect()
}

/// A kernel-weighted design for the equal-intercept piecewise model.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedDesign {
    /// Design matrix; column 0 is the intercept.
    pub x: Mat,
    /// Kernel weights per row.
    pub w: Vec<f64>,
    /// Responses (bin heights) per row.
    pub y: Vec<f64>,
    /// Bin widths per row (for the plug-in response variance).
    pub widths: Vec<f64>,
    /// Edge owning each slope column, parallel to columns `1..`.
    pub slope_edges: Vec<EdgeId>,
    /// Flat bin index behind each row, parallel to the rows.
    pub rows_from: Vec<usize>,
}

/// Builds the equal-intercept design over a direct-access neighborhood.
///
/// The evaluation point's edge owns the first slope column; the other
/// edges follow in ascending id order.
pub fn build_constrained_design(
    x: &NetworkPoint,
    data: &[NeighborhoodDatum],
    bins: &BinPoints,
    h: f64,
    k: Kernel,
) -> Result<ConstrainedDesign, PiecewiseError> {
    if data.is_empty() {
        return Err(PiecewiseError::EmptyNeighborhood);
    }
    let mut slope_edges: Vec<EdgeId> = Vec::new();
    for d in data {
        for e in &d.edges_traversed {
            if !slope_edges.contains(e) {
                slope_edges.push(*e);
            }
        }
    }
    slope_edges.sort_unstable();
    if let Some(pos) = slope_edges.iter().position(|&e| e == x.edge) {
        slope_edges.remove(pos);
        slope_edges.insert(0, x.edge);
    }

    let cols = 1 + slope_edges.len();
    let mut xrows: Vec<Vec<f64>> = Vec::with_capacity(data.len());
    let mut w = Vec::with_capacity(data.len());
    let mut y = Vec::with_capacity(data.len());
    let mut widths = Vec::with_capacity(data.len());
    let mut rows_from = Vec::with_capacity(data.len());
    for d in data {
        let u = d.signed_offset.value;
        let sgn = if u < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; cols];
        row[0] = 1.0;
        // Signed boundaries of the legs: 0, ±s₁, …, ±s_k, u.
        let mut prev = 0.0;
        for (leg, e) in d.edges_traversed.iter().enumerate() {
            let next = if leg < d.crossing_offsets.len() {
                sgn * d.crossing_offsets[leg]
            } else {
                u
            };
            let col = 1 + slope_edges.iter().position(|s| s == e).expect("column exists");
            row[col] += next - prev;
            prev = next;
        }
        xrows.push(row);
        w.push(k.eval(u / h) / h);
        y.push(bins.heights[d.index]);
        widths.push(bins.widths[d.index]);
        rows_from.push(d.index);
    }
    if xrows.len() < cols {
        return Err(PiecewiseError::Underdetermined { rows: xrows.len(), cols });
    }
    Ok(ConstrainedDesign {
        x: Mat::from_rows(&xrows),
        w,
        y,
        widths,
        slope_edges,
        rows_from,
    })
}

/// A solved constrained (or equal-slope) fit.
#[derive(Debug, Clone)]
pub struct ConstrainedFit {
    /// Density estimate at the evaluation point: `β̂₀`.
    pub value: f64,
    /// Sandwich variance of the estimate.
    pub variance: f64,
    /// Full coefficient vector (intercept, then slopes).
    pub beta: Vec<f64>,
    /// Sandwich covariance of `beta`.
    pub covariance: Mat,
    /// Edge owning each slope coefficient (empty for the collapsed
    /// equal-slope fit, whose single slope spans all edges).
    pub slope_edges: Vec<EdgeId>,
}

/// Solves a constrained design by weighted least squares with plug-in
/// sandwich covariance.
pub fn constrained_estimate(
    design: &ConstrainedDesign,
    n_total: u64,
) -> Result<ConstrainedFit, PiecewiseError> {
    let fit = wls(&design.x, &design.w, &design.y)?;
    let v: Vec<f64> = (0..design.x.rows())
        .map(|i| {
            let mut m = 0.0;
            for j in 0..design.x.cols() {
                m += fit.beta[j] * design.x[(i, j)];
            }
            plugin_variance(m, n_total, design.widths[i])
        })
        .collect();
    let covariance = sandwich_covariance(&fit.xtwx_inv, &design.x, &design.w, &v);
    Ok(ConstrainedFit {
        value: fit.beta[0],
        variance: covariance[(0, 0)],
        beta: fit.beta,
        covariance,
        slope_edges: design.slope_edges.clone(),
    })
}

/// Equal-intercept, equal-slope fit: local linear in the signed path
/// coordinate.
pub fn equal_slope_estimate(
    data: &[NeighborhoodDatum],
    bins: &BinPoints,
    h: f64,
    k: Kernel,
    n_total: u64,
) -> Result<ConstrainedFit, PiecewiseError> {
    if data.is_empty() {
        return Err(PiecewiseError::EmptyNeighborhood);
    }
    let mut xrows = Vec::with_capacity(data.len());
    let mut w = Vec::with_capacity(data.len());
    let mut y = Vec::with_capacity(data.len());
    let mut widths = Vec::with_capacity(data.len());
    for d in data {
        let u = d.signed_offset.value;
        xrows.push(vec![1.0, u]);
        w.push(k.eval(u / h) / h);
        y.push(bins.heights[d.index]);
        widths.push(bins.widths[d.index]);
    }
    if xrows.len() < 2 {
        return Err(PiecewiseError::Underdetermined { rows: xrows.len(), cols: 2 });
    }
    let x = Mat::from_rows(&xrows);
    let fit = wls(&x, &w, &y)?;
    let v: Vec<f64> = xrows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let m = fit.beta[0] + fit.beta[1] * row[1];
            plugin_variance(m, n_total, widths[i])
        })
        .collect();
    let covariance = sandwich_covariance(&fit.xtwx_inv, &x, &w, &v);
    Ok(ConstrainedFit {
        value: fit.beta[0],
        variance: covariance[(0, 0)],
        beta: fit.beta,
        covariance,
        slope_edges: Vec::new(),
    })
}

/// Leading-order behavior of the constrained estimator near a vertex.
#[derive(Debug, Clone)]
pub struct AsymptoticDiagnostics {
    /// Moment matrix of the constrained design.
    pub u0: Mat,
    /// First-order correction matrix.
    pub u1: Mat,
    /// Curvature load vector (h² term).
    pub r0: Vec<f64>,
    /// Curvature load vector (h·(v−x) term).
    pub r1: Vec<f64>,
    /// Squared-kernel moment matrix.
    pub m0: Mat,
    /// First-order squared-kernel correction.
    pub m1: Mat,
    /// Leading bias of the estimate.
    pub bias_leading: f64,
    /// Leading variance of the estimate.
    pub variance_leading: f64,
    /// Edge slots that carried kernel mass and entered the system (slot 0
    /// is the evaluation edge).
    pub active_slots: Vec<usize>,
}

/// Assembles the near-vertex moment system and returns leading bias and
/// variance.
///
/// The evaluation point sits on slot-0's edge at distance `c·h` from the
/// vertex, which joins `curvatures.len()` edges; `curvatures[j]` is the
/// second derivative of the density on edge slot `j`. Slots other than 0
/// whose kernel mass vanishes (by `c = 1` the window no longer reaches
/// past the vertex) are dropped before inversion.
pub fn asymptotic_diagnostics(
    c: f64,
    h: f64,
    omega: f64,
    n_total: u64,
    m_hat: f64,
    curvatures: &[f64],
    k: Kernel,
) -> Result<AsymptoticDiagnostics, PiecewiseError> {
    assert!((0.0..=1.0).contains(&c), "boundary fraction in [0,1]");
    assert!(!curvatures.is_empty());

    // Keep slot 0 always; drop other slots without kernel mass.
    let mass = |j: usize| {
        if j == 0 {
            partial_moment(k, -1.0, c, 0)
        } else {
            partial_moment(k, c, 1.0, 0)
        }
    };
    let active_slots: Vec<usize> =
        (0..curvatures.len()).filter(|&j| j == 0 || mass(j) > 1e-14).collect();
    let j_act = active_slots.len();
    let dim = j_act + 1;

    // Per-slot truncated moments: slot 0 integrates over (−1, c), the
    // others over (c, 1).
    let mu = |slot: usize, p: u32| {
        if active_slots[slot] == 0 {
            partial_moment(k, -1.0, c, p)
        } else {
            partial_moment(k, c, 1.0, p)
        }
    };
    let rr = |slot: usize, p: u32| {
        if active_slots[slot] == 0 {
            partial_square_moment(k, -1.0, c, p)
        } else {
            partial_square_moment(k, c, 1.0, p)
        }
    };
    let m2 = |slot: usize| curvatures[active_slots[slot]];

    let mut u0 = Mat::zeros(dim, dim);
    let mut u1 = Mat::zeros(dim, dim);
    let mut m0 = Mat::zeros(dim, dim);
    let mut m1 = Mat::zeros(dim, dim);
    let mut r0 = vec![0.0; dim];
    let mut r1 = vec![0.0; dim];

    let sum_mu0: f64 = (0..j_act).map(|s| mu(s, 0)).sum();
    let sum_mu0_not_l: f64 = (1..j_act).map(|s| mu(s, 0)).sum();
    let sum_r0: f64 = (0..j_act).map(|s| rr(s, 0)).sum();

    u0[(0, 0)] = sum_mu0;
    m0[(0, 0)] = sum_r0;
    for s in 0..j_act {
        let col = s + 1;
        u0[(0, col)] = mu(s, 1);
        u0[(col, 0)] = mu(s, 1);
        u0[(col, col)] = mu(s, 2);
        m0[(0, col)] = rr(s, 1);
        m0[(col, 0)] = rr(s, 1);
        m0[(col, col)] = rr(s, 2);
    }

    // First-order corrections: slot 0 is the evaluation edge's slot.
    u1[(0, 1)] = sum_mu0_not_l;
    u1[(1, 0)] = sum_mu0_not_l;
    m1[(0, 1)] = sum_r0;
    m1[(1, 0)] = sum_r0;
    for s in 1..j_act {
        let col = s + 1;
        u1[(0, col)] = -mu(s, 0);
        u1[(col, 0)] = -mu(s, 0);
        u1[(1, col)] = mu(s, 1);
        u1[(col, 1)] = mu(s, 1);
        u1[(col, col)] = -2.0 * mu(s, 1);
        m1[(0, col)] = -rr(s, 0);
        m1[(col, 0)] = -rr(s, 0);
        m1[(1, col)] = rr(s, 1);
        m1[(col, 1)] = rr(s, 1);
        m1[(col, col)] = -rr(s, 1);
    }

    r0[0] = (0..j_act).map(|s| m2(s) * mu(s, 2)).sum();
    for s in 0..j_act {
        r0[s + 1] = m2(s) * mu(s, 3);
    }
    r1[0] = -2.0 * (1..j_act).map(|s| m2(s) * mu(s, 1)).sum::<f64>();
    r1[1] = (1..j_act).map(|s| m2(s) * mu(s, 2)).sum();
    for s in 1..j_act {
        r1[s + 1] = -3.0 * m2(s) * mu(s, 2);
    }

    // z = U₀⁻¹e₁ and y = U₀⁻¹R₀ via SPD solves.
    let mut e1 = vec![0.0; dim];
    e1[0] = 1.0;
    let z = solve_spd(&u0, &e1).ok_or(PiecewiseError::Singular { cond: f64::INFINITY })?;
    let yv = solve_spd(&u0, &r0).ok_or(PiecewiseError::Singular { cond: f64::INFINITY })?;

    let vx = c * h;
    // bias = ½ e₁ᵀU₀⁻¹ { h²R₀ + h(v−x)(R₁ − U₁U₀⁻¹R₀) }
    let u1y = u1.matvec(&yv);
    let mut bias = 0.0;
    for i in 0..dim {
        bias += z[i] * (h * h * r0[i] + h * vx * (r1[i] - u1y[i]));
    }
    bias *= 0.5;

    // var = C/(Nh) · e₁ᵀU₀⁻¹ [M₀ + (vx/h)(M₀U₀⁻¹U₁ + M₁ − U₁U₀⁻¹M₀)] U₀⁻¹e₁
    let m0z = m0.matvec(&z);
    let u1z = u1.matvec(&z);
    let w1 = solve_spd(&u0, &u1z).ok_or(PiecewiseError::Singular { cond: f64::INFINITY })?;
    let m0w1 = m0.matvec(&w1);
    let m1z = m1.matvec(&z);
    let w2 = solve_spd(&u0, &m0z).ok_or(PiecewiseError::Singular { cond: f64::INFINITY })?;
    let u1w2 = u1.matvec(&w2);
    let mut quad = 0.0;
    for i in 0..dim {
        quad += z[i] * (m0z[i] + c * (m0w1[i] + m1z[i] - u1w2[i]));
    }
    let n = n_total as f64;
    let c_const = (m_hat - omega * m_hat * m_hat) / (n * h);
    let variance = c_const * quad;

    Ok(AsymptoticDiagnostics {
        u0,
        u1,
        r0,
        r1,
        m0,
        m1,
        bias_leading: bias,
        variance_leading: variance,
        active_slots,
    })
}

/// Plug-in curvature inputs for [`asymptotic_diagnostics`]: `m̂⁽²⁾` per
/// incident edge from degree-2 fits at the vertex, evaluation edge first
/// and the rest in ascending id order.
pub fn plugin_curvatures(
    net: &LinearNetwork,
    binned: &BinnedNetwork,
    vertex: VertexId,
    eval_edge: EdgeId,
    h: f64,
    k: Kernel,
) -> Result<Vec<(EdgeId, f64)>, PiecewiseError> {
    let mut incidences = net.incident(vertex).unwrap_or_default();
    incidences.sort_by_key(|i| (i.edge != eval_edge, i.edge));
    let mut out = Vec::with_capacity(incidences.len());
    for inc in incidences {
        let bins = binned.edge(inc.edge).expect("edge is binned");
        let length = bins.actual_width * bins.centers.len() as f64;
        let fit = fit_local_poly(bins, binned.total, inc.end.offset(length), h, 2, k)?;
        out.push((inc.edge, fit.derivative(2).expect("degree 2")));
    }
    Ok(out)
}

/// One evaluated profile point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEstimate {
    /// Density estimate.
    pub density: f64,
    /// Variance of the estimate.
    pub variance: f64,
    /// Which estimator was used.
    pub regime: Regime,
}

/// Estimates the density at one point, choosing the regime from the
/// window's vertex crossings and the pretest outcomes.
pub fn profile_point(
    net: &LinearNetwork,
    binned: &BinnedNetwork,
    bins: &BinPoints,
    x: &NetworkPoint,
    h: f64,
    k: Kernel,
    outcomes: &BTreeMap<VertexId, VertexOutcome>,
) -> Result<PointEstimate, PiecewiseError> {
    let nb = h_neighborhood(net, x, h, &bins.points)?;
    let any_crossing = nb.data.iter().any(|d| !d.vertices_crossed.is_empty());
    if !any_crossing {
        return edge_restricted(binned, x, h, k, Regime::Interior);
    }
    let kept = filter_by_groups(&nb.data, outcomes);
    let kept_crossing = kept.iter().any(|d| !d.vertices_crossed.is_empty());
    if !kept_crossing {
        return edge_restricted(binned, x, h, k, Regime::EdgeRestricted);
    }
    let all_smooth = kept
        .iter()
        .flat_map(|d| d.vertices_crossed.iter())
        .all(|v| outcomes.get(v).map(|o| o.slopes_equal).unwrap_or(false));
    if all_smooth {
        let fit = equal_slope_estimate(&kept, bins, h, k, binned.total)?;
        return Ok(PointEstimate {
            density: fit.value,
            variance: fit.variance,
            regime: Regime::ConstrainedEqualSlope,
        });
    }
    let design = build_constrained_design(x, &kept, bins, h, k)?;
    let fit = constrained_estimate(&design, binned.total)?;
    Ok(PointEstimate { density: fit.value, variance: fit.variance, regime: Regime::Constrained })
}

fn edge_restricted(
    binned: &BinnedNetwork,
    x: &NetworkPoint,
    h: f64,
    k: Kernel,
    regime: Regime,
) -> Result<PointEstimate, PiecewiseError> {
    let bins = binned.edge(x.edge).ok_or(NetworkError::UnknownEdge(x.edge))?;
    let fit = fit_local_poly(bins, binned.total, x.offset, h, 1, k)?;
    Ok(PointEstimate { density: fit.m_hat(), variance: fit.variance(), regime })
}

/// One row of a sampled density profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    /// Edge being profiled.
    pub edge: EdgeId,
    /// Offset of the evaluation point on that edge.
    pub offset: f64,
    /// Density estimate.
    pub density: f64,
    /// Standard error (square root of the sandwich variance).
    pub stderr: f64,
    /// Estimator used at this point.
    pub regime: Regime,
}

/// Evaluation grid along every edge: per-edge step defaulting to
/// `min(h/4, length/20)`, both endpoints always included.
///
/// Comparison estimators evaluated on this same grid line up row for row
/// with [`density_profile`] output.
pub fn profile_grid(net: &LinearNetwork, h: f64, step: Option<f64>) -> Vec<NetworkPoint> {
    let mut grid = Vec::new();
    for e in net.edges() {
        let target = step.unwrap_or_else(|| (h / 4.0).min(e.length / 20.0));
        let n = libm::round(e.length / target).max(1.0) as usize;
        let actual = e.length / n as f64;
        for i in 0..=n {
            let offset = if i == n { e.length } else { i as f64 * actual };
            grid.push(NetworkPoint { edge: e.id, offset });
        }
    }
    grid
}

/// Samples the fitted density along every edge.
///
/// The grid step defaults to `min(h/4, length/20)` per edge and always
/// includes both endpoints.
pub fn density_profile(
    net: &LinearNetwork,
    binned: &BinnedNetwork,
    h: f64,
    k: Kernel,
    outcomes: &BTreeMap<VertexId, VertexOutcome>,
    step: Option<f64>,
) -> Result<Vec<ProfileRow>, PiecewiseError> {
    let bins = collect_bin_points(binned);
    let mut rows = Vec::new();
    for x in profile_grid(net, h, step) {
        let est = profile_point(net, binned, &bins, &x, h, k, outcomes)?;
        rows.push(ProfileRow {
            edge: x.edge,
            offset: x.offset,
            density: est.density,
            stderr: libm::sqrt(est.variance.max(0.0)),
            regime: est.regime,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binning::{bin_events, BinConfig};
    use crate::network::{build_network, Edge, Vertex};
    use alloc::collections::BTreeSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EXACT_EPS: f64 = 1e-10;

    fn v(id: u64) -> Vertex {
        Vertex { id: VertexId(id), coords: vec![id as f64, 0.0] }
    }

    fn e(id: u64, a: u64, b: u64, len: f64) -> Edge {
        Edge { id: EdgeId(id), u: VertexId(a), v: VertexId(b), length: len, polyline: None }
    }

    fn p(edge: u64, offset: f64) -> NetworkPoint {
        NetworkPoint { edge: EdgeId(edge), offset }
    }

    // Hub at vertex 0; edge 1 runs leaf→hub, edges 2 and 3 hub→leaf.
    fn star() -> LinearNetwork {
        build_network(
            vec![v(0), v(1), v(2), v(3)],
            vec![e(1, 1, 0, 1.0), e(2, 0, 2, 1.0), e(3, 0, 3, 1.0)],
        )
        .unwrap()
    }

    // Path network 1 -(e1)- 0 -(e2)- 2 -(e3)- 3 for chained crossings.
    fn chain() -> LinearNetwork {
        build_network(
            vec![v(0), v(1), v(2), v(3)],
            vec![e(1, 1, 0, 1.0), e(2, 0, 2, 0.4), e(3, 2, 3, 1.0)],
        )
        .unwrap()
    }

    fn all_accepted(net: &LinearNetwork, smooth: bool) -> BTreeMap<VertexId, VertexOutcome> {
        net.vertices()
            .iter()
            .filter(|vx| net.degree(vx.id).unwrap_or(0) >= 2)
            .map(|vx| {
                let group: BTreeSet<EdgeId> = net
                    .incident(vx.id)
                    .unwrap()
                    .iter()
                    .map(|i| i.edge)
                    .collect();
                (vx.id, VertexOutcome { group, slopes_equal: smooth })
            })
            .collect()
    }

    // Histogram whose heights realize f exactly (f reads edge id, offset).
    fn synthetic_bins(
        net: &LinearNetwork,
        width: f64,
        f: impl Fn(u64, f64) -> f64,
    ) -> BinnedNetwork {
        let seed = vec![p(net.edges()[0].id.0, net.edges()[0].length / 2.0)];
        let mut binned = bin_events(net, &seed, BinConfig::new(width).unwrap()).unwrap();
        for be in &mut binned.edges {
            let id = be.edge.0;
            for (h, &c) in be.heights.iter_mut().zip(be.centers.iter()) {
                *h = f(id, c);
            }
        }
        binned.total = 3000;
        binned
    }

    #[test]
    fn design_rows_chain_taylor_legs() {
        let net = star();
        let bins = collect_bin_points(&synthetic_bins(&net, 0.1, |_, _| 1.0));
        // x on e1 at 0.3 before the hub (hub at offset 1).
        let x = p(1, 0.7);
        let nb = h_neighborhood(&net, &x, 0.6, &bins.points).unwrap();
        let design = build_constrained_design(&x, &nb.data, &bins, 0.6, Kernel::Epanechnikov)
            .unwrap();
        assert_eq!(design.slope_edges[0], EdgeId(1));
        assert_eq!(design.slope_edges.len(), 3);
        // Find the row of the bin on e2 at center 0.25: path x→hub→datum,
        // legs (v−x)=0.3 on e1 and (x₂−v)=0.25 on e2.
        let target = bins
            .points
            .iter()
            .position(|q| q.edge == EdgeId(2) && (q.offset - 0.25).abs() < 1e-12)
            .unwrap();
        let row = design.rows_from.iter().position(|&r| r == target).unwrap();
        assert!((design.x[(row, 0)] - 1.0).abs() < 1e-15);
        assert!((design.x[(row, 1)] - 0.3).abs() < 1e-12);
        assert!((design.x[(row, 2)] - 0.25).abs() < 1e-12);
        assert_eq!(design.x[(row, 3)], 0.0);
        // A same-edge bin behind x gets a negative e1 coefficient only.
        let behind = bins
            .points
            .iter()
            .position(|q| q.edge == EdgeId(1) && (q.offset - 0.45).abs() < 1e-12)
            .unwrap();
        let brow = design.rows_from.iter().position(|&r| r == behind).unwrap();
        assert!((design.x[(brow, 1)] + 0.25).abs() < 1e-12);
        assert_eq!(design.x[(brow, 2)], 0.0);
    }

    #[test]
    fn chained_rows_span_three_edges() {
        let net = chain();
        let bins = collect_bin_points(&synthetic_bins(&net, 0.05, |_, _| 1.0));
        let x = p(1, 0.8);
        let nb = h_neighborhood(&net, &x, 0.9, &bins.points).unwrap();
        let design = build_constrained_design(&x, &nb.data, &bins, 0.9, Kernel::Epanechnikov)
            .unwrap();
        // Datum on e3 at 0.125: legs 0.2 (e1) + 0.4 (e2) + 0.125 (e3).
        let target = bins
            .points
            .iter()
            .position(|q| q.edge == EdgeId(3) && (q.offset - 0.125).abs() < 1e-12)
            .unwrap();
        let row = design.rows_from.iter().position(|&r| r == target).unwrap();
        let c1 = 1 + design.slope_edges.iter().position(|&e| e == EdgeId(1)).unwrap();
        let c2 = 1 + design.slope_edges.iter().position(|&e| e == EdgeId(2)).unwrap();
        let c3 = 1 + design.slope_edges.iter().position(|&e| e == EdgeId(3)).unwrap();
        assert!((design.x[(row, c1)] - 0.2).abs() < 1e-12);
        assert!((design.x[(row, c2)] - 0.4).abs() < 1e-12);
        assert!((design.x[(row, c3)] - 0.125).abs() < 1e-12);
    }

    #[test]
    fn piecewise_linear_truth_is_recovered_exactly() {
        let net = star();
        // Common hub value 2.0; slopes −0.7, +0.3, −0.2 away from the hub.
        let truth = |edge: u64, c: f64| match edge {
            1 => 2.0 - 0.7 * (1.0 - c),
            2 => 2.0 + 0.3 * c,
            _ => 2.0 - 0.2 * c,
        };
        let binned = synthetic_bins(&net, 0.05, truth);
        let bins = collect_bin_points(&binned);
        let outcomes = all_accepted(&net, false);
        for &(edge, off) in
            &[(1u64, 0.85f64), (1, 1.0), (2, 0.1), (2, 0.0), (3, 0.02)]
        {
            let x = p(edge, off);
            let est =
                profile_point(&net, &binned, &bins, &x, 0.5, Kernel::Epanechnikov, &outcomes)
                    .unwrap();
            assert!(
                (est.density - truth(edge, off)).abs() < EXACT_EPS,
                "at {edge}:{off} got {} want {}",
                est.density,
                truth(edge, off)
            );
            assert_eq!(est.regime, Regime::Constrained);
        }
    }

    #[test]
    fn equal_slope_truth_is_recovered_exactly() {
        let net = star();
        // One line in signed distance through the hub on every route.
        let truth = |edge: u64, c: f64| match edge {
            1 => 1.5 + 0.4 * c,
            _ => 1.9 + 0.4 * c,
        };
        let binned = synthetic_bins(&net, 0.05, truth);
        let bins = collect_bin_points(&binned);
        let outcomes = all_accepted(&net, true);
        let est = profile_point(
            &net,
            &binned,
            &bins,
            &p(1, 0.9),
            0.4,
            Kernel::Epanechnikov,
            &outcomes,
        )
        .unwrap();
        assert_eq!(est.regime, Regime::ConstrainedEqualSlope);
        assert!((est.density - (1.5 + 0.4 * 0.9)).abs() < EXACT_EPS);
    }

    #[test]
    fn interior_points_reduce_to_single_edge_fit() {
        let net = star();
        let binned = synthetic_bins(&net, 0.02, |_, c| 1.0 + 0.5 * c);
        let bins = collect_bin_points(&binned);
        let outcomes = all_accepted(&net, false);
        let x = p(2, 0.5);
        let est = profile_point(&net, &binned, &bins, &x, 0.2, Kernel::Epanechnikov, &outcomes)
            .unwrap();
        assert_eq!(est.regime, Regime::Interior);
        let lone = fit_local_poly(
            binned.edge(EdgeId(2)).unwrap(),
            binned.total,
            0.5,
            0.2,
            1,
            Kernel::Epanechnikov,
        )
        .unwrap();
        assert!((est.density - lone.m_hat()).abs() < 1e-12);
        assert!((est.variance - lone.variance()).abs() < 1e-12);
    }

    #[test]
    fn rejected_vertices_restrict_to_the_edge() {
        let net = star();
        let binned = synthetic_bins(&net, 0.05, |edge, c| if edge == 1 { 2.0 * c } else { 0.3 });
        let bins = collect_bin_points(&binned);
        let mut outcomes = BTreeMap::new();
        outcomes
            .insert(VertexId(0), VertexOutcome { group: BTreeSet::new(), slopes_equal: false });
        let x = p(1, 0.9);
        let est = profile_point(&net, &binned, &bins, &x, 0.4, Kernel::Epanechnikov, &outcomes)
            .unwrap();
        assert_eq!(est.regime, Regime::EdgeRestricted);
        // One-sided fit on linear heights stays exact.
        assert!((est.density - 1.8).abs() < EXACT_EPS);
    }

    #[test]
    fn partial_groups_keep_only_their_edges() {
        let net = star();
        let binned = synthetic_bins(&net, 0.05, |edge, c| match edge {
            1 => 1.0 + 0.2 * c,
            2 => 1.2 - 0.2 * c,
            _ => 9.0,
        });
        let bins = collect_bin_points(&binned);
        // Hub group {e1, e2}: e3's data must not reach the design.
        let group: BTreeSet<EdgeId> = [EdgeId(1), EdgeId(2)].into_iter().collect();
        let mut outcomes = BTreeMap::new();
        outcomes.insert(VertexId(0), VertexOutcome { group, slopes_equal: false });
        let x = p(1, 0.9);
        let nb = h_neighborhood(&net, &x, 0.4, &bins.points).unwrap();
        let kept = filter_by_groups(&nb.data, &outcomes);
        assert!(kept.iter().all(|d| d.terminal_edge != EdgeId(3)));
        let est = profile_point(&net, &binned, &bins, &x, 0.4, Kernel::Epanechnikov, &outcomes)
            .unwrap();
        assert_eq!(est.regime, Regime::Constrained);
        assert!((est.density - (1.0 + 0.2 * 0.9)).abs() < EXACT_EPS);
    }

    #[test]
    fn excluded_data_cannot_influence_the_estimate() {
        // With the far vertex rejected, bins beyond it are filtered out,
        // so changing their heights must not move the estimate at all.
        let net = chain();
        let shape = |edge: u64, c: f64| match edge {
            1 => 1.0 + 0.3 * c,
            2 => 1.3 + 0.1 * c,
            _ => 0.7,
        };
        let binned_a = synthetic_bins(&net, 0.05, shape);
        let binned_b = synthetic_bins(&net, 0.05, |edge, c| {
            if edge == 3 {
                5.0 + c
            } else {
                shape(edge, c)
            }
        });
        let mut outcomes = BTreeMap::new();
        outcomes.insert(
            VertexId(0),
            VertexOutcome {
                group: [EdgeId(1), EdgeId(2)].into_iter().collect(),
                slopes_equal: false,
            },
        );
        outcomes
            .insert(VertexId(2), VertexOutcome { group: BTreeSet::new(), slopes_equal: false });
        let x = p(1, 0.8);
        let bins_a = collect_bin_points(&binned_a);
        let bins_b = collect_bin_points(&binned_b);
        let ea = profile_point(&net, &binned_a, &bins_a, &x, 0.9, Kernel::Epanechnikov, &outcomes)
            .unwrap();
        let eb = profile_point(&net, &binned_b, &bins_b, &x, 0.9, Kernel::Epanechnikov, &outcomes)
            .unwrap();
        assert_eq!(ea.density.to_bits(), eb.density.to_bits());
        assert_eq!(ea.variance.to_bits(), eb.variance.to_bits());
    }

    #[test]
    fn both_sides_of_an_accepted_vertex_agree_at_the_vertex() {
        let net = star();
        let binned = synthetic_bins(&net, 0.05, |edge, c| match edge {
            1 => 1.0 + 0.6 * c * c,
            2 => 1.6 - 0.5 * c,
            _ => 1.6 - 0.1 * c,
        });
        let bins = collect_bin_points(&binned);
        let outcomes = all_accepted(&net, false);
        // The same network point expressed from either incident edge.
        let from_e1 =
            profile_point(&net, &binned, &bins, &p(1, 1.0), 0.4, Kernel::Epanechnikov, &outcomes)
                .unwrap();
        let from_e2 =
            profile_point(&net, &binned, &bins, &p(2, 0.0), 0.4, Kernel::Epanechnikov, &outcomes)
                .unwrap();
        assert!((from_e1.density - from_e2.density).abs() < 1e-9);
    }

    #[test]
    fn single_edge_constrained_fit_reduces_to_local_linear() {
        let net = build_network(vec![v(0), v(1)], vec![e(1, 0, 1, 2.0)]).unwrap();
        let binned = synthetic_bins(&net, 0.05, |_, c| 0.8 + 0.1 * libm::sin(3.0 * c));
        let bins = collect_bin_points(&binned);
        let x = p(1, 1.0);
        let nb = h_neighborhood(&net, &x, 0.3, &bins.points).unwrap();
        let design =
            build_constrained_design(&x, &nb.data, &bins, 0.3, Kernel::Epanechnikov).unwrap();
        let fit = constrained_estimate(&design, binned.total).unwrap();
        let lone = fit_local_poly(
            binned.edge(EdgeId(1)).unwrap(),
            binned.total,
            1.0,
            0.3,
            1,
            Kernel::Epanechnikov,
        )
        .unwrap();
        assert!((fit.value - lone.m_hat()).abs() < 1e-12);
        assert!((fit.variance - lone.variance()).abs() < 1e-12);
    }

    // Independent Gauss-Jordan WLS solve used as the brute-force oracle.
    fn gj_first_coord(x: &Mat, w: &[f64], y: &[f64]) -> f64 {
        let q = x.cols();
        let mut a = vec![vec![0.0; q + 1]; q];
        for r in 0..q {
            for c in 0..q {
                let mut s = 0.0;
                for i in 0..x.rows() {
                    s += w[i] * x[(i, r)] * x[(i, c)];
                }
                a[r][c] = s;
            }
            let mut s = 0.0;
            for i in 0..x.rows() {
                s += w[i] * x[(i, r)] * y[i];
            }
            a[r][q] = s;
        }
        for col in 0..q {
            let piv = (col..q)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, piv);
            let d = a[col][col];
            for c in col..=q {
                a[col][c] /= d;
            }
            for r in 0..q {
                if r != col {
                    let f = a[r][col];
                    for c in col..=q {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        a[0][q]
    }

    #[test]
    fn constrained_solve_matches_brute_force_oracle() {
        let net = star();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..60 {
            let binned = synthetic_bins(&net, 0.12, |edge, c| {
                let base = 0.5 + 0.3 * edge as f64;
                base + libm::sin(c * (3.0 + trial as f64 % 5.0)) * 0.2
            });
            let bins = collect_bin_points(&binned);
            let off = rng.gen_range(0.55..0.99);
            let x = p(1, off);
            let h = rng.gen_range(0.45..0.8);
            let nb = h_neighborhood(&net, &x, h, &bins.points).unwrap();
            let design =
                build_constrained_design(&x, &nb.data, &bins, h, Kernel::Epanechnikov).unwrap();
            assert!(design.x.rows() <= 30, "oracle regime is small systems");
            let fit = constrained_estimate(&design, binned.total).unwrap();
            let oracle = gj_first_coord(&design.x, &design.w, &design.y);
            assert!((fit.value - oracle).abs() < 1e-10, "trial {trial}");
        }
    }

    #[test]
    fn underdetermined_design_asks_for_larger_h() {
        let net = star();
        let binned = synthetic_bins(&net, 0.3, |_, _| 1.0);
        let bins = collect_bin_points(&binned);
        let x = p(1, 0.95);
        // Window reaches all three edges but covers only three bins,
        // fewer than the four coefficients.
        let nb = h_neighborhood(&net, &x, 0.3, &bins.points).unwrap();
        let err = build_constrained_design(&x, &nb.data, &bins, 0.3, Kernel::Epanechnikov)
            .unwrap_err();
        assert!(matches!(err, PiecewiseError::Underdetermined { .. }));
    }

    #[test]
    fn vertex_moment_system_case_two_constants() {
        // Symmetric 3-edge star, evaluation at the vertex (c = 0), equal
        // curvatures 8. Exact arrow-matrix algebra gives
        // bias = −(44/95)h² and quadratic form e₁ᵀU₀⁻¹M₀U₀⁻¹e₁ = 18944/12635,
        // one third of the one-sided single-edge factor 56832/12635: pooling
        // three symmetric half-windows behind a shared intercept divides the
        // sandwich factor by the number of edges.
        let h = 0.37;
        let d = asymptotic_diagnostics(0.0, h, 0.01, 10_000, 4.0 / 3.0, &[8.0, 8.0, 8.0], Kernel::Epanechnikov)
            .unwrap();
        let bias_expect = -(44.0 / 95.0) * h * h;
        assert!(
            (d.bias_leading - bias_expect).abs() < 1e-8,
            "bias {} want {bias_expect}",
            d.bias_leading
        );
        let m_hat = 4.0 / 3.0;
        let c_const = (m_hat - 0.01 * m_hat * m_hat) / (10_000.0 * h);
        let quad = d.variance_leading / c_const;
        assert!((quad - 18944.0 / 12635.0).abs() < 1e-12, "quad {quad}");
        // U₀ entries follow the one-sided Epanechnikov moments.
        assert!((d.u0[(0, 0)] - 1.5).abs() < 1e-12);
        assert!((d.u0[(1, 1)] - 0.1).abs() < 1e-12);
        assert!((d.u0[(0, 1)] + 3.0 / 16.0).abs() < 1e-12);
        assert!((d.u0[(0, 2)] - 3.0 / 16.0).abs() < 1e-12);
    }

    #[test]
    fn vertex_moment_system_drops_massless_edges() {
        // c = 1: the window no longer reaches past the vertex, other
        // slots carry no mass, and the system reduces to the interior
        // single-edge law with bias ½h²μ₂m⁽²⁾.
        let h = 0.3;
        let d = asymptotic_diagnostics(1.0, h, 0.01, 1000, 1.0, &[6.0, 6.0, 6.0], Kernel::Epanechnikov)
            .unwrap();
        assert_eq!(d.active_slots, vec![0]);
        let expect = 0.5 * h * h * 0.2 * 6.0;
        assert!((d.bias_leading - expect).abs() < 1e-9, "bias {}", d.bias_leading);
    }

    #[test]
    fn zero_curvature_means_zero_leading_bias() {
        let d = asymptotic_diagnostics(0.3, 0.4, 0.01, 1000, 1.0, &[0.0, 0.0, 0.0], Kernel::Epanechnikov)
            .unwrap();
        assert!(d.bias_leading.abs() < 1e-12);
        assert!(d.variance_leading > 0.0);
    }

    #[test]
    fn profile_covers_every_edge_with_regimes() {
        let net = star();
        let binned = synthetic_bins(&net, 0.05, |edge, c| match edge {
            1 => 1.0 + 0.2 * c,
            _ => 1.2 - 0.2 * c,
        });
        let outcomes = all_accepted(&net, false);
        let rows =
            density_profile(&net, &binned, 0.3, Kernel::Epanechnikov, &outcomes, None).unwrap();
        for id in [1u64, 2, 3] {
            assert!(rows.iter().any(|r| r.edge == EdgeId(id)));
        }
        // Grid step h/4 = 0.075 < 1/20? No: min(0.075, 0.05) = 0.05 → 21
        // points per edge including both endpoints.
        assert_eq!(rows.len(), 3 * 21);
        let near_hub = rows
            .iter()
            .find(|r| r.edge == EdgeId(1) && (r.offset - 1.0).abs() < 1e-12)
            .unwrap();
        assert_eq!(near_hub.regime, Regime::Constrained);
        let far = rows
            .iter()
            .find(|r| r.edge == EdgeId(2) && (r.offset - 0.5).abs() < 1e-12)
            .unwrap();
        assert_eq!(far.regime, Regime::Interior);
        assert!(rows.iter().all(|r| r.stderr >= 0.0));
    }
}
