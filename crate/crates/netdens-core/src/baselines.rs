//! Comparison estimators: naive kernel density, and the two equal-split
//! kernel estimators.
//!
//! The naive estimator places a kernel on the shortest-path distance to
//! each event and ignores the network's branching entirely, so its total
//! mass exceeds one wherever a window spans a vertex (the tail beyond the
//! vertex is counted once per outgoing edge).
//!
//! The equal-split estimators repair that by walking each kernel tail
//! through the network explicitly. At a vertex where `J` edges meet, the
//! discontinuous split sends the tail onward with weight `1/(J-1)` per
//! other edge; the continuous split sends `2/J` onward per other edge and
//! reflects `2/J - 1` back along the arriving edge, which makes the
//! estimate continuous across vertices. Both rules conserve mass exactly.
//! A degree-one vertex reflects the whole tail under either rule (for the
//! continuous rule this is the `J = 1` case of `2/J - 1`; for the
//! discontinuous rule it is an explicit boundary-reflection convention).
//!
//! Path weights are symmetric in the direction of travel, so the walk is
//! enumerated once from the evaluation point instead of once per event.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::kernels::Kernel;
use crate::network::{
    h_neighborhood, EdgeEnd, EdgeId, LinearNetwork, NetworkError, NetworkPoint, VertexId,
};

/// Maximum vertex crossings a single split path may make.
pub const SPLIT_DEPTH_CAP: usize = 64;

/// Paths whose accumulated weight falls below this are dropped; the mass
/// error this introduces is far below every tolerance in the crate.
pub const SPLIT_WEIGHT_FLOOR: f64 = 1e-12;

/// Failure of an equal-split evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum BaselineError {
    /// A split path crossed more than [`SPLIT_DEPTH_CAP`] vertices, which
    /// happens only when the bandwidth spans very many short edges.
    DepthCapExceeded {
        /// Vertex at which the cap was hit.
        vertex: VertexId,
    },
    /// An event or evaluation point was malformed.
    Network(NetworkError),
}

impl fmt::Display for BaselineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineError::DepthCapExceeded { vertex } => write!(
                f,
                "split recursion exceeded {SPLIT_DEPTH_CAP} vertex crossings at {vertex}; \
                 the bandwidth is too large for this network's edge lengths"
            ),
            BaselineError::Network(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BaselineError {}

impl From<NetworkError> for BaselineError {
    fn from(e: NetworkError) -> Self {
        BaselineError::Network(e)
    }
}

/// Naive kernel density estimate at `x`: the mean of `K_h` applied to the
/// shortest-path distance to every event. Does not conserve mass across
/// vertices.
pub fn naive_kde(
    net: &LinearNetwork,
    events: &[NetworkPoint],
    x: &NetworkPoint,
    h: f64,
    k: Kernel,
) -> Result<f64, NetworkError> {
    let nb = h_neighborhood(net, x, h, events)?;
    let total: f64 = nb
        .data
        .iter()
        .map(|d| k.eval(d.signed_offset.value / h) / h)
        .sum();
    Ok(total / events.len() as f64)
}

/// Equal-split discontinuous estimate at `x`.
pub fn esdk(
    net: &LinearNetwork,
    events: &[NetworkPoint],
    x: &NetworkPoint,
    h: f64,
    k: Kernel,
) -> Result<f64, BaselineError> {
    split_estimate(net, events, x, h, k, SplitRule::Discontinuous)
}

/// Equal-split continuous estimate at `x`.
pub fn esck(
    net: &LinearNetwork,
    events: &[NetworkPoint],
    x: &NetworkPoint,
    h: f64,
    k: Kernel,
) -> Result<f64, BaselineError> {
    split_estimate(net, events, x, h, k, SplitRule::Continuous)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SplitRule {
    Discontinuous,
    Continuous,
}

// Events grouped by edge, validated against the network.
fn group_events(
    net: &LinearNetwork,
    events: &[NetworkPoint],
) -> Result<BTreeMap<EdgeId, Vec<f64>>, NetworkError> {
    let mut by_edge: BTreeMap<EdgeId, Vec<f64>> = BTreeMap::new();
    for ev in events {
        let edge = net.edge(ev.edge).ok_or(NetworkError::UnknownEdge(ev.edge))?;
        if !ev.offset.is_finite() || !(0.0..=edge.length).contains(&ev.offset) {
            return Err(NetworkError::OffsetOutOfBounds {
                edge: ev.edge,
                offset: ev.offset,
                length: edge.length,
            });
        }
        by_edge.entry(ev.edge).or_default().push(ev.offset);
    }
    Ok(by_edge)
}

struct SplitWalk<'a> {
    net: &'a LinearNetwork,
    by_edge: &'a BTreeMap<EdgeId, Vec<f64>>,
    h: f64,
    k: Kernel,
    rule: SplitRule,
    acc: f64,
}

impl SplitWalk<'_> {
    // Kernel contribution of every event on `edge` for a pass that enters
    // at `end` with path distance `t0` already behind it.
    fn sweep_edge(&mut self, edge: EdgeId, end: EdgeEnd, t0: f64, weight: f64) {
        let Some(offsets) = self.by_edge.get(&edge) else {
            return;
        };
        let length = self.net.edge(edge).expect("validated edge").length;
        for &c in offsets {
            let along = match end {
                EdgeEnd::U => c,
                EdgeEnd::V => length - c,
            };
            let t = t0 + along;
            if t < self.h {
                self.acc += weight * self.k.eval(t / self.h) / self.h;
            }
        }
    }

    // Splits the tail arriving at the `end` stub of `via` with `t0` of
    // path behind it, then recurses through the far ends of the edges it
    // entered.
    fn cross(
        &mut self,
        via: EdgeId,
        end: EdgeEnd,
        t0: f64,
        weight: f64,
        depth: usize,
    ) -> Result<(), BaselineError> {
        if t0 >= self.h || libm::fabs(weight) < SPLIT_WEIGHT_FLOOR {
            return Ok(());
        }
        let via_edge = self.net.edge(via).expect("validated edge");
        let vertex = match end {
            EdgeEnd::U => via_edge.u,
            EdgeEnd::V => via_edge.v,
        };
        if depth >= SPLIT_DEPTH_CAP {
            return Err(BaselineError::DepthCapExceeded { vertex });
        }
        let stubs = self.net.incident(vertex).expect("vertex exists");
        let j = stubs.len();
        let (pass, reflect) = match self.rule {
            SplitRule::Discontinuous if j == 1 => (0.0, weight),
            SplitRule::Discontinuous => (weight / (j - 1) as f64, 0.0),
            SplitRule::Continuous => {
                (weight * 2.0 / j as f64, weight * (2.0 / j as f64 - 1.0))
            }
        };
        for stub in stubs {
            let w = if stub.edge == via && stub.end == end { reflect } else { pass };
            if libm::fabs(w) < SPLIT_WEIGHT_FLOOR {
                continue;
            }
            self.sweep_edge(stub.edge, stub.end, t0, w);
            let length = self.net.edge(stub.edge).expect("validated edge").length;
            let far = match stub.end {
                EdgeEnd::U => EdgeEnd::V,
                EdgeEnd::V => EdgeEnd::U,
            };
            self.cross(stub.edge, far, t0 + length, w, depth + 1)?;
        }
        Ok(())
    }
}

fn split_estimate(
    net: &LinearNetwork,
    events: &[NetworkPoint],
    x: &NetworkPoint,
    h: f64,
    k: Kernel,
    rule: SplitRule,
) -> Result<f64, BaselineError> {
    if !(h > 0.0) {
        return Err(NetworkError::NonPositiveBandwidth.into());
    }
    let edge = net.edge(x.edge).ok_or(NetworkError::UnknownEdge(x.edge))?;
    if !x.offset.is_finite() || !(0.0..=edge.length).contains(&x.offset) {
        return Err(NetworkError::OffsetOutOfBounds {
            edge: x.edge,
            offset: x.offset,
            length: edge.length,
        }
        .into());
    }
    let by_edge = group_events(net, events)?;

    let mut walk = SplitWalk { net, by_edge: &by_edge, h, k, rule, acc: 0.0 };
    // Direct contributions on the evaluation point's own edge.
    if let Some(offsets) = by_edge.get(&x.edge) {
        for &c in offsets {
            let t = libm::fabs(c - x.offset);
            if t < h {
                walk.acc += k.eval(t / h) / h;
            }
        }
    }
    // Tails leaving through either end of the home edge.
    walk.cross(x.edge, EdgeEnd::U, x.offset, 1.0, 0)?;
    walk.cross(x.edge, EdgeEnd::V, edge.length - x.offset, 1.0, 0)?;
    Ok(walk.acc / events.len() as f64)
}
