//! Simple binning of events into per-edge histograms.
//!
//! Each edge is cut into `max(1, round(length/ω))` equal bins, so the
//! actual width adapts per edge and the bins always tile the edge
//! exactly. Heights `y_i = c_i/(N·width)` make the histogram a density:
//! its total area is 1. These heights are the regression responses for
//! every estimator downstream, and the plug-in response variance
//! [`plugin_variance`] lives here with them.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::network::{EdgeId, LinearNetwork, NetworkError, NetworkPoint};

/// Lower clamp for the plug-in response variance, keeping test
/// statistics finite on empty stretches of network.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Binning configuration: the target bin width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinConfig {
    /// Requested bin width; per-edge widths adapt to tile each edge.
    pub target_width: f64,
}

impl BinConfig {
    /// Configuration with an explicit target width.
    pub fn new(target_width: f64) -> Result<Self, BinError> {
        if !(target_width > 0.0) || !target_width.is_finite() {
            return Err(BinError::NonPositiveWidth);
        }
        Ok(BinConfig { target_width })
    }

    /// Default width heuristic `ω = h²/(4·h_max)`: quadratically small in
    /// the bandwidth actually used, scaled by the largest bandwidth of
    /// the analysis so the bin grid can be shared across bandwidths.
    pub fn for_bandwidth(h: f64, h_max: f64) -> Result<Self, BinError> {
        if !(h > 0.0) || !(h_max >= h) {
            return Err(BinError::NonPositiveWidth);
        }
        Self::new(h * h / (4.0 * h_max))
    }
}

/// Histogram of one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedEdge {
    /// The edge these bins cover.
    pub edge: EdgeId,
    /// Bin centers as offsets from the edge's `u` end, equally spaced.
    pub centers: Vec<f64>,
    /// Event counts per bin.
    pub counts: Vec<u64>,
    /// Density-scale heights `c_i/(N·actual_width)`.
    pub heights: Vec<f64>,
    /// Realized bin width `length/n_bins`.
    pub actual_width: f64,
}

/// Histogram of the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedNetwork {
    /// One histogram per edge, in network edge order (every edge appears,
    /// empty or not).
    pub edges: Vec<BinnedEdge>,
    /// Total event count `N`.
    pub total: u64,
}

impl BinnedNetwork {
    /// Looks up one edge's histogram.
    pub fn edge(&self, id: EdgeId) -> Option<&BinnedEdge> {
        self.edges.iter().find(|b| b.edge == id)
    }

    /// Total histogram area `Σ heights·width`; 1 up to rounding.
    pub fn total_area(&self) -> f64 {
        self.edges
            .iter()
            .map(|b| b.actual_width * b.heights.iter().sum::<f64>())
            .sum()
    }
}

/// Binning failure.
#[derive(Debug, Clone, PartialEq)]
pub enum BinError {
    /// No events were supplied.
    EmptyEvents,
    /// The target width was not strictly positive and finite.
    NonPositiveWidth,
    /// An event did not lie on the network.
    BadEvent(NetworkError),
    /// Two histograms with different bin structures cannot be merged.
    IncompatibleMerge,
}

impl fmt::Display for BinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinError::EmptyEvents => f.write_str("event list is empty"),
            BinError::NonPositiveWidth => f.write_str("bin width must be positive"),
            BinError::BadEvent(e) => write!(f, "bad event location: {e}"),
            BinError::IncompatibleMerge => f.write_str("histograms have different bin structures"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BinError {}

impl From<NetworkError> for BinError {
    fn from(e: NetworkError) -> Self {
        BinError::BadEvent(e)
    }
}

/// Bins events into per-edge histograms with density-scale heights.
///
/// Offsets exactly on an interior bin boundary go to the higher-index
/// bin; an offset exactly at the edge's far end goes to the last bin.
pub fn bin_events(
    net: &LinearNetwork,
    events: &[NetworkPoint],
    cfg: BinConfig,
) -> Result<BinnedNetwork, BinError> {
    if events.is_empty() {
        return Err(BinError::EmptyEvents);
    }
    if !(cfg.target_width > 0.0) {
        return Err(BinError::NonPositiveWidth);
    }

    let mut edges: Vec<BinnedEdge> = net
        .edges()
        .iter()
        .map(|e| {
            let n = bins_for(e.length, cfg.target_width);
            let w = e.length / n as f64;
            BinnedEdge {
                edge: e.id,
                centers: (0..n).map(|i| (i as f64 + 0.5) * w).collect(),
                counts: vec![0; n],
                heights: vec![0.0; n],
                actual_width: w,
            }
        })
        .collect();

    for ev in events {
        let edge = net.edge(ev.edge).ok_or(NetworkError::UnknownEdge(ev.edge))?;
        if !(0.0..=edge.length).contains(&ev.offset) {
            return Err(BinError::BadEvent(NetworkError::OffsetOutOfBounds {
                edge: ev.edge,
                offset: ev.offset,
                length: edge.length,
            }));
        }
        let bin = edges.iter_mut().find(|b| b.edge == ev.edge).expect("edge exists");
        let n = bin.counts.len();
        let i = (libm::floor(ev.offset / bin.actual_width) as usize).min(n - 1);
        bin.counts[i] += 1;
    }

    let total = events.len() as u64;
    set_heights(&mut edges, total);
    Ok(BinnedNetwork { edges, total })
}

/// Merges two histograms over the same grid by adding counts.
pub fn merge(a: &BinnedNetwork, b: &BinnedNetwork) -> Result<BinnedNetwork, BinError> {
    if a.edges.len() != b.edges.len() {
        return Err(BinError::IncompatibleMerge);
    }
    let mut edges = Vec::with_capacity(a.edges.len());
    for (ea, eb) in a.edges.iter().zip(&b.edges) {
        if ea.edge != eb.edge
            || ea.counts.len() != eb.counts.len()
            || ea.actual_width != eb.actual_width
        {
            return Err(BinError::IncompatibleMerge);
        }
        edges.push(BinnedEdge {
            edge: ea.edge,
            centers: ea.centers.clone(),
            counts: ea.counts.iter().zip(&eb.counts).map(|(x, y)| x + y).collect(),
            heights: vec![0.0; ea.counts.len()],
            actual_width: ea.actual_width,
        });
    }
    let total = a.total + b.total;
    set_heights(&mut edges, total);
    Ok(BinnedNetwork { edges, total })
}

/// Plug-in variance of a bin height: `m̂/(Nω) − m̂²/N`, clamped below at
/// [`VARIANCE_FLOOR`]. `width` is the bin's actual width.
pub fn plugin_variance(m_hat: f64, n_total: u64, width: f64) -> f64 {
    let n = n_total as f64;
    let raw = m_hat / (n * width) - m_hat * m_hat / n;
    raw.max(VARIANCE_FLOOR)
}

fn bins_for(length: f64, target_width: f64) -> usize {
    let n = libm::round(length / target_width);
    if n < 1.0 {
        1
    } else {
        n as usize
    }
}

fn set_heights(edges: &mut [BinnedEdge], total: u64) {
    let n = total as f64;
    for b in edges.iter_mut() {
        for (h, &c) in b.heights.iter_mut().zip(&b.counts) {
            *h = c as f64 / (n * b.actual_width);
        }
    }
}
