//! Density estimation for event points on linear networks.
//!
//! A linear network is a collection of curve segments (edges) glued at
//! vertices, with all distances measured by shortest-path arc length.
//! Given a sample of events on such a network, this crate estimates the
//! event density along every edge and decides, vertex by vertex, whether
//! the density is continuous across the vertex.
//!
//! The pipeline has four stages:
//!
//! 1. [`binning`] turns raw events into a fixed-design histogram on each
//!    edge (equal-width bins, total area one).
//! 2. [`lpr`] fits kernel-weighted local polynomials to the bin heights of
//!    a single edge, giving one-sided density limits at each vertex with
//!    finite-sample sandwich variances.
//! 3. [`vertex_test`] runs a chi-square test of joint equality of those
//!    limits at each vertex (and optionally of the one-sided slopes), and
//!    finds the largest subset of edges that can be treated as continuous.
//! 4. [`piecewise`] re-estimates near each vertex under the accepted
//!    constraints: a shared intercept with per-edge slopes, chained across
//!    consecutive accepted vertices, using only data with direct access to
//!    the evaluation point.
//!
//! [`baselines`] provides comparison estimators (a naive network KDE and
//! the equal-split discontinuous/continuous kernel estimators) and
//! [`simulate`] contains the scenario generators and Monte Carlo harness
//! used by the benchmark suite.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (on by default) only adds `std::error::Error` impls and seeding
//! conveniences. File formats, CLI, and parallel drivers live in the
//! companion `netdens-cli` crate.
//!
//! # Quick start
//!
//! ```
//! use netdens_core::network::{build_network, Edge, EdgeId, NetworkPoint, Vertex, VertexId};
//! use netdens_core::binning::{bin_events, BinConfig};
//! use netdens_core::kernels::Kernel;
//! use netdens_core::vertex_test::{test_all_vertices, vertex_outcomes};
//! use netdens_core::piecewise::density_profile;
//!
//! // A "Y" of three unit edges meeting at vertex 0.
//! let vertices = vec![
//!     Vertex { id: VertexId(0), coords: vec![0.0, 0.0] },
//!     Vertex { id: VertexId(1), coords: vec![1.0, 0.0] },
//!     Vertex { id: VertexId(2), coords: vec![0.0, 1.0] },
//!     Vertex { id: VertexId(3), coords: vec![-1.0, 0.0] },
//! ];
//! let edges = (1..4)
//!     .map(|i| Edge { id: EdgeId(i), u: VertexId(0), v: VertexId(i), length: 1.0, polyline: None })
//!     .collect();
//! let net = build_network(vertices, edges).unwrap();
//!
//! // 100 events spread evenly along each edge.
//! let events: Vec<NetworkPoint> = (0..300)
//!     .map(|i| NetworkPoint { edge: EdgeId(1 + (i % 3) as u64), offset: ((i / 3) as f64 + 0.5) / 100.0 })
//!     .collect();
//!
//! let binned = bin_events(&net, &events, BinConfig::new(0.05).unwrap()).unwrap();
//! let h = 0.3;
//! let kernel = Kernel::Epanechnikov;
//! let decisions = test_all_vertices(&net, &binned, h, 0.05, kernel).unwrap();
//! let outcomes = vertex_outcomes(&decisions);
//! let profile = density_profile(&net, &binned, h, kernel, &outcomes, None).unwrap();
//! assert!(!profile.is_empty());
//! assert!(profile.iter().all(|row| row.density.is_finite()));
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod baselines;
pub mod binning;
pub mod kernels;
pub mod linalg;
pub mod lpr;
pub mod network;
pub mod piecewise;
pub mod simulate;
pub mod special;
