//! Linear networks and shortest-path geometry.
//!
//! A [`LinearNetwork`] is a set of vertices in the plane (or in space)
//! joined by edges that carry a positive arc length; optional polyline
//! geometry is cosmetic, since every computation uses arc length only.
//! Points live on edges as `(edge, offset)` pairs, and all distances are
//! shortest-path distances along the network.
//!
//! Beyond plain distances, estimation needs *signed local coordinates*
//! around an evaluation point `x`: each datum within bandwidth `h` of `x`
//! gets a signed offset (origin `x`, sign given by the direction in which
//! the path leaves `x`'s edge), the ordered list of vertices its path
//! crosses, and the edges it traverses. [`h_neighborhood`] produces these,
//! breaking shortest-path ties by the lexicographically smallest sequence
//! of crossed vertex ids so results are reproducible. It also flags two
//! assumption violations as warnings: an in-window edge shorter than `h`,
//! and a loop through `x` shorter than `2h` (a kernel window that can wrap
//! around and reach the same datum twice).

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Stable identifier of a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u64);

/// Stable identifier of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u64);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Vertex with embedding coordinates (2 or 3 dimensional).
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    /// Identifier, unique within the network.
    pub id: VertexId,
    /// Embedding coordinates; validation requires 2 or 3 entries.
    pub coords: Vec<f64>,
}

/// Edge between two vertices with a positive arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Identifier, unique within the network.
    pub id: EdgeId,
    /// First endpoint; offsets are measured from this end.
    pub u: VertexId,
    /// Second endpoint (may equal `u` for a self-loop).
    pub v: VertexId,
    /// Arc length, strictly positive.
    pub length: f64,
    /// Optional geometry; cumulative chord length must match `length`.
    pub polyline: Option<Vec<Vec<f64>>>,
}

/// Which end of an edge touches a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeEnd {
    /// The `u` endpoint (offset 0).
    U,
    /// The `v` endpoint (offset `length`).
    V,
}

impl EdgeEnd {
    /// Offset of this end on an edge of the given length.
    pub fn offset(self, length: f64) -> f64 {
        match self {
            EdgeEnd::U => 0.0,
            EdgeEnd::V => length,
        }
    }
}

/// One incidence of an edge at a vertex; self-loops appear twice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    /// The incident edge.
    pub edge: EdgeId,
    /// The end of that edge touching the vertex.
    pub end: EdgeEnd,
}

/// A point on the network: an edge and an offset from its `u` end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkPoint {
    /// Edge carrying the point.
    pub edge: EdgeId,
    /// Arc length from the edge's `u` endpoint, in `[0, length]`.
    pub offset: f64,
}

/// Result of a shortest-path query.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    /// Shortest-path arc length; `f64::INFINITY` when disconnected.
    pub distance: f64,
    /// Vertices crossed, in traversal order (empty for a same-edge path).
    pub vertex_sequence: Vec<VertexId>,
    /// Edges traversed, in traversal order.
    pub edge_sequence: Vec<EdgeId>,
}

/// Signed arc length with the evaluation point as origin.
///
/// The sign records the direction in which the path leaves the
/// evaluation point's edge: positive toward increasing offset, negative
/// toward decreasing offset. `|value|` always equals the unsigned
/// shortest-path distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedOffset {
    /// Signed arc length.
    pub value: f64,
}

/// A datum inside the `h`-window of an evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodDatum {
    /// Position of this datum in the input slice.
    pub index: usize,
    /// The datum's location.
    pub point: NetworkPoint,
    /// Signed path coordinate relative to the evaluation point.
    pub signed_offset: SignedOffset,
    /// Vertices strictly between the evaluation point and the datum.
    pub vertices_crossed: Vec<VertexId>,
    /// Unsigned path distance from the evaluation point to each crossed
    /// vertex; parallel to `vertices_crossed`.
    pub crossing_offsets: Vec<f64>,
    /// Edges traversed, starting with the evaluation point's edge; one
    /// entry more than `vertices_crossed`.
    pub edges_traversed: Vec<EdgeId>,
    /// Edge on which the datum lies.
    pub terminal_edge: EdgeId,
}

/// Assumption violations detected while building a neighborhood.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NeighborhoodWarnings {
    /// Some edge inside the window is shorter than the bandwidth.
    pub edge_shorter_than_h: bool,
    /// A loop through the evaluation point is shorter than `2h`.
    pub loop_shorter_than_2h: bool,
}

/// All data within distance `h` of an evaluation point, with warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    /// The included data, in input order.
    pub data: Vec<NeighborhoodDatum>,
    /// Assumption-violation flags.
    pub warnings: NeighborhoodWarnings,
}

/// Validation or query failure.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkError {
    /// The vertex list was empty.
    EmptyVertices,
    /// The edge list was empty.
    EmptyEdges,
    /// A vertex id appeared twice.
    DuplicateVertexId(VertexId),
    /// An edge id appeared twice.
    DuplicateEdgeId(EdgeId),
    /// An edge referenced a vertex id that does not exist.
    UnknownVertex {
        /// The offending edge.
        edge: EdgeId,
        /// The missing vertex id.
        vertex: VertexId,
    },
    /// An edge declared a non-positive or non-finite length.
    NonPositiveLength {
        /// The offending edge.
        edge: EdgeId,
    },
    /// A vertex had coordinates of dimension other than 2 or 3.
    BadCoordinateDim {
        /// The offending vertex.
        vertex: VertexId,
        /// The dimension found.
        dim: usize,
    },
    /// Polyline chord length disagreed with the declared arc length.
    PolylineMismatch {
        /// The offending edge.
        edge: EdgeId,
        /// Cumulative chord length of the polyline.
        chord: f64,
        /// Declared arc length.
        declared: f64,
    },
    /// A query point referenced an unknown edge.
    UnknownEdge(EdgeId),
    /// A query point's offset fell outside `[0, length]`.
    OffsetOutOfBounds {
        /// The edge referenced by the point.
        edge: EdgeId,
        /// The offending offset.
        offset: f64,
        /// The edge's length.
        length: f64,
    },
    /// A bandwidth or width parameter was not strictly positive.
    NonPositiveBandwidth,
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::EmptyVertices => f.write_str("vertex list is empty"),
            NetworkError::EmptyEdges => f.write_str("edge list is empty"),
            NetworkError::DuplicateVertexId(v) => write!(f, "duplicate vertex id {v}"),
            NetworkError::DuplicateEdgeId(e) => write!(f, "duplicate edge id {e}"),
            NetworkError::UnknownVertex { edge, vertex } => {
                write!(f, "edge {edge} references unknown vertex {vertex}")
            }
            NetworkError::NonPositiveLength { edge } => {
                write!(f, "edge {edge} has non-positive length")
            }
            NetworkError::BadCoordinateDim { vertex, dim } => {
                write!(f, "vertex {vertex} has coordinate dimension {dim}, expected 2 or 3")
            }
            NetworkError::PolylineMismatch { edge, chord, declared } => write!(
                f,
                "edge {edge} polyline chord length {chord} does not match declared length {declared}"
            ),
            NetworkError::UnknownEdge(e) => write!(f, "point references unknown edge {e}"),
            NetworkError::OffsetOutOfBounds { edge, offset, length } => {
                write!(f, "offset {offset} outside [0, {length}] on edge {edge}")
            }
            NetworkError::NonPositiveBandwidth => f.write_str("bandwidth must be positive"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NetworkError {}

type VSet = BTreeSet<VertexId>;

/// An immutable, validated linear network.
///
/// All queries are read-only, so a network can be shared freely across
/// threads once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearNetwork {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    // endpoint vertex indices per edge, parallel to `edges`
    ends: Vec<(usize, usize)>,
    // per vertex: (edge index, end touching the vertex)
    adjacency: Vec<Vec<(usize, EdgeEnd)>>,
}

impl LinearNetwork {
    /// All vertices, in input order.
    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// All edges, in input order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Looks up an edge by id.
    pub fn edge(&self, id: EdgeId) -> Option<&Edge> {
        self.edge_index(id).map(|i| &self.edges[i])
    }

    /// Looks up a vertex by id.
    pub fn vertex(&self, id: VertexId) -> Option<&Vertex> {
        self.vertex_index(id).map(|i| &self.vertices[i])
    }

    /// Degree of a vertex (self-loops count twice); `None` if unknown.
    pub fn degree(&self, id: VertexId) -> Option<usize> {
        self.vertex_index(id).map(|i| self.adjacency[i].len())
    }

    /// Incidences (edge, touching end) at a vertex.
    pub fn incident(&self, id: VertexId) -> Option<Vec<Incidence>> {
        let i = self.vertex_index(id)?;
        Some(
            self.adjacency[i]
                .iter()
                .map(|&(e, end)| Incidence { edge: self.edges[e].id, end })
                .collect(),
        )
    }

    /// Sum of all edge lengths.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    fn vertex_index(&self, id: VertexId) -> Option<usize> {
        self.vertices.iter().position(|v| v.id == id)
    }

    fn edge_index(&self, id: EdgeId) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    fn check_point(&self, p: &NetworkPoint) -> Result<usize, NetworkError> {
        let i = self.edge_index(p.edge).ok_or(NetworkError::UnknownEdge(p.edge))?;
        let len = self.edges[i].length;
        if !(0.0..=len).contains(&p.offset) {
            return Err(NetworkError::OffsetOutOfBounds {
                edge: p.edge,
                offset: p.offset,
                length: len,
            });
        }
        Ok(i)
    }
}

/// Builds and validates a [`LinearNetwork`].
pub fn build_network(
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
) -> Result<LinearNetwork, NetworkError> {
    if vertices.is_empty() {
        return Err(NetworkError::EmptyVertices);
    }
    if edges.is_empty() {
        return Err(NetworkError::EmptyEdges);
    }
    let mut seen = VSet::new();
    for v in &vertices {
        if !seen.insert(v.id) {
            return Err(NetworkError::DuplicateVertexId(v.id));
        }
        let dim = v.coords.len();
        if dim != 2 && dim != 3 {
            return Err(NetworkError::BadCoordinateDim { vertex: v.id, dim });
        }
    }
    let mut eseen = BTreeSet::new();
    for e in &edges {
        if !eseen.insert(e.id) {
            return Err(NetworkError::DuplicateEdgeId(e.id));
        }
    }

    let index_of = |id: VertexId| vertices.iter().position(|v| v.id == id);
    let mut ends = Vec::with_capacity(edges.len());
    let mut adjacency = vec![Vec::new(); vertices.len()];
    for (ei, e) in edges.iter().enumerate() {
        if !(e.length > 0.0) || !e.length.is_finite() {
            return Err(NetworkError::NonPositiveLength { edge: e.id });
        }
        let ui = index_of(e.u).ok_or(NetworkError::UnknownVertex { edge: e.id, vertex: e.u })?;
        let vi = index_of(e.v).ok_or(NetworkError::UnknownVertex { edge: e.id, vertex: e.v })?;
        if let Some(poly) = &e.polyline {
            let mut chord = 0.0;
            for pair in poly.windows(2) {
                let mut s = 0.0;
                for (a, b) in pair[0].iter().zip(pair[1].iter()) {
                    s += (a - b) * (a - b);
                }
                chord += libm::sqrt(s);
            }
            if libm::fabs(chord - e.length) > 1e-9 * e.length.max(1.0) {
                return Err(NetworkError::PolylineMismatch {
                    edge: e.id,
                    chord,
                    declared: e.length,
                });
            }
        }
        ends.push((ui, vi));
        adjacency[ui].push((ei, EdgeEnd::U));
        adjacency[vi].push((ei, EdgeEnd::V));
    }
    Ok(LinearNetwork { vertices, edges, ends, adjacency })
}

// One step of a reconstructed shortest path: the vertex reached, the
// cumulative distance at it, and the edge used to arrive.
#[derive(Debug, Clone, PartialEq)]
struct ChainLink {
    vertex: usize,
    dist: f64,
    via_edge: usize,
}

// Single-source shortest paths from a point, with lexicographic
// vertex-id-sequence tie-breaking and an optional distance limit.
struct SourceField {
    dist: Vec<f64>,
    // full chain x -> vertex (inclusive); parallel to `dist`
    chains: Vec<Vec<ChainLink>>,
    // direction the path leaves the source edge: -1 via u end, +1 via v end
    sign: Vec<i8>,
}

#[derive(PartialEq)]
struct QueueItem {
    dist: f64,
    seq: Vec<u64>,
    vertex: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for smallest-first.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl SourceField {
    fn seq_ids(&self, net: &LinearNetwork, vertex: usize) -> Vec<u64> {
        self.chains[vertex].iter().map(|l| net.vertices[l.vertex].id.0).collect()
    }
}

// (dist, seq) strictly better than the incumbent at `vertex`?
fn better(field: &SourceField, net: &LinearNetwork, vertex: usize, dist: f64, seq: &[u64]) -> bool {
    if dist < field.dist[vertex] {
        return true;
    }
    if dist > field.dist[vertex] {
        return false;
    }
    let cur = field.seq_ids(net, vertex);
    seq < cur.as_slice()
}

fn dijkstra_from(net: &LinearNetwork, x: &NetworkPoint, limit: Option<f64>) -> SourceField {
    let nv = net.vertices.len();
    let mut field = SourceField {
        dist: vec![f64::INFINITY; nv],
        chains: vec![Vec::new(); nv],
        sign: vec![0; nv],
    };
    let ei = net.edge_index(x.edge).expect("validated point");
    let (ui, vi) = net.ends[ei];
    let len = net.edges[ei].length;
    let mut heap: BinaryHeap<QueueItem> = BinaryHeap::new();

    // Seed the two ends of the source edge; the u side first so an exact
    // tie on a self-loop resolves to the negative direction.
    let seeds = [(ui, x.offset, -1i8), (vi, len - x.offset, 1i8)];
    for &(w, d, s) in seeds.iter() {
        let seq = vec![net.vertices[w].id.0];
        if better(&field, net, w, d, &seq) {
            field.dist[w] = d;
            field.chains[w] = vec![ChainLink { vertex: w, dist: d, via_edge: ei }];
            field.sign[w] = s;
            heap.push(QueueItem { dist: d, seq, vertex: w });
        }
    }

    while let Some(item) = heap.pop() {
        if let Some(lim) = limit {
            if item.dist >= lim {
                break;
            }
        }
        // Skip stale entries.
        if item.dist != field.dist[item.vertex] || item.seq != field.seq_ids(net, item.vertex) {
            continue;
        }
        let w = item.vertex;
        for &(e, end) in &net.adjacency[w] {
            let (a, b) = net.ends[e];
            let z = match end {
                EdgeEnd::U => b,
                EdgeEnd::V => a,
            };
            let nd = item.dist + net.edges[e].length;
            let mut nseq = item.seq.clone();
            nseq.push(net.vertices[z].id.0);
            if better(&field, net, z, nd, &nseq) {
                field.dist[z] = nd;
                let mut chain = field.chains[w].clone();
                chain.push(ChainLink { vertex: z, dist: nd, via_edge: e });
                field.chains[z] = chain;
                field.sign[z] = field.sign[w];
                heap.push(QueueItem { dist: nd, seq: nseq, vertex: z });
            }
        }
    }
    field
}

// A candidate route from the source to a datum.
struct Route {
    dist: f64,
    sign: i8,
    // chain of crossed vertices (may be empty for the direct route)
    chain: Vec<ChainLink>,
    // edge appended after the chain to reach the datum
    terminal: usize,
    // drop the last chain vertex (datum sits exactly on it)
    drop_last: bool,
}

fn routes_to(
    net: &LinearNetwork,
    field: &SourceField,
    x: &NetworkPoint,
    xei: usize,
    p: &NetworkPoint,
    pei: usize,
) -> Vec<Route> {
    let mut out = Vec::with_capacity(3);
    let len = net.edges[pei].length;
    if pei == xei {
        let d = p.offset - x.offset;
        out.push(Route {
            dist: libm::fabs(d),
            sign: if d < 0.0 { -1 } else { 1 },
            chain: Vec::new(),
            terminal: pei,
            drop_last: false,
        });
    }
    let (ui, vi) = net.ends[pei];
    if field.dist[ui].is_finite() {
        out.push(Route {
            dist: field.dist[ui] + p.offset,
            sign: field.sign[ui],
            chain: field.chains[ui].clone(),
            terminal: pei,
            drop_last: p.offset == 0.0,
        });
    }
    if field.dist[vi].is_finite() {
        out.push(Route {
            dist: field.dist[vi] + (len - p.offset),
            sign: field.sign[vi],
            chain: field.chains[vi].clone(),
            terminal: pei,
            drop_last: p.offset == len,
        });
    }
    out
}

// Smallest route by (distance, lexicographic crossed-vertex ids); the
// insertion order above resolves exact full ties deterministically.
fn best_route(net: &LinearNetwork, routes: Vec<Route>) -> Option<Route> {
    routes.into_iter().reduce(|best, r| {
        if r.dist < best.dist {
            return r;
        }
        if r.dist > best.dist {
            return best;
        }
        let rs: Vec<u64> = r.chain.iter().map(|l| net.vertices[l.vertex].id.0).collect();
        let bs: Vec<u64> = best.chain.iter().map(|l| net.vertices[l.vertex].id.0).collect();
        if rs < bs {
            r
        } else {
            best
        }
    })
}

/// Shortest-path distance and path between two points.
pub fn network_distance(
    net: &LinearNetwork,
    a: &NetworkPoint,
    b: &NetworkPoint,
) -> Result<PathResult, NetworkError> {
    let aei = net.check_point(a)?;
    let bei = net.check_point(b)?;
    if aei == bei && a.offset == b.offset {
        return Ok(PathResult {
            distance: 0.0,
            vertex_sequence: Vec::new(),
            edge_sequence: Vec::new(),
        });
    }
    let field = dijkstra_from(net, a, None);
    let route = match best_route(net, routes_to(net, &field, a, aei, b, bei)) {
        Some(r) if r.dist.is_finite() => r,
        _ => {
            return Ok(PathResult {
                distance: f64::INFINITY,
                vertex_sequence: Vec::new(),
                edge_sequence: Vec::new(),
            })
        }
    };
    let mut vertex_sequence: Vec<VertexId> =
        route.chain.iter().map(|l| net.vertices[l.vertex].id).collect();
    if route.drop_last {
        vertex_sequence.pop();
    }
    let mut edge_sequence: Vec<EdgeId> =
        route.chain.iter().map(|l| net.edges[l.via_edge].id).collect();
    if !route.drop_last {
        edge_sequence.push(net.edges[route.terminal].id);
    }
    Ok(PathResult { distance: route.dist, vertex_sequence, edge_sequence })
}

/// Length of the shortest loop through `x`, or infinity if none exists.
///
/// Every simple cycle through a point uses exactly two of the "legs"
/// leaving it (the two sides of its edge for an interior point, the
/// incident edge stubs for a vertex), so the minimum is found by joining
/// each leg pair through the network with the point removed.
pub fn shortest_cycle_through(
    net: &LinearNetwork,
    x: &NetworkPoint,
) -> Result<f64, NetworkError> {
    let ei = net.check_point(x)?;
    let len = net.edges[ei].length;
    // A leg reaches `vertex` at cost `len`; `stub_edge` is set when the
    // leg is a whole incident edge (x at a vertex), so the two stubs of
    // one self-loop can be paired as a single traversal.
    struct Leg {
        vertex: usize,
        len: f64,
        stub_edge: Option<usize>,
    }
    let (legs, removed_edges): (Vec<Leg>, Vec<usize>) = if x.offset > 0.0 && x.offset < len {
        let (ui, vi) = net.ends[ei];
        (
            vec![
                Leg { vertex: ui, len: x.offset, stub_edge: None },
                Leg { vertex: vi, len: len - x.offset, stub_edge: None },
            ],
            vec![ei],
        )
    } else {
        let w = if x.offset == 0.0 { net.ends[ei].0 } else { net.ends[ei].1 };
        let legs = net.adjacency[w]
            .iter()
            .map(|&(e, end)| {
                let (a, b) = net.ends[e];
                let other = match end {
                    EdgeEnd::U => b,
                    EdgeEnd::V => a,
                };
                Leg { vertex: other, len: net.edges[e].length, stub_edge: Some(e) }
            })
            .collect();
        let removed = net.adjacency[w].iter().map(|&(e, _)| e).collect();
        (legs, removed)
    };

    let mut best = f64::INFINITY;
    for i in 0..legs.len() {
        let dist = restricted_dijkstra(net, legs[i].vertex, &removed_edges);
        for (j, lj) in legs.iter().enumerate() {
            if i == j {
                continue;
            }
            let total = match (legs[i].stub_edge, lj.stub_edge) {
                // Two stubs of one self-loop: the loop itself, once.
                (Some(a), Some(b)) if a == b => net.edges[a].length,
                _ => legs[i].len + dist[lj.vertex] + lj.len,
            };
            best = best.min(total);
        }
    }
    Ok(best)
}

// Plain vertex-to-all Dijkstra that ignores the listed edges.
fn restricted_dijkstra(net: &LinearNetwork, source: usize, removed: &[usize]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.vertices.len()];
    dist[source] = 0.0;
    let mut heap: BinaryHeap<QueueItem> = BinaryHeap::new();
    heap.push(QueueItem { dist: 0.0, seq: Vec::new(), vertex: source });
    while let Some(item) = heap.pop() {
        if item.dist > dist[item.vertex] {
            continue;
        }
        for &(e, end) in &net.adjacency[item.vertex] {
            if removed.contains(&e) {
                continue;
            }
            let (a, b) = net.ends[e];
            let z = match end {
                EdgeEnd::U => b,
                EdgeEnd::V => a,
            };
            let nd = item.dist + net.edges[e].length;
            if nd < dist[z] {
                dist[z] = nd;
                heap.push(QueueItem { dist: nd, seq: Vec::new(), vertex: z });
            }
        }
    }
    dist
}

/// Collects all data within distance `h` of `x`, with signed offsets and
/// crossing bookkeeping, and checks the two window assumptions.
///
/// Points at distance exactly `h` are excluded (the kernel support is
/// open). Shortest-path ties are broken by the lexicographically smallest
/// crossed-vertex-id sequence, with a direct same-edge route preferred
/// over any route through a vertex at equal distance.
pub fn h_neighborhood(
    net: &LinearNetwork,
    x: &NetworkPoint,
    h: f64,
    data: &[NetworkPoint],
) -> Result<Neighborhood, NetworkError> {
    if !(h > 0.0) {
        return Err(NetworkError::NonPositiveBandwidth);
    }
    let xei = net.check_point(x)?;
    let field = dijkstra_from(net, x, Some(h));

    let mut out = Vec::new();
    for (index, p) in data.iter().enumerate() {
        let pei = net.check_point(p)?;
        let route = match best_route(net, routes_to(net, &field, x, xei, p, pei)) {
            Some(r) => r,
            None => continue,
        };
        if !(route.dist < h) {
            continue;
        }
        let mut vertices_crossed: Vec<VertexId> =
            route.chain.iter().map(|l| net.vertices[l.vertex].id).collect();
        let mut crossing_offsets: Vec<f64> = route.chain.iter().map(|l| l.dist).collect();
        if route.drop_last {
            vertices_crossed.pop();
            crossing_offsets.pop();
        }
        let mut edges_traversed: Vec<EdgeId> =
            route.chain.iter().map(|l| net.edges[l.via_edge].id).collect();
        if !route.drop_last {
            edges_traversed.push(net.edges[route.terminal].id);
        }
        out.push(NeighborhoodDatum {
            index,
            point: *p,
            signed_offset: SignedOffset { value: route.sign as f64 * route.dist },
            vertices_crossed,
            crossing_offsets,
            edges_traversed,
            terminal_edge: net.edges[pei].id,
        });
    }

    let mut warnings = NeighborhoodWarnings::default();
    for (ei2, e) in net.edges.iter().enumerate() {
        let (ui, vi) = net.ends[ei2];
        let touched = ei2 == xei || field.dist[ui] < h || field.dist[vi] < h;
        if touched && e.length < h {
            warnings.edge_shorter_than_h = true;
            break;
        }
    }
    if shortest_cycle_through(net, x)? < 2.0 * h {
        warnings.loop_shorter_than_2h = true;
    }
    Ok(Neighborhood { data: out, warnings })
}

/// Keeps only data whose crossed vertices all belong to `accepted`.
pub fn direct_access_filter(
    neighborhood: &[NeighborhoodDatum],
    accepted: &VSet,
) -> Vec<NeighborhoodDatum> {
    neighborhood
        .iter()
        .filter(|d| d.vertices_crossed.iter().all(|v| accepted.contains(v)))
        .cloned()
        .collect()
}
