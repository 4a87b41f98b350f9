//! Level-m graph approximations of the N-point Sierpinski gasket.
//!
//! Points of `V_m` are identified by exact integer barycentric weights: the
//! point `F_w(p_i)` with `w = (w_1, ..., w_m)` has weight vector
//! `sum_k 2^(m-k) e_{w_k} + e_i`, whose entries sum to `2^m`. Two addresses
//! denote the same point iff they agree after rescaling to a common level.

use serde::{Deserialize, Serialize};

use crate::error::{domain, GasketError, Result};

/// Upper bound on the number of m-cells a single graph may hold.
pub const MAX_CELLS: u64 = 1 << 24;

/// Largest level whose weights `2^m` fit comfortably in `u64`.
pub const MAX_LEVEL: u32 = 60;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexAddress {
    level: u32,
    weights: Vec<u64>,
}

impl VertexAddress {
    pub fn new(level: u32, weights: Vec<u64>) -> Result<Self> {
        if weights.len() < 2 {
            return domain("an address needs at least two barycentric weights");
        }
        if level > MAX_LEVEL {
            return Err(GasketError::Resource(format!(
                "level {level} exceeds {MAX_LEVEL}"
            )));
        }
        let total: u128 = weights.iter().map(|&w| w as u128).sum();
        if total != 1u128 << level {
            return domain(format!("weights sum to {total}, expected 2^{level}"));
        }
        Ok(Self { level, weights })
    }

    /// The corner `p_i` seen at the given level.
    pub fn corner(n: usize, level: u32, i: usize) -> Self {
        let mut weights = vec![0; n];
        weights[i] = 1u64 << level;
        Self { level, weights }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    /// The same point expressed at a finer level.
    pub fn rescaled(&self, level: u32) -> Result<Self> {
        if level < self.level {
            return domain(format!(
                "cannot rescale level {} down to {level}",
                self.level
            ));
        }
        if level > MAX_LEVEL {
            return Err(GasketError::Resource(format!(
                "level {level} exceeds {MAX_LEVEL}"
            )));
        }
        let shift = level - self.level;
        Ok(Self {
            level,
            weights: self.weights.iter().map(|&w| w << shift).collect(),
        })
    }

    pub fn same_point(&self, other: &VertexAddress) -> bool {
        if self.n() != other.n() {
            return false;
        }
        let level = self.level.max(other.level);
        let (a, b) = (self.level, other.level);
        self.weights
            .iter()
            .zip(&other.weights)
            .all(|(&x, &y)| (x << (level - a)) == (y << (level - b)))
    }
}

/// Identifies the graph a [`VertexFunction`] is indexed by. Graphs are
/// canonical, so `(n, level)` pins the vertex ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphTag {
    pub n: usize,
    pub level: u32,
}

/// Weight vector (at level `word.len()`) of corner `i` of the cell `F_word(V)`.
pub fn word_corner_weights(n: usize, word: &[usize], i: usize) -> Vec<u64> {
    let depth = word.len();
    let mut weights = vec![0u64; n];
    for (k, &letter) in word.iter().enumerate() {
        weights[letter] += 1u64 << (depth - 1 - k);
    }
    weights[i] += 1;
    weights
}

/// Digits of cell index `c` among the `n^level` words, most significant letter first.
pub fn word_of_index(n: usize, level: u32, mut c: usize) -> Vec<usize> {
    let mut word = vec![0; level as usize];
    for slot in word.iter_mut().rev() {
        *slot = c % n;
        c /= n;
    }
    word
}

/// Local numbering used when a cell is split into its `n` sub-cells: the
/// parent's corners occupy `0..n`, the edge midpoints follow in
/// lexicographic pair order.
#[derive(Debug, Clone)]
pub struct CellRefinement {
    n: usize,
    pairs: Vec<(usize, usize)>,
    pair_slot: Vec<usize>,
}

impl CellRefinement {
    pub fn new(n: usize) -> Self {
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        let mut pair_slot = vec![usize::MAX; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                pair_slot[i * n + j] = pairs.len();
                pair_slot[j * n + i] = pairs.len();
                pairs.push((i, j));
            }
        }
        Self {
            n,
            pairs,
            pair_slot,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn midpoint_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn local_size(&self) -> usize {
        self.n + self.pairs.len()
    }

    /// Local index of corner `l` of sub-cell `i`.
    pub fn subcell_corner(&self, i: usize, l: usize) -> usize {
        if i == l {
            i
        } else {
            self.n + self.pair_slot[i * self.n + l]
        }
    }
}

#[derive(Debug, Clone)]
pub struct GasketGraph {
    n: usize,
    level: u32,
    vertices: Vec<VertexAddress>,
    cells: Vec<usize>,
    edges: Vec<(usize, usize)>,
    boundary: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
}

/// Builds `V_m` for the N-point gasket, with every shared cell corner
/// identified exactly once and vertices sorted lexicographically by weights.
pub fn build_level(n: usize, m: u32) -> Result<GasketGraph> {
    if n < 2 {
        return domain(format!("the gasket needs N >= 2 corner points, got {n}"));
    }
    if m > MAX_LEVEL {
        return Err(GasketError::Resource(format!(
            "level {m} exceeds {MAX_LEVEL}"
        )));
    }
    let cell_count = (n as u64)
        .checked_pow(m)
        .filter(|&c| c <= MAX_CELLS)
        .ok_or_else(|| {
            GasketError::Resource(format!("{n}^{m} cells exceeds the limit of {MAX_CELLS}"))
        })? as usize;

    let mut corners: Vec<Vec<u64>> = Vec::with_capacity(cell_count * n);
    for c in 0..cell_count {
        let word = word_of_index(n, m, c);
        for i in 0..n {
            corners.push(word_corner_weights(n, &word, i));
        }
    }
    let mut unique = corners.clone();
    unique.sort_unstable();
    unique.dedup();

    let lookup = |w: &[u64]| unique.binary_search_by(|v| v.as_slice().cmp(w)).unwrap();
    let cells: Vec<usize> = corners.iter().map(|w| lookup(w)).collect();

    let mut edges = Vec::with_capacity(cell_count * n * (n - 1) / 2);
    for cell in cells.chunks_exact(n) {
        for a in 0..n {
            for b in (a + 1)..n {
                let (x, y) = (cell[a], cell[b]);
                edges.push((x.min(y), x.max(y)));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let boundary = (0..n)
        .map(|i| lookup(VertexAddress::corner(n, m, i).weights()))
        .collect();

    let mut adjacency = vec![Vec::new(); unique.len()];
    for &(x, y) in &edges {
        adjacency[x].push(y);
        adjacency[y].push(x);
    }

    let vertices = unique
        .into_iter()
        .map(|weights| VertexAddress { level: m, weights })
        .collect();

    Ok(GasketGraph {
        n,
        level: m,
        vertices,
        cells,
        edges,
        boundary,
        adjacency,
    })
}

impl GasketGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn tag(&self) -> GraphTag {
        GraphTag {
            n: self.n,
            level: self.level,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len() / self.n
    }

    pub fn vertices(&self) -> &[VertexAddress] {
        &self.vertices
    }

    pub fn vertex(&self, index: usize) -> &VertexAddress {
        &self.vertices[index]
    }

    /// Vertex indices of the corners `F_w(p_1), ..., F_w(p_N)` of cell `c`.
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * self.n..(c + 1) * self.n]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.n)
    }

    pub fn cell_word(&self, c: usize) -> Vec<usize> {
        word_of_index(self.n, self.level, c)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Indices of `p_1, ..., p_N`.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary.contains(&v)
    }

    pub fn index_of(&self, weights: &[u64]) -> Option<usize> {
        self.vertices
            .binary_search_by(|v| v.weights.as_slice().cmp(weights))
            .ok()
    }

    /// Index of an address from any level not finer than this graph.
    pub fn locate(&self, addr: &VertexAddress) -> Result<usize> {
        if addr.n() != self.n {
            return domain(format!(
                "address has {} weights, graph has N = {}",
                addr.n(),
                self.n
            ));
        }
        let scaled = addr.rescaled(self.level)?;
        self.index_of(scaled.weights())
            .ok_or_else(|| GasketError::Domain("address is not a vertex of this graph".into()))
    }

    /// For each vertex of `coarse`, its index in `self`.
    pub fn embedding_of(&self, coarse: &GasketGraph) -> Result<Vec<usize>> {
        if coarse.n != self.n || coarse.level > self.level {
            return domain(format!(
                "cannot embed (N={}, m={}) into (N={}, m={})",
                coarse.n, coarse.level, self.n, self.level
            ));
        }
        coarse.vertices.iter().map(|a| self.locate(a)).collect()
    }

    /// Euclidean coordinates of every vertex, for export only.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        let simplex = simplex_vertices(self.n);
        self.vertices
            .iter()
            .map(|a| embed_with(a, &simplex))
            .collect()
    }
}

/// Restricts `u` from `fine` to the vertices of `coarse`.
pub fn restrict(
    u: &VertexFunction,
    fine: &GasketGraph,
    coarse: &GasketGraph,
) -> Result<VertexFunction> {
    u.check(fine)?;
    let map = fine.embedding_of(coarse)?;
    Ok(VertexFunction {
        tag: coarse.tag(),
        values: map.iter().map(|&i| u.values[i]).collect(),
    })
}

/// Vertices of a regular unit-edge simplex in `R^(n-1)`, built by the usual
/// recursion: `p_1` at the origin, each new vertex above the centroid of the
/// previous ones along a fresh axis.
pub fn simplex_vertices(n: usize) -> Vec<Vec<f64>> {
    let dim = n.saturating_sub(1);
    let mut points: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    for k in 1..n {
        let mut centroid = vec![0.0; dim];
        for p in &points {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / k as f64;
            }
        }
        // circumradius of the regular simplex on k unit-spaced vertices
        let radius_sq = (k as f64 - 1.0) / (2.0 * k as f64);
        centroid[k - 1] = (1.0 - radius_sq).sqrt();
        points.push(centroid);
    }
    points
}

pub fn embed(addr: &VertexAddress) -> Vec<f64> {
    embed_with(addr, &simplex_vertices(addr.n()))
}

fn embed_with(addr: &VertexAddress, simplex: &[Vec<f64>]) -> Vec<f64> {
    let scale = (addr.level as f64).exp2();
    let dim = simplex[0].len();
    let mut x = vec![0.0; dim];
    for (&w, p) in addr.weights.iter().zip(simplex) {
        if w == 0 {
            continue;
        }
        let t = w as f64 / scale;
        for (xi, pi) in x.iter_mut().zip(p) {
            *xi += t * pi;
        }
    }
    x
}

/// A real value per vertex of a specific graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexFunction {
    tag: GraphTag,
    values: Vec<f64>,
}

impl VertexFunction {
    pub fn new(graph: &GasketGraph, values: Vec<f64>) -> Result<Self> {
        if values.len() != graph.vertex_count() {
            return domain(format!(
                "{} values for a graph with {} vertices",
                values.len(),
                graph.vertex_count()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("value at vertex {i} is not finite"));
        }
        Ok(Self {
            tag: graph.tag(),
            values,
        })
    }

    pub fn constant(graph: &GasketGraph, c: f64) -> Self {
        Self {
            tag: graph.tag(),
            values: vec![c; graph.vertex_count()],
        }
    }

    pub fn zeros(graph: &GasketGraph) -> Self {
        Self::constant(graph, 0.0)
    }

    pub fn from_fn(graph: &GasketGraph, f: impl Fn(usize, &VertexAddress) -> f64) -> Self {
        Self {
            tag: graph.tag(),
            values: graph
                .vertices
                .iter()
                .enumerate()
                .map(|(i, a)| f(i, a))
                .collect(),
        }
    }

    pub fn indicator(graph: &GasketGraph, vertex: usize) -> Self {
        Self::from_fn(graph, |i, _| if i == vertex { 1.0 } else { 0.0 })
    }

    pub fn tag(&self) -> GraphTag {
        self.tag
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check(&self, graph: &GasketGraph) -> Result<()> {
        if self.tag != graph.tag() {
            return domain(format!(
                "function lives on (N={}, m={}) but graph is (N={}, m={})",
                self.tag.n,
                self.tag.level,
                graph.n(),
                graph.level()
            ));
        }
        Ok(())
    }

    pub fn same_graph(&self, other: &VertexFunction) -> Result<()> {
        if self.tag != other.tag {
            return domain("vertex functions live on different graphs");
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            tag: self.tag,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_with(&self, other: &VertexFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_graph(other)?;
        Ok(Self {
            tag: self.tag,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Pointwise maximum `u ∨ v`.
    pub fn join(&self, other: &VertexFunction) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    /// Pointwise minimum `u ∧ v`.
    pub fn meet(&self, other: &VertexFunction) -> Result<Self> {
        self.zip_with(other, f64::min)
    }

    pub fn add(&self, other: &VertexFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VertexFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    pub fn positive_part(&self) -> Self {
        self.map(|x| x.max(0.0))
    }

    pub fn negative_part(&self) -> Self {
        self.map(|x| (-x).max(0.0))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
