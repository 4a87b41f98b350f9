//! Exact elimination of every non-boundary vertex of `V_m`.
//!
//! The quadratic `1/2 v^T (2 r_m L + D) v - b^T v` (with `L` the graph
//! Laplacian and `D` a nonnegative diagonal) is reduced onto `p_1, ..., p_N`
//! by following the cell hierarchy: a vertex of `V_k \ V_{k-1}` is a midpoint
//! of exactly one (k-1)-cell and couples only to that cell's vertices, so the
//! (k-1)-cells can be condensed independently, finest level first. Each
//! parent keeps a small dense factorization for back-substitution.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::energy::complete_graph_laplacian;
use crate::error::{GasketError, Result};
use crate::gasket::{word_corner_weights, word_of_index, CellRefinement, GasketGraph};

struct ParentBlock {
    corners: Vec<usize>,
    midpoints: Vec<usize>,
    midpoint_factor: Cholesky<f64, Dyn>,
    corner_midpoint: DMatrix<f64>,
    /// `K_mm^{-1} K_mc`
    transfer: DMatrix<f64>,
}

pub(crate) struct Elimination {
    n: usize,
    refinement: CellRefinement,
    /// `levels[0]` holds the parents of the finest cells; the last entry is the root.
    levels: Vec<Vec<ParentBlock>>,
    boundary: Vec<usize>,
    schur: DMatrix<f64>,
}

/// Right-hand side after condensation: the reduced boundary vector plus the
/// per-parent `K_mm^{-1} g_m` needed to recover the midpoints.
pub(crate) struct ReducedRhs {
    pub boundary: DVector<f64>,
    midpoint_solves: Vec<Vec<DVector<f64>>>,
}

fn lookup(graph: &GasketGraph, weights: &[u64]) -> Result<usize> {
    graph
        .index_of(weights)
        .ok_or_else(|| GasketError::Domain("cell corner missing from graph".into()))
}

impl Elimination {
    /// `diagonal[v]` is the extra diagonal weight at vertex `v`.
    pub fn new(graph: &GasketGraph, renormalization: f64, diagonal: &[f64]) -> Result<Self> {
        let n = graph.n();
        let m = graph.level();
        let refinement = CellRefinement::new(n);
        let size = refinement.local_size();
        let base = complete_graph_laplacian(n) * (2.0 * renormalization);

        let mut cell_mats: Vec<DMatrix<f64>> = vec![base; graph.cell_count()];
        let mut levels = Vec::with_capacity(m as usize);
        for k in (1..=m).rev() {
            let parent_count = n.pow(k - 1);
            let mut blocks = Vec::with_capacity(parent_count);
            let mut parent_mats = Vec::with_capacity(parent_count);
            for p in 0..parent_count {
                let word = word_of_index(n, k - 1, p);
                let corner_weights: Vec<Vec<u64>> =
                    (0..n).map(|i| word_corner_weights(n, &word, i)).collect();
                let corners = corner_weights
                    .iter()
                    .map(|w| {
                        let scaled: Vec<u64> = w.iter().map(|x| x << (m - k + 1)).collect();
                        lookup(graph, &scaled)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let midpoints = refinement
                    .pairs()
                    .iter()
                    .map(|&(a, b)| {
                        let scaled: Vec<u64> = corner_weights[a]
                            .iter()
                            .zip(&corner_weights[b])
                            .map(|(x, y)| (x + y) << (m - k))
                            .collect();
                        lookup(graph, &scaled)
                    })
                    .collect::<Result<Vec<_>>>()?;

                let mut local = DMatrix::zeros(size, size);
                for child in 0..n {
                    let a = &cell_mats[p * n + child];
                    for r in 0..n {
                        for c in 0..n {
                            local[(
                                refinement.subcell_corner(child, r),
                                refinement.subcell_corner(child, c),
                            )] += a[(r, c)];
                        }
                    }
                }
                for (slot, &v) in midpoints.iter().enumerate() {
                    local[(n + slot, n + slot)] += diagonal[v];
                }
                let mid = size - n;
                let k_cc = local.view((0, 0), (n, n)).clone_owned();
                let k_cm = local.view((0, n), (n, mid)).clone_owned();
                let k_mc = local.view((n, 0), (mid, n)).clone_owned();
                let k_mm = local.view((n, n), (mid, mid)).clone_owned();
                let factor = k_mm.cholesky().ok_or_else(|| {
                    GasketError::Domain("midpoint block is not positive definite".into())
                })?;
                let transfer = factor.solve(&k_mc);
                parent_mats.push(k_cc - &k_cm * &transfer);
                blocks.push(ParentBlock {
                    corners,
                    midpoints,
                    midpoint_factor: factor,
                    corner_midpoint: k_cm,
                    transfer,
                });
            }
            cell_mats = parent_mats;
            levels.push(blocks);
        }

        let boundary = graph.boundary().to_vec();
        let mut schur = cell_mats.pop().expect("root cell");
        for (i, &v) in boundary.iter().enumerate() {
            schur[(i, i)] += diagonal[v];
        }
        Ok(Self {
            n,
            refinement,
            levels,
            boundary,
            schur,
        })
    }

    /// The `N x N` reduced matrix on `p_1, ..., p_N`.
    pub fn schur(&self) -> &DMatrix<f64> {
        &self.schur
    }

    pub fn reduce(&self, rhs: &[f64]) -> ReducedRhs {
        let n = self.n;
        let size = self.refinement.local_size();
        let finest = self.levels.first().map_or(1, |l| l.len() * n);
        let mut child_rhs: Vec<DVector<f64>> = vec![DVector::zeros(n); finest];
        let mut midpoint_solves = Vec::with_capacity(self.levels.len());
        for blocks in &self.levels {
            let mut parent_rhs = Vec::with_capacity(blocks.len());
            let mut solves = Vec::with_capacity(blocks.len());
            for (p, block) in blocks.iter().enumerate() {
                let mut local = DVector::zeros(size);
                for child in 0..n {
                    let g = &child_rhs[p * n + child];
                    for r in 0..n {
                        local[self.refinement.subcell_corner(child, r)] += g[r];
                    }
                }
                for (slot, &v) in block.midpoints.iter().enumerate() {
                    local[n + slot] += rhs[v];
                }
                let g_c = local.rows(0, n).clone_owned();
                let g_m = local.rows(n, size - n).clone_owned();
                let y = block.midpoint_factor.solve(&g_m);
                parent_rhs.push(g_c - &block.corner_midpoint * &y);
                solves.push(y);
            }
            child_rhs = parent_rhs;
            midpoint_solves.push(solves);
        }
        let mut boundary = child_rhs.pop().expect("root rhs");
        for (i, &v) in self.boundary.iter().enumerate() {
            boundary[i] += rhs[v];
        }
        ReducedRhs {
            boundary,
            midpoint_solves,
        }
    }

    /// Recovers all vertex values from the boundary values `x`.
    pub fn back_substitute(
        &self,
        reduced: &ReducedRhs,
        x: &[f64],
        vertex_count: usize,
    ) -> Vec<f64> {
        let mut out = vec![0.0; vertex_count];
        for (&v, &xi) in self.boundary.iter().zip(x) {
            out[v] = xi;
        }
        for (blocks, solves) in self.levels.iter().zip(&reduced.midpoint_solves).rev() {
            for (block, y) in blocks.iter().zip(solves) {
                let corner_values =
                    DVector::from_iterator(self.n, block.corners.iter().map(|&v| out[v]));
                let mids = y - &block.transfer * corner_values;
                for (&v, &val) in block.midpoints.iter().zip(mids.iter()) {
                    out[v] = val;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::renormalization;
    use crate::gasket::build_level;

    /// Dense assembly of `2 r L + D` for cross-checking.
    fn dense_operator(graph: &GasketGraph, diagonal: &[f64]) -> DMatrix<f64> {
        let r = renormalization(graph.n(), graph.level());
        let nv = graph.vertex_count();
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(diagonal));
        for &(a, b) in graph.edges() {
            h[(a, a)] += 2.0 * r;
            h[(b, b)] += 2.0 * r;
            h[(a, b)] -= 2.0 * r;
            h[(b, a)] -= 2.0 * r;
        }
        assert_eq!(h.nrows(), nv);
        h
    }

    #[test]
    fn matches_dense_schur_complement() {
        for (n, m) in [(3, 0), (3, 1), (3, 3), (4, 2), (2, 4)] {
            let g = build_level(n, m).unwrap();
            let nv = g.vertex_count();
            let diagonal: Vec<f64> = (0..nv).map(|i| 0.1 + 0.01 * i as f64).collect();
            let rhs: Vec<f64> = (0..nv).map(|i| (i as f64 * 0.7).sin()).collect();
            let elim = Elimination::new(&g, renormalization(n, m), &diagonal).unwrap();

            let h = dense_operator(&g, &diagonal);
            let sol = h
                .clone()
                .lu()
                .solve(&DVector::from_column_slice(&rhs))
                .unwrap();
            let reduced = elim.reduce(&rhs);
            let xb = elim.schur().clone().lu().solve(&reduced.boundary).unwrap();
            let full = elim.back_substitute(&reduced, xb.as_slice(), nv);
            for (a, b) in full.iter().zip(sol.iter()) {
                assert!((a - b).abs() < 1e-10, "N={n} m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn laplacian_schur_is_level_zero_energy() {
        // Eliminating the interior of a pure energy form reproduces W_0.
        for (n, m) in [(3, 3), (4, 2)] {
            let g = build_level(n, m).unwrap();
            let elim =
                Elimination::new(&g, renormalization(n, m), &vec![0.0; g.vertex_count()]).unwrap();
            let expected = complete_graph_laplacian(n) * 2.0;
            assert!((elim.schur() - expected).abs().max() < 1e-10);
        }
    }
}
