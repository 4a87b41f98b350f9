//! Renormalized graph energies `W_m`, their polarization `<u, v>_m`, and
//! harmonic extension between levels.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{domain, GasketError, Result};
use crate::gasket::{build_level, restrict, CellRefinement, GasketGraph, VertexFunction};
use crate::numeric::CompensatedSum;

/// `((N+2)/N)^m`, evaluated as a power rather than accumulated.
pub fn renormalization(n: usize, level: u32) -> f64 {
    ((n as f64 + 2.0) / n as f64).powi(level as i32)
}

/// The level-m energy `W_m(u) = r_m * sum over unordered edges (u(x) - u(y))^2`.
#[derive(Debug, Clone)]
pub struct EnergyForm {
    graph: Arc<GasketGraph>,
    renormalization: f64,
}

impl EnergyForm {
    pub fn new(graph: Arc<GasketGraph>) -> Self {
        let renormalization = renormalization(graph.n(), graph.level());
        Self {
            graph,
            renormalization,
        }
    }

    pub fn graph(&self) -> &GasketGraph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<GasketGraph> {
        Arc::clone(&self.graph)
    }

    pub fn renormalization(&self) -> f64 {
        self.renormalization
    }

    pub fn energy(&self, u: &VertexFunction) -> Result<f64> {
        u.check(&self.graph)?;
        let x = u.values();
        let acc: CompensatedSum = self
            .graph
            .edges()
            .iter()
            .map(|&(a, b)| (x[a] - x[b]).powi(2))
            .collect();
        Ok(self.renormalization * acc.value())
    }

    /// `<u, v>_m`; the sum runs over ordered pairs, so each edge counts twice
    /// and `inner(u, u) = 2 * energy(u)`.
    pub fn inner(&self, u: &VertexFunction, v: &VertexFunction) -> Result<f64> {
        u.check(&self.graph)?;
        v.check(&self.graph)?;
        let (x, y) = (u.values(), v.values());
        let acc: CompensatedSum = self
            .graph
            .edges()
            .iter()
            .map(|&(a, b)| (x[a] - x[b]) * (y[a] - y[b]))
            .collect();
        Ok(2.0 * self.renormalization * acc.value())
    }

    /// Gradient of `W_m` with respect to the vertex values, i.e. the vector
    /// `x -> <u, e_x>_m`.
    pub fn gradient(&self, u: &VertexFunction) -> Result<Vec<f64>> {
        u.check(&self.graph)?;
        Ok(self.gradient_of(u.values()))
    }

    pub(crate) fn gradient_of(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let scale = 2.0 * self.renormalization;
        for &(a, b) in self.graph.edges() {
            let d = scale * (x[a] - x[b]);
            g[a] += d;
            g[b] -= d;
        }
        g
    }
}

/// Laplacian of the complete graph on `n` vertices.
pub(crate) fn complete_graph_laplacian(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { n as f64 - 1.0 } else { -1.0 })
}

/// Energy matrix of one cell split into its `n` sub-cells, in the local
/// numbering of [`CellRefinement`] (unnormalized).
pub(crate) fn refined_cell_laplacian(refinement: &CellRefinement) -> DMatrix<f64> {
    let n = refinement.n();
    let mut k = DMatrix::zeros(refinement.local_size(), refinement.local_size());
    for sub in 0..n {
        for a in 0..n {
            for b in 0..n {
                let (ia, ib) = (
                    refinement.subcell_corner(sub, a),
                    refinement.subcell_corner(sub, b),
                );
                k[(ia, ib)] += if a == b { n as f64 - 1.0 } else { -1.0 };
            }
        }
    }
    k
}

/// Midpoint values of the harmonic extension as linear combinations of the
/// `n` corner values of a cell.
#[derive(Debug, Clone)]
pub struct ExtensionRule {
    refinement: CellRefinement,
    coefficients: DMatrix<f64>,
}

impl ExtensionRule {
    pub fn new(n: usize) -> Self {
        let refinement = CellRefinement::new(n);
        let k = refined_cell_laplacian(&refinement);
        let p = refinement.midpoint_count();
        let k_mm = k.view((n, n), (p, p)).clone_owned();
        let k_mc = k.view((n, 0), (p, n)).clone_owned();
        let chol = k_mm
            .cholesky()
            .expect("midpoint block of a refined cell is positive definite");
        let coefficients = -chol.solve(&k_mc);
        Self {
            refinement,
            coefficients,
        }
    }

    pub fn refinement(&self) -> &CellRefinement {
        &self.refinement
    }

    /// Weight of corner `corner` in the value at midpoint slot `pair`.
    pub fn coefficient(&self, pair: usize, corner: usize) -> f64 {
        self.coefficients[(pair, corner)]
    }

    pub fn midpoints(&self, corners: &[f64]) -> Vec<f64> {
        (0..self.refinement.midpoint_count())
            .map(|p| {
                corners
                    .iter()
                    .enumerate()
                    .map(|(c, &x)| self.coefficients[(p, c)] * x)
                    .sum()
            })
            .collect()
    }
}

/// Energy-minimizing extension of `u` from `coarse` (level m) to `fine`
/// (level m+1). Each new vertex is a midpoint of exactly one m-cell and is
/// determined by that cell's corner values.
pub fn harmonic_extend(
    coarse: &GasketGraph,
    fine: &GasketGraph,
    u: &VertexFunction,
) -> Result<VertexFunction> {
    u.check(coarse)?;
    if fine.n() != coarse.n() || fine.level() != coarse.level() + 1 {
        return domain(format!(
            "harmonic extension needs consecutive levels, got m={} -> m={}",
            coarse.level(),
            fine.level()
        ));
    }
    let n = coarse.n();
    let rule = ExtensionRule::new(n);
    let mut out = vec![f64::NAN; fine.vertex_count()];
    for (i, &j) in fine.embedding_of(coarse)?.iter().enumerate() {
        out[j] = u.values()[i];
    }
    for cell in coarse.cells() {
        let corner_values: Vec<f64> = cell.iter().map(|&v| u.values()[v]).collect();
        let mids = rule.midpoints(&corner_values);
        for (slot, &(a, b)) in rule.refinement().pairs().iter().enumerate() {
            let weights: Vec<u64> = coarse
                .vertex(cell[a])
                .weights()
                .iter()
                .zip(coarse.vertex(cell[b]).weights())
                .map(|(x, y)| x + y)
                .collect();
            let idx = fine.index_of(&weights).ok_or_else(|| {
                GasketError::Domain("midpoint missing from the finer graph".into())
            })?;
            out[idx] = mids[slot];
        }
    }
    debug_assert!(out.iter().all(|x| x.is_finite()));
    VertexFunction::new(fine, out)
}

/// The harmonic function on `graph` with the given values at `p_1, ..., p_N`,
/// obtained by extending cell by cell from `V_0`.
pub fn harmonic_function(graph: &GasketGraph, boundary_values: &[f64]) -> Result<VertexFunction> {
    let n = graph.n();
    if boundary_values.len() != n {
        return domain(format!(
            "{} boundary values for N = {n}",
            boundary_values.len()
        ));
    }
    let rule = ExtensionRule::new(n);
    let refinement = rule.refinement();
    // corner values of every cell at the current level, cell-major
    let mut corners = boundary_values.to_vec();
    for _ in 0..graph.level() {
        let mut next = Vec::with_capacity(corners.len() * n);
        for parent in corners.chunks_exact(n) {
            let mids = rule.midpoints(parent);
            for sub in 0..n {
                for l in 0..n {
                    let local = refinement.subcell_corner(sub, l);
                    next.push(if local < n {
                        parent[local]
                    } else {
                        mids[local - n]
                    });
                }
            }
        }
        corners = next;
    }
    let mut out = vec![0.0; graph.vertex_count()];
    for (cell, values) in graph.cells().zip(corners.chunks_exact(n)) {
        for (&v, &x) in cell.iter().zip(values) {
            out[v] = x;
        }
    }
    VertexFunction::new(graph, out)
}

/// `W_k(u|V_k)` for `k = 0..=m`, where `u` lives on the level-m graph.
pub fn energy_profile(graph: &GasketGraph, u: &VertexFunction) -> Result<Vec<f64>> {
    u.check(graph)?;
    (0..=graph.level())
        .map(|k| {
            let coarse = Arc::new(build_level(graph.n(), k)?);
            let r = restrict(u, graph, &coarse)?;
            EnergyForm::new(coarse).energy(&r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn form(n: usize, m: u32) -> EnergyForm {
        EnergyForm::new(Arc::new(build_level(n, m).unwrap()))
    }

    fn on_boundary(g: &GasketGraph, b: &[f64]) -> VertexFunction {
        let mut u = VertexFunction::zeros(g);
        for (&v, &x) in g.boundary().iter().zip(b) {
            u.values_mut()[v] = x;
        }
        u
    }

    #[test]
    fn level_zero_energy() {
        let f = form(3, 0);
        let u = on_boundary(f.graph(), &[1.0, 0.0, 0.0]);
        assert_eq!(f.energy(&u).unwrap(), 2.0);
        let v = on_boundary(f.graph(), &[0.0, 1.0, 0.0]);
        assert_eq!(f.inner(&u, &v).unwrap(), -2.0);
        assert_eq!(f.inner(&u, &u).unwrap(), 4.0);
    }

    #[test]
    fn constants_have_no_energy() {
        let f = form(4, 3);
        let c = VertexFunction::constant(f.graph(), 3.5);
        let u = VertexFunction::from_fn(f.graph(), |i, _| (i as f64).cos());
        assert_eq!(f.energy(&c).unwrap(), 0.0);
        assert!(f.inner(&u, &c).unwrap().abs() < 1e-12);
    }

    #[test]
    fn renormalization_is_a_power() {
        for n in 2..6 {
            for m in 0..10 {
                let ratio = renormalization(n, m + 1) / renormalization(n, m);
                assert!((ratio - (n as f64 + 2.0) / n as f64).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn three_point_midpoint_rule() {
        // By symmetry q_ij = a (u_i + u_j) + b u_k; minimizing the refined
        // cell energy gives a = 2/5, b = 1/5.
        let rule = ExtensionRule::new(3);
        let mids = rule.midpoints(&[1.0, 0.0, 0.0]);
        assert_eq!(rule.refinement().pairs(), &[(0, 1), (0, 2), (1, 2)]);
        for (got, want) in mids.iter().zip([0.4, 0.4, 0.2]) {
            assert!((got - want).abs() < 1e-12);
        }
        let u = [0.3, -1.2, 2.0];
        let mids = rule.midpoints(&u);
        assert!((mids[0] - (0.4 * (u[0] + u[1]) + 0.2 * u[2])).abs() < 1e-12);
        assert!((mids[2] - (0.4 * (u[1] + u[2]) + 0.2 * u[0])).abs() < 1e-12);
    }

    #[test]
    fn extension_of_constant_is_constant() {
        let coarse = build_level(4, 2).unwrap();
        let fine = build_level(4, 3).unwrap();
        let e = harmonic_extend(&coarse, &fine, &VertexFunction::constant(&coarse, -2.0)).unwrap();
        assert!(e.values().iter().all(|&x| (x + 2.0).abs() < 1e-14));
    }

    #[test]
    fn harmonic_extension_energy_example() {
        let f0 = form(3, 0);
        let g1 = build_level(3, 1).unwrap();
        let u = on_boundary(f0.graph(), &[1.0, 0.0, 0.0]);
        let e = harmonic_extend(f0.graph(), &g1, &u).unwrap();
        let f1 = EnergyForm::new(Arc::new(g1));
        assert!((f1.energy(&e).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_function_examples() {
        let g = build_level(3, 2).unwrap();
        let one = harmonic_function(&g, &[1.0, 1.0, 1.0]).unwrap();
        assert!(one.values().iter().all(|&x| (x - 1.0).abs() < 1e-14));

        let h = harmonic_function(&g, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(h.values()[g.boundary()[0]], 1.0);
        assert!(h.values().iter().all(|&x| (0.0..=1.0).contains(&x)));

        for n in [3, 4] {
            for m in 0..=4 {
                let g = Arc::new(build_level(n, m).unwrap());
                let b: Vec<f64> = (0..n).map(|i| (i as f64 * 1.3).sin()).collect();
                let h = harmonic_function(&g, &b).unwrap();
                let w0 = form(n, 0)
                    .energy(&on_boundary(&build_level(n, 0).unwrap(), &b))
                    .unwrap();
                let wm = EnergyForm::new(Arc::clone(&g)).energy(&h).unwrap();
                assert!(
                    (wm - w0).abs() < 1e-12 * w0.max(1.0),
                    "N={n} m={m}: {wm} vs {w0}"
                );
            }
        }
    }

    #[test]
    fn harmonic_function_agrees_with_repeated_extension() {
        let b = [0.7, -0.1, 0.4, 1.0];
        let mut g = build_level(4, 0).unwrap();
        let mut u = on_boundary(&g, &b);
        for m in 1..=3 {
            let fine = build_level(4, m).unwrap();
            u = harmonic_extend(&g, &fine, &u).unwrap();
            g = fine;
        }
        let direct = harmonic_function(&g, &b).unwrap();
        for (x, y) in u.values().iter().zip(direct.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn energy_profile_examples() {
        let g = build_level(3, 3).unwrap();
        let c = VertexFunction::constant(&g, 2.0);
        assert!(energy_profile(&g, &c).unwrap().iter().all(|&w| w == 0.0));
        let h = harmonic_function(&g, &[0.2, 1.0, -0.5]).unwrap();
        let p = energy_profile(&g, &h).unwrap();
        assert!(p.iter().all(|w| (w - p[0]).abs() < 1e-12));
    }

    #[test]
    fn graph_mismatch_is_an_error() {
        let f = form(3, 2);
        let other = build_level(3, 1).unwrap();
        let u = VertexFunction::zeros(&other);
        assert!(f.energy(&u).is_err());
        assert!(harmonic_extend(&other, f.graph(), &VertexFunction::zeros(f.graph())).is_err());
        assert!(harmonic_function(&other, &[1.0, 2.0]).is_err());
    }
}
