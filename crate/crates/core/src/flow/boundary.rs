//! The `N`-dimensional composite problem left after condensation:
//! minimize `1/2 x^T S x - c^T x + sum_i B_i(x_i)`.
//!
//! Solved by cyclic exact coordinate minimization; each coordinate update
//! is a single prox evaluation. The objective decreases monotonically, so no
//! step-size control is needed.

use nalgebra::{DMatrix, DVector};

use crate::error::{GasketError, Result};
use crate::robin::BoundaryFunctional;

pub(crate) struct BoundarySolve {
    pub x: Vec<f64>,
    pub sweeps: usize,
    pub residual: f64,
}

pub(crate) struct BoundaryProblem<'a> {
    pub schur: &'a DMatrix<f64>,
    pub rhs: &'a DVector<f64>,
    pub functionals: &'a [BoundaryFunctional],
    /// Coordinate held at zero (used to fix the gauge of pure Neumann problems).
    pub pinned: Option<usize>,
}

impl BoundaryProblem<'_> {
    fn gradient(&self, x: &[f64], i: usize) -> f64 {
        let row: f64 = (0..x.len()).map(|j| self.schur[(i, j)] * x[j]).sum();
        row - self.rhs[i]
    }

    /// Euclidean norm over coordinates of `dist(-grad_i, dB_i(x_i))`.
    pub fn kkt_residual(&self, x: &[f64]) -> f64 {
        let mut sq = 0.0;
        for (i, b) in self.functionals.iter().enumerate() {
            if self.pinned == Some(i) {
                continue;
            }
            let d = match b.subdifferential(x[i]) {
                Some(sub) => sub.distance(-self.gradient(x, i)),
                None => f64::INFINITY,
            };
            sq += d * d;
        }
        sq.sqrt()
    }

    pub fn solve(&self, start: &[f64], tol: f64, max_sweeps: usize) -> Result<BoundarySolve> {
        let mut x: Vec<f64> = start
            .iter()
            .zip(self.functionals)
            .map(|(&s, b)| {
                if b.eval(s).is_finite() {
                    Ok(s)
                } else {
                    b.prox(1.0, s)
                }
            })
            .collect::<Result<_>>()?;
        if let Some(p) = self.pinned {
            x[p] = 0.0;
        }
        let mut residual = self.kkt_residual(&x);
        let mut sweeps = 0;
        while residual > tol {
            if sweeps == max_sweeps {
                return Err(GasketError::Convergence {
                    iterations: sweeps,
                    residual,
                });
            }
            for (i, b) in self.functionals.iter().enumerate() {
                if self.pinned == Some(i) {
                    continue;
                }
                let diag = self.schur[(i, i)];
                let coupling: f64 = (0..x.len())
                    .filter(|&j| j != i)
                    .map(|j| self.schur[(i, j)] * x[j])
                    .sum();
                x[i] = b.prox(1.0 / diag, (self.rhs[i] - coupling) / diag)?;
            }
            sweeps += 1;
            residual = self.kkt_residual(&x);
        }
        Ok(BoundarySolve {
            x,
            sweeps,
            residual,
        })
    }
}
