//! JSON and CSV renderings for plotting and golden comparisons.
//!
//! Floats are written with Rust's `Display`, the shortest decimal string
//! that parses back to the same `f64`.

use std::fmt::Write;

use serde::Serialize;

use crate::flow::Trajectory;
use crate::gasket::{GasketGraph, VertexFunction};
use crate::measure::VertexMeasure;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphExport {
    #[serde(rename = "N")]
    pub n: usize,
    pub m: u32,
    pub vertices: Vec<Vec<u64>>,
    pub cells: Vec<Vec<usize>>,
    pub edges: Vec<[usize; 2]>,
    pub boundary: Vec<usize>,
}

impl GraphExport {
    pub fn new(graph: &GasketGraph) -> Self {
        Self {
            n: graph.n(),
            m: graph.level(),
            vertices: graph
                .vertices()
                .iter()
                .map(|a| a.weights().to_vec())
                .collect(),
            cells: graph.cells().map(<[usize]>::to_vec).collect(),
            edges: graph.edges().iter().map(|&(a, b)| [a, b]).collect(),
            boundary: graph.boundary().to_vec(),
        }
    }
}

fn push_row(out: &mut String, first: impl std::fmt::Display, rest: impl IntoIterator<Item = f64>) {
    write!(out, "{first}").unwrap();
    for x in rest {
        write!(out, ",{x}").unwrap();
    }
    out.push('\n');
}

/// `index,x_1,...,x_{N-1}` per vertex.
pub fn coordinates_csv(graph: &GasketGraph) -> String {
    let mut out = String::from("index");
    for k in 1..graph.n() {
        write!(out, ",x_{k}").unwrap();
    }
    out.push('\n');
    for (i, p) in graph.coordinates().into_iter().enumerate() {
        push_row(&mut out, i, p);
    }
    out
}

/// `time,vertex_0,...` with one row per recorded state.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let width = traj.states.first().map_or(0, VertexFunction::len);
    let mut out = String::from("time");
    for v in 0..width {
        write!(out, ",vertex_{v}").unwrap();
    }
    out.push('\n');
    for (t, u) in traj.times.iter().zip(&traj.states) {
        push_row(&mut out, t, u.values().iter().copied());
    }
    out
}

/// `index,value`.
pub fn function_csv(u: &VertexFunction) -> String {
    let mut out = String::from("index,value\n");
    for (i, x) in u.values().iter().enumerate() {
        push_row(&mut out, i, [*x]);
    }
    out
}

/// `index,mass`.
pub fn masses_csv(measure: &VertexMeasure) -> String {
    let mut out = String::from("index,mass\n");
    for (i, x) in measure.masses().iter().enumerate() {
        push_row(&mut out, i, [*x]);
    }
    out
}

/// `m,W_m` for a profile starting at level 0.
pub fn energy_profile_csv(profile: &[f64]) -> String {
    let mut out = String::from("m,W_m\n");
    for (m, w) in profile.iter().enumerate() {
        push_row(&mut out, m, [*w]);
    }
    out
}
