//! Acceptance checks. Prints one `PASS`/`FAIL` line per criterion.
//!
//! Criteria 2 and 8 state identities that do not hold for the level-m
//! objects they name; they are evaluated literally and expected to print
//! `FAIL`. The process exits nonzero when any other criterion fails or
//! when one of those two unexpectedly passes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gasketflow::verify::{
    builtin_convex_specs, check_builtin_flow_properties, check_energy_inequalities,
    check_flow_properties, check_lattice_identity, check_locality, check_scalar_inequalities,
    FlowSuiteConfig, NamedSpec, Report, SampleConfig, DEFAULT_SEED,
};
use gasketflow::{
    build_level, energy_profile, harmonic_extend, harmonic_function, normal_derivative,
    poisson_solve, vertex_measure, BackwardEuler, BoundaryFunctional, EnergyForm, ExtensionRule,
    FlowConfig, MeasureWeights, RobinSpec, VertexFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

const EXPECTED_RED: [u32; 2] = [2, 8];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn summary(reports: &[Report]) -> String {
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let samples: usize = reports.iter().map(|r| r.samples).sum();
    let slack = reports
        .iter()
        .filter_map(|r| r.max_slack)
        .fold(f64::NEG_INFINITY, f64::max);
    format!("{violations} violations in {samples} samples, max slack {slack:.3e}")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let clock = Instant::now();
    let out = f();
    (out, clock.elapsed())
}

fn random_function(rng: &mut ChaCha8Rng, graph: &gasketflow::GasketGraph) -> VertexFunction {
    let values = (0..graph.vertex_count())
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    VertexFunction::new(graph, values).unwrap()
}

fn flow_config() -> FlowConfig {
    FlowConfig::new(0.05, 1.0, 1e-9).unwrap()
}

fn ensemble() -> Vec<Report> {
    let cfg = FlowSuiteConfig::new(DEFAULT_SEED, 20, 3, 3, flow_config());
    check_builtin_flow_properties(&cfg).unwrap()
}

fn select<'a>(reports: &'a [Report], property: &str) -> Vec<&'a Report> {
    reports
        .iter()
        .filter(|r| r.property.ends_with(&format!("/{property}")))
        .collect()
}

fn worst(reports: &[&Report]) -> f64 {
    reports
        .iter()
        .filter_map(|r| r.max_slack)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn c1() -> Outcome {
    let (reports, took) =
        timed(|| check_scalar_inequalities(&SampleConfig::new(DEFAULT_SEED, 100_000)).unwrap());
    let ok = reports.iter().all(Report::passed) && took < Duration::from_secs(5);
    outcome(
        ok,
        format!("{}, {:.2}s", summary(&reports), took.as_secs_f64()),
    )
}

fn c2() -> Outcome {
    let cfg = SampleConfig::new(DEFAULT_SEED, 1_000);
    let ((identity, inequalities), took) = timed(|| {
        (
            check_lattice_identity(&cfg).unwrap(),
            check_energy_inequalities(&cfg).unwrap(),
        )
    });
    let by_name: BTreeMap<&str, &Report> = inequalities
        .iter()
        .map(|r| (r.property.as_str(), r))
        .collect();
    let contraction = by_name["energy_contraction"];
    let domination = by_name["energy_domination"];
    let submodular = by_name["lattice_submodularity"];
    let coherent = by_name["lattice_identity_sign_coherent"];
    let ok = identity.passed()
        && contraction.passed()
        && domination.passed()
        && took < Duration::from_secs(10);
    outcome(
        ok,
        format!(
            "identity {}/{} violated; contraction {} and domination {} violations; \
             submodularity {} and sign-coherent equality {} violations; {:.2}s",
            identity.violations,
            identity.samples,
            contraction.violations,
            domination.violations,
            submodular.violations,
            coherent.violations,
            took.as_secs_f64()
        ),
    )
}

fn c3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst_gap: f64 = 0.0;
    for n in [3, 4] {
        for m in 0..=3 {
            let coarse = Arc::new(build_level(n, m).unwrap());
            let fine = Arc::new(build_level(n, m + 1).unwrap());
            let (ec, ef) = (
                EnergyForm::new(coarse.clone()),
                EnergyForm::new(fine.clone()),
            );
            for _ in 0..100 {
                let u = random_function(&mut rng, &coarse);
                let ext = harmonic_extend(&coarse, &fine, &u).unwrap();
                let (a, b) = (ef.energy(&ext).unwrap(), ec.energy(&u).unwrap());
                worst_gap = worst_gap.max((a - b).abs() / b.abs().max(1.0));
            }
        }
    }
    let rule = ExtensionRule::new(3).midpoints(&[1.0, 0.0, 0.0]);
    let rule_gap = rule
        .iter()
        .zip([0.4, 0.4, 0.2])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    outcome(
        worst_gap <= 1e-12 && rule_gap <= 1e-12,
        format!("max relative energy gap {worst_gap:.3e}, midpoints {rule:?}"),
    )
}

fn c4() -> Outcome {
    let graph = build_level(3, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 4);
    let mut drop: f64 = f64::NEG_INFINITY;
    for _ in 0..1_000 {
        let u = random_function(&mut rng, &graph);
        let profile = energy_profile(&graph, &u).unwrap();
        for w in profile.windows(2) {
            drop = drop.max((w[0] - w[1]) / w[1].abs().max(1.0));
        }
    }
    outcome(
        drop <= 1e-12,
        format!("1000 functions on V_4, largest relative decrease {drop:.3e}"),
    )
}

fn c5(reports: &[Report]) -> Outcome {
    let l2 = select(reports, "l2_contraction");
    let solver = select(reports, "solver");
    let ok = l2.len() == builtin_convex_specs(3).len()
        && l2
            .iter()
            .chain(&solver)
            .all(|r| r.passed() && r.samples == 20);
    outcome(
        ok,
        format!("{} specs, largest increase {:.3e}", l2.len(), worst(&l2)),
    )
}

fn c6(reports: &[Report]) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for property in ["positivity", "order", "linf_contraction"] {
        let rs = select(reports, property);
        let w = worst(&rs);
        ok &= !rs.is_empty() && w <= 1e-7;
        parts.push(format!("{property} {w:.3e}"));
    }
    outcome(ok, format!("max violation: {}", parts.join(", ")))
}

fn c7() -> Outcome {
    let specs: Vec<NamedSpec> = builtin_convex_specs(3)
        .into_iter()
        .filter(|s| ["quadratic", "absolute_value", "mixed"].contains(&s.name.as_str()))
        .collect();
    let mut cfg = FlowSuiteConfig::new(DEFAULT_SEED, 10, 3, 3, flow_config());
    cfg.tolerance = 1e-7;
    let reports = check_flow_properties(&cfg, &specs).unwrap();
    let lower = select(&reports, "sandwich_dirichlet");
    let upper = select(&reports, "sandwich_neumann");
    let ok = specs.len() == 3 && lower.len() == 3 && lower.iter().chain(&upper).all(|r| r.passed());
    outcome(
        ok,
        format!(
            "|S_inf u0| - S_B v0 <= {:.3e}, |S_B u0| - S v0 <= {:.3e}",
            worst(&lower),
            worst(&upper)
        ),
    )
}

fn c8() -> Outcome {
    let graph = Arc::new(build_level(3, 3).unwrap());
    let measure = vertex_measure(&graph, &MeasureWeights::uniform(3)).unwrap();
    let form = EnergyForm::new(graph.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 8);
    let mut literal: f64 = 0.0;
    let mut exact: f64 = 0.0;
    for beta in [0.5, 1.0, 2.0] {
        let spec = RobinSpec::uniform(3, BoundaryFunctional::Quadratic { beta });
        for _ in 0..5 {
            let f = random_function(&mut rng, &graph);
            let sol = poisson_solve(&form, &measure, &spec, &f, 1e-12, 100_000).unwrap();
            for (i, &p) in graph.boundary().iter().enumerate() {
                let nd = normal_derivative(&form, &sol.u, i).unwrap();
                let u = sol.u.values()[p];
                literal = literal.max((nd + beta * u).abs());
                exact =
                    exact.max((2.0 * nd + beta * u - measure.masses()[p] * f.values()[p]).abs());
            }
        }
    }
    outcome(
        literal <= 1e-6,
        format!("max |ND + beta u| = {literal:.3e}; max |2 ND + beta u - mu f| = {exact:.3e}"),
    )
}

fn c9() -> Outcome {
    let mut gap: f64 = 0.0;
    for m in 0..=4 {
        let graph = Arc::new(build_level(3, m).unwrap());
        let u = harmonic_function(&graph, &[1.0, 0.0, 0.0]).unwrap();
        let nd = normal_derivative(&EnergyForm::new(graph), &u, 0).unwrap();
        gap = gap.max((nd - 2.0).abs());
    }
    outcome(gap <= 1e-10, format!("m = 0..4, max |ND - 2| = {gap:.3e}"))
}

fn c10() -> Outcome {
    let graph = Arc::new(build_level(3, 3).unwrap());
    let measure = vertex_measure(&graph, &MeasureWeights::uniform(3)).unwrap();
    let form = EnergyForm::new(graph.clone());
    let spec = RobinSpec::neumann(3);
    let flow = flow_config();
    let stepper = BackwardEuler::new(&form, &measure, &spec, flow.tau).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 10);
    let mut drift: f64 = 0.0;
    for _ in 0..20 {
        let u0 = random_function(&mut rng, &graph);
        let start = measure.mean(&u0).unwrap();
        let traj = stepper.run(&u0, &flow).unwrap();
        for u in &traj.states {
            drift = drift.max((measure.mean(u).unwrap() - start).abs());
        }
    }
    outcome(
        drift <= 1e-9,
        format!("20 trajectories, max mean drift {drift:.3e}"),
    )
}

fn c11() -> Outcome {
    let form = EnergyForm::new(Arc::new(build_level(3, 3).unwrap()));
    let cfg = SampleConfig::new(DEFAULT_SEED, 100);
    let reports: Vec<Report> = builtin_convex_specs(3)
        .iter()
        .map(|s| check_locality(&form, &s.spec, &cfg).unwrap())
        .collect();
    outcome(
        reports.iter().all(|r| r.passed() && r.samples == 100),
        format!("{} specs, {}", reports.len(), summary(&reports)),
    )
}

/// Runs the binary and returns every output file except the run timings.
fn cli_outputs(args: &[&str], out: &Path, threads: Option<&str>) -> BTreeMap<String, Vec<u8>> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gasketflow"));
    cmd.args(args).arg("--out").arg(out);
    if let Some(t) = threads {
        cmd.env("GASKETFLOW_THREADS", t);
    }
    let status = cmd.output().unwrap().status;
    assert!(status.success(), "{args:?} exited with {status}");
    let mut files = BTreeMap::new();
    let entries: Vec<_> = if out.is_dir() {
        fs::read_dir(out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect()
    } else {
        vec![out.to_path_buf()]
    };
    for path in entries {
        let name = if out.is_dir() {
            path.file_name().unwrap().to_string_lossy().into_owned()
        } else {
            "report.json".to_string()
        };
        let bytes = fs::read(&path).unwrap();
        let bytes = if name == "manifest.json" {
            let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
            v.as_object_mut().unwrap().remove("timings_seconds");
            serde_json::to_vec(&v).unwrap()
        } else {
            bytes
        };
        files.insert(name, bytes);
    }
    files
}

fn c12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let evolve = root.join("evolve.json");
    fs::write(
        &evolve,
        r#"{"N": 3, "m": 3, "spec": [{"kind": "quadratic", "beta": 1.0}, "neumann", {"kind": "absolute_value", "beta": 1.0}],
            "tau": 0.05, "t_end": 0.5, "tol": 1e-10, "u0": {"kind": "random", "seed": 7}}"#,
    )
    .unwrap();
    let poisson = root.join("poisson.json");
    fs::write(
        &poisson,
        r#"{"N": 3, "m": 3, "weights": [0.2, 0.3, 0.5], "spec": [{"kind": "power", "beta": 1.0, "p": 3.0}, {"kind": "power", "beta": 1.0, "p": 3.0}, "dirichlet"],
            "f": {"kind": "random", "seed": 11}}"#,
    )
    .unwrap();
    let (evolve, poisson) = (evolve.to_str().unwrap(), poisson.to_str().unwrap());
    let jobs: [(&str, Vec<&str>); 5] = [
        ("gasket", vec!["gasket", "-N", "4", "-m", "2"]),
        (
            "extend",
            vec!["extend", "-N", "3", "-m", "3", "--boundary", "1,-0.5,0.25"],
        ),
        ("evolve", vec!["evolve", "--config", evolve]),
        ("poisson", vec!["poisson", "--config", poisson]),
        ("verify", vec!["verify", "energy", "--samples", "200"]),
    ];
    let mut compared = 0;
    let mut mismatched = Vec::new();
    for (name, args) in &jobs {
        let out = |tag: &str| {
            let p = root.join(format!("{name}-{tag}"));
            if *name == "verify" {
                p.with_extension("json")
            } else {
                p
            }
        };
        let a = cli_outputs(args, &out("a"), Some("1"));
        let b = cli_outputs(args, &out("b"), None);
        compared += a.len();
        if a != b {
            mismatched.push(name.to_string());
        }
        // re-running from the recorded manifest reproduces the outputs
        if ["evolve", "poisson"].contains(name) {
            let manifest = out("a").join("manifest.json");
            let rerun = cli_outputs(
                &[name, "--config", manifest.to_str().unwrap()],
                &out("c"),
                None,
            );
            let strip = |m: &BTreeMap<String, Vec<u8>>| {
                m.iter()
                    .filter(|(k, _)| *k != "manifest.json")
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect::<Vec<_>>()
            };
            if strip(&a) != strip(&rerun) {
                mismatched.push(format!("{name} (from manifest)"));
            }
        }
    }
    outcome(
        mismatched.is_empty(),
        if mismatched.is_empty() {
            format!("{compared} files identical across thread counts and manifest re-runs")
        } else {
            format!("outputs differ: {}", mismatched.join(", "))
        },
    )
}

fn main() {
    // `cargo test -- --list` and similar probes expect no work to be done
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let clock = Instant::now();
    let ensemble = ensemble();
    let ensemble_time = clock.elapsed();
    let checks: Vec<Check<'_>> = vec![
        (1, "scalar inequalities", Box::new(c1)),
        (2, "energy lattice identity and inequalities", Box::new(c2)),
        (3, "harmonic extension", Box::new(c3)),
        (4, "energy monotone in m", Box::new(c4)),
        (5, "flow L2 contraction", Box::new(|| c5(&ensemble))),
        (
            6,
            "positivity, order, Linf contraction",
            Box::new(|| c6(&ensemble)),
        ),
        (7, "Dirichlet/Neumann sandwich", Box::new(c7)),
        (8, "Robin optimality |ND + beta u|", Box::new(c8)),
        (9, "harmonic normal derivative", Box::new(c9)),
        (10, "Neumann mean conservation", Box::new(c10)),
        (11, "locality", Box::new(c11)),
        (12, "determinism", Box::new(c12)),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in &checks {
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let expected_red = EXPECTED_RED.contains(id);
        let note = match (o.pass, expected_red) {
            (false, true) => " [known: not attainable at finite level]",
            (true, true) => " [unexpected PASS]",
            _ => "",
        };
        println!("{verdict} {id:>2} {name}: {}{note}", o.detail);
        if o.pass == expected_red {
            unexpected.push(*id);
        }
    }
    println!(
        "flow ensemble {:.2}s, total {:.2}s",
        ensemble_time.as_secs_f64(),
        clock.elapsed().as_secs_f64()
    );
    if !unexpected.is_empty() {
        eprintln!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
