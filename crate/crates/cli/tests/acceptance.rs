//! Acceptance suite: ten criteria, one PASS/FAIL line each. Exits non-zero
//! if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cuspsteklov::assembly::{FemSpace, Problem};
use cuspsteklov::geometry::{Domain, DomainSpec, WeightMode};
use cuspsteklov::linear_eigen::{convergence_study, minmax_check, ConvergenceOptions, SteklovSolver};
use cuspsteklov::mesh::ladder_mesh;
use cuspsteklov::p_solver::{constant_start, default_outer_tol, inverse_iteration, operator_properties, trace_constant, InnerSolveConfig};

/// I₁(1)/I₀(1), summed from the modified Bessel power series.
const BESSEL_QUOTIENT: f64 = 0.446389965896535;
const SEED: u64 = 20240;

type Outcome = Result<String, String>;

fn cusp(alpha: f64) -> Domain {
    Domain::Cusp(DomainSpec::power(alpha).unwrap())
}

fn space(domain: &Domain, h: f64, level: usize, mode: WeightMode) -> Result<FemSpace, String> {
    let mesh = ladder_mesh(domain, h, level).map_err(|e| e.to_string())?;
    FemSpace::new(mesh, domain.clone(), mode).map_err(|e| e.to_string())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within_time(detail: String, elapsed: Duration, limit: Duration) -> Outcome {
    if elapsed <= limit {
        Ok(detail)
    } else {
        Err(format!("{detail}; took {:.0} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()))
    }
}

fn disk_steklov() -> Outcome {
    let t = Instant::now();
    let s = space(&Domain::Disk { radius: 1.0 }, 0.2, 3, WeightMode::Unweighted)?;
    let ev = SteklovSolver::new(&s, Problem::Harmonic).and_then(|x| x.solve(7, false)).map_err(err)?.eigenvalues();
    let exact = [0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
    let worst = ev.iter().zip(&exact).skip(1).map(|(l, e)| (l - e).abs() / e).fold(0.0, f64::max);
    let detail = format!("{} vertices, λ₀ = {:.1e}, worst relative error {:.2e}", s.dim(), ev[0], worst);
    if ev[0].abs() > 1e-8 || worst > 0.01 {
        return Err(detail);
    }
    within_time(detail, t.elapsed(), Duration::from_secs(120))
}

fn disk_schrodinger() -> Outcome {
    let t = Instant::now();
    let s = space(&Domain::Disk { radius: 1.0 }, 0.2, 3, WeightMode::Unweighted)?;
    let l0 = SteklovSolver::new(&s, Problem::Schrodinger).and_then(|x| x.solve(1, false)).map_err(err)?.pairs[0].lambda;
    let rel = (l0 - BESSEL_QUOTIENT).abs() / BESSEL_QUOTIENT;
    let detail = format!("λ₀ = {l0:.9}, relative error {rel:.2e}");
    if rel > 0.01 {
        return Err(detail);
    }
    within_time(detail, t.elapsed(), Duration::from_secs(120))
}

fn harmonic_ground_state() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut meshes = 0;
    for alpha in [1.5, 2.0, 3.0] {
        for level in 0..2 {
            let s = space(&cusp(alpha), 0.3, level, WeightMode::Profile)?;
            let res = SteklovSolver::new(&s, Problem::Harmonic).and_then(|x| x.solve(2, false)).map_err(err)?;
            let (l0, l1) = (res.pairs[0].lambda, res.pairs[1].lambda);
            let v = &res.pairs[0].volume;
            let spread = v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max) / v[0].abs();
            let rayleigh = res.pairs[0].rayleigh.abs();
            if l0 > 1e-9 * l1 || spread > 1e-12 || rayleigh > 1e-9 * l1 {
                return Err(format!("α = {alpha}, level {level}: λ₀ = {l0:e}, λ₁ = {l1}, spread {spread:e}, R = {rayleigh:e}"));
            }
            worst = worst.max(rayleigh / l1);
            meshes += 1;
        }
    }
    Ok(format!("{meshes} meshes, constant eigenfunction, worst R(v₀)/λ₁ = {worst:.1e}"))
}

fn monotone_iteration() -> Outcome {
    let t = Instant::now();
    let mut runs = 0;
    let mut worst_rise: f64 = f64::NEG_INFINITY;
    for alpha in [1.5, 2.0, 3.0] {
        let s = space(&cusp(alpha), 0.2, 0, WeightMode::Profile)?;
        for p in [1.5, 2.0, 3.0] {
            let tol = default_outer_tol(p);
            let trace = inverse_iteration(&s, p, &constant_start(&s), &InnerSolveConfig::default(), tol, 500).map_err(err)?;
            let tag = format!("α = {alpha}, p = {p}");
            if !trace.converged {
                return Err(format!("{tag}: no convergence ({:?})", trace.failure));
            }
            for w in trace.steps.windows(2) {
                worst_rise = worst_rise.max(w[1].mu - w[0].mu);
                if w[1].mu > w[0].mu + 1e-12 {
                    return Err(format!("{tag}: μ rose by {:e} at step {}", w[1].mu - w[0].mu, w[1].n));
                }
            }
            for st in &trace.steps {
                if st.sobolev_p > st.mu * (1.0 + 1e-12) {
                    return Err(format!("{tag}: ‖w‖^p = {} exceeds μ = {} at step {}", st.sobolev_p, st.mu, st.n));
                }
            }
            let last = trace.steps.last().unwrap();
            if (last.mu - last.sobolev_p).abs() > tol * last.mu {
                return Err(format!("{tag}: μ and ‖w‖^p differ by {:e} at termination", (last.mu - last.sobolev_p).abs() / last.mu));
            }
            runs += 1;
        }
    }
    within_time(format!("{runs} runs, largest μ increment {worst_rise:.1e}"), t.elapsed(), Duration::from_secs(600))
}

fn p2_cross_oracle() -> Outcome {
    let s = space(&cusp(2.0), 0.2, 2, WeightMode::Profile)?;
    let l0 = SteklovSolver::new(&s, Problem::Schrodinger).and_then(|x| x.solve(1, false)).map_err(err)?.pairs[0].lambda;
    let trace = inverse_iteration(&s, 2.0, &constant_start(&s), &InnerSolveConfig::default(), default_outer_tol(2.0), 500).map_err(err)?;
    let rel = (trace.mu - l0).abs() / l0;
    let detail = format!("μ = {:.12}, λ₀ = {l0:.12}, relative gap {rel:.1e}", trace.mu);
    if trace.converged && rel <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn operator_suite() -> Outcome {
    let s = space(&cusp(2.0), 0.2, 0, WeightMode::Profile)?;
    let mut lines = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        for c in operator_properties(&s, p, 200, SEED).map_err(err)? {
            if !c.passed {
                return Err(format!("{} at p = {p}: {:e} > {:e}", c.name, c.worst, c.threshold));
            }
            lines.push(c.worst / c.threshold);
        }
    }
    let margin = lines.iter().cloned().fold(0.0, f64::max);
    Ok(format!("{} checks over 200 pairs, worst/threshold = {margin:.2}", lines.len()))
}

fn minmax() -> Outcome {
    let s = space(&cusp(2.0), 0.2, 0, WeightMode::Profile)?;
    let solver = SteklovSolver::new(&s, Problem::Harmonic).map_err(err)?;
    let res = solver.solve(5, false).map_err(err)?;
    let rep = minmax_check(&res, solver.exact_system(), &s.boundary_weighted_mass(), 200, SEED);
    let detail = format!("{} samples, max R − λ_n = {:.1e}, max |R(v_n) − λ_n| = {:.1e}", rep.samples, rep.max_violation, rep.max_self_error);
    if rep.max_violation <= 1e-9 && rep.max_self_error <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cusp_ladder() -> Outcome {
    let t = Instant::now();
    let opts = ConvergenceOptions { problem: Problem::Harmonic, k: 3, levels: 4, h_max: 0.3, constrained: false };
    let tables = convergence_study(&cusp(3.0), &opts, &[WeightMode::Profile, WeightMode::Unweighted]).map_err(err)?;
    let l1 = |i: usize| tables[i].rows.iter().map(|r| r.eigenvalues[1]).collect::<Vec<f64>>();
    let (w, u) = (l1(0), l1(1));
    let last = tables[0].rows.last().unwrap().rel_change[1];
    let decreasing = u.windows(2).all(|x| x[1] < x[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ");
    let detail = format!("weighted λ₁ [{}] last delta {:.1e}; unweighted λ₁ [{}]", fmt(&w), last, fmt(&u));
    if last > 0.05 || !decreasing {
        return Err(detail);
    }
    within_time(detail, t.elapsed(), Duration::from_secs(900))
}

fn trace_inequality() -> Outcome {
    let s = space(&cusp(2.0), 0.2, 0, WeightMode::Profile)?;
    let mut parts = Vec::new();
    for p in [2.0, 3.0] {
        let trace = inverse_iteration(&s, p, &constant_start(&s), &InnerSolveConfig::default(), 1e-10, 1000).map_err(err)?;
        if !trace.converged {
            return Err(format!("p = {p}: no convergence at outer tolerance 1e-10 ({:?})", trace.failure));
        }
        let rep = trace_constant(&s, &trace, 100, SEED).map_err(err)?;
        let detail = format!("p = {p}: S = {:.10}, max ratio {:.10}, limit ratio − 1 = {:.1e}", rep.s, rep.max_ratio, rep.limit_ratio - 1.0);
        if !rep.holds {
            return Err(detail);
        }
        parts.push(detail);
    }
    Ok(parts.join("; "))
}

fn result_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .filter(|e| e.file_name() != "manifest.json")
                .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap_or_default()))
                .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let tmp = std::env::temp_dir().join(format!("cuspsteklov-acceptance-{}", std::process::id()));
    let runs: [&[&str]; 5] = [
        &["spectrum", "--alpha", "3", "--hmax", "0.3", "--level", "1", "--k", "5"],
        &["spectrum", "--oracle-disk", "--problem", "schrodinger", "--hmax", "0.2", "--level", "1", "--k", "3"],
        &["principal", "--alpha", "2", "--p", "3", "--w0", "random"],
        &["convergence", "--alpha", "3", "--levels", "3", "--hmax", "0.3"],
        &["check", "--alpha", "2"],
    ];
    let mut compared = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = tmp.join(format!("run{i}-{rep}"));
            let status = Command::new(env!("CARGO_BIN_EXE_cuspsteklov"))
                .args(*args)
                .args(["--seed", "7", "--threads", "1", "--out"])
                .arg(&dir)
                .output()
                .map_err(err)?;
            if status.status.code() != Some(0) {
                return Err(format!("{args:?} exited with {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
            }
            outputs.push(result_files(&dir));
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            return Err(format!("{args:?}: result files differ between runs"));
        }
        compared += outputs[0].len();
    }
    let _ = std::fs::remove_dir_all(&tmp);
    Ok(format!("{} commands, {compared} result files byte-identical", runs.len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("disk Steklov oracle", disk_steklov),
        ("disk Schrödinger–Steklov oracle", disk_schrodinger),
        ("harmonic ground state is constant", harmonic_ground_state),
        ("inverse iteration monotonicity", monotone_iteration),
        ("p = 2 cross-oracle", p2_cross_oracle),
        ("operator property suite", operator_suite),
        ("min-max characterization", minmax),
        ("weighted vs unweighted cusp ladder", cusp_ladder),
        ("trace inequality certification", trace_inequality),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
