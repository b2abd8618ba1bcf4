//! The five experiments. Each returns the names of the files it wrote.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use cuspsteklov::assembly::{FemSpace, Problem};
use cuspsteklov::geometry::{CuspFunction, Domain, DomainSpec, WeightMode};
use cuspsteklov::linear_eigen::{convergence_study, minmax_check, ConvergenceOptions, SteklovSolver};
use cuspsteklov::mesh::{format_mesh, ladder_mesh, mesh_quality, QualityReport, TriMesh};
use cuspsteklov::numerics::norm_inf;
use cuspsteklov::p_solver::{
    constant_start, default_outer_tol, eigen_residual, inverse_iteration, operator_properties, random_fem_function,
    trace_constant, InnerSolveConfig, IterationStep, PropertyCheck,
};

use crate::config::Settings;
use crate::error::{CliError, CliResult};
use crate::output::{num, write_atomic, write_json, Csv};

#[derive(Deserialize)]
#[serde(untagged)]
enum GammaFile {
    Knots(Vec<[f64; 2]>),
    Table { samples: Vec<[f64; 2]> },
}

/// Number of interior sample points used to validate a tabulated profile.
const GAMMA_VALIDATION_SAMPLES: usize = 1000;

fn load_gamma(path: &Path) -> CliResult<CuspFunction> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let parsed: GammaFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{} is not a list of [t, gamma] knots: {e}", path.display())))?;
    let samples = match parsed {
        GammaFile::Knots(s) | GammaFile::Table { samples: s } => s,
    };
    let gamma = CuspFunction::Tabulated { samples };
    gamma.check_admissible()?;
    gamma
        .validate(GAMMA_VALIDATION_SAMPLES)
        .map_err(|v| cuspsteklov::Error::Domain(format!("inadmissible cusp profile: {v}")))?;
    Ok(gamma)
}

pub fn domain(s: &Settings) -> CliResult<Domain> {
    if s.oracle_disk {
        return Ok(Domain::Disk { radius: s.radius });
    }
    let gamma = match &s.gamma_file {
        Some(path) => load_gamma(path)?,
        None => CuspFunction::power(s.alpha.unwrap_or(2.0))?,
    };
    Ok(Domain::Cusp(DomainSpec::new(gamma)?))
}

fn weight_mode(s: &Settings) -> WeightMode {
    if s.oracle_disk || s.weighted == Some(false) {
        WeightMode::Unweighted
    } else {
        WeightMode::Profile
    }
}

#[derive(Serialize)]
struct MeshSummary {
    level: usize,
    h_max: f64,
    vertices: usize,
    triangles: usize,
    boundary_vertices: usize,
}

fn summary(s: &Settings, mesh: &TriMesh) -> MeshSummary {
    MeshSummary {
        level: s.level,
        h_max: s.hmax,
        vertices: mesh.vertices.len(),
        triangles: mesh.triangles.len(),
        boundary_vertices: mesh.boundary_flags.iter().filter(|&&b| b).count(),
    }
}

#[derive(Serialize)]
struct MeshReport<'a> {
    domain: &'a Domain,
    level: usize,
    quality: QualityReport,
}

/// Returns the mesh file path and whether `out` named the file itself.
fn mesh_target(out: &Path) -> (PathBuf, PathBuf) {
    if out.extension().is_some() {
        let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
        (out.to_path_buf(), dir)
    } else {
        (out.join("mesh.txt"), out.to_path_buf())
    }
}

pub fn cmd_mesh(s: &Settings) -> CliResult<(PathBuf, Vec<String>)> {
    let domain = domain(s)?;
    let mesh = ladder_mesh(&domain, s.hmax, s.level)?;
    let (file, dir) = mesh_target(&s.out);
    write_atomic(&file, &format_mesh(&mesh))?;
    let report = MeshReport { domain: &domain, level: s.level, quality: mesh_quality(&mesh) };
    let json = crate::output::to_json(&report);
    print!("{json}");
    let quality = dir.join("quality.json");
    write_atomic(&quality, &json)?;
    Ok((dir, vec![file.display().to_string(), quality.display().to_string()]))
}

#[derive(Serialize)]
struct PairRow {
    index: usize,
    lambda: f64,
    residual: f64,
    rayleigh: f64,
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    domain: &'a Domain,
    problem: Problem,
    constrained: bool,
    weight_mode: WeightMode,
    mesh: MeshSummary,
    eigenvalues: Vec<f64>,
    pairs: Vec<PairRow>,
}

pub fn cmd_spectrum(s: &Settings) -> CliResult<Vec<String>> {
    let domain = domain(s)?;
    let mesh = ladder_mesh(&domain, s.hmax, s.level)?;
    let mode = weight_mode(s);
    let space = FemSpace::new(mesh, domain.clone(), mode)?;
    let k = s.k.unwrap_or(6);
    let res = SteklovSolver::new(&space, s.problem)?.solve(k, s.constrained)?;
    let report = SpectrumReport {
        domain: &domain,
        problem: s.problem,
        constrained: s.constrained,
        weight_mode: mode,
        mesh: summary(s, space.mesh()),
        eigenvalues: res.eigenvalues(),
        pairs: res
            .pairs
            .iter()
            .enumerate()
            .map(|(index, p)| PairRow { index, lambda: p.lambda, residual: p.residual, rayleigh: p.rayleigh })
            .collect(),
    };
    let json = s.out.join("spectrum.json");
    write_json(&json, &report)?;
    let mut header = vec!["vertex".to_string(), "x1".into(), "x2".into()];
    header.extend((0..res.pairs.len()).map(|j| format!("v{j}")));
    let mut csv = Csv::new(&header.iter().map(String::as_str).collect::<Vec<_>>());
    for (row, &v) in res.boundary.iter().enumerate() {
        let x = space.mesh().vertices[v];
        let mut cells = vec![v.to_string(), num(x[0]), num(x[1])];
        cells.extend(res.pairs.iter().map(|p| num(p.trace[row])));
        csv.row(&cells);
    }
    let traces = s.out.join("traces.csv");
    csv.write(&traces)?;
    Ok(vec![json.display().to_string(), traces.display().to_string()])
}

fn start_function(s: &Settings, space: &FemSpace) -> CliResult<Vec<f64>> {
    match s.w0.as_str() {
        "const" => Ok(constant_start(space)),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            Ok(random_fem_function(space, &mut rng, 2))
        }
        other => {
            let path = &other["file:".len()..];
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))?;
            let values: Vec<f64> = text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|e| CliError::Usage(format!("{path}: bad value {t}: {e}"))))
                .collect::<CliResult<_>>()?;
            if values.len() != space.dim() {
                return Err(CliError::Usage(format!("{path} has {} values, the mesh has {} vertices", values.len(), space.dim())));
            }
            Ok(values)
        }
    }
}

#[derive(Serialize)]
struct TraceReport<'a> {
    domain: &'a Domain,
    weight_mode: WeightMode,
    mesh: MeshSummary,
    w0: &'a str,
    p: f64,
    outer_tol: f64,
    converged: bool,
    mu: f64,
    residual: Option<f64>,
    failure: &'a Option<String>,
    steps: &'a [IterationStep],
}

pub fn cmd_principal(s: &Settings) -> CliResult<Vec<String>> {
    let domain = domain(s)?;
    let mesh = ladder_mesh(&domain, s.hmax, s.level)?;
    let mode = weight_mode(s);
    let space = FemSpace::new(mesh, domain.clone(), mode)?;
    let w0 = start_function(s, &space)?;
    let tol = s.outer_tol.unwrap_or_else(|| default_outer_tol(s.p));
    let trace = inverse_iteration(&space, s.p, &w0, &InnerSolveConfig::default(), tol, s.max_outer)?;
    let report = TraceReport {
        domain: &domain,
        weight_mode: mode,
        mesh: summary(s, space.mesh()),
        w0: &s.w0,
        p: trace.p,
        outer_tol: trace.outer_tol,
        converged: trace.converged,
        mu: trace.mu,
        residual: trace.residual,
        failure: &trace.failure,
        steps: &trace.steps,
    };
    let json = s.out.join("trace.json");
    write_json(&json, &report)?;
    let mut csv = Csv::new(&["vertex", "x1", "x2", "w"]);
    for (v, (x, w)) in space.mesh().vertices.iter().zip(&trace.w_limit).enumerate() {
        csv.row(&[v.to_string(), num(x[0]), num(x[1]), num(*w)]);
    }
    let ef = s.out.join("eigenfunction.csv");
    csv.write(&ef)?;
    if !trace.converged {
        let why = trace.failure.clone().unwrap_or_else(|| format!("{} outer steps without reaching {tol:e}", trace.steps.len()));
        return Err(CliError::NonConvergence(why));
    }
    Ok(vec![json.display().to_string(), ef.display().to_string()])
}

#[derive(Serialize)]
struct ModeSummary {
    weight_mode: WeightMode,
    extrapolated: Vec<f64>,
    observed_order: Vec<Option<f64>>,
    /// λ₁ on each level.
    lambda1: Vec<f64>,
    lambda1_last_rel_change: Option<f64>,
    lambda1_strictly_decreasing: bool,
}

#[derive(Serialize)]
struct LadderSummary<'a> {
    domain: &'a Domain,
    problem: Problem,
    constrained: bool,
    h_max: f64,
    levels: usize,
    modes: Vec<ModeSummary>,
}

pub fn cmd_convergence(s: &Settings) -> CliResult<Vec<String>> {
    let domain = domain(s)?;
    let k = s.k.unwrap_or(3);
    if k < 2 {
        return Err(CliError::Usage("convergence needs --k of at least 2 to follow λ₁".into()));
    }
    if s.levels < 2 {
        return Err(CliError::Usage(format!("--levels must be at least 2, got {}", s.levels)));
    }
    let modes: Vec<WeightMode> = match (s.oracle_disk, s.weighted) {
        (true, _) | (false, Some(false)) => vec![WeightMode::Unweighted],
        (false, Some(true)) => vec![WeightMode::Profile],
        (false, None) => vec![WeightMode::Profile, WeightMode::Unweighted],
    };
    let opts = ConvergenceOptions { problem: s.problem, k, levels: s.levels, h_max: s.hmax, constrained: s.constrained };
    let tables = convergence_study(&domain, &opts, &modes)?;
    let mut csv = Csv::new(&["weight_mode", "level", "vertices", "triangles", "boundary_dofs", "h_max", "index", "lambda", "rel_change"]);
    let mut out_modes = Vec::new();
    for t in &tables {
        let mode = serde_json::to_value(t.weight_mode).unwrap().as_str().unwrap_or_default().to_string();
        for r in &t.rows {
            for (j, l) in r.eigenvalues.iter().enumerate() {
                let rc = r.rel_change.get(j).map(|&x| num(x)).unwrap_or_default();
                csv.row(&[
                    mode.clone(),
                    r.level.to_string(),
                    r.vertices.to_string(),
                    r.triangles.to_string(),
                    r.boundary_dofs.to_string(),
                    num(r.h_max),
                    j.to_string(),
                    num(*l),
                    rc,
                ]);
            }
        }
        let lambda1: Vec<f64> = t.rows.iter().map(|r| r.eigenvalues[1]).collect();
        out_modes.push(ModeSummary {
            weight_mode: t.weight_mode,
            extrapolated: t.extrapolated.clone(),
            observed_order: t.observed_order.clone(),
            lambda1_last_rel_change: t.rows.last().and_then(|r| r.rel_change.get(1).copied()),
            lambda1_strictly_decreasing: lambda1.windows(2).all(|w| w[1] < w[0]),
            lambda1,
        });
    }
    let ladder = s.out.join("ladder.csv");
    csv.write(&ladder)?;
    let summary = LadderSummary { domain: &domain, problem: s.problem, constrained: s.constrained, h_max: s.hmax, levels: s.levels, modes: out_modes };
    let json = s.out.join("summary.json");
    write_json(&json, &summary)?;
    Ok(vec![ladder.display().to_string(), json.display().to_string()])
}

#[derive(Serialize)]
struct CheckReport<'a> {
    domain: &'a Domain,
    mesh: MeshSummary,
    perturbed_weight: bool,
    seed: u64,
    pairs: usize,
    checks: Vec<PropertyCheck>,
    passed: bool,
}

fn check(name: impl Into<String>, worst: f64, threshold: f64) -> PropertyCheck {
    PropertyCheck { name: name.into(), worst, threshold, passed: worst <= threshold }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Exponents exercised by the operator suite.
const CHECK_EXPONENTS: [f64; 3] = [1.5, 2.0, 3.0];

pub fn cmd_check(s: &Settings) -> CliResult<Vec<String>> {
    let domain = domain(s)?;
    let mesh = ladder_mesh(&domain, s.hmax, s.level)?;
    let mode = weight_mode(s);
    let mut space = FemSpace::new(mesh, domain.clone(), mode)?;
    if s.perturb_weight {
        space = space.with_perturbed_weight();
    }
    let mut checks = Vec::new();

    // matrix invariants
    let k = space.stiffness();
    let ones = vec![1.0; space.dim()];
    checks.push(check("stiffness annihilates constants", norm_inf(&k.matvec(&ones)) / k.norm_inf(), 1e-13));
    checks.push(check("mass total equals area", rel_gap(space.mass().quad_form(&ones), space.area()), 1e-13));
    let bw = space.boundary_weighted_mass();
    checks.push(check("boundary mass total equals weighted perimeter", rel_gap(bw.quad_form(&ones), space.weighted_perimeter()), 1e-13));

    // Rayleigh identities ⟨A(f), f⟩ = ‖f‖^p and ⟨B(f), f⟩ = ‖f‖^p_{L^p_w}
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let (mut wa, mut wb) = (0.0f64, 0.0f64);
    for (i, &p) in CHECK_EXPONENTS.iter().enumerate() {
        for trial in 0..4 {
            let f = random_fem_function(&space, &mut rng, i + trial);
            let af = space.apply_a(&f, p)?;
            let bf = space.apply_b(&f, p)?;
            let dot = |a: &[f64]| a.iter().zip(&f).map(|(x, y)| x * y).sum::<f64>();
            wa = wa.max(rel_gap(dot(&af), space.sobolev_pnorm(&f, p)?));
            wb = wb.max(rel_gap(dot(&bf), space.boundary_weighted_pnorm(&f, p)?));
        }
    }
    checks.push(check("Rayleigh identity for A", wa, 1e-12));
    checks.push(check("Rayleigh identity for B", wb, 1e-12));

    // operator suite
    for &p in &CHECK_EXPONENTS {
        for c in operator_properties(&space, p, s.pairs, s.seed)? {
            checks.push(PropertyCheck { name: format!("{} (p = {p})", c.name), ..c });
        }
    }

    // min-max characterization of the linear pencil
    let solver = SteklovSolver::new(&space, Problem::Harmonic)?;
    let res = solver.solve(5, false)?;
    let mm = minmax_check(&res, solver.exact_system(), &bw, 100, s.seed);
    checks.push(check("min-max upper bound", mm.max_violation.max(0.0), 1e-9));
    checks.push(check("min-max eigenvector quotient", mm.max_self_error, 1e-10));

    // principal p = 2 pair: the limit attains the trace constant
    let trace = inverse_iteration(&space, 2.0, &constant_start(&space), &InnerSolveConfig::default(), default_outer_tol(2.0), s.max_outer)?;
    if trace.converged {
        let tc = trace_constant(&space, &trace, 20, s.seed)?;
        checks.push(check("trace inequality", (tc.max_ratio - 1.0).max(0.0), 1e-8));
        checks.push(check("trace equality at the limit", (tc.limit_ratio - 1.0).abs(), 1e-8));
        checks.push(check("principal eigen-residual", eigen_residual(&space, trace.mu, &trace.w_limit, 2.0)?, 1e-6));
    } else {
        checks.push(check("principal inverse iteration converged", 1.0, 0.0));
    }

    let passed = checks.iter().all(|c| c.passed);
    let report = CheckReport { domain: &domain, mesh: summary(s, space.mesh()), perturbed_weight: s.perturb_weight, seed: s.seed, pairs: s.pairs, checks, passed };
    let json = s.out.join("report.json");
    write_json(&json, &report)?;
    if let Some(first) = report.checks.iter().find(|c| !c.passed) {
        return Err(CliError::Property(format!("{} (worst {:e}, threshold {:e})", first.name, first.worst, first.threshold)));
    }
    Ok(vec![json.display().to_string()])
}
