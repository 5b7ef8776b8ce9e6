//! The five commands. Each returns an [`Outcome`] holding the exit code and
//! the text destined for stdout/stderr; files named by `--out` are written
//! here.

use std::fs;
use std::path::PathBuf;

use descriptor_core::causality::{causality_report, maximal_causal_b};
use descriptor_core::fracops::{FracOrder, SeriesControl};
use descriptor_core::oracle::{
    max_relative_difference, overlap_window, recursive_solve_invertible, stacked_solve,
};
use descriptor_core::pencil::{is_regular, weierstrass_decompose, DecompositionOptions, Pencil, WeierstrassForm, DEFAULT_CLUSTER_TOL};
use descriptor_core::solver::{
    check_consistency, check_fractional_consistency, check_fractional_solvability, required_input_index,
    solve_fractional, solve_standard, ConsistencyResult, DescriptorSystem, InputSignal, SolveOptions, Trajectory,
    DEFAULT_CONSISTENCY_TOL,
};
use descriptor_core::{DMatrix, DVector};

use crate::error::CliError;
use crate::format::{read_json, to_json, SystemFile, WeierstrassFile};
use crate::report::{
    eigenvalue_entries, AnalyzeReport, CausalityOut, ConsistencyEntry, CrossCheckEntry, ProjectionEntry, RegularityEntry,
    ResidualEntry, SimulationReport, SolvabilityEntry, StructureEntry, VerifyReport, PROJECTION_NOTE,
};
use crate::trajectory_csv::trajectory_to_csv;

/// Relative agreement required between the closed form and the oracles.
pub const CROSS_CHECK_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Simulate,
    SimulateFrac,
    Causality,
    Verify,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub system_path: PathBuf,
    pub horizon: Option<usize>,
    pub order: Option<f64>,
    pub tol: f64,
    pub ml_tol: f64,
    pub ml_max_terms: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub project: bool,
    pub max_b: bool,
    pub zero_pad: bool,
}

impl RunConfig {
    pub fn new(command: Command, system_path: impl Into<PathBuf>) -> Self {
        let defaults = DecompositionOptions::default();
        let series = SeriesControl::default();
        Self {
            command,
            system_path: system_path.into(),
            horizon: None,
            order: None,
            tol: defaults.tol,
            ml_tol: series.tol,
            ml_max_terms: series.max_terms,
            seed: defaults.seed,
            out: None,
            project: false,
            max_b: false,
            zero_pad: false,
        }
    }

    fn decomposition(&self) -> DecompositionOptions {
        DecompositionOptions {
            tol: self.tol,
            cluster_tol: DEFAULT_CLUSTER_TOL,
            seed: self.seed,
        }
    }

    fn series(&self) -> Result<SeriesControl, CliError> {
        SeriesControl::new(self.ml_tol, self.ml_max_terms).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn failure(err: &CliError, stderr_prefix: String) -> Self {
        Self {
            exit_code: err.exit_code(),
            stdout: String::new(),
            stderr: format!("{stderr_prefix}error: {err}\n"),
        }
    }
}

pub fn run(cfg: &RunConfig) -> Outcome {
    let result = match cfg.command {
        Command::Analyze => analyze(cfg),
        Command::Simulate => simulate(cfg, false),
        Command::SimulateFrac => simulate(cfg, true),
        Command::Causality => causality(cfg),
        Command::Verify => verify(cfg),
    };
    result.unwrap_or_else(|(err, partial)| Outcome::failure(&err, partial))
}

type CmdResult = Result<Outcome, (CliError, String)>;

fn bare<T>(r: Result<T, CliError>) -> Result<T, (CliError, String)> {
    r.map_err(|e| (e, String::new()))
}

/// Writes `primary` to `--out` when given, else to stdout; the secondary
/// report goes to stdout when the primary went to a file, else to stderr.
fn emit(cfg: &RunConfig, primary: String, secondary: Option<String>, exit_code: i32) -> Result<Outcome, CliError> {
    let mut outcome = Outcome {
        exit_code,
        ..Outcome::default()
    };
    match &cfg.out {
        Some(path) => {
            fs::write(path, primary).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            outcome.stdout = secondary.unwrap_or_default();
        }
        None => {
            outcome.stdout = primary;
            outcome.stderr = secondary.unwrap_or_default();
        }
    }
    Ok(outcome)
}

struct Loaded {
    file: SystemFile,
    pencil: Pencil,
}

fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    let file: SystemFile = read_json(&cfg.system_path)?;
    let pencil = file.pencil()?;
    Ok(Loaded { file, pencil })
}

fn form_for(loaded: &Loaded, cfg: &RunConfig) -> Result<(WeierstrassForm, &'static str), CliError> {
    match &loaded.file.wf {
        Some(wf) => Ok((wf.to_form(&loaded.pencil, cfg.tol)?, "supplied")),
        None => Ok((weierstrass_decompose(&loaded.pencil, &cfg.decomposition())?, "computed")),
    }
}

fn input_for(loaded: &Loaded, m: usize) -> Result<InputSignal, CliError> {
    let samples = loaded.file.input_samples()?;
    match loaded.file.b(m)? {
        Some(b) => InputSignal::shaped(&b, &samples).map_err(CliError::from),
        None => InputSignal::new(samples).map_err(CliError::from),
    }
}

fn horizon_for(loaded: &Loaded, cfg: &RunConfig) -> Result<usize, CliError> {
    cfg.horizon.or(loaded.file.horizon).ok_or_else(|| CliError::missing("horizon"))
}

fn analyze(cfg: &RunConfig) -> CmdResult {
    let loaded = bare(load(cfg))?;
    let opts = cfg.decomposition();
    let regularity = is_regular(&loaded.pencil, opts.tol, opts.seed);
    let mut report = AnalyzeReport {
        verdict: "regular pencil",
        m: loaded.pencil.dim(),
        tol: opts.tol,
        seed: opts.seed,
        regularity: RegularityEntry::from(&regularity),
        structure: None,
        error: None,
    };
    let mut failure = None;
    if !regularity.regular {
        report.verdict = "singular pencil";
        failure = Some(CliError::SingularPencil("det(sF - G) vanishes at every probe".into()));
    } else {
        match form_for(&loaded, cfg) {
            Ok((form, source)) => {
                let d = form.diagnostics();
                report.structure = Some(StructureEntry {
                    source,
                    p: form.p(),
                    q: form.q(),
                    q_star: form.q_star(),
                    finite_spectrum: eigenvalue_entries(&form.finite_spectrum(DEFAULT_CLUSTER_TOL).eigenvalues),
                    complex_pairs: d.complex_pairs,
                    cond_p: d.cond_p,
                    cond_q: d.cond_q,
                    reconstruction_residual: d.residual,
                    residual_bound: d.residual_bound,
                    form: WeierstrassFile::from_form(&form),
                });
            }
            Err(e) => {
                report.verdict = "decomposition failed";
                report.error = Some(e.to_string());
                failure = Some(e);
            }
        }
    }
    let code = failure.as_ref().map_or(0, CliError::exit_code);
    let mut outcome = bare(emit(cfg, to_json(&report), None, code))?;
    if let Some(e) = failure {
        outcome.stderr.push_str(&format!("error: {e}\n"));
    }
    Ok(outcome)
}

struct Prepared {
    sys: DescriptorSystem,
    source: &'static str,
    input: InputSignal,
    y0: DVector<f64>,
    horizon: usize,
}

fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let loaded = load(cfg)?;
    let m = loaded.pencil.dim();
    let c = loaded.file.c(m)?;
    let b = loaded.file.b(m)?;
    let y0 = loaded.file.y0()?;
    let input = input_for(&loaded, m)?;
    let horizon = horizon_for(&loaded, cfg)?;
    let (form, source) = form_for(&loaded, cfg)?;
    let sys = DescriptorSystem::new(loaded.pencil.clone(), c, b, form)?;
    Ok(Prepared {
        sys,
        source,
        input,
        y0,
        horizon,
    })
}

fn order_for(cfg: &RunConfig) -> Result<Option<FracOrder>, CliError> {
    let file_order = if cfg.order.is_none() {
        let file: SystemFile = read_json(&cfg.system_path)?;
        file.n
    } else {
        None
    };
    cfg.order.or(file_order).map(|n| FracOrder::new(n).map_err(CliError::from)).transpose()
}

/// Resolves the initial state, projecting it when `--project` is set.
fn resolve_initial_state(
    cfg: &RunConfig,
    y0: &DVector<f64>,
    consistency: &ConsistencyResult,
) -> Result<(DVector<f64>, Option<ProjectionEntry>), CliError> {
    if consistency.consistent {
        return Ok((y0.clone(), None));
    }
    if !cfg.project {
        return Err(CliError::Inconsistent {
            residual: consistency.residual,
            tolerance: consistency.tolerance,
        });
    }
    let projected = consistency.nearest.clone();
    let entry = ProjectionEntry {
        note: PROJECTION_NOTE,
        original_y0: y0.iter().copied().collect(),
        projected_y0: projected.iter().copied().collect(),
    };
    Ok((projected, Some(entry)))
}

struct Simulated {
    traj: Trajectory,
    report: SimulationReport,
    input: InputSignal,
    order: Option<FracOrder>,
    sys: DescriptorSystem,
}

fn run_simulation(cfg: &RunConfig, fractional: bool) -> Result<Simulated, CliError> {
    let order = order_for(cfg)?;
    if fractional && order.is_none() {
        return Err(CliError::Structure("fractional order required (--order or field `n`)".into()));
    }
    let prep = prepare(cfg)?;
    let form = prep.sys.form();
    let opts = SolveOptions {
        consistency_tol: DEFAULT_CONSISTENCY_TOL,
        zero_pad: cfg.zero_pad,
    };
    let last_needed = if fractional {
        Some(prep.horizon)
    } else {
        required_input_index(form, prep.horizon).max(required_input_index(form, 0))
    };
    let input = match last_needed {
        Some(idx) if cfg.zero_pad && idx > prep.input.last_index() => prep.input.zero_padded(idx),
        _ => prep.input.clone(),
    };
    let ctrl = cfg.series()?;

    let (traj, solvability, consistency, projection) = match order.filter(|_| fractional) {
        Some(n) => {
            let solvability = check_fractional_solvability(form, DEFAULT_CLUSTER_TOL);
            if !solvability.solvable {
                return Err(CliError::Solvability(solvability.violations.iter().map(|v| v.to_string()).collect()));
            }
            if prep.horizon > input.last_index() {
                return Err(CliError::from(descriptor_core::Error::Horizon {
                    required: prep.horizon,
                    available: input.last_index() as i64,
                }));
            }
            let consistency = check_fractional_consistency(&prep.sys, &prep.y0, &input, n, &ctrl, opts.consistency_tol)?;
            let (y0, projection) = resolve_initial_state(cfg, &prep.y0, &consistency)?;
            let traj = solve_fractional(&prep.sys, &y0, &input, n, prep.horizon, &ctrl, &opts)?;
            (traj, Some(SolvabilityEntry::from(&solvability)), consistency, projection)
        }
        None => {
            if let Some(idx) = last_needed {
                if idx > input.last_index() {
                    return Err(CliError::from(descriptor_core::Error::Horizon {
                        required: idx,
                        available: input.last_index() as i64,
                    }));
                }
            }
            let consistency = check_consistency(&prep.sys, &prep.y0, &input, opts.consistency_tol)?;
            let (y0, projection) = resolve_initial_state(cfg, &prep.y0, &consistency)?;
            let traj = solve_standard(&prep.sys, &y0, &input, prep.horizon, &opts)?;
            (traj, None, consistency, projection)
        }
    };
    let report = SimulationReport {
        command: if fractional { "simulate-frac" } else { "simulate" },
        kind: if fractional { "fractional" } else { "standard" },
        order: order.filter(|_| fractional).map(FracOrder::value),
        horizon: prep.horizon,
        p: form.p(),
        q: form.q(),
        q_star: form.q_star(),
        form_source: prep.source,
        solvability,
        consistency: ConsistencyEntry::from(&consistency),
        projection,
        series_terms: traj.meta.series_terms,
        zero_padded: input.last_index() != prep.input.last_index(),
        residual: traj.meta.residual.as_ref().map(ResidualEntry::from),
    };
    Ok(Simulated {
        traj,
        report,
        input,
        order: order.filter(|_| fractional),
        sys: prep.sys,
    })
}

fn simulate(cfg: &RunConfig, fractional: bool) -> CmdResult {
    let sim = bare(run_simulation(cfg, fractional))?;
    let csv = bare(trajectory_to_csv(&sim.traj))?;
    let residual_ok = sim.report.residual.as_ref().is_none_or(|r| r.pass);
    let code = if residual_ok { 0 } else { 5 };
    let mut outcome = bare(emit(cfg, csv, Some(to_json(&sim.report)), code))?;
    if !residual_ok {
        outcome.stderr.push_str("error: residual oracle rejected the trajectory\n");
    }
    Ok(outcome)
}

fn causality(cfg: &RunConfig) -> CmdResult {
    let outcome = (|| -> Result<Outcome, CliError> {
        let loaded = load(cfg)?;
        let m = loaded.pencil.dim();
        let c = loaded.file.c(m)?;
        let (form, _) = form_for(&loaded, cfg)?;
        let given = loaded.file.b(m)?;
        let maximal = cfg.max_b.then(|| maximal_causal_b(&form, cfg.tol));
        let (b, source) = match (&maximal, &given) {
            (Some(b), _) => (b.clone(), "maximal"),
            (None, Some(b)) => (b.clone(), "file"),
            (None, None) => return Err(CliError::Structure("missing field `B` (or pass --max-B)".into())),
        };
        let report = causality_report(&form, &b, &c, cfg.tol)?;
        let out = CausalityOut::new(&report, &b, source, maximal.as_ref());
        emit(cfg, to_json(&out), None, 0)
    })();
    bare(outcome)
}

fn verify(cfg: &RunConfig) -> CmdResult {
    let outcome = (|| -> Result<Outcome, CliError> {
        let fractional = order_for(cfg)?.is_some();
        let sim = run_simulation(cfg, fractional)?;
        let residual = sim.report.residual.clone().unwrap_or(ResidualEntry {
            pass: true,
            max_residual: 0.0,
            bound: 0.0,
            first_index: 0,
            worst: Vec::new(),
            per_k: Vec::new(),
        });
        let cross_check = if fractional { None } else { Some(cross_check(&sim)?) };
        let pass = residual.pass && cross_check.as_ref().is_none_or(|c| c.pass);
        let report = VerifyReport {
            kind: if fractional { "fractional" } else { "standard" },
            order: sim.order.map(FracOrder::value),
            horizon: sim.traj.horizon(),
            pass,
            residual,
            cross_check,
        };
        let mut text = format!(
            "{} residual: max {:e} (bound {:e})\n",
            if report.residual.pass { "PASS" } else { "FAIL" },
            report.residual.max_residual,
            report.residual.bound
        );
        for (k, r) in &report.residual.worst {
            text.push_str(&format!("  k = {k}: {r:e}\n"));
        }
        if let Some(c) = &report.cross_check {
            text.push_str(&format!(
                "{} {} cross-check through k = {}: max relative difference {:e} (tolerance {:e})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.oracle,
                c.window_end,
                c.max_relative_difference,
                c.tolerance
            ));
        }
        text.push_str(if pass { "verdict: PASS\n" } else { "verdict: FAIL\n" });
        let code = if pass { 0 } else { 5 };
        let mut outcome = Outcome {
            exit_code: code,
            stdout: text,
            stderr: String::new(),
        };
        if let Some(path) = &cfg.out {
            fs::write(path, to_json(&report)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        if !pass {
            outcome.stderr = "error: oracle check failed\n".into();
        }
        Ok(outcome)
    })();
    bare(outcome)
}

fn cross_check(sim: &Simulated) -> Result<CrossCheckEntry, CliError> {
    let pencil = sim.sys.pencil();
    let horizon = sim.traj.horizon();
    let y0 = &sim.traj.states[0];
    let identity = DMatrix::<f64>::identity(pencil.dim(), pencil.dim());
    let (oracle, window_end, other, nullity) =
        match recursive_solve_invertible(pencil, &identity, y0, &sim.input, horizon) {
            Ok(t) => ("recursive", horizon, t.states, None),
            Err(descriptor_core::Error::OracleInapplicable(_)) => {
                let stacked = stacked_solve(pencil, &identity, Some(y0), &sim.input, horizon)?;
                let end = overlap_window(horizon, sim.sys.form().q_star());
                ("stacked", end, stacked.trajectory.states, Some(stacked.nullity))
            }
            Err(e) => return Err(e.into()),
        };
    let diff = max_relative_difference(&sim.traj.states, &other, window_end);
    Ok(CrossCheckEntry {
        oracle,
        window_end,
        max_relative_difference: diff,
        tolerance: CROSS_CHECK_TOL,
        pass: diff <= CROSS_CHECK_TOL,
        nullity,
    })
}
