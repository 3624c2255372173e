//! Experiment runner: builds the two benchmark problems, computes a Kačanov
//! reference solution on the same mesh, runs the requested schemes and
//! writes their convergence histories as CSV.

use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::fem::{load_vector, DiscreteProblem, FemError, QuadratureRule};
use crate::mesh::{l_shape_mesh, unit_square_mesh, MeshError};
use crate::models::{exact_solution, model_experiment1, model_experiment2, ExactSolution};
use crate::solver::{
    kacanov_history, solve_adaptive, solve_fixed, solve_kacanov, ConvergenceHistory, SolverConfig, SolverError,
    KACANOV_MAX_ITER, KACANOV_TOL,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// L-shaped domain, μ(t) = 1/(t+1) + 1/2, u⁰ = 0.
    #[value(name = "1")]
    One,
    /// Unit square, Bercovier-Engelman μ, u⁰ = interpolant of sin(πx)sin(πy).
    #[value(name = "2")]
    Two,
}

impl Experiment {
    /// Default cells per unit length. On the unit square the classical
    /// scheme only starts to fail for `n ≥ 48`, so experiment 2 defaults to
    /// a finer mesh than experiment 1.
    pub fn default_mesh_n(self) -> usize {
        match self {
            Experiment::One => 32,
            Experiment::Two => 64,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Experiment::One => 1,
            Experiment::Two => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    Adaptive,
    Fixed,
    Classical,
    Kacanov,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Adaptive => "adaptive",
            Scheme::Fixed => "fixed",
            Scheme::Classical => "classical",
            Scheme::Kacanov => "kacanov",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Command-line flags. Every flag has an experiment-derived default.
#[derive(Debug, Clone, Parser)]
#[command(name = "adaptive-newton", version, about = "Adaptively damped Newton experiments on a quasilinear diffusion model")]
pub struct Args {
    #[arg(long, value_enum, default_value = "1")]
    pub experiment: Experiment,
    /// Repeat to compare several schemes in one combined CSV.
    #[arg(long, value_enum, default_values_t = vec![Scheme::Adaptive])]
    pub scheme: Vec<Scheme>,
    /// Step size of the fixed scheme; defaults to the damping floor α_F′/L.
    #[arg(long)]
    pub fixed_delta: Option<f64>,
    /// Cells per unit length; 32 for experiment 1, 64 for experiment 2.
    #[arg(long)]
    pub mesh_n: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub theta: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub stop_update: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub stop_residual: f64,
    /// Update-norm tolerance of the Kačanov reference solve.
    #[arg(long, default_value_t = KACANOV_TOL)]
    pub ref_tol: f64,
    /// CSV path; defaults to `experiment<N>_<scheme>.csv` or `experiment<N>_compare.csv`.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub mesh_n: usize,
    pub schemes: Vec<Scheme>,
    pub fixed_delta: Option<f64>,
    pub solver: SolverConfig,
    pub ref_tol: f64,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// Defaults for an experiment: `σ = 0.8`, `θ = 0.1`, adaptive scheme,
    /// and [`Experiment::default_mesh_n`].
    pub fn for_experiment(experiment: Experiment) -> Self {
        Self {
            experiment,
            mesh_n: experiment.default_mesh_n(),
            schemes: vec![Scheme::Adaptive],
            fixed_delta: None,
            solver: SolverConfig::default(),
            ref_tol: KACANOV_TOL,
            output: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.solver.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.mesh_n < 2 {
            return Err(CliError::Usage("--mesh-n must be at least 2".into()));
        }
        if self.schemes.is_empty() {
            return Err(CliError::Usage("at least one --scheme is required".into()));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(CliError::Usage(format!("scheme {s} requested twice")));
            }
        }
        if let Some(d) = self.fixed_delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(CliError::Usage(format!("--fixed-delta must be positive, got {d}")));
            }
            if !self.schemes.contains(&Scheme::Fixed) {
                return Err(CliError::Usage("--fixed-delta requires --scheme fixed".into()));
            }
        }
        if !(self.ref_tol > 0.0) {
            return Err(CliError::Usage("--ref-tol must be positive".into()));
        }
        Ok(())
    }

    pub fn output_path(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| {
            let tag = match self.schemes.as_slice() {
                [single] => single.label(),
                _ => "compare",
            };
            PathBuf::from(format!("experiment{}_{tag}.csv", self.experiment.number()))
        })
    }
}

impl TryFrom<Args> for RunConfig {
    type Error = CliError;

    fn try_from(args: Args) -> Result<Self, CliError> {
        let cfg = RunConfig {
            experiment: args.experiment,
            mesh_n: args.mesh_n.unwrap_or_else(|| args.experiment.default_mesh_n()),
            schemes: args.scheme,
            fixed_delta: args.fixed_delta,
            solver: SolverConfig {
                sigma: args.sigma,
                theta: args.theta,
                max_outer_iter: args.max_iter,
                stop_update_norm: args.stop_update,
                stop_residual_rel: args.stop_residual,
                ..SolverConfig::default()
            },
            ref_tol: args.ref_tol,
            output: args.output,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Problem, initial guess and reference solution of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSetup {
    pub experiment: Experiment,
    pub mesh_n: usize,
    pub problem: DiscreteProblem,
    pub u0: Vec<f64>,
    pub reference: Vec<f64>,
}

/// Builds mesh, model and load of an experiment and solves for the Kačanov
/// reference on the same mesh.
///
/// Both experiments share one source term: `g = -div(μ₁(|∇u⋆|²)∇u⋆)` with
/// the rational coefficient `μ₁` of experiment 1 and `u⋆ = sin(πx)sin(πy)`.
/// In experiment 2 the operator uses the Bercovier-Engelman coefficient, so
/// `u⋆` is not its solution and the interpolated initial guess is a genuine
/// starting point.
pub fn setup_experiment(experiment: Experiment, mesh_n: usize, ref_tol: f64) -> Result<ExperimentSetup, CliError> {
    let exact = exact_solution();
    let (source_model, _) = model_experiment1();
    let (mesh, model) = match experiment {
        Experiment::One => (l_shape_mesh(mesh_n)?, source_model),
        Experiment::Two => (unit_square_mesh(mesh_n)?, model_experiment2().0),
    };
    let u0 = match experiment {
        Experiment::One => vec![0.0; mesh.n_interior()],
        Experiment::Two => mesh.interpolate(|x, y| exact.value(x, y)),
    };
    let load = load_vector(&mesh, &source_model, &exact, &QuadratureRule::edge_midpoint())?;
    let problem = DiscreteProblem::new(mesh, model, load)?;
    let reference = solve_kacanov(&problem, &u0, ref_tol, KACANOV_MAX_ITER)?;
    Ok(ExperimentSetup {
        experiment,
        mesh_n,
        problem,
        u0,
        reference,
    })
}

/// Damping used by the fixed scheme.
pub fn fixed_delta(config: &RunConfig, setup: &ExperimentSetup) -> f64 {
    config
        .fixed_delta
        .unwrap_or(setup.problem.constants().damping_floor)
}

pub fn run_scheme(config: &RunConfig, setup: &ExperimentSetup, scheme: Scheme) -> Result<ConvergenceHistory, SolverError> {
    let p = &setup.problem;
    let reference = Some(setup.reference.as_slice());
    match scheme {
        Scheme::Adaptive => solve_adaptive(p, &setup.u0, &config.solver, reference),
        Scheme::Fixed => solve_fixed(p, &setup.u0, fixed_delta(config, setup), &config.solver, reference),
        Scheme::Classical => solve_fixed(p, &setup.u0, 1.0, &config.solver, reference),
        Scheme::Kacanov => kacanov_history(
            p,
            &setup.u0,
            config.solver.stop_update_norm,
            config.solver.max_outer_iter,
            config.solver.linear_rel_tol,
            reference,
        ),
    }
}

pub const CSV_HEADER: &str =
    "scheme,iteration,delta_used,trials,potential_value,update_energy_norm,residual_norm,error_vs_reference,terminated";

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

/// Writes histories as CSV. Row 0 of each scheme is the initial guess, with
/// empty step columns.
pub fn write_csv<W: Write>(out: W, runs: &[(Scheme, &ConvergenceHistory)]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for (scheme, h) in runs {
        let scheme = scheme.label();
        let term = h.terminated.as_str();
        let init = &h.initial;
        w.write_record([
            scheme,
            "0",
            "",
            "",
            &fmt_float(init.potential_value),
            "",
            &fmt_float(init.residual_norm),
            &fmt_opt(init.error_vs_reference),
            term,
        ])?;
        for r in &h.records {
            w.write_record([
                scheme,
                &r.iteration.to_string(),
                &fmt_float(r.delta_used),
                &r.trial_count.to_string(),
                &fmt_float(r.potential_value),
                &fmt_float(r.update_energy_norm),
                &fmt_float(r.residual_norm),
                &fmt_opt(r.error_vs_reference),
                term,
            ])?;
        }
    }
    w.flush()
}

fn write_csv_file(path: &Path, runs: &[(Scheme, &ConvergenceHistory)]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_csv(&mut w, runs)?;
    w.flush()
}

/// Outcome of a CLI invocation: the per-scheme histories, the CSV written
/// and the human-readable summary.
#[derive(Debug)]
pub struct RunOutcome {
    pub histories: Vec<(Scheme, ConvergenceHistory)>,
    pub csv_path: PathBuf,
    pub summary: String,
}

fn summary_header(config: &RunConfig, setup: &ExperimentSetup) -> String {
    let c = setup.problem.constants();
    let mut s = String::new();
    let _ = writeln!(s, "experiment {}: mesh_n={} dofs={}", config.experiment.number(), config.mesh_n, setup.problem.n_dofs());
    let _ = writeln!(s, "sigma={} theta={}", config.solver.sigma, config.solver.theta);
    let _ = writeln!(
        s,
        "m_mu={} M_mu={} L={} alpha_Fp={} beta_Fp={} floor={}",
        c.m_mu, c.big_m_mu, c.lipschitz, c.alpha, c.beta, c.damping_floor
    );
    let _ = writeln!(s, "reference: Kacanov, tol={:e}", config.ref_tol);
    s
}

fn summary_line(config: &RunConfig, setup: &ExperimentSetup, scheme: Scheme, h: &ConvergenceHistory) -> String {
    let delta = match scheme {
        Scheme::Fixed => format!(" delta={}", fixed_delta(config, setup)),
        _ => String::new(),
    };
    let damped = h.records.iter().filter(|r| r.delta_used < 1.0).count();
    let mut line = format!(
        "{scheme}{delta}: terminated={} iterations={} final_error={:.3e} damped_steps={damped}",
        h.terminated,
        h.iterations(),
        h.final_error().unwrap_or(f64::NAN),
    );
    if let Some(e) = &h.failure {
        let _ = write!(line, " ({e})");
    }
    line
}

fn execute(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let setup = setup_experiment(config.experiment, config.mesh_n, config.ref_tol)?;
    let mut summary = summary_header(config, &setup);
    let mut histories = Vec::new();
    for &scheme in &config.schemes {
        let h = run_scheme(config, &setup, scheme)?;
        let _ = writeln!(summary, "{}", summary_line(config, &setup, scheme, &h));
        histories.push((scheme, h));
    }
    let csv_path = config.output_path();
    let runs: Vec<(Scheme, &ConvergenceHistory)> = histories.iter().map(|(s, h)| (*s, h)).collect();
    write_csv_file(&csv_path, &runs)?;
    let _ = writeln!(summary, "csv: {}", csv_path.display());
    Ok(RunOutcome {
        histories,
        csv_path,
        summary,
    })
}

/// Runs a single scheme.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    if config.schemes.len() != 1 {
        return Err(CliError::Usage("run expects exactly one scheme".into()));
    }
    execute(config)
}

/// Runs at least two schemes from the same initial guess against the same
/// reference and writes one combined CSV.
pub fn compare(config: &RunConfig) -> Result<RunOutcome, CliError> {
    if config.schemes.len() < 2 {
        return Err(CliError::Usage("compare needs at least two schemes".into()));
    }
    execute(config)
}

/// Dispatches to [`run`] or [`compare`] by the number of schemes.
pub fn main_with_args(args: Args) -> Result<RunOutcome, CliError> {
    let config = RunConfig::try_from(args)?;
    if config.schemes.len() > 1 {
        compare(&config)
    } else {
        run(&config)
    }
}
