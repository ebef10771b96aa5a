//! Command-line front end: solve, cross-check, generate and sweep.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | malformed input, bad arguments or I/O failure |
//! | 2 | some extended matrix is reducible |
//! | 3 | an iteration ran out of budget |
//! | 4 | the generator found no irreducible scenario |
//! | 5 | cross-check deviations above tolerance |
//! | 6 | any other solver failure |

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::{dvector, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balancer::{build_extended, solve_with_extended, MaxMinSolution};
use crate::config::SolverConfig;
use crate::error::Error;
use crate::generate::{generate_scenario, GeneratorOptions, ScenarioKind};
use crate::model::{constraint_levels, sir, sir_ratios, Utility};
use crate::oracle::bisect_maxmin;
use crate::saddle::{optimal_weight_set, saddle_solve, write_trace_csv, SaddleStart};
use crate::scenario::Scenario;
use crate::utility_opt::{maximize_f, maxmin_weights};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_REDUCIBLE: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_RETRY_BUDGET: i32 = 4;
pub const EXIT_DISAGREEMENT: i32 = 5;
pub const EXIT_SOLVER: i32 = 6;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidChannel(_) | Error::InvalidModel(_) | Error::Dimension(_) | Error::Domain(_) | Error::Parse(_) => {
            EXIT_INPUT
        }
        Error::NotIrreducible { .. } => EXIT_REDUCIBLE,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        Error::RetryBudgetExhausted { .. } => EXIT_RETRY_BUDGET,
        Error::SpectralRadiusViolation(_)
        | Error::NotOnBoundary { .. }
        | Error::NoFeasibleT
        | Error::UnsupportedDimension { .. }
        | Error::InternalInvariantViolation(_) => EXIT_SOLVER,
    }
}

#[derive(Debug, Parser)]
#[command(name = "sirbalance", version, about = "Max-min SIR balancing under polytope power constraints")]
pub struct Cli {
    /// Relative tolerance of the Perron solves.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Iteration budget of the gradient methods (utility ascent and saddle).
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Iteration budget of power iteration and Neumann summation.
    #[arg(long, global = true)]
    pub eigen_max_iter: Option<usize>,
    /// Utility, `log` or `negpow:<n>`; overrides the scenario file.
    #[arg(long, global = true)]
    pub utility: Option<Utility>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scenario and print a JSON report.
    Solve {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Eigen)]
        method: Method,
        /// Write the saddle iteration trace as CSV (saddle method only).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run all four routes and report pairwise deviations.
    Crosscheck {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a random scenario whose extended matrices are irreducible.
    Generate {
        #[arg(long = "links", short = 'k')]
        links: usize,
        #[arg(long = "constraints", short = 'n')]
        constraints: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "individual")]
        kind: ScenarioKind,
        /// Probability that an off-diagonal gain is nonzero.
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        #[arg(long, default_value_t = 100)]
        max_attempts: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Trace the boundary of the SIR region of a two-link scenario.
    Sweep {
        scenario: PathBuf,
        /// Number of evenly spaced directions.
        #[arg(long, default_value_t = 99)]
        points: usize,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2 / 100.0)]
        theta_min: f64,
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2 * 99.0 / 100.0)]
        theta_max: f64,
        /// Explicit angles; replaces the even grid.
        #[arg(long, num_args = 1..)]
        theta: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Eigen,
    Bisect,
    Utility,
    Saddle,
}

impl Method {
    /// Accuracy expected of the power vector returned by this route.
    fn tolerance(self, config: &SolverConfig) -> f64 {
        match self {
            Method::Eigen => 1e-8,
            Method::Bisect => 1e-6,
            Method::Utility => 1e-4,
            Method::Saddle => config.primal_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `(max - min) / min` over the ratios `SIR_k / γ_k`.
    pub balance: f64,
    /// `max_n g_n(p)`.
    pub max_level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perron: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_route: Option<f64>,
    pub iterations: usize,
}

/// Output of `solve`; constraint indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub p_bar: Vec<f64>,
    pub beta: f64,
    pub level: f64,
    pub n0: usize,
    #[serde(rename = "N0")]
    pub active: Vec<usize>,
    pub sir: Vec<f64>,
    #[serde(rename = "rho_B")]
    pub rho_b: Vec<f64>,
    pub residuals: Residuals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub a: Method,
    pub b: Method,
    /// `‖p_a - p_b‖∞ / max(‖p_a‖∞, ‖p_b‖∞)`.
    pub max_norm: f64,
    pub tolerance: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub methods: Vec<MethodOutcome>,
    pub deviations: Vec<Deviation>,
    #[serde(rename = "N0", default, skip_serializing_if = "Option::is_none")]
    pub active: Option<Vec<usize>>,
    /// Distance of the saddle weights to the optimal weight set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saddle_weight_distance: Option<f64>,
    pub all_within: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub sir: [f64; 2],
    pub q: [f64; 2],
    pub active: Vec<usize>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(CliError::Solver(e)) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

enum CliError {
    Solver(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn config_from(cli: &Cli) -> SolverConfig {
    let mut config = SolverConfig::default();
    if let Some(tol) = cli.tol {
        config.tol = tol;
    }
    if let Some(n) = cli.max_iter {
        config.ascent_max_iter = n;
        config.saddle_max_iter = n;
    }
    if let Some(n) = cli.eigen_max_iter {
        config.max_iter = n;
    }
    config
}

fn load(cli: &Cli, path: &std::path::Path) -> Result<Scenario, Error> {
    let mut scenario = Scenario::load(path)?;
    if let Some(u) = cli.utility {
        scenario.utility = u;
    }
    Ok(scenario)
}

fn emit(output: &Option<PathBuf>, out: &mut dyn Write, text: &str) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, text),
        None => out.write_all(text.as_bytes()),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InternalInvariantViolation(format!("report is not serializable: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let config = config_from(cli);
    match &cli.command {
        Command::Solve {
            scenario,
            method,
            trace,
            output,
        } => {
            let scenario = load(cli, scenario)?;
            let report = cmd_solve(&scenario, *method, &config, trace.as_deref())?;
            emit(output, out, &to_json(&report)?)?;
            Ok(EXIT_OK)
        }
        Command::Crosscheck { scenario, output } => {
            let scenario = load(cli, scenario)?;
            let (report, code) = cmd_crosscheck(&scenario, &config);
            emit(output, out, &to_json(&report)?)?;
            Ok(code)
        }
        Command::Generate {
            links,
            constraints,
            seed,
            kind,
            density,
            max_attempts,
            output,
        } => {
            let options = GeneratorOptions {
                density: *density,
                max_attempts: *max_attempts,
            };
            let mut scenario = generate_scenario(*links, *constraints, *seed, *kind, options)?;
            if let Some(u) = cli.utility {
                scenario.utility = u;
            }
            emit(output, out, &scenario.to_json())?;
            Ok(EXIT_OK)
        }
        Command::Sweep {
            scenario,
            points,
            theta_min,
            theta_max,
            theta,
            output,
        } => {
            let scenario = load(cli, scenario)?;
            let thetas = if theta.is_empty() {
                theta_grid(*theta_min, *theta_max, *points)?
            } else {
                theta.clone()
            };
            let rows = cmd_sweep(&scenario, &thetas, &config)?;
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &rows)?;
            emit(output, out, &String::from_utf8_lossy(&buf))?;
            Ok(EXIT_OK)
        }
    }
}

fn theta_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, Error> {
    let right_angle = std::f64::consts::FRAC_PI_2;
    if !(lo > 0.0 && hi < right_angle && lo <= hi) || points == 0 {
        return Err(Error::Domain(format!(
            "sweep needs 0 < theta_min <= theta_max < pi/2 and at least one point, got [{lo}, {hi}] with {points}"
        )));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect())
}

fn solve_eigen(scenario: &Scenario, config: &SolverConfig) -> Result<MaxMinSolution, Error> {
    let ext = build_extended(&scenario.model, &scenario.poly, config)?;
    solve_with_extended(&scenario.model, &scenario.poly, &ext, config)
}

/// Solves with the chosen route and summarizes the result.
pub fn cmd_solve(
    scenario: &Scenario,
    method: Method,
    config: &SolverConfig,
    trace_path: Option<&std::path::Path>,
) -> Result<SolveReport, Error> {
    let (model, poly) = (&scenario.model, &scenario.poly);
    let ext = build_extended(model, poly, config)?;
    let rho_b = ext.rho_b();
    if method == Method::Eigen {
        let sol = solve_with_extended(model, poly, &ext, config)?;
        return Ok(SolveReport {
            method,
            p_bar: sol.power.iter().copied().collect(),
            beta: sol.beta,
            level: sol.level,
            n0: sol.n0,
            active: sol.active,
            sir: sol.sir.iter().copied().collect(),
            rho_b,
            residuals: Residuals {
                balance: sol.diagnostics.balance_residual,
                max_level: sol.diagnostics.max_level,
                perron: Some(sol.diagnostics.perron_residual),
                a_route: Some(sol.diagnostics.a_route_residual),
                iterations: sol.diagnostics.iterations,
            },
        });
    }

    let (power, iterations) = match method {
        Method::Bisect => {
            let r = bisect_maxmin(model, poly, config)?;
            (r.power, r.iterations)
        }
        Method::Utility => {
            let w = maxmin_weights(model, poly, config)?;
            let r = maximize_f(model, poly, scenario.utility, &w, config)?;
            (r.power, r.iterations)
        }
        Method::Saddle => {
            let reference = solve_with_extended(model, poly, &ext, config)?.power;
            let result = saddle_solve(model, poly, scenario.utility, config, Some(&reference), SaddleStart::default());
            if let Some(path) = trace_path {
                let trace = match &result {
                    Ok(o) => &o.trace,
                    Err(Error::NoConvergence { state, .. }) => &state.trace,
                    Err(_) => &Vec::new(),
                };
                let file = std::fs::File::create(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                write_trace_csv(std::io::BufWriter::new(file), trace)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            }
            let o = result?;
            (o.power, o.iterations)
        }
        Method::Eigen => unreachable!("handled above"),
    };
    summarize(scenario, method, power, iterations, rho_b, config)
}

fn summarize(
    scenario: &Scenario,
    method: Method,
    power: DVector<f64>,
    iterations: usize,
    rho_b: Vec<f64>,
    config: &SolverConfig,
) -> Result<SolveReport, Error> {
    let ratios = sir_ratios(&scenario.model, &power)?;
    let level = ratios.min();
    let levels = constraint_levels(&scenario.poly, &power)?;
    let max_level = levels.max();
    let slack = method.tolerance(config);
    let active: Vec<usize> = (0..levels.len()).filter(|&n| levels[n] >= max_level - slack).collect();
    Ok(SolveReport {
        method,
        p_bar: power.iter().copied().collect(),
        beta: 1.0 / level,
        level,
        n0: levels.argmax().0,
        active,
        sir: sir(&scenario.model, &power)?.iter().copied().collect(),
        rho_b,
        residuals: Residuals {
            balance: (ratios.max() - level) / level,
            max_level,
            perron: None,
            a_route: None,
            iterations,
        },
    })
}

fn relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Runs every route, keeps whatever finished, and compares the power
/// vectors pairwise against the sum of the two routes' tolerances.
pub fn cmd_crosscheck(scenario: &Scenario, config: &SolverConfig) -> (CrosscheckReport, i32) {
    let (model, poly) = (&scenario.model, &scenario.poly);
    let (eigen, bisect) = rayon::join(|| solve_eigen(scenario, config), || bisect_maxmin(model, poly, config));

    let gradient_routes = |sol: &MaxMinSolution| {
        rayon::join(
            || {
                let w = maxmin_weights(model, poly, config)?;
                maximize_f(model, poly, scenario.utility, &w, config).map(|r| (r.power, r.iterations))
            },
            || {
                saddle_solve(model, poly, scenario.utility, config, Some(&sol.power), SaddleStart::default())
                    .map(|o| (o.power, o.iterations, o.weights))
            },
        )
    };
    let (utility, saddle) = match &eigen {
        Ok(sol) => {
            let (u, s) = gradient_routes(sol);
            (Some(u), Some(s))
        }
        Err(_) => (None, None),
    };

    let mut codes = Vec::new();
    let mut outcome = |method: Method, result: Option<Result<(DVector<f64>, usize), &Error>>| -> MethodOutcome {
        let mut entry = MethodOutcome {
            method,
            p: None,
            level: None,
            iterations: None,
            error: None,
        };
        match result {
            Some(Ok((p, iterations))) => {
                entry.level = sir_ratios(model, &p).ok().map(|r| r.min());
                entry.p = Some(p.iter().copied().collect());
                entry.iterations = Some(iterations);
            }
            Some(Err(e)) => {
                codes.push(exit_code(e));
                entry.error = Some(e.to_string());
            }
            None => entry.error = Some("skipped: the eigen route failed".into()),
        }
        entry
    };

    let methods = vec![
        outcome(Method::Eigen, Some(eigen.as_ref().map(|s| (s.power.clone(), s.diagnostics.iterations)))),
        outcome(Method::Bisect, Some(bisect.as_ref().map(|r| (r.power.clone(), r.iterations)))),
        outcome(Method::Utility, utility.as_ref().map(|r| r.as_ref().map(|(p, i)| (p.clone(), *i)))),
        outcome(Method::Saddle, saddle.as_ref().map(|r| r.as_ref().map(|(p, i, _)| (p.clone(), *i)))),
    ];

    let mut deviations = Vec::new();
    for i in 0..methods.len() {
        for j in i + 1..methods.len() {
            if let (Some(a), Some(b)) = (&methods[i].p, &methods[j].p) {
                let max_norm = relative_deviation(a, b);
                let tolerance = methods[i].method.tolerance(config) + methods[j].method.tolerance(config);
                deviations.push(Deviation {
                    a: methods[i].method,
                    b: methods[j].method,
                    max_norm,
                    tolerance,
                    within: max_norm <= tolerance,
                });
            }
        }
    }

    let saddle_weight_distance = match &saddle {
        Some(Ok((_, _, w))) => optimal_weight_set(model, poly, config).ok().map(|set| set.distance(w.as_vector())),
        _ => None,
    };
    let all_within = codes.is_empty() && deviations.len() == 6 && deviations.iter().all(|d| d.within);
    let report = CrosscheckReport {
        methods,
        deviations,
        active: eigen.as_ref().ok().map(|s| s.active.clone()),
        saddle_weight_distance,
        all_within,
    };

    let code = if codes.contains(&EXIT_NO_CONVERGENCE) {
        EXIT_NO_CONVERGENCE
    } else if let Some(&c) = codes.first() {
        c
    } else if all_within {
        EXIT_OK
    } else {
        EXIT_DISAGREEMENT
    };
    (report, code)
}

/// Balances along each direction `(cos θ, sin θ)`; the balanced SIR vector
/// is the boundary point of the SIR region on that ray. `q` is measured
/// against the scenario's own targets.
pub fn cmd_sweep(scenario: &Scenario, thetas: &[f64], config: &SolverConfig) -> Result<Vec<SweepRow>, Error> {
    let k = scenario.model.num_links();
    if k != 2 {
        return Err(Error::UnsupportedDimension { supported: 2, got: k });
    }
    let gamma = scenario.model.targets();
    thetas
        .par_iter()
        .map(|&theta| {
            if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
                return Err(Error::Domain(format!("theta = {theta} outside (0, pi/2)")));
            }
            let model = scenario.model.with_targets(dvector![theta.cos(), theta.sin()])?;
            let ext = build_extended(&model, &scenario.poly, config)?;
            let sol = solve_with_extended(&model, &scenario.poly, &ext, config)?;
            let q = [0, 1].map(|i| scenario.utility.phi(sol.sir[i] / gamma[i]));
            Ok(SweepRow {
                theta,
                sir: [sol.sir[0], sol.sir[1]],
                q,
                active: sol.active,
            })
        })
        .collect()
}

/// CSV with header `theta,sir1,sir2,q1,q2,active_set`; the active set is
/// a `;`-separated list of 0-based constraint indices.
pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(out, "theta,sir1,sir2,q1,q2,active_set")?;
    for r in rows {
        let active: Vec<String> = r.active.iter().map(|n| n.to_string()).collect();
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.theta,
            r.sir[0],
            r.sir[1],
            r.q[0],
            r.q[1],
            active.join(";")
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{e1, e2, e3};

    fn scenario(pair: (crate::model::NetworkModel, crate::model::ConstraintPolytope)) -> Scenario {
        Scenario::new(pair.0, pair.1, Utility::Log).unwrap()
    }

    #[test]
    fn solve_report_examples() {
        let cfg = SolverConfig::default();
        let r = cmd_solve(&scenario(e2()), Method::Eigen, &cfg, None).unwrap();
        assert!((r.beta - 0.6).abs() < 1e-9);
        assert!((r.p_bar[0] - 0.5).abs() < 1e-9 && (r.p_bar[1] - 1.0).abs() < 1e-9);
        assert_eq!(r.active, vec![1]);
        let r = cmd_solve(&scenario(e3()), Method::Eigen, &cfg, None).unwrap();
        assert!((r.beta - 0.55).abs() < 1e-9);
    }

    #[test]
    fn report_round_trips() {
        let cfg = SolverConfig::default();
        for method in [Method::Eigen, Method::Bisect] {
            let r = cmd_solve(&scenario(e2()), method, &cfg, None).unwrap();
            let back: SolveReport = serde_json::from_str(&to_json(&r).unwrap()).unwrap();
            assert_eq!(back, r);
        }
    }

    #[test]
    fn other_routes_agree_on_e2() {
        let cfg = SolverConfig::default();
        for method in [Method::Bisect, Method::Utility, Method::Saddle] {
            let r = cmd_solve(&scenario(e2()), method, &cfg, None).unwrap();
            assert!((r.p_bar[0] - 0.5).abs() < 1e-3 && (r.p_bar[1] - 1.0).abs() < 1e-3, "{method:?}");
        }
    }

    #[test]
    fn crosscheck_e2_agrees() {
        let (report, code) = cmd_crosscheck(&scenario(e2()), &SolverConfig::default());
        assert_eq!(code, EXIT_OK, "{report:?}");
        assert!(report.all_within);
        assert_eq!(report.deviations.len(), 6);
        assert!(report.deviations.iter().all(|d| d.max_norm < 1e-3));
    }

    #[test]
    fn crosscheck_e1_reports_both_constraints() {
        let (report, _) = cmd_crosscheck(&scenario(e1()), &SolverConfig::default());
        assert_eq!(report.active, Some(vec![0, 1]));
        assert_eq!(report.deviations.len(), 6);
    }

    #[test]
    fn crosscheck_budget_exhaustion_keeps_partial_report() {
        let cfg = SolverConfig {
            saddle_max_iter: 1,
            ascent_max_iter: 1,
            ..SolverConfig::default()
        };
        let (report, code) = cmd_crosscheck(&scenario(e2()), &cfg);
        assert_eq!(code, EXIT_NO_CONVERGENCE);
        assert!(report.methods[0].p.is_some() && report.methods[1].p.is_some());
        assert!(report.methods[3].error.is_some());
        assert!(!report.all_within);
    }

    #[test]
    fn sweep_examples() {
        let cfg = SolverConfig::default();
        let rows = cmd_sweep(&scenario(e2()), &[2.0f64.atan()], &cfg).unwrap();
        assert!((rows[0].sir[0] - 5.0 / 3.0).abs() < 1e-8);
        assert!((rows[0].sir[1] - 10.0 / 3.0).abs() < 1e-8);
        let rows = cmd_sweep(&scenario(e1()), &[std::f64::consts::FRAC_PI_4], &cfg).unwrap();
        assert!((rows[0].sir[0] - 2.0 / 3.0).abs() < 1e-8);
        assert!((rows[0].sir[1] - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn theta_grid_bounds() {
        let g = theta_grid(0.1, 0.5, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.1);
        assert!((g[4] - 0.5).abs() < 1e-15);
        assert!(theta_grid(0.0, 0.5, 5).is_err());
        assert!(theta_grid(0.1, 0.5, 0).is_err());
    }

    #[test]
    fn sweep_csv_format() {
        let mut buf = Vec::new();
        write_sweep_csv(
            &mut buf,
            &[SweepRow {
                theta: 0.5,
                sir: [1.0, 2.0],
                q: [0.0, -1.0],
                active: vec![0, 1],
            }],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "theta,sir1,sir2,q1,q2,active_set\n\
             5.0000000000000000e-1,1.0000000000000000e0,2.0000000000000000e0,0.0000000000000000e0,-1.0000000000000000e0,0;1\n"
        );
    }

    #[test]
    fn exit_codes_are_distinct_per_class() {
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_INPUT);
        assert_eq!(exit_code(&Error::NotIrreducible { indices: vec![0] }), EXIT_REDUCIBLE);
        assert_eq!(exit_code(&Error::no_convergence("x", 1, 0.0, vec![])), EXIT_NO_CONVERGENCE);
        assert_eq!(exit_code(&Error::RetryBudgetExhausted { attempts: 1 }), EXIT_RETRY_BUDGET);
        assert_eq!(exit_code(&Error::NoFeasibleT), EXIT_SOLVER);
    }
}
