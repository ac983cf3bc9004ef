use std::fmt;
use std::str::FromStr;

use cavity_qnd::gate_sim::{verify_table, CorrectionTable};
use cavity_qnd::optimizer::{
    finesse_requirement, fit_measurement_scaling, log_space, sweep_curve_with,
    unitary_scheme_error, BudgetCoefficient, FidelityMode, FinesseScheme, OptimizerSettings,
    SimplexSettings, UnitaryComparisonParams,
};
use cavity_qnd::outcome_distributions::{component_mass, success_probability};
use cavity_qnd::protocol_sim::{histogram, run_protocol, RNG_ALGORITHM};
use cavity_qnd::{AcceptanceWindow, Error, OutcomeModel, ProtocolConfig, PulseConfig};
use clap::Args;

use crate::output::{self, num};
use crate::{CliError, Status};

/// Comma-separated list given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|p| p.trim().parse::<T>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(List)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    #[arg(long, default_value = "1e-4")]
    theta_min: f64,
    #[arg(long, default_value_t = 3.0)]
    theta_max: f64,
    #[arg(long, default_value_t = 32)]
    theta_points: usize,
    /// Lower cuts are scanned over [x_1 - span, x_1).
    #[arg(long, default_value_t = 6.0)]
    x_a_span: f64,
    #[arg(long, default_value_t = 30)]
    x_a_points: usize,
    /// Grid points used as simplex starts.
    #[arg(long, default_value_t = 5)]
    starts: usize,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value = "1e-9")]
    f_tolerance: f64,
    #[arg(long, default_value = "1e-7")]
    x_tolerance: f64,
}

impl OptimizerArgs {
    fn settings(&self) -> OptimizerSettings {
        OptimizerSettings {
            theta_min: self.theta_min,
            theta_max: self.theta_max,
            theta_points: self.theta_points,
            x_a_span: self.x_a_span,
            x_a_points: self.x_a_points,
            starts: self.starts,
            simplex: SimplexSettings {
                max_iterations: self.max_iterations,
                f_tolerance: self.f_tolerance,
                x_tolerance: self.x_tolerance,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value = "1e2")]
    cmin: f64,
    #[arg(long, default_value = "1e5")]
    cmax: f64,
    /// Log-spaced cooperativities from cmin to cmax.
    #[arg(long, default_value_t = 13)]
    points: usize,
    /// Target success probabilities.
    #[arg(long, default_value = "0.001,0.3,0.5")]
    ps: List<f64>,
    /// Also sweep the repeated-measurement fidelity bound.
    #[arg(long)]
    repeated_bound: bool,
    /// Success probability for the repeated-measurement bound.
    #[arg(long, default_value_t = 0.5)]
    bound_ps: f64,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[arg(long, short, default_value = "-")]
    output: String,
}

fn cooperativities(cmin: f64, cmax: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(cmin > 0.0) || !(cmax >= cmin) || points == 0 || (points > 1 && cmax == cmin) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < cmin < cmax and points >= 1 (got {cmin}, {cmax}, {points})"
        ))
        .into());
    }
    Ok(log_space(cmin, cmax, points))
}

pub fn curve(args: &CurveArgs, config: &[(String, String)]) -> Result<Status, CliError> {
    let cs = cooperativities(args.cmin, args.cmax, args.points)?;
    let settings = args.optimizer.settings();
    let mut jobs: Vec<(f64, FidelityMode)> = args
        .ps
        .0
        .iter()
        .map(|&p| (p, FidelityMode::SingleShot))
        .collect();
    if args.repeated_bound {
        jobs.push((args.bound_ps, FidelityMode::RepeatedBound));
    }
    let curves = jobs
        .iter()
        .map(|&(p, mode)| sweep_curve_with(&cs, p, mode, &settings))
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = output::open(&args.output)?;
    output::header(out.as_mut(), "curve", config, &[])?;
    let mut w = output::writer(out);
    w.write_record([
        "cooperativity",
        "target_Ps",
        "mode",
        "theta_opt",
        "x_a",
        "x_b",
        "error",
        "converged",
    ])?;
    let mut all_converged = true;
    for curve in &curves {
        for r in curve {
            all_converged &= r.converged;
            w.write_record([
                num(r.problem.cooperativity),
                num(r.problem.target_success),
                r.problem.mode.to_string(),
                num(r.theta_opt),
                num(r.x_a_opt),
                num(r.x_b_opt),
                num(r.error),
                r.converged.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(if all_converged {
        Status::Ok
    } else {
        Status::Nonconverged
    })
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[arg(long, default_value_t = 2)]
    n_atoms: u32,
    #[arg(long, default_value_t = 0.2)]
    theta: f64,
    #[arg(long, default_value_t = 100.0)]
    cooperativity: f64,
    /// Lower window edge; defaults to the midpoint below the lowest accepted center.
    #[arg(long, allow_hyphen_values = true)]
    x_a: Option<f64>,
    /// Upper window edge; defaults to the midpoint above the highest accepted center.
    #[arg(long, allow_hyphen_values = true)]
    x_b: Option<f64>,
    /// Atom numbers counted as success (default 1..M-1).
    #[arg(long)]
    accepted_n: Option<List<u32>>,
    #[arg(long, default_value_t = 100_000)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    max_attempts: u64,
    #[arg(long, short, default_value = "-")]
    output: String,
    /// Also write a histogram of single-measurement outcomes here.
    #[arg(long)]
    histogram_output: Option<String>,
    #[arg(long, default_value_t = 100)]
    bins: usize,
    /// Samples for the histogram (default: runs).
    #[arg(long)]
    hist_samples: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    hist_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hist_max: Option<f64>,
    /// Restrict the histogram to attempts with this true atom number.
    #[arg(long)]
    condition_n: Option<u32>,
}

/// Window between the midpoints separating the accepted centers from their
/// neighbours (open at 0 and M).
fn default_window(
    pulse: &PulseConfig,
    m: u32,
    accepted: &[u32],
    x_a: Option<f64>,
    x_b: Option<f64>,
) -> Result<AcceptanceWindow, CliError> {
    let lo = accepted.iter().copied().min();
    let hi = accepted.iter().copied().max();
    let (Some(lo), Some(hi)) = (lo, hi) else {
        return Err(Error::InvalidParameter("accepted set is empty".into()).into());
    };
    let contiguous = (lo..=hi).all(|n| accepted.contains(&n));
    if !contiguous && (x_a.is_none() || x_b.is_none()) {
        return Err(Error::InvalidParameter(
            "accepted set is not contiguous; give --x-a and --x-b".into(),
        )
        .into());
    }
    let x_a = x_a.unwrap_or(if lo == 0 {
        f64::NEG_INFINITY
    } else {
        0.5 * (pulse.x_center(lo - 1) + pulse.x_center(lo))
    });
    let x_b = x_b.unwrap_or(if hi >= m {
        f64::INFINITY
    } else {
        0.5 * (pulse.x_center(hi) + pulse.x_center(hi + 1))
    });
    Ok(AcceptanceWindow::new(x_a, x_b)?)
}

pub fn montecarlo(args: &MonteCarloArgs, config: &[(String, String)]) -> Result<Status, CliError> {
    let pulse = PulseConfig::new(args.theta, args.cooperativity)?;
    let accepted = match &args.accepted_n {
        Some(list) => list.0.clone(),
        None => (1..args.n_atoms).collect(),
    };
    let window = default_window(&pulse, args.n_atoms, &accepted, args.x_a, args.x_b)?;
    let protocol = ProtocolConfig::new(args.n_atoms, pulse, window, args.seed)?
        .with_accepted(accepted.clone())?
        .with_max_attempts(args.max_attempts)?;
    let stats = run_protocol(&protocol, args.runs)?;

    let mut extra = vec![
        format!("rng={RNG_ALGORITHM}"),
        format!("window={},{}", num(window.x_a), num(window.x_b)),
    ];
    if stats.censored_fraction() > 0.01 {
        let msg = format!(
            "warning=censored fraction {} exceeds 1% (max_attempts {})",
            num(stats.censored_fraction()),
            args.max_attempts
        );
        eprintln!("{msg}");
        extra.push(msg);
    }

    let mut out = output::open(&args.output)?;
    output::header(out.as_mut(), "montecarlo", config, &extra)?;
    let mut w = output::writer(out);
    w.write_record([
        "n_atoms",
        "theta",
        "cooperativity",
        "x_a",
        "x_b",
        "runs",
        "completed",
        "censored",
        "total_attempts",
        "attempts_mean",
        "attempts_variance",
        "attempts_mean_radius",
        "acceptance_rate",
        "acceptance_rate_radius",
        "conditional_fidelity",
        "conditional_fidelity_radius",
    ])?;
    w.write_record([
        args.n_atoms.to_string(),
        num(args.theta),
        num(args.cooperativity),
        num(window.x_a),
        num(window.x_b),
        stats.runs.to_string(),
        stats.completed.to_string(),
        stats.censored.to_string(),
        stats.total_attempts.to_string(),
        num(stats.attempts_mean),
        num(stats.attempts_variance),
        num(stats.attempts_mean_radius),
        num(stats.acceptance_rate),
        num(stats.acceptance_rate_radius),
        num(stats.conditional_fidelity),
        num(stats.conditional_fidelity_radius),
    ])?;
    w.flush()?;

    if let Some(path) = &args.histogram_output {
        write_histogram(args, &protocol, path, config, &extra[..1])?;
    }
    Ok(Status::Ok)
}

fn write_histogram(
    args: &MonteCarloArgs,
    protocol: &ProtocolConfig,
    path: &str,
    config: &[(String, String)],
    extra: &[String],
) -> Result<(), CliError> {
    let pulse = &protocol.pulse;
    let lo = args.hist_min.unwrap_or(-4.0);
    let hi = args.hist_max.unwrap_or(pulse.x_center(args.n_atoms) + 4.0);
    if args.bins == 0 || !(lo < hi) {
        return Err(Error::InvalidParameter(
            "histogram needs bins >= 1 and hist-min < hist-max".into(),
        )
        .into());
    }
    let edges: Vec<f64> = (0..=args.bins)
        .map(|i| lo + (hi - lo) * i as f64 / args.bins as f64)
        .collect();
    let hist = histogram(
        protocol,
        args.hist_samples.unwrap_or(args.runs),
        &edges,
        args.condition_n,
    )?;
    let model = OutcomeModel::binomial(*pulse, args.n_atoms);
    let analytic = |a: f64, b: f64| -> cavity_qnd::Result<f64> {
        let bin = AcceptanceWindow::new(a, b)?;
        let mass = match args.condition_n {
            Some(n) => component_mass(n, &bin, pulse)?.total(),
            None => success_probability(&bin, &model)?,
        };
        Ok(mass / (b - a))
    };

    let mut out = output::open(path)?;
    output::header(out.as_mut(), "montecarlo-histogram", config, extra)?;
    let mut w = output::writer(out);
    w.write_record([
        "bin_lo",
        "bin_hi",
        "count",
        "density",
        "error",
        "analytic_density",
    ])?;
    for (i, e) in hist.edges.windows(2).enumerate() {
        w.write_record([
            num(e[0]),
            num(e[1]),
            hist.counts[i].to_string(),
            num(hist.density[i]),
            num(hist.errors[i]),
            num(analytic(e[0], e[1]).unwrap_or(f64::NAN)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Args)]
pub struct GateCheckArgs {
    /// Append a spurious level flip to this table entry (0-3) before checking.
    #[arg(long)]
    corrupt_entry: Option<usize>,
    #[arg(long, default_value = "1e-12")]
    tolerance: f64,
    #[arg(long, short, default_value = "-")]
    output: String,
}

pub fn gate_check(args: &GateCheckArgs, config: &[(String, String)]) -> Result<Status, CliError> {
    let mut table = CorrectionTable::standard();
    if let Some(k) = args.corrupt_entry {
        table = table.with_corrupted_entry(k)?;
    }
    let checks = verify_table(&table, args.tolerance)?;

    let mut extra = vec![format!("table_sha256={}", table.digest())];
    extra.extend(table.to_string().lines().map(|l| format!("correction={l}")));
    let mut out = output::open(&args.output)?;
    output::header(out.as_mut(), "gate-check", config, &extra)?;
    let mut w = output::writer(out);
    w.write_record([
        "control_in",
        "target_in",
        "control_result",
        "target_result",
        "probability",
        "amplitude_error",
        "passed",
    ])?;
    for c in &checks {
        w.write_record([
            c.input.0.to_string(),
            c.input.1.to_string(),
            c.control_result.to_string(),
            c.target_result.to_string(),
            num(c.probability),
            num(c.amplitude_error),
            c.passed.to_string(),
        ])?;
    }
    w.flush()?;

    let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
    if failed.is_empty() {
        return Ok(Status::Ok);
    }
    eprintln!("{} of {} cases failed:", failed.len(), checks.len());
    for c in failed {
        eprintln!(
            "  input |{}{}> record ({}, {}): amplitude error {}",
            c.input.0, c.input.1, c.control_result, c.target_result, c.amplitude_error
        );
    }
    Ok(Status::ValidationFailed)
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long, default_value = "1e2")]
    cmin: f64,
    #[arg(long, default_value = "1e5")]
    cmax: f64,
    #[arg(long, default_value_t = 13)]
    points: usize,
    /// Success probability of the measurement scheme.
    #[arg(long, default_value_t = 0.3)]
    ps: f64,
    /// Coefficient c in the unitary-scheme error 2c/sqrt(C).
    #[arg(long, default_value_t = 0.5)]
    coefficient: f64,
    /// Target errors for the finesse-requirement inversion.
    #[arg(long, default_value = "0.1,0.05,0.01,0.005,0.001")]
    targets: List<f64>,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    #[arg(long, short, default_value = "-")]
    output: String,
}

pub fn scaling_compare(
    args: &ScalingArgs,
    config: &[(String, String)],
) -> Result<Status, CliError> {
    let cs = cooperativities(args.cmin, args.cmax, args.points)?;
    let coefficient = BudgetCoefficient(args.coefficient);
    let curve = sweep_curve_with(
        &cs,
        args.ps,
        FidelityMode::SingleShot,
        &args.optimizer.settings(),
    )?;
    let all_converged = curve.iter().all(|r| r.converged);

    let mut extra = Vec::new();
    match fit_measurement_scaling(&curve) {
        Ok(fit) => {
            extra.push(format!("fit_A={}", num(fit.measurement.coefficient)));
            extra.push(format!(
                "fit_A_max_relative_residual={}",
                num(fit.measurement.max_relative_residual)
            ));
            extra.push(format!(
                "alternative_B={}",
                num(fit.alternative.coefficient)
            ));
            extra.push(format!(
                "alternative_B_max_relative_residual={}",
                num(fit.alternative.max_relative_residual)
            ));
            let measurement = FinesseScheme::Measurement {
                coefficient: fit.measurement.coefficient,
            };
            let unitary = FinesseScheme::Unitary { coefficient };
            let show =
                |r: cavity_qnd::Result<f64>| r.map(num).unwrap_or_else(|_| "out_of_range".into());
            for &e in &args.targets.0 {
                extra.push(format!(
                    "finesse target_error={} measurement_cooperativity={} unitary_cooperativity={}",
                    num(e),
                    show(finesse_requirement(e, measurement)),
                    show(finesse_requirement(e, unitary)),
                ));
            }
        }
        Err(e) => extra.push(format!("fit_A=unavailable ({e})")),
    }

    let mut out = output::open(&args.output)?;
    output::header(out.as_mut(), "scaling-compare", config, &extra)?;
    let mut w = output::writer(out);
    w.write_record([
        "cooperativity",
        "measurement_error",
        "unitary_error",
        "ratio",
        "converged",
    ])?;
    for r in &curve {
        let c = r.problem.cooperativity;
        let unitary = unitary_scheme_error(&UnitaryComparisonParams::new(c)?, coefficient).error;
        w.write_record([
            num(c),
            num(r.error),
            num(unitary),
            num(r.error / unitary),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(if all_converged {
        Status::Ok
    } else {
        Status::Nonconverged
    })
}
