//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use cavity_qnd::gate_sim::{
    cnot_protocol, verify_table, BranchPolicy, CorrectionTable, TwoAtomState,
};
use cavity_qnd::optimizer::{
    finesse_requirement, fit_measurement_scaling, log_space, sweep_curve, unitary_scheme_error,
    BudgetCoefficient, FidelityMode, FinesseScheme, OptimizationResult, UnitaryComparisonParams,
};
use cavity_qnd::outcome_distributions::{
    component_mass, fidelity_conditional, fidelity_repeated_bound, p_atoms, success_probability,
};
use cavity_qnd::protocol_sim::{histogram, run_protocol, sample_outcomes};
use cavity_qnd::quadrature::{integrate_with_breaks, Tolerance};
use cavity_qnd::validation::{check_bins, ks_statistic, TabulatedCdf};
use cavity_qnd::{AcceptanceWindow, OutcomeModel, ProtocolConfig, PulseConfig, Result};
use num_complex::Complex64;

type Outcome = Result<(bool, String)>;

struct Sweeps {
    cooperativities: Vec<f64>,
    low: Vec<OptimizationResult>,
    mid: Vec<OptimizationResult>,
    high: Vec<OptimizationResult>,
    bound: Vec<OptimizationResult>,
}

impl Sweeps {
    fn compute() -> Result<Self> {
        let cooperativities = log_space(1e2, 1e5, 13);
        Ok(Sweeps {
            low: sweep_curve(&cooperativities, 0.001, FidelityMode::SingleShot)?,
            mid: sweep_curve(&cooperativities, 0.3, FidelityMode::SingleShot)?,
            high: sweep_curve(&cooperativities, 0.5, FidelityMode::SingleShot)?,
            bound: sweep_curve(&cooperativities, 0.5, FidelityMode::RepeatedBound)?,
            cooperativities,
        })
    }
}

fn normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    for theta in [0.01, 0.1, 0.5, 1.0] {
        for c in [10.0, 100.0, 1e4] {
            let pulse = PulseConfig::new(theta, c)?;
            for n in [1u32, 2] {
                let mass = component_mass(n, &AcceptanceWindow::unbounded(), &pulse)?;
                let no_decay = (-(n as f64) * theta).exp();
                worst = worst
                    .max((mass.no_decay - no_decay).abs())
                    .max((mass.decay - (1.0 - no_decay)).abs())
                    .max((mass.total() - 1.0).abs());

                let centre = pulse.x_center(n);
                let lo = -12.0;
                let hi = centre + 12.0;
                let breaks = [0.0, pulse.x1(), centre];
                let integral = integrate_with_breaks(
                    |x| p_atoms(n, x, &pulse).unwrap(),
                    lo,
                    hi,
                    &breaks,
                    Tolerance::new(1e-12, 1e-12),
                )?;
                worst = worst.max((integral.value - 1.0).abs());
            }
        }
    }
    Ok((
        worst < 1e-8,
        format!("max deviation {worst:.2e} (tol 1e-8)"),
    ))
}

fn monte_carlo_oracle() -> Outcome {
    let start = Instant::now();
    let n = 10_000_000u64;
    let pulse = PulseConfig::new(0.2, 100.0)?;
    let model = OutcomeModel::two_atom(pulse);
    let config = ProtocolConfig::new(2, pulse, AcceptanceWindow::unbounded(), 20_240_601)?;

    let table = TabulatedCdf::for_model(&model, 4001)?;
    let mut xs: Vec<f64> = sample_outcomes(&config, n)
        .into_iter()
        .map(|s| s.x)
        .collect();
    let ks = ks_statistic(&mut xs, |x| table.eval(x));
    drop(xs);

    let lo = -4.0;
    let hi = pulse.x_center(2) + 4.0;
    let bins = 200;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
        .collect();
    let hist = histogram(&config, n, &edges, None)?;
    let bin_check = check_bins(
        &hist,
        |a, b| success_probability(&AcceptanceWindow::new(a, b)?, &model),
        20.0,
    )?;
    let elapsed = start.elapsed().as_secs_f64();

    let ok = ks < 0.003 && bin_check.fraction_within() >= 0.99;
    Ok((
        ok,
        format!(
            "KS {ks:.2e} (tol 3e-3), {}/{} bins within 3 sigma ({:.2}%, need >= 99%), {elapsed:.1} s",
            bin_check.within,
            bin_check.checked,
            100.0 * bin_check.fraction_within()
        ),
    ))
}

fn fig2(s: &Sweeps) -> Outcome {
    let curves = [&s.low, &s.mid, &s.high, &s.bound];
    let converged = curves.iter().all(|c| c.iter().all(|r| r.converged));
    let mut ordered = true;
    for i in 0..s.cooperativities.len() {
        let e: Vec<f64> = curves.iter().map(|c| c[i].error).collect();
        ordered &= e.windows(2).all(|w| w[0] < w[1]);
    }
    let monotone = curves
        .iter()
        .all(|c| c.windows(2).all(|w| w[1].error < w[0].error));
    Ok((
        converged && ordered && monotone,
        format!(
            "13 points x 4 curves: converged {converged}, order P_s 0.001 < 0.3 < 0.5 < bound {ordered}, decreasing in C {monotone}; \
             1-F at C=100: {:.3e} {:.3e} {:.3e} {:.3e}",
            s.low[0].error, s.mid[0].error, s.high[0].error, s.bound[0].error
        ),
    ))
}

fn scaling_law(s: &Sweeps) -> Outcome {
    let fit = fit_measurement_scaling(&s.mid)?;
    Ok((
        fit.matches() && fit.preferred(),
        format!(
            "A = {:.4}, max rel. residual {:.3} (tol 1.0) vs B/sqrt(C) residual {:.3}",
            fit.measurement.coefficient,
            fit.measurement.max_relative_residual,
            fit.alternative.max_relative_residual
        ),
    ))
}

fn unitary_anchor(s: &Sweeps) -> Outcome {
    let unitary = unitary_scheme_error(
        &UnitaryComparisonParams::new(100.0)?,
        BudgetCoefficient::HALF,
    )
    .error;
    let measured = s.mid[0].error;
    Ok((
        (unitary - 0.1).abs() < 1e-12 && measured < unitary,
        format!("unitary 1-F at C=100 = {unitary} (coefficient 1/2), measurement 1-F at P_s=0.3 = {measured:.4e}"),
    ))
}

fn protocol_statistics() -> Outcome {
    // theta -> 0 with x_1 = 20: modes separated by 40 noise widths.
    let pulse = PulseConfig::new(1e-9, 1e11)?;
    let runs = 1_000_000;
    let pair = ProtocolConfig::new(2, pulse, AcceptanceWindow::new(15.0, 25.0)?, 11)?;
    let triple = ProtocolConfig::new(3, pulse, AcceptanceWindow::new(15.0, 45.0)?, 12)?
        .with_accepted(vec![1, 2])?;
    let a = run_protocol(&pair, runs)?;
    let b = run_protocol(&triple, runs)?;
    let ok_a = (a.attempts_mean - 2.0).abs() <= a.attempts_mean_radius && a.censored == 0;
    let ok_b = (b.attempts_mean - 4.0 / 3.0).abs() <= b.attempts_mean_radius && b.censored == 0;
    Ok((
        ok_a && ok_b,
        format!(
            "M=2 mean attempts {:.5} +/- {:.5} (expect 2), M=3 {:.5} +/- {:.5} (expect 4/3), 1e6 runs each",
            a.attempts_mean, a.attempts_mean_radius, b.attempts_mean, b.attempts_mean_radius
        ),
    ))
}

fn repeated_bound(s: &Sweeps) -> Outcome {
    let point = &s.bound[0];
    let model = OutcomeModel::two_atom(point.pulse());
    let window = point.window();
    let bound = fidelity_repeated_bound(&window, &model)?;
    let single = fidelity_conditional(&window, &model)?;
    let config = ProtocolConfig::new(2, point.pulse(), window, 77)?;
    let stats = run_protocol(&config, 1_000_000)?;
    let ok = stats.conditional_fidelity + stats.conditional_fidelity_radius >= bound
        && stats.censored == 0;
    Ok((
        ok,
        format!(
            "C=100, P_s=0.5 (theta {:.4e}, window [{:.4}, {:.4}]): MC fidelity {:.5} +/- {:.5} >= bound {:.5} (single shot {:.5})",
            point.theta_opt, window.x_a, window.x_b, stats.conditional_fidelity, stats.conditional_fidelity_radius, bound, single
        ),
    ))
}

fn cnot() -> Outcome {
    let table = CorrectionTable::standard();
    let checks = verify_table(&table, 1e-12)?;
    let worst = checks.iter().map(|c| c.amplitude_error).fold(0.0, f64::max);
    let all = checks.len() == 16 && checks.iter().all(|c| c.passed);

    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let input = TwoAtomState::from_qubits([[h, z], [h, z]])?;
    let bell = TwoAtomState::from_qubits([[h, z], [z, h]])?;
    let bell_err = cnot_protocol(&input, BranchPolicy::Enumerate, &table)?
        .iter()
        .map(|b| b.final_state.max_difference(&bell))
        .fold(0.0, f64::max);
    Ok((
        all && bell_err < 1e-12,
        format!(
            "{}/16 cases pass, worst amplitude error {worst:.1e}; Bell state error {bell_err:.1e} (tol 1e-12); table {}",
            checks.iter().filter(|c| c.passed).count(),
            &table.digest()[..16]
        ),
    ))
}

fn finesse(s: &Sweeps) -> Outcome {
    let mut unitary_dev: f64 = 0.0;
    for e in [0.2, 0.1, 0.05, 0.01, 1e-3] {
        let scheme = FinesseScheme::Unitary {
            coefficient: BudgetCoefficient::HALF,
        };
        let ratio = finesse_requirement(e / 2.0, scheme)? / finesse_requirement(e, scheme)?;
        unitary_dev = unitary_dev.max((ratio - 4.0).abs());
    }
    let a = fit_measurement_scaling(&s.mid)?.measurement.coefficient;
    let scheme = FinesseScheme::Measurement { coefficient: a };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in log_space(1e3, 1e5, 21) {
        let e = scheme.error_at(c);
        let ratio = finesse_requirement(e / 2.0, scheme)? / c;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok((
        unitary_dev < 1e-12 && lo > 2.0 && hi < 2.5,
        format!("unitary ratio 4 (max deviation {unitary_dev:.1e}); measurement ratio in [{lo:.4}, {hi:.4}] over C in [1e3, 1e5]"),
    ))
}

fn report(name: &str, outcome: Outcome, failures: &mut usize) {
    match outcome {
        Ok((true, detail)) => println!("PASS  {name}: {detail}"),
        Ok((false, detail)) => {
            *failures += 1;
            println!("FAIL  {name}: {detail}");
        }
        Err(e) => {
            *failures += 1;
            println!("FAIL  {name}: error: {e}");
        }
    }
}

fn main() -> ExitCode {
    let mut failures = 0;
    println!("acceptance suite");
    report("normalization identities", normalization(), &mut failures);
    report(
        "Monte Carlo vs quadrature",
        monte_carlo_oracle(),
        &mut failures,
    );
    match Sweeps::compute() {
        Ok(s) => {
            report("fidelity curves vs cooperativity", fig2(&s), &mut failures);
            report("ln(C)/C scaling", scaling_law(&s), &mut failures);
            report("unitary-scheme anchor", unitary_anchor(&s), &mut failures);
            report(
                "repeated-measurement bound",
                repeated_bound(&s),
                &mut failures,
            );
            report("finesse requirements", finesse(&s), &mut failures);
        }
        Err(e) => {
            failures += 5;
            println!("FAIL  optimizer sweeps: error: {e}");
        }
    }
    report("protocol statistics", protocol_statistics(), &mut failures);
    report("CNOT correctness", cnot(), &mut failures);
    if failures == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
