use cavity_qnd::gaussian::interval_mass;
use cavity_qnd::outcome_distributions::{component_mass, p_decay_two};
use cavity_qnd::protocol_sim::{histogram, sample_outcomes};
use cavity_qnd::validation::{check_bins, ks_statistic, TabulatedCdf};
use cavity_qnd::{AcceptanceWindow, ProtocolConfig, PulseConfig};

fn config(theta: f64, c: f64, seed: u64) -> ProtocolConfig {
    ProtocolConfig::new(
        2,
        PulseConfig::new(theta, c).unwrap(),
        AcceptanceWindow::unbounded(),
        seed,
    )
    .unwrap()
}

fn edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins)
        .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
        .collect()
}

#[test]
fn histogram_given_no_atoms_is_vacuum_noise() {
    let c = config(0.3, 50.0, 1);
    let h = histogram(&c, 2_000_000, &edges(-4.0, 4.0, 80), Some(0)).unwrap();
    let check = check_bins(&h, |a, b| Ok(interval_mass(a, b)), 20.0).unwrap();
    assert!(check.fraction_within() >= 0.97, "{check:?}");
}

#[test]
fn histogram_given_one_atom_matches_branch_sum() {
    let c = config(0.3, 50.0, 2);
    let pulse = c.pulse;
    let h = histogram(&c, 2_000_000, &edges(-4.0, pulse.x1() + 4.0, 100), Some(1)).unwrap();
    let check = check_bins(
        &h,
        |a, b| Ok(component_mass(1, &AcceptanceWindow::new(a, b)?, &pulse)?.total()),
        20.0,
    )
    .unwrap();
    assert!(check.fraction_within() >= 0.97, "{check:?}");
}

#[test]
fn two_atom_outcomes_match_conditional_cdf() {
    let c = config(0.5, 100.0, 3);
    let table = TabulatedCdf::for_atom_number(2, &c.pulse, 3001).unwrap();
    let mut xs: Vec<f64> = sample_outcomes(&c, 3_000_000)
        .into_iter()
        .filter(|s| s.true_n == 2)
        .map(|s| s.x)
        .collect();
    let n = xs.len() as f64;
    let d = ks_statistic(&mut xs, |x| table.eval(x));
    // 1.63/sqrt(n) is the 1% critical value.
    assert!(d < 1.63 / n.sqrt(), "D = {d}, n = {n}");
}

#[test]
fn two_atom_decay_density_matches_sampled_clocks() {
    // Among two-atom attempts with at least one decay, the fraction landing
    // in a bin estimates the decay-branch mass there.
    let c = config(0.5, 100.0, 4);
    let pulse = c.pulse;
    let samples = sample_outcomes(&c, 4_000_000);
    let twos: Vec<_> = samples.iter().filter(|s| s.true_n == 2).collect();
    let n = twos.len() as f64;
    let (a, b) = (pulse.x1() - 0.2, pulse.x1() + 0.2);
    let hits = twos
        .iter()
        .filter(|s| s.decays > 0 && s.x >= a && s.x < b)
        .count() as f64;
    let p = hits / n;
    let exact = component_mass(2, &AcceptanceWindow::new(a, b).unwrap(), &pulse)
        .unwrap()
        .decay;
    assert!(
        (p - exact).abs() < 3.0 * (p * (1.0 - p) / n).sqrt(),
        "{p} vs {exact}"
    );
    let mid = p_decay_two(pulse.x1(), &pulse).unwrap() * (b - a);
    assert!((mid - exact).abs() < 1e-2 * exact);
}
