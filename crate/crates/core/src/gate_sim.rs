//! Exact state-vector simulation of the measurement-based CNOT gate.
//!
//! Each atom has the five basis states `g0, g1, f0, f1, o` (in that order):
//! a level `g`/`f` carrying a qubit `0`/`1`, plus an auxiliary state `o` that
//! the ideal gate never populates. Atom 0 is the control and atom 1 the
//! target; two-atom amplitudes are stored at index `5 * b0 + b1`.
//!
//! The gate consumes a level-entangled pair `(|gf> + |fg>)/sqrt 2` prepared
//! independently of the qubits, applies local swaps and level measurements,
//! and finishes with single-atom corrections chosen by the two measurement
//! results. The corrections live in a [`CorrectionTable`].

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::optimizer::{optimize, FidelityMode, OptimizationProblem, OptimizationResult};

const DIM: usize = 5;
const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    G0,
    G1,
    F0,
    F1,
    O,
}

impl Basis {
    pub const ALL: [Basis; 5] = [Basis::G0, Basis::G1, Basis::F0, Basis::F1, Basis::O];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_level(level: Level, qubit: u8) -> Basis {
        match (level, qubit) {
            (Level::G, 0) => Basis::G0,
            (Level::G, _) => Basis::G1,
            (Level::F, 0) => Basis::F0,
            (Level::F, _) => Basis::F1,
        }
    }

    pub fn level(self) -> Option<Level> {
        match self {
            Basis::G0 | Basis::G1 => Some(Level::G),
            Basis::F0 | Basis::F1 => Some(Level::F),
            Basis::O => None,
        }
    }

    pub fn qubit(self) -> Option<u8> {
        match self {
            Basis::G0 | Basis::F0 => Some(0),
            Basis::G1 | Basis::F1 => Some(1),
            Basis::O => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    G,
    F,
}

impl Level {
    pub fn flipped(self) -> Level {
        match self {
            Level::G => Level::F,
            Level::F => Level::G,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::G => "g",
            Level::F => "f",
        })
    }
}

fn check_atom(atom: usize) -> Result<()> {
    if atom < 2 {
        Ok(())
    } else {
        Err(Error::BadIndex(atom))
    }
}

fn norm_sqr(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

fn check_norm(amps: &[Complex64]) -> Result<()> {
    let n = norm_sqr(amps);
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidParameter(format!(
            "state norm^2 is {n}, expected 1"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomState {
    amplitudes: [Complex64; DIM],
}

impl AtomState {
    pub fn new(amplitudes: [Complex64; DIM]) -> Result<Self> {
        check_norm(&amplitudes)?;
        Ok(AtomState { amplitudes })
    }

    pub fn basis(b: Basis) -> Self {
        let mut amplitudes = [Complex64::new(0.0, 0.0); DIM];
        amplitudes[b.index()] = Complex64::new(1.0, 0.0);
        AtomState { amplitudes }
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM] {
        &self.amplitudes
    }

    pub fn amplitude(&self, b: Basis) -> Complex64 {
        self.amplitudes[b.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoAtomState {
    amplitudes: [Complex64; DIM * DIM],
}

impl TwoAtomState {
    pub fn new(amplitudes: [Complex64; DIM * DIM]) -> Result<Self> {
        check_norm(&amplitudes)?;
        Ok(TwoAtomState { amplitudes })
    }

    pub fn product(a: &AtomState, b: &AtomState) -> Self {
        let mut amplitudes = [Complex64::new(0.0, 0.0); DIM * DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                amplitudes[DIM * i + j] = a.amplitudes[i] * b.amplitudes[j];
            }
        }
        TwoAtomState { amplitudes }
    }

    pub fn basis(b0: Basis, b1: Basis) -> Self {
        Self::product(&AtomState::basis(b0), &AtomState::basis(b1))
    }

    /// Two-qubit state `sum a[i][j] |i>|j>` stored in the `g` levels.
    pub fn from_qubits(a: [[Complex64; 2]; 2]) -> Result<Self> {
        let mut amplitudes = [Complex64::new(0.0, 0.0); DIM * DIM];
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                amplitudes[idx(
                    Basis::from_level(Level::G, i as u8),
                    Basis::from_level(Level::G, j as u8),
                )] = v;
            }
        }
        Self::new(amplitudes)
    }

    /// Computational basis state `|i j>` on the `g` levels.
    pub fn computational(i: u8, j: u8) -> Self {
        Self::basis(
            Basis::from_level(Level::G, i),
            Basis::from_level(Level::G, j),
        )
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM * DIM] {
        &self.amplitudes
    }

    pub fn amplitude(&self, b0: Basis, b1: Basis) -> Complex64 {
        self.amplitudes[idx(b0, b1)]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    /// Probability weight outside the `|g g>` level manifold.
    pub fn weight_outside_gg(&self) -> f64 {
        pairs()
            .filter(|(b0, b1)| !(b0.level() == Some(Level::G) && b1.level() == Some(Level::G)))
            .map(|(b0, b1)| self.amplitude(b0, b1).norm_sqr())
            .sum()
    }

    /// Qubit amplitudes of a state supported on `|g g>`.
    pub fn qubit_amplitudes(&self) -> Result<[[Complex64; 2]; 2]> {
        let outside = self.weight_outside_gg();
        if outside > NORM_TOLERANCE {
            return Err(Error::Domain(format!(
                "state has weight {outside:e} outside the g-level manifold"
            )));
        }
        let mut a = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.amplitude(
                    Basis::from_level(Level::G, i as u8),
                    Basis::from_level(Level::G, j as u8),
                );
            }
        }
        Ok(a)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &TwoAtomState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest amplitude difference.
    pub fn max_difference(&self, other: &TwoAtomState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn apply(&self, atom: usize, m: &Matrix) -> TwoAtomState {
        let mut out = [Complex64::new(0.0, 0.0); DIM * DIM];
        for i in 0..DIM {
            for j in 0..DIM {
                let v = self.amplitudes[DIM * i + j];
                if v == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..DIM {
                    if atom == 0 {
                        out[DIM * k + j] += m[k][i] * v;
                    } else {
                        out[DIM * i + k] += m[k][j] * v;
                    }
                }
            }
        }
        TwoAtomState { amplitudes: out }
    }
}

fn idx(b0: Basis, b1: Basis) -> usize {
    DIM * b0.index() + b1.index()
}

fn pairs() -> impl Iterator<Item = (Basis, Basis)> {
    Basis::ALL
        .into_iter()
        .flat_map(|a| Basis::ALL.into_iter().map(move |b| (a, b)))
}

/// Single-atom operator; `m[row][column]`.
pub type Matrix = [[Complex64; DIM]; DIM];

fn permutation(pairs: &[(Basis, Basis)]) -> Matrix {
    let mut m = identity();
    for &(a, b) in pairs {
        let (i, j) = (a.index(), b.index());
        m[i][i] = Complex64::new(0.0, 0.0);
        m[j][j] = Complex64::new(0.0, 0.0);
        m[i][j] = Complex64::new(1.0, 0.0);
        m[j][i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn identity() -> Matrix {
    let mut m = [[Complex64::new(0.0, 0.0); DIM]; DIM];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut m = [[Complex64::new(0.0, 0.0); DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            m[i][j] = (0..DIM).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

pub fn adjoint(a: &Matrix) -> Matrix {
    let mut m = [[Complex64::new(0.0, 0.0); DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            m[i][j] = a[j][i].conj();
        }
    }
    m
}

/// Single-atom operations used by the gate and its corrections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LocalOp {
    /// `|f1> <-> |g1>`.
    SwapF1G1,
    /// `|L0> <-> |L1>` within one level.
    QubitSwap(Level),
    /// `|g> -> (|g> + |f>)/sqrt 2`, `|f> -> (-|g> + |f>)/sqrt 2` on both qubit values.
    PiHalf,
    /// `|g q> <-> |f q>` for both qubit values.
    LevelFlip,
    /// Sign change of both states carrying the given qubit value.
    QubitPhase(u8),
}

impl LocalOp {
    pub fn matrix(self) -> Matrix {
        match self {
            LocalOp::SwapF1G1 => permutation(&[(Basis::F1, Basis::G1)]),
            LocalOp::QubitSwap(level) => {
                permutation(&[(Basis::from_level(level, 0), Basis::from_level(level, 1))])
            }
            LocalOp::LevelFlip => permutation(&[(Basis::G0, Basis::F0), (Basis::G1, Basis::F1)]),
            LocalOp::QubitPhase(q) => {
                let mut m = identity();
                for level in [Level::G, Level::F] {
                    let i = Basis::from_level(level, q).index();
                    m[i][i] = Complex64::new(-1.0, 0.0);
                }
                m
            }
            LocalOp::PiHalf => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                let mut m = identity();
                for q in 0..2 {
                    let g = Basis::from_level(Level::G, q).index();
                    let f = Basis::from_level(Level::F, q).index();
                    m[g][g] = h;
                    m[f][g] = h;
                    m[g][f] = -h;
                    m[f][f] = h;
                }
                m
            }
        }
    }

    pub fn apply(self, state: &TwoAtomState, atom: usize) -> Result<TwoAtomState> {
        check_atom(atom)?;
        Ok(state.apply(atom, &self.matrix()))
    }
}

impl fmt::Display for LocalOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalOp::SwapF1G1 => write!(f, "swap_f1_g1"),
            LocalOp::QubitSwap(level) => write!(f, "qubit_swap_{level}"),
            LocalOp::PiHalf => write!(f, "pi_half"),
            LocalOp::LevelFlip => write!(f, "level_flip"),
            LocalOp::QubitPhase(q) => write!(f, "qubit_phase_{q}"),
        }
    }
}

/// `|Phi_q> (x) (|g f> + |f g>)/sqrt 2` from `|Phi_q>` on the `g` levels.
pub fn prepare_entangled_levels(qubits: &TwoAtomState) -> Result<TwoAtomState> {
    let a = qubits.qubit_amplitudes()?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut amplitudes = [Complex64::new(0.0, 0.0); DIM * DIM];
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let (i, j) = (i as u8, j as u8);
            amplitudes[idx(
                Basis::from_level(Level::G, i),
                Basis::from_level(Level::F, j),
            )] = v * h;
            amplitudes[idx(
                Basis::from_level(Level::F, i),
                Basis::from_level(Level::G, j),
            )] = v * h;
        }
    }
    TwoAtomState::new(amplitudes)
}

pub fn swap_f1_g1(state: &TwoAtomState, atom: usize) -> Result<TwoAtomState> {
    LocalOp::SwapF1G1.apply(state, atom)
}

pub fn conditional_qubit_swap(
    state: &TwoAtomState,
    atom: usize,
    level: Level,
) -> Result<TwoAtomState> {
    LocalOp::QubitSwap(level).apply(state, atom)
}

pub fn level_pi_half_pulse(state: &TwoAtomState, atom: usize) -> Result<TwoAtomState> {
    LocalOp::PiHalf.apply(state, atom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutcome {
    pub atom: usize,
    pub result: Level,
    pub probability: f64,
    pub state: TwoAtomState,
}

pub enum MeasurementChoice<'a> {
    Forced(Level),
    Random(&'a mut dyn RngCore),
}

/// Projective measurement of the level (`g` or `f`) of one atom.
pub fn measure_level(
    state: &TwoAtomState,
    atom: usize,
    choice: MeasurementChoice<'_>,
) -> Result<MeasurementOutcome> {
    check_atom(atom)?;
    let project = |level: Level| {
        let mut amplitudes = state.amplitudes;
        for (b0, b1) in pairs() {
            let b = if atom == 0 { b0 } else { b1 };
            if b.level() != Some(level) {
                amplitudes[idx(b0, b1)] = Complex64::new(0.0, 0.0);
            }
        }
        amplitudes
    };
    let g = project(Level::G);
    let total = state.norm_sqr();
    let p_g = norm_sqr(&g) / total;
    let result = match choice {
        MeasurementChoice::Forced(level) => level,
        MeasurementChoice::Random(rng) => {
            if rng.random::<f64>() < p_g {
                Level::G
            } else {
                Level::F
            }
        }
    };
    let (amplitudes, probability) = match result {
        Level::G => (g, p_g),
        Level::F => {
            let f = project(Level::F);
            let p = norm_sqr(&f) / total;
            (f, p)
        }
    };
    if probability <= 0.0 {
        return Err(Error::Domain(format!(
            "level {result} of atom {atom} has zero probability"
        )));
    }
    let scale = 1.0 / (probability * total).sqrt();
    Ok(MeasurementOutcome {
        atom,
        result,
        probability,
        state: TwoAtomState {
            amplitudes: amplitudes.map(|a| a * scale),
        },
    })
}

/// Operations applied after a (control, target) measurement record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionEntry {
    pub control: Level,
    pub target: Level,
    /// `(atom, op)` pairs, applied in order.
    pub ops: Vec<(usize, LocalOp)>,
}

type StaticEntry = (Level, Level, &'static [(usize, LocalOp)]);

/// Corrections for control atom 0 and target atom 1.
///
/// After the conditional swap the qubits already carry the CNOT, and the
/// target level equals `f` exactly when the control qubit is `0` (control
/// result `g`) or `1` (control result `f`). The π/2 pulse and target
/// measurement erase that correlation up to a sign on one control qubit
/// value, which the phase removes; level flips return both atoms to `g`.
pub const STANDARD_CORRECTIONS: [StaticEntry; 4] = [
    (Level::G, Level::G, &[(0, LocalOp::QubitPhase(0))]),
    (Level::G, Level::F, &[(1, LocalOp::LevelFlip)]),
    (
        Level::F,
        Level::G,
        &[(0, LocalOp::QubitPhase(1)), (0, LocalOp::LevelFlip)],
    ),
    (
        Level::F,
        Level::F,
        &[(0, LocalOp::LevelFlip), (1, LocalOp::LevelFlip)],
    ),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrectionTable {
    pub entries: Vec<CorrectionEntry>,
}

impl Default for CorrectionTable {
    fn default() -> Self {
        Self::standard()
    }
}

impl CorrectionTable {
    pub fn standard() -> Self {
        CorrectionTable {
            entries: STANDARD_CORRECTIONS
                .iter()
                .map(|&(control, target, ops)| CorrectionEntry {
                    control,
                    target,
                    ops: ops.to_vec(),
                })
                .collect(),
        }
    }

    pub fn lookup(&self, control: Level, target: Level) -> Result<&CorrectionEntry> {
        self.entries
            .iter()
            .find(|e| e.control == control && e.target == target)
            .ok_or_else(|| Error::Domain(format!("no correction for record ({control}, {target})")))
    }

    /// Copy with an extra target level flip appended to entry `index`, used
    /// to check that validation catches a wrong table.
    pub fn with_corrupted_entry(&self, index: usize) -> Result<Self> {
        let mut table = self.clone();
        table
            .entries
            .get_mut(index)
            .ok_or(Error::BadIndex(index))?
            .ops
            .push((1, LocalOp::LevelFlip));
        Ok(table)
    }

    /// SHA-256 of the canonical text form, hex encoded.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_string().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl fmt::Display for CorrectionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            write!(f, "{} {}:", e.control, e.target)?;
            for (atom, op) in &e.ops {
                write!(f, " {op}@{atom}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateBranch {
    pub control_result: Level,
    pub target_result: Level,
    pub probability: f64,
    pub final_state: TwoAtomState,
}

pub enum BranchPolicy<'a> {
    Enumerate,
    Random(&'a mut dyn RngCore),
}

fn choose<'a>(
    forced: Option<Level>,
    rng: &'a mut Option<&mut dyn RngCore>,
) -> MeasurementChoice<'a> {
    match (forced, rng) {
        (Some(level), _) => MeasurementChoice::Forced(level),
        (None, Some(rng)) => MeasurementChoice::Random(&mut **rng),
        (None, None) => unreachable!("random measurement needs a generator"),
    }
}

fn run_branch(
    prepared: &TwoAtomState,
    table: &CorrectionTable,
    forced: [Option<Level>; 2],
    mut rng: Option<&mut dyn RngCore>,
) -> Result<GateBranch> {
    let swapped = swap_f1_g1(prepared, 0)?;
    let mc = measure_level(&swapped, 0, choose(forced[0], &mut rng))?;
    let state = conditional_qubit_swap(&mc.state, 1, mc.result)?;
    let state = level_pi_half_pulse(&state, 1)?;
    let mt = measure_level(&state, 1, choose(forced[1], &mut rng))?;
    let entry = table.lookup(mc.result, mt.result)?;
    let mut state = mt.state;
    for &(atom, op) in &entry.ops {
        state = op.apply(&state, atom)?;
    }
    Ok(GateBranch {
        control_result: mc.result,
        target_result: mt.result,
        probability: mc.probability * mt.probability,
        final_state: state,
    })
}

/// Runs the measurement-based CNOT (control atom 0, target atom 1) on a
/// qubit state stored in the `g` levels. `Enumerate` returns all four
/// measurement branches in the order (g,g), (g,f), (f,g), (f,f); `Random`
/// returns the single branch sampled with Born-rule probabilities.
pub fn cnot_protocol(
    input: &TwoAtomState,
    policy: BranchPolicy<'_>,
    table: &CorrectionTable,
) -> Result<Vec<GateBranch>> {
    let prepared = prepare_entangled_levels(input)?;
    match policy {
        BranchPolicy::Enumerate => {
            let mut out = Vec::with_capacity(4);
            for c in [Level::G, Level::F] {
                for t in [Level::G, Level::F] {
                    out.push(run_branch(&prepared, table, [Some(c), Some(t)], None)?);
                }
            }
            Ok(out)
        }
        BranchPolicy::Random(rng) => {
            Ok(vec![run_branch(&prepared, table, [None, None], Some(rng))?])
        }
    }
}

/// Ideal CNOT on qubit amplitudes (control first).
pub fn ideal_cnot(a: [[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    [a[0], [a[1][1], a[1][0]]]
}

/// Result of checking one input against the ideal gate.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseCheck {
    pub input: (u8, u8),
    pub control_result: Level,
    pub target_result: Level,
    pub probability: f64,
    pub amplitude_error: f64,
    pub passed: bool,
}

/// Enumerates all four computational inputs and four branches and compares
/// each final state with `CNOT|input> (x) |g g>` amplitude by amplitude.
pub fn verify_table(table: &CorrectionTable, tolerance: f64) -> Result<Vec<CaseCheck>> {
    let mut out = Vec::with_capacity(16);
    for i in 0..2u8 {
        for j in 0..2u8 {
            let input = TwoAtomState::computational(i, j);
            let expected = TwoAtomState::from_qubits(ideal_cnot(input.qubit_amplitudes()?))?;
            for b in cnot_protocol(&input, BranchPolicy::Enumerate, table)? {
                let err = b.final_state.max_difference(&expected);
                out.push(CaseCheck {
                    input: (i, j),
                    control_result: b.control_result,
                    target_result: b.target_result,
                    probability: b.probability,
                    amplitude_error: err,
                    passed: err < tolerance,
                });
            }
        }
    }
    Ok(out)
}

/// Realistic gate quality, taking the gate error to equal the error of
/// the heralded level-entangled pair it consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct GateEstimate {
    pub preparation: OptimizationResult,
    pub gate_error: f64,
    pub gate_fidelity: f64,
}

pub fn gate_fidelity_estimate(
    cooperativity: f64,
    target_success: f64,
    mode: FidelityMode,
) -> Result<GateEstimate> {
    let preparation = optimize(&OptimizationProblem::new(
        cooperativity,
        target_success,
        mode,
    )?)?;
    Ok(GateEstimate {
        gate_error: preparation.error,
        gate_fidelity: 1.0 - preparation.error,
        preparation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .all(|(x, y)| (x - y).norm() < tol)
    }

    const OPS: [LocalOp; 7] = [
        LocalOp::SwapF1G1,
        LocalOp::QubitSwap(Level::G),
        LocalOp::QubitSwap(Level::F),
        LocalOp::PiHalf,
        LocalOp::LevelFlip,
        LocalOp::QubitPhase(0),
        LocalOp::QubitPhase(1),
    ];

    #[test]
    fn operations_are_unitary() {
        for op in OPS {
            let m = op.matrix();
            assert!(
                close(&mat_mul(&m, &adjoint(&m)), &identity(), 1e-12),
                "{op}"
            );
        }
    }

    #[test]
    fn permutations_are_involutions() {
        for op in [
            LocalOp::SwapF1G1,
            LocalOp::QubitSwap(Level::G),
            LocalOp::QubitSwap(Level::F),
            LocalOp::LevelFlip,
        ] {
            let m = op.matrix();
            assert!(close(&mat_mul(&m, &m), &identity(), 1e-15));
        }
    }

    #[test]
    fn pi_half_fourth_power_is_minus_identity_on_levels() {
        let r = LocalOp::PiHalf.matrix();
        let r4 = mat_mul(&mat_mul(&r, &r), &mat_mul(&r, &r));
        let mut expected = identity().map(|row| row.map(|v| -v));
        expected[Basis::O.index()][Basis::O.index()] = c(1.0);
        assert!(close(&r4, &expected, 1e-12));

        let s = level_pi_half_pulse(&TwoAtomState::basis(Basis::G0, Basis::O), 0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(Basis::G0, Basis::O) - c(h)).norm() < 1e-15);
        assert!((s.amplitude(Basis::F0, Basis::O) - c(h)).norm() < 1e-15);
        let s = level_pi_half_pulse(&TwoAtomState::basis(Basis::O, Basis::F1), 1).unwrap();
        assert!((s.amplitude(Basis::O, Basis::G1) - c(-h)).norm() < 1e-15);
    }

    #[test]
    fn swap_examples() {
        let s = swap_f1_g1(&TwoAtomState::basis(Basis::F1, Basis::G0), 0).unwrap();
        assert_eq!(s, TwoAtomState::basis(Basis::G1, Basis::G0));
        for b in [Basis::G0, Basis::F0, Basis::O] {
            let s = TwoAtomState::basis(Basis::O, b);
            assert_eq!(swap_f1_g1(&s, 1).unwrap(), s);
        }
        let s = conditional_qubit_swap(&TwoAtomState::basis(Basis::G0, Basis::G0), 1, Level::G)
            .unwrap();
        assert_eq!(s, TwoAtomState::basis(Basis::G0, Basis::G1));
        let s = TwoAtomState::basis(Basis::G0, Basis::F0);
        assert_eq!(conditional_qubit_swap(&s, 1, Level::G).unwrap(), s);
        assert_eq!(swap_f1_g1(&s, 2), Err(Error::BadIndex(2)));
        assert_eq!(
            conditional_qubit_swap(&s, 5, Level::F),
            Err(Error::BadIndex(5))
        );
        assert_eq!(level_pi_half_pulse(&s, 2), Err(Error::BadIndex(2)));
    }

    #[test]
    fn preparation() {
        let s = prepare_entangled_levels(&TwoAtomState::computational(0, 0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(Basis::G0, Basis::F0) - c(h)).norm() < 1e-15);
        assert!((s.amplitude(Basis::F0, Basis::G0) - c(h)).norm() < 1e-15);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);

        let bad = TwoAtomState::basis(Basis::F0, Basis::G0);
        assert!(matches!(
            prepare_entangled_levels(&bad),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn measurement_statistics() {
        let s = prepare_entangled_levels(&TwoAtomState::computational(1, 0)).unwrap();
        for level in [Level::G, Level::F] {
            let m = measure_level(&s, 1, MeasurementChoice::Forced(level)).unwrap();
            assert!((m.probability - 0.5).abs() < 1e-15);
            assert!((m.state.norm_sqr() - 1.0).abs() < 1e-12);
        }
        let p = TwoAtomState::basis(Basis::G0, Basis::F1);
        let m = measure_level(&p, 0, MeasurementChoice::Forced(Level::G)).unwrap();
        assert_eq!(m.probability, 1.0);
        assert!(matches!(
            measure_level(&p, 0, MeasurementChoice::Forced(Level::F)),
            Err(Error::Domain(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = measure_level(&p, 0, MeasurementChoice::Random(&mut rng)).unwrap();
        assert_eq!(m.result, Level::G);
    }

    #[test]
    fn standard_table_passes_all_cases() {
        let checks = verify_table(&CorrectionTable::standard(), 1e-12).unwrap();
        assert_eq!(checks.len(), 16);
        for ch in &checks {
            assert!(ch.passed, "{ch:?}");
            assert!((ch.probability - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn truth_table_examples() {
        let table = CorrectionTable::standard();
        for ((i, j), (k, l)) in [
            ((0, 0), (0, 0)),
            ((0, 1), (0, 1)),
            ((1, 0), (1, 1)),
            ((1, 1), (1, 0)),
        ] {
            let expected = TwoAtomState::computational(k, l);
            let branches = cnot_protocol(
                &TwoAtomState::computational(i, j),
                BranchPolicy::Enumerate,
                &table,
            )
            .unwrap();
            let total: f64 = branches.iter().map(|b| b.probability).sum();
            assert!((total - 1.0).abs() < 1e-12);
            for b in branches {
                assert!(b.final_state.max_difference(&expected) < 1e-12);
            }
        }
    }

    #[test]
    fn bell_state_from_superposition() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let input = TwoAtomState::from_qubits([[c(h), c(0.0)], [c(h), c(0.0)]]).unwrap();
        let bell = TwoAtomState::from_qubits([[c(h), c(0.0)], [c(0.0), c(h)]]).unwrap();
        for b in cnot_protocol(
            &input,
            BranchPolicy::Enumerate,
            &CorrectionTable::standard(),
        )
        .unwrap()
        {
            assert!(b.final_state.max_difference(&bell) < 1e-12);
            assert!((bell.inner(&b.final_state).norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_policy_and_involution() {
        let table = CorrectionTable::standard();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut seen = std::collections::HashSet::new();
        for i in 0..2 {
            for j in 0..2 {
                let input = TwoAtomState::computational(i, j);
                for _ in 0..20 {
                    let once = cnot_protocol(&input, BranchPolicy::Random(&mut rng), &table)
                        .unwrap()
                        .remove(0);
                    seen.insert((once.control_result, once.target_result));
                    let twice =
                        cnot_protocol(&once.final_state, BranchPolicy::Random(&mut rng), &table)
                            .unwrap()
                            .remove(0);
                    assert!(twice.final_state.max_difference(&input) < 1e-12);
                }
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn corrupted_table_is_caught() {
        let table = CorrectionTable::standard();
        for k in 0..4 {
            let bad = table.with_corrupted_entry(k).unwrap();
            assert_ne!(bad.digest(), table.digest());
            let failures = verify_table(&bad, 1e-12)
                .unwrap()
                .iter()
                .filter(|c| !c.passed)
                .count();
            assert_eq!(failures, 4);
        }
        assert_eq!(table.with_corrupted_entry(4), Err(Error::BadIndex(4)));
    }

    #[test]
    fn digest_is_stable_hex() {
        let d = CorrectionTable::standard().digest();
        assert_eq!(d.len(), 64);
        assert!(d.chars().all(|ch| ch.is_ascii_hexdigit()));
        assert_eq!(d, CorrectionTable::default().digest());
    }

    #[test]
    fn random_unitary_inputs_give_cnot() {
        // Generic qubit input with complex amplitudes.
        let raw = [
            [Complex64::new(0.3, -0.1), Complex64::new(-0.2, 0.5)],
            [Complex64::new(0.4, 0.2), Complex64::new(0.1, -0.6)],
        ];
        let n: f64 = raw
            .iter()
            .flatten()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let a = raw.map(|r| r.map(|v| v / n));
        let input = TwoAtomState::from_qubits(a).unwrap();
        let expected = TwoAtomState::from_qubits(ideal_cnot(a)).unwrap();
        for b in cnot_protocol(
            &input,
            BranchPolicy::Enumerate,
            &CorrectionTable::standard(),
        )
        .unwrap()
        {
            assert!(b.final_state.max_difference(&expected) < 1e-12);
        }
    }
}
