//! Decoherence functional, probability rules and the three consistency
//! criteria (strong decoherence, weak decoherence, linear positivity).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::history::{coarse_grain, ClassOperators, HistoryIndex, Partition};
use crate::linalg::{psd_check, ComplexMatrix, C64, ZERO};
use crate::state::DensityState;
use crate::tolerance::Tolerance;

/// Largest family `brute_force_consistency` accepts.
pub const BRUTE_FORCE_LIMIT: usize = 64;

/// D(α′, α) = tr(ρ C†_{α′} C_α), stored with α′ as row and α as column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoherenceFunctional {
    labels: Vec<HistoryIndex>,
    entries: ComplexMatrix,
}

/// Ordered pair (α′, α) addressing the entry D(α′, α).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndexPair {
    pub alpha_prime: HistoryIndex,
    pub alpha: HistoryIndex,
}

impl std::fmt::Display for IndexPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.alpha_prime, self.alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalInvariants {
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub psd: bool,
    pub total: C64,
    pub min_diagonal: f64,
    pub max_diagonal_imag: f64,
}

impl DecoherenceFunctional {
    pub(crate) fn from_parts(labels: Vec<HistoryIndex>, entries: ComplexMatrix) -> Self {
        debug_assert_eq!(labels.len(), entries.dim());
        Self { labels, entries }
    }

    pub fn labels(&self) -> &[HistoryIndex] {
        &self.labels
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// D(α′, α) by enumeration position.
    #[inline]
    pub fn at(&self, alpha_prime: usize, alpha: usize) -> C64 {
        self.entries[(alpha_prime, alpha)]
    }

    pub fn get(&self, alpha_prime: &HistoryIndex, alpha: &HistoryIndex) -> Option<C64> {
        let r = self.labels.iter().position(|l| l == alpha_prime)?;
        let c = self.labels.iter().position(|l| l == alpha)?;
        Some(self.at(r, c))
    }

    pub fn pair(&self, alpha_prime: usize, alpha: usize) -> IndexPair {
        IndexPair { alpha_prime: self.labels[alpha_prime].clone(), alpha: self.labels[alpha].clone() }
    }

    /// Σ_{α′} D(α′, α) for every α. Equals ⟨C_α⟩_ρ because Σ C_{α′} = I.
    pub fn amplitudes(&self) -> Vec<C64> {
        let n = self.len();
        (0..n).map(|c| (0..n).fold(ZERO, |acc, r| acc + self.at(r, c))).collect()
    }

    pub fn invariants(&self, tol: Tolerance) -> Result<FunctionalInvariants> {
        let n = self.len();
        let hermiticity = self.entries.hermitian_asymmetry();
        // Symmetrise before the eigen-solve so that a tiny asymmetry does
        // not abort the check; the asymmetry is reported separately.
        let sym = ComplexMatrix::from_fn(n, |i, j| (self.at(i, j) + self.at(j, i).conj()) * 0.5)?;
        let psd = psd_check(&sym, tol)?;
        let total = self.entries.as_nalgebra().iter().fold(ZERO, |a, z| a + z);
        let min_diagonal = (0..n).map(|i| self.at(i, i).re).fold(f64::INFINITY, f64::min);
        let max_diagonal_imag = (0..n).map(|i| self.at(i, i).im.abs()).fold(0.0, f64::max);
        Ok(FunctionalInvariants {
            hermiticity,
            min_eigenvalue: psd.min_eigenvalue,
            psd: psd.psd,
            total,
            min_diagonal,
            max_diagonal_imag,
        })
    }
}

pub fn decoherence_functional(set: &impl AsRef<ClassOperators>, rho: &DensityState) -> Result<DecoherenceFunctional> {
    decoherence_functional_with(set, rho, Exec::default())
}

pub fn decoherence_functional_with(
    set: &impl AsRef<ClassOperators>,
    rho: &DensityState,
    exec: Exec,
) -> Result<DecoherenceFunctional> {
    let set = set.as_ref();
    rho.matrix().ensure_dim(set.dim())?;
    let ops = set.operators();
    let n = ops.len();
    // tr(ρ C†_{α′} C_α) = Σ_ij (C_α ρ)_ij · conj(C_{α′})_ij
    let weighted: Vec<ComplexMatrix> = exec.map_slice(ops, |c| c * rho.matrix());
    let rows: Vec<Vec<C64>> = exec.map(n, |r| {
        (0..n).map(|c| weighted[c].frobenius_inner(&ops[r])).collect()
    });
    let entries = ComplexMatrix::from_rows(&rows)
        .map_err(|e| Error::Numeric(format!("decoherence functional: {e}")))?;
    Ok(DecoherenceFunctional::from_parts(set.labels().to_vec(), entries))
}

/// ⟨C_α⟩_ρ evaluated directly as traces.
pub fn amplitudes(set: &impl AsRef<ClassOperators>, rho: &DensityState) -> Vec<C64> {
    set.as_ref().operators().iter().map(|c| rho.expectation(c)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbabilityRule {
    /// p_α = ⟨C†_α C_α⟩_ρ
    Standard,
    /// p_α = Re⟨C_α⟩_ρ
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityAssignment {
    pub rule: ProbabilityRule,
    pub labels: Vec<HistoryIndex>,
    /// Values before clamping.
    pub raw: Vec<f64>,
    /// Values with negatives inside the tolerance band set to zero.
    pub values: Vec<f64>,
    /// Positions whose raw value is below −atol.
    pub violations: Vec<usize>,
    pub total: f64,
}

impl ProbabilityAssignment {
    fn from_raw(rule: ProbabilityRule, labels: Vec<HistoryIndex>, raw: Vec<f64>, tol: Tolerance) -> Self {
        let violations: Vec<usize> = (0..raw.len()).filter(|&i| raw[i] < -tol.atol()).collect();
        let values = raw.iter().map(|&p| if p < 0.0 && p >= -tol.atol() { 0.0 } else { p }).collect();
        let total = raw.iter().sum();
        Self { rule, labels, raw, values, violations, total }
    }

    pub fn get(&self, label: &HistoryIndex) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.values[i])
    }
}

/// Diagonal of D. Fails when some diagonal entry is below −atol.
pub fn probabilities_standard(d: &DecoherenceFunctional, tol: Tolerance) -> Result<ProbabilityAssignment> {
    let raw: Vec<f64> = (0..d.len()).map(|i| d.at(i, i).re).collect();
    let assignment = ProbabilityAssignment::from_raw(ProbabilityRule::Standard, d.labels.clone(), raw, tol);
    if let Some(&i) = assignment.violations.first() {
        return Err(Error::NegativeProbability { history: d.labels[i].to_string(), value: assignment.raw[i] });
    }
    Ok(assignment)
}

/// Re⟨C_α⟩_ρ. Negative values are flagged, never rejected.
pub fn probabilities_linear(set: &impl AsRef<ClassOperators>, rho: &DensityState, tol: Tolerance) -> ProbabilityAssignment {
    let raw = amplitudes(set, rho).iter().map(|z| z.re).collect();
    ProbabilityAssignment::from_raw(ProbabilityRule::Linear, set.as_ref().labels().to_vec(), raw, tol)
}

/// One criterion's verdict and its extremal off-diagonal value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffDiagonalCriterion {
    pub holds: bool,
    /// max over α′ ≠ α of the criterion's magnitude.
    pub max_off_diagonal: f64,
    /// Extremal pair (α′, α) with α < α′; ties go to the lexicographically smallest (α, α′).
    pub extremal: Option<IndexPair>,
    /// The extremal pair when the criterion fails.
    pub witness: Option<IndexPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCriterion {
    pub holds: bool,
    pub min_value: f64,
    pub extremal: HistoryIndex,
    pub witness: Option<HistoryIndex>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub tolerance: Tolerance,
    pub strong: OffDiagonalCriterion,
    pub weak: OffDiagonalCriterion,
    pub linear_positive: PositivityCriterion,
    /// max over α′ ≠ α of |Im D(α′, α)|.
    pub max_off_diagonal_imag: f64,
}

/// Largest off-diagonal magnitude over unordered pairs {α, α′}, α < α′,
/// returned as (α′, α). Values within `TIE_BAND` of the running maximum count
/// as ties, and ties keep the lexicographically smallest (α, α′), so rounding
/// noise cannot move the reported pair.
pub(crate) fn extremal_off_diagonal(n: usize, magnitude: impl Fn(usize, usize) -> f64) -> Option<(usize, usize, f64)> {
    const TIE_BAND: f64 = 1e-12;
    let mut best: Option<(usize, usize, f64)> = None;
    for c in 0..n {
        for r in c + 1..n {
            let v = magnitude(r, c);
            if best.is_none_or(|(_, _, b)| v > b + TIE_BAND * b.abs().max(1.0)) {
                best = Some((r, c, v));
            }
        }
    }
    best
}

fn off_diagonal_criterion(d: &DecoherenceFunctional, tol: Tolerance, magnitude: impl Fn(C64) -> f64) -> OffDiagonalCriterion {
    match extremal_off_diagonal(d.len(), |r, c| magnitude(d.at(r, c))) {
        None => OffDiagonalCriterion { holds: true, max_off_diagonal: 0.0, extremal: None, witness: None },
        Some((r, c, v)) => {
            let holds = v <= tol.atol();
            let pair = d.pair(r, c);
            OffDiagonalCriterion {
                holds,
                max_off_diagonal: v,
                witness: (!holds).then(|| pair.clone()),
                extremal: Some(pair),
            }
        }
    }
}

/// Classifies from an already computed functional; the amplitudes for the
/// positivity check come from D's column sums.
pub fn classify_functional(d: &DecoherenceFunctional, tol: Tolerance) -> ConsistencyReport {
    let strong = off_diagonal_criterion(d, tol, |z| z.norm());
    let weak = off_diagonal_criterion(d, tol, |z| z.re.abs());
    let imag = extremal_off_diagonal(d.len(), |r, c| d.at(r, c).im.abs()).map_or(0.0, |(_, _, v)| v);
    let amps = d.amplitudes();
    let (pos, min_value) = amps
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, z)| if z.re < bv { (i, z.re) } else { (bi, bv) });
    let holds = min_value >= -tol.atol();
    ConsistencyReport {
        tolerance: tol,
        strong,
        weak,
        linear_positive: PositivityCriterion {
            holds,
            min_value,
            extremal: d.labels[pos].clone(),
            witness: (!holds).then(|| d.labels[pos].clone()),
        },
        max_off_diagonal_imag: imag,
    }
}

pub fn classify(set: &impl AsRef<ClassOperators>, rho: &DensityState, tol: Tolerance) -> Result<ConsistencyReport> {
    Ok(classify_functional(&decoherence_functional(set, rho)?, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResidual {
    pub cell: String,
    pub coarse_probability: f64,
    pub fine_sum: f64,
    pub residual: f64,
}

fn standard_probability(c: &ComplexMatrix, rho: &DensityState) -> f64 {
    (c * rho.matrix()).frobenius_inner(c).re
}

/// p̄(cell) − Σ_{α ∈ cell} p_α with p̄ taken from the coarse-grained class
/// operator directly.
pub fn sum_rule_check(
    set: &impl AsRef<ClassOperators>,
    rho: &DensityState,
    partition: &Partition,
) -> Result<Vec<CellResidual>> {
    let set = set.as_ref();
    rho.matrix().ensure_dim(set.dim())?;
    let coarse = coarse_grain(set, partition)?;
    let members = partition.resolve(set)?;
    let fine: Vec<f64> = set.operators().iter().map(|c| standard_probability(c, rho)).collect();
    Ok(partition
        .cells()
        .iter()
        .zip(coarse.operators())
        .zip(&members)
        .map(|(((label, _), c), m)| {
            let coarse_probability = standard_probability(c, rho);
            let fine_sum: f64 = m.iter().map(|&i| fine[i]).sum();
            CellResidual { cell: label.clone(), coarse_probability, fine_sum, residual: coarse_probability - fine_sum }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResidual {
    pub first: usize,
    pub second: usize,
    /// p̄ − p_first − p_second for the bunched pair.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BruteForceVerdict {
    pub consistent: bool,
    pub residuals: Vec<PairResidual>,
    /// First pair, in enumeration order, with the largest |residual|.
    pub worst: Option<PairResidual>,
    pub failing: Option<(HistoryIndex, HistoryIndex)>,
}

pub fn brute_force_consistency(set: &impl AsRef<ClassOperators>, rho: &DensityState, tol: Tolerance) -> Result<BruteForceVerdict> {
    brute_force_consistency_with(set, rho, tol, Exec::default())
}

/// Bunches every pair of histories and checks additivity of the standard
/// probabilities. A bunched pair's residual is 2·Re D, so the pass band is
/// 2·atol, matching the weak criterion's |Re D| ≤ atol.
pub fn brute_force_consistency_with(
    set: &impl AsRef<ClassOperators>,
    rho: &DensityState,
    tol: Tolerance,
    exec: Exec,
) -> Result<BruteForceVerdict> {
    let set = set.as_ref();
    let n = set.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: BRUTE_FORCE_LIMIT });
    }
    rho.matrix().ensure_dim(set.dim())?;
    let ops = set.operators();
    let fine: Vec<f64> = exec.map_slice(ops, |c| standard_probability(c, rho));
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let residuals: Vec<PairResidual> = exec.map_slice(&pairs, |&(i, j)| {
        let bunched = &ops[i] + &ops[j];
        PairResidual { first: i, second: j, residual: standard_probability(&bunched, rho) - fine[i] - fine[j] }
    });
    let worst = residuals
        .iter()
        .fold(None::<&PairResidual>, |best, r| match best {
            Some(b) if r.residual.abs() <= b.residual.abs() => Some(b),
            _ => Some(r),
        })
        .cloned();
    let consistent = residuals.iter().all(|r| r.residual.abs() <= 2.0 * tol.atol());
    let failing = match &worst {
        Some(w) if !consistent => Some((set.labels()[w.first].clone(), set.labels()[w.second].clone())),
        _ => None,
    };
    Ok(BruteForceVerdict { consistent, residuals, worst, failing })
}
