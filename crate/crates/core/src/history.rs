//! Projector decompositions, event schedules, Heisenberg evolution and
//! time-ordered class operators.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{matexp_unitary, ComplexMatrix, C64};
use crate::perturbation::PhaseKick;
use crate::tolerance::Tolerance;

/// Max violations of the projector-decomposition invariants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub hermiticity: f64,
    pub idempotency: f64,
    pub orthogonality: f64,
    pub completeness: f64,
    pub zero_projector: Option<String>,
    pub duplicate_label: Option<String>,
    pub passes: bool,
}

impl DecompositionReport {
    /// Human-readable list of the failed invariants, empty on success.
    pub fn failures(&self, tol: Tolerance) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(label) = &self.duplicate_label {
            out.push(format!("duplicate label {label:?}"));
        }
        if let Some(label) = &self.zero_projector {
            out.push(format!("zero projector for outcome {label:?}"));
        }
        for (name, value) in [
            ("hermiticity", self.hermiticity),
            ("idempotency", self.idempotency),
            ("orthogonality", self.orthogonality),
            ("completeness", self.completeness),
        ] {
            if value > tol.atol() {
                out.push(format!("{name} violation {value:e}"));
            }
        }
        out
    }
}

/// Checks Hermiticity, P² = P, P_a P_b = 0 (a ≠ b) and Σ P = I.
pub fn validate_decomposition(
    labels: &[String],
    projectors: &[ComplexMatrix],
    tol: Tolerance,
) -> Result<DecompositionReport> {
    if projectors.is_empty() {
        return Err(Error::InvalidDecomposition("no projectors".into()));
    }
    if labels.len() != projectors.len() {
        return Err(Error::InvalidDecomposition(format!(
            "{} labels for {} projectors",
            labels.len(),
            projectors.len()
        )));
    }
    let dim = projectors[0].dim();
    for p in projectors {
        p.ensure_dim(dim)?;
    }

    let mut seen = HashSet::new();
    let duplicate_label = labels.iter().find(|l| !seen.insert(l.as_str())).cloned();

    let mut hermiticity = 0.0_f64;
    let mut idempotency = 0.0_f64;
    let mut orthogonality = 0.0_f64;
    let mut zero_projector = None;
    let mut total = ComplexMatrix::zeros(dim);
    for (a, p) in projectors.iter().enumerate() {
        hermiticity = hermiticity.max(p.hermitian_asymmetry());
        idempotency = idempotency.max((p * p).max_abs_diff(p));
        if zero_projector.is_none() && p.max_abs() <= tol.atol() {
            zero_projector = Some(labels[a].clone());
        }
        for q in &projectors[a + 1..] {
            orthogonality = orthogonality.max((p * q).max_abs());
        }
        total = &total + p;
    }
    let completeness = total.max_abs_diff(&ComplexMatrix::identity(dim));
    let passes = duplicate_label.is_none()
        && zero_projector.is_none()
        && [hermiticity, idempotency, orthogonality, completeness]
            .iter()
            .all(|&v| v <= tol.atol());
    Ok(DecompositionReport {
        hermiticity,
        idempotency,
        orthogonality,
        completeness,
        zero_projector,
        duplicate_label,
        passes,
    })
}

/// A complete set of mutually orthogonal projectors with outcome labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectorDecomposition {
    labels: Vec<String>,
    projectors: Vec<ComplexMatrix>,
}

impl ProjectorDecomposition {
    pub fn new(labels: Vec<String>, projectors: Vec<ComplexMatrix>, tol: Tolerance) -> Result<Self> {
        let report = validate_decomposition(&labels, &projectors, tol)?;
        if !report.passes {
            return Err(Error::InvalidDecomposition(report.failures(tol).join(", ")));
        }
        Ok(Self { labels, projectors })
    }

    pub(crate) fn new_unchecked(labels: Vec<String>, projectors: Vec<ComplexMatrix>) -> Self {
        Self { labels, projectors }
    }

    /// Rank-one projectors onto the given orthonormal vectors.
    pub fn from_basis(labels: &[&str], vectors: &[Vec<C64>], tol: Tolerance) -> Result<Self> {
        let projectors = vectors
            .iter()
            .map(|v| ComplexMatrix::projector(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(labels.iter().map(|s| s.to_string()).collect(), projectors, tol)
    }

    /// The one-outcome decomposition {I}.
    pub fn trivial(dim: usize) -> Self {
        Self { labels: vec!["1".into()], projectors: vec![ComplexMatrix::identity(dim)] }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn projectors(&self) -> &[ComplexMatrix] {
        &self.projectors
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// U† P U for every projector.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Self {
        let ud = u.adjoint();
        Self {
            labels: self.labels.clone(),
            projectors: self.projectors.iter().map(|p| &(&ud * p) * u).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub time: f64,
    pub decomposition: ProjectorDecomposition,
}

/// System Hamiltonian plus strictly time-ordered events, each carrying a
/// Schrödinger-picture projector decomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventSchedule {
    hamiltonian: ComplexMatrix,
    events: Vec<Event>,
}

impl EventSchedule {
    pub fn new(hamiltonian: ComplexMatrix, events: Vec<Event>, tol: Tolerance) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::InvalidSchedule("no events".into()));
        }
        let dim = hamiltonian.dim();
        if let Err(Error::NotHermitian { asymmetry }) = hamiltonian.ensure_hermitian(tol) {
            return Err(Error::InvalidSchedule(format!(
                "Hamiltonian not Hermitian (max asymmetry {asymmetry:e})"
            )));
        }
        for (k, event) in events.iter().enumerate() {
            if !event.time.is_finite() {
                return Err(Error::InvalidSchedule(format!("event {} has non-finite time", k + 1)));
            }
            if event.decomposition.dim() != dim {
                return Err(Error::InvalidSchedule(format!(
                    "event {} has dimension {}, Hamiltonian has {dim}",
                    k + 1,
                    event.decomposition.dim()
                )));
            }
            if k > 0 && event.time <= events[k - 1].time {
                return Err(Error::InvalidSchedule(format!(
                    "times not strictly increasing at event {} ({} after {})",
                    k + 1,
                    event.time,
                    events[k - 1].time
                )));
            }
        }
        Ok(Self { hamiltonian, events })
    }

    /// Schedule with H = 0 and events at t = 1, 2, …
    pub fn static_sequence(decompositions: Vec<ProjectorDecomposition>, tol: Tolerance) -> Result<Self> {
        let dim = decompositions
            .first()
            .map(|d| d.dim())
            .ok_or_else(|| Error::InvalidSchedule("no events".into()))?;
        let events = decompositions
            .into_iter()
            .enumerate()
            .map(|(k, decomposition)| Event { time: (k + 1) as f64, decomposition })
            .collect();
        Self::new(ComplexMatrix::zeros(dim), events, tol)
    }

    pub(crate) fn new_unchecked(hamiltonian: ComplexMatrix, events: Vec<Event>) -> Self {
        Self { hamiltonian, events }
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn outcome_counts(&self) -> Vec<usize> {
        self.events.iter().map(|e| e.decomposition.len()).collect()
    }

    pub fn history_count(&self) -> usize {
        self.outcome_counts().iter().product()
    }

    /// U(t_k) = exp(−iHt_k) per event. Exact identity when H = 0 or t_k = 0.
    pub fn evolution_unitaries(&self, tol: Tolerance) -> Result<Vec<ComplexMatrix>> {
        let dim = self.dim();
        let free = self.hamiltonian.max_abs() == 0.0;
        self.events
            .iter()
            .map(|e| {
                if free || e.time == 0.0 {
                    Ok(ComplexMatrix::identity(dim))
                } else {
                    matexp_unitary(&self.hamiltonian, e.time, tol)
                }
            })
            .collect()
    }
}

/// Heisenberg-picture decompositions P(t_k) = U†(t_k) P U(t_k).
pub fn heisenberg_projectors(schedule: &EventSchedule, tol: Tolerance) -> Result<Vec<ProjectorDecomposition>> {
    let unitaries = schedule.evolution_unitaries(tol)?;
    Ok(evolve_with(schedule, &unitaries))
}

fn evolve_with(schedule: &EventSchedule, unitaries: &[ComplexMatrix]) -> Vec<ProjectorDecomposition> {
    schedule
        .events
        .iter()
        .zip(unitaries)
        .map(|(e, u)| e.decomposition.conjugated(u))
        .collect()
}

/// Outcome labels (α_1, …, α_n). Composite indices remember where each
/// factor's components start so they print as `(a,b)(c,d)`. Serialises as
/// the printed form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HistoryIndex {
    components: Vec<String>,
    breaks: Vec<usize>,
}

impl Serialize for HistoryIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl HistoryIndex {
    pub fn new<S: Into<String>>(components: impl IntoIterator<Item = S>) -> Self {
        Self { components: components.into_iter().map(Into::into).collect(), breaks: Vec::new() }
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    /// Concatenation used for composite histories (α, β).
    pub fn joined(a: &HistoryIndex, b: &HistoryIndex) -> Self {
        let mut components = a.components.clone();
        components.extend(b.components.iter().cloned());
        let mut breaks = a.breaks.clone();
        breaks.push(a.components.len());
        breaks.extend(b.breaks.iter().map(|k| k + a.components.len()));
        Self { components, breaks }
    }
}

impl fmt::Display for HistoryIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut start = 0;
        for end in self.breaks.iter().copied().chain(std::iter::once(self.components.len())) {
            write!(f, "({})", self.components[start..end].join(","))?;
            start = end;
        }
        Ok(())
    }
}

/// Labelled class operators C_α, in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassOperators {
    labels: Vec<HistoryIndex>,
    operators: Vec<ComplexMatrix>,
}

impl ClassOperators {
    pub fn new(labels: Vec<HistoryIndex>, operators: Vec<ComplexMatrix>) -> Result<Self> {
        if labels.is_empty() || labels.len() != operators.len() {
            return Err(Error::InvalidPartition(format!(
                "{} labels for {} class operators",
                labels.len(),
                operators.len()
            )));
        }
        let dim = operators[0].dim();
        for op in &operators {
            op.ensure_dim(dim)?;
        }
        Ok(Self { labels, operators })
    }

    pub(crate) fn new_unchecked(labels: Vec<HistoryIndex>, operators: Vec<ComplexMatrix>) -> Self {
        Self { labels, operators }
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    pub fn labels(&self) -> &[HistoryIndex] {
        &self.labels
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    pub fn position(&self, label: &HistoryIndex) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn get(&self, label: &HistoryIndex) -> Option<&ComplexMatrix> {
        self.position(label).map(|i| &self.operators[i])
    }

    /// Σ_α C_α, summed in enumeration order.
    pub fn sum(&self) -> ComplexMatrix {
        let mut total = self.operators[0].clone();
        for op in &self.operators[1..] {
            total = &total + op;
        }
        total
    }
}

impl AsRef<ClassOperators> for ClassOperators {
    fn as_ref(&self) -> &ClassOperators {
        self
    }
}

/// How a family's class operators were obtained.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Built,
    Kicked { original: Box<HistoryFamily>, kick: PhaseKick },
}

/// All histories of a schedule together with their class operators.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryFamily {
    schedule: EventSchedule,
    heisenberg: Vec<ProjectorDecomposition>,
    histories: ClassOperators,
    origin: Origin,
}

impl HistoryFamily {
    pub fn schedule(&self) -> &EventSchedule {
        &self.schedule
    }

    /// Heisenberg-picture decompositions P_{α_k}(t_k).
    pub fn heisenberg(&self) -> &[ProjectorDecomposition] {
        &self.heisenberg
    }

    pub fn histories(&self) -> &ClassOperators {
        &self.histories
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.schedule.dim()
    }

    pub fn event_count(&self) -> usize {
        self.schedule.events.len()
    }

    /// Position of outcome α_k (event `k`, 0-based) within its decomposition,
    /// for the history at enumeration position `i`.
    pub fn outcome_position(&self, i: usize, k: usize) -> usize {
        let counts = self.schedule.outcome_counts();
        let stride: usize = counts[k + 1..].iter().product();
        (i / stride) % counts[k]
    }

    pub(crate) fn with_operators(&self, operators: Vec<ComplexMatrix>, origin: Origin) -> Self {
        Self {
            schedule: self.schedule.clone(),
            heisenberg: self.heisenberg.clone(),
            histories: ClassOperators::new_unchecked(self.histories.labels.clone(), operators),
            origin,
        }
    }
}

impl AsRef<ClassOperators> for HistoryFamily {
    fn as_ref(&self) -> &ClassOperators {
        &self.histories
    }
}

/// Builds C_α = P_{α_n}(t_n) ⋯ P_{α_1}(t_1) for every α, first event major
/// in the enumeration order.
pub fn build_family(schedule: &EventSchedule, tol: Tolerance) -> Result<HistoryFamily> {
    let unitaries = schedule.evolution_unitaries(tol)?;
    Ok(build_family_with(schedule, &unitaries))
}

pub(crate) fn build_family_with(schedule: &EventSchedule, unitaries: &[ComplexMatrix]) -> HistoryFamily {
    let heisenberg = evolve_with(schedule, unitaries);
    let counts = schedule.outcome_counts();
    let total: usize = counts.iter().product();
    let mut labels = Vec::with_capacity(total);
    let mut operators = Vec::with_capacity(total);
    let mut digits = vec![0usize; counts.len()];
    for _ in 0..total {
        let mut c = heisenberg[0].projectors[digits[0]].clone();
        for (k, d) in heisenberg.iter().enumerate().skip(1) {
            c = &d.projectors[digits[k]] * &c;
        }
        labels.push(HistoryIndex::new(
            digits.iter().zip(&heisenberg).map(|(&a, d)| d.labels[a].clone()),
        ));
        operators.push(c);
        for k in (0..digits.len()).rev() {
            digits[k] += 1;
            if digits[k] < counts[k] {
                break;
            }
            digits[k] = 0;
        }
    }
    HistoryFamily {
        schedule: schedule.clone(),
        heisenberg,
        histories: ClassOperators::new_unchecked(labels, operators),
        origin: Origin::Built,
    }
}

/// Disjoint labelled cells of history indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    cells: Vec<(String, Vec<HistoryIndex>)>,
}

impl Partition {
    pub fn new(cells: Vec<(String, Vec<HistoryIndex>)>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidPartition("no cells".into()));
        }
        if let Some((label, _)) = cells.iter().find(|(_, members)| members.is_empty()) {
            return Err(Error::InvalidPartition(format!("cell {label:?} is empty")));
        }
        Ok(Self { cells })
    }

    pub fn singletons(set: &ClassOperators) -> Self {
        Self {
            cells: set.labels.iter().map(|l| (l.to_string(), vec![l.clone()])).collect(),
        }
    }

    pub fn whole(set: &ClassOperators) -> Self {
        Self { cells: vec![("all".into(), set.labels.clone())] }
    }

    /// Bunches `a` and `b` into one cell; every other history stays alone.
    /// The merged cell sits at the position of the earlier member.
    pub fn merge_pair(set: &ClassOperators, a: &HistoryIndex, b: &HistoryIndex) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidPartition(format!("cannot merge {a} with itself")));
        }
        for x in [a, b] {
            if set.position(x).is_none() {
                return Err(Error::InvalidPartition(format!("unknown history {x}")));
            }
        }
        let mut cells = Vec::with_capacity(set.len() - 1);
        for l in &set.labels {
            if l == a || l == b {
                if !cells.iter().any(|(_, m): &(String, Vec<HistoryIndex>)| m.contains(l)) {
                    cells.push((format!("{a}+{b}"), vec![a.clone(), b.clone()]));
                }
            } else {
                cells.push((l.to_string(), vec![l.clone()]));
            }
        }
        Ok(Self { cells })
    }

    pub fn cells(&self) -> &[(String, Vec<HistoryIndex>)] {
        &self.cells
    }

    /// Member positions per cell, checking that the cells partition `set`.
    pub fn resolve(&self, set: &ClassOperators) -> Result<Vec<Vec<usize>>> {
        let mut covered = vec![false; set.len()];
        let mut resolved = Vec::with_capacity(self.cells.len());
        for (label, members) in &self.cells {
            let mut positions = Vec::with_capacity(members.len());
            for m in members {
                let i = set
                    .position(m)
                    .ok_or_else(|| Error::InvalidPartition(format!("cell {label:?}: unknown history {m}")))?;
                if covered[i] {
                    return Err(Error::InvalidPartition(format!("history {m} appears in more than one cell")));
                }
                covered[i] = true;
                positions.push(i);
            }
            resolved.push(positions);
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidPartition(format!("history {} is not covered", set.labels[i])));
        }
        Ok(resolved)
    }
}

/// C̄ of each cell = sum of its members' class operators, added in the
/// cell's listing order.
pub fn coarse_grain(set: &impl AsRef<ClassOperators>, partition: &Partition) -> Result<ClassOperators> {
    let set = set.as_ref();
    let resolved = partition.resolve(set)?;
    let operators = resolved
        .iter()
        .map(|members| {
            let mut total = set.operators[members[0]].clone();
            for &i in &members[1..] {
                total = &total + &set.operators[i];
            }
            total
        })
        .collect();
    let labels = partition.cells.iter().map(|(l, _)| HistoryIndex::new([l.clone()])).collect();
    Ok(ClassOperators::new_unchecked(labels, operators))
}
