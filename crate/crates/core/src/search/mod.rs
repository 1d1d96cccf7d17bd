//! Witness construction and search: the canonical spin-½ witness, seeded
//! random families, and restarted coordinate-descent searches for
//! weak-but-not-strong families and for linearly positive families with
//! large amplitude phases.

mod canonical;
pub mod optimize;
pub mod random;

use std::f64::consts::FRAC_PI_2;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use canonical::{canonical_witness, repeated_z_family, repeated_z_mixed, trivial_family, x_then_z_family};

use crate::consistency::{classify, decoherence_functional_with, ConsistencyReport, DecoherenceFunctional};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::history::{build_family, build_family_with, EventSchedule, Event, HistoryFamily, HistoryIndex, ProjectorDecomposition};
use crate::linalg::{ComplexMatrix, C64};
use crate::state::DensityState;
use crate::tolerance::Tolerance;
use optimize::LineSearch;

pub const DEFAULT_MAX_ITER: usize = 200;
pub const DEFAULT_RESTARTS: usize = 8;
/// Amplitudes smaller than this carry no meaningful phase.
pub const AMPLITUDE_FLOOR: f64 = 1e-3;
/// Upper bound on the history count a search will handle.
pub const MAX_SEARCH_HISTORIES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchTarget {
    WeakNotStrong,
    LinearPositivePhase,
}

impl FromStr for SearchTarget {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "weak-not-strong" => Ok(Self::WeakNotStrong),
            "linear-positive-phase" => Ok(Self::LinearPositivePhase),
            other => Err(format!("unknown search target {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Pure,
    Mixed,
    /// Pure or mixed, decided by the seed.
    Either,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpec {
    pub target: SearchTarget,
    pub dim: usize,
    pub events: usize,
    pub outcomes: usize,
    pub seed: u64,
    /// Coordinate-descent sweeps per restart.
    pub max_iter: usize,
    pub restarts: usize,
    /// Minimum off-diagonal |Im D| or amplitude phase.
    pub delta: f64,
    pub state: StateKind,
    /// Draw a random Hamiltonian and event times instead of H = 0.
    pub dynamics: bool,
    pub tolerance: Tolerance,
}

impl SearchSpec {
    pub fn new(target: SearchTarget, dim: usize, events: usize, delta: f64, seed: u64) -> Self {
        Self {
            target,
            dim,
            events,
            outcomes: 2,
            seed,
            max_iter: DEFAULT_MAX_ITER,
            restarts: DEFAULT_RESTARTS,
            delta,
            state: StateKind::Pure,
            dynamics: true,
            tolerance: Tolerance::default(),
        }
    }

    fn check_shape(&self) -> Result<()> {
        if !(1..=8).contains(&self.dim) {
            return Err(Error::InvalidSearch(format!("dim {} outside 1..=8", self.dim)));
        }
        if !(1..=4).contains(&self.events) {
            return Err(Error::InvalidSearch(format!("{} events outside 1..=4", self.events)));
        }
        if self.outcomes == 0 || self.outcomes > self.dim {
            return Err(Error::InvalidSearch(format!("{} outcomes for dimension {}", self.outcomes, self.dim)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        if self.dim < 2 || self.events < 2 {
            return Err(Error::InvalidSearch("searches need dim >= 2 and at least 2 events".into()));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::InvalidSearch(format!("delta {} must be finite and non-negative", self.delta)));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidSearch("at least one restart is required".into()));
        }
        let histories = self.outcomes.checked_pow(self.events as u32).unwrap_or(usize::MAX);
        if histories > MAX_SEARCH_HISTORIES {
            return Err(Error::InvalidSearch(format!("{histories} histories exceed {MAX_SEARCH_HISTORIES}")));
        }
        Ok(())
    }
}

/// Random starting point of one restart.
struct Start {
    bases: Vec<DMatrix<C64>>,
    rho: ComplexMatrix,
    hamiltonian: ComplexMatrix,
    times: Vec<f64>,
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn sample_start(spec: &SearchSpec, rng: &mut ChaCha8Rng) -> Start {
    let d = spec.dim;
    let bases = (0..spec.events).map(|_| random::haar_unitary(d, rng)).collect();
    let rank = match spec.state {
        StateKind::Pure => 1,
        StateKind::Mixed => rng.random_range(2.min(d)..=d),
        StateKind::Either => {
            if rng.random_bool(0.5) {
                1
            } else {
                rng.random_range(2.min(d)..=d)
            }
        }
    };
    let rho = random::random_state(d, rank, rng);
    let (hamiltonian, times) = if spec.dynamics {
        let h = random::random_hamiltonian(d, rng);
        let mut t = rng.random_range(0.0..1.0);
        let times = (0..spec.events)
            .map(|k| {
                if k > 0 {
                    t += rng.random_range(0.1..1.0);
                }
                t
            })
            .collect();
        (h, times)
    } else {
        (ComplexMatrix::zeros(d), (1..=spec.events).map(|k| k as f64).collect())
    };
    Start { bases, rho, hamiltonian, times }
}

/// Projectors onto contiguous groups of basis columns; the first
/// `dim % outcomes` groups get one extra column.
fn grouped_projectors(basis: &DMatrix<C64>, outcomes: usize) -> Vec<ComplexMatrix> {
    let d = basis.nrows();
    let (base, extra) = (d / outcomes, d % outcomes);
    let mut start = 0;
    (0..outcomes)
        .map(|g| {
            let size = base + usize::from(g < extra);
            let cols = start..start + size;
            start += size;
            ComplexMatrix::wrap(DMatrix::from_fn(d, d, |i, j| {
                cols.clone().fold(C64::new(0.0, 0.0), |acc, k| acc + basis[(i, k)] * basis[(j, k)].conj())
            }))
        })
        .collect()
}

fn outcome_labels(outcomes: usize) -> Vec<String> {
    (0..outcomes).map(|a| a.to_string()).collect()
}

#[derive(Debug, Clone, Copy)]
enum Rotation {
    Real,
    Complex,
}

/// Right-multiplies `m` by a plane rotation acting on columns p and q.
fn rotate_columns(m: &mut DMatrix<C64>, p: usize, q: usize, kind: Rotation, angle: f64) {
    let (s, c) = angle.sin_cos();
    for i in 0..m.nrows() {
        let (a, b) = (m[(i, p)], m[(i, q)]);
        match kind {
            Rotation::Real => {
                m[(i, p)] = a * c + b * s;
                m[(i, q)] = b * c - a * s;
            }
            Rotation::Complex => {
                let is = C64::new(0.0, s);
                m[(i, p)] = a * c + b * is;
                m[(i, q)] = a * is + b * c;
            }
        }
    }
}

/// Search coordinates: plane-rotation angles applied to every event basis
/// and to the state.
struct Parameterization<'a> {
    spec: &'a SearchSpec,
    start: &'a Start,
    planes: Vec<(usize, usize, Rotation)>,
    unitaries: Vec<ComplexMatrix>,
}

impl<'a> Parameterization<'a> {
    fn new(spec: &'a SearchSpec, start: &'a Start) -> Result<Self> {
        let d = spec.dim;
        let planes = (0..d)
            .flat_map(|p| (p + 1..d).flat_map(move |q| [(p, q, Rotation::Real), (p, q, Rotation::Complex)]))
            .collect();
        let schedule = Self::schedule_from(spec, start, &start.bases, false)?;
        let unitaries = schedule.evolution_unitaries(spec.tolerance)?;
        Ok(Self { spec, start, planes, unitaries })
    }

    fn dimension(&self) -> usize {
        self.planes.len() * (self.spec.events + 1)
    }

    fn schedule_from(spec: &SearchSpec, start: &Start, bases: &[DMatrix<C64>], checked: bool) -> Result<EventSchedule> {
        let events = bases
            .iter()
            .zip(&start.times)
            .map(|(b, &time)| {
                let labels = outcome_labels(spec.outcomes);
                let projectors = grouped_projectors(b, spec.outcomes);
                let decomposition = if checked {
                    ProjectorDecomposition::new(labels, projectors, spec.tolerance)?
                } else {
                    ProjectorDecomposition::new_unchecked(labels, projectors)
                };
                Ok(Event { time, decomposition })
            })
            .collect::<Result<Vec<_>>>()?;
        if checked {
            EventSchedule::new(start.hamiltonian.clone(), events, spec.tolerance)
        } else {
            Ok(EventSchedule::new_unchecked(start.hamiltonian.clone(), events))
        }
    }

    fn realize(&self, theta: &[f64], checked: bool) -> Result<(EventSchedule, DensityState)> {
        let block = self.planes.len();
        let bases: Vec<DMatrix<C64>> = self
            .start
            .bases
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let mut m = b.clone();
                for (&(p, q, kind), &angle) in self.planes.iter().zip(&theta[k * block..(k + 1) * block]) {
                    rotate_columns(&mut m, p, q, kind, angle);
                }
                m
            })
            .collect();
        let d = self.spec.dim;
        let mut w = DMatrix::<C64>::identity(d, d);
        for (&(p, q, kind), &angle) in self.planes.iter().zip(&theta[self.spec.events * block..]) {
            rotate_columns(&mut w, p, q, kind, angle);
        }
        let rho = ComplexMatrix::wrap(&w * self.start.rho.as_nalgebra() * w.adjoint());
        let schedule = Self::schedule_from(self.spec, self.start, &bases, checked)?;
        let state = if checked {
            DensityState::new(rho, self.spec.tolerance)?
        } else {
            DensityState::new_unchecked(rho)
        };
        Ok((schedule, state))
    }

    fn functional(&self, theta: &[f64]) -> Result<DecoherenceFunctional> {
        let (schedule, rho) = self.realize(theta, false)?;
        let family = build_family_with(&schedule, &self.unitaries);
        decoherence_functional_with(&family, &rho, Exec::Sequential)
    }
}

/// Figures of merit of one candidate family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateMetrics {
    pub max_re_off_diagonal: f64,
    pub max_im_off_diagonal: f64,
    pub min_linear: f64,
    /// Largest |arg⟨C_α⟩| among amplitudes with |⟨C_α⟩| ≥ AMPLITUDE_FLOOR.
    pub max_phase: f64,
    pub phase_history: Option<HistoryIndex>,
    /// max over α′ ≠ α of √(p_α p_{α′}), bounding every |D(α′, α)|.
    pub cauchy_schwarz_bound: f64,
}

/// Largest |arg a| over amplitudes with |a| ≥ AMPLITUDE_FLOOR, first on ties.
pub fn max_amplitude_phase(amplitudes: &[C64]) -> Option<(usize, f64)> {
    amplitudes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() >= AMPLITUDE_FLOOR)
        .map(|(i, a)| (i, a.arg().abs()))
        .fold(None, |best, (i, v)| match best {
            Some((_, b)) if v <= b => best,
            _ => Some((i, v)),
        })
}

fn metrics(d: &DecoherenceFunctional) -> CandidateMetrics {
    let n = d.len();
    let (mut re, mut im, mut cs) = (0.0_f64, 0.0_f64, 0.0_f64);
    for r in 1..n {
        for c in 0..r {
            let z = d.at(r, c);
            re = re.max(z.re.abs());
            im = im.max(z.im.abs());
            cs = cs.max((d.at(r, r).re.max(0.0) * d.at(c, c).re.max(0.0)).sqrt());
        }
    }
    let amps = d.amplitudes();
    let min_linear = amps.iter().map(|a| a.re).fold(f64::INFINITY, f64::min);
    let phase = max_amplitude_phase(&amps);
    CandidateMetrics {
        max_re_off_diagonal: re,
        max_im_off_diagonal: im,
        min_linear,
        max_phase: phase.map_or(0.0, |(_, v)| v),
        phase_history: phase.map(|(i, _)| d.labels()[i].clone()),
        cauchy_schwarz_bound: cs,
    }
}

fn qualifies(target: SearchTarget, m: &CandidateMetrics, delta: f64, tol: Tolerance) -> bool {
    match target {
        SearchTarget::WeakNotStrong => m.max_re_off_diagonal <= tol.atol() && m.max_im_off_diagonal >= delta,
        SearchTarget::LinearPositivePhase => m.min_linear >= -tol.atol() && m.max_phase >= delta - tol.atol(),
    }
}

/// The linear-positive-phase criterion applied to a given family.
pub fn has_linear_positive_phase(family: &HistoryFamily, rho: &DensityState, delta: f64, tol: Tolerance) -> Result<bool> {
    let d = decoherence_functional_with(family, rho, Exec::Sequential)?;
    Ok(qualifies(SearchTarget::LinearPositivePhase, &metrics(&d), delta, tol))
}

fn aim(target: SearchTarget, delta: f64) -> f64 {
    match target {
        SearchTarget::WeakNotStrong => delta + 0.005,
        SearchTarget::LinearPositivePhase => delta + (0.05_f64).min((FRAC_PI_2 - delta).max(0.0) / 2.0),
    }
}

fn objective(target: SearchTarget, d: &DecoherenceFunctional, aim: f64) -> f64 {
    match target {
        SearchTarget::WeakNotStrong => {
            let n = d.len();
            let (mut re_sq, mut im) = (0.0, 0.0_f64);
            for r in 1..n {
                for c in 0..r {
                    let z = d.at(r, c);
                    re_sq += z.re * z.re;
                    im = im.max(z.im.abs());
                }
            }
            re_sq + (aim - im).max(0.0).powi(2)
        }
        SearchTarget::LinearPositivePhase => {
            let amps = d.amplitudes();
            let negative: f64 = amps.iter().map(|a| a.re.min(0.0).powi(2)).sum();
            let phase = max_amplitude_phase(&amps).map_or(0.0, |(_, v)| v);
            negative + (aim - phase).max(0.0).powi(2)
        }
    }
}

/// Provenance and margins of a search result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchCertificate {
    pub target: SearchTarget,
    pub delta: f64,
    pub seed: u64,
    /// Restart index; the restart's generator is the master seed's stream
    /// with this number.
    pub restart: usize,
    pub iterations: usize,
    pub objective: f64,
    pub metrics: CandidateMetrics,
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub schedule: EventSchedule,
    pub state: DensityState,
    pub family: HistoryFamily,
    pub report: ConsistencyReport,
    pub certificate: SearchCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exhaustion {
    pub reason: String,
    /// True when δ was ruled out before any search.
    pub pruned: bool,
    pub best: Option<SearchCertificate>,
}

#[derive(Debug, Clone)]
pub enum SearchOutcome {
    Found(Box<Witness>),
    Exhausted(Exhaustion),
}

impl SearchOutcome {
    pub fn witness(&self) -> Option<&Witness> {
        match self {
            SearchOutcome::Found(w) => Some(w),
            SearchOutcome::Exhausted(_) => None,
        }
    }
}

/// A seeded random family: Haar bases grouped into `outcomes` projectors
/// per event, a random state, and optionally a random Hamiltonian with
/// random increasing times. Restart 0 of a search starts from this family.
pub fn random_family(spec: &SearchSpec) -> Result<(HistoryFamily, DensityState)> {
    spec.check_shape()?;
    let start = sample_start(spec, &mut restart_rng(spec.seed, 0));
    let schedule = Parameterization::schedule_from(spec, &start, &start.bases, true)?;
    let state = DensityState::new(start.rho.clone(), spec.tolerance)?;
    Ok((build_family(&schedule, spec.tolerance)?, state))
}

struct RestartResult {
    restart: usize,
    theta: Vec<f64>,
    iterations: usize,
    objective: f64,
    metrics: CandidateMetrics,
    success: bool,
}

fn run_restart(spec: &SearchSpec, restart: usize) -> Result<RestartResult> {
    let start = sample_start(spec, &mut restart_rng(spec.seed, restart));
    let param = Parameterization::new(spec, &start)?;
    let target_aim = aim(spec.target, spec.delta);
    let eval = |theta: &[f64]| match param.functional(theta) {
        Ok(d) => objective(spec.target, &d, target_aim),
        Err(_) => f64::INFINITY,
    };
    let line = LineSearch::default();
    let mut theta = vec![0.0; param.dimension()];
    let mut value = eval(&theta);
    let mut iterations = 0;
    let mut current = metrics(&param.functional(&theta)?);
    let mut success = false;
    while iterations < spec.max_iter {
        value = line.sweep(&mut theta, &eval, value);
        iterations += 1;
        current = metrics(&param.functional(&theta)?);
        if qualifies(spec.target, &current, spec.delta, spec.tolerance) {
            success = true;
            break;
        }
    }
    Ok(RestartResult { restart, theta, iterations, objective: value, metrics: current, success })
}

fn pruning(spec: &SearchSpec) -> Option<String> {
    match spec.target {
        SearchTarget::WeakNotStrong if spec.delta > 0.5 => Some(format!(
            "delta {} is infeasible: Cauchy-Schwarz gives |Im D(a',a)| <= sqrt(p_a p_a') <= 1/2",
            spec.delta
        )),
        SearchTarget::LinearPositivePhase if spec.delta > FRAC_PI_2 => Some(format!(
            "delta {} is infeasible: Re<C> >= 0 forces |arg<C>| <= pi/2",
            spec.delta
        )),
        _ => None,
    }
}

pub fn search_weak_not_strong(spec: &SearchSpec) -> Result<SearchOutcome> {
    if spec.target != SearchTarget::WeakNotStrong {
        return Err(Error::InvalidSearch("target must be weak-not-strong".into()));
    }
    search_with(spec, Exec::default())
}

pub fn search_linear_positive_phase(spec: &SearchSpec) -> Result<SearchOutcome> {
    if spec.target != SearchTarget::LinearPositivePhase {
        return Err(Error::InvalidSearch("target must be linear-positive-phase".into()));
    }
    search_with(spec, Exec::default())
}

pub fn search(spec: &SearchSpec) -> Result<SearchOutcome> {
    search_with(spec, Exec::default())
}

/// Runs all restarts (concurrently under `Exec::Parallel`) and selects the
/// qualifying candidate with the lowest objective, ties going to the lower
/// restart index.
pub fn search_with(spec: &SearchSpec, exec: Exec) -> Result<SearchOutcome> {
    spec.validate()?;
    if let Some(reason) = pruning(spec) {
        return Ok(SearchOutcome::Exhausted(Exhaustion { reason, pruned: true, best: None }));
    }
    if spec.max_iter == 0 {
        return Ok(SearchOutcome::Exhausted(Exhaustion {
            reason: "iteration budget is zero".into(),
            pruned: false,
            best: None,
        }));
    }
    let results = exec
        .map(spec.restarts, |r| run_restart(spec, r))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let certificate = |r: &RestartResult| SearchCertificate {
        target: spec.target,
        delta: spec.delta,
        seed: spec.seed,
        restart: r.restart,
        iterations: r.iterations,
        objective: r.objective,
        metrics: r.metrics.clone(),
    };

    let mut winners: Vec<&RestartResult> = results.iter().filter(|r| r.success).collect();
    winners.sort_by(|a, b| a.objective.total_cmp(&b.objective).then(a.restart.cmp(&b.restart)));
    for w in winners {
        let start = sample_start(spec, &mut restart_rng(spec.seed, w.restart));
        let param = Parameterization::new(spec, &start)?;
        let Ok((schedule, state)) = param.realize(&w.theta, true) else { continue };
        let family = build_family(&schedule, spec.tolerance)?;
        let d = decoherence_functional_with(&family, &state, Exec::Sequential)?;
        let fresh = metrics(&d);
        if !qualifies(spec.target, &fresh, spec.delta, spec.tolerance) {
            continue;
        }
        let report = classify(&family, &state, spec.tolerance)?;
        let mut cert = certificate(w);
        cert.metrics = fresh;
        return Ok(SearchOutcome::Found(Box::new(Witness { schedule, state, family, report, certificate: cert })));
    }

    let best = results
        .iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective).then(a.restart.cmp(&b.restart)))
        .map(certificate);
    Ok(SearchOutcome::Exhausted(Exhaustion {
        reason: format!("no qualifying family after {} restarts of {} sweeps", spec.restarts, spec.max_iter),
        pruned: false,
        best,
    }))
}
