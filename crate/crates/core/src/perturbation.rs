//! Sudden projector-conditioned phase kicks at one event time and their
//! effect on class operators, the decoherence functional and the linear
//! probabilities.

use std::f64::consts::PI;

use serde::Serialize;

use crate::certificate::{AnomalyCertificate, AnomalyKind, IngredientCheck, KickRecord};
use crate::consistency::{
    classify, classify_functional, decoherence_functional, decoherence_functional_with, ConsistencyReport,
    DecoherenceFunctional,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::history::{HistoryFamily, HistoryIndex, Origin, ProjectorDecomposition};
use crate::linalg::{ComplexMatrix, C64};
use crate::state::DensityState;
use crate::tolerance::Tolerance;

/// Steps per full turn in the default coupling grid.
pub const GRID_STEPS: usize = 32;
/// Largest grid `default_grid` will enumerate.
pub const MAX_GRID_POINTS: usize = 1 << 15;

/// Impulse δ(t − t_k − 0) Σ λ_a P_a(t_k) at event `event` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseKick {
    event: usize,
    couplings: Vec<f64>,
}

impl PhaseKick {
    /// `couplings[a]` is the phase for the a-th outcome of the event.
    pub fn new(event: usize, couplings: Vec<f64>) -> Result<Self> {
        if event == 0 {
            return Err(Error::InvalidKick("event index is 1-based".into()));
        }
        if couplings.is_empty() {
            return Err(Error::InvalidKick("no couplings".into()));
        }
        if let Some(x) = couplings.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidKick(format!("non-finite coupling {x}")));
        }
        Ok(Self { event, couplings })
    }

    /// Couplings given per outcome label, reordered to match `d`.
    pub fn from_labels(event: usize, d: &ProjectorDecomposition, couplings: &[(&str, f64)]) -> Result<Self> {
        if couplings.len() != d.len() {
            return Err(Error::InvalidKick(format!("{} couplings for {} outcomes", couplings.len(), d.len())));
        }
        let mut ordered = vec![f64::NAN; d.len()];
        for (label, value) in couplings {
            let a = d
                .position(label)
                .ok_or_else(|| Error::InvalidKick(format!("unknown outcome label {label:?}")))?;
            ordered[a] = *value;
        }
        if ordered.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidKick("duplicate outcome label".into()));
        }
        Self::new(event, ordered)
    }

    pub fn event(&self) -> usize {
        self.event
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    fn record(&self) -> KickRecord {
        KickRecord { event: self.event, couplings: self.couplings.clone() }
    }

    fn check_against(&self, family: &HistoryFamily) -> Result<()> {
        let n = family.event_count();
        if self.event > n {
            return Err(Error::InvalidKick(format!("event {} out of range 1..={n}", self.event)));
        }
        let outcomes = family.heisenberg()[self.event - 1].len();
        if self.couplings.len() != outcomes {
            return Err(Error::InvalidKick(format!(
                "{} couplings for {outcomes} outcomes of event {}",
                self.couplings.len(),
                self.event
            )));
        }
        Ok(())
    }
}

/// U = exp(−i Σ λ_a P_a) = Σ e^{−iλ_a} P_a. Equal couplings give an exact
/// multiple of the identity, so a zero kick is exactly the identity map.
pub fn kick_unitary(d: &ProjectorDecomposition, kick: &PhaseKick) -> Result<ComplexMatrix> {
    if kick.couplings.len() != d.len() {
        return Err(Error::InvalidKick(format!("{} couplings for {} outcomes", kick.couplings.len(), d.len())));
    }
    let first = kick.couplings[0];
    if kick.couplings.iter().all(|&l| l == first) {
        return Ok(ComplexMatrix::identity(d.dim()).scale(C64::from_polar(1.0, -first)));
    }
    let mut u = ComplexMatrix::zeros(d.dim());
    for (p, &lambda) in d.projectors().iter().zip(&kick.couplings) {
        u = &u + &p.scale(C64::from_polar(1.0, -lambda));
    }
    Ok(u)
}

/// C_α ↦ e^{−iλ_{α_k}} U†(t_k) C_α.
pub fn perturb_family(family: &HistoryFamily, kick: &PhaseKick) -> Result<HistoryFamily> {
    kick.check_against(family)?;
    let k = kick.event - 1;
    let ud = kick_unitary(&family.heisenberg()[k], kick)?.adjoint();
    let operators = family
        .histories()
        .operators()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let phase = C64::from_polar(1.0, -kick.couplings[family.outcome_position(i, k)]);
            (&ud * c).scale(phase)
        })
        .collect();
    Ok(family.with_operators(operators, Origin::Kicked { original: Box::new(family.clone()), kick: kick.clone() }))
}

/// Applies D(α′, α) ↦ e^{i(λ_{α′_k} − λ_{α_k})} D(α′, α).
pub fn apply_phase_law(family: &HistoryFamily, d: &DecoherenceFunctional, kick: &PhaseKick) -> Result<DecoherenceFunctional> {
    kick.check_against(family)?;
    let k = kick.event - 1;
    let lambda: Vec<f64> = (0..family.len()).map(|i| kick.couplings[family.outcome_position(i, k)]).collect();
    let entries = ComplexMatrix::from_fn(d.len(), |r, c| d.at(r, c) * C64::from_polar(1.0, lambda[r] - lambda[c]))?;
    Ok(DecoherenceFunctional::from_parts(d.labels().to_vec(), entries))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedFunctional {
    /// D′ evaluated from the kicked class operators.
    pub direct: DecoherenceFunctional,
    /// D′ from the phase law applied to the unperturbed D.
    pub phase_law: DecoherenceFunctional,
    pub residual: f64,
}

pub fn perturbed_dfunc(family: &HistoryFamily, rho: &DensityState, kick: &PhaseKick) -> Result<PerturbedFunctional> {
    let kicked = perturb_family(family, kick)?;
    let direct = decoherence_functional(&kicked, rho)?;
    let phase_law = apply_phase_law(family, &decoherence_functional(family, rho)?, kick)?;
    let residual = direct.matrix().max_abs_diff(phase_law.matrix());
    Ok(PerturbedFunctional { direct, phase_law, residual })
}

/// Coupling vectors with the first outcome pinned at 0 and the others
/// stepping through multiples of π/16 in [0, 2π), first free coupling major.
pub fn default_grid(outcomes: usize) -> Result<Vec<Vec<f64>>> {
    if outcomes == 0 {
        return Err(Error::InvalidKick("event has no outcomes".into()));
    }
    let free = outcomes - 1;
    let points = u32::try_from(free)
        .ok()
        .and_then(|f| GRID_STEPS.checked_pow(f))
        .filter(|&p| p <= MAX_GRID_POINTS)
        .ok_or_else(|| {
            Error::InvalidKick(format!("default grid for {outcomes} outcomes exceeds {MAX_GRID_POINTS} points"))
        })?;
    let step = 2.0 * PI / GRID_STEPS as f64;
    Ok((0..points)
        .map(|mut p| {
            let mut lambda = vec![0.0; outcomes];
            for a in (1..outcomes).rev() {
                lambda[a] = (p % GRID_STEPS) as f64 * step;
                p /= GRID_STEPS;
            }
            lambda
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub couplings: Vec<f64>,
    pub strong_max: f64,
    pub weak_max: f64,
    pub linear_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionSurvival {
    pub held_originally: bool,
    /// Held originally and holds at every grid point.
    pub survives: bool,
    pub worst_couplings: Vec<f64>,
    pub worst_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub event: usize,
    pub original: ConsistencyReport,
    pub strong: CriterionSurvival,
    pub weak: CriterionSurvival,
    pub linear_positive: CriterionSurvival,
    pub points: Vec<GridPoint>,
    pub certificates: Vec<AnomalyCertificate>,
}

/// Values this close count as equal when picking the worst grid point, so
/// rounding noise cannot reorder symmetric couplings.
const TIE_BAND: f64 = 1e-12;

pub fn robustness_scan(
    family: &HistoryFamily,
    rho: &DensityState,
    event: usize,
    grid: &[Vec<f64>],
    tol: Tolerance,
) -> Result<RobustnessReport> {
    robustness_scan_with(family, rho, event, grid, tol, Exec::default())
}

/// Classifies the kicked family at every grid point. Grid points are
/// independent; the worst case is the first grid point attaining it.
pub fn robustness_scan_with(
    family: &HistoryFamily,
    rho: &DensityState,
    event: usize,
    grid: &[Vec<f64>],
    tol: Tolerance,
    exec: Exec,
) -> Result<RobustnessReport> {
    if grid.is_empty() {
        return Err(Error::InvalidKick("empty coupling grid".into()));
    }
    let kicks = grid
        .iter()
        .map(|lambda| {
            let kick = PhaseKick::new(event, lambda.clone())?;
            kick.check_against(family)?;
            Ok(kick)
        })
        .collect::<Result<Vec<_>>>()?;
    let original = classify(family, rho, tol)?;
    let outcomes = exec.map_slice(&kicks, |kick| -> Result<(ConsistencyReport, DecoherenceFunctional)> {
        let kicked = perturb_family(family, kick)?;
        let d = decoherence_functional_with(&kicked, rho, Exec::Sequential)?;
        Ok((classify_functional(&d, tol), d))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let points: Vec<GridPoint> = outcomes
        .iter()
        .zip(grid)
        .map(|((r, _), lambda)| GridPoint {
            couplings: lambda.clone(),
            strong_max: r.strong.max_off_diagonal,
            weak_max: r.weak.max_off_diagonal,
            linear_min: r.linear_positive.min_value,
        })
        .collect();

    let worst_max = |get: fn(&GridPoint) -> f64| {
        points.iter().enumerate().fold(0, |b, (i, p)| if get(p) > get(&points[b]) + TIE_BAND { i } else { b })
    };
    let worst_strong = worst_max(|p| p.strong_max);
    let worst_weak = worst_max(|p| p.weak_max);
    let worst_linear = points
        .iter()
        .enumerate()
        .fold(0, |b, (i, p)| if p.linear_min < points[b].linear_min - TIE_BAND { i } else { b });

    let survival = |held: bool, worst: usize, value: f64, holds_everywhere: bool| CriterionSurvival {
        held_originally: held,
        survives: held && holds_everywhere,
        worst_couplings: grid[worst].clone(),
        worst_value: value,
    };
    let strong = survival(
        original.strong.holds,
        worst_strong,
        points[worst_strong].strong_max,
        outcomes.iter().all(|(r, _)| r.strong.holds),
    );
    let weak = survival(
        original.weak.holds,
        worst_weak,
        points[worst_weak].weak_max,
        outcomes.iter().all(|(r, _)| r.weak.holds),
    );
    let linear_positive = survival(
        original.linear_positive.holds,
        worst_linear,
        points[worst_linear].linear_min,
        outcomes.iter().all(|(r, _)| r.linear_positive.holds),
    );

    let mut certificates = Vec::new();
    if original.weak.holds && weak.worst_value > tol.loose() {
        let (report, d) = &outcomes[worst_weak];
        let pair = report.weak.extremal.clone().expect("a violation implies an off-diagonal entry");
        certificates.push(AnomalyCertificate {
            kind: AnomalyKind::PerturbationWeak,
            value: d.get(&pair.alpha_prime, &pair.alpha).map_or(f64::NAN, |z| z.re),
            offending: vec![pair.alpha_prime, pair.alpha],
            quantity: "Re D′(α′, α)".into(),
            ingredients: vec![IngredientCheck {
                name: "unperturbed".into(),
                criterion: "weak: max |Re D| off-diagonal".into(),
                value: original.weak.max_off_diagonal,
                holds: true,
            }],
            kick: Some(kicks[worst_weak].record()),
            tolerance: tol,
        });
    }
    if original.linear_positive.holds && linear_positive.worst_value < -tol.loose() {
        let (report, _) = &outcomes[worst_linear];
        certificates.push(linear_certificate(
            &original,
            report.linear_positive.extremal.clone(),
            linear_positive.worst_value,
            &kicks[worst_linear],
            tol,
        ));
    }

    Ok(RobustnessReport { event, original, strong, weak, linear_positive, points, certificates })
}

fn linear_certificate(
    original: &ConsistencyReport,
    history: HistoryIndex,
    value: f64,
    kick: &PhaseKick,
    tol: Tolerance,
) -> AnomalyCertificate {
    AnomalyCertificate {
        kind: AnomalyKind::PerturbationLinear,
        offending: vec![history],
        quantity: "Re e^{-iλ}<U† C>".into(),
        value,
        ingredients: vec![IngredientCheck {
            name: "unperturbed".into(),
            criterion: "linear positivity: min Re<C>".into(),
            value: original.linear_positive.min_value,
            holds: true,
        }],
        kick: Some(kick.record()),
        tolerance: tol,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearKickOutcome {
    /// Re e^{−iλ_{α_k}} ⟨U†(t_k) C_α⟩_ρ per history.
    pub values: Vec<f64>,
    pub min_value: f64,
    pub extremal: HistoryIndex,
    pub certificate: Option<AnomalyCertificate>,
}

pub fn linear_positivity_perturbation(
    family: &HistoryFamily,
    rho: &DensityState,
    kick: &PhaseKick,
    tol: Tolerance,
) -> Result<LinearKickOutcome> {
    kick.check_against(family)?;
    let k = kick.event - 1;
    let ud = kick_unitary(&family.heisenberg()[k], kick)?.adjoint();
    let values: Vec<f64> = family
        .histories()
        .operators()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let phase = C64::from_polar(1.0, -kick.couplings[family.outcome_position(i, k)]);
            (phase * rho.expectation(&(&ud * c))).re
        })
        .collect();
    let (pos, min_value) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) });
    let extremal = family.histories().labels()[pos].clone();
    let certificate = if min_value < -tol.loose() {
        let original = classify(family, rho, tol)?;
        original
            .linear_positive
            .holds
            .then(|| linear_certificate(&original, extremal.clone(), min_value, kick, tol))
    } else {
        None
    };
    Ok(LinearKickOutcome { values, min_value, extremal, certificate })
}
