//! Tensor composition of statistically independent history families and
//! the composition anomalies of the weakened criteria.

use serde::Serialize;

use crate::certificate::{AnomalyCertificate, AnomalyKind, IngredientCheck};
use crate::consistency::{
    amplitudes, classify, decoherence_functional_with, extremal_off_diagonal, ConsistencyReport,
    DecoherenceFunctional, IndexPair,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::history::{ClassOperators, HistoryFamily, HistoryIndex};
use crate::linalg::{kron, ComplexMatrix, C64};
use crate::state::DensityState;
use crate::tolerance::Tolerance;

/// Composite of two families over ρ^A ⊗ ρ^B with class operators
/// C^A_α ⊗ C^B_β, enumerated A-major.
#[derive(Debug, Clone)]
pub struct CompositeFamily {
    a: HistoryFamily,
    b: HistoryFamily,
    rho_a: DensityState,
    rho_b: DensityState,
    state: DensityState,
    histories: ClassOperators,
}

impl CompositeFamily {
    pub fn factors(&self) -> (&HistoryFamily, &HistoryFamily) {
        (&self.a, &self.b)
    }

    pub fn factor_states(&self) -> (&DensityState, &DensityState) {
        (&self.rho_a, &self.rho_b)
    }

    pub fn state(&self) -> &DensityState {
        &self.state
    }

    pub fn histories(&self) -> &ClassOperators {
        &self.histories
    }

    pub fn dim(&self) -> usize {
        self.histories.dim()
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    /// Factor positions (α, β) of composite position `i`.
    pub fn split(&self, i: usize) -> (usize, usize) {
        let nb = self.b.len();
        (i / nb, i % nb)
    }
}

impl AsRef<ClassOperators> for CompositeFamily {
    fn as_ref(&self) -> &ClassOperators {
        &self.histories
    }
}

pub fn compose(
    fa: &HistoryFamily,
    rho_a: &DensityState,
    fb: &HistoryFamily,
    rho_b: &DensityState,
) -> Result<CompositeFamily> {
    rho_a.matrix().ensure_dim(fa.dim())?;
    rho_b.matrix().ensure_dim(fb.dim())?;
    let (ha, hb) = (fa.histories(), fb.histories());
    let mut labels = Vec::with_capacity(ha.len() * hb.len());
    let mut operators = Vec::with_capacity(ha.len() * hb.len());
    for (la, ca) in ha.labels().iter().zip(ha.operators()) {
        for (lb, cb) in hb.labels().iter().zip(hb.operators()) {
            labels.push(HistoryIndex::joined(la, lb));
            operators.push(kron(ca, cb));
        }
    }
    Ok(CompositeFamily {
        a: fa.clone(),
        b: fb.clone(),
        rho_a: rho_a.clone(),
        rho_b: rho_b.clone(),
        state: rho_a.product(rho_b),
        histories: ClassOperators::new_unchecked(labels, operators),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationCheck {
    /// max |D^{AB}(α′β′, αβ) − D^A(α′, α)·D^B(β′, β)|.
    pub residual: f64,
    pub composite: DecoherenceFunctional,
    pub factor_a: DecoherenceFunctional,
    pub factor_b: DecoherenceFunctional,
}

pub fn verify_factorization(composite: &CompositeFamily) -> Result<FactorizationCheck> {
    verify_factorization_with(composite, Exec::default())
}

pub fn verify_factorization_with(composite: &CompositeFamily, exec: Exec) -> Result<FactorizationCheck> {
    let direct = decoherence_functional_with(composite, &composite.state, exec)?;
    let da = decoherence_functional_with(&composite.a, &composite.rho_a, exec)?;
    let db = decoherence_functional_with(&composite.b, &composite.rho_b, exec)?;
    let n = composite.len();
    let row_worst = exec.map(n, |r| {
        let (ra, rb) = composite.split(r);
        (0..n).fold(0.0_f64, |m, c| {
            let (ca, cb) = composite.split(c);
            m.max((direct.at(r, c) - da.at(ra, ca) * db.at(rb, cb)).norm())
        })
    });
    let residual = row_worst.into_iter().fold(0.0, f64::max);
    Ok(FactorizationCheck { residual, composite: direct, factor_a: da, factor_b: db })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionOutcome {
    pub factor_a: ConsistencyReport,
    pub factor_b: ConsistencyReport,
    /// Extremal composite entry for the scanned quantity.
    pub extremal: Option<IndexPair>,
    pub extremal_value: f64,
    /// Entries within 10·atol of the boundary that are not violations.
    pub marginal: Vec<Vec<HistoryIndex>>,
    pub certificate: Option<AnomalyCertificate>,
}

fn ingredient(name: &str, criterion: &str, value: f64, holds: bool) -> IngredientCheck {
    IngredientCheck { name: name.into(), criterion: criterion.into(), value, holds }
}

/// Scans the composite functional for off-diagonal |Re D^{AB}| > 10·atol.
/// Both factors must be weakly decoherent.
pub fn composition_anomaly(
    fa: &HistoryFamily,
    rho_a: &DensityState,
    fb: &HistoryFamily,
    rho_b: &DensityState,
    tol: Tolerance,
) -> Result<CompositionOutcome> {
    let factor_a = classify(fa, rho_a, tol)?;
    let factor_b = classify(fb, rho_b, tol)?;
    for (name, r) in [("A", &factor_a), ("B", &factor_b)] {
        if !r.weak.holds {
            return Err(Error::Precondition(format!(
                "factor {name} is not weakly decoherent (max |Re D| = {:e})",
                r.weak.max_off_diagonal
            )));
        }
    }
    let composite = compose(fa, rho_a, fb, rho_b)?;
    let d = decoherence_functional_with(&composite, composite.state(), Exec::default())?;
    let n = d.len();
    let found = extremal_off_diagonal(n, |r, c| d.at(r, c).re.abs());
    let mut marginal = Vec::new();
    for r in 1..n {
        for c in 0..r {
            let v = d.at(r, c).re.abs();
            if v > tol.atol() && v <= tol.loose() {
                marginal.push(vec![d.labels()[r].clone(), d.labels()[c].clone()]);
            }
        }
    }
    let (extremal, extremal_value, certificate) = match found {
        None => (None, 0.0, None),
        Some((r, c, _)) => {
            let value = d.at(r, c).re;
            let pair = d.pair(r, c);
            let certificate = (value.abs() > tol.loose()).then(|| AnomalyCertificate {
                kind: AnomalyKind::CompositionWeak,
                offending: vec![pair.alpha_prime.clone(), pair.alpha.clone()],
                quantity: "Re D(α′, α)".into(),
                value,
                ingredients: vec![
                    ingredient("A", "weak: max |Re D| off-diagonal", factor_a.weak.max_off_diagonal, true),
                    ingredient("B", "weak: max |Re D| off-diagonal", factor_b.weak.max_off_diagonal, true),
                ],
                kick: None,
                tolerance: tol,
            });
            (Some(pair), value, certificate)
        }
    };
    Ok(CompositionOutcome { factor_a, factor_b, extremal, extremal_value, marginal, certificate })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearCompositionOutcome {
    pub factor_a: ConsistencyReport,
    pub factor_b: ConsistencyReport,
    /// max |⟨C^A_α ⊗ C^B_β⟩_{ρA⊗ρB} − ⟨C^A_α⟩⟨C^B_β⟩|.
    pub multiplicativity_residual: f64,
    pub extremal: HistoryIndex,
    pub min_value: f64,
    pub marginal: Vec<HistoryIndex>,
    pub certificate: Option<AnomalyCertificate>,
}

/// Evaluates Re(⟨C^A_α⟩⟨C^B_β⟩) over all composite histories. Both factors
/// must be linearly positive.
pub fn linear_positivity_composition_anomaly(
    fa: &HistoryFamily,
    rho_a: &DensityState,
    fb: &HistoryFamily,
    rho_b: &DensityState,
    tol: Tolerance,
) -> Result<LinearCompositionOutcome> {
    let factor_a = classify(fa, rho_a, tol)?;
    let factor_b = classify(fb, rho_b, tol)?;
    for (name, r) in [("A", &factor_a), ("B", &factor_b)] {
        if !r.linear_positive.holds {
            return Err(Error::Precondition(format!(
                "factor {name} is not linearly positive (min Re<C> = {:e})",
                r.linear_positive.min_value
            )));
        }
    }
    let composite = compose(fa, rho_a, fb, rho_b)?;
    let amp_a = amplitudes(fa, rho_a);
    let amp_b = amplitudes(fb, rho_b);
    let direct = amplitudes(&composite, composite.state());
    let products: Vec<C64> = (0..composite.len())
        .map(|i| {
            let (ia, ib) = composite.split(i);
            amp_a[ia] * amp_b[ib]
        })
        .collect();
    let multiplicativity_residual = direct
        .iter()
        .zip(&products)
        .fold(0.0_f64, |m, (d, p)| m.max((d - p).norm()));

    let labels = composite.histories().labels();
    let (pos, min_value) = products
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, z)| if z.re < bv { (i, z.re) } else { (bi, bv) });
    let marginal = products
        .iter()
        .enumerate()
        .filter(|(_, z)| z.re.abs() <= tol.loose() && z.norm() > tol.loose())
        .map(|(i, _)| labels[i].clone())
        .collect();
    let certificate = (min_value < -tol.loose()).then(|| AnomalyCertificate {
        kind: AnomalyKind::CompositionLinear,
        offending: vec![labels[pos].clone()],
        quantity: "Re<C>".into(),
        value: min_value,
        ingredients: vec![
            ingredient("A", "linear positivity: min Re<C>", factor_a.linear_positive.min_value, true),
            ingredient("B", "linear positivity: min Re<C>", factor_b.linear_positive.min_value, true),
        ],
        kick: None,
        tolerance: tol,
    });
    Ok(LinearCompositionOutcome {
        factor_a,
        factor_b,
        multiplicativity_residual,
        extremal: labels[pos].clone(),
        min_value,
        marginal,
        certificate,
    })
}

/// Composite class-operator sum, for checking Σ C^{AB} = I.
pub fn completeness_residual(composite: &CompositeFamily) -> f64 {
    composite.histories.sum().max_abs_diff(&ComplexMatrix::identity(composite.dim()))
}
