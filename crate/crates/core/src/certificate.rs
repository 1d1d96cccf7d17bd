use serde::Serialize;

use crate::history::HistoryIndex;
use crate::tolerance::Tolerance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyKind {
    CompositionWeak,
    CompositionLinear,
    PerturbationWeak,
    PerturbationLinear,
}

impl std::fmt::Display for AnomalyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AnomalyKind::CompositionWeak => "composition-weak",
            AnomalyKind::CompositionLinear => "composition-linear",
            AnomalyKind::PerturbationWeak => "perturbation-weak",
            AnomalyKind::PerturbationLinear => "perturbation-linear",
        })
    }
}

/// A criterion value recorded for one ingredient family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngredientCheck {
    pub name: String,
    pub criterion: String,
    pub value: f64,
    pub holds: bool,
}

/// The kick that produced a perturbation anomaly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KickRecord {
    /// 1-based event index.
    pub event: usize,
    pub couplings: Vec<f64>,
}

/// Record that some ingredients satisfy a weakened criterion while their
/// composition or perturbation violates it by more than 10·atol.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyCertificate {
    pub kind: AnomalyKind,
    /// (α′, α) for off-diagonal violations, (α) for a negative linear probability.
    pub offending: Vec<HistoryIndex>,
    pub quantity: String,
    pub value: f64,
    pub ingredients: Vec<IngredientCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kick: Option<KickRecord>,
    pub tolerance: Tolerance,
}

impl AnomalyCertificate {
    pub fn offending_label(&self) -> String {
        self.offending.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
    }
}
