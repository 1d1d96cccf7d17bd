//! Decoherent-histories calculus on small finite-dimensional systems.
//!
//! Class operators are built from time-ordered Heisenberg projectors, the
//! decoherence functional D(α′, α) = tr(ρ C†_{α′} C_α) is evaluated densely,
//! and families are classified against three criteria:
//!
//! * strong decoherence: every off-diagonal D vanishes;
//! * weak decoherence: only Re D vanishes off the diagonal;
//! * linear positivity: Re⟨C_α⟩ ≥ 0 for every history.
//!
//! The [`composition`] and [`perturbation`] labs test whether each
//! criterion survives tensor composition with an independent system and
//! projector-conditioned phase kicks, emitting [`AnomalyCertificate`]s when
//! a weakened criterion breaks. [`search`] supplies witness families.
//!
//! Data-parallel loops go through [`Exec`]; with the default `parallel`
//! feature they run on rayon, otherwise sequentially, with identical output.

pub mod bases;
pub mod certificate;
pub mod composition;
pub mod consistency;
pub mod error;
pub mod exec;
pub mod history;
pub mod linalg;
pub mod perturbation;
pub mod scenario;
pub mod search;
pub mod state;
pub mod tolerance;

pub use certificate::{AnomalyCertificate, AnomalyKind};
pub use composition::{compose, composition_anomaly, linear_positivity_composition_anomaly, verify_factorization, CompositeFamily};
pub use consistency::{
    brute_force_consistency, classify, decoherence_functional, probabilities_linear, probabilities_standard,
    sum_rule_check, ConsistencyReport, DecoherenceFunctional,
};
pub use error::{Error, Result};
pub use exec::Exec;
pub use history::{
    build_family, coarse_grain, heisenberg_projectors, validate_decomposition, ClassOperators, Event, EventSchedule,
    HistoryFamily, HistoryIndex, Partition, ProjectorDecomposition,
};
pub use linalg::{kron, matexp_unitary, psd_check, ComplexMatrix, C64};
pub use perturbation::{
    kick_unitary, linear_positivity_perturbation, perturb_family, perturbed_dfunc, robustness_scan, PhaseKick,
};
pub use scenario::{Scenario, ScenarioFile};
pub use search::{canonical_witness, random_family, SearchSpec, SearchTarget};
pub use state::DensityState;
pub use tolerance::Tolerance;
