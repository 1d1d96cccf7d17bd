//! JSON scenario files: density state, optional Hamiltonian and explicit
//! Schrödinger-picture projector matrices per event.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{Event, EventSchedule, ProjectorDecomposition};
use crate::linalg::ComplexMatrix;
use crate::state::DensityState;
use crate::tolerance::Tolerance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub time: f64,
    pub labels: Vec<String>,
    pub projectors: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub dim: usize,
    pub rho: ComplexMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<ComplexMatrix>,
    pub events: Vec<EventSpec>,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub schedule: EventSchedule,
    pub state: DensityState,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSchedule(format!("malformed scenario: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn from_model(schedule: &EventSchedule, state: &DensityState) -> Self {
        let hamiltonian = schedule.hamiltonian();
        Self {
            dim: schedule.dim(),
            rho: state.matrix().clone(),
            hamiltonian: (hamiltonian.max_abs() > 0.0).then(|| hamiltonian.clone()),
            events: schedule
                .events()
                .iter()
                .map(|e| EventSpec {
                    time: e.time,
                    labels: e.decomposition.labels().to_vec(),
                    projectors: e.decomposition.projectors().to_vec(),
                })
                .collect(),
        }
    }

    /// Validates every invariant, naming the first one that fails.
    pub fn to_model(&self, tol: Tolerance) -> Result<Scenario> {
        self.rho.ensure_dim(self.dim).map_err(|e| Error::InvalidState(format!("rho: {e}")))?;
        let state = DensityState::new(self.rho.clone(), tol)?;
        let hamiltonian = match &self.hamiltonian {
            Some(h) => {
                h.ensure_dim(self.dim).map_err(|e| Error::InvalidSchedule(format!("hamiltonian: {e}")))?;
                h.clone()
            }
            None => ComplexMatrix::zeros(self.dim),
        };
        let events = self
            .events
            .iter()
            .enumerate()
            .map(|(k, e)| {
                for p in &e.projectors {
                    p.ensure_dim(self.dim)
                        .map_err(|err| Error::InvalidDecomposition(format!("event {}: {err}", k + 1)))?;
                }
                let decomposition = ProjectorDecomposition::new(e.labels.clone(), e.projectors.clone(), tol)
                    .map_err(|err| match err {
                        Error::InvalidDecomposition(msg) => {
                            Error::InvalidDecomposition(format!("event {}: {msg}", k + 1))
                        }
                        other => other,
                    })?;
                Ok(Event { time: e.time, decomposition })
            })
            .collect::<Result<Vec<_>>>()?;
        let schedule = EventSchedule::new(hamiltonian, events, tol)?;
        Ok(Scenario { schedule, state })
    }
}
