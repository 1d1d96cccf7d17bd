//! Fixed spin-½ families used as witnesses and reference cases.

use crate::bases::{x_basis, y_basis, z_basis};
use crate::history::{build_family, EventSchedule, HistoryFamily, ProjectorDecomposition};
use crate::linalg::C64;
use crate::state::DensityState;
use crate::tolerance::Tolerance;

fn ground_state() -> DensityState {
    DensityState::pure(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).expect("|0> is a valid state")
}

fn static_family(decompositions: Vec<ProjectorDecomposition>) -> HistoryFamily {
    let tol = Tolerance::default();
    let schedule = EventSchedule::static_sequence(decompositions, tol).expect("static schedule is valid");
    build_family(&schedule, tol).expect("static family builds")
}

/// ρ = |0⟩⟨0|, H = 0, σ_x basis then σ_y basis: weakly but not strongly
/// decoherent, with off-diagonal entries ±i/4.
pub fn canonical_witness() -> (HistoryFamily, DensityState) {
    (static_family(vec![x_basis(), y_basis()]), ground_state())
}

/// ρ = |0⟩⟨0|, σ_x basis then σ_z basis: linearly positive but not weakly
/// decoherent.
pub fn x_then_z_family() -> (HistoryFamily, DensityState) {
    (static_family(vec![x_basis(), z_basis()]), ground_state())
}

/// σ_z basis twice on ρ = |0⟩⟨0|: strongly decoherent.
pub fn repeated_z_family() -> (HistoryFamily, DensityState) {
    (static_family(vec![z_basis(), z_basis()]), ground_state())
}

/// σ_z basis twice on the maximally mixed state: strongly decoherent with
/// every diagonal entry non-zero.
pub fn repeated_z_mixed() -> (HistoryFamily, DensityState) {
    let half = C64::new(0.5, 0.0);
    let rho = crate::linalg::ComplexMatrix::diagonal(&[half, half]).expect("diagonal");
    let rho = DensityState::new(rho, Tolerance::default()).expect("valid state");
    (static_family(vec![z_basis(), z_basis()]), rho)
}

/// One event with the single outcome {I}.
pub fn trivial_family(dim: usize) -> HistoryFamily {
    static_family(vec![ProjectorDecomposition::trivial(dim)])
}
