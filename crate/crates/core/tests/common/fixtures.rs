//! Random families built through the library, for property tests.

use decoherent_histories::bases::{x_basis, y_basis};
use decoherent_histories::search::random::haar_unitary;
use decoherent_histories::search::{random_family, SearchSpec, SearchTarget, StateKind};
use decoherent_histories::{build_family, ComplexMatrix, DensityState, EventSchedule, HistoryFamily, Tolerance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn haar(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = haar_unitary(dim, &mut rng);
    ComplexMatrix::from_fn(dim, |r, c| u[(r, c)]).unwrap()
}

/// The x-then-y witness seen in a Haar-random frame: weak, not strong.
pub fn rotated_witness(seed: u64) -> (HistoryFamily, DensityState) {
    let tol = Tolerance::default();
    let u = haar(2, seed);
    let schedule =
        EventSchedule::static_sequence(vec![x_basis().conjugated(&u), y_basis().conjugated(&u)], tol).unwrap();
    let family = build_family(&schedule, tol).unwrap();
    let ground = ComplexMatrix::diagonal(&[C64_ONE, C64_ZERO]).unwrap();
    let rho = &(&u.adjoint() * &ground) * &u;
    (family, DensityState::new(rho, tol).unwrap())
}

const C64_ONE: decoherent_histories::C64 = decoherent_histories::C64::new(1.0, 0.0);
const C64_ZERO: decoherent_histories::C64 = decoherent_histories::C64::new(0.0, 0.0);

/// A single-event family with a random state: always strongly decoherent.
pub fn random_strong(dim: usize, seed: u64) -> (HistoryFamily, DensityState) {
    let mut spec = SearchSpec::new(SearchTarget::WeakNotStrong, dim, 1, 0.1, seed);
    spec.outcomes = dim.min(3);
    spec.state = StateKind::Either;
    random_family(&spec).unwrap()
}

/// A random family of the given shape.
pub fn random_any(dim: usize, events: usize, outcomes: usize, seed: u64) -> (HistoryFamily, DensityState) {
    let mut spec = SearchSpec::new(SearchTarget::WeakNotStrong, dim, events, 0.1, seed);
    spec.outcomes = outcomes;
    spec.state = StateKind::Either;
    random_family(&spec).unwrap()
}
