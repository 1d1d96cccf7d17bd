mod common;

use common::fixtures::{random_any, random_strong};
use common::*;
use decoherent_histories::bases::z_basis;
use decoherent_histories::history::{Origin, ProjectorDecomposition};
use decoherent_histories::perturbation::{default_grid, linear_positivity_perturbation, GRID_STEPS};
use decoherent_histories::search::{SearchOutcome, SearchSpec, SearchTarget};
use decoherent_histories::{
    canonical_witness, classify, decoherence_functional, kick_unitary, perturb_family, perturbed_dfunc,
    probabilities_linear, robustness_scan, AnomalyKind, ComplexMatrix, HistoryIndex, PhaseKick, Tolerance, C64,
};
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, PI};

fn tol() -> Tolerance {
    Tolerance::default()
}

fn h(a: &str, b: &str) -> HistoryIndex {
    HistoryIndex::new([a, b])
}

fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// e^{−iλ_a} U† Q_b P_a with U = Σ e^{−iλ} P on the x basis, by hand.
fn kicked_witness_operator(s: f64, t: f64, lambda: [f64; 2]) -> M2 {
    let ud = add2(&scale2(&px(1.0), phase(lambda[0])), &scale2(&px(-1.0), phase(lambda[1])));
    let own = if s > 0.0 { lambda[0] } else { lambda[1] };
    scale2(&mul2(&ud, &mul2(&py(t), &px(s))), phase(-own))
}

fn scale2(a: &M2, z: C64) -> M2 {
    let mut out = *a;
    for row in &mut out {
        for x in row {
            *x *= z;
        }
    }
    out
}

#[test]
fn kick_unitary_examples() {
    let z = z_basis();
    let u = kick_unitary(&z, &PhaseKick::new(1, vec![0.0, PI]).unwrap()).unwrap();
    assert!(u.max_abs_diff(&ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap()) < 1e-15);
    let u = kick_unitary(&z, &PhaseKick::new(1, vec![0.0, 0.0]).unwrap()).unwrap();
    assert!(u.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);
    let one = ProjectorDecomposition::trivial(3);
    let u = kick_unitary(&one, &PhaseKick::new(1, vec![0.7]).unwrap()).unwrap();
    assert!(u.max_abs_diff(&ComplexMatrix::identity(3).scale(phase(-0.7))) < 1e-15);
    assert!(kick_unitary(&z, &PhaseKick::new(1, vec![0.0]).unwrap()).is_err());
}

#[test]
fn kicked_witness_matches_hand_products() {
    let (f, rho) = canonical_witness();
    let lambda = [0.0, FRAC_PI_2];
    let kick = PhaseKick::new(1, lambda.to_vec()).unwrap();
    let kicked = perturb_family(&f, &kick).unwrap();
    for (i, label) in kicked.histories().labels().iter().enumerate() {
        let s = if label.components()[0] == "+" { 1.0 } else { -1.0 };
        let t = if label.components()[1] == "+" { 1.0 } else { -1.0 };
        let want = kicked_witness_operator(s, t, lambda);
        assert!(max_diff2(&kicked.histories().operators()[i], &want) < 1e-15, "{label}");
    }
    match kicked.origin() {
        Origin::Kicked { original, kick: k } => {
            assert_eq!(**original, f);
            assert_eq!(k, &kick);
        }
        Origin::Built => panic!("provenance lost"),
    }

    let p = perturbed_dfunc(&f, &rho, &kick).unwrap();
    assert!(p.residual <= tol().loose());
    let d = p.direct.get(&h("-", "+"), &h("+", "+")).unwrap();
    assert!((d - c(0.25, 0.0)).norm() <= 1e-9);
    let r = classify(&kicked, &rho, tol()).unwrap();
    assert!(!r.weak.holds && (r.weak.max_off_diagonal - 0.25).abs() <= 1e-9);
}

#[test]
fn global_phase_and_zero_kicks_are_inert() {
    let (f, _) = canonical_witness();
    for kick in [PhaseKick::new(2, vec![0.9, 0.9]).unwrap(), PhaseKick::new(1, vec![0.0, 0.0]).unwrap()] {
        let kicked = perturb_family(&f, &kick).unwrap();
        for (a, b) in kicked.histories().operators().iter().zip(f.histories().operators()) {
            assert!(a.max_abs_diff(b) < 1e-14);
        }
    }
}

#[test]
fn completeness_is_kept_by_the_kick() {
    // Σ e^{−iλ_{α_k}} C_α = U, so Σ C′ = U†U = I.
    for seed in 0..10 {
        let (f, _) = random_any(3, 2, 3, seed);
        let kick = PhaseKick::new(1 + seed as usize % 2, vec![0.3, 1.1, -2.0]).unwrap();
        let kicked = perturb_family(&f, &kick).unwrap();
        assert!(kicked.histories().sum().max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }
}

#[test]
fn robustness_scan_examples() {
    let (f, rho) = canonical_witness();
    let grid = default_grid(2).unwrap();
    assert_eq!(grid.len(), GRID_STEPS);
    let report = robustness_scan(&f, &rho, 1, &grid, tol()).unwrap();
    assert!(report.strong.survives == report.strong.held_originally);
    assert!(report.weak.held_originally && !report.weak.survives);
    assert!((report.weak.worst_value - 0.25).abs() <= 1e-9);
    assert_eq!(report.weak.worst_couplings, vec![0.0, FRAC_PI_2]);
    let cert = &report.certificates[0];
    assert_eq!(cert.kind, AnomalyKind::PerturbationWeak);
    assert_eq!(cert.offending, vec![h("-", "+"), h("+", "+")]);
    assert!((cert.value - 0.25).abs() <= 1e-9);
    assert_eq!(cert.kick.as_ref().unwrap().couplings, vec![0.0, FRAC_PI_2]);

    let report = robustness_scan(&f, &rho, 1, &[vec![0.0, 0.0]], tol()).unwrap();
    assert!(report.weak.survives && report.linear_positive.survives && report.certificates.is_empty());

    let (s, rs) = decoherent_histories::search::repeated_z_mixed();
    for k in 1..=2 {
        let report = robustness_scan(&s, &rs, k, &grid, tol()).unwrap();
        assert!(report.strong.survives && report.weak.survives);
    }
    assert!(robustness_scan(&f, &rho, 1, &[], tol()).is_err());
}

#[test]
fn witness_linear_values_under_kicks() {
    // By hand: Re e^{−iλ_a}⟨0|U† Q_b P_a|0⟩ stays within [0, ½] for every θ.
    let (f, rho) = canonical_witness();
    for j in 0..GRID_STEPS {
        let theta = j as f64 * PI / 16.0;
        let kick = PhaseKick::new(1, vec![0.0, theta]).unwrap();
        let out = linear_positivity_perturbation(&f, &rho, &kick, tol()).unwrap();
        for (label, v) in f.histories().labels().iter().zip(&out.values) {
            let s = if label.components()[0] == "+" { 1.0 } else { -1.0 };
            let t = if label.components()[1] == "+" { 1.0 } else { -1.0 };
            let want = trace2(&mul2(&ground(), &kicked_witness_operator(s, t, [0.0, theta]))).re;
            assert!((v - want).abs() < 1e-14);
        }
        assert!(out.min_value >= -tol().atol());
        assert!(out.certificate.is_none());
    }
}

#[test]
fn zero_kick_reproduces_linear_probabilities() {
    for seed in 0..20 {
        let (f, rho) = random_any(2 + seed as usize % 3, 2, 2, seed);
        let lin = probabilities_linear(&f, &rho, tol());
        let out = linear_positivity_perturbation(&f, &rho, &PhaseKick::new(2, vec![0.0, 0.0]).unwrap(), tol()).unwrap();
        assert_eq!(out.values, lin.raw);
        let same = linear_positivity_perturbation(&f, &rho, &PhaseKick::new(1, vec![1.3, 1.3]).unwrap(), tol()).unwrap();
        for (a, b) in same.values.iter().zip(&out.values) {
            assert!((a - b).abs() <= tol().loose());
        }
    }
}

#[test]
fn searched_phase_family_goes_negative_under_a_kick() {
    let spec = SearchSpec::new(SearchTarget::LinearPositivePhase, 2, 2, 3.0 * PI / 8.0, 7);
    let SearchOutcome::Found(w) = decoherent_histories::search::search(&spec).unwrap() else {
        panic!("search exhausted");
    };
    let grid = default_grid(2).unwrap();
    let cert = (1..=2)
        .flat_map(|k| robustness_scan(&w.family, &w.state, k, &grid, tol()).unwrap().certificates)
        .find(|c| c.kind == AnomalyKind::PerturbationLinear)
        .expect("linear certificate");
    assert!(cert.value < -tol().loose());
    let record = cert.kick.as_ref().unwrap();
    let kick = PhaseKick::new(record.event, record.couplings.clone()).unwrap();
    let replay = linear_positivity_perturbation(&w.family, &w.state, &kick, tol()).unwrap();
    assert!((replay.min_value - cert.value).abs() <= tol().loose());
    assert_eq!(replay.certificate.unwrap().offending, cert.offending);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phase_law_and_modulus(seed in 0u64..10_000, k in 1usize..=2, l1 in -7.0f64..7.0, l2 in -7.0f64..7.0) {
        let dim = 2 + (seed % 3) as usize;
        let (f, rho) = random_any(dim, 2, 3.min(dim), seed);
        let mut couplings = vec![l1, l2, l1 - l2];
        couplings.truncate(3.min(dim));
        let kick = PhaseKick::new(k, couplings).unwrap();
        let p = perturbed_dfunc(&f, &rho, &kick).unwrap();
        prop_assert!(p.residual <= tol().loose());
        let d = decoherence_functional(&f, &rho).unwrap();
        for r in 0..d.len() {
            for cc in 0..d.len() {
                prop_assert!((p.direct.at(r, cc).norm() - d.at(r, cc).norm()).abs() <= tol().loose());
            }
            prop_assert!((p.direct.at(r, r) - d.at(r, r)).norm() <= tol().loose());
        }
        let before = classify(&f, &rho, tol()).unwrap();
        let after = classify(&perturb_family(&f, &kick).unwrap(), &rho, tol()).unwrap();
        prop_assert_eq!(before.strong.holds, after.strong.holds);
    }

    #[test]
    fn kicks_compose_additively(seed in 0u64..10_000, a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let (f, rho) = random_any(2, 2, 2, seed);
        let first = PhaseKick::new(1, vec![0.0, a]).unwrap();
        let second = PhaseKick::new(1, vec![0.0, b]).unwrap();
        let both = PhaseKick::new(1, vec![0.0, a + b]).unwrap();
        let twice = perturb_family(&perturb_family(&f, &first).unwrap(), &second).unwrap();
        let once = perturb_family(&f, &both).unwrap();
        let d2 = decoherence_functional(&twice, &rho).unwrap();
        let d1 = decoherence_functional(&once, &rho).unwrap();
        prop_assert!(d2.matrix().max_abs_diff(d1.matrix()) <= tol().loose());
    }

    #[test]
    fn strong_families_stay_strong(seed in 0u64..10_000, l in 0.0f64..6.3) {
        let (f, rho) = random_strong(3, seed);
        let n = f.schedule().outcome_counts()[0];
        let kick = PhaseKick::new(1, (0..n).map(|i| i as f64 * l).collect()).unwrap();
        let r = classify(&perturb_family(&f, &kick).unwrap(), &rho, tol()).unwrap();
        prop_assert!(r.strong.holds);
    }
}
