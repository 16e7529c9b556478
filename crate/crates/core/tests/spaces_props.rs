use matweight::dyadic::{CubeWindow, Domain};
use matweight::linalg::C64;
use matweight::reducing::ReducingFamily;
use matweight::spaces::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn window(n: usize) -> CubeWindow {
    if n == 1 {
        CubeWindow::new(Domain::unit(1), 0, 4).unwrap()
    } else {
        CubeWindow::new(Domain::unit(2), 0, 2).unwrap()
    }
}

fn field(seed: u64, n: usize, m: usize) -> CoefficientField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CoefficientField::random(&mut rng, &window(n), m)
}

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0), Just(3.5), Just(f64::INFINITY)]
}

fn finite_exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(1.5), Just(2.0), Just(4.0)]
}

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![Just(Kind::B), Just(Kind::F)]
}

fn norm(t: &CoefficientField, sp: &SpaceParams) -> f64 {
    let level = default_grid_level(&t.window);
    seq_norm(t, sp, Weighting::Unweighted, level).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn homogeneity(seed in 0u64..1000, n in 1usize..=2, s in -1.0f64..1.0, tau in 0.0f64..1.5,
                   p in finite_exponent(), q in exponent(), kind in kind(), c in 0.01f64..100.0, phase in 0.0f64..6.3) {
        let t = field(seed, n, 2);
        let sp = SpaceParams::new(s, tau, p, q, kind).unwrap();
        let a = norm(&t, &sp);
        let b = norm(&t.scaled(C64::from_polar(c, phase)), &sp);
        prop_assert!((b - c * a).abs() <= 1e-12 * c * a, "{b} vs {}", c * a);
    }

    #[test]
    fn quasi_triangle(seed in 0u64..1000, n in 1usize..=2, s in -1.0f64..1.0, tau in 0.0f64..1.5,
                      p in finite_exponent(), q in exponent(), kind in kind()) {
        let t = field(seed, n, 2);
        let u = field(seed + 10_000, n, 2);
        let sp = SpaceParams::new(s, tau, p, q, kind).unwrap();
        let k = 1.0f64.min(p).min(q);
        let lhs = norm(&t.add(&u).unwrap(), &sp).powf(k);
        let rhs = norm(&t, &sp).powf(k) + norm(&u, &sp).powf(k);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} > {rhs}");
    }

    #[test]
    fn window_monotonicity(seed in 0u64..1000, tau in 0.0f64..1.5, p in finite_exponent(), q in exponent(), kind in kind(),
                           lo in 0i32..3, hi in 2i32..5) {
        prop_assume!(lo <= hi);
        let t = field(seed, 1, 1);
        let fields = seq_fields(&t, 0.3, p, Weighting::Unweighted, 6, Selection::Full).unwrap();
        let mix = Mixed { p, q, tau, kind };
        let small = CubeWindow::new(Domain::unit(1), lo, hi).unwrap();
        let a = la_tau_norm(&fields, &mix, &small).unwrap().value;
        let b = la_tau_norm(&fields, &mix, &t.window).unwrap().value;
        prop_assert!(a <= b);
    }

    #[test]
    fn b_and_f_agree_at_p_equals_q(seed in 0u64..1000, n in 1usize..=2, s in -1.0f64..1.0, tau in 0.0f64..1.5,
                                   p in finite_exponent()) {
        let t = field(seed, n, 2);
        let b = norm(&t, &SpaceParams::new(s, tau, p, p, Kind::B).unwrap());
        let f = norm(&t, &SpaceParams::new(s, tau, p, p, Kind::F).unwrap());
        prop_assert!((b - f).abs() <= 1e-12 * b);
    }

    #[test]
    fn embedding_chain(seed in 0u64..1000, n in 1usize..=2, s in -1.0f64..1.0, tau in 0.0f64..1.5,
                       p in finite_exponent(), q in exponent()) {
        let t = field(seed, n, 1);
        let f = norm(&t, &SpaceParams::new(s, tau, p, q, Kind::F).unwrap());
        let lo = norm(&t, &SpaceParams::new(s, tau, p, p.max(q), Kind::B).unwrap());
        let hi = norm(&t, &SpaceParams::new(s, tau, p, p.min(q), Kind::B).unwrap());
        prop_assert!(lo <= f * (1.0 + ROUNDING) && f <= hi * (1.0 + ROUNDING));
    }

    #[test]
    fn maximal_sequence_dominates(seed in 0u64..1000, r in finite_exponent(), lambda in 1.5f64..6.0) {
        let t = field(seed, 1, 1).magnitudes();
        let (star, _) = maximal_sequence(&t, r, lambda).unwrap();
        for (q, v) in &t {
            prop_assert!(star[q] >= *v * (1.0 - 1e-12));
        }
    }
}

#[test]
fn finfty_matches_critical_f_on_many_draws() {
    for seed in 0..40 {
        let t = field(seed, 1 + (seed as usize % 2), 2);
        let level = default_grid_level(&t.window);
        for q in [0.5, 1.0, 2.0, 3.0] {
            let fields = seq_fields(&t, 0.1, q, Weighting::Unweighted, level, Selection::Full).unwrap();
            let a = finfty_norm(&fields, q, &t.window).unwrap().value;
            let mix = Mixed { p: q, q, tau: 1.0 / q, kind: Kind::F };
            assert_eq!(a, la_tau_norm(&fields, &mix, &t.window).unwrap().value);
        }
    }
}

#[test]
fn selected_half_cubes_change_f_norm_boundedly() {
    let mut ratios = Vec::new();
    for seed in 0..30 {
        let t = field(seed, 1, 1);
        let win = &t.window;
        let mix = Mixed { p: 2.0, q: 1.0, tau: 0.2, kind: Kind::F };
        let full = seq_fields(&t, 0.5, 2.0, Weighting::Unweighted, 7, Selection::Full).unwrap();
        let half = seq_fields(&t, 0.5, 2.0, Weighting::Unweighted, 7, Selection::LeftHalf).unwrap();
        let a = la_tau_norm(&full, &mix, win).unwrap().value;
        let b = la_tau_norm(&half, &mix, win).unwrap().value;
        assert!(b <= a);
        ratios.push(a / b);
    }
    let worst = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(worst < 4.0, "ratio {worst}");
}

#[test]
fn maximal_sequence_norm_ratio_is_bounded() {
    let sp = SpaceParams::new(0.3, 0.25, 2.0, 2.0, Kind::F).unwrap();
    let mut ratios = Vec::new();
    for seed in 0..30 {
        let t = field(seed, 1, 1);
        let mags = t.magnitudes();
        let (star, _) = maximal_sequence(&mags, sp.p.min(sp.q), 2.0).unwrap();
        let a = norm(&CoefficientField::from_scalars(&t.window, &star), &sp);
        let b = norm(&CoefficientField::from_scalars(&t.window, &mags), &sp);
        ratios.push(a / b);
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    assert!(lo >= 1.0 - 1e-12);
    assert!(hi / lo < 3.0, "spread {lo}..{hi}");
}

#[test]
fn supercritical_equality_under_identity_family() {
    for p in [0.5, 1.0, 2.0] {
        for seed in 0..10 {
            let t = field(seed, 1, 2);
            let fam = ReducingFamily::identity(&t.window, 2, p);
            let sp = SpaceParams::new(0.2, 1.0 / p, p, f64::INFINITY, Kind::F).unwrap();
            let checks = identity_checks(&t, &sp, &fam, 6).unwrap();
            let eq = checks.iter().find(|c| c.name == "supercritical equality").unwrap();
            assert_eq!(eq.passed, Some(true), "{eq:?}");
        }
    }
}
