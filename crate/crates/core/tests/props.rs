use matweight::dyadic::*;
use matweight::linalg::*;
use matweight::reducing::{reduce, Method};
use matweight::weights::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (*a - *b).op_norm() / b.op_norm()
}

fn quad() -> QuadSpec {
    QuadSpec::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn powers_compose(seed in 0u64..10_000, m in 1usize..=4, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let p = PositiveMatrix::random(&mut rng(seed), m, 1e6);
        let lhs = *matrix_power(&p, a).unwrap().matrix() * *matrix_power(&p, b).unwrap().matrix();
        let rhs = *matrix_power(&p, a + b).unwrap().matrix();
        prop_assert!(rel(&lhs, &rhs) <= 1e-10 * 1e6f64.powf((a.abs() + b.abs()) / 2.0).max(1.0), "{}", rel(&lhs, &rhs));
    }

    #[test]
    fn first_power_is_identity_map(seed in 0u64..10_000, m in 1usize..=4) {
        let p = PositiveMatrix::random(&mut rng(seed), m, 1e6);
        prop_assert_eq!(matrix_power(&p, 1.0).unwrap(), p);
    }

    #[test]
    fn op_norm_is_submultiplicative(seed in 0u64..10_000, m in 1usize..=4) {
        let mut r = rng(seed);
        let a = *PositiveMatrix::random(&mut r, m, 1e3).matrix() * random_unitary(&mut r, m);
        let b = *PositiveMatrix::random(&mut r, m, 1e3).matrix();
        prop_assert!((a * b).op_norm() <= a.op_norm() * b.op_norm() + 1e-12 * a.op_norm() * b.op_norm());
    }

    #[test]
    fn positive_products_commute_in_norm(seed in 0u64..10_000, m in 1usize..=3) {
        let mut r = rng(seed);
        let a = PositiveMatrix::random(&mut r, m, 1e3);
        let b = PositiveMatrix::random(&mut r, m, 1e3);
        let ab = (*a.matrix() * *b.matrix()).op_norm();
        let ba = (*b.matrix() * *a.matrix()).op_norm();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab);
    }

    #[test]
    fn dual_is_an_involution(t in -0.9f64..0.9, b in -1.0f64..1.0, p in 1.2f64..4.0, x in 0.01f64..3.0) {
        // Both W and its dual stay locally integrable.
        let a = if t < 0.0 { t } else { t * (p - 1.0) };
        let w = MatrixWeight::power_log(1, 2, a, b).unwrap();
        let back = dual_weight(&dual_weight(&w, p).unwrap(), p / (p - 1.0)).unwrap();
        let (u, v) = (w.evaluate(&[x]).unwrap(), back.evaluate(&[x]).unwrap());
        prop_assert!(rel(v.matrix(), u.matrix()) <= 1e-10);
    }

    #[test]
    fn block_dual_is_an_involution(p in 1.7f64..4.0, x in -0.49f64..0.49) {
        prop_assume!(x.abs() > 1e-3 && (x - 0.25).abs() > 1e-3);
        let w = MatrixWeight::conjugated_block(
            1,
            ScalarProfile::power_log(vec![0.25], -0.4, 0.0),
            ScalarProfile::power_log(vec![0.0], 0.6, 0.0),
            1.0,
        ).unwrap();
        let back = dual_weight(&dual_weight(&w, p).unwrap(), p / (p - 1.0)).unwrap();
        let (u, v) = (w.evaluate(&[x]).unwrap(), back.evaluate(&[x]).unwrap());
        prop_assert!(rel(v.matrix(), u.matrix()) <= 1e-10);
    }

    #[test]
    fn expectation_is_a_contraction_and_self_adjoint(seed in 0u64..10_000, j in 0i32..5) {
        let mut r = rng(seed);
        let grid = Grid::new(Domain::unit(1), 7, 0.5).unwrap();
        let f = GridFunction::from_real(grid.clone(), false, (0..grid.len()).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let g = GridFunction::from_real(grid.clone(), false, (0..grid.len()).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let (ef, eg) = (expectation_field(&f, j).unwrap(), expectation_field(&g, j).unwrap());
        let l2 = |h: &GridFunction| h.real().iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(l2(&ef) <= l2(&f) * (1.0 + 1e-12));
        let dot = |a: &GridFunction, b: &GridFunction| a.real().iter().zip(b.real()).map(|(x, y)| x * y).sum::<f64>();
        prop_assert!((dot(&ef, &g) - dot(&f, &eg)).abs() <= 1e-12 * grid.len() as f64);
    }

    #[test]
    fn maximal_operator_is_subadditive(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let grid = Grid::new(Domain::unit(1), 7, 0.5).unwrap();
        let mk = |r: &mut ChaCha8Rng| GridFunction::from_real(grid.clone(), false, (0..grid.len()).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let (f, g) = (mk(&mut r), mk(&mut r));
        let sum = GridFunction::from_real(grid.clone(), false, f.real().iter().zip(g.real()).map(|(a, b)| a + b).collect()).unwrap();
        let (mf, mg, ms) = (hl_maximal(&f).real(), hl_maximal(&g).real(), hl_maximal(&sum).real());
        for i in 0..grid.len() {
            prop_assert!(ms[i] <= mf[i] + mg[i] + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn star_dominates_standard(a in -0.4f64..0.4, p in prop_oneof![Just(0.5), Just(0.8), Just(1.0)]) {
        let w = MatrixWeight::power_log(1, 1, a * p, 0.0).unwrap();
        let win = CubeWindow::new(Domain::centered(1), 1, 3).unwrap();
        let s = ap_constant(&w, p, &win, ApVariant::Standard, &quad()).unwrap().value;
        let t = ap_constant(&w, p, &win, ApVariant::Star, &quad()).unwrap().value;
        prop_assert!(s <= t * (1.0 + 1e-12), "{s} {t}");
    }

    #[test]
    fn ap_constant_grows_with_the_window(t in -0.9f64..0.9, p in prop_oneof![Just(0.5), Just(1.5), Just(2.0), Just(3.0)]) {
        // |x|^a is in A_p for -1 < a < p - 1 (any a > -1 when p <= 1).
        let a = if t < 0.0 || p <= 1.0 { t } else { t * (p - 1.0) };
        let w = MatrixWeight::power_log(1, 1, a, 0.0).unwrap();
        let small = CubeWindow::new(Domain::centered(1), 2, 3).unwrap();
        let large = CubeWindow::new(Domain::centered(1), 1, 4).unwrap();
        let s = ap_constant(&w, p, &small, ApVariant::Standard, &quad()).unwrap().value;
        let l = ap_constant(&w, p, &large, ApVariant::Standard, &quad()).unwrap().value;
        prop_assert!(s <= l);
    }

    #[test]
    fn reducing_is_scale_equivariant(c in 0.01f64..100.0, p in prop_oneof![Just(0.5), Just(1.0), Just(2.0), Just(3.0)], k in 0i64..4) {
        let w = MatrixWeight::conjugated_block(
            1,
            ScalarProfile::power_log(vec![0.5], -0.4, 0.0),
            ScalarProfile::power_log(vec![0.5], 0.6, 0.0),
            1.0,
        ).unwrap();
        let region = DyadicCube::new(2, vec![k]).to_cube().region();
        let a = reduce(&w, p, &region, Method::Auto, &quad()).unwrap();
        let b = reduce(&w.scaled(c).unwrap(), p, &region, Method::Auto, &quad()).unwrap();
        let expect = a.matrix.matrix().scale(c.powf(1.0 / p));
        prop_assert!(rel(b.matrix.matrix(), &expect) <= 1e-6, "{}", rel(b.matrix.matrix(), &expect));
    }

    #[test]
    fn exact_operator_has_a_tight_bracket(j in 0i32..4, k in 0i64..8, a in -0.8f64..0.8) {
        let w = MatrixWeight::power_log(1, 2, a, 0.0).unwrap();
        let region = DyadicCube::new(j, vec![k % (1 << j)]).to_cube().region();
        let r = reduce(&w, 2.0, &region, Method::ExactP2, &quad()).unwrap();
        prop_assert!(r.bracket.lo >= 1.0 - 1e-6 && r.bracket.hi <= 1.0 + 1e-6, "{:?}", r.bracket);
    }
}

#[test]
fn ball_averages_track_the_closed_form() {
    for a in [-0.5, 0.5, 1.5] {
        for b in [-1.0, 0.0, 1.0] {
            let mut ratios = Vec::new();
            for lx in -3..=3 {
                for lr in -3..=3 {
                    let (x0, r) = (10f64.powi(lx), 10f64.powi(lr));
                    ratios.push(analytic_ball_average(a, b, &[x0], r, &quad()).unwrap().ratio);
                }
            }
            let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ratios.iter().cloned().fold(0.0, f64::max);
            assert!(hi / lo < 10.0, "a = {a}, b = {b}: {lo}..{hi}");
        }
    }
}
