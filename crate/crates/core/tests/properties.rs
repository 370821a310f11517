use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use reclab_core::criteria::{liminf_criterion_halfline, lp_mass_curve, TOL_CRIT};
use reclab_core::recurrence::{
    direct_scan, gdelta_membership, lattice_times, nested_ball_construct, Direction, DyadicSampler, NestedBallConfig, Verdict,
};
use reclab_core::semigroups::{
    assemble_matrix, direct_sum, residual, rotate_operator, spectral_radius_estimate, time_discretize, CompositionFamily,
    DiagonalSemigroup, OperatorFamily, RationalRotation, Semiflow, SharedFamily,
};
use reclab_core::spaces::{
    check_weight_admissible, lattice_1d, BoxRegion, DomainSpec, NormMode, WeightFunction, WeightShape, WeightedGridSpace,
};

fn halfline(trunc: f64, n: usize, weight: WeightFunction) -> Arc<WeightedGridSpace> {
    Arc::new(WeightedGridSpace::new(DomainSpec::half_line(trunc).unwrap(), &[n], NormMode::Lp(1.0), weight).unwrap())
}

fn decaying(rate: f64) -> WeightFunction {
    WeightFunction::from_shape(WeightShape::Exponential { rate: -rate }, 1.0, rate)
}

fn liminf_holds(rho: &WeightFunction) -> Option<bool> {
    let domain = DomainSpec::half_line(200.0).unwrap();
    let cert = check_weight_admissible(rho, &domain, &lattice_1d(0.0, 20.0, 0.5), &lattice_1d(-4.0, 4.0, 0.5)).unwrap();
    if !cert.holds {
        return None;
    }
    Some(liminf_criterion_halfline(rho, &domain, Some(&cert), 1e3, 1.0, TOL_CRIT).unwrap().holds)
}

fn translation(space: Arc<WeightedGridSpace>) -> SharedFamily {
    Arc::new(CompositionFamily::translation(space).unwrap())
}

fn bump(space: &WeightedGridSpace, centre: f64, width: f64) -> reclab_core::spaces::GridFunction {
    space.from_real_fn(|x| (-((x[0] - centre) / width).powi(2)).exp())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn criterion_survives_smaller_weights(rate in -1.5f64..1.5, m in 1.0f64..3.0) {
        let rho = WeightFunction::from_shape(WeightShape::Exponential { rate }, m, rate.abs()).with_claim(m, rate.abs());
        let Some(base) = liminf_holds(&rho) else { return Ok(()) };
        if base {
            prop_assert_eq!(liminf_holds(&rho.scaled(0.5)), Some(true));
            prop_assert_eq!(liminf_holds(&rho.product(&decaying(1.0))), Some(true));
        }
    }

    #[test]
    fn mass_is_additive_over_adjacent_boxes(a in 0u32..20, w1 in 1u32..10, w2 in 1u32..10, rate in 0.0f64..2.0, t in 0.0f64..5.0) {
        let (a, b, c) = (a as f64 * 0.1, (a + w1) as f64 * 0.1, (a + w1 + w2) as f64 * 0.1);
        let rho = decaying(rate);
        let phi = Semiflow::dilation(1.0);
        let mass = |lo: f64, hi: f64| lp_mass_curve(&rho, &phi, &BoxRegion::interval(lo + 1.0, hi + 1.0).unwrap(), &[t], 0.01).unwrap().masses[0];
        let (left, right, whole) = (mass(a, b), mass(b, c), mass(a, c));
        prop_assert!((left + right - whole).abs() <= 1e-9 * whole.max(1e-300));
    }

    #[test]
    fn nested_ball_invariants(eps0 in 0.05f64..0.95, stages in 2usize..5) {
        let space = halfline(100.0, 5000, decaying(1.0));
        let fam = translation(space.clone());
        let x0 = space.indicator(&BoxRegion::interval(0.0, 1.0).unwrap());
        let c = nested_ball_construct(fam.as_ref(), &x0, eps0, stages, NestedBallConfig { step: 1.0, horizon: 1e3, direction: Direction::Forward }).unwrap();
        prop_assert_eq!(c.stages.len(), stages);
        prop_assert!(c.certified);
        prop_assert!(c.ball_distance < eps0);
        let mut prev_eps = eps0;
        let mut prev_t = 0.0;
        for s in &c.stages {
            prop_assert!(s.t > prev_t);
            prop_assert!(s.eps < prev_eps);
            prop_assert!(residual(fam.as_ref(), &c.y, s.t).unwrap() <= 2.0 * prev_eps);
            prev_eps = s.eps;
            prev_t = s.t;
        }
        prop_assert!(c.checks.iter().all(|k| k.holds));
    }

    #[test]
    fn gdelta_membership_of_constructed_vectors(eps0 in 0.1f64..0.9) {
        let space = halfline(100.0, 5000, decaying(1.0));
        let fam = translation(space.clone());
        let x0 = space.indicator(&BoxRegion::interval(0.0, 1.0).unwrap());
        let c = nested_ball_construct(fam.as_ref(), &x0, eps0, 4, NestedBallConfig { step: 1.0, horizon: 1e3, direction: Direction::Forward }).unwrap();
        let bound = 2.0 * c.stages[2].eps;
        let k_needed = (1..=50usize).rev().find(|k| 1.0 / *k as f64 > bound).unwrap_or(1);
        let horizon = c.stages.last().unwrap().t + 1.0;
        let rep = gdelta_membership(fam.as_ref(), &c.y, k_needed, DyadicSampler::new(horizon, 0).unwrap()).unwrap();
        prop_assert!(rep.member_up_to >= k_needed);
    }

    #[test]
    fn direct_sum_residual_is_the_larger_component(re in -2.0f64..2.0, im in -2.0f64..2.0, centre in 0.5f64..5.0, k in 1u32..40) {
        let space = halfline(50.0, 2500, decaying(1.0));
        let fam = translation(space.clone());
        let f = space.indicator(&BoxRegion::interval(0.0, 1.0).unwrap());
        let g = bump(&space, centre, 0.5).scaled(Complex64::new(re, im));
        let sum = direct_sum(fam.clone(), fam.clone());
        let fg = sum.pair(&f, &g).unwrap();
        let t = k as f64;
        let (rf, rg) = (residual(fam.as_ref(), &f, t).unwrap(), residual(fam.as_ref(), &g, t).unwrap());
        prop_assert_eq!(residual(&sum, &fg, t).unwrap(), rf.max(rg));
        let scan = direct_scan(&sum, &fg, &lattice_times(1.0, 40.0), 0.5).unwrap();
        for &w in &scan.report.witness_times {
            prop_assert!(residual(fam.as_ref(), &f, w).unwrap() < 0.5);
            prop_assert!(residual(fam.as_ref(), &g, w).unwrap() < 0.5);
        }
    }

    #[test]
    fn discretized_and_rotated_residuals_match(centre in 0.5f64..8.0, width in 0.2f64..2.0, n in 1u64..40, q in 1u64..6, p in 0i64..6) {
        let space = halfline(50.0, 2500, decaying(0.5));
        let fam = translation(space.clone());
        let f = bump(&space, centre, width);
        let op = time_discretize(fam.clone(), 1.0).unwrap();
        let t = n as f64;
        prop_assert!((residual(&op, &f, t).unwrap() - residual(fam.as_ref(), &f, t).unwrap()).abs() <= 1e-12);
        let rot = rotate_operator(op.clone(), RationalRotation::new(p, q).unwrap());
        let m = (q * n) as f64;
        prop_assert!((residual(&rot, &f, m).unwrap() - residual(&op, &f, m).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn radius_below_one_has_no_witnesses(rate in 0.2f64..2.0, centre in 0.5f64..4.0) {
        let w = WeightFunction::from_shape(WeightShape::Exponential { rate }, 1.0, rate);
        let space = halfline(12.8, 256, w);
        let fam = translation(space.clone());
        let r = spectral_radius_estimate(&assemble_matrix(fam.as_ref(), 1.0, 4096).unwrap(), 2000, 1e-9).unwrap().r;
        prop_assert!(r < 1.0);
        let scan = direct_scan(fam.as_ref(), &bump(&space, centre, 0.5), &lattice_times(1.0, 100.0), 0.1).unwrap();
        prop_assert_ne!(scan.report.verdict, Verdict::WitnessFound);
    }

    #[test]
    fn periodic_diagonal_has_radius_one_and_returns(cycles in proptest::collection::vec(1u32..6, 1..5)) {
        let d = DiagonalSemigroup::from_cycles(cycles.iter().map(|&c| 1.0 / c as f64).collect(), NormMode::Lp(2.0)).unwrap();
        let r = spectral_radius_estimate(&assemble_matrix(&d, 1.0, 4096).unwrap(), 2000, 1e-9).unwrap().r;
        prop_assert!((r - 1.0).abs() < 1e-9);
        let x = d.state_space().function(vec![Complex64::new(1.0, 0.0); cycles.len()]).unwrap();
        let scan = direct_scan(&d, &x, &lattice_times(1.0, 1000.0), 1e-9).unwrap();
        prop_assert_eq!(scan.report.verdict, Verdict::WitnessFound);
    }
}
