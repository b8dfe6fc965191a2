mod common;

use thermoflow::entropy_density::{
    ergodic_approximation, glue_countable, glue_generic_family, separated_generic_set, window_check,
};
use thermoflow::orbits::orbit_measure;
use thermoflow::stats::{empirical_measure, weak_star_distance};
use thermoflow::thermo::equilibrium_state;
use thermoflow::{ApproxTarget, EmpiricalMeasure, Error, MarkovMeasure, OrbitSegment, Potential, WeakStarConfig};

use common::*;

fn split_target(eta: f64) -> ApproxTarget {
    ApproxTarget::new(
        vec![
            (MarkovMeasure::bernoulli(&[0.9, 0.1]).unwrap(), 0.5),
            (MarkovMeasure::bernoulli(&[0.1, 0.9]).unwrap(), 0.5),
        ],
        eta,
    )
    .unwrap()
}

#[test]
fn empirical_measure_of_period_is_orbit_measure() {
    let sys = golden();
    let cfg = WeakStarConfig::for_roof(sys.roof());
    let x = sys.suspension().periodic_point(&[0, 0, 1]).unwrap();
    let e = empirical_measure(sys.roof(), &x, 3.0, &cfg).unwrap();
    let o = orbit_measure(&sys, &[0, 0, 1], &cfg).unwrap();
    assert!(weak_star_distance(&e, &o, &cfg).unwrap() < 1e-12);
}

#[test]
fn empirical_measure_splits_at_midpoint() {
    let sys = golden_roofs();
    let susp = sys.suspension();
    let cfg = WeakStarConfig::for_roof(sys.roof());
    let mut rng = rng(5);
    for _ in 0..20 {
        let x = random_point(susp, 4, 40, &mut rng);
        let whole = empirical_measure(sys.roof(), &x, 14.0, &cfg).unwrap();
        let a = empirical_measure(sys.roof(), &x, 7.0, &cfg).unwrap();
        let b = empirical_measure(sys.roof(), &susp.flow(&x, 7.0), 7.0, &cfg).unwrap();
        let mix = EmpiricalMeasure::mixture(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert!(weak_star_distance(&whole, &mix, &cfg).unwrap() < 1e-12);
    }
}

#[test]
fn bernoulli_generic_point_frequencies() {
    let sys = full2();
    let (mu, _) = equilibrium_state(&sys, &Potential::zero()).unwrap();
    let x = mu.sampler().sample_point(&mut rng(6), sys.sft(), 2, 10_050);
    let cfg = WeakStarConfig::for_roof(sys.roof());
    let e = empirical_measure(sys.roof(), &x, 10_000.0, &cfg).unwrap();
    assert!((e.frequency(&[0]) - 0.5).abs() < 0.02);
}

#[test]
fn golden_parry_generic_set() {
    let sys = golden();
    let (parry, _) = equilibrium_state(&sys, &Potential::zero()).unwrap();
    let g = separated_generic_set(&sys, &parry.base, 0.4, 60.0, 0.2, 3).unwrap();
    assert!(g.certified, "{g:?}");
    assert!(g.log_size >= 24.0);
    assert_eq!(g.separation_violations, 0);
}

#[test]
fn zero_entropy_target_allows_a_singleton() {
    let sys = full2();
    let mu = MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap();
    let g = separated_generic_set(&sys, &mu, 0.0, 40.0, 0.4, 3).unwrap();
    assert!(g.certified);
    assert!(g.log_size >= 0.0);
}

#[test]
fn short_family_is_a_regime_violation() {
    let e = glue_generic_family(&full2(), &split_target(0.1), 200.0, 3, 1).unwrap_err();
    assert!(matches!(e, Error::RegimeViolation(_)), "{e}");
}

#[test]
fn single_block_family() {
    let f = glue_generic_family(&full2(), &split_target(0.05), 1000.0, 1, 2).unwrap();
    assert_eq!(f.m, 1);
    let sum: f64 = f.sets.iter().map(|s| s.log_size).sum();
    assert!((f.log_em - (sum - f.log_c)).abs() < 1e-9);
    assert!(f.certificate_holds);
}

#[test]
fn single_component_family_is_the_generic_set() {
    let target = ApproxTarget::new(vec![(MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap(), 1.0)], 0.4).unwrap();
    let f = glue_generic_family(&full2(), &target, 40.0, 3, 4).unwrap();
    assert_eq!(f.sets.len(), 1);
    assert_eq!(f.log_c, 0.0);
    assert_eq!(f.m, 1);
    assert!((f.log_em - f.sets[0].log_size).abs() < 1e-12);
}

#[test]
fn split_approximation_windows() {
    let sys = full2();
    let target = split_target(0.05);
    let a = ergodic_approximation(&sys, &target).unwrap();
    let w = window_check(&sys, &target, &a, 8).unwrap();
    assert!(w.passed, "{w:?}");
    assert!(w.max_distance <= 6.0 * 0.05);
}

#[test]
fn parry_and_bernoulli_mixture() {
    let sys = full2();
    let g = golden_ratio();
    let parry = MarkovMeasure::from_symbol_kernel(sys.sft(), &[vec![1.0 / g, 1.0 / (g * g)], vec![1.0, 0.0]]).unwrap();
    let target = ApproxTarget::new(
        vec![(parry, 0.3), (MarkovMeasure::bernoulli(&[0.5, 0.5]).unwrap(), 0.7)],
        0.05,
    )
    .unwrap();
    let a = ergodic_approximation(&sys, &target).unwrap();
    assert!(a.report.distance < 0.05);
    let h = 0.3 * g.ln() + 0.7 * 2f64.ln();
    assert!((a.report.h_mu - h).abs() < 1e-9);
    assert!((a.report.h_nu - h).abs() < 0.05);
}

fn alternating(susp: &thermoflow::Suspension) -> impl Iterator<Item = OrbitSegment> + Clone + '_ {
    (0..).map(move |j| OrbitSegment {
        start: susp.periodic_point(&[j % 2]).unwrap(),
        duration: 6.0,
    })
}

#[test]
fn countable_gluing_matches_finite_gluing() {
    let sys = full2();
    let susp = sys.suspension();
    let c = glue_countable(susp, alternating(susp), 0.2, 5).unwrap();
    let segs: Vec<OrbitSegment> = alternating(susp).take(5).collect();
    let f = susp.glue_segments(&segs, 0.2).unwrap();
    assert_eq!(c.emitted(-10), f.point.base.window(-10, c.emitted_end));
    assert!(susp.verify_gluing(&c.gluing, &segs, 0.2));
}

#[test]
fn countable_gluing_is_prefix_monotone() {
    let sys = golden();
    let susp = sys.suspension();
    let mut rng = rng(12);
    let segs: Vec<OrbitSegment> = (0..8)
        .map(|_| OrbitSegment {
            start: random_point(susp, 6, 20, &mut rng),
            duration: 5.0,
        })
        .collect();
    let mut prev: Option<Vec<usize>> = None;
    for depth in 1..=8 {
        let c = glue_countable(susp, segs.iter().cloned(), 0.1, depth).unwrap();
        let out = c.emitted(-10);
        if let Some(p) = &prev {
            assert_eq!(&out[..p.len()], &p[..], "depth {depth}");
        }
        prev = Some(out);
    }
}
