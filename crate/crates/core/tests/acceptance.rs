//! Acceptance criteria. Each check prints one PASS/FAIL line with its pinned
//! tolerance and the observed value, then asserts.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use thermoflow::entropy_density::{ergodic_approximation, glue_generic_family};
use thermoflow::ldp::{deviation_frequency, rate_function, RateMethod};
use thermoflow::orbits::weighted_orbit_measure;
use thermoflow::potential::DISTANCE_TAIL_HORIZON;
use thermoflow::stats::weak_star_distance;
use thermoflow::suspension::glue_depth;
use thermoflow::thermo::{equilibrium_state, free_energy, gibbs_ratio_stats, pressure};
use thermoflow::{
    ApproxTarget, CylinderPotential, EmpiricalMeasure, FlowSystem, GeodesicFlow, MarkovMeasure, OrbitSegment,
    Potential, PressureMethod, Sft, SuspPoint, SuspendedMeasure, WeakStarConfig,
};

use common::*;

// ---- 1 -------------------------------------------------------------------

#[test]
fn c01_specification_constants() {
    let start = Instant::now();
    let cases: Vec<(&str, Sft, usize)> = vec![
        ("full 2-shift", Sft::full(2).unwrap(), 0),
        ("golden mean", Sft::golden_mean(), 1),
        ("rose-2 edge shift", rose2().sft().clone(), 1),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, sft, expected) in &cases {
        let got = sft.min_gap_bound().unwrap();
        let n = sft.n_symbols();
        let oracle = (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .map(|(a, b)| brute_force_gap(sft, a, b, 3).expect("gap within length 3"))
            .max()
            .unwrap();
        ok &= got == *expected && got == oracle;
        detail.push(format!("{name}: {got} (oracle {oracle})"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 1.0;
    report("1", ok, &format!("min_gap_bound {}; runtime {secs:.3}s < 1s", detail.join(", ")));
    assert!(ok);
}

// ---- 2 -------------------------------------------------------------------

#[test]
fn c02_gluing_contract() {
    let start = Instant::now();
    let mut rng = rng(2);
    let mut violations = 0;
    let mut worst_slack = f64::INFINITY;
    for _ in 0..200 {
        let sft = random_irreducible_sft(&mut rng);
        let n = sft.n_symbols();
        let roof = thermoflow::Roof::new((0..n).map(|_| rng.random_range(0.5..2.0)).collect()).unwrap();
        let susp = thermoflow::Suspension::new(sft, roof).unwrap();
        let delta = [0.05, 0.1, 0.2, 0.4][rng.random_range(0..4)];
        let segs: Vec<OrbitSegment> = (0..rng.random_range(1..=4))
            .map(|_| OrbitSegment {
                start: random_point(&susp, 8, 20, &mut rng),
                duration: rng.random_range(0.0..8.0),
            })
            .collect();
        let g = susp.glue_segments(&segs, delta).unwrap();
        let tau = susp.base_transition(delta).unwrap() as f64;
        let rmax = susp.roof().max();
        let k = glue_depth(delta) as i64;
        let mut ok = susp.verify_gluing(&g, &segs, delta);
        for (j, &t) in g.transition_times.iter().enumerate() {
            let limit = (tau + 2.0) * rmax + segs[j + 1].start.height;
            worst_slack = worst_slack.min(limit - t);
            ok &= t <= limit + 1e-9 && t >= 0.0;
        }
        // The glued orbit carries each segment's symbols on its padded window.
        for (j, s) in segs.iter().enumerate() {
            let (_, crossings) = susp.advance(&s.start, s.duration);
            let glued = g.point.base.window(g.offsets[j] - k, g.offsets[j] + crossings + 2 + k);
            ok &= glued == s.start.base.window(-k, crossings + 2 + k);
        }
        if !ok {
            violations += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = violations == 0 && secs < 30.0;
    report(
        "2",
        pass,
        &format!(
            "200 random SFTs: {violations} violations of shadowing / tau_i <= (tau+2) max r + s_(j+1) (min slack {worst_slack:.3}); runtime {secs:.1}s < 30s"
        ),
    );
    assert!(pass);
}

// ---- 3 -------------------------------------------------------------------

/// Pairs `(gamma_1, gamma_2, s, t)`: half independent, half a time shift of a
/// geodesic agreeing with `gamma_1` near coordinate 0.
fn tool2_pairs(flow: &GeodesicFlow, n: usize, seed: u64) -> Vec<(SuspPoint, SuspPoint, f64, f64)> {
    let susp = flow.suspension();
    let mut rng = rng(seed);
    (0..n)
        .map(|i| {
            let g1 = random_point(susp, 12, 12, &mut rng);
            let g2 = if i % 2 == 0 {
                random_point(susp, 12, 12, &mut rng)
            } else {
                let near = agreeing_point(susp, &g1, -6, 7, 10, &mut rng);
                susp.flow(&near, rng.random_range(-0.4..0.4))
            };
            (g1, g2, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .collect()
}

fn tool2_violations(k: f64) -> (usize, f64) {
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for (gi, (_, flow)) in golden_graphs().iter().enumerate() {
        for (g1, g2, s, t) in tool2_pairs(flow, 500, 30 + gi as u64) {
            let d = flow.d_x(&g1, s, &g2, t);
            let v = flow.d_gx_at(&g1, s, &g2, t, DISTANCE_TAIL_HORIZON);
            let bound = k * (v.value + v.error);
            if v.value + v.error > 0.0 {
                worst = worst.max(d / (v.value + v.error));
            }
            if d > bound + 1e-12 {
                violations += 1;
            }
        }
    }
    (violations, worst)
}

#[test]
fn c03a_tool2_constant_half() {
    let (violations, worst) = tool2_violations(0.5);
    report(
        "3a",
        violations == 0,
        &format!("d_X(g1(s), g2(t)) <= 1/2 d_GX + err on 3x500 pairs: {violations} violations (worst d_X/d_GX = {worst:.3})"),
    );
    assert_eq!(violations, 0);
}

#[test]
fn c03b_tool2_constant_two() {
    let (violations, worst) = tool2_violations(2.0);
    report(
        "3b",
        violations == 0,
        &format!("d_X(g1(s), g2(t)) <= 2 d_GX + err on 3x500 pairs: {violations} violations (worst d_X/d_GX = {worst:.3})"),
    );
    assert_eq!(violations, 0);
}

#[test]
fn c03c_shadow_in_x() {
    let start = Instant::now();
    let mut violations = 0;
    let mut skipped = 0;
    let mut worst: f64 = 0.0;
    for (gi, (_, flow)) in golden_graphs().iter().enumerate() {
        let susp = flow.suspension();
        let rmin = susp.roof().min();
        let mut rng = rng(33 + gi as u64);
        for _ in 0..500 {
            let eps: f64 = [0.05, 0.1, 0.2][rng.random_range(0..3)];
            let tt = -eps.ln();
            let b = rng.random_range(0.0..2.0);
            let reach = ((b + tt + 3.0) / rmin).ceil() as i64 + 1;
            let back = ((tt + 3.0) / rmin).ceil() as usize + 1;
            let g1 = random_point(susp, back + 2, reach as usize + 2, &mut rng);
            let near = agreeing_point(susp, &g1, -(back as i64), reach, 8, &mut rng);
            let g2 = susp.flow(&near, rng.random_range(-0.45 * eps..0.45 * eps));
            let premise = (0..=((b + 2.0 * tt) / 0.05).ceil() as usize).all(|i| {
                let t = (-tt + 0.05 * i as f64).min(b + tt);
                flow.lift_distance(&g1, &g2, t, 10_000).unwrap() < eps / 2.0
            });
            if !premise {
                skipped += 1;
                continue;
            }
            for i in 0..=((b / 0.1).ceil() as usize) {
                let t = (0.1 * i as f64).min(b);
                let v = flow.d_gx_at(&g1, t, &g2, t, DISTANCE_TAIL_HORIZON);
                let r = (v.value + v.error) / eps;
                worst = worst.max(r);
                if r >= 1.0 {
                    violations += 1;
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = violations == 0 && secs < 60.0;
    report(
        "3c",
        pass,
        &format!(
            "shadow in X, T(eps) = -log eps, 3x500 pairs ({skipped} without premise): {violations} violations of d_GX + err < eps (worst ratio {worst:.3}); runtime {secs:.1}s < 60s"
        ),
    );
    assert!(pass);
}

// ---- 4 -------------------------------------------------------------------

#[test]
fn c04_time_change_shadowing() {
    let graphs = golden_graphs();
    let mut violations = 0;
    let mut premise_failures = 0;
    let mut worst_d: f64 = 0.0;
    let mut worst_shift: f64 = 0.0;
    for (ei, eps) in [0.05, 0.1].into_iter().enumerate() {
        let mut rng = rng(40 + ei as u64);
        for i in 0..200 {
            let flow = &graphs[i % graphs.len()].1;
            let susp = flow.suspension();
            let rmin = susp.roof().min();
            let t2: f64 = rng.random_range(2.0..8.0);
            let reach = ((t2 + 3.0) / rmin).ceil() as usize + 2;
            let g1 = random_point(susp, 6, reach + 4, &mut rng);
            let s = rng.random_range(-0.45 * eps..0.45 * eps);
            let near = agreeing_point(susp, &g1, -4, reach as i64, 6, &mut rng);
            let g2 = susp.flow(&near, s);
            // rho(t) = t + s + u(t), u piecewise linear with u(0) = -s.
            let knots = t2.ceil() as usize;
            let mut u = vec![-s];
            u.extend((0..knots).map(|_| rng.random_range(-0.9 * eps..0.9 * eps)));
            let rho = |t: f64| {
                let k = (t.floor() as usize).min(knots - 1);
                let f = t - k as f64;
                t + s + (1.0 - f) * u[k] + f * u[k + 1]
            };
            let t1 = rho(t2);
            let steps = (t2 / 0.01).ceil() as usize;
            let grid = |i: usize| (0.01 * i as f64).min(t2);
            if !(0..=steps).all(|i| flow.d_x(&g1, rho(grid(i)), &g2, grid(i)) < eps) {
                premise_failures += 1;
                continue;
            }
            let mut ok = true;
            for i in 0..=steps {
                let t = grid(i);
                let shift = (t - rho(t)).abs();
                worst_shift = worst_shift.max(shift / eps);
                ok &= shift < 2.0 * eps;
                if t <= t1 - 2.0 * eps {
                    let d = flow.d_x(&g1, t, &g2, t);
                    worst_d = worst_d.max(d / eps);
                    ok &= d < 3.0 * eps;
                }
            }
            if !ok {
                violations += 1;
            }
        }
    }
    let pass = violations == 0 && premise_failures == 0;
    report(
        "4",
        pass,
        &format!(
            "time changes at eps in {{0.05, 0.1}}, 2x200 pairs: {violations} violations (max d_X/eps {worst_d:.2} < 3, max |t - rho(t)|/eps {worst_shift:.2} < 2), {premise_failures} premise failures"
        ),
    );
    assert!(pass);
}

// ---- 5 -------------------------------------------------------------------

#[test]
fn c05_pressure_golden_values() {
    let start = Instant::now();
    let g = golden_ratio();
    let root = bisect(|s| (-s).exp() + (-3.0 * s).exp() - 1.0, 0.0, 2.0);
    let rose: FlowSystem = rose2().into();
    let cases: Vec<(&str, FlowSystem, f64)> = vec![
        ("full 2-shift", full2(), 2f64.ln()),
        ("rose-2", rose, 3f64.ln()),
        ("golden mean", golden(), g.ln()),
        ("golden mean, roofs 1,2", golden_roofs(), root),
    ];
    let mut pass = (root - 0.38224).abs() < 1e-5;
    let mut lines = Vec::new();
    for (name, sys, closed) in &cases {
        let n = sys.sft().n_symbols();
        let oracle = pressure_oracle(sys.sft(), sys.roof().values(), &vec![0.0; n]);
        pass &= (oracle - closed).abs() < 1e-10;
        let phi = Potential::zero();
        let spectral = pressure(sys, &phi, PressureMethod::Spectral, 0.0).unwrap();
        let horizon = 12.0 * sys.roof().max();
        let sep = pressure(sys, &phi, PressureMethod::Separated, horizon).unwrap();
        let gur = pressure(sys, &phi, PressureMethod::Gurevic, horizon).unwrap();
        let (e1, e2, e3) = (
            (spectral.value - oracle).abs(),
            (sep.value - oracle).abs(),
            (gur.value - oracle).abs(),
        );
        pass &= e1 < 1e-8 && e2 < 0.05 && e3 < 0.05;
        lines.push(format!("{name} {oracle:.6}: |dspec| {e1:.1e}, |dsep| {e2:.4}, |dgur| {e3:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "5",
        pass,
        &format!("pressure (spectral < 1e-8, separated/Gurevic < 0.05 at t = 12 max r): {}; {secs:.1}s", lines.join("; ")),
    );
    assert!(pass);
}

// ---- 6 -------------------------------------------------------------------

fn sample_potential(n: usize) -> Potential {
    let values: Vec<f64> = (0..n).map(|a| [0.3, -0.2, 0.1, 0.0][a % 4]).collect();
    Potential::Cylinder(CylinderPotential::per_symbol(&values))
}

#[test]
fn c06_equilibrium_and_gibbs() {
    let mut pass = true;
    let mut lines = Vec::new();
    for (i, (name, sys)) in golden_systems().into_iter().enumerate() {
        let phi = sample_potential(sys.sft().n_symbols());
        let (mu, p) = equilibrium_state(&sys, &phi).unwrap();
        let gap = (free_energy(&sys, &mu, &phi).unwrap() - p).abs();
        let rho = sys.expansivity_scale() / 2.0;
        let grid = [10.0, 20.0, 30.0];
        let eq = gibbs_ratio_stats(&sys, &mu, &phi, rho, &grid, 50_000, 60 + i as u64).unwrap();
        let eq_growth = eq.row(30.0).unwrap().band() / eq.row(10.0).unwrap().band();
        let mut prng = rng(70 + i as u64);
        let other = SuspendedMeasure::new(mu.base.perturbed(&mut prng, 1.0).unwrap(), sys.roof().clone()).unwrap();
        let ctl = gibbs_ratio_stats(&sys, &other, &phi, rho, &grid, 50_000, 80 + i as u64).unwrap();
        let ctl_growth = ctl.row(20.0).unwrap().band() / ctl.row(10.0).unwrap().band();
        pass &= gap < 1e-6 && eq_growth <= 1.2 && ctl_growth > 1.2;
        lines.push(format!(
            "{name}: |h + int phi - P| {gap:.1e}, band(30)/band(10) {eq_growth:.3}, control band(20)/band(10) {ctl_growth:.2}"
        ));
    }
    report(
        "6",
        pass,
        &format!("variational < 1e-6, equilibrium band growth <= 1.2, control > 1.2: {}", lines.join("; ")),
    );
    assert!(pass);
}

// ---- 7 -------------------------------------------------------------------

#[test]
fn c07_equidistribution() {
    let start = Instant::now();
    let sys: FlowSystem = rose2().into();
    let cfg = WeakStarConfig::for_roof(sys.roof());
    let potentials = [
        ("phi = 0", Potential::zero()),
        (
            "cylinder phi",
            Potential::Cylinder(CylinderPotential::per_symbol(&[0.2, -0.1, 0.0, 0.3])),
        ),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for (name, phi) in &potentials {
        let (mu, _) = equilibrium_state(&sys, phi).unwrap();
        let target = EmpiricalMeasure::from_suspended(&mu, &cfg);
        let d: Vec<f64> = [4.0, 8.0, 12.0]
            .iter()
            .map(|&t| {
                let w = weighted_orbit_measure(&sys, phi, t, &cfg).unwrap();
                weak_star_distance(&w.measure, &target, &cfg).unwrap()
            })
            .collect();
        pass &= d[2] < 0.05 && d[0] >= d[1] && d[1] >= d[2];
        lines.push(format!("{name}: D(4, 8, 12) = {:.4}, {:.4}, {:.4}", d[0], d[1], d[2]));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    report(
        "7",
        pass,
        &format!("rose-2 weighted orbit measures, D(12) < 0.05 and non-increasing: {}; runtime {secs:.1}s < 120s", lines.join("; ")),
    );
    assert!(pass);
}

// ---- 8 -------------------------------------------------------------------

#[test]
fn c08_entropy_density() {
    let sys = full2();
    let target = ApproxTarget::new(
        vec![
            (MarkovMeasure::bernoulli(&[0.9, 0.1]).unwrap(), 0.5),
            (MarkovMeasure::bernoulli(&[0.1, 0.9]).unwrap(), 0.5),
        ],
        0.05,
    )
    .unwrap();
    let h = h2(0.9);
    let a = ergodic_approximation(&sys, &target).unwrap();
    let fam = glue_generic_family(&sys, &target, 1000.0, 3, 8).unwrap();
    let pass = (h - 0.32508).abs() < 1e-5
        && a.report.distance < 0.05
        && (a.report.h_nu - 0.32508).abs() < 0.05
        && fam.certificate_holds
        && fam.log_em_rate > fam.bound;
    report(
        "8",
        pass,
        &format!(
            "D(mu, nu) {:.4} < 0.05, |h_nu - 0.32508| {:.1e} < 0.05; family t=1000 m=3: log#E_m/(tm) {:.4} > bound {:.4}, certified {}",
            a.report.distance,
            (a.report.h_nu - 0.32508).abs(),
            fam.log_em_rate,
            fam.bound,
            fam.certificate_holds
        ),
    );
    assert!(pass);
}

// ---- 9 -------------------------------------------------------------------

fn bernoulli_ldp_setup() -> (FlowSystem, Potential) {
    (full2(), Potential::Cylinder(CylinderPotential::per_symbol(&[0.0, 1.0])))
}

#[test]
fn c09a_rate_function() {
    let (sys, psi) = bernoulli_ldp_setup();
    let oracle = 2f64.ln() - h2(0.6);
    let leg = rate_function(&sys, &Potential::zero(), &psi, &[0.1], RateMethod::Legendre).unwrap();
    let dir = rate_function(&sys, &Potential::zero(), &psi, &[0.1], RateMethod::Direct).unwrap();
    let (ql, qd) = (leg.q(0.1).unwrap(), dir.q(0.1).unwrap());
    let pass = (oracle - 0.02014).abs() < 1e-5 && (ql - oracle).abs() < 1e-3 && (qd - oracle).abs() < 1e-3;
    report(
        "9a",
        pass,
        &format!("q(0.1) vs log 2 - H(0.6) = {oracle:.5} (tol 1e-3): Legendre {ql:.5}, direct {qd:.5}"),
    );
    assert!(pass);
}

#[test]
fn c09b_monte_carlo_rate() {
    let start = Instant::now();
    let (sys, psi) = bernoulli_ldp_setup();
    let table = rate_function(&sys, &Potential::zero(), &psi, &[0.08, 0.12], RateMethod::Legendre).unwrap();
    let (lo, hi) = (-table.q(0.12).unwrap(), -table.q(0.08).unwrap());
    let (m, _) = equilibrium_state(&sys, &Potential::zero()).unwrap();
    let est = deviation_frequency(&m, &psi, 0.1, 50.0, 100_000, 9).unwrap();
    let rate = est.log_rate.unwrap_or(f64::NEG_INFINITY);
    let secs = start.elapsed().as_secs_f64();
    let pass = lo <= rate && rate <= hi && secs < 300.0;
    report(
        "9b",
        pass,
        &format!(
            "Monte Carlo (1/t) log P at t=50, n=1e5: {rate:.5} in [-q(0.12), -q(0.08)] = [{lo:.5}, {hi:.5}]; runtime {secs:.1}s < 300s"
        ),
    );
    assert!(pass);
}

// ---- 10 ------------------------------------------------------------------

#[test]
fn c10_closing() {
    let mut pass = true;
    let mut lines = Vec::new();
    for (i, (name, sys)) in golden_systems().into_iter().enumerate() {
        let susp = sys.suspension();
        let mut rng = rng(100 + i as u64);
        let mut bounds = BTreeSet::new();
        let mut violations = 0;
        let mut worst_excess = f64::NEG_INFINITY;
        for j in 0..200 {
            let delta = if j % 2 == 0 { 0.1 } else { 0.25 };
            let seg = OrbitSegment {
                start: random_point(susp, 10, 40, &mut rng),
                duration: rng.random_range(0.0..25.0),
            };
            let c = susp.close_segment(&seg, delta).unwrap();
            bounds.insert((delta.to_bits(), c.bound.to_bits()));
            worst_excess = worst_excess.max(c.excess - c.bound);
            if c.excess > c.bound + 1e-9 || c.sup_distance >= delta {
                violations += 1;
            }
        }
        // One bound per scale, whatever the segment.
        pass &= violations == 0 && bounds.len() == 2;
        lines.push(format!("{name}: {violations} violations, max excess - R {worst_excess:.2}"));
    }
    report(
        "10",
        pass,
        &format!("closing, 200 segments per system, excess <= R(delta) and shadowing < delta: {}", lines.join("; ")),
    );
    assert!(pass);
}
