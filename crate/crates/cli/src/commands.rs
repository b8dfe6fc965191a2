use std::path::PathBuf;

use anyhow::{bail, Result};
use serde_json::json;
use thermoflow::entropy_density::{ergodic_approximation, glue_generic_family, window_check};
use thermoflow::io;
use thermoflow::ldp::{deviation_frequency, rate_function, RateMethod, RateTable};
use thermoflow::orbits::weighted_orbit_measure;
use thermoflow::stats::weak_star_distance;
use thermoflow::thermo::{entropy_and_mean, equilibrium_state, gibbs_ratio_stats, pressure};
use thermoflow::{EmpiricalMeasure, FlowSystem, GeodesicFlow, Potential, PressureMethod, Suspension, WeakStarConfig};

use crate::report::{pm, Inputs, Report};
use crate::{Command, MethodArg, Model, RateArg};

fn load_system(inputs: &mut Inputs, model: &Model) -> Result<FlowSystem> {
    if let Some(path) = &model.source.graph {
        let graph = io::parse_graph(&inputs.read(path)?)?;
        return Ok(GeodesicFlow::new(graph)?.into());
    }
    let Some(path) = &model.source.sft else {
        bail!("one of --sft or --graph is required");
    };
    let sft = io::parse_sft(&inputs.read(path)?)?;
    let susp = match &model.roof {
        Some(r) => Suspension::new(sft, io::parse_roof(&inputs.read(r)?)?)?,
        None => Suspension::unit(sft),
    };
    Ok(susp.into())
}

fn load_potential(inputs: &mut Inputs, path: &Option<PathBuf>, system: &FlowSystem) -> Result<Potential> {
    match path {
        Some(p) => Ok(io::parse_potential(&inputs.read(p)?, system)?),
        None => Ok(Potential::zero()),
    }
}

pub fn run(command: &Command) -> Result<Report> {
    let mut inputs = Inputs::new(command)?;
    let name = command.name();
    match command {
        Command::SpecTau { model } => {
            let sys = load_system(&mut inputs, model)?;
            spec_tau(Report::new(name, &inputs), &sys)
        }
        Command::Glue { model, segments, delta } => {
            let sys = load_system(&mut inputs, model)?;
            let segs = io::parse_segments(&inputs.read(segments)?, sys.suspension())?;
            glue(Report::new(name, &inputs), &sys, &segs, *delta)
        }
        Command::Pressure {
            model,
            potential,
            method,
            max_period,
        } => {
            let sys = load_system(&mut inputs, model)?;
            let phi = load_potential(&mut inputs, potential, &sys)?;
            pressure_cmd(Report::new(name, &inputs), &sys, &phi, *method, *max_period)
        }
        Command::Equilibrium { model, potential } => {
            let sys = load_system(&mut inputs, model)?;
            let phi = load_potential(&mut inputs, potential, &sys)?;
            equilibrium(Report::new(name, &inputs), &sys, &phi)
        }
        Command::Gibbs {
            model,
            potential,
            rho,
            t_grid,
            samples,
            seed,
        } => {
            let sys = load_system(&mut inputs, model)?;
            let phi = load_potential(&mut inputs, potential, &sys)?;
            let rho = rho.unwrap_or(sys.expansivity_scale() / 2.0);
            gibbs(Report::new(name, &inputs), &sys, &phi, rho, t_grid, *samples, *seed)
        }
        Command::Equidistribute { model, potential, t_grid } => {
            let sys = load_system(&mut inputs, model)?;
            let phi = load_potential(&mut inputs, potential, &sys)?;
            equidistribute(Report::new(name, &inputs), &sys, &phi, t_grid)
        }
        Command::Ldp {
            model,
            potential,
            psi,
            epsilon,
            method,
            t,
            samples,
            seed,
        } => {
            let sys = load_system(&mut inputs, model)?;
            let phi = load_potential(&mut inputs, potential, &sys)?;
            let psi = io::parse_potential(&inputs.read(psi)?, &sys)?;
            let mut report = Report::new(name, &inputs);
            ldp(&mut report, &sys, &phi, &psi, epsilon, *method, *t, *samples, *seed)?;
            Ok(report)
        }
        Command::EntropyDense {
            model,
            target,
            eta,
            t,
            m,
            seed,
        } => {
            let sys = load_system(&mut inputs, model)?;
            let target = io::parse_target(&inputs.read(target)?, &sys, *eta)?;
            let mut report = Report::new(name, &inputs);
            let approx = ergodic_approximation(&sys, &target)?;
            let windows = window_check(&sys, &target, &approx, *seed)?;
            let r = &approx.report;
            report.line(format!("eta = {eta}"));
            report.line(format!("D(mu, nu) = {:.6} (< eta: {})", r.distance, r.distance < *eta));
            report.line(format!("h_mu = {:.6}, h_nu = {:.6}, |dh| = {:.2e}", r.h_mu, r.h_nu, (r.h_nu - r.h_mu).abs()));
            report.line(format!("block chain: cycle {} symbols, {} states", r.cycle_length, r.states));
            report.line(format!(
                "windows: {} samples of length {:.1}, max D = {:.4} (<= 6 eta: {})",
                windows.samples, windows.window, windows.max_distance, windows.passed
            ));
            let family = match t {
                Some(t) => {
                    let f = glue_generic_family(&sys, &target, *t, *m, *seed)?;
                    report.line(format!(
                        "family t = {} m = {}: log#E_m/(tm) = {:.6} > bound {:.6}: {}",
                        f.t, f.m, f.log_em_rate, f.bound, f.certificate_holds
                    ));
                    report.line(format!(
                        "block checks: {}/{} within 5 eta; separation: {} of {} sampled pairs violate",
                        f.block_checks.iter().filter(|b| b.passed).count(),
                        f.block_checks.len(),
                        f.separation_violations,
                        f.separation_pairs
                    ));
                    Some(f)
                }
                None => None,
            };
            report.result(&json!({
                "eta": eta,
                "D": r.distance,
                "h_mu": r.h_mu,
                "h_nu": r.h_nu,
                "approximation": r,
                "window_check": windows,
                "count_certificate": family.as_ref().map(|f| json!({
                    "log_Em_rate": f.log_em_rate,
                    "bound": f.bound,
                    "holds": f.certificate_holds,
                })),
                "block_checks": family.as_ref().map(|f| &f.block_checks),
                "family": family,
            }))?;
            Ok(report)
        }
    }
}

fn spec_tau(mut report: Report, sys: &FlowSystem) -> Result<Report> {
    let sft = sys.sft();
    let tau = sft.min_gap_bound()?;
    let witnesses = sft.gap_witnesses()?;
    report.line(format!("tau = {tau}"));
    report.line("from\tto\tgap");
    let mut rows = Vec::new();
    for (a, row) in witnesses.iter().enumerate() {
        for (b, gap) in row.iter().enumerate() {
            let gap = sft.format_word(gap);
            report.line(format!("{}\t{}\t{}", sft.name(a), sft.name(b), if gap.is_empty() { "-" } else { &gap }));
            rows.push(json!({"from": sft.name(a), "to": sft.name(b), "gap": gap}));
        }
    }
    report.result(&json!({"tau": tau, "symbols": sft.n_symbols(), "witnesses": rows}))?;
    Ok(report)
}

fn glue(mut report: Report, sys: &FlowSystem, segs: &[thermoflow::OrbitSegment], delta: f64) -> Result<Report> {
    let susp = sys.suspension();
    let sft = susp.sft();
    let g = susp.glue_segments(segs, delta)?;
    let verified = susp.verify_gluing(&g, segs, delta);
    report.line(format!("segments = {}, delta = {delta}, padding K = {}", segs.len(), g.padding));
    for (j, t) in g.transition_times.iter().enumerate() {
        report.line(format!(
            "transition {j}: gap {:?}, time {t:.6} <= {:.6}",
            sft.format_word(&g.gaps[j]),
            g.max_transition
        ));
    }
    report.line(format!("shadowing verified: {verified}"));
    report.result(&json!({
        "delta": delta,
        "verified": verified,
        "max_transition": g.max_transition,
        "transition_times": g.transition_times,
        "block_starts": g.block_starts,
        "offsets": g.offsets,
        "gaps": g.gaps.iter().map(|w| sft.format_word(w)).collect::<Vec<_>>(),
        "point": g.point,
    }))?;
    if !verified {
        bail!("glued orbit does not shadow the segments at scale {delta}");
    }
    Ok(report)
}

fn pressure_cmd(
    mut report: Report,
    sys: &FlowSystem,
    phi: &Potential,
    method: MethodArg,
    max_period: Option<f64>,
) -> Result<Report> {
    let methods: Vec<PressureMethod> = match method {
        MethodArg::Spectral => vec![PressureMethod::Spectral],
        MethodArg::Separated => vec![PressureMethod::Separated],
        MethodArg::Gurevic => vec![PressureMethod::Gurevic],
        MethodArg::All => PressureMethod::ALL.to_vec(),
    };
    let horizon = max_period.unwrap_or(12.0 * sys.roof().max());
    let mut results = Vec::new();
    for m in methods {
        log::info!("pressure by {m}");
        let r = pressure(sys, phi, m, horizon)?;
        report.line(format!("P = {} ({m})", pm(r.value, r.error)));
        results.push(r);
    }
    let spread = results.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max)
        - results.iter().map(|r| r.value).fold(f64::INFINITY, f64::min);
    if results.len() > 1 {
        report.line(format!("agreement: max |dP| = {spread:.2e}"));
    }
    report.csv(
        "pressure",
        &["method", "value", "error"],
        results
            .iter()
            .map(|r| vec![r.method.to_string(), format!("{:.12}", r.value), format!("{:.3e}", r.error)]),
    );
    report.result(&json!({"horizon": horizon, "methods": results, "spread": spread}))?;
    Ok(report)
}

fn equilibrium(mut report: Report, sys: &FlowSystem, phi: &Potential) -> Result<Report> {
    let (mu, p) = equilibrium_state(sys, phi)?;
    let (h, mean) = entropy_and_mean(sys, &mu, phi)?;
    let residual = (h + mean - p).abs();
    report.line(format!("P = {p:.9}"));
    report.line(format!("h = {h:.9}, int phi = {mean:.9}"));
    report.line(format!("|h + int phi - P| = {residual:.2e} (<= 1e-6: {})", residual <= 1e-6));
    let kernel = mu.base.symbol_kernel();
    if let Some(k) = &kernel {
        let sft = sys.sft();
        report.line("kernel:");
        for (a, row) in k.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.6}")).collect();
            report.line(format!("  {}\t{}", sft.name(a), cells.join("\t")));
        }
    }
    report.result(&json!({
        "pressure": p,
        "entropy": h,
        "integral": mean,
        "residual": residual,
        "mean_roof": mu.mean_roof,
        "symbol_marginal": mu.base.symbol_marginal(),
        "kernel": kernel,
    }))?;
    Ok(report)
}

fn gibbs(
    mut report: Report,
    sys: &FlowSystem,
    phi: &Potential,
    rho: f64,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Report> {
    let (mu, _) = equilibrium_state(sys, phi)?;
    let stats = gibbs_ratio_stats(sys, &mu, phi, rho, t_grid, samples, seed)?;
    report.line(format!("rho = {rho}, depth K = {}, P = {:.9}", stats.depth, stats.pressure));
    report.line("t\tmin ratio\tmax ratio\tband");
    for r in &stats.rows {
        report.line(format!("{}\t{:.6}\t{:.6}\t{:.4}", r.t, r.min_ratio, r.max_ratio, r.band()));
    }
    report.csv(
        "gibbs",
        &["t", "min_ratio", "max_ratio", "band"],
        stats.rows.iter().map(|r| {
            vec![r.t.to_string(), format!("{:.9}", r.min_ratio), format!("{:.9}", r.max_ratio), format!("{:.9}", r.band())]
        }),
    );
    report.result(&json!({"samples": samples, "seed": seed, "stats": stats}))?;
    Ok(report)
}

fn equidistribute(mut report: Report, sys: &FlowSystem, phi: &Potential, t_grid: &[f64]) -> Result<Report> {
    let cfg = WeakStarConfig::for_roof(sys.roof());
    let (mu, _) = equilibrium_state(sys, phi)?;
    let target = EmpiricalMeasure::from_suspended(&mu, &cfg);
    let mut rows = Vec::new();
    report.line("t\torbits\tlog C(t)\tD");
    for &t in t_grid {
        let w = weighted_orbit_measure(sys, phi, t, &cfg)?;
        let d = weak_star_distance(&w.measure, &target, &cfg)?;
        report.line(format!("{t}\t{}\t{:.6}\t{d:.6}", w.orbits, w.log_c));
        rows.push(json!({"t": t, "orbits": w.orbits, "log_c": w.log_c, "D": d}));
    }
    report.csv(
        "equidistribute",
        &["t", "D", "orbits", "log_c"],
        rows.iter().map(|r| {
            vec![
                r["t"].to_string(),
                format!("{:.9}", r["D"].as_f64().unwrap_or(f64::NAN)),
                r["orbits"].to_string(),
                format!("{:.9}", r["log_c"].as_f64().unwrap_or(f64::NAN)),
            ]
        }),
    );
    report.result(&json!({"depth": cfg.depth, "bin_width": cfg.bin_width, "rows": rows}))?;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn ldp(
    report: &mut Report,
    sys: &FlowSystem,
    phi: &Potential,
    psi: &Potential,
    eps: &[f64],
    method: RateArg,
    t: f64,
    samples: usize,
    seed: u64,
) -> Result<()> {
    let methods = match method {
        RateArg::Legendre => vec![RateMethod::Legendre],
        RateArg::Direct => vec![RateMethod::Direct],
        RateArg::Both => vec![RateMethod::Legendre, RateMethod::Direct],
    };
    let tables: Vec<RateTable> = methods
        .iter()
        .map(|&m| rate_function(sys, phi, psi, eps, m))
        .collect::<thermoflow::Result<_>>()?;
    let (m, _) = equilibrium_state(sys, phi)?;
    let mc = if samples > 0 {
        eps.iter()
            .map(|&e| deviation_frequency(&m, psi, e, t, samples, seed))
            .collect::<thermoflow::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let first = &tables[0];
    report.line(format!(
        "mean = {:.9}, range over invariant measures [{:.6}, {:.6}]",
        first.mean, first.mean_range.0, first.mean_range.1
    ));
    if let Some(step) = tables.iter().find_map(|t| t.grid_step) {
        report.line(format!("direct method simplex step {step}"));
    }
    let mut header = vec!["eps".to_string()];
    header.extend(tables.iter().map(|t| format!("q_{:?}", t.method).to_lowercase()));
    if !mc.is_empty() {
        header.extend(["mc_log_rate".to_string(), "mc_ci_lo".to_string(), "mc_ci_hi".to_string()]);
    }
    report.line(header.join("\t"));
    let mut rows = Vec::new();
    for (i, &e) in eps.iter().enumerate() {
        let mut row = vec![e.to_string()];
        for table in &tables {
            row.push(table.q(e).map_or("nan".into(), |q| format!("{q:.6}")));
        }
        if let Some(est) = mc.get(i) {
            let lr = |x: Option<f64>| x.map_or("-inf".into(), |v| format!("{v:.6}"));
            row.push(lr(est.log_rate));
            row.push(lr(est.ci_lo));
            row.push(format!("{:.6}", est.ci_hi));
        }
        report.line(row.join("\t"));
        rows.push(row);
    }
    report.csv("ldp", &header.iter().map(String::as_str).collect::<Vec<_>>(), rows);
    report.result(&json!({"tables": tables, "monte_carlo": mc, "t": t, "samples": samples, "seed": seed}))?;
    Ok(())
}
