//! Closed-orbit measures and their `exp(Phi)`-weighted averages.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potential::{FlowSystem, Potential};
use crate::sft::Symbol;
use crate::stats::{Accumulator, EmpiricalMeasure, WeakStarConfig};
use crate::thermo::{closed_orbits, working_cylinder};

/// The normalized length measure around the closed orbit of a cyclic word.
pub fn orbit_measure(system: &FlowSystem, word: &[Symbol], cfg: &WeakStarConfig) -> Result<EmpiricalMeasure> {
    let susp = system.suspension();
    let x = susp.periodic_point(word)?;
    let period = susp.roof().word_time(word);
    let mut acc = Accumulator::new(cfg.depth, cfg.bin_width);
    acc.add_orbit(susp.roof(), &x, period, 1.0 / period);
    Ok(acc.finish(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOrbitMeasure {
    pub t: f64,
    pub measure: EmpiricalMeasure,
    /// `log C(t)`, `C(t) = sum over Per(t) of exp(Phi(gamma))`.
    pub log_c: f64,
    pub orbits: usize,
}

const CHUNK: usize = 512;

/// `C(t)^-1 sum_{gamma in Per(t)} exp(Phi(gamma)) mu_gamma`, with `Per(t)`
/// the primitive closed orbits of period at most `t`.
pub fn weighted_orbit_measure(
    system: &FlowSystem,
    phi: &Potential,
    t: f64,
    cfg: &WeakStarConfig,
) -> Result<WeightedOrbitMeasure> {
    phi.validate(system)?;
    let c = working_cylinder(system, phi)?;
    let orbits = closed_orbits(system, &c, t);
    if orbits.is_empty() {
        return Err(Error::NoClosedOrbits(t));
    }
    let shift = orbits.iter().map(|o| o.2).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = orbits.iter().map(|o| (o.2 - shift).exp()).sum();
    let susp = system.suspension();
    // Fixed chunks reduced in order keep the sums independent of the thread count.
    let parts: Vec<Result<Accumulator>> = orbits
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = Accumulator::new(cfg.depth, cfg.bin_width);
            for (w, len, integral) in chunk {
                let x = susp.periodic_point(w)?;
                acc.add_orbit(susp.roof(), &x, *len, (integral - shift).exp() / (total * len));
            }
            Ok(acc)
        })
        .collect();
    let mut acc = Accumulator::new(cfg.depth, cfg.bin_width);
    for p in parts {
        acc.merge(p?);
    }
    Ok(WeightedOrbitMeasure {
        t,
        measure: acc.finish(1.0),
        log_c: total.ln() + shift,
        orbits: orbits.len(),
    })
}
