//! JSON model files.
//!
//! * SFT: `{ "symbols": [names], "transitions": [[0|1, ...], ...] }`
//! * roof: `{ "roof": [r_0, ...] }`
//! * graph: `{ "vertices": n, "edges": [{"from", "to", "length"}, ...] }`
//! * potential: `{ "type": "cylinder", "width", "offset"?, "table": {word: value}, "default"? }`,
//!   `{ "type": "distance", "reference": <point>, "scale" }` or `{ "type": "zero" }`
//! * point: `{ "word", "height"? }` for the periodic orbit through a cyclic
//!   word, or the serialized form `{ "left_tail", "core", "right_tail", "origin", "height" }`
//! * segments: `[{ "point": <point>, "duration" }, ...]`
//! * target: `{ "components": [{ "weight", "kernel": [[...]] }, ...] }`
//!
//! Words are written with symbol names (see [`Sft::parse_word`]).

use std::collections::HashMap;

use serde::Deserialize;
use serde_json::Value;

use crate::cat_graph::MetricGraph;
use crate::entropy_density::ApproxTarget;
use crate::error::{Error, Result};
use crate::markov::MarkovMeasure;
use crate::potential::{CylinderPotential, DistancePotential, FlowSystem, Potential};
use crate::sft::Sft;
use crate::suspension::{OrbitSegment, Roof, SuspPoint, Suspension};

fn json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Parse(format!("missing field {key:?}")))
}

fn number(v: &Value, key: &str) -> Result<f64> {
    field(v, key)?
        .as_f64()
        .ok_or_else(|| Error::Parse(format!("field {key:?} is not a number")))
}

#[derive(Deserialize)]
struct SftFile {
    symbols: Option<Vec<String>>,
    transitions: Vec<Vec<u8>>,
}

pub fn parse_sft(text: &str) -> Result<Sft> {
    let f: SftFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if f.transitions.iter().flatten().any(|&b| b > 1) {
        return Err(Error::Parse("transition entries must be 0 or 1".into()));
    }
    let rows = f.transitions.iter().map(|r| r.iter().map(|&b| b == 1).collect()).collect();
    match f.symbols {
        Some(names) => Sft::with_names(names, rows),
        None => Sft::new(rows),
    }
}

pub fn parse_roof(text: &str) -> Result<Roof> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn parse_graph(text: &str) -> Result<MetricGraph> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn point_from_value(v: &Value, susp: &Suspension) -> Result<SuspPoint> {
    if let Some(word) = v.get("word") {
        let word = word
            .as_str()
            .ok_or_else(|| Error::Parse("point word must be a string".into()))?;
        let word = susp.sft().parse_word(word)?;
        let mut p = susp.periodic_point(&word)?;
        if v.get("height").is_some() {
            p.height = number(v, "height")?;
            susp.validate(&p)?;
        }
        return Ok(p);
    }
    let p: SuspPoint = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    susp.validate(&p)?;
    Ok(p)
}

pub fn parse_segments(text: &str, susp: &Suspension) -> Result<Vec<OrbitSegment>> {
    let v = json(text)?;
    let list = v
        .as_array()
        .ok_or_else(|| Error::Parse("segments file must hold a list".into()))?;
    list.iter()
        .map(|s| susp.segment(point_from_value(field(s, "point")?, susp)?, number(s, "duration")?))
        .collect()
}

pub fn parse_potential(text: &str, system: &FlowSystem) -> Result<Potential> {
    let v = json(text)?;
    let kind = field(&v, "type")?
        .as_str()
        .ok_or_else(|| Error::Parse("potential type must be a string".into()))?;
    let phi = match kind {
        "cylinder" => {
            let width = number(&v, "width")? as usize;
            let offset = match v.get("offset") {
                Some(_) => number(&v, "offset")? as usize,
                None => 0,
            };
            let raw = field(&v, "table")?
                .as_object()
                .ok_or_else(|| Error::Parse("table must be an object".into()))?;
            let mut table = HashMap::new();
            for (word, value) in raw {
                let w = system.sft().parse_word(word)?;
                let x = value
                    .as_f64()
                    .ok_or_else(|| Error::Parse(format!("value of {word:?} is not a number")))?;
                table.insert(w, x);
            }
            let mut c = CylinderPotential::from_table(width, offset, table)?;
            if v.get("default").is_some() {
                c.default = Some(number(&v, "default")?);
            }
            Potential::Cylinder(c)
        }
        "distance" => Potential::Distance(DistancePotential {
            reference: point_from_value(field(&v, "reference")?, system.suspension())?,
            scale: number(&v, "scale")?,
        }),
        "zero" => Potential::zero(),
        other => return Err(Error::Parse(format!("unknown potential type {other:?}"))),
    };
    phi.validate(system)?;
    Ok(phi)
}

#[derive(Deserialize)]
struct TargetComponent {
    weight: f64,
    kernel: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct TargetFile {
    components: Vec<TargetComponent>,
}

pub fn parse_target(text: &str, system: &FlowSystem, eta: f64) -> Result<ApproxTarget> {
    let f: TargetFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let components = f
        .components
        .into_iter()
        .map(|c| Ok((MarkovMeasure::from_symbol_kernel(system.sft(), &c.kernel)?, c.weight)))
        .collect::<Result<Vec<_>>>()?;
    ApproxTarget::new(components, eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_sft_with_names() {
        let s = parse_sft(r#"{"symbols": ["a", "b"], "transitions": [[1, 1], [1, 0]]}"#).unwrap();
        assert!(!s.allows(1, 1));
        assert_eq!(s.parse_word("ab").unwrap(), vec![0, 1]);
        assert!(parse_sft(r#"{"transitions": [[2]]}"#).is_err());
    }

    #[test]
    fn cylinder_potential_by_names() {
        let sys: FlowSystem = Suspension::unit(Sft::golden_mean()).into();
        let phi = parse_potential(
            r#"{"type": "cylinder", "width": 2, "table": {"00": 0.5, "01": 1, "10": -1}}"#,
            &sys,
        )
        .unwrap();
        match phi {
            Potential::Cylinder(c) => assert_eq!(c.table[&vec![0, 1]], 1.0),
            _ => panic!("expected a cylinder potential"),
        }
        assert!(parse_potential(r#"{"type": "cylinder", "width": 2, "table": {"00": 1}}"#, &sys).is_err());
    }

    #[test]
    fn segments_and_points() {
        let susp = Suspension::unit(Sft::full(2).unwrap());
        let segs = parse_segments(
            r#"[{"point": {"word": "01", "height": 0.5}, "duration": 3}]"#,
            &susp,
        )
        .unwrap();
        assert_eq!(segs[0].start.height, 0.5);
        assert!(parse_segments(r#"[{"point": {"word": "01", "height": 2}, "duration": 3}]"#, &susp).is_err());
    }
}
