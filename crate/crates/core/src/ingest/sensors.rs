//! Sensor layout and measurement snapshot CSV files.
//!
//! Layout: header `kind,id`, kind one of `pressure`, `amr`, `flow`.
//!
//! Measurements: header `kind,id,value,unit`. Kinds are `pressure` (head in
//! `m`), `baseline` (leak-free head in `m`, optional), `amr` and `flow` (in
//! `l/s` or `m3/s`). Rows may come in any order; output follows the layout.

use std::collections::HashMap;
use std::io::Read;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::MeasurementBundle;
use crate::graph::{NetworkGraph, SensorLayout};
use crate::scalar::{lit, to_f64, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Pressure,
    Amr,
    Flow,
}

#[derive(Debug, Deserialize, Serialize)]
struct SensorRow {
    kind: String,
    id: String,
}

fn parse_kind(kind: &str, line: usize) -> Result<SensorKind> {
    match kind.trim().to_ascii_lowercase().as_str() {
        "pressure" => Ok(SensorKind::Pressure),
        "amr" => Ok(SensorKind::Amr),
        "flow" => Ok(SensorKind::Flow),
        other => Err(Error::Parse {
            line,
            message: format!("unknown sensor kind `{other}`"),
        }),
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(input)
}

fn row_line(pos: Option<&csv::Position>) -> usize {
    pos.map_or(0, |p| p.line() as usize)
}

pub fn load_sensor_config<T: Scalar, R: Read>(input: R, graph: &NetworkGraph<T>) -> Result<SensorLayout> {
    let mut rdr = reader(input);
    let mut ids: [Vec<String>; 3] = Default::default();
    for (i, row) in rdr.deserialize::<SensorRow>().enumerate() {
        let row = row?;
        // Header is line 1.
        let line = i + 2;
        let slot = match parse_kind(&row.kind, line)? {
            SensorKind::Pressure => 0,
            SensorKind::Amr => 1,
            SensorKind::Flow => 2,
        };
        ids[slot].push(row.id);
    }
    SensorLayout::new(graph, &ids[0], &ids[1], &ids[2])
}

pub fn write_sensor_config(layout: &SensorLayout) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let groups = [
        ("pressure", layout.pressure_ids()),
        ("amr", layout.amr_ids()),
        ("flow", layout.flow_ids()),
    ];
    for (kind, ids) in groups {
        for id in ids {
            w.serialize(SensorRow {
                kind: kind.to_string(),
                id: id.clone(),
            })?;
        }
    }
    if layout.n_s() + layout.n_a() + layout.n_q() == 0 {
        w.write_record(["kind", "id"])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Measurement(e.to_string()))
}

#[derive(Debug, Deserialize, Serialize)]
struct MeasurementRow {
    kind: String,
    id: String,
    value: String,
    unit: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Slot {
    Pressure,
    Baseline,
    Amr,
    Flow,
}

fn scale_for(slot: Slot, unit: &str, line: usize) -> Result<f64> {
    let unit = unit.trim().to_ascii_lowercase();
    match (slot, unit.as_str()) {
        (Slot::Pressure | Slot::Baseline, "m") => Ok(1.0),
        (Slot::Amr | Slot::Flow, "l/s" | "lps") => Ok(1e-3),
        (Slot::Amr | Slot::Flow, "m3/s" | "m^3/s" | "cms") => Ok(1.0),
        _ => Err(Error::Parse {
            line,
            message: format!("unit `{unit}` is not valid for {slot:?} readings"),
        }),
    }
}

/// Reads a snapshot and orders it by the layout.
pub fn load_measurements<T: Scalar, R: Read>(input: R, layout: &SensorLayout) -> Result<MeasurementBundle<T>> {
    let mut rdr = reader(input);
    let mut values: HashMap<(Slot, String), f64> = HashMap::new();
    let mut iter = rdr.deserialize::<MeasurementRow>();
    loop {
        let pos = iter.reader().position().clone();
        let Some(row) = iter.next() else { break };
        let row = row?;
        let line = row_line(Some(&pos)) + 1;
        let slot = match row.kind.trim().to_ascii_lowercase().as_str() {
            "pressure" => Slot::Pressure,
            "baseline" => Slot::Baseline,
            "amr" => Slot::Amr,
            "flow" => Slot::Flow,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown measurement kind `{other}`"),
                })
            }
        };
        let known = match slot {
            Slot::Pressure | Slot::Baseline => layout.pressure_ids(),
            Slot::Amr => layout.amr_ids(),
            Slot::Flow => layout.flow_ids(),
        };
        if !known.iter().any(|k| *k == row.id) {
            return Err(Error::UnknownId {
                kind: "measurement sensor",
                id: format!("{}:{}", row.kind, row.id),
            });
        }
        let value: f64 = row
            .value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::Parse {
                line,
                message: format!("invalid value `{}`", row.value),
            })?;
        let scaled = value * scale_for(slot, &row.unit, line)?;
        if values.insert((slot, row.id.clone()), scaled).is_some() {
            return Err(Error::DuplicateId {
                kind: "measurement",
                id: format!("{}:{}", row.kind, row.id),
            });
        }
    }

    let collect = |slot: Slot, ids: &[String], name: &str| -> Result<DVector<T>> {
        let v = ids
            .iter()
            .map(|id| {
                values
                    .get(&(slot, id.clone()))
                    .map(|&v| lit::<T>(v))
                    .ok_or_else(|| Error::Measurement(format!("missing {name} reading for `{id}`")))
            })
            .collect::<Result<Vec<T>>>()?;
        Ok(DVector::from_vec(v))
    };
    let has_baseline = values.keys().any(|(s, _)| *s == Slot::Baseline);
    Ok(MeasurementBundle {
        heads: collect(Slot::Pressure, layout.pressure_ids(), "pressure")?,
        demands: collect(Slot::Amr, layout.amr_ids(), "amr")?,
        flows: collect(Slot::Flow, layout.flow_ids(), "flow")?,
        baseline_heads: if has_baseline {
            Some(collect(Slot::Baseline, layout.pressure_ids(), "baseline")?)
        } else {
            None
        },
    })
}

/// Writes a snapshot; demands and flows in l/s.
pub fn write_measurements<T: Scalar>(layout: &SensorLayout, bundle: &MeasurementBundle<T>) -> Result<String> {
    bundle.check(layout)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut put = |kind: &str, ids: &[String], v: &DVector<T>, unit: &str, scale: f64| -> Result<()> {
        for (id, &x) in ids.iter().zip(v.iter()) {
            w.serialize(MeasurementRow {
                kind: kind.into(),
                id: id.clone(),
                value: format!("{}", to_f64(x) * scale),
                unit: unit.into(),
            })?;
        }
        Ok(())
    };
    put("pressure", layout.pressure_ids(), &bundle.heads, "m", 1.0)?;
    if let Some(b) = &bundle.baseline_heads {
        put("baseline", layout.pressure_ids(), b, "m", 1.0)?;
    }
    put("amr", layout.amr_ids(), &bundle.demands, "l/s", 1e3)?;
    put("flow", layout.flow_ids(), &bundle.flows, "l/s", 1e3)?;
    finish(w)
}
