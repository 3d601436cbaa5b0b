//! Reading and writing tables, probability functions, Z laws, histograms and
//! reports. Exact values are written as `p/q` and read back losslessly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::boundary::ZDistribution;
use crate::dims::DimensionTable;
use crate::error::{Error, Result};
use crate::graph::GridPoint;
use crate::measures::{ProbabilityFunction, Provenance, Support};
use crate::scalar::{Scalar, ScalarMode};
use crate::simulate::{EndpointHistogram, HistogramBin, ZHistogram};
use crate::triangle::Triangle;

/// Metadata key of the last row of a Z law CSV.
pub const Z_BOUND_KEY: &str = "truncation_error_bound";

/// `h,t,<column>` rows in level order.
pub fn write_triangle_csv<W: Write>(w: W, values: &Triangle<Scalar>, column: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["h", "t", column])?;
    for (p, v) in values.iter() {
        wtr.write_record([p.h.to_string(), p.t.to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads `h,t,<column>` rows covering a full triangle `h + t ≤ N`.
pub fn read_triangle_csv<R: Read>(r: R, column: &str) -> Result<Triangle<Scalar>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["h", "t", column] {
        return Err(Error::Parse(format!(
            "expected header `h,t,{column}`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut cells = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let idx = |i: usize| -> Result<usize> {
            record[i]
                .parse()
                .map_err(|_| Error::Parse(format!("bad index {:?}", &record[i])))
        };
        cells.push((GridPoint::new(idx(0)?, idx(1)?), Scalar::parse(&record[2])?));
    }
    let horizon = cells.iter().map(|(p, _)| p.level()).max().unwrap_or(0);
    let expected = (horizon + 1) * (horizon + 2) / 2;
    if cells.len() != expected {
        return Err(Error::Parse(format!(
            "a triangle of horizon {horizon} has {expected} cells, file has {}",
            cells.len()
        )));
    }
    let mut tri: Triangle<Option<Scalar>> = Triangle::filled(horizon, None);
    for (p, v) in cells {
        if tri.at(p).is_some() {
            return Err(Error::Parse(format!("duplicate cell {p}")));
        }
        tri.set(p, Some(v));
    }
    Ok(tri.map(|_, v| v.clone().expect("every cell filled")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub h: usize,
    pub t: usize,
    pub value: Scalar,
}

fn cells(values: &Triangle<Scalar>) -> Vec<Cell> {
    values
        .iter()
        .map(|(p, v)| Cell {
            h: p.h,
            t: p.t,
            value: v.clone(),
        })
        .collect()
}

fn triangle_from_cells(n: usize, cells: &[Cell]) -> Result<Triangle<Scalar>> {
    let mut tri: Triangle<Option<Scalar>> = Triangle::filled(n, None);
    for c in cells {
        let p = GridPoint::new(c.h, c.t);
        if !tri.contains(p) {
            return Err(Error::Parse(format!("cell {p} lies beyond N = {n}")));
        }
        tri.set(p, Some(c.value.clone()));
    }
    if let Some((p, _)) = tri.iter().find(|(_, v)| v.is_none()) {
        return Err(Error::Parse(format!("missing cell {p}")));
    }
    Ok(tri.map(|_, v| v.clone().expect("checked")))
}

/// JSON form of a dimension table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DimsDocument {
    pub graph: String,
    pub mode: ScalarMode,
    #[serde(rename = "N")]
    pub n: usize,
    pub values: Vec<Cell>,
}

impl DimsDocument {
    pub fn new(table: &DimensionTable) -> Self {
        DimsDocument {
            graph: table.label.clone(),
            mode: table.mode,
            n: table.horizon(),
            values: cells(&table.values),
        }
    }
}

/// JSON form of a probability function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhiDocument {
    pub family: String,
    pub params: Value,
    #[serde(rename = "N")]
    pub n: usize,
    pub mode: ScalarMode,
    pub support: Support,
    pub values: Vec<Cell>,
}

impl PhiDocument {
    pub fn new(phi: &ProbabilityFunction) -> Self {
        let (family, params) = match &phi.provenance {
            Provenance::Family { family } => {
                let mut v = serde_json::to_value(family).unwrap_or(Value::Null);
                let name = v
                    .as_object_mut()
                    .and_then(|o| o.remove("process"))
                    .and_then(|n| n.as_str().map(str::to_string))
                    .unwrap_or_else(|| family.to_string());
                (name, v)
            }
            other => (
                phi.graph_label.clone(),
                serde_json::to_value(other).unwrap_or(Value::Null),
            ),
        };
        PhiDocument {
            family,
            params,
            n: phi.horizon(),
            mode: phi.mode,
            support: phi.support,
            values: cells(&phi.values),
        }
    }

    pub fn values(&self) -> Result<Triangle<Scalar>> {
        triangle_from_cells(self.n, &self.values)
    }
}

/// `z,weight` rows followed by a `truncation_error_bound,<bound>` row.
pub fn write_z_csv<W: Write>(w: W, z: &ZDistribution) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["z", "weight"])?;
    for (i, wt) in z.weights.iter().enumerate() {
        wtr.write_record([(z.min_z + i as i64).to_string(), format!("{wt:?}")])?;
    }
    wtr.write_record([Z_BOUND_KEY.to_string(), format!("{:?}", z.truncation_error_bound)])?;
    wtr.flush()?;
    Ok(())
}

/// Reads a Z law CSV back into `(min_z, weights, bound)`.
pub fn read_z_csv<R: Read>(r: R) -> Result<(i64, Vec<f64>, f64)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut rows = Vec::new();
    let mut bound = None;
    for record in rdr.records() {
        let record = record?;
        let value: f64 = record[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad weight {:?}", &record[1])))?;
        if &record[0] == Z_BOUND_KEY {
            bound = Some(value);
            continue;
        }
        let z: i64 = record[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad z {:?}", &record[0])))?;
        rows.push((z, value));
    }
    let bound = bound.ok_or_else(|| Error::Parse(format!("missing `{Z_BOUND_KEY}` row")))?;
    let min_z = rows.first().map_or(0, |r| r.0);
    if rows.iter().enumerate().any(|(i, r)| r.0 != min_z + i as i64) {
        return Err(Error::Parse("z values must be consecutive".into()));
    }
    Ok((min_z, rows.into_iter().map(|r| r.1).collect(), bound))
}

pub fn write_endpoint_csv<W: Write>(w: W, hist: &EndpointHistogram) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["h", "t", "count", "frequency"])?;
    for (h, &c) in hist.counts.iter().enumerate() {
        wtr.write_record([
            h.to_string(),
            (hist.level - h).to_string(),
            c.to_string(),
            format!("{:?}", c as f64 / hist.total as f64),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_bins_csv<W: Write>(w: W, bins: &[HistogramBin]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["lo", "hi", "count"])?;
    for b in bins {
        wtr.write_record([format!("{:?}", b.lo), format!("{:?}", b.hi), b.count.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_z_histogram_csv<W: Write>(w: W, z: &ZHistogram) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["z", "count"])?;
    for (i, c) in z.counts.iter().enumerate() {
        wtr.write_record([(z.min_z + i as i64).to_string(), c.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

/// Shipped JSON schemas, by document name.
pub const SCHEMAS: &[(&str, &str)] = &[
    ("dims", include_str!("../schemas/dims.schema.json")),
    ("phi", include_str!("../schemas/phi.schema.json")),
    ("boundary_report", include_str!("../schemas/boundary_report.schema.json")),
    ("simulation_job", include_str!("../schemas/simulation_job.schema.json")),
    ("simulation_result", include_str!("../schemas/simulation_result.schema.json")),
];

pub fn schema(name: &str) -> Option<&'static str> {
    SCHEMAS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{phi_from_family, MeasureFamily};

    #[test]
    fn triangle_csv_round_trip() {
        let phi = phi_from_family(&MeasureFamily::stirling1(Scalar::ratio(3, 2)), 6).unwrap();
        let mut buf = Vec::new();
        write_triangle_csv(&mut buf, &phi.values, "phi").unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("h,t,phi\n0,0,1\n"));
        assert!(text.contains('/'));
        let back = read_triangle_csv(buf.as_slice(), "phi").unwrap();
        assert_eq!(back, phi.values);
        assert!(read_triangle_csv("h,t,phi\n0,0,1\n1,0,1/2\n".as_bytes(), "phi").is_err());
    }

    #[test]
    fn phi_document_round_trip() {
        let phi = phi_from_family(
            &MeasureFamily::Polya {
                a: 1.into(),
                b: 2.into(),
            },
            4,
        )
        .unwrap();
        let doc = PhiDocument::new(&phi);
        assert_eq!(doc.family, "polya");
        assert_eq!(doc.params["a"], "1");
        let json = to_json(&doc).unwrap();
        let back: PhiDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back.values().unwrap(), phi.values);
    }

    #[test]
    fn z_csv_round_trip() {
        let z = ZDistribution {
            theta: 1.0,
            min_z: -2,
            weights: vec![0.25, 0.5, 0.25],
            truncation_error_bound: 1e-9,
            trials: 3,
            l_count: 1,
            m_count: 2,
        };
        let mut buf = Vec::new();
        write_z_csv(&mut buf, &z).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.trim_end().ends_with("truncation_error_bound,1e-9"));
        assert_eq!(read_z_csv(buf.as_slice()).unwrap(), (-2, z.weights.clone(), 1e-9));
    }
}
