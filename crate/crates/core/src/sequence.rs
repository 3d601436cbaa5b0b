//! Real sequences `(a_n)` and `(b_h)` used to parameterize generalized
//! Stirling triangles: closed-form presets or finite CSV files.
//!
//! Preset grammar (shared by the CLI, job files and the C ABI):
//!
//! | text              | value at n        |
//! |-------------------|-------------------|
//! | `const:c`         | c                 |
//! | `linear:c,d`      | c·n + d           |
//! | `power:β`         | (n+1)^β           |
//! | `geom:c,q` or `geom:c,q,d` | c·qⁿ + d |
//! | `file:PATH`       | row n of a `n,value` CSV; error past the end |
//! | `file:PATH+SPEC`  | the file, then SPEC for indices past the end |

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarMode};

#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    Const(Scalar),
    /// `slope·n + intercept`
    Linear { slope: Scalar, intercept: Scalar },
    /// `(n+1)^exponent`
    Power(Scalar),
    /// `scale·ratioⁿ + shift`
    Geometric {
        scale: Scalar,
        ratio: Scalar,
        shift: Scalar,
    },
    File {
        source: String,
        values: Vec<Scalar>,
        extension: Option<Box<SequenceSpec>>,
    },
}

/// Supremum of a sequence over n ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub enum Supremum {
    Infinite,
    /// `attained_at` is the first index reaching the value, if any.
    Finite {
        value: Scalar,
        attained_at: Option<usize>,
    },
}

impl SequenceSpec {
    pub fn constant(c: impl Into<Scalar>) -> Self {
        SequenceSpec::Const(c.into())
    }

    pub fn linear(slope: impl Into<Scalar>, intercept: impl Into<Scalar>) -> Self {
        SequenceSpec::Linear {
            slope: slope.into(),
            intercept: intercept.into(),
        }
    }

    pub fn geometric(scale: impl Into<Scalar>, ratio: impl Into<Scalar>) -> Self {
        SequenceSpec::Geometric {
            scale: scale.into(),
            ratio: ratio.into(),
            shift: Scalar::from(0),
        }
    }

    pub fn from_values(source: &str, values: Vec<Scalar>) -> Self {
        SequenceSpec::File {
            source: source.to_string(),
            values,
            extension: None,
        }
    }

    pub fn with_extension(self, ext: SequenceSpec) -> Self {
        match self {
            SequenceSpec::File { source, values, .. } => SequenceSpec::File {
                source,
                values,
                extension: Some(Box::new(ext)),
            },
            other => other,
        }
    }

    /// Reads a `n,value` (or `h,value`) CSV file.
    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let values = read_sequence_csv(path)?;
        Ok(SequenceSpec::from_values(&path.display().to_string(), values))
    }

    pub fn mode(&self) -> ScalarMode {
        use SequenceSpec::*;
        match self {
            Const(c) => c.mode(),
            Linear { slope, intercept } => slope.mode().combine(intercept.mode()),
            Power(beta) => {
                if beta.as_integer().is_some() {
                    ScalarMode::Exact
                } else {
                    ScalarMode::Float
                }
            }
            Geometric {
                scale,
                ratio,
                shift,
            } => scale.mode().combine(ratio.mode()).combine(shift.mode()),
            File {
                values, extension, ..
            } => {
                let m = values
                    .iter()
                    .fold(ScalarMode::Exact, |m, v| m.combine(v.mode()));
                match extension {
                    Some(e) => m.combine(e.mode()),
                    None => m,
                }
            }
        }
    }

    pub fn value(&self, n: usize) -> Result<Scalar> {
        use SequenceSpec::*;
        Ok(match self {
            Const(c) => c.clone(),
            Linear { slope, intercept } => slope * &Scalar::from(n as i64) + intercept,
            Power(beta) => Scalar::from(n as i64 + 1).pow(beta),
            Geometric {
                scale,
                ratio,
                shift,
            } => scale * &ratio.powi(n as i64) + shift,
            File {
                values, extension, ..
            } => match values.get(n) {
                Some(v) => v.clone(),
                None => match extension {
                    Some(e) => e.value(n)?,
                    None => {
                        return Err(Error::SequenceExhausted {
                            index: n,
                            len: values.len(),
                        })
                    }
                },
            },
        })
    }

    /// Double-precision evaluator with the parameters converted once.
    pub fn f64_evaluator(&self) -> Arc<dyn Fn(usize) -> Result<f64> + Send + Sync> {
        use SequenceSpec::*;
        match self {
            Const(c) => {
                let c = c.to_f64();
                Arc::new(move |_| Ok(c))
            }
            Linear { slope, intercept } => {
                let (s, i) = (slope.to_f64(), intercept.to_f64());
                Arc::new(move |n| Ok(s * n as f64 + i))
            }
            Power(beta) => {
                let b = beta.to_f64();
                Arc::new(move |n| Ok((n as f64 + 1.0).powf(b)))
            }
            Geometric {
                scale,
                ratio,
                shift,
            } => {
                let (c, r, d) = (scale.to_f64(), ratio.to_f64(), shift.to_f64());
                Arc::new(move |n| Ok(c * r.powf(n as f64) + d))
            }
            File {
                values, extension, ..
            } => {
                let vals: Vec<f64> = values.iter().map(Scalar::to_f64).collect();
                let ext = extension.as_ref().map(|e| e.f64_evaluator());
                Arc::new(move |n| match (vals.get(n), &ext) {
                    (Some(v), _) => Ok(*v),
                    (None, Some(e)) => e(n),
                    (None, None) => Err(Error::SequenceExhausted {
                        index: n,
                        len: vals.len(),
                    }),
                })
            }
        }
    }

    /// Value converted to `mode`.
    pub fn value_in(&self, n: usize, mode: ScalarMode) -> Result<Scalar> {
        self.value(n)?.into_mode(mode)
    }

    /// Number of defined terms, `None` when unbounded.
    pub fn len(&self) -> Option<usize> {
        match self {
            SequenceSpec::File {
                values,
                extension: None,
                ..
            } => Some(values.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn is_file_backed(&self) -> bool {
        matches!(self, SequenceSpec::File { .. })
    }

    pub fn is_identically_zero(&self) -> bool {
        use SequenceSpec::*;
        match self {
            Const(c) => c.is_zero(),
            Linear { slope, intercept } => slope.is_zero() && intercept.is_zero(),
            Power(_) => false,
            Geometric { scale, shift, .. } => scale.is_zero() && shift.is_zero(),
            File {
                values, extension, ..
            } => {
                values.iter().all(Scalar::is_zero)
                    && extension.as_ref().is_none_or(|e| e.is_identically_zero())
            }
        }
    }

    /// Supremum over all indices n ≥ 0.
    pub fn supremum(&self) -> Supremum {
        use SequenceSpec::*;
        let one = Scalar::from(1);
        match self {
            Const(c) => Supremum::Finite {
                value: c.clone(),
                attained_at: Some(0),
            },
            Linear { slope, intercept } => {
                if slope.is_positive() {
                    Supremum::Infinite
                } else {
                    Supremum::Finite {
                        value: intercept.clone(),
                        attained_at: Some(0),
                    }
                }
            }
            Power(beta) => {
                if beta.is_positive() {
                    Supremum::Infinite
                } else {
                    Supremum::Finite {
                        value: one,
                        attained_at: Some(0),
                    }
                }
            }
            Geometric {
                scale,
                ratio,
                shift,
            } => {
                let at_zero = Supremum::Finite {
                    value: scale + shift,
                    attained_at: Some(0),
                };
                if scale.is_zero() || *ratio == one || ratio.is_zero() {
                    at_zero
                } else if ratio.is_negative() {
                    // alternating signs: unbounded for |q| > 1, else the max of the first two terms
                    if ratio.abs() > one {
                        Supremum::Infinite
                    } else {
                        let first = scale * ratio + shift;
                        if first > scale + shift {
                            Supremum::Finite {
                                value: first,
                                attained_at: Some(1),
                            }
                        } else {
                            at_zero
                        }
                    }
                } else if *ratio > one {
                    if scale.is_positive() {
                        Supremum::Infinite
                    } else {
                        at_zero
                    }
                } else if scale.is_positive() {
                    at_zero
                } else {
                    // increases towards `shift` without reaching it
                    Supremum::Finite {
                        value: shift.clone(),
                        attained_at: None,
                    }
                }
            }
            File {
                values, extension, ..
            } => {
                let mut best: Option<(Scalar, usize)> = None;
                for (i, v) in values.iter().enumerate() {
                    if best.as_ref().is_none_or(|(b, _)| v > b) {
                        best = Some((v.clone(), i));
                    }
                }
                match extension {
                    None => match best {
                        Some((value, i)) => Supremum::Finite {
                            value,
                            attained_at: Some(i),
                        },
                        None => Supremum::Finite {
                            value: Scalar::Float(f64::NEG_INFINITY),
                            attained_at: None,
                        },
                    },
                    // the extension's supremum is over all n, which bounds its tail
                    Some(e) => match (e.supremum(), best) {
                        (Supremum::Infinite, _) => Supremum::Infinite,
                        (s, None) => s,
                        (
                            Supremum::Finite {
                                value, attained_at, ..
                            },
                            Some((b, i)),
                        ) => {
                            if b >= value {
                                Supremum::Finite {
                                    value: b,
                                    attained_at: Some(i),
                                }
                            } else {
                                Supremum::Finite {
                                    value,
                                    attained_at: attained_at.filter(|&j| j >= values.len()),
                                }
                            }
                        }
                    },
                }
            }
        }
    }

    /// Whether `Σ_n value(n)` converges, for nonnegative sequences.
    /// `None` for a bare file, where the question is not decidable.
    pub fn series_converges(&self) -> Option<bool> {
        use SequenceSpec::*;
        let one = Scalar::from(1);
        match self {
            Const(c) => Some(c.is_zero()),
            Linear { .. } => Some(self.is_identically_zero()),
            Power(beta) => Some(*beta < -one),
            Geometric {
                scale,
                ratio,
                shift,
            } => Some(shift.is_zero() && (scale.is_zero() || ratio.abs() < one)),
            File { extension, .. } => extension.as_ref().and_then(|e| e.series_converges()),
        }
    }
}

pub fn read_sequence_csv(path: &Path) -> Result<Vec<Scalar>> {
    let file = std::fs::File::open(path)?;
    parse_sequence_csv(file)
}

/// Parses `n,value` rows; indices must run 0, 1, 2, … without gaps.
pub fn parse_sequence_csv<R: std::io::Read>(reader: R) -> Result<Vec<Scalar>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || !matches!(&headers[0], "n" | "h" | "t") || &headers[1] != "value" {
        return Err(Error::Parse(format!(
            "sequence file header must be `n,value`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let idx: usize = record[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad index {:?} in row {row}", &record[0])))?;
        if idx != values.len() {
            return Err(Error::Parse(format!(
                "sequence indices must be contiguous from 0; row {row} has index {idx}"
            )));
        }
        values.push(Scalar::parse(&record[1])?);
    }
    Ok(values)
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SequenceSpec::*;
        match self {
            Const(c) => write!(f, "const:{c}"),
            Linear { slope, intercept } => write!(f, "linear:{slope},{intercept}"),
            Power(beta) => write!(f, "power:{beta}"),
            Geometric {
                scale,
                ratio,
                shift,
            } => {
                if shift.is_zero() {
                    write!(f, "geom:{scale},{ratio}")
                } else {
                    write!(f, "geom:{scale},{ratio},{shift}")
                }
            }
            File {
                source, extension, ..
            } => match extension {
                Some(e) => write!(f, "file:{source}+{e}"),
                None => write!(f, "file:{source}"),
            },
        }
    }
}

impl FromStr for SequenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("sequence spec {s:?} lacks a `kind:` prefix")))?;
        if kind == "file" {
            let (path, ext) = match rest.split_once('+') {
                Some((p, e)) => (p, Some(e.parse::<SequenceSpec>()?)),
                None => (rest, None),
            };
            let seq = SequenceSpec::read_file(path)?;
            return Ok(match ext {
                Some(e) => seq.with_extension(e),
                None => seq,
            });
        }
        let args = rest
            .split(',')
            .map(Scalar::parse)
            .collect::<Result<Vec<_>>>()?;
        let arity = |n: &[usize]| {
            if n.contains(&args.len()) {
                Ok(())
            } else {
                Err(Error::Parse(format!(
                    "sequence preset `{kind}` takes {n:?} arguments, got {}",
                    args.len()
                )))
            }
        };
        match kind {
            "const" => {
                arity(&[1])?;
                Ok(SequenceSpec::Const(args[0].clone()))
            }
            "linear" => {
                arity(&[2])?;
                Ok(SequenceSpec::linear(args[0].clone(), args[1].clone()))
            }
            "power" => {
                arity(&[1])?;
                Ok(SequenceSpec::Power(args[0].clone()))
            }
            "geom" => {
                arity(&[2, 3])?;
                let ratio = args[1].clone();
                if !ratio.is_positive() {
                    return Err(Error::invalid("geometric ratio must be positive"));
                }
                Ok(SequenceSpec::Geometric {
                    scale: args[0].clone(),
                    ratio,
                    shift: args.get(2).cloned().unwrap_or_else(|| Scalar::from(0)),
                })
            }
            other => Err(Error::Parse(format!("unknown sequence preset `{other}`"))),
        }
    }
}

impl Serialize for SequenceSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SequenceSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_evaluate() {
        let lin: SequenceSpec = "linear:1,1".parse().unwrap();
        assert_eq!(lin.value(4).unwrap(), Scalar::from(5));
        let pw: SequenceSpec = "power:2".parse().unwrap();
        assert_eq!(pw.value(0).unwrap(), Scalar::from(1));
        assert_eq!(pw.value(2).unwrap(), Scalar::from(9));
        assert_eq!(pw.mode(), ScalarMode::Exact);
        let half: SequenceSpec = "power:1/2".parse().unwrap();
        assert_eq!(half.mode(), ScalarMode::Float);
        let g: SequenceSpec = "geom:-1,1/2,2".parse().unwrap();
        assert_eq!(g.value(1).unwrap(), Scalar::ratio(3, 2));
    }

    #[test]
    fn file_sequences_error_past_the_end() {
        let csv = "n,value\n0,1/2\n1,3\n";
        let vals = parse_sequence_csv(csv.as_bytes()).unwrap();
        let seq = SequenceSpec::from_values("mem", vals);
        assert_eq!(seq.value(1).unwrap(), Scalar::from(3));
        assert!(matches!(
            seq.value(2),
            Err(Error::SequenceExhausted { index: 2, len: 2 })
        ));
        let ext = seq.with_extension(SequenceSpec::constant(7));
        assert_eq!(ext.value(9).unwrap(), Scalar::from(7));
    }

    #[test]
    fn file_rows_must_be_contiguous() {
        assert!(parse_sequence_csv("n,value\n0,1\n2,1\n".as_bytes()).is_err());
        assert!(parse_sequence_csv("x,y\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn suprema() {
        let b: SequenceSpec = "geom:-1,1/2,2".parse().unwrap();
        assert_eq!(
            b.supremum(),
            Supremum::Finite {
                value: Scalar::from(2),
                attained_at: None
            }
        );
        let s2: SequenceSpec = "linear:1,1".parse().unwrap();
        assert_eq!(s2.supremum(), Supremum::Infinite);
        let q: SequenceSpec = "geom:1,1/2".parse().unwrap();
        assert_eq!(
            q.supremum(),
            Supremum::Finite {
                value: Scalar::from(1),
                attained_at: Some(0)
            }
        );
        assert_eq!(q.series_converges(), Some(true));
        assert_eq!(b.series_converges(), Some(false));
    }
}
