//! JSON model files and CSV output.
//!
//! ```json
//! {"kind": "piecewise", "breakpoints": [0, 1, 2], "values": [[1, 0, 0], [0.5, 0.5, 0.5]]}
//! {"kind": "angle", "a": 0, "b": 1, "phi": {"family": "chirp", "gamma": 0, "beta": 2}, "head": 0.001}
//! {"kind": "diagonal", "a": 0, "h1": 1, "h2": {"coef": 1, "exponent": -2}, "cutoff": 50}
//! {"kind": "example", "name": "weierstrass(0.5,6)"}
//! ```
//! Piece values are `[h1, h3, h2]`. A diagonal model without `b` lives on
//! `[a, inf)`. `r_max` (default `1e4`) sets the resolution of the lowered table.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::examples::{angle_hints, ExampleSpec};
use crate::hamiltonian::{DiagFn, HamiltonianModel, Lowering, Phi, PhiFamily};
use crate::mat::SymMat2;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PhiSpec {
    Constant { value: f64 },
    Linear { slope: f64, intercept: f64 },
    Chirp { gamma: f64, beta: f64 },
    Weierstrass { alpha: f64, beta: f64, terms: usize },
    Power { exponent: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum DiagSpec {
    Constant(f64),
    Power { coef: f64, exponent: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelFile {
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<[f64; 3]>,
    },
    Angle {
        a: f64,
        b: f64,
        phi: PhiSpec,
        #[serde(default)]
        head: Option<f64>,
        #[serde(default)]
        r_max: Option<f64>,
    },
    Diagonal {
        a: f64,
        #[serde(default)]
        b: Option<f64>,
        h1: DiagSpec,
        h2: DiagSpec,
        #[serde(default)]
        cutoff: Option<f64>,
        #[serde(default)]
        r_max: Option<f64>,
    },
    Example {
        name: String,
        #[serde(default)]
        r_max: Option<f64>,
    },
}

pub const DEFAULT_R_MAX: f64 = 1e4;

impl From<&PhiSpec> for PhiFamily {
    fn from(p: &PhiSpec) -> Self {
        match *p {
            PhiSpec::Constant { value } => PhiFamily::Constant(value),
            PhiSpec::Linear { slope, intercept } => PhiFamily::Linear { slope, intercept },
            PhiSpec::Chirp { gamma, beta } => PhiFamily::Chirp { gamma, beta },
            PhiSpec::Weierstrass { alpha, beta, terms } => {
                PhiFamily::Weierstrass { alpha, beta, terms }
            }
            PhiSpec::Power { exponent } => PhiFamily::Power { exponent },
        }
    }
}

impl From<&DiagSpec> for DiagFn {
    fn from(d: &DiagSpec) -> Self {
        match *d {
            DiagSpec::Constant(c) => DiagFn::Constant(c),
            DiagSpec::Power { coef, exponent } => DiagFn::Power { coef, exponent },
        }
    }
}

impl ModelFile {
    /// Build the model; `cutoff` overrides the file's truncation point and
    /// `r_max` its resolution.
    pub fn build(&self, r_max: Option<f64>, cutoff: Option<f64>) -> Result<HamiltonianModel> {
        match self {
            ModelFile::Piecewise {
                breakpoints,
                values,
            } => HamiltonianModel::piecewise(
                breakpoints.clone(),
                values
                    .iter()
                    .map(|v| SymMat2::new(v[0], v[1], v[2]))
                    .collect(),
            ),
            ModelFile::Angle {
                a,
                b,
                phi,
                head,
                r_max: own,
            } => {
                let res = r_max.or(*own).unwrap_or(DEFAULT_R_MAX);
                let family = PhiFamily::from(phi);
                let (auto_head, grid_depth) = angle_hints(&family, *a, *b, res);
                let lowering = Lowering {
                    r_max: res,
                    head: head.or(auto_head),
                    grid_depth,
                    ..Default::default()
                };
                HamiltonianModel::angle(*a, *b, Phi::new(family), lowering)
            }
            ModelFile::Diagonal {
                a,
                b,
                h1,
                h2,
                cutoff: own_cut,
                r_max: own,
            } => {
                let lowering = Lowering {
                    r_max: r_max.or(*own).unwrap_or(DEFAULT_R_MAX),
                    cutoff: cutoff.or(*own_cut),
                    ..Default::default()
                };
                HamiltonianModel::diagonal(
                    *a,
                    b.unwrap_or(f64::INFINITY),
                    h1.into(),
                    h2.into(),
                    lowering,
                )
            }
            ModelFile::Example { name, r_max: own } => {
                let spec: ExampleSpec = name.parse()?;
                spec.build(r_max.or(*own).unwrap_or(DEFAULT_R_MAX))
            }
        }
    }
}

pub fn parse_model(json: &str) -> Result<ModelFile> {
    serde_json::from_str(json).map_err(|e| Error::Model(format!("model file: {e}")))
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    parse_model(&text)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            Cell::Real(x) => write!(f, "{x:.16e}"),
        }
    }
}

/// Comma-separated rows under a header; reals carry 17 significant digits.
pub fn write_csv<W: Write>(mut w: W, header: &[&str], rows: &[Vec<Cell>]) -> std::io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_all_kinds() {
        let pw =
            parse_model(r#"{"kind":"piecewise","breakpoints":[0,1],"values":[[1,0,1]]}"#).unwrap();
        assert_eq!(
            pw.build(None, None).unwrap().pieces().values(),
            &[SymMat2::IDENTITY]
        );
        let ang = parse_model(
            r#"{"kind":"angle","a":0,"b":1,"phi":{"family":"linear","slope":1,"intercept":0}}"#,
        )
        .unwrap();
        let m = ang.build(Some(100.0), None).unwrap();
        assert!((m.pieces().total().trace() - 1.0).abs() < 1e-10);
        let diag = parse_model(
            r#"{"kind":"diagonal","a":1,"h1":1,"h2":{"coef":1,"exponent":-2},"cutoff":20}"#,
        )
        .unwrap();
        let d = diag.build(Some(100.0), None).unwrap();
        assert!(!d.is_limit_circle());
        let ex = parse_model(r#"{"kind":"example","name":"identity"}"#).unwrap();
        assert_eq!(ex.build(None, None).unwrap().pieces().len(), 1);
        assert!(parse_model(r#"{"kind":"nope"}"#).is_err());
    }

    #[test]
    fn csv_is_deterministic() {
        let rows = vec![
            vec![Cell::Real(0.1), Cell::Int(3)],
            vec![Cell::Real(1.0 / 3.0), Cell::Int(-1)],
        ];
        let mut out = Vec::new();
        write_csv(&mut out, &["r", "kappa"], &rows).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(
            s,
            "r,kappa\n1.0000000000000001e-1,3\n3.3333333333333331e-1,-1\n"
        );
    }
}
