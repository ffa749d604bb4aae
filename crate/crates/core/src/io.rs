//! Input documents shared by every command.
//!
//! A document is either JSON
//!
//! ```json
//! {"K": [[3,2],[2,3]], "n": [1,1], "tau": [0.3, 1.1], "xi": [[0.1,0.0],[0.0,0.2]]}
//! ```
//!
//! or a bare integer matrix, one row per line (or rows separated by `;`).
//! Unknown JSON fields are rejected.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::theta::{ThetaCharacteristics, ThetaError, TorusParams};
use crate::wen::{WenDatum, WenError, WenMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InputError {
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("ValidationError: {0}")]
    Validation(#[from] WenError),
    #[error("ValidationError: {0}")]
    Torus(#[from] ThetaError),
    #[error("ValidationError: {0}")]
    Shape(String),
}

/// Characteristics and argument for a single theta evaluation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaInput {
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub z: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    #[serde(rename = "K")]
    pub k: Vec<Vec<i64>>,
    /// Particles per layer; the minimal datum when absent.
    #[serde(default)]
    pub n: Option<Vec<i64>>,
    /// `[re, im]`, default `i`.
    #[serde(default)]
    pub tau: Option<[f64; 2]>,
    /// One `[re, im]` per layer, default zero.
    #[serde(default)]
    pub xi: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub theta: Option<ThetaInput>,
    /// Particle positions per layer, `[re, im]` each.
    #[serde(default)]
    pub positions: Option<Vec<Vec<[f64; 2]>>>,
}

impl InputDocument {
    pub fn from_matrix(k: Vec<Vec<i64>>) -> Self {
        InputDocument { k, n: None, tau: None, xi: None, theta: None, positions: None }
    }
}

pub fn parse_document(text: &str) -> Result<InputDocument, InputError> {
    let trimmed = text.trim();
    if trimmed.starts_with('{') {
        serde_json::from_str(trimmed).map_err(|e| InputError::Parse(e.to_string()))
    } else {
        parse_plain_matrix(trimmed).map(InputDocument::from_matrix)
    }
}

/// Whitespace-separated integers, rows split on newlines or `;`.
pub fn parse_plain_matrix(text: &str) -> Result<Vec<Vec<i64>>, InputError> {
    let rows: Vec<Vec<i64>> = text
        .split(['\n', ';'])
        .map(str::trim)
        .filter(|r| !r.is_empty() && !r.starts_with('#'))
        .map(|r| {
            r.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<i64>().map_err(|e| InputError::Parse(format!("entry {s:?}: {e}"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.is_empty() {
        return Err(InputError::Parse("empty matrix".into()));
    }
    Ok(rows)
}

pub fn complex(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

pub fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// A document after validation.
#[derive(Debug, Clone)]
pub struct Problem {
    pub datum: WenDatum,
    pub tau: TorusParams,
    pub xi: Vec<Complex64>,
    pub theta: ThetaCharacteristics,
    pub theta_z: Vec<Complex64>,
    pub positions: Option<Vec<Vec<Complex64>>>,
}

impl Problem {
    pub fn matrix(&self) -> &WenMatrix {
        self.datum.matrix()
    }

    pub fn g(&self) -> usize {
        self.datum.g()
    }
}

pub fn validate(doc: &InputDocument) -> Result<Problem, InputError> {
    let k = WenMatrix::new(doc.k.clone())?;
    let g = k.g();
    let datum = match &doc.n {
        Some(n) => WenDatum::new(k, n.clone())?,
        None => WenDatum::minimal(k),
    };
    let tau = TorusParams::new(complex(doc.tau.unwrap_or([0.0, 1.0])))?;
    let xi = per_layer("xi", doc.xi.as_deref(), g)?;
    let th = doc.theta.clone().unwrap_or_default();
    let a = th.a.unwrap_or_else(|| vec![0.0; g]);
    let b = th.b.unwrap_or_else(|| vec![0.0; g]);
    if a.len() != g || b.len() != g {
        return Err(InputError::Shape(format!("theta characteristics must have length {g}")));
    }
    let theta = ThetaCharacteristics::new(a, b)?;
    let theta_z = per_layer("theta.z", th.z.as_deref(), g)?;
    let positions = match &doc.positions {
        None => None,
        Some(layers) => {
            let sizes: Vec<i64> = layers.iter().map(|l| l.len() as i64).collect();
            if sizes != datum.counts() {
                return Err(InputError::Shape(format!(
                    "positions have layer sizes {sizes:?}, expected {:?}",
                    datum.counts()
                )));
            }
            Some(layers.iter().map(|l| l.iter().copied().map(complex).collect()).collect())
        }
    };
    Ok(Problem { datum, tau, xi, theta, theta_z, positions })
}

fn per_layer(name: &str, v: Option<&[[f64; 2]]>, g: usize) -> Result<Vec<Complex64>, InputError> {
    match v {
        None => Ok(vec![Complex64::new(0.0, 0.0); g]),
        Some(v) if v.len() == g => Ok(v.iter().copied().map(complex).collect()),
        Some(v) => Err(InputError::Shape(format!("{name} has length {}, expected {g}", v.len()))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_matrix() {
        let doc = parse_document("3 2\n2 3\n").unwrap();
        assert_eq!(doc.k, vec![vec![3, 2], vec![2, 3]]);
        assert_eq!(parse_document("3 2; 2 3").unwrap().k, doc.k);
    }

    #[test]
    fn json_defaults() {
        let p = validate(&parse_document(r#"{"K": [[2]]}"#).unwrap()).unwrap();
        assert_eq!(p.datum.counts(), &[1]);
        assert_eq!(p.tau.tau(), Complex64::new(0.0, 1.0));
        assert_eq!(p.xi, vec![Complex64::new(0.0, 0.0)]);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(matches!(parse_document(r#"{"K": [[2]], "Tau": [0, 1]}"#), Err(InputError::Parse(_))));
    }

    #[test]
    fn validation_message_is_verbatim() {
        let err = validate(&parse_document("2 1\n1 3").unwrap()).unwrap_err();
        assert!(err.to_string().contains("MixedParity"), "{err}");
    }
}
