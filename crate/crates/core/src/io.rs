//! JSON file formats.
//!
//! Structures:
//!
//! ```json
//! { "signature": [{"name": "P", "arity": 1, "lipschitz": ["1"], "bound": "1"}],
//!   "size": 2,
//!   "dist": [["0", "1/2"], ["1/2", "0"]],
//!   "predicates": {"P": ["0", "1/4"]} }
//! ```
//!
//! Rationals are strings `"p/q"` or `"p"`; integers are accepted too.
//! `signature` and `predicates` may be omitted for metric-only structures.
//! An entry for the distance symbol `d` in the signature is ignored.
//!
//! Borel codes are nested nodes `{"basic": {"theta": "<formula>", "support":
//! N}}`, `{"sup": [nodes]}` and `{"neg": node}`, optionally wrapped as
//! `{"signature": [...], "code": node}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::formula::{parse_formula, FormulaError};
use crate::rational::Rational;
use crate::structure::{PredicateSymbol, Signature, StructureCode, StructureError};
use crate::vaught::BorelCode;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("malformed Borel code at {path}: {message}")]
    Borel { path: String, message: String },
}

impl IoError {
    pub fn code(&self) -> &'static str {
        match self {
            IoError::Json(_) => "MalformedInput",
            IoError::Structure(e) => e.code(),
            IoError::Formula(e) => e.code(),
            IoError::Borel { .. } => "MalformedInput",
        }
    }
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Json(e.to_string())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct StructureFile {
    #[serde(default)]
    signature: Vec<PredicateSymbol>,
    size: usize,
    dist: Vec<Vec<Rational>>,
    #[serde(default)]
    predicates: BTreeMap<String, Vec<Rational>>,
}

fn signature_from(symbols: Vec<PredicateSymbol>) -> Result<Signature, StructureError> {
    Signature::new(symbols.into_iter().filter(|p| !(p.name == "d" && p.arity == 2)).collect())
}

/// Parses a structure. Dimensions are checked, the metric axioms are not.
pub fn parse_structure(text: &str) -> Result<StructureCode, IoError> {
    let file: StructureFile = serde_json::from_str(text)?;
    let signature = signature_from(file.signature)?;
    let n = file.size;
    if file.dist.len() != n || file.dist.iter().any(|row| row.len() != n) {
        return Err(StructureError::DimensionMismatch {
            table: "d".into(),
            expected: n * n,
            found: file.dist.iter().map(Vec::len).sum(),
        }
        .into());
    }
    let dist = file.dist.into_iter().flatten().collect();
    Ok(StructureCode::from_named(signature, n, dist, file.predicates)?)
}

pub fn structure_to_json(p: &StructureCode) -> String {
    let n = p.size();
    let file = StructureFile {
        signature: p.signature().predicates().to_vec(),
        size: n,
        dist: p.dist_table().chunks(n).map(<[Rational]>::to_vec).collect(),
        predicates: p
            .signature()
            .predicates()
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.clone(), p.table(i).to_vec()))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

fn borel_error(path: &str, message: impl Into<String>) -> IoError {
    IoError::Borel { path: path.to_string(), message: message.into() }
}

fn borel_node(v: &Value, sig: &Signature, path: &str) -> Result<BorelCode, IoError> {
    let obj = v.as_object().ok_or_else(|| borel_error(path, "expected an object"))?;
    if obj.len() != 1 {
        return Err(borel_error(path, "expected exactly one of `basic`, `sup`, `neg`"));
    }
    let (key, inner) = obj.iter().next().unwrap();
    match key.as_str() {
        "basic" => {
            let theta = inner
                .get("theta")
                .and_then(Value::as_str)
                .ok_or_else(|| borel_error(path, "`basic.theta` must be a formula string"))?;
            let support = inner
                .get("support")
                .and_then(Value::as_u64)
                .ok_or_else(|| borel_error(path, "`basic.support` must be a natural number"))?;
            Ok(BorelCode::basic(parse_formula(theta, sig)?, support as usize))
        }
        "sup" => {
            let members = inner.as_array().ok_or_else(|| borel_error(path, "`sup` must be an array"))?;
            members
                .iter()
                .enumerate()
                .map(|(i, m)| borel_node(m, sig, &format!("{path}.sup[{i}]")))
                .collect::<Result<Vec<_>, _>>()
                .map(BorelCode::SupFamily)
        }
        "neg" => Ok(BorelCode::neg(borel_node(inner, sig, &format!("{path}.neg"))?)),
        other => Err(borel_error(path, format!("unknown node `{other}`"))),
    }
}

/// Parses a Borel code and the signature its formulas use.
pub fn parse_borel(text: &str) -> Result<(Signature, BorelCode), IoError> {
    let v: Value = serde_json::from_str(text)?;
    match v.get("code") {
        Some(code) => {
            let symbols: Vec<PredicateSymbol> = match v.get("signature") {
                Some(s) => serde_json::from_value(s.clone())?,
                None => Vec::new(),
            };
            let sig = signature_from(symbols)?;
            let code = borel_node(code, &sig, "$")?;
            Ok((sig, code))
        }
        None => {
            let sig = Signature::metric_only();
            let code = borel_node(&v, &sig, "$")?;
            Ok((sig, code))
        }
    }
}

pub fn borel_to_value(code: &BorelCode) -> Value {
    match code {
        BorelCode::Basic { theta, support } => json!({"basic": {"theta": theta.to_string(), "support": support}}),
        BorelCode::SupFamily(members) => json!({"sup": members.iter().map(borel_to_value).collect::<Vec<_>>()}),
        BorelCode::Neg(inner) => json!({"neg": borel_to_value(inner)}),
    }
}

pub fn borel_to_json(code: &BorelCode, sig: &Signature) -> String {
    let v = if sig.predicates().is_empty() {
        borel_to_value(code)
    } else {
        json!({"signature": sig.predicates(), "code": borel_to_value(code)})
    };
    serde_json::to_string_pretty(&v).expect("serializable")
}
