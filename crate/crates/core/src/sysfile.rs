//! JSON system descriptions.
//!
//! ```json
//! {
//!   "name": "unicycle",
//!   "n": 3,
//!   "m": 2,
//!   "names": ["x", "y", "theta"],
//!   "fields": [["cos(theta)", "sin(theta)", "0"], ["0", "0", "1"]]
//! }
//! ```
//!
//! Each field is a list of `n` expression strings in the state names. The
//! grammar covers rational constants, `+ - * /` (division by constants),
//! nonnegative integer powers, `sin` and `cos`.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::poly::parse_expr;
use crate::system::ExprSystem;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: String,
    pub n: usize,
    pub m: usize,
    /// Coordinate names; `x1, …, xn` when omitted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
    /// `fields[i][k]` is component `k` of `X_{i+1}`.
    pub fields: Vec<Vec<String>>,
    /// Known degree of nonholonomy, informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    /// Free-text description of the singular locus, informational.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_locus: Option<String>,
}

pub const UNICYCLE_JSON: &str = r#"{
  "name": "unicycle",
  "n": 3,
  "m": 2,
  "names": ["x", "y", "theta"],
  "fields": [
    ["cos(theta)", "sin(theta)", "0"],
    ["0", "0", "1"]
  ],
  "step": 2
}"#;

pub const MARTINET_JSON: &str = r#"{
  "name": "martinet",
  "n": 3,
  "m": 2,
  "names": ["x1", "x2", "x3"],
  "fields": [
    ["1", "0", "0"],
    ["0", "1", "x1^2"]
  ],
  "step": 3,
  "singular_locus": "x1 = 0"
}"#;

/// Bundled system by name.
pub fn builtin(name: &str) -> Option<SystemSpec> {
    match name {
        "unicycle" => Some(parse_system_spec(UNICYCLE_JSON).expect("bundled unicycle parses")),
        "martinet" => Some(parse_system_spec(MARTINET_JSON).expect("bundled Martinet parses")),
        _ => None,
    }
}

/// 1-based line and column of byte offset `offset` in `text`.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rsplit('\n')
        .next()
        .map(|s| s.chars().count())
        .unwrap_or(0)
        + 1;
    (line, column)
}

/// Parses and validates a system document.
pub fn parse_system_spec(text: &str) -> Result<SystemSpec, Error> {
    let mut spec: SystemSpec = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if spec.names.is_empty() {
        spec.names = (1..=spec.n).map(|i| format!("x{i}")).collect();
    }
    if spec.names.len() != spec.n {
        return Err(Error::DimensionMismatch(format!(
            "{} coordinate names for n = {}",
            spec.names.len(),
            spec.n
        )));
    }
    if spec.fields.len() != spec.m {
        return Err(Error::DimensionMismatch(format!(
            "{} fields for m = {}",
            spec.fields.len(),
            spec.m
        )));
    }
    for (i, field) in spec.fields.iter().enumerate() {
        if field.len() != spec.n {
            return Err(Error::DimensionMismatch(format!(
                "field {} has {} components for n = {}",
                i + 1,
                field.len(),
                spec.n
            )));
        }
    }
    // Locate each expression string in the document for error positions.
    let mut search_from = text.find("\"fields\"").unwrap_or(0);
    for field in &spec.fields {
        for component in field {
            let quoted = serde_json::to_string(component).expect("strings serialize");
            let start = text[search_from..].find(&quoted).map(|p| search_from + p);
            if let Some(s) = start {
                search_from = s + quoted.len();
            }
            if let Err(e) = parse_expr(component, &spec.names) {
                let (line, column) = match start {
                    Some(s) => {
                        let (l, c) = line_column(text, s);
                        (l, c + e.column)
                    }
                    None => (0, e.column),
                };
                return Err(if e.message.starts_with("unsupported node") {
                    Error::UnsupportedNode {
                        line,
                        column,
                        message: e.message,
                    }
                } else {
                    Error::Parse {
                        line,
                        column,
                        message: format!("in \"{component}\": {}", e.message),
                    }
                });
            }
        }
    }
    Ok(spec)
}

impl SystemSpec {
    pub fn to_system(&self) -> Result<ExprSystem, Error> {
        let fields = self
            .fields
            .iter()
            .map(|f| {
                f.iter()
                    .map(|c| {
                        parse_expr(c, &self.names).map_err(|e| Error::Parse {
                            line: 0,
                            column: e.column,
                            message: e.message,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExprSystem::new(self.names.clone(), fields))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system specs serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_systems_parse() {
        let u = builtin("unicycle").unwrap();
        assert_eq!((u.n, u.m), (3, 2));
        let m = builtin("martinet").unwrap().to_system().unwrap();
        assert_eq!(m.fields[1][2].eval_f64(&[3.0, 0.0, 0.0]), 9.0);
    }

    #[test]
    fn wrong_arity_is_a_dimension_mismatch() {
        let text = r#"{"name":"bad","n":3,"m":1,"fields":[["1","0"]]}"#;
        assert!(matches!(
            parse_system_spec(text),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn errors_carry_positions() {
        let text =
            "{\n  \"name\": \"bad\",\n  \"n\": 1, \"m\": 1,\n  \"fields\": [[\"x1 +* 2\"]]\n}";
        match parse_system_spec(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        match parse_system_spec("{\"name\": 1}") {
            Err(Error::Parse {
                line: 1, column, ..
            }) => assert!(column > 1),
            other => panic!("{other:?}"),
        }
        let text = r#"{"name":"d","n":1,"m":1,"fields":[["1/x1"]]}"#;
        assert!(matches!(
            parse_system_spec(text),
            Err(Error::UnsupportedNode { .. })
        ));
    }
}
