//! Scenario files: JSON with either a normalized `V`/`z` pair or raw
//! `G`/`sigma2` measurements, plus targets, constraint incidence and budgets.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_channel, ConstraintPolytope, NetworkModel, RawChannel, Utility};

/// Utility selector as written in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum UtilitySpec {
    Log,
    Negpow { n: u32 },
}

impl From<Utility> for UtilitySpec {
    fn from(u: Utility) -> Self {
        match u {
            Utility::Log => UtilitySpec::Log,
            Utility::NegPow(n) => UtilitySpec::Negpow { n },
        }
    }
}

impl TryFrom<UtilitySpec> for Utility {
    type Error = Error;

    fn try_from(spec: UtilitySpec) -> Result<Self> {
        match spec {
            UtilitySpec::Log => Ok(Utility::Log),
            UtilitySpec::Negpow { n } => Utility::new_negpow(n),
        }
    }
}

/// On-disk layout, field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<f64>>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<Vec<f64>>,
    pub gamma: Vec<f64>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    pub p_hat: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<UtilitySpec>,
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: NetworkModel,
    pub poly: ConstraintPolytope,
    pub utility: Utility,
}

impl Scenario {
    pub fn new(model: NetworkModel, poly: ConstraintPolytope, utility: Utility) -> Result<Self> {
        poly.check_links(&model)?;
        Ok(Self { model, poly, utility })
    }

    /// Parses and validates; syntax errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        Self::from_file(&file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_file(file: &ScenarioFile) -> Result<Self> {
        let targets = DVector::from_vec(file.gamma.clone());
        let model = match (&file.v, &file.z, &file.g, &file.sigma2) {
            (Some(v), Some(z), None, None) => {
                NetworkModel::new(matrix("V", v)?, DVector::from_vec(z.clone()), targets)?
            }
            (None, None, Some(g), Some(s)) => {
                let raw = RawChannel::new(matrix("G", g)?, DVector::from_vec(s.clone()))?;
                normalize_channel(&raw, targets)?
            }
            _ => {
                return Err(Error::Parse(
                    "scenario needs either \"V\" and \"z\" or \"G\" and \"sigma2\"".into(),
                ))
            }
        };
        let poly = ConstraintPolytope::new(matrix("C", &file.c)?, DVector::from_vec(file.p_hat.clone()))?;
        let utility = file.utility.map(Utility::try_from).transpose()?.unwrap_or_default();
        Self::new(model, poly, utility)
    }

    /// Normalized form (`V`, `z`) of this scenario.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            v: Some(rows(self.model.gains())),
            z: Some(self.model.noise().iter().copied().collect()),
            g: None,
            sigma2: None,
            gamma: self.model.targets().iter().copied().collect(),
            c: rows(self.poly.incidence()),
            p_hat: self.poly.budgets().iter().copied().collect(),
            utility: Some(self.utility.into()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.to_file()).expect("scenario fields are finite");
        text.push('\n');
        text
    }
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(Error::Dimension(format!("{name} is empty")));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "{name} row {i} has {} entries, row 0 has {ncols}",
            rows[i].len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::e2;

    const E2: &str = r#"{
        "V": [[0, 0.2], [0.4, 0]],
        "z": [0.1, 0.1],
        "gamma": [1, 2],
        "C": [[1, 0], [0, 1]],
        "p_hat": [1, 1]
    }"#;

    #[test]
    fn parses_normalized_form() {
        let s = Scenario::from_json(E2).unwrap();
        let (m, p) = e2();
        assert_eq!(s.model, m);
        assert_eq!(s.poly, p);
        assert_eq!(s.utility, Utility::Log);
    }

    #[test]
    fn parses_raw_form_and_utility() {
        let text = r#"{"G": [[2, 1], [1, 2]], "sigma2": [2, 2], "gamma": [1, 1],
                       "C": [[1, 1]], "p_hat": [2], "utility": {"kind": "negpow", "n": 2}}"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.model.gains()[(0, 1)], 0.5);
        assert_eq!(s.model.noise()[1], 1.0);
        assert_eq!(s.utility, Utility::NegPow(2));
    }

    #[test]
    fn round_trips() {
        let s = Scenario::from_json(E2).unwrap();
        let again = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn syntax_errors_have_position() {
        let err = Scenario::from_json("{\n  \"V\": [[0, 1],\n  oops\n}").unwrap_err();
        match err {
            Error::Parse(msg) => assert!(msg.starts_with("line 3, column"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_mixed_or_missing_channel() {
        let both = r#"{"V": [[0,1],[1,0]], "z": [1,1], "G": [[1,1],[1,1]], "sigma2": [1,1],
                       "gamma": [1,1], "C": [[1,1]], "p_hat": [1]}"#;
        assert!(matches!(Scenario::from_json(both), Err(Error::Parse(_))));
        let none = r#"{"gamma": [1,1], "C": [[1,1]], "p_hat": [1]}"#;
        assert!(matches!(Scenario::from_json(none), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_invalid_content() {
        let ragged = r#"{"V": [[0,1],[1]], "z": [1,1], "gamma": [1,1], "C": [[1,1]], "p_hat": [1]}"#;
        assert!(matches!(Scenario::from_json(ragged), Err(Error::Dimension(_))));
        let diag = r#"{"V": [[1,1],[1,0]], "z": [1,1], "gamma": [1,1], "C": [[1,1]], "p_hat": [1]}"#;
        assert!(matches!(Scenario::from_json(diag), Err(Error::InvalidModel(_))));
        let links = r#"{"V": [[0,1],[1,0]], "z": [1,1], "gamma": [1,1], "C": [[1,1,1]], "p_hat": [1]}"#;
        assert!(Scenario::from_json(links).is_err());
        let unknown = r#"{"V": [[0,1],[1,0]], "z": [1,1], "gamma": [1,1], "C": [[1,1]], "p_hat": [1], "x": 1}"#;
        assert!(matches!(Scenario::from_json(unknown), Err(Error::Parse(_))));
        let negpow0 = r#"{"V": [[0,1],[1,0]], "z": [1,1], "gamma": [1,1], "C": [[1,1]], "p_hat": [1],
                          "utility": {"kind": "negpow", "n": 0}}"#;
        assert!(Scenario::from_json(negpow0).is_err());
    }
}
