//! The manifold-spec document: a JSON object with expression strings.

use std::path::Path;

use serde::Deserialize;

use fedosov::{inverse_two_form, Chart, Connection, RationalExpr, Tensor, Variance};

use crate::error::CliError;

use Variance::{Down, Up};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub dimension: usize,
    pub coordinates: Vec<String>,
    #[serde(rename = "J")]
    pub j: Vec<Vec<String>>,
    pub connection: ConnectionSpec,
    #[serde(default)]
    pub gauge: Option<GaugeSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConnectionSpec {
    Flat,
    /// `gamma[c][a][b]` is `Gamma^c_ab`.
    Christoffel {
        gamma: Vec<Vec<Vec<String>>>,
    },
    LeviCivita {
        metric: Vec<Vec<String>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub omega_squared: String,
}

/// A parsed document: chart, symplectic form, connection and optional
/// Fedosov-gauge potential.
#[derive(Debug)]
pub struct Manifold {
    pub chart: Chart,
    pub j: Tensor,
    pub conn: Connection,
    pub omega_squared: Option<RationalExpr>,
}

impl Document {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Validates every shape, then parses the expressions.
    pub fn into_manifold(self) -> Result<Manifold, CliError> {
        let dim = self.dimension;
        if self.coordinates.len() != dim {
            return Err(CliError::Shape(format!("{} coordinate names for dimension {dim}", self.coordinates.len())));
        }
        square("J", &self.j, dim)?;
        match &self.connection {
            ConnectionSpec::Flat => {}
            ConnectionSpec::Christoffel { gamma } => {
                if gamma.len() != dim {
                    return Err(CliError::Shape(format!(
                        "connection.gamma has {} blocks, expected {dim}",
                        gamma.len()
                    )));
                }
                for (c, block) in gamma.iter().enumerate() {
                    square(&format!("connection.gamma[{c}]"), block, dim)?;
                }
            }
            ConnectionSpec::LeviCivita { metric } => square("connection.metric", metric, dim)?,
        }

        let chart = Chart::new(self.coordinates.iter().cloned())?;
        let j = matrix("J", &self.j, &chart)?;
        if let Some((idx, _)) = j.add(&j.permute(&[1, 0])).first_nonzero() {
            return Err(CliError::Shape(format!("J is not skew at [{}, {}]", idx[0] + 1, idx[1] + 1)));
        }
        inverse_two_form(&j)?;
        let conn = match &self.connection {
            ConnectionSpec::Flat => Connection::flat(dim),
            ConnectionSpec::Christoffel { gamma } => {
                let mut t = Tensor::zeros(dim, &[Up, Down, Down]);
                for (c, block) in gamma.iter().enumerate() {
                    for (a, row) in block.iter().enumerate() {
                        for (b, text) in row.iter().enumerate() {
                            t.set(&[c, a, b], expr(&format!("connection.gamma[{c}][{a}][{b}]"), text, &chart)?);
                        }
                    }
                }
                Connection::new(t)?
            }
            ConnectionSpec::LeviCivita { metric } => {
                Connection::levi_civita(&matrix("connection.metric", metric, &chart)?)?
            }
        };
        let omega_squared = match &self.gauge {
            Some(g) => Some(expr("gauge.omega_squared", &g.omega_squared, &chart)?),
            None => None,
        };
        Ok(Manifold { chart, j, conn, omega_squared })
    }
}

fn square(field: &str, rows: &[Vec<String>], dim: usize) -> Result<(), CliError> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::Shape(format!("{field} must be a {dim}x{dim} array")));
    }
    Ok(())
}

fn expr(field: &str, text: &str, chart: &Chart) -> Result<RationalExpr, CliError> {
    chart.parse(text).map_err(|source| CliError::Expr { field: field.to_owned(), source })
}

fn matrix(field: &str, rows: &[Vec<String>], chart: &Chart) -> Result<Tensor, CliError> {
    let dim = rows.len();
    let mut t = Tensor::zeros(dim, &[Down, Down]);
    for (a, row) in rows.iter().enumerate() {
        for (b, text) in row.iter().enumerate() {
            t.set(&[a, b], expr(&format!("{field}[{a}][{b}]"), text, chart)?);
        }
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn darboux() -> Vec<Vec<String>> {
        let rows = [["0", "1", "0", "0"], ["-1", "0", "0", "0"], ["0", "0", "0", "1"], ["0", "0", "-1", "0"]];
        rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect()
    }

    fn doc(j: Vec<Vec<String>>) -> Document {
        Document {
            dimension: 4,
            coordinates: ["x", "y", "u", "v"].map(String::from).to_vec(),
            j,
            connection: ConnectionSpec::Flat,
            gauge: None,
        }
    }

    #[test]
    fn parses_flat_darboux() {
        let m = doc(darboux()).into_manifold().unwrap();
        assert_eq!(m.chart.names(), ["x", "y", "u", "v"]);
        assert!(m.conn.gamma().is_zero());
    }

    #[test]
    fn rejects_bad_shapes_before_parsing() {
        let mut j = darboux();
        j[2].pop();
        j[0][0] = "((".into();
        assert!(matches!(doc(j).into_manifold(), Err(CliError::Shape(_))));
    }

    #[test]
    fn rejects_symmetric_form() {
        let mut j = darboux();
        j[1][0] = "1".into();
        let err = doc(j).into_manifold().unwrap_err();
        assert!(err.to_string().contains("not skew"), "{err}");
    }

    #[test]
    fn names_the_bad_expression() {
        let mut j = darboux();
        j[0][1] = "z + 1".into();
        j[1][0] = "-(z + 1)".into();
        let err = doc(j).into_manifold().unwrap_err();
        assert!(err.to_string().contains("J[0][1]"), "{err}");
    }

    #[test]
    fn unknown_connection_type_is_rejected() {
        let text = r#"{"dimension": 4, "coordinates": ["a","b","c","d"],
            "J": [["0","1","0","0"],["-1","0","0","0"],["0","0","0","1"],["0","0","-1","0"]],
            "connection": {"type": "cartan"}}"#;
        assert!(matches!(Document::from_json(text), Err(CliError::Json(_))));
    }
}
