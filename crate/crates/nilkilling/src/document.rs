//! JSON metric-definition documents: schema, validation, and conversion into
//! the in-memory metric and field types.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, ScalarExpr};
use crate::geometry::{Chart, GeometryError, MetricSpec};
use crate::symmetry::{SymmetryError, VectorFieldSpec};

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dimension is {dimension} but {n_coords} coordinates are listed")]
    DimensionMismatch { dimension: usize, n_coords: usize },
    #[error("duplicate coordinate `{0}`")]
    DuplicateCoordinate(String),
    #[error("metric key `{0}` is not of the form \"i,j\" with 0 <= i <= j < dimension")]
    BadMetricKey(String),
    #[error("bad expression in {context}: {message}")]
    BadExpression { context: String, message: String },
    #[error("sampling box missing coordinate `{0}`")]
    MissingBox(String),
    #[error("sampling box for `{coord}` is empty: [{lo}, {hi}]")]
    EmptyBox { coord: String, lo: f64, hi: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldDoc {
    pub name: String,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplingDoc {
    #[serde(rename = "box")]
    pub boxes: HashMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude: Option<String>,
}

/// On-disk description of a metric, its fields, and how to sample it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricDocument {
    pub dimension: usize,
    pub coordinates: Vec<String>,
    #[serde(default)]
    pub parameters: HashMap<String, f64>,
    pub metric: HashMap<String, String>,
    #[serde(default)]
    pub vector_fields: Vec<FieldDoc>,
    pub sampling: SamplingDoc,
    #[serde(default)]
    pub tolerances: HashMap<String, f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// A validated document, ready for computation.
#[derive(Debug, Clone)]
pub struct LoadedMetric {
    pub metric: MetricSpec,
    pub fields: Vec<VectorFieldSpec>,
    pub tolerances: HashMap<String, f64>,
    pub seed: u64,
}

fn parse_key(key: &str, n: usize) -> Option<(usize, usize)> {
    let (a, b) = key.split_once(',')?;
    let i: usize = a.trim().parse().ok()?;
    let j: usize = b.trim().parse().ok()?;
    if i <= j && j < n {
        Some((i, j))
    } else {
        None
    }
}

fn parse_in(src: &str, context: String) -> Result<ScalarExpr, DocumentError> {
    parse(src).map_err(|e| DocumentError::BadExpression {
        context,
        message: e.to_string(),
    })
}

impl MetricDocument {
    #[allow(clippy::should_implement_trait)] // error type differs from FromStr's contract
    pub fn from_str(text: &str) -> Result<MetricDocument, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &std::path::Path) -> Result<MetricDocument, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        MetricDocument::from_str(&text)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
    }

    /// Validate every schema invariant and build the computation types.
    pub fn build(&self) -> Result<LoadedMetric, DocumentError> {
        let n = self.dimension;
        if self.coordinates.len() != n {
            return Err(DocumentError::DimensionMismatch {
                dimension: n,
                n_coords: self.coordinates.len(),
            });
        }
        for (i, c) in self.coordinates.iter().enumerate() {
            if self.coordinates[..i].contains(c) {
                return Err(DocumentError::DuplicateCoordinate(c.clone()));
            }
        }

        let mut boxes = Vec::with_capacity(n);
        for c in &self.coordinates {
            let [lo, hi] = self
                .sampling
                .boxes
                .get(c)
                .ok_or_else(|| DocumentError::MissingBox(c.clone()))?;
            if lo >= hi {
                return Err(DocumentError::EmptyBox {
                    coord: c.clone(),
                    lo: *lo,
                    hi: *hi,
                });
            }
            boxes.push((*lo, *hi));
        }
        let coord_refs: Vec<&str> = self.coordinates.iter().map(String::as_str).collect();
        let mut chart = Chart::new(&coord_refs, boxes);
        if let Some(excl) = &self.sampling.exclude {
            chart = chart.with_singular_locus(parse_in(excl, "sampling.exclude".into())?);
        }

        // pairs the document does not name stay zero
        let zero = parse("0").expect("literal");
        let mut upper = vec![zero; n * (n + 1) / 2];
        for (key, src) in &self.metric {
            let (i, j) =
                parse_key(key, n).ok_or_else(|| DocumentError::BadMetricKey(key.clone()))?;
            let flat = i * n - i * (i + 1) / 2 + j;
            upper[flat] = parse_in(src, format!("metric[\"{key}\"]"))?;
        }
        let metric = MetricSpec::new(chart, upper, self.parameters.clone())?;

        let mut fields = Vec::with_capacity(self.vector_fields.len());
        for fd in &self.vector_fields {
            let comps = fd
                .components
                .iter()
                .enumerate()
                .map(|(k, src)| parse_in(src, format!("vector_fields[{}][{k}]", fd.name)))
                .collect::<Result<Vec<_>, _>>()?;
            fields.push(VectorFieldSpec::new(
                &fd.name,
                &metric.chart,
                &metric.params,
                comps,
            )?);
        }

        Ok(LoadedMetric {
            metric,
            fields,
            tolerances: self.tolerances.clone(),
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_doc() -> String {
        r#"{
            "dimension": 2,
            "coordinates": ["u", "w"],
            "parameters": {"k": 2.0},
            "metric": {"0,0": "1", "1,1": "1 + k*u^2"},
            "vector_fields": [{"name": "dw", "components": ["0", "1"]}],
            "sampling": {"box": {"u": [-1.0, 1.0], "w": [-1.0, 1.0]}},
            "seed": 7
        }"#
        .to_string()
    }

    #[test]
    fn round_trip_and_build() {
        let doc = MetricDocument::from_str(&sample_doc()).unwrap();
        let loaded = doc.build().unwrap();
        assert_eq!(loaded.metric.dim(), 2);
        assert_eq!(loaded.fields.len(), 1);
        assert_eq!(loaded.seed, 7);
        // omitted off-diagonal defaults to zero
        let m = crate::geometry::metric_at(&loaded.metric, &[0.5, 0.0], 0).unwrap();
        assert_eq!(m.g_at(0, 1).value(), 0.0);
        assert_eq!(m.g_at(1, 1).value(), 1.5);
    }

    #[test]
    fn serde_round_trip_preserves_document() {
        let doc = MetricDocument::from_str(&sample_doc()).unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        let again = MetricDocument::from_str(&text).unwrap();
        assert_eq!(again.dimension, doc.dimension);
        assert_eq!(again.metric, doc.metric);
    }

    #[test]
    fn missing_coordinate_box_is_rejected() {
        let text = sample_doc().replace("\"w\": [-1.0, 1.0]", "\"z\": [-1.0, 1.0]");
        let doc = MetricDocument::from_str(&text).unwrap();
        assert!(matches!(doc.build(), Err(DocumentError::MissingBox(_))));
    }

    #[test]
    fn bad_metric_key_is_rejected() {
        let text = sample_doc().replace("\"1,1\"", "\"1,5\"");
        let doc = MetricDocument::from_str(&text).unwrap();
        assert!(matches!(doc.build(), Err(DocumentError::BadMetricKey(_))));
    }

    #[test]
    fn unparsable_expression_is_rejected() {
        let text = sample_doc().replace("1 + k*u^2", "1 +");
        let doc = MetricDocument::from_str(&text).unwrap();
        assert!(matches!(
            doc.build(),
            Err(DocumentError::BadExpression { .. })
        ));
    }

    #[test]
    fn unbound_identifier_is_rejected() {
        let text = sample_doc().replace("1 + k*u^2", "1 + q");
        let doc = MetricDocument::from_str(&text).unwrap();
        assert!(doc.build().is_err());
    }

    #[test]
    fn unknown_top_level_field_is_rejected() {
        let text = sample_doc().replace("\"seed\": 7", "\"seed\": 7, \"extra\": 1");
        assert!(MetricDocument::from_str(&text).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let text = sample_doc().replace("\"dimension\": 2", "\"dimension\": 3");
        let doc = MetricDocument::from_str(&text).unwrap();
        assert!(matches!(
            doc.build(),
            Err(DocumentError::DimensionMismatch { .. })
        ));
    }
}
