//! Metric-level property checks: constant invariants, vanishing invariants,
//! and transitivity of a field set. All are sampling-based certificates: a
//! passing verdict means no counterexample was found at the sampled points.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{invariant_vector, GeometryError, MetricSpec, INVARIANT_NAMES};
use crate::symmetry::{span_dimension, VectorFieldSpec};

/// Default tolerance for the constant-invariant check.
pub const CSI_TOL: f64 = 1e-8;
/// Default tolerance for the vanishing-invariant check.
pub const VSI_TOL: f64 = 1e-8;
/// Minimum sample size for a meaningful certificate.
pub const MIN_POINTS: usize = 10;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least {MIN_POINTS} admissible points, got {0}")]
    TooFewPoints(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Property {
    #[serde(rename = "CSI")]
    Csi,
    #[serde(rename = "VSI")]
    Vsi,
    #[serde(rename = "TRANSITIVE")]
    Transitive,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub point: Vec<f64>,
    /// Invariant vector for CSI/VSI; singleton span dimension for TRANSITIVE.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    pub verdict: bool,
    pub tolerance: f64,
    pub invariant_names: Vec<String>,
    /// Per-invariant spread (CSI), max magnitude (VSI), or unused.
    pub statistics: Vec<f64>,
    pub records: Vec<PointRecord>,
    pub note: String,
}

fn invariant_records(
    g: &MetricSpec,
    points: &[Vec<f64>],
    jet_order: usize,
) -> Result<Vec<PointRecord>, AnalysisError> {
    if points.len() < MIN_POINTS {
        return Err(AnalysisError::TooFewPoints(points.len()));
    }
    points
        .iter()
        .map(|p| {
            Ok(PointRecord {
                point: p.clone(),
                values: invariant_vector(g, p, jet_order)?.values,
            })
        })
        .collect()
}

/// CSI iff for each invariant, max − min over points ≤ tol · max(1, max |I|).
pub fn csi_check(
    g: &MetricSpec,
    points: &[Vec<f64>],
    jet_order: usize,
    tol: f64,
) -> Result<PropertyReport, AnalysisError> {
    let records = invariant_records(g, points, jet_order)?;
    let k = INVARIANT_NAMES.len();
    let mut spreads = Vec::with_capacity(k);
    let mut verdict = true;
    for i in 0..k {
        let vals = records.iter().map(|r| r.values[i]);
        let max = vals.clone().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.fold(f64::INFINITY, f64::min);
        let scale = max.abs().max(min.abs()).max(1.0);
        spreads.push(max - min);
        verdict &= max - min <= tol * scale;
    }
    Ok(PropertyReport {
        property: Property::Csi,
        verdict,
        tolerance: tol,
        invariant_names: INVARIANT_NAMES.iter().map(|s| s.to_string()).collect(),
        statistics: spreads,
        records,
        note: format!(
            "no counterexample found at {} points; not a proof of constancy",
            points.len()
        ),
    })
}

/// VSI iff every |Iₖ(p)| ≤ tol at every point.
pub fn vsi_check(
    g: &MetricSpec,
    points: &[Vec<f64>],
    jet_order: usize,
    tol: f64,
) -> Result<PropertyReport, AnalysisError> {
    let records = invariant_records(g, points, jet_order)?;
    let k = INVARIANT_NAMES.len();
    let mut maxima = vec![0.0f64; k];
    for r in &records {
        for (m, v) in maxima.iter_mut().zip(&r.values) {
            *m = m.max(v.abs());
        }
    }
    let verdict = maxima.iter().all(|&m| m <= tol);
    Ok(PropertyReport {
        property: Property::Vsi,
        verdict,
        tolerance: tol,
        invariant_names: INVARIANT_NAMES.iter().map(|s| s.to_string()).collect(),
        statistics: maxima,
        records,
        note: format!(
            "no counterexample found at {} points; not a proof of vanishing",
            points.len()
        ),
    })
}

/// TRANSITIVE iff the fields span the full tangent space at every point.
pub fn transitivity_check(
    g: &MetricSpec,
    fields: &[VectorFieldSpec],
    points: &[Vec<f64>],
) -> Result<PropertyReport, AnalysisError> {
    let n = g.dim();
    let mut records = Vec::with_capacity(points.len());
    let mut verdict = true;
    for p in points {
        let dim = span_dimension(fields, &g.chart, &g.params, p)?;
        verdict &= dim == n;
        records.push(PointRecord {
            point: p.clone(),
            values: vec![dim as f64],
        });
    }
    Ok(PropertyReport {
        property: Property::Transitive,
        verdict,
        tolerance: 0.0,
        invariant_names: vec!["span_dimension".into()],
        statistics: vec![n as f64],
        records,
        note: format!("span rank checked at {} points", points.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::expr::parse;
    use crate::geometry::Chart;
    use crate::sample::sample_points;
    use std::collections::HashMap;

    #[test]
    fn minkowski_is_csi_and_vsi() {
        let entry = catalog::get("minkowski4").unwrap();
        let pts = sample_points(&entry.metric, 20, 42).unwrap();
        assert!(csi_check(&entry.metric, &pts.points, 3, CSI_TOL).unwrap().verdict);
        assert!(vsi_check(&entry.metric, &pts.points, 3, VSI_TOL).unwrap().verdict);
    }

    #[test]
    fn sphere_is_csi_but_not_vsi() {
        let entry = catalog::get("sphere2").unwrap();
        let pts = sample_points(&entry.metric, 20, 42).unwrap();
        let csi = csi_check(&entry.metric, &pts.points, 3, CSI_TOL).unwrap();
        assert!(csi.verdict, "spreads {:?}", csi.statistics);
        let vsi = vsi_check(&entry.metric, &pts.points, 3, VSI_TOL).unwrap();
        assert!(!vsi.verdict);
        assert!((vsi.statistics[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn warped_plane_is_not_csi() {
        let chart = Chart::new(&["u", "w"], vec![(-2.0, 2.0), (-2.0, 2.0)]);
        let g = crate::geometry::MetricSpec::new(
            chart,
            vec![
                parse("1").unwrap(),
                parse("0").unwrap(),
                parse("1 + u^2").unwrap(),
            ],
            HashMap::new(),
        )
        .unwrap();
        let pts = sample_points(&g, 20, 42).unwrap();
        assert!(!csi_check(&g, &pts.points, 3, CSI_TOL).unwrap().verdict);
    }

    #[test]
    fn too_few_points_is_an_error() {
        let entry = catalog::get("minkowski4").unwrap();
        let pts = sample_points(&entry.metric, 3, 42).unwrap();
        assert!(matches!(
            csi_check(&entry.metric, &pts.points, 3, CSI_TOL),
            Err(AnalysisError::TooFewPoints(_))
        ));
    }

    #[test]
    fn single_field_is_not_transitive_in_4d() {
        let entry = catalog::get("vsi-eps0").unwrap();
        let pts = sample_points(&entry.metric, 10, 42).unwrap();
        let one = vec![entry.field("du").unwrap().clone()];
        assert!(!transitivity_check(&entry.metric, &one, &pts.points)
            .unwrap()
            .verdict);
        let report =
            transitivity_check(&entry.metric, &entry.fields, &pts.points).unwrap();
        assert!(report.verdict);
    }
}
