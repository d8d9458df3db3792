//! Lie derivatives of the metric, the nilpotency classifier, Lie brackets,
//! structure constants, and span dimension.

use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{eval_jet, ScalarExpr};
use crate::geometry::{metric_at, Chart, GeometryError, MetricSpec, TensorValue, Variance};
use crate::jet::Jet;

/// Default Killing tolerance, relative to ‖g‖_F. The catalog's Killing fields
/// give exact zeros, so this only guards roundoff.
pub const KILLING_TOL: f64 = 1e-9;
/// Default nilpotency tolerance: |tr N^k| ≤ tol · max(1, ‖N‖_F)^k.
pub const NILPOTENCY_TOL: f64 = 1e-8;
/// Default closure tolerance for the structure-constant fit.
pub const ALGEBRA_TOL: f64 = 1e-8;
/// Relative singular-value threshold for numerical rank.
pub const SPAN_RANK_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("no admissible sample points")]
    NoAdmissiblePoints,
    #[error("algebra check needs at least 2 fields, got {0}")]
    TooFewFields(usize),
    #[error("vector field `{name}` has {got} components, chart dimension is {dim}")]
    ComponentCount {
        name: String,
        got: usize,
        dim: usize,
    },
    #[error("unbound identifiers in field `{name}`: {unbound:?}")]
    Unbound { name: String, unbound: Vec<String> },
}

/// Symbolic definition of a vector field X^a on a chart.
#[derive(Debug, Clone)]
pub struct VectorFieldSpec {
    pub name: String,
    pub components: Vec<ScalarExpr>,
}

impl VectorFieldSpec {
    pub fn new(
        name: &str,
        chart: &Chart,
        params: &HashMap<String, f64>,
        components: Vec<ScalarExpr>,
    ) -> Result<VectorFieldSpec, SymmetryError> {
        if components.len() != chart.dim() {
            return Err(SymmetryError::ComponentCount {
                name: name.into(),
                got: components.len(),
                dim: chart.dim(),
            });
        }
        for c in &components {
            let unbound = c.unbound_idents(&chart.coords, params);
            if !unbound.is_empty() {
                return Err(SymmetryError::Unbound {
                    name: name.into(),
                    unbound,
                });
            }
        }
        Ok(VectorFieldSpec {
            name: name.into(),
            components,
        })
    }

    /// Evaluate all components as jets at `p`.
    pub fn eval_jets(
        &self,
        chart: &Chart,
        params: &HashMap<String, f64>,
        p: &[f64],
        order: usize,
    ) -> Result<Vec<Jet>, GeometryError> {
        let assignment = chart.seed_assignment(p, order);
        self.components
            .iter()
            .map(|c| eval_jet(c, &assignment, params).map_err(GeometryError::from))
            .collect()
    }

    pub fn eval_values(
        &self,
        chart: &Chart,
        params: &HashMap<String, f64>,
        p: &[f64],
    ) -> Result<Vec<f64>, GeometryError> {
        Ok(self
            .eval_jets(chart, params, p, 0)?
            .iter()
            .map(Jet::value)
            .collect())
    }
}

/// (£_X g)_{ab} = X^c ∂_c g_{ab} + g_{cb} ∂_a X^c + g_{ac} ∂_b X^c.
pub fn lie_derivative_metric(
    g: &MetricSpec,
    x: &VectorFieldSpec,
    p: &[f64],
) -> Result<TensorValue, GeometryError> {
    let n = g.dim();
    let metric = metric_at(g, p, 1)?;
    let xj = x.eval_jets(&g.chart, &g.params, p, 1)?;
    let mut out = TensorValue::zeros(vec![Variance::Lower, Variance::Lower], n, p.to_vec());
    for a in 0..n {
        for b in 0..n {
            let mut val = 0.0;
            for (c, x) in xj.iter().enumerate() {
                val += x.value() * metric.g_at(a, b).first_deriv(c);
                val += metric.g_at(c, b).value() * x.first_deriv(a);
                val += metric.g_at(a, c).value() * x.first_deriv(b);
            }
            out.set(&[a, b], val);
        }
    }
    Ok(out)
}

/// Raise the first slot: N^a_b = g^{ac} n_{cb}. Checks the defining identity
/// g(N(Y), Z) = n(Y, Z) on the coordinate basis.
pub fn mixed_operator(metric: &crate::geometry::MetricJets, n_ab: &TensorValue) -> TensorValue {
    let ginv = metric.ginv_values();
    let op = n_ab.contract_slot(0, &ginv);
    // internal consistency: lowering back must reproduce n_ab
    let g = metric.g_values();
    let back = op.contract_slot(0, &g);
    let scale = n_ab.frobenius().max(1.0);
    for (a, b) in back.data.iter().zip(&n_ab.data) {
        debug_assert!(
            (a - b).abs() <= 1e-9 * scale,
            "mixed operator identity violated"
        );
    }
    op
}

/// Trace residuals |tr N^k| for k = 1..n and the nilpotency verdict.
#[derive(Debug, Clone, Serialize)]
pub struct NilpotencyResult {
    pub nilpotent: bool,
    pub residuals: Vec<f64>,
}

/// Newton-identity test: N is nilpotent iff tr N^k = 0 for all k <= n.
pub fn nilpotency_test(op: &[f64], n: usize, tol: f64) -> NilpotencyResult {
    let m = DMatrix::from_row_slice(n, n, op);
    let norm = m.norm().max(1.0);
    let mut power = m.clone();
    let mut residuals = Vec::with_capacity(n);
    let mut nilpotent = true;
    for k in 1..=n {
        let tr = power.trace().abs();
        residuals.push(tr);
        if tr > tol * norm.powi(k as i32) {
            nilpotent = false;
        }
        if k < n {
            power *= &m;
        }
    }
    NilpotencyResult {
        nilpotent,
        residuals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "KILLING")]
    Killing,
    #[serde(rename = "NIL_KILLING_PROPER")]
    NilKillingProper,
    #[serde(rename = "GENERIC")]
    Generic,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointDiagnostics {
    pub point: Vec<f64>,
    pub lie_norm: f64,
    pub metric_norm: f64,
    pub killing_pass: bool,
    pub trace_residuals: Vec<f64>,
    pub nilpotent_pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport {
    pub field: String,
    pub verdict: Verdict,
    pub killing_tol: f64,
    pub nilpotency_tol: f64,
    pub diagnostics: Vec<PointDiagnostics>,
}

/// Classify a field over the given sample points.
pub fn classify_field(
    g: &MetricSpec,
    x: &VectorFieldSpec,
    points: &[Vec<f64>],
    killing_tol: f64,
    nilpotency_tol: f64,
) -> Result<ClassificationReport, SymmetryError> {
    if points.is_empty() {
        return Err(SymmetryError::NoAdmissiblePoints);
    }
    let n = g.dim();
    let mut diagnostics = Vec::with_capacity(points.len());
    let mut all_killing = true;
    let mut all_nilpotent = true;
    for p in points {
        let metric = metric_at(g, p, 1)?;
        let lie = lie_derivative_metric(g, x, p)?;
        let g_norm = metric.g_values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let lie_norm = lie.frobenius();
        let killing_pass = lie_norm <= killing_tol * g_norm.max(1.0);
        let op = mixed_operator(&metric, &lie);
        let nil = nilpotency_test(&op.data, n, nilpotency_tol);
        all_killing &= killing_pass;
        all_nilpotent &= nil.nilpotent;
        diagnostics.push(PointDiagnostics {
            point: p.clone(),
            lie_norm,
            metric_norm: g_norm,
            killing_pass,
            trace_residuals: nil.residuals,
            nilpotent_pass: nil.nilpotent,
        });
    }
    let verdict = if all_killing {
        Verdict::Killing
    } else if all_nilpotent {
        Verdict::NilKillingProper
    } else {
        Verdict::Generic
    };
    Ok(ClassificationReport {
        field: x.name.clone(),
        verdict,
        killing_tol,
        nilpotency_tol,
        diagnostics,
    })
}

/// [X, Y]^a = X^b ∂_b Y^a − Y^b ∂_b X^a at `p`.
pub fn lie_bracket(
    chart: &Chart,
    params: &HashMap<String, f64>,
    x: &VectorFieldSpec,
    y: &VectorFieldSpec,
    p: &[f64],
) -> Result<Vec<f64>, GeometryError> {
    let n = chart.dim();
    let xj = x.eval_jets(chart, params, p, 1)?;
    let yj = y.eval_jets(chart, params, p, 1)?;
    let mut out = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            out[a] += xj[b].value() * yj[a].first_deriv(b) - yj[b].value() * xj[a].first_deriv(b);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraReport {
    pub fields: Vec<String>,
    pub closed: bool,
    /// C^k_{ij} with i, j, k indexing `fields`; antisymmetric in (i, j).
    pub structure_constants: Vec<Vec<Vec<f64>>>,
    pub max_residual: f64,
    pub residual_tol: f64,
    pub abelian: bool,
    pub every_member_nil_killing: bool,
    pub member_verdicts: Vec<Verdict>,
    /// Set when the least-squares fit is rank deficient (fields linearly
    /// dependent at the chosen points); verdicts are then inconclusive.
    pub inconclusive: bool,
}

/// Fit structure constants C^k_{ij} minimizing
/// Σ_p ‖[X_i, X_j](p) − C^k_{ij} X_k(p)‖² and check closure.
pub fn algebra_check(
    fields: &[VectorFieldSpec],
    g: &MetricSpec,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<AlgebraReport, SymmetryError> {
    let k = fields.len();
    if k < 2 {
        return Err(SymmetryError::TooFewFields(k));
    }
    if points.is_empty() {
        return Err(SymmetryError::NoAdmissiblePoints);
    }
    let n = g.dim();
    let rows = points.len() * n;

    // design matrix: column per field, rows stack the component values at all points
    let mut design = DMatrix::zeros(rows, k);
    for (pi, p) in points.iter().enumerate() {
        for (fi, f) in fields.iter().enumerate() {
            let vals = f.eval_values(&g.chart, &g.params, p)?;
            for a in 0..n {
                design[(pi * n + a, fi)] = vals[a];
            }
        }
    }
    let field_scale = design.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let svd = design.clone().svd(true, true);
    let sv_max = svd.singular_values.max();
    let sv_min = svd.singular_values.min();
    let inconclusive = sv_min <= 1e-10 * sv_max.max(1.0);

    let mut constants = vec![vec![vec![0.0; k]; k]; k];
    let mut max_residual = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let mut b = DMatrix::zeros(rows, 1);
            for (pi, p) in points.iter().enumerate() {
                let br = lie_bracket(&g.chart, &g.params, &fields[i], &fields[j], p)?;
                for a in 0..n {
                    b[(pi * n + a, 0)] = br[a];
                }
            }
            let sol = svd.solve(&b, 1e-12).expect("svd solve");
            let residual = (&design * &sol - &b).abs().max();
            max_residual = max_residual.max(residual);
            for c in 0..k {
                constants[i][j][c] = sol[(c, 0)];
                constants[j][i][c] = -sol[(c, 0)];
            }
        }
    }
    let residual_tol = tol * field_scale.max(1.0);
    let closed = max_residual <= residual_tol;
    let abelian = constants
        .iter()
        .flatten()
        .flatten()
        .all(|&c| c.abs() <= residual_tol.max(tol));

    let mut member_verdicts = Vec::with_capacity(k);
    let mut every_member_nil_killing = true;
    for f in fields {
        let report = classify_field(g, f, points, KILLING_TOL, NILPOTENCY_TOL)?;
        every_member_nil_killing &= report.verdict != Verdict::Generic;
        member_verdicts.push(report.verdict);
    }

    Ok(AlgebraReport {
        fields: fields.iter().map(|f| f.name.clone()).collect(),
        closed,
        structure_constants: constants,
        max_residual,
        residual_tol,
        abelian,
        every_member_nil_killing,
        member_verdicts,
        inconclusive,
    })
}

/// Numerical rank of the n×k field component matrix at `p`.
pub fn span_dimension(
    fields: &[VectorFieldSpec],
    chart: &Chart,
    params: &HashMap<String, f64>,
    p: &[f64],
) -> Result<usize, GeometryError> {
    let n = chart.dim();
    let mut mat = DMatrix::zeros(n, fields.len());
    for (fi, f) in fields.iter().enumerate() {
        let vals = f.eval_values(chart, params, p)?;
        for a in 0..n {
            mat[(a, fi)] = vals[a];
        }
    }
    let svd = mat.svd(false, false);
    let max = svd.singular_values.max();
    if max == 0.0 {
        return Ok(0);
    }
    Ok(svd
        .singular_values
        .iter()
        .filter(|&&s| s > SPAN_RANK_TOL * max)
        .count())
}
