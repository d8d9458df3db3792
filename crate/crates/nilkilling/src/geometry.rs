//! Metric evaluation, the Levi-Civita connection, curvature tensors, and the
//! fixed finite list of polynomial curvature invariants.

use std::collections::HashMap;

use thiserror::Error;

use crate::expr::{eval_jet, eval_value, EvalError, ScalarExpr};
use crate::jet::{Jet, JetError};

/// Relative threshold separating a genuinely degenerate metric from roundoff.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Names of the default invariant list, in order.
pub const INVARIANT_NAMES: [&str; 5] = [
    "ricci_scalar",
    "ricci_squared",
    "kretschmann",
    "grad_ricci_scalar_squared",
    "cov_riemann_squared",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("metric degenerate at point: |det g| = {det:.3e} below threshold {threshold:.3e}")]
    Degenerate { det: f64, threshold: f64 },
    #[error("expression evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("jet order {have} insufficient: operation needs order >= {need}")]
    InsufficientOrder { have: usize, need: usize },
    #[error("unbound identifiers in {context}: {names:?}")]
    Unbound { context: String, names: Vec<String> },
    #[error("expected {expected} metric components for dimension {dim}, got {got}")]
    ComponentCount {
        expected: usize,
        got: usize,
        dim: usize,
    },
}

impl From<JetError> for GeometryError {
    fn from(e: JetError) -> Self {
        GeometryError::Eval(EvalError::Jet(e))
    }
}

/// A coordinate chart: names, sampling box, optional excluded locus.
#[derive(Debug, Clone)]
pub struct Chart {
    pub coords: Vec<String>,
    /// Expression whose zero set is excluded from sampling.
    pub singular_locus: Option<ScalarExpr>,
    /// Per-coordinate sampling interval.
    pub sampling_box: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(coords: &[&str], sampling_box: Vec<(f64, f64)>) -> Chart {
        assert!(coords.len() >= 2, "chart dimension must be at least 2");
        assert_eq!(coords.len(), sampling_box.len());
        let names: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        let mut unique = names.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), names.len(), "coordinate names must be unique");
        Chart {
            coords: names,
            singular_locus: None,
            sampling_box,
        }
    }

    pub fn with_singular_locus(mut self, expr: ScalarExpr) -> Chart {
        self.singular_locus = Some(expr);
        self
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(&self.sampling_box)
            .all(|(&x, &(lo, hi))| x >= lo && x <= hi)
    }

    /// A point is off-locus when the locus expression is bounded away from zero.
    pub fn off_singular_locus(&self, p: &[f64], params: &HashMap<String, f64>) -> bool {
        match &self.singular_locus {
            None => true,
            Some(expr) => match eval_value(expr, &self.coords, p, params) {
                Ok(v) => v.abs() > 1e-6,
                Err(_) => false,
            },
        }
    }

    pub fn seed_assignment(&self, p: &[f64], order: usize) -> HashMap<String, Jet> {
        self.coords
            .iter()
            .cloned()
            .zip(Jet::seed(p, order))
            .collect()
    }
}

/// Symbolic definition of a symmetric metric g_ab on a chart. Only the upper
/// triangle is stored.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub chart: Chart,
    upper: Vec<ScalarExpr>,
    pub params: HashMap<String, f64>,
}

fn upper_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * n - a * (a + 1) / 2 + b
}

impl MetricSpec {
    /// `upper` is the upper triangle in row-major order:
    /// (0,0), (0,1), ..., (0,n-1), (1,1), ..., (n-1,n-1).
    pub fn new(
        chart: Chart,
        upper: Vec<ScalarExpr>,
        params: HashMap<String, f64>,
    ) -> Result<MetricSpec, GeometryError> {
        let n = chart.dim();
        let expected = n * (n + 1) / 2;
        if upper.len() != expected {
            return Err(GeometryError::ComponentCount {
                expected,
                got: upper.len(),
                dim: n,
            });
        }
        for expr in upper.iter().chain(chart.singular_locus.iter()) {
            let unbound = expr.unbound_idents(&chart.coords, &params);
            if !unbound.is_empty() {
                return Err(GeometryError::Unbound {
                    context: "metric component".into(),
                    names: unbound,
                });
            }
        }
        Ok(MetricSpec {
            chart,
            upper,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn component(&self, a: usize, b: usize) -> &ScalarExpr {
        &self.upper[upper_index(self.dim(), a, b)]
    }
}

/// Jet-valued metric data at a point: g_ab, g^ab, and det g with all partial
/// derivatives up to the requested order.
#[derive(Debug)]
pub struct MetricJets {
    pub n: usize,
    pub order: usize,
    pub point: Vec<f64>,
    pub g: Vec<Jet>,
    pub ginv: Vec<Jet>,
    pub det: Jet,
}

impl MetricJets {
    pub fn g_at(&self, a: usize, b: usize) -> &Jet {
        &self.g[a * self.n + b]
    }

    pub fn ginv_at(&self, a: usize, b: usize) -> &Jet {
        &self.ginv[a * self.n + b]
    }

    pub fn g_values(&self) -> Vec<f64> {
        self.g.iter().map(Jet::value).collect()
    }

    pub fn ginv_values(&self) -> Vec<f64> {
        self.ginv.iter().map(Jet::value).collect()
    }
}

/// Evaluate g_ab and all partials to `order` at `p`; also returns det g and
/// the inverse g^ab, computed by jet-valued Gaussian elimination with partial
/// pivoting on constant terms.
pub fn metric_at(spec: &MetricSpec, p: &[f64], order: usize) -> Result<MetricJets, GeometryError> {
    let n = spec.dim();
    assert_eq!(p.len(), n);
    let assignment = spec.chart.seed_assignment(p, order);
    let mut g = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            g.push(eval_jet(spec.component(a, b), &assignment, &spec.params)?);
        }
    }
    let (ginv, det) = invert_jet_matrix(&g, n)?;

    let det_value = det.value().abs();
    let frob: f64 = g.iter().map(|j| j.value() * j.value()).sum::<f64>().sqrt();
    let scale = (frob / (n as f64).sqrt()).powi(n as i32);
    let threshold = DEGENERACY_TOL * scale.max(f64::MIN_POSITIVE);
    if det_value < threshold {
        return Err(GeometryError::Degenerate {
            det: det_value,
            threshold,
        });
    }
    Ok(MetricJets {
        n,
        order,
        point: p.to_vec(),
        g,
        ginv,
        det,
    })
}

/// Gauss-Jordan over jets, pivoting on the magnitude of constant terms.
fn invert_jet_matrix(g: &[Jet], n: usize) -> Result<(Vec<Jet>, Jet), GeometryError> {
    let (dim, order) = (g[0].dim(), g[0].order());
    let mut a: Vec<Jet> = g.to_vec();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(if k % (n + 1) == 0 { 1.0 } else { 0.0 }, dim, order))
        .collect();
    let mut det = Jet::constant(1.0, dim, order);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| {
                a[r1 * n + col]
                    .value()
                    .abs()
                    .total_cmp(&a[r2 * n + col].value().abs())
            })
            .unwrap();
        if a[pivot_row * n + col].value() == 0.0 {
            // singular at the constant level: det is zero
            return Ok((inv, Jet::constant(0.0, dim, order)));
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(pivot_row * n + k, col * n + k);
                inv.swap(pivot_row * n + k, col * n + k);
            }
            det = det.neg();
        }
        let pivot = a[col * n + col].clone();
        det = det.mul(&pivot);
        let pivot_inv = pivot.inv()?;
        for k in 0..n {
            a[col * n + k] = a[col * n + k].mul(&pivot_inv);
            inv[col * n + k] = inv[col * n + k].mul(&pivot_inv);
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col].clone();
            if factor.value() == 0.0 && factor.coeffs().iter().all(|&c| c == 0.0) {
                continue;
            }
            for k in 0..n {
                a[row * n + k] = a[row * n + k].sub(&factor.mul(&a[col * n + k]));
                inv[row * n + k] = inv[row * n + k].sub(&factor.mul(&inv[col * n + k]));
            }
        }
    }
    Ok((inv, det))
}

/// Index variance of a tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Upper,
    Lower,
}

/// A dense tensor of values at a base point.
#[derive(Debug, Clone)]
pub struct TensorValue {
    pub variance: Vec<Variance>,
    pub dim: usize,
    pub data: Vec<f64>,
    pub point: Vec<f64>,
}

impl TensorValue {
    pub fn zeros(variance: Vec<Variance>, dim: usize, point: Vec<f64>) -> TensorValue {
        let len = dim.pow(variance.len() as u32);
        TensorValue {
            variance,
            dim,
            data: vec![0.0; len],
            point,
        }
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Contract slot `slot` with the matrix `metric` (g to lower, g^{-1} to
    /// raise), flipping the slot's variance.
    pub fn contract_slot(&self, slot: usize, metric: &[f64]) -> TensorValue {
        let n = self.dim;
        let rank = self.rank();
        let mut out = self.clone();
        out.variance[slot] = match self.variance[slot] {
            Variance::Upper => Variance::Lower,
            Variance::Lower => Variance::Upper,
        };
        let stride: usize = n.pow((rank - 1 - slot) as u32);
        for base in 0..self.data.len() / n {
            // decompose base into (prefix, suffix) around the slot axis
            let prefix = base / stride;
            let suffix = base % stride;
            let start = prefix * stride * n + suffix;
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += metric[i * n + j] * self.data[start + j * stride];
                }
                out.data[start + i * stride] = acc;
            }
        }
        out
    }
}

/// Curvature data at a point, jet-valued down to the order the inputs allow.
pub struct CurvatureData {
    pub n: usize,
    /// Γ^a_{bc}, order `m - 1`.
    pub gamma: Vec<Jet>,
    /// R^a_{bcd}, order `m - 2`.
    pub riemann: Vec<Jet>,
    /// R_{abcd}, order `m - 2`.
    pub riemann_low: Vec<Jet>,
    /// R_{bd}, order `m - 2`.
    pub ricci: Vec<Jet>,
    /// Scalar curvature jet, order `m - 2`.
    pub scalar: Jet,
}

pub fn christoffel(metric: &MetricJets) -> Result<CurvatureDataPartial, GeometryError> {
    if metric.order < 2 {
        return Err(GeometryError::InsufficientOrder {
            have: metric.order,
            need: 2,
        });
    }
    let n = metric.n;
    let m = metric.order;
    // dg[d][a][b] = ∂_d g_ab as a jet of order m-1
    let mut dg = vec![Vec::new(); n];
    for (d, row) in dg.iter_mut().enumerate() {
        row.reserve(n * n);
        for ab in 0..n * n {
            row.push(metric.g[ab].partial(d));
        }
    }
    let ginv_trunc: Vec<Jet> = metric.ginv.iter().map(|j| j.truncate(m - 1)).collect();
    let mut gamma = Vec::with_capacity(n * n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut acc: Option<Jet> = None;
                for d in 0..n {
                    let term = dg[b][d * n + c]
                        .add(&dg[c][d * n + b])
                        .sub(&dg[d][b * n + c]);
                    let term = ginv_trunc[a * n + d].mul(&term);
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s.add(&term),
                    });
                }
                gamma.push(acc.unwrap().scale(0.5));
            }
        }
    }
    Ok(CurvatureDataPartial { n, gamma })
}

/// Christoffel symbols alone; used where full curvature is not needed.
pub struct CurvatureDataPartial {
    pub n: usize,
    /// Γ^a_{bc}, jets of order `m - 1`.
    pub gamma: Vec<Jet>,
}

impl CurvatureDataPartial {
    pub fn gamma_at(&self, a: usize, b: usize, c: usize) -> &Jet {
        &self.gamma[(a * self.n + b) * self.n + c]
    }
}

pub fn curvature(metric: &MetricJets) -> Result<CurvatureData, GeometryError> {
    if metric.order < 2 {
        return Err(GeometryError::InsufficientOrder {
            have: metric.order,
            need: 2,
        });
    }
    let n = metric.n;
    let m = metric.order;
    let partial = christoffel(metric)?;
    let gamma = partial.gamma;

    // dgamma[c][(a,d,b)] = ∂_c Γ^a_{db}, order m-2
    let mut dgamma = vec![Vec::new(); n];
    for (c, row) in dgamma.iter_mut().enumerate() {
        row.extend(gamma.iter().map(|g| g.partial(c)));
    }
    let gamma_trunc: Vec<Jet> = gamma.iter().map(|j| j.truncate(m - 2)).collect();
    let gt = |a: usize, b: usize, c: usize| &gamma_trunc[(a * n + b) * n + c];

    let mut riemann = Vec::with_capacity(n * n * n * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    // R^a_{bcd} = ∂_c Γ^a_{db} - ∂_d Γ^a_{cb} + Γ^a_{ce}Γ^e_{db} - Γ^a_{de}Γ^e_{cb}
                    let mut val =
                        dgamma[c][(a * n + d) * n + b].sub(&dgamma[d][(a * n + c) * n + b]);
                    for e in 0..n {
                        val = val
                            .add(&gt(a, c, e).mul(gt(e, d, b)))
                            .sub(&gt(a, d, e).mul(gt(e, c, b)));
                    }
                    riemann.push(val);
                }
            }
        }
    }

    let g_trunc: Vec<Jet> = metric.g.iter().map(|j| j.truncate(m - 2)).collect();
    let ginv_trunc: Vec<Jet> = metric.ginv.iter().map(|j| j.truncate(m - 2)).collect();
    let mut riemann_low = Vec::with_capacity(n * n * n * n);
    for a in 0..n {
        for bcd in 0..n * n * n {
            let mut acc: Option<Jet> = None;
            for e in 0..n {
                let term = g_trunc[a * n + e].mul(&riemann[e * n * n * n + bcd]);
                acc = Some(match acc {
                    None => term,
                    Some(s) => s.add(&term),
                });
            }
            riemann_low.push(acc.unwrap());
        }
    }

    let mut ricci = Vec::with_capacity(n * n);
    for b in 0..n {
        for d in 0..n {
            let mut acc: Option<Jet> = None;
            for a in 0..n {
                let term = &riemann[((a * n + b) * n + a) * n + d];
                acc = Some(match acc {
                    None => term.clone(),
                    Some(s) => s.add(term),
                });
            }
            ricci.push(acc.unwrap());
        }
    }

    let mut scalar: Option<Jet> = None;
    for b in 0..n {
        for d in 0..n {
            let term = ginv_trunc[b * n + d].mul(&ricci[b * n + d]);
            scalar = Some(match scalar {
                None => term,
                Some(s) => s.add(&term),
            });
        }
    }

    Ok(CurvatureData {
        n,
        gamma,
        riemann,
        riemann_low,
        ricci,
        scalar: scalar.unwrap(),
    })
}

impl CurvatureData {
    pub fn riemann_at(&self, a: usize, b: usize, c: usize, d: usize) -> &Jet {
        &self.riemann[((a * self.n + b) * self.n + c) * self.n + d]
    }

    pub fn riemann_low_at(&self, a: usize, b: usize, c: usize, d: usize) -> &Jet {
        &self.riemann_low[((a * self.n + b) * self.n + c) * self.n + d]
    }
}

/// ∇_e R_{abcd} values: index order (e, a, b, c, d). Needs metric order >= 3.
pub fn cov_deriv_riemann(
    metric: &MetricJets,
    curv: &CurvatureData,
) -> Result<Vec<f64>, GeometryError> {
    if metric.order < 3 {
        return Err(GeometryError::InsufficientOrder {
            have: metric.order,
            need: 3,
        });
    }
    let n = metric.n;
    let rlow = |a: usize, b: usize, c: usize, d: usize| {
        curv.riemann_low[((a * n + b) * n + c) * n + d].value()
    };
    let gam = |a: usize, b: usize, c: usize| curv.gamma[(a * n + b) * n + c].value();
    let mut out = vec![0.0; n * n * n * n * n];
    let mut idx = 0;
    for e in 0..n {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut val =
                            curv.riemann_low[((a * n + b) * n + c) * n + d].first_deriv(e);
                        for f in 0..n {
                            val -= gam(f, e, a) * rlow(f, b, c, d);
                            val -= gam(f, e, b) * rlow(a, f, c, d);
                            val -= gam(f, e, c) * rlow(a, b, f, d);
                            val -= gam(f, e, d) * rlow(a, b, c, f);
                        }
                        out[idx] = val;
                        idx += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The value of the default invariant list at a point.
#[derive(Debug, Clone)]
pub struct InvariantVector {
    pub names: Vec<&'static str>,
    pub values: Vec<f64>,
    pub point: Vec<f64>,
}

impl InvariantVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn raise_slot(data: &[f64], rank: usize, slot: usize, n: usize, ginv: &[f64]) -> Vec<f64> {
    let stride = n.pow((rank - 1 - slot) as u32);
    let mut out = vec![0.0; data.len()];
    for base in 0..data.len() / n {
        let prefix = base / stride;
        let suffix = base % stride;
        let start = prefix * stride * n + suffix;
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += ginv[i * n + j] * data[start + j * stride];
            }
            out[start + i * stride] = acc;
        }
    }
    out
}

/// Compute the default five invariants at `p` with jets of the given order
/// (needs order >= 3).
pub fn invariant_vector(
    spec: &MetricSpec,
    p: &[f64],
    order: usize,
) -> Result<InvariantVector, GeometryError> {
    if order < 3 {
        return Err(GeometryError::InsufficientOrder {
            have: order,
            need: 3,
        });
    }
    let metric = metric_at(spec, p, order)?;
    let curv = curvature(&metric)?;
    let n = metric.n;
    let ginv: Vec<f64> = metric.ginv_values();

    let i1 = curv.scalar.value();

    let ric: Vec<f64> = curv.ricci.iter().map(Jet::value).collect();
    let mut i2 = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    i2 += ginv[a * n + c] * ginv[b * n + d] * ric[a * n + b] * ric[c * n + d];
                }
            }
        }
    }

    let rlow: Vec<f64> = curv.riemann_low.iter().map(Jet::value).collect();
    let mut rup = rlow.clone();
    for slot in 0..4 {
        rup = raise_slot(&rup, 4, slot, n, &ginv);
    }
    let i3: f64 = rlow.iter().zip(&rup).map(|(a, b)| a * b).sum();

    let mut i4 = 0.0;
    for a in 0..n {
        for b in 0..n {
            i4 += ginv[a * n + b] * curv.scalar.first_deriv(a) * curv.scalar.first_deriv(b);
        }
    }

    let nab = cov_deriv_riemann(&metric, &curv)?;
    let mut nab_up = nab.clone();
    for slot in 0..5 {
        nab_up = raise_slot(&nab_up, 5, slot, n, &ginv);
    }
    let i5: f64 = nab.iter().zip(&nab_up).map(|(a, b)| a * b).sum();

    Ok(InvariantVector {
        names: INVARIANT_NAMES.to_vec(),
        values: vec![i1, i2, i3, i4, i5],
        point: p.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn euclidean2() -> MetricSpec {
        let chart = Chart::new(&["u", "w"], vec![(-1.0, 1.0), (-1.0, 1.0)]);
        MetricSpec::new(
            chart,
            vec![parse("1").unwrap(), parse("0").unwrap(), parse("1").unwrap()],
            HashMap::new(),
        )
        .unwrap()
    }

    fn sphere2() -> MetricSpec {
        let chart = Chart::new(&["theta", "phi"], vec![(0.4, 2.7), (0.0, 3.0)])
            .with_singular_locus(parse("sin(theta)").unwrap());
        MetricSpec::new(
            chart,
            vec![
                parse("1").unwrap(),
                parse("0").unwrap(),
                parse("sin(theta)^2").unwrap(),
            ],
            HashMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn euclidean_identity_metric() {
        let m = metric_at(&euclidean2(), &[0.3, -0.8], 3).unwrap();
        assert_eq!(m.g_at(0, 0).value(), 1.0);
        assert_eq!(m.g_at(0, 1).value(), 0.0);
        assert!(m.g_at(0, 0).coeffs()[1..].iter().all(|&c| c == 0.0));
        assert_eq!(m.ginv_at(0, 0).value(), 1.0);
        assert!((m.det.value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn intro_metric_block_inversion() {
        // 2du(dv + V du) + 2dU(dV + b v^4 dU) at (u,v,U,V) = (0,1,0,0), b = 1
        let chart = Chart::new(&["u", "v", "U", "V"], vec![(-5.0, 5.0); 4]);
        let upper = vec![
            parse("2*V").unwrap(),      // uu
            parse("1").unwrap(),        // uv
            parse("0").unwrap(),        // uU
            parse("0").unwrap(),        // uV
            parse("0").unwrap(),        // vv
            parse("0").unwrap(),        // vU
            parse("0").unwrap(),        // vV
            parse("2*b*v^4").unwrap(),  // UU
            parse("1").unwrap(),        // UV
            parse("0").unwrap(),        // VV
        ];
        let spec = MetricSpec::new(chart, upper, HashMap::from([("b".into(), 1.0)])).unwrap();
        let m = metric_at(&spec, &[0.0, 1.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(m.g_at(0, 1).value(), 1.0);
        assert_eq!(m.g_at(0, 0).value(), 0.0);
        assert_eq!(m.g_at(2, 3).value(), 1.0);
        assert_eq!(m.g_at(2, 2).value(), 2.0);
        assert!((m.ginv_at(1, 1).value() - 0.0).abs() < 1e-14);
        assert!((m.ginv_at(0, 1).value() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn vsi_eps1_pole_is_singular() {
        let chart = Chart::new(
            &["u", "v", "x1", "x2"],
            vec![(-1.0, 1.0), (-1.0, 1.0), (0.5, 2.5), (-1.0, 1.0)],
        );
        let upper = vec![
            parse("v^2/(x1^2) + 2*v*u + 2*x2*u").unwrap(), // uu = 2H
            parse("1").unwrap(),                           // uv
            parse("-2*v/x1").unwrap(),                     // u x1
            parse("0").unwrap(),                           // u x2
            parse("0").unwrap(),
            parse("0").unwrap(),
            parse("0").unwrap(),
            parse("1").unwrap(),
            parse("0").unwrap(),
            parse("1").unwrap(),
        ];
        let spec = MetricSpec::new(chart, upper, HashMap::new()).unwrap();
        let err = metric_at(&spec, &[0.2, 0.3, 0.0, 0.1], 2).unwrap_err();
        assert!(matches!(
            err,
            GeometryError::Eval(EvalError::Jet(JetError::SingularPoint))
        ));
    }

    #[test]
    fn degenerate_metric_detected() {
        let chart = Chart::new(&["u", "w"], vec![(-1.0, 1.0), (-1.0, 1.0)]);
        let spec = MetricSpec::new(
            chart,
            vec![parse("1").unwrap(), parse("0").unwrap(), parse("u").unwrap()],
            HashMap::new(),
        )
        .unwrap();
        assert!(matches!(
            metric_at(&spec, &[0.0, 0.0], 2),
            Err(GeometryError::Degenerate { .. })
        ));
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let m = metric_at(&euclidean2(), &[0.3, -0.8], 3).unwrap();
        let c = christoffel(&m).unwrap();
        for j in &c.gamma {
            assert!(j.value().abs() < 1e-15);
        }
    }

    #[test]
    fn sphere_christoffel_closed_form() {
        // at theta = pi/3: Γ^θ_{φφ} = -sinθcosθ = -√3/4, Γ^φ_{θφ} = cotθ = 1/√3
        let theta = std::f64::consts::PI / 3.0;
        let m = metric_at(&sphere2(), &[theta, 1.0], 3).unwrap();
        let c = christoffel(&m).unwrap();
        let exp_tpp = -(3.0f64).sqrt() / 4.0;
        let exp_ptp = 1.0 / (3.0f64).sqrt();
        assert!((c.gamma_at(0, 1, 1).value() - exp_tpp).abs() < 1e-12);
        assert!((c.gamma_at(1, 0, 1).value() - exp_ptp).abs() < 1e-12);
        // symmetry in the lower pair
        for a in 0..2 {
            for b in 0..2 {
                for cc in 0..2 {
                    assert!(
                        (c.gamma_at(a, b, cc).value() - c.gamma_at(a, cc, b).value()).abs()
                            < 1e-13
                    );
                }
            }
        }
    }

    #[test]
    fn sphere_invariants_constant_curvature() {
        // R_{abcd} = K(g_ac g_bd - g_ad g_bc) with K = 1:
        // (R, R_ab R^ab, Kretschmann, |∇R|^2, |∇Riem|^2) = (2, 2, 4, 0, 0)
        for p in [[0.7, 0.5], [1.9, 2.0]] {
            let iv = invariant_vector(&sphere2(), &p, 3).unwrap();
            let expected = [2.0, 2.0, 4.0, 0.0, 0.0];
            for (v, e) in iv.values.iter().zip(expected) {
                assert!((v - e).abs() < 1e-9, "{:?} vs {:?}", iv.values, expected);
            }
        }
    }

    #[test]
    fn minkowski_invariants_vanish() {
        let chart = Chart::new(&["t", "x", "y", "z"], vec![(-1.0, 1.0); 4]);
        let mut upper = vec![parse("0").unwrap(); 10];
        upper[0] = parse("-1").unwrap();
        upper[4] = parse("1").unwrap();
        upper[7] = parse("1").unwrap();
        upper[9] = parse("1").unwrap();
        let spec = MetricSpec::new(chart, upper, HashMap::new()).unwrap();
        let iv = invariant_vector(&spec, &[0.1, 0.2, 0.3, 0.4], 3).unwrap();
        for v in iv.values {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn insufficient_order_reported() {
        let err = invariant_vector(&euclidean2(), &[0.0, 0.0], 2).unwrap_err();
        assert!(matches!(err, GeometryError::InsufficientOrder { need: 3, .. }));
    }

    #[test]
    fn tensor_raise_lower_roundtrip() {
        let m = metric_at(&sphere2(), &[1.1, 0.4], 2).unwrap();
        let g = m.g_values();
        let ginv = m.ginv_values();
        let mut t = TensorValue::zeros(
            vec![Variance::Lower, Variance::Lower],
            2,
            vec![1.1, 0.4],
        );
        t.set(&[0, 0], 1.3);
        t.set(&[0, 1], -0.4);
        t.set(&[1, 0], 0.2);
        t.set(&[1, 1], 0.9);
        let back = t.contract_slot(0, &ginv).contract_slot(0, &g);
        for (a, b) in back.data.iter().zip(&t.data) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(back.variance, t.variance);
    }
}
