//! Built-in example metrics with named vector fields and the properties each
//! is expected to exhibit. Used by the CLI and the test suite.

use std::collections::HashMap;

use thiserror::Error;

use crate::expr::{parse, ScalarExpr};
use crate::geometry::{Chart, MetricSpec};
use crate::symmetry::{VectorFieldSpec, Verdict};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("no catalog entry named `{0}`")]
    NotFound(String),
    #[error("field `{field}` not present in entry `{entry}`")]
    NoSuchField { entry: String, field: String },
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub description: &'static str,
    pub metric: MetricSpec,
    pub fields: Vec<VectorFieldSpec>,
    /// Expected classification per field, in `fields` order.
    pub expected: Vec<Verdict>,
    pub expected_csi: Option<bool>,
    pub expected_vsi: Option<bool>,
    pub expected_transitive: Option<bool>,
    pub expected_abelian: Option<bool>,
}

impl CatalogEntry {
    pub fn field(&self, name: &str) -> Result<&VectorFieldSpec, CatalogError> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| CatalogError::NoSuchField {
                entry: self.id.into(),
                field: name.into(),
            })
    }

    pub fn expected_verdict(&self, name: &str) -> Option<Verdict> {
        self.fields
            .iter()
            .position(|f| f.name == name)
            .map(|i| self.expected[i])
    }
}

pub const IDS: [&str; 9] = [
    "intro-neutral",
    "vsi-eps0",
    "vsi-eps1",
    "neutral-csi",
    "ideg-template",
    "kundt",
    "minkowski4",
    "sphere2",
    "schwarzschild",
];

pub fn list() -> Vec<&'static str> {
    IDS.to_vec()
}

fn p(src: &str) -> ScalarExpr {
    parse(src).unwrap_or_else(|e| panic!("catalog expression `{src}`: {e}"))
}

struct Builder {
    chart: Chart,
    params: HashMap<String, f64>,
}

impl Builder {
    fn new(coords: &[&str], boxes: &[(f64, f64)], params: &[(&str, f64)]) -> Builder {
        Builder {
            chart: Chart::new(coords, boxes.to_vec()),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn locus(mut self, expr: &str) -> Builder {
        self.chart = self.chart.with_singular_locus(p(expr));
        self
    }

    fn metric(&self, upper: &[&str]) -> MetricSpec {
        MetricSpec::new(
            self.chart.clone(),
            upper.iter().map(|s| p(s)).collect(),
            self.params.clone(),
        )
        .expect("catalog metric")
    }

    fn field(&self, name: &str, comps: &[&str]) -> VectorFieldSpec {
        VectorFieldSpec::new(
            name,
            &self.chart,
            &self.params,
            comps.iter().map(|s| p(s)).collect(),
        )
        .expect("catalog field")
    }
}

use Verdict::{Killing as K, NilKillingProper as P};

fn intro_neutral() -> CatalogEntry {
    // 2du(dv + V du) + 2dU(dV + b v^4 dU), b = 1
    let b = Builder::new(
        &["u", "v", "U", "V"],
        &[(-5.0, 5.0); 4],
        &[("b", 1.0)],
    );
    CatalogEntry {
        id: "intro-neutral",
        description: "neutral-signature CSI metric with two null planes",
        metric: b.metric(&[
            "2*V", "1", "0", "0", //
            "0", "0", "0", //
            "2*b*v^4", "1", //
            "0",
        ]),
        fields: vec![
            b.field("du", &["1", "0", "0", "0"]),
            b.field("dv", &["0", "1", "0", "0"]),
            b.field("dU", &["0", "0", "1", "0"]),
            b.field("dV", &["0", "0", "0", "1"]),
        ],
        expected: vec![K, P, K, P],
        expected_csi: Some(true),
        expected_vsi: None,
        expected_transitive: Some(true),
        expected_abelian: Some(true),
    }
}

fn vsi_eps0() -> CatalogEntry {
    // 2du(dv + H du + W2 dx2) + dx1^2 + dx2^2, H = v*u + x2*u, W2 = x2
    let b = Builder::new(&["u", "v", "x1", "x2"], &[(-1.0, 1.0); 4], &[]);
    CatalogEntry {
        id: "vsi-eps0",
        description: "4D Lorentzian metric with all curvature invariants zero",
        metric: b.metric(&[
            "2*(v*u + x2*u)", "1", "0", "x2", //
            "0", "0", "0", //
            "1", "0", //
            "1",
        ]),
        fields: vec![
            b.field("du", &["1", "0", "0", "0"]),
            b.field("dv", &["0", "1", "0", "0"]),
            b.field("dx1", &["0", "0", "1", "0"]),
            b.field("dx2", &["0", "0", "0", "1"]),
        ],
        expected: vec![P, P, K, P],
        expected_csi: Some(true),
        expected_vsi: Some(true),
        expected_transitive: Some(true),
        expected_abelian: Some(true),
    }
}

fn vsi_eps1() -> CatalogEntry {
    // H = v^2/(2 x1^2) + v*u + x2*u, W1 = -2v/x1, W2 = 0; singular at x1 = 0
    let b = Builder::new(
        &["u", "v", "x1", "x2"],
        &[(-1.0, 1.0), (-1.0, 1.0), (0.5, 2.5), (-1.0, 1.0)],
        &[],
    )
    .locus("x1");
    CatalogEntry {
        id: "vsi-eps1",
        description: "4D Lorentzian metric, invariants zero, curved null congruence",
        metric: b.metric(&[
            "2*(v^2/(2*x1^2) + v*u + x2*u)", "1", "-2*v/x1", "0", //
            "0", "0", "0", //
            "1", "0", //
            "1",
        ]),
        fields: vec![
            b.field(
                "xi1",
                &[
                    "-u^2/x1",
                    "(2*x1^4 + 2*u*v*x1^2 - u^2*v^2)/x1^3",
                    "u*(2*x1^2 - u*v)/x1^2",
                    "0",
                ],
            ),
            b.field("xi2", &["1/x1", "v^2/x1^3", "v/x1^2", "0"]),
            b.field(
                "xi3",
                &[
                    "-u/x1",
                    "v*(x1^2 - u*v)/x1^3",
                    "(x1^2 - u*v)/x1^2",
                    "0",
                ],
            ),
            b.field("dx2", &["0", "0", "0", "1"]),
        ],
        expected: vec![P, P, P, P],
        expected_csi: Some(true),
        expected_vsi: Some(true),
        expected_transitive: Some(true),
        expected_abelian: Some(true),
    }
}

fn neutral_csi() -> CatalogEntry {
    // 2du(dv + (a V + H)du) + 2dU(dV + P dU),
    // P = b v^4 + v^3 G3 + v^2 G2 + v G1 + G0,
    // with a = b = 1, H = u*U, G3 = u, G2 = U, G1 = u*U, G0 = 0
    // V extends to 5 so boost orbits from unit-scale points stay admissible;
    // u, v, U stay small to keep roundoff in the degree-8 invariants low
    let b = Builder::new(
        &["u", "v", "U", "V"],
        &[(-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0), (-5.0, 5.0)],
        &[("a", 1.0), ("b", 1.0)],
    );
    CatalogEntry {
        id: "neutral-csi",
        description: "neutral-signature CSI family member with a boost symmetry",
        metric: b.metric(&[
            "2*(a*V + u*U)", "1", "0", "0", //
            "0", "0", "0", //
            "2*(b*v^4 + v^3*u + v^2*U + v*u*U)", "1", //
            "0",
        ]),
        fields: vec![
            b.field("du", &["1", "0", "0", "0"]),
            b.field("dv", &["0", "1", "0", "0"]),
            b.field("dU", &["0", "0", "1", "0"]),
            b.field("dV", &["0", "0", "0", "1"]),
            b.field("xi5", &["-u", "v", "-2*U", "2*V"]),
        ],
        expected: vec![P, P, P, P, P],
        expected_csi: Some(true),
        expected_vsi: None,
        expected_transitive: Some(true),
        expected_abelian: Some(false),
    }
}

fn ideg_template() -> CatalogEntry {
    // g = 2 du^i (dv^i + A_ij du^j + B_ia dx^a) + dx1^2 + dx2^2 with
    // A, B polynomial in v1, v2 (coefficients in the remaining coordinates)
    let b = Builder::new(
        &["u1", "u2", "v1", "v2", "x1", "x2"],
        &[(-3.0, 3.0); 6],
        &[],
    );
    CatalogEntry {
        id: "ideg-template",
        description: "6D metric whose invariants are blind to two deformation directions",
        metric: b.metric(&[
            // row u1: (u1,u1) (u1,u2) (u1,v1) (u1,v2) (u1,x1) (u1,x2)
            "2*(v1^2 + v2 + u1*v1)",
            "2*(v1*v2 + x1*v1)",
            "1",
            "0",
            "v1 + u2",
            "0",
            // row u2
            "2*(u2*v1*v2 + x2*v1^2 + v1)",
            "0",
            "1",
            "v1^2 + v2",
            "x1*v1",
            // row v1
            "0", "0", "0", "0", //
            // row v2
            "0", "0", "0", //
            // row x1
            "1", "0", //
            // row x2
            "1",
        ]),
        fields: vec![
            b.field("dv1", &["0", "0", "1", "0", "0", "0"]),
            b.field("dv2", &["0", "0", "0", "1", "0", "0"]),
        ],
        expected: vec![P, P],
        expected_csi: Some(true),
        expected_vsi: None,
        expected_transitive: None,
        expected_abelian: Some(true),
    }
}

fn kundt() -> CatalogEntry {
    // 2du(dv + H du + W1 dx1) + dx1^2 + dx2^2, H = v^2 + u*x1, W1 = v*x2
    let b = Builder::new(&["u", "v", "x1", "x2"], &[(-1.0, 1.0); 4], &[]);
    CatalogEntry {
        id: "kundt",
        description: "Lorentzian metric with a non-expanding shear-free null congruence",
        metric: b.metric(&[
            "2*(v^2 + u*x1)", "1", "v*x2", "0", //
            "0", "0", "0", //
            "1", "0", //
            "1",
        ]),
        fields: vec![b.field("ell", &["0", "1", "0", "0"])],
        expected: vec![P],
        expected_csi: None,
        expected_vsi: None,
        expected_transitive: None,
        expected_abelian: None,
    }
}

fn minkowski4() -> CatalogEntry {
    let b = Builder::new(&["t", "x", "y", "z"], &[(-1.0, 1.0); 4], &[]);
    CatalogEntry {
        id: "minkowski4",
        description: "flat Lorentzian reference metric",
        metric: b.metric(&[
            "-1", "0", "0", "0", //
            "1", "0", "0", //
            "1", "0", //
            "1",
        ]),
        fields: vec![
            b.field("dt", &["1", "0", "0", "0"]),
            b.field("boost", &["x", "t", "0", "0"]),
        ],
        expected: vec![K, K],
        expected_csi: Some(true),
        expected_vsi: Some(true),
        expected_transitive: None,
        expected_abelian: None,
    }
}

fn sphere2() -> CatalogEntry {
    let b = Builder::new(&["theta", "phi"], &[(0.4, 2.7), (0.0, 3.0)], &[])
        .locus("sin(theta)");
    CatalogEntry {
        id: "sphere2",
        description: "unit round 2-sphere reference metric",
        metric: b.metric(&["1", "0", "sin(theta)^2"]),
        fields: vec![b.field("dphi", &["0", "1"])],
        expected: vec![K],
        expected_csi: Some(true),
        expected_vsi: Some(false),
        expected_transitive: None,
        expected_abelian: None,
    }
}

fn schwarzschild() -> CatalogEntry {
    let b = Builder::new(
        &["t", "r", "theta", "phi"],
        &[(-1.0, 1.0), (2.2, 8.0), (0.4, 2.7), (0.0, 3.0)],
        &[("M", 1.0)],
    )
    .locus("(1 - 2*M/r)*r*sin(theta)");
    CatalogEntry {
        id: "schwarzschild",
        description: "spherically symmetric vacuum exterior, mass parameter M",
        metric: b.metric(&[
            "-(1 - 2*M/r)", "0", "0", "0", //
            "1/(1 - 2*M/r)", "0", "0", //
            "r^2", "0", //
            "r^2*sin(theta)^2",
        ]),
        fields: vec![
            b.field("dt", &["1", "0", "0", "0"]),
            b.field("dphi", &["0", "0", "0", "1"]),
        ],
        expected: vec![K, K],
        expected_csi: Some(false),
        expected_vsi: Some(false),
        expected_transitive: None,
        expected_abelian: None,
    }
}

pub fn get(id: &str) -> Result<CatalogEntry, CatalogError> {
    match id {
        "intro-neutral" => Ok(intro_neutral()),
        "vsi-eps0" => Ok(vsi_eps0()),
        "vsi-eps1" => Ok(vsi_eps1()),
        "neutral-csi" => Ok(neutral_csi()),
        "ideg-template" => Ok(ideg_template()),
        "kundt" => Ok(kundt()),
        "minkowski4" => Ok(minkowski4()),
        "sphere2" => Ok(sphere2()),
        "schwarzschild" => Ok(schwarzschild()),
        other => Err(CatalogError::NotFound(other.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::metric_at;
    use crate::sample::sample_points;

    #[test]
    fn unknown_entry_is_not_found() {
        assert!(matches!(get("nosuch"), Err(CatalogError::NotFound(_))));
    }

    #[test]
    fn listed_ids_all_resolve_and_sample() {
        for id in list() {
            let entry = get(id).unwrap();
            assert_eq!(entry.fields.len(), entry.expected.len(), "{id}");
            let pts = sample_points(&entry.metric, 5, 42).unwrap();
            for pt in &pts.points {
                metric_at(&entry.metric, pt, 1).unwrap_or_else(|e| panic!("{id}: {e}"));
            }
        }
    }

    #[test]
    fn vsi_eps0_fields_are_coordinate_translations() {
        let entry = get("vsi-eps0").unwrap();
        assert_eq!(entry.fields.len(), 4);
        for (i, f) in entry.fields.iter().enumerate() {
            let vals = f
                .eval_values(&entry.metric.chart, &entry.metric.params, &[0.2, 0.1, 0.4, 0.3])
                .unwrap();
            for (j, v) in vals.iter().enumerate() {
                assert_eq!(*v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn field_lookup() {
        let entry = get("neutral-csi").unwrap();
        assert!(entry.field("xi5").is_ok());
        assert!(matches!(
            entry.field("xi9"),
            Err(CatalogError::NoSuchField { .. })
        ));
        assert_eq!(entry.expected_verdict("dv"), Some(Verdict::NilKillingProper));
    }
}
