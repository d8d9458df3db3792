//! Truncated multivariate Taylor (jet) arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `c_α = ∂^α f / α!` of a scalar
//! function at a point, for every multi-index `α` with `|α| ≤ m`. All
//! arithmetic truncates at total degree `m`, so the coefficients of a
//! compound expression are exact derivatives of the composition, with no
//! finite differencing anywhere.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    /// Division by a jet whose constant term is zero.
    #[error("singular point: division by a jet with zero constant term")]
    SingularPoint,
    /// log/sqrt of a jet with a nonpositive constant term.
    #[error("domain error: {func} of nonpositive constant term {value}")]
    Domain { func: &'static str, value: f64 },
    /// The requested operation needs more derivative orders than the jet carries.
    #[error("jet order {have} insufficient, operation needs order >= {need}")]
    InsufficientOrder { have: usize, need: usize },
}

/// Multi-index bookkeeping for a given (dimension, order) pair.
///
/// Exponent tuples are stored in graded lexicographic order, so position 0 is
/// the constant term, positions `1..=n` are the first-order indices, and
/// truncation to a lower order is a prefix of the coefficient vector.
struct IndexTable {
    n: usize,
    m: usize,
    exponents: Vec<Vec<u8>>,
    /// `prod[i * len + j]` is the position of `α_i + α_j`, or `u32::MAX` when
    /// the sum exceeds the order.
    prod: Vec<u32>,
    first_order: Vec<usize>,
}

impl IndexTable {
    fn build(n: usize, m: usize) -> Self {
        let mut exponents: Vec<Vec<u8>> = Vec::new();
        let mut stack = vec![0u8; n];
        for degree in 0..=m {
            gen_degree(&mut exponents, &mut stack, n, 0, degree as u8);
        }
        let position: HashMap<Vec<u8>, usize> = exponents
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let len = exponents.len();
        let mut prod = vec![u32::MAX; len * len];
        for i in 0..len {
            for j in 0..len {
                let sum: Vec<u8> = exponents[i]
                    .iter()
                    .zip(&exponents[j])
                    .map(|(a, b)| a + b)
                    .collect();
                if sum.iter().map(|&e| e as usize).sum::<usize>() <= m {
                    prod[i * len + j] = position[&sum] as u32;
                }
            }
        }
        let first_order = (0..n)
            .map(|i| {
                let mut e = vec![0u8; n];
                if m >= 1 {
                    e[i] = 1;
                    position[&e]
                } else {
                    usize::MAX
                }
            })
            .collect();
        IndexTable {
            n,
            m,
            exponents,
            prod,
            first_order,
        }
    }
}

fn gen_degree(out: &mut Vec<Vec<u8>>, stack: &mut Vec<u8>, n: usize, pos: usize, left: u8) {
    if pos == n {
        if left == 0 {
            out.push(stack.clone());
        }
        return;
    }
    // lexicographic within a degree: highest exponent on the first coordinate first
    for e in (0..=left).rev() {
        stack[pos] = e;
        gen_degree(out, stack, n, pos + 1, left - e);
    }
    stack[pos] = 0;
}

type TableCache = HashMap<(usize, usize), Arc<IndexTable>>;

static TABLES: Lazy<Mutex<TableCache>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn table(n: usize, m: usize) -> Arc<IndexTable> {
    let mut cache = TABLES.lock().unwrap();
    cache
        .entry((n, m))
        .or_insert_with(|| Arc::new(IndexTable::build(n, m)))
        .clone()
}

/// A truncated multivariate Taylor expansion of a scalar at a point.
#[derive(Clone)]
pub struct Jet {
    table: Arc<IndexTable>,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet")
            .field("n", &self.table.n)
            .field("m", &self.table.m)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl Jet {
    pub fn constant(value: f64, n: usize, m: usize) -> Jet {
        let table = table(n, m);
        let mut coeffs = vec![0.0; table.exponents.len()];
        coeffs[0] = value;
        Jet { table, coeffs }
    }

    /// The coordinate jets at `point`: jet `i` has constant term `point[i]`
    /// and a unit coefficient on `e_i`.
    pub fn seed(point: &[f64], m: usize) -> Vec<Jet> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut jet = Jet::constant(v, n, m);
                if m >= 1 {
                    let pos = jet.table.first_order[i];
                    jet.coeffs[pos] = 1.0;
                }
                jet
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.table.n
    }

    pub fn order(&self) -> usize {
        self.table.m
    }

    /// The constant (value) term.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// First-order coefficient `∂f/∂x_i`.
    pub fn first_deriv(&self, i: usize) -> f64 {
        assert!(self.table.m >= 1, "order-0 jet has no first derivatives");
        self.coeffs[self.table.first_order[i]]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient for the given exponent tuple (i.e. `∂^α f / α!`),
    /// zero when `|α| > m`.
    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        assert_eq!(alpha.len(), self.table.n);
        self.table
            .exponents
            .iter()
            .position(|e| e == alpha)
            .map_or(0.0, |i| self.coeffs[i])
    }

    /// Truncate to a lower order. Graded storage makes this a prefix copy.
    pub fn truncate(&self, m: usize) -> Jet {
        assert!(m <= self.table.m);
        if m == self.table.m {
            return self.clone();
        }
        let table = table(self.table.n, m);
        let coeffs = self.coeffs[..table.exponents.len()].to_vec();
        Jet { table, coeffs }
    }

    /// Partial derivative with respect to coordinate `i`; the result is a jet
    /// of order `m - 1`.
    pub fn partial(&self, i: usize) -> Jet {
        assert!(self.table.m >= 1, "cannot differentiate an order-0 jet");
        let n = self.table.n;
        let table = table(n, self.table.m - 1);
        let mut coeffs = vec![0.0; table.exponents.len()];
        for (pos, beta) in table.exponents.iter().enumerate() {
            let mut shifted = beta.clone();
            shifted[i] += 1;
            let src = self
                .table
                .exponents
                .iter()
                .position(|e| e == &shifted)
                .expect("shifted index within source order");
            coeffs[pos] = self.coeffs[src] * f64::from(shifted[i]);
        }
        Jet { table, coeffs }
    }

    fn align(&self, other: &Jet) -> (Jet, Jet) {
        assert_eq!(self.table.n, other.table.n, "jet dimension mismatch");
        let m = self.table.m.min(other.table.m);
        (self.truncate(m), other.truncate(m))
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let (mut a, b) = self.align(other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += y;
        }
        a
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let (mut a, b) = self.align(other);
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x -= y;
        }
        a
    }

    pub fn neg(&self) -> Jet {
        let mut out = self.clone();
        for x in &mut out.coeffs {
            *x = -*x;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = self.clone();
        for x in &mut out.coeffs {
            *x *= s;
        }
        out
    }

    /// Cauchy product over multi-indices, truncated at the common order.
    pub fn mul(&self, other: &Jet) -> Jet {
        let (a, b) = self.align(other);
        let table = a.table.clone();
        let len = table.exponents.len();
        let mut coeffs = vec![0.0; len];
        for i in 0..len {
            let ai = a.coeffs[i];
            if ai == 0.0 {
                continue;
            }
            let row = &table.prod[i * len..(i + 1) * len];
            for (j, &k) in row.iter().enumerate() {
                if k != u32::MAX {
                    coeffs[k as usize] += ai * b.coeffs[j];
                }
            }
        }
        Jet { table, coeffs }
    }

    /// Evaluate a univariate power series `Σ d_k h^k` on the nilpotent part
    /// `h = self - value` by Horner's rule.
    fn compose_series(&self, coeffs: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = Jet::constant(coeffs[coeffs.len() - 1], self.table.n, self.table.m);
        for &d in coeffs.iter().rev().skip(1) {
            acc = acc.mul(&h);
            acc.coeffs[0] += d;
        }
        acc
    }

    pub fn inv(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c == 0.0 {
            return Err(JetError::SingularPoint);
        }
        // 1/(c+h) = (1/c) Σ (-h/c)^k
        let m = self.table.m;
        let mut series = Vec::with_capacity(m + 1);
        let mut d = 1.0 / c;
        for _ in 0..=m {
            series.push(d);
            d *= -1.0 / c;
        }
        Ok(self.compose_series(&series))
    }

    pub fn div(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow_int(&self, exp: i32) -> Result<Jet, JetError> {
        if exp < 0 {
            return self.inv()?.pow_int(-exp);
        }
        let mut acc = Jet::constant(1.0, self.table.n, self.table.m);
        for _ in 0..exp {
            acc = acc.mul(self);
        }
        Ok(acc)
    }

    pub fn exp(&self) -> Jet {
        let c = self.value().exp();
        let m = self.table.m;
        let mut series = Vec::with_capacity(m + 1);
        let mut d = c;
        for k in 0..=m {
            series.push(d);
            d /= (k + 1) as f64;
        }
        self.compose_series(&series)
    }

    pub fn sin(&self) -> Jet {
        self.trig(true)
    }

    pub fn cos(&self) -> Jet {
        self.trig(false)
    }

    fn trig(&self, sin: bool) -> Jet {
        let c = self.value();
        let m = self.table.m;
        let cycle = if sin {
            [c.sin(), c.cos(), -c.sin(), -c.cos()]
        } else {
            [c.cos(), -c.sin(), -c.cos(), c.sin()]
        };
        let mut series = Vec::with_capacity(m + 1);
        let mut fact = 1.0;
        for k in 0..=m {
            if k > 0 {
                fact *= k as f64;
            }
            series.push(cycle[k % 4] / fact);
        }
        self.compose_series(&series)
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::Domain {
                func: "log",
                value: c,
            });
        }
        let m = self.table.m;
        let mut series = Vec::with_capacity(m + 1);
        series.push(c.ln());
        for k in 1..=m {
            // d_k = (-1)^{k-1} / (k c^k)
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series.push(sign / (k as f64 * c.powi(k as i32)));
        }
        Ok(self.compose_series(&series))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::Domain {
                func: "sqrt",
                value: c,
            });
        }
        let m = self.table.m;
        // binomial series: d_k = C(1/2, k) c^{1/2 - k}
        let mut series = Vec::with_capacity(m + 1);
        let mut binom = 1.0;
        for k in 0..=m {
            if k > 0 {
                binom *= (0.5 - (k - 1) as f64) / k as f64;
            }
            series.push(binom * c.powf(0.5 - k as f64));
        }
        Ok(self.compose_series(&series))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn seed_unit_diagonal() {
        let jets = Jet::seed(&[3.0, 4.0], 1);
        assert_eq!(jets[0].value(), 3.0);
        assert_eq!(jets[0].first_deriv(0), 1.0);
        assert_eq!(jets[0].first_deriv(1), 0.0);
        assert_eq!(jets[1].value(), 4.0);
        assert_eq!(jets[1].first_deriv(0), 0.0);
        assert_eq!(jets[1].first_deriv(1), 1.0);
    }

    #[test]
    fn seed_order_zero_is_bare_values() {
        let jets = Jet::seed(&[1.5, -2.0], 0);
        assert_eq!(jets[0].coeffs(), &[1.5]);
        assert_eq!(jets[1].coeffs(), &[-2.0]);
    }

    #[test]
    fn seed_catalog_point_dim4() {
        let jets = Jet::seed(&[0.0, 1.0, 0.0, 0.0], 1);
        for (i, j) in jets.iter().enumerate() {
            for k in 0..4 {
                assert_eq!(j.first_deriv(k), if k == i { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn binomial_square() {
        // (1 + h)^2 at order 2, one variable -> {1, 2, 1}
        let jets = Jet::seed(&[1.0], 2);
        let sq = jets[0].mul(&jets[0]);
        assert_eq!(sq.coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn exp_series() {
        let jets = Jet::seed(&[0.0], 3);
        let e = jets[0].exp();
        assert_eq!(e.coeffs()[0], 1.0);
        assert_eq!(e.coeffs()[1], 1.0);
        assert!(close(e.coeffs()[2], 0.5, 1e-15));
        assert!(close(e.coeffs()[3], 1.0 / 6.0, 1e-15));
    }

    #[test]
    fn geometric_series_inverse() {
        // 1/(1+h) at order 2 -> {1, -1, 1}
        let jets = Jet::seed(&[1.0], 2);
        let inv = jets[0].inv().unwrap();
        assert_eq!(inv.coeffs(), &[1.0, -1.0, 1.0]);
    }

    #[test]
    fn division_by_zero_constant_is_singular() {
        let jets = Jet::seed(&[0.0], 2);
        assert_eq!(jets[0].inv().unwrap_err(), JetError::SingularPoint);
    }

    #[test]
    fn log_sqrt_domain() {
        let jets = Jet::seed(&[-1.0], 2);
        assert!(matches!(jets[0].ln(), Err(JetError::Domain { .. })));
        assert!(matches!(jets[0].sqrt(), Err(JetError::Domain { .. })));
    }

    #[test]
    fn sqrt_squares_back() {
        let jets = Jet::seed(&[2.0, 0.5], 3);
        let f = jets[0].mul(&jets[1]).add(&Jet::constant(3.0, 2, 3));
        let r = f.sqrt().unwrap();
        let back = r.mul(&r);
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert!(close(*a, *b, 1e-14));
        }
    }

    #[test]
    fn sin_cos_pythagoras() {
        let jets = Jet::seed(&[0.7, -0.3], 3);
        let f = jets[0].add(&jets[1].mul(&jets[1]));
        let s = f.sin();
        let c = f.cos();
        let one = s.mul(&s).add(&c.mul(&c));
        assert!(close(one.coeffs()[0], 1.0, 1e-14));
        for &x in &one.coeffs()[1..] {
            assert!(x.abs() < 1e-14);
        }
    }

    #[test]
    fn partial_derivative_shifts() {
        // f = x^2 y at (2, 3): df/dx = 2xy jet
        let jets = Jet::seed(&[2.0, 3.0], 3);
        let f = jets[0].mul(&jets[0]).mul(&jets[1]);
        let fx = f.partial(0);
        assert_eq!(fx.value(), 12.0);
        assert_eq!(fx.first_deriv(0), 6.0); // 2y
        assert_eq!(fx.first_deriv(1), 4.0); // 2x
    }

    #[test]
    fn truncation_is_prefix() {
        let jets = Jet::seed(&[1.2, -0.4], 3);
        let f = jets[0].mul(&jets[1]).exp();
        let t = f.truncate(2);
        assert_eq!(t.coeffs(), &f.coeffs()[..t.coeffs().len()]);
    }

    #[test]
    fn pow_int_negative() {
        let jets = Jet::seed(&[2.0], 2);
        let p = jets[0].pow_int(-2).unwrap();
        // (2+h)^-2 = 1/4 - 2/8 h + 3/16 h^2
        assert!(close(p.coeffs()[0], 0.25, 1e-15));
        assert!(close(p.coeffs()[1], -0.25, 1e-15));
        assert!(close(p.coeffs()[2], 3.0 / 16.0, 1e-15));
    }
}
