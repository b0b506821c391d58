//! Multi-indices and the ring of m-jets.
//!
//! A jet of order `m` at a basepoint `x` in `R^n` is stored as its Taylor
//! coefficients `c_α = ∂^α P(x) / α!` for every multi-index `|α| <= m`, so that
//!
//! ```text
//! P(y) = Σ_α c_α (y - x)^α
//! ```
//!
//! Multi-indices are enumerated in graded lexicographic order: ascending total
//! degree, and within one degree descending lexicographic order of the exponent
//! tuple (`x1` before `x2`). The order is global, so every coefficient vector
//! and every matrix built from it is reproducible.
//!
//! Truncated products are convolutions on the coefficient vectors. Because the
//! enumeration is graded, projecting to a lower order is a prefix truncation.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

/// Exponent vector `α = (α_1, ..., α_n)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// The unit index `e_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    /// `|α|`
    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// `α!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a as usize)).product()
    }

    /// Componentwise `self >= other`.
    pub fn dominates(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise difference; caller guarantees `self >= other`.
    pub fn sub(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `h^α` for a displacement `h`.
    pub fn pow(&self, h: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(h)
            .map(|(&a, &x)| x.powi(a as i32))
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// `dim P_{m,n} = C(m+n, n)`.
pub fn scalar_dim(m: usize, n: usize) -> usize {
    binomial(m + n, n)
}

/// Enumeration of all multi-indices `|α| <= m` in `n` variables, with the
/// multiplication table of the truncated product.
#[derive(Debug)]
pub struct MonomialBasis {
    n: usize,
    m: usize,
    indices: Vec<MultiIndex>,
    position: HashMap<MultiIndex, usize>,
    /// `(i, j, k)` with `α_i + α_j = α_k`.
    products: Vec<(usize, usize, usize)>,
}

impl MonomialBasis {
    fn build(n: usize, m: usize) -> Self {
        let mut indices = Vec::with_capacity(scalar_dim(m, n));
        for degree in 0..=m {
            let mut current = vec![0u32; n];
            push_degree(&mut indices, &mut current, 0, degree as u32);
        }
        let position: HashMap<MultiIndex, usize> = indices
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, a)| (a, i))
            .collect();
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                if a.order() + b.order() <= m {
                    let k = position[&a.add(b)];
                    products.push((i, j, k));
                }
            }
        }
        Self {
            n,
            m,
            indices,
            position,
            products,
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn index(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    /// Graded-lex position of `α`, if `|α| <= m`.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.position.get(alpha).copied()
    }

    pub(crate) fn products(&self) -> &[(usize, usize, usize)] {
        &self.products
    }

    /// Matrix `S` with `S · c = c'` where `c` are coefficients about `x` and `c'`
    /// are coefficients of the same polynomial about `x + h`.
    pub fn shift_matrix(&self, h: &[f64]) -> nalgebra::DMatrix<f64> {
        let d = self.len();
        let mut s = nalgebra::DMatrix::zeros(d, d);
        for (col, alpha) in self.indices.iter().enumerate() {
            for (row, beta) in self.indices.iter().enumerate() {
                if alpha.dominates(beta) {
                    s[(row, col)] = shift_weight(alpha, beta, h);
                }
            }
        }
        s
    }
}

/// `Π_i C(α_i, β_i) h_i^{α_i - β_i}`
fn shift_weight(alpha: &MultiIndex, beta: &MultiIndex, h: &[f64]) -> f64 {
    alpha
        .exponents()
        .iter()
        .zip(beta.exponents())
        .zip(h)
        .map(|((&a, &b), &x)| binomial(a as usize, b as usize) as f64 * x.powi((a - b) as i32))
        .product()
}

fn push_degree(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, var: usize, remaining: u32) {
    let n = current.len();
    if var + 1 == n {
        current[var] = remaining;
        out.push(MultiIndex(current.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        current[var] = e;
        push_degree(out, current, var + 1, remaining - e);
    }
    current[var] = 0;
}

/// Shared, cached basis for `(n, m)`.
pub fn basis(n: usize, m: usize) -> Arc<MonomialBasis> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("basis cache poisoned");
    guard
        .entry((n, m))
        .or_insert_with(|| Arc::new(MonomialBasis::build(n, m)))
        .clone()
}

/// The orders and dimensions of an ambient `(P_{m,n})^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JetShape {
    pub m: usize,
    pub n: usize,
    pub d: usize,
}

impl JetShape {
    pub fn new(m: usize, n: usize, d: usize) -> Self {
        Self { m, n, d }
    }

    /// `C(m+n, n)`
    pub fn scalar_dim(&self) -> usize {
        scalar_dim(self.m, self.n)
    }

    /// `d · C(m+n, n)`
    pub fn dim(&self) -> usize {
        self.d * self.scalar_dim()
    }

    /// Round cap `2 · dim[(P_{m,n})^d] + 1`.
    pub fn stabilization_bound(&self) -> usize {
        2 * self.dim() + 1
    }

    pub fn basis(&self) -> Arc<MonomialBasis> {
        basis(self.n, self.m)
    }
}

fn check_point(expected: usize, p: &[f64], context: &'static str) -> Result<()> {
    if p.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: p.len(),
            context,
        });
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("{context}: non-finite coordinate")));
    }
    Ok(())
}

/// A scalar m-jet at a basepoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    basepoint: Vec<f64>,
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn new(basepoint: Vec<f64>, order: usize, coeffs: Vec<f64>) -> Result<Self> {
        let n = basepoint.len();
        if n == 0 {
            return Err(Error::InvalidInput("jets need at least one variable".into()));
        }
        check_point(n, &basepoint, "jet basepoint")?;
        let expected = scalar_dim(order, n);
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coeffs.len(),
                context: "jet coefficients",
            });
        }
        Ok(Self {
            basepoint,
            order,
            coeffs,
        })
    }

    pub fn zero(basepoint: Vec<f64>, order: usize) -> Self {
        let len = scalar_dim(order, basepoint.len());
        Self {
            basepoint,
            order,
            coeffs: vec![0.0; len],
        }
    }

    pub fn constant(basepoint: Vec<f64>, order: usize, value: f64) -> Self {
        let mut jet = Self::zero(basepoint, order);
        jet.coeffs[0] = value;
        jet
    }

    /// The monomial `(y - x)^α` as a jet at `x`.
    pub fn monomial(basepoint: Vec<f64>, order: usize, alpha: &MultiIndex) -> Result<Self> {
        let mut jet = Self::zero(basepoint, order);
        let pos = jet
            .basis()
            .position(alpha)
            .ok_or(Error::IndexOutOfRange {
                index_order: alpha.order(),
                jet_order: order,
            })?;
        jet.coeffs[pos] = 1.0;
        Ok(jet)
    }

    /// Builds the jet from derivative values `∂^α P(x)` in graded-lex order.
    pub fn from_derivatives(basepoint: Vec<f64>, order: usize, derivs: &[f64]) -> Result<Self> {
        let b = basis(basepoint.len(), order);
        let coeffs = derivs
            .iter()
            .zip(b.indices())
            .map(|(v, a)| v / a.factorial())
            .collect();
        Self::new(basepoint, order, coeffs)
    }

    pub fn basepoint(&self) -> &[f64] {
        &self.basepoint
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nvars(&self) -> usize {
        self.basepoint.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn basis(&self) -> Arc<MonomialBasis> {
        basis(self.nvars(), self.order)
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> Option<f64> {
        self.basis().position(alpha).map(|i| self.coeffs[i])
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        if self.basepoint != other.basepoint {
            return Err(Error::BasepointMismatch);
        }
        Ok(())
    }

    /// Truncated product `J^m_x(PQ)`.
    pub fn multiply(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let b = self.basis();
        let mut out = vec![0.0; self.coeffs.len()];
        for &(i, j, k) in b.products() {
            out[k] += self.coeffs[i] * other.coeffs[j];
        }
        Ok(Jet {
            basepoint: self.basepoint.clone(),
            order: self.order,
            coeffs: out,
        })
    }

    /// Same polynomial, expanded about `y`.
    pub fn recenter(&self, y: &[f64]) -> Result<Jet> {
        check_point(self.nvars(), y, "recenter target")?;
        let h: Vec<f64> = y.iter().zip(&self.basepoint).map(|(a, b)| a - b).collect();
        let b = self.basis();
        let mut out = vec![0.0; self.coeffs.len()];
        for (col, alpha) in b.indices().iter().enumerate() {
            let c = self.coeffs[col];
            if c == 0.0 {
                continue;
            }
            for (row, beta) in b.indices().iter().enumerate() {
                if alpha.dominates(beta) {
                    out[row] += c * shift_weight(alpha, beta, &h);
                }
            }
        }
        Ok(Jet {
            basepoint: y.to_vec(),
            order: self.order,
            coeffs: out,
        })
    }

    /// `∂^α P(y)` of the represented polynomial.
    pub fn deriv_eval(&self, alpha: &MultiIndex, y: &[f64]) -> Result<f64> {
        check_point(self.nvars(), y, "evaluation point")?;
        if alpha.nvars() != self.nvars() {
            return Err(Error::DimensionMismatch {
                expected: self.nvars(),
                found: alpha.nvars(),
                context: "multi-index",
            });
        }
        if alpha.order() > self.order {
            return Err(Error::IndexOutOfRange {
                index_order: alpha.order(),
                jet_order: self.order,
            });
        }
        let h: Vec<f64> = y.iter().zip(&self.basepoint).map(|(a, b)| a - b).collect();
        let b = self.basis();
        let mut acc = 0.0;
        for (i, beta) in b.indices().iter().enumerate() {
            if beta.dominates(alpha) {
                let rest = beta.sub(alpha);
                // β!/(β-α)!
                let falling = beta.factorial() / rest.factorial();
                acc += self.coeffs[i] * falling * rest.pow(&h);
            }
        }
        Ok(acc)
    }

    /// `P(y)`
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        self.deriv_eval(&MultiIndex::zero(self.nvars()), y)
    }

    /// Drops every coefficient with `|α| > order`.
    pub fn project(&self, order: usize) -> Result<Jet> {
        if order > self.order {
            return Err(Error::InvalidInput(format!(
                "cannot project a {}-jet to order {order}",
                self.order
            )));
        }
        let len = scalar_dim(order, self.nvars());
        Ok(Jet {
            basepoint: self.basepoint.clone(),
            order,
            coeffs: self.coeffs[..len].to_vec(),
        })
    }

    /// Multiplicative inverse in the jet ring; exists iff `P(x) != 0`.
    pub fn inverse(&self) -> Result<Jet> {
        let a = self.coeffs[0];
        if a == 0.0 || !a.is_finite() {
            return Err(Error::NotInvertible);
        }
        // 1/(a + N) = (1/a) Σ_k (-N/a)^k, N nilpotent of index m+1
        let mut nil = self.scale(-1.0 / a);
        nil.coeffs[0] = 0.0;
        let mut term = Jet::constant(self.basepoint.clone(), self.order, 1.0);
        let mut sum = term.clone();
        for _ in 0..self.order {
            term = term.multiply(&nil)?;
            sum = sum.add(&term)?;
        }
        Ok(sum.scale(1.0 / a))
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(Jet {
            basepoint: self.basepoint.clone(),
            order: self.order,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            basepoint: self.basepoint.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// A `d`-tuple of jets sharing basepoint and order, an element of `(P_{m,n})^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct JetVec {
    components: Vec<Jet>,
}

impl JetVec {
    pub fn new(components: Vec<Jet>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidInput("a jet vector needs at least one component".into()))?;
        for c in &components[1..] {
            first.check_compatible(c)?;
        }
        Ok(Self { components })
    }

    pub fn zero(basepoint: &[f64], order: usize, d: usize) -> Self {
        Self {
            components: (0..d).map(|_| Jet::zero(basepoint.to_vec(), order)).collect(),
        }
    }

    /// Splits a component-major coefficient vector into `d` jets.
    pub fn from_flat(basepoint: &[f64], order: usize, d: usize, flat: &[f64]) -> Result<Self> {
        let len = scalar_dim(order, basepoint.len());
        if flat.len() != d * len {
            return Err(Error::DimensionMismatch {
                expected: d * len,
                found: flat.len(),
                context: "flattened jet vector",
            });
        }
        let components = flat
            .chunks(len)
            .map(|c| Jet::new(basepoint.to_vec(), order, c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Jet] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &Jet {
        &self.components[j]
    }

    pub fn d(&self) -> usize {
        self.components.len()
    }

    pub fn basepoint(&self) -> &[f64] {
        self.components[0].basepoint()
    }

    pub fn order(&self) -> usize {
        self.components[0].order()
    }

    pub fn shape(&self) -> JetShape {
        JetShape::new(self.order(), self.basepoint().len(), self.d())
    }

    /// Component-major coefficient vector.
    pub fn flatten(&self) -> Vec<f64> {
        self.components
            .iter()
            .flat_map(|c| c.coeffs().iter().copied())
            .collect()
    }

    pub fn recenter(&self, y: &[f64]) -> Result<JetVec> {
        Ok(JetVec {
            components: self
                .components
                .iter()
                .map(|c| c.recenter(y))
                .collect::<Result<_>>()?,
        })
    }

    /// Module action `Q ⊙ (P_1, ..., P_d)`.
    pub fn act(&self, q: &Jet) -> Result<JetVec> {
        Ok(JetVec {
            components: self
                .components
                .iter()
                .map(|c| q.multiply(c))
                .collect::<Result<_>>()?,
        })
    }

    pub fn sub(&self, other: &JetVec) -> Result<JetVec> {
        if self.d() != other.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                found: other.d(),
                context: "jet vector length",
            });
        }
        Ok(JetVec {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a.sub(b))
                .collect::<Result<_>>()?,
        })
    }

    pub fn scale(&self, s: f64) -> JetVec {
        JetVec {
            components: self.components.iter().map(|c| c.scale(s)).collect(),
        }
    }
}

/// A polynomial in `n` variables given by monomial terms `coeff · y^e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: Vec<(f64, MultiIndex)>,
}

impl Polynomial {
    pub fn new(n: usize, terms: Vec<(f64, MultiIndex)>) -> Result<Self> {
        for (c, e) in &terms {
            if e.nvars() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: e.nvars(),
                    context: "polynomial term exponents",
                });
            }
            if !c.is_finite() {
                return Err(Error::InvalidInput("non-finite polynomial coefficient".into()));
            }
        }
        Ok(Self { n, terms })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self {
            n,
            terms: vec![(c, MultiIndex::zero(n))],
        }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, MultiIndex)] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|(_, e)| e.order()).max().unwrap_or(0)
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|(c, e)| c * e.pow(y)).sum()
    }

    /// `J^m_x` of the polynomial, expanding each `y^e = Π (x_i + h_i)^{e_i}`.
    pub fn jet(&self, x: &[f64], m: usize) -> Result<Jet> {
        check_point(self.n, x, "jet basepoint")?;
        let b = basis(self.n, m);
        let mut coeffs = vec![0.0; b.len()];
        for (c, e) in &self.terms {
            for (pos, beta) in b.indices().iter().enumerate() {
                if e.dominates(beta) {
                    coeffs[pos] += c * shift_weight(e, beta, x);
                }
            }
        }
        Jet::new(x.to_vec(), m, coeffs)
    }
}
