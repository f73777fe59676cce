//! Homogeneous polynomials (forms) with sparse coefficient storage, the
//! Bombieri inner product, and the Veronese embedding.
//!
//! A `Form<S>` is an element of H_{d,n}, the space of degree-d forms in n
//! variables, stored as multi-index → coefficient in the canonical monomial
//! order. The Bombieri pairing weights coefficients by inverse multinomials,
//!
//!   ⟨g, h⟩ = Σ_{|α|=d} C(d, α)^{-1} g_α h_α,
//!
//! and makes powers of linear forms reproducing: ⟨(ℓᵀx)^d, g⟩ = g(ℓ).
//! `Poly<S>` is the inhomogeneous companion produced by dehomogenization.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{monomial_basis, MultiIndex};
use crate::matrix::SymMatrix;
use crate::scalar::Coeff;

/// A homogeneous polynomial of fixed degree. The zero form keeps its degree.
#[derive(Clone, PartialEq)]
pub struct Form<S = f64> {
    n: usize,
    d: u32,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Coeff> Form<S> {
    /// The zero form of degree d in n variables.
    pub fn zero(n: usize, d: u32) -> Self {
        Form {
            n,
            d,
            terms: BTreeMap::new(),
        }
    }

    /// Build from (α, coefficient) pairs; duplicate α accumulate, zero
    /// coefficients are dropped, and every α must have |α| = d and length n.
    pub fn from_terms<I>(n: usize, d: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, S)>,
    {
        let mut f = Form::zero(n, d);
        for (alpha, c) in terms {
            f.add_term(alpha, c)?;
        }
        Ok(f)
    }

    /// Add c·x^α into the form.
    pub fn add_term(&mut self, alpha: MultiIndex, c: S) -> Result<()> {
        if alpha.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: alpha.n(),
            });
        }
        if alpha.degree() != self.d {
            return Err(Error::DegreeMismatch(format!(
                "term {alpha:?} has degree {}, form has degree {}",
                alpha.degree(),
                self.d
            )));
        }
        let entry = self.terms.entry(alpha);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                if !c.is_zero() {
                    v.insert(c);
                }
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    /// Terms in canonical order.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of x^α (zero if absent).
    pub fn coefficient(&self, alpha: &MultiIndex) -> S {
        self.terms.get(alpha).cloned().unwrap_or_else(S::zero)
    }

    /// Evaluate at a point.
    pub fn eval(&self, x: &[S]) -> Result<S> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut acc = S::zero();
        for (alpha, c) in &self.terms {
            let mut term = c.clone();
            for (&e, xi) in alpha.exps().iter().zip(x) {
                if e > 0 {
                    term = term * xi.powu(e);
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Bombieri inner product ⟨g, h⟩ = Σ C(d, α)^{-1} g_α h_α. Both forms
    /// must share n and d.
    pub fn bombieri_inner(&self, other: &Form<S>) -> Result<S> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        if self.d != other.d {
            return Err(Error::DegreeMismatch(format!(
                "pairing degree {} against degree {}",
                self.d, other.d
            )));
        }
        let mut acc = S::zero();
        // only multi-indices present in both contribute
        for (alpha, g) in &self.terms {
            if let Some(h) = other.terms.get(alpha) {
                let w = S::from_u128(alpha.multinomial());
                acc = acc + g.clone() * h.clone() / w;
            }
        }
        Ok(acc)
    }

    /// Bombieri norm ⟨g, g⟩^{1/2} (as f64; the squared norm is exact in S).
    pub fn bombieri_norm(&self) -> f64 {
        self.bombieri_inner(self)
            .expect("self-pairing cannot mismatch")
            .to_f64()
            .sqrt()
    }

    /// Veronese image θ_ℓ = (ℓᵀx)^d, expanded. Reproducing: ⟨θ_ℓ, g⟩ = g(ℓ).
    pub fn veronese(ell: &[S], d: u32) -> Result<Form<S>> {
        let n = ell.len();
        if n == 0 {
            return Err(Error::Input("need at least one variable".into()));
        }
        let basis = monomial_basis(n, d)?;
        let mut f = Form::zero(n, d);
        for alpha in basis.indices() {
            let mut c = S::from_u128(alpha.multinomial());
            for (&e, li) in alpha.exps().iter().zip(ell) {
                if e > 0 {
                    c = c * li.powu(e);
                }
            }
            f.add_term(alpha.clone(), c)?;
        }
        Ok(f)
    }

    /// Partial derivative ∂g/∂xᵢ as a form of degree d−1.
    pub fn partial(&self, i: usize) -> Result<Form<S>> {
        if i >= self.n {
            return Err(Error::Input(format!(
                "variable index {i} out of range for n = {}",
                self.n
            )));
        }
        let d = self.d.saturating_sub(1);
        let mut out = Form::zero(self.n, d);
        for (alpha, c) in &self.terms {
            let e = alpha.exps()[i];
            if e == 0 {
                continue;
            }
            let mut exps = alpha.exps().to_vec();
            exps[i] -= 1;
            out.add_term(MultiIndex::new(exps), c.clone() * S::from_u64(e as u64))?;
        }
        Ok(out)
    }

    /// Substitute xₙ = 1, producing an inhomogeneous polynomial in the first
    /// n−1 variables.
    pub fn dehomogenize(&self) -> Result<Poly<S>> {
        if self.n < 2 {
            return Err(Error::Input(
                "dehomogenize needs at least two variables".into(),
            ));
        }
        let mut out = Poly::zero(self.n - 1);
        for (alpha, c) in &self.terms {
            let head = MultiIndex::from_slice(&alpha.exps()[..self.n - 1]);
            out.add_term(head, c.clone())?;
        }
        Ok(out)
    }

    /// Substitute x ← a·y for an invertible n×n matrix a (rows a[i]), i.e.
    /// return h with h(y) = g(a·y). Errors if a is singular at working
    /// precision.
    pub fn change_of_variables(&self, a: &[Vec<S>]) -> Result<Form<S>> {
        let n = self.n;
        if a.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.len(),
            });
        }
        check_invertible(a)?;
        // linear forms L_i(y) = Σ_j a_ij y_j
        let lins: Vec<Form<S>> = a
            .iter()
            .map(|row| {
                let mut l = Form::zero(n, 1);
                for (j, c) in row.iter().enumerate() {
                    let mut exps = vec![0u32; n];
                    exps[j] = 1;
                    l.add_term(MultiIndex::new(exps), c.clone())?;
                }
                Ok(l)
            })
            .collect::<Result<_>>()?;
        let mut out = Form::zero(n, self.d);
        for (alpha, c) in &self.terms {
            let mut prod = Form::zero(n, 0);
            prod.add_term(MultiIndex::new(vec![0; n]), S::one())?;
            for (i, &e) in alpha.exps().iter().enumerate() {
                if e > 0 {
                    prod = prod.mul(&lins[i].powu(e))?;
                }
            }
            out = out.add_scaled(&prod, c.clone())?;
        }
        Ok(out)
    }

    /// Product of two forms (degrees add).
    pub fn mul(&self, other: &Form<S>) -> Result<Form<S>> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut out = Form::zero(self.n, self.d + other.d);
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.sum(b)?, ca.clone() * cb.clone())?;
            }
        }
        Ok(out)
    }

    /// e-th power by repeated multiplication.
    pub fn powu(&self, e: u32) -> Form<S> {
        let mut acc = Form::zero(self.n, 0);
        acc.terms.insert(MultiIndex::new(vec![0; self.n]), S::one());
        for _ in 0..e {
            acc = acc.mul(self).expect("same n");
        }
        acc
    }

    /// self + c·other (degrees and n must match).
    pub fn add_scaled(&self, other: &Form<S>, c: S) -> Result<Form<S>> {
        if self.d != other.d && !other.is_zero() && !self.is_zero() {
            return Err(Error::DegreeMismatch(format!(
                "adding degree {} to degree {}",
                other.d, self.d
            )));
        }
        let mut out = self.clone();
        out.d = if self.is_zero() && !other.is_zero() {
            other.d
        } else {
            self.d
        };
        for (alpha, co) in &other.terms {
            out.add_term(alpha.clone(), co.clone() * c.clone())?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Form<S>) -> Result<Form<S>> {
        self.add_scaled(other, S::one())
    }

    pub fn sub(&self, other: &Form<S>) -> Result<Form<S>> {
        self.add_scaled(other, S::zero() - S::one())
    }

    /// Multiply every coefficient by c.
    pub fn scale(&self, c: S) -> Form<S> {
        let mut out = Form::zero(self.n, self.d);
        for (alpha, co) in &self.terms {
            let v = co.clone() * c.clone();
            if !v.is_zero() {
                out.terms.insert(alpha.clone(), v);
            }
        }
        out
    }

    /// Largest |coefficient| (zero for the zero form), as f64.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.abs().to_f64())
            .fold(0.0, f64::max)
    }

    /// Coefficient-wise conversion to the f64 form.
    pub fn to_f64_form(&self) -> Form<f64> {
        Form {
            n: self.n,
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| (a.clone(), c.to_f64()))
                .collect(),
        }
    }

    // ---- JSON schema -------------------------------------------------------

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: FormRepr = serde_json::from_str(s)?;
        Self::from_repr(repr)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_repr()).expect("form serialization cannot fail")
    }

    pub fn from_repr(repr: FormRepr) -> Result<Self> {
        let mut f = Form::zero(repr.n, repr.d);
        if repr.n == 0 {
            return Err(Error::Input("form needs n >= 1".into()));
        }
        for t in repr.terms {
            if t.alpha.len() != repr.n {
                return Err(Error::Input(format!(
                    "term alpha {:?} has {} entries, expected n = {}",
                    t.alpha,
                    t.alpha.len(),
                    repr.n
                )));
            }
            f.add_term(MultiIndex::new(t.alpha), S::parse_coef(&t.coef)?)?;
        }
        Ok(f)
    }

    pub fn to_repr(&self) -> FormRepr {
        FormRepr {
            n: self.n,
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(a, c)| TermRepr {
                    alpha: a.exps().to_vec(),
                    coef: c.format_coef(),
                })
                .collect(),
        }
    }
}

impl Form<f64> {
    /// Gradient ∇g(x) by evaluating the partial-derivative forms.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        (0..self.n).map(|i| self.partial(i)?.eval(x)).collect()
    }

    /// Hessian matrix of second partials at x.
    pub fn hessian(&self, x: &[f64]) -> Result<SymMatrix> {
        let mut h = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            let gi = self.partial(i)?;
            for j in i..self.n {
                let v = gi.partial(j)?.eval(x)?;
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        SymMatrix::from_rows(&h)
    }

    /// Flatten into the cache-friendly evaluator used by the Monte Carlo
    /// loops.
    pub fn compiled(&self) -> EvalForm {
        EvalForm {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(a, &c)| (a.exps().to_vec(), c))
                .collect(),
        }
    }
}

impl<S: Coeff> fmt::Debug for Form<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0 (degree {}, n={})", self.d, self.n);
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(alpha, c)| {
                let mono: Vec<String> = alpha
                    .exps()
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| {
                        if e == 1 {
                            format!("x{}", i + 1)
                        } else {
                            format!("x{}^{}", i + 1, e)
                        }
                    })
                    .collect();
                if mono.is_empty() {
                    format!("{c:?}")
                } else {
                    format!("{c:?}·{}", mono.join("·"))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Flattened f64 form for hot evaluation loops.
#[derive(Clone, Debug)]
pub struct EvalForm {
    n: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl EvalForm {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut acc = 0.0;
        for (exps, c) in &self.terms {
            let mut t = *c;
            for (&e, &xi) in exps.iter().zip(x) {
                if e > 0 {
                    t *= xi.powi(e as i32);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// On-disk form schema: coefficients as decimal strings so the exact path
/// can read them without rounding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FormRepr {
    pub n: usize,
    pub d: u32,
    pub terms: Vec<TermRepr>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRepr {
    pub alpha: Vec<u32>,
    pub coef: String,
}

/// Inhomogeneous polynomial in n variables (the result of dehomogenizing).
#[derive(Clone, PartialEq)]
pub struct Poly<S = f64> {
    n: usize,
    terms: BTreeMap<MultiIndex, S>,
}

impl<S: Coeff> Poly<S> {
    pub fn zero(n: usize) -> Self {
        Poly {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: S) -> Result<()> {
        if alpha.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: alpha.n(),
            });
        }
        let entry = self.terms.entry(alpha).or_insert_with(S::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            // re-fetch to drop the zeroed key
            self.terms.retain(|_, v| !v.is_zero());
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|a| a.degree()).max()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &S)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> S {
        self.terms.get(alpha).cloned().unwrap_or_else(S::zero)
    }

    pub fn eval(&self, x: &[S]) -> Result<S> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut acc = S::zero();
        for (alpha, c) in &self.terms {
            let mut term = c.clone();
            for (&e, xi) in alpha.exps().iter().zip(x) {
                if e > 0 {
                    term = term * xi.powu(e);
                }
            }
            acc = acc + term;
        }
        Ok(acc)
    }

    /// Dense ascending coefficient vector; only valid for n = 1.
    pub fn univariate_coefficients(&self) -> Result<Vec<S>> {
        if self.n != 1 {
            return Err(Error::Input(format!(
                "univariate view requires n = 1, have n = {}",
                self.n
            )));
        }
        let deg = match self.degree() {
            None => return Ok(vec![]),
            Some(d) => d,
        };
        let mut out = vec![S::zero(); deg as usize + 1];
        for (alpha, c) in &self.terms {
            out[alpha.exps()[0] as usize] = c.clone();
        }
        Ok(out)
    }
}

impl<S: Coeff> fmt::Debug for Poly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(a, c)| format!("{c:?}·y^{:?}", a.exps()))
            .collect();
        write!(f, "{}", if parts.is_empty() { "0".into() } else { parts.join(" + ") })
    }
}

/// Reject matrices that are singular at f64 working precision (checked on the
/// f64 shadow so the rational path shares the same rule).
fn check_invertible<S: Coeff>(a: &[Vec<S>]) -> Result<()> {
    let n = a.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[i][j].to_f64());
    let scale: f64 = (0..n)
        .map(|i| m.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .product();
    let det = m.determinant();
    if !det.is_finite() || det.abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularMatrix(format!(
            "change-of-variables matrix has |det| = {:.3e}",
            det.abs()
        )));
    }
    Ok(())
}
