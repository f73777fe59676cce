//! Moment matrices of Gaussian-like measures and the associated Gram identity.
//!
//! For an even degree `d` and a positive definite `Q`, the measure of interest
//! has density proportional to `exp(-k (y^T Q y)^{d/2})`.  Its degree-`d`
//! moments coincide, after the scaling computed by [`sigma_d`], with the
//! moments of the Gaussian `N(0, sigma_d^2 Q^{-1})`.  That makes every entry of
//! the degree-`d` moment matrix a Wick (pairing) sum over `Q^{-1}`, scaled by
//! the rational number `sigma_d^d`, and hence exactly computable.
//!
//! The central structural fact, checked here both in floating point and in
//! exact rational arithmetic, is the Gram identity: with `M` the moment matrix
//! over the degree-`d/2` monomial basis `m`,
//!
//! ```text
//!     m(x)^T M^{-1} m(x) = (x^T Q x)^{d/2}  for all x.
//! ```

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::Form;
use crate::index::{binomial_u128, monomial_basis, MonomialBasis, MultiIndex};
use crate::matrix::{RatMatrix, SymMatrix};
use crate::mc::{sphere_integrate, Estimate, McConfig, Outcome};
use crate::scalar::Coeff;
use crate::sos::gram_expand;
use crate::special::{gamma, sphere_surface_area};

/// `sigma_d^d` as an exact rational: `C(d/2 + n - 1, n - 1) / prod_{i<d/2} (n + 2i)`.
///
/// `sigma_d` itself is irrational in general, but only its `d`-th power enters
/// degree-`d` moment computations, and that power is rational.
pub fn sigma_pow_d_exact(n: usize, d: u32) -> Result<BigRational> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    if n == 0 {
        return Err(Error::Input("number of variables must be positive".into()));
    }
    let half = u64::from(d / 2);
    let numer = binomial_u128(half + n as u64 - 1, n as u64 - 1);
    let mut denom = num_bigint::BigInt::one();
    for i in 0..(d / 2) {
        denom *= num_bigint::BigInt::from(n as u64 + 2 * i as u64);
    }
    Ok(BigRational::new(numer.into(), denom))
}

/// The scaling factor `sigma_d(n)` with `sigma_d^d = C(d/2+n-1, n-1) / prod_{i<d/2} (n+2i)`.
pub fn sigma_d(n: usize, d: u32) -> Result<f64> {
    let pow = sigma_pow_d_exact(n, d)?;
    Ok(pow.to_f64().powf(1.0 / d as f64))
}

/// A positive definite quadratic form `Q` together with the even degree `d`,
/// packaging the matching Gaussian surrogate `N(0, sigma^2 Q^{-1})`.
#[derive(Debug, Clone)]
pub struct CovSpec {
    q: SymMatrix,
    d: u32,
    sigma: f64,
    covariance: SymMatrix,
}

impl CovSpec {
    pub fn new(q: SymMatrix, d: u32) -> Result<Self> {
        if d == 0 || d % 2 != 0 {
            return Err(Error::OddDegree(d));
        }
        let sigma = sigma_d(q.size(), d)?;
        let covariance = q.inverse_pd()?.scaled(sigma * sigma);
        Ok(CovSpec { q, d, sigma, covariance })
    }

    pub fn q(&self) -> &SymMatrix {
        &self.q
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Covariance `sigma^2 Q^{-1}` of the surrogate Gaussian.
    pub fn covariance(&self) -> &SymMatrix {
        &self.covariance
    }
}

/// Wick pairing sum for `E[y^gamma]` under a centered Gaussian whose covariance
/// entries are supplied by `cov`.  Generic over the coefficient type so the
/// same recursion serves `f64` and exact rationals.
///
/// The recursion pairs the first live variable with every live partner (itself
/// included), weighting each choice by the number of identical copies of the
/// partner; memoization is keyed on the residual count vector.
pub fn wick_sum<S, F>(gamma: &MultiIndex, cov: &F) -> S
where
    S: Coeff,
    F: Fn(usize, usize) -> S,
{
    if gamma.degree() % 2 != 0 {
        return S::zero();
    }
    let mut counts = gamma.exps().to_vec();
    let mut memo: HashMap<Vec<u32>, S> = HashMap::new();
    wick_rec(&mut counts, cov, &mut memo)
}

fn wick_rec<S, F>(counts: &mut Vec<u32>, cov: &F, memo: &mut HashMap<Vec<u32>, S>) -> S
where
    S: Coeff,
    F: Fn(usize, usize) -> S,
{
    let i = match counts.iter().position(|&c| c > 0) {
        None => return S::one(),
        Some(i) => i,
    };
    if let Some(v) = memo.get(counts.as_slice()) {
        return v.clone();
    }
    let key = counts.clone();
    counts[i] -= 1;
    let mut total = S::zero();
    for j in i..counts.len() {
        if counts[j] == 0 {
            continue;
        }
        let mult = S::from_u64(u64::from(counts[j]));
        counts[j] -= 1;
        let sub = wick_rec(counts, cov, memo);
        counts[j] += 1;
        total = total + mult * cov(i, j) * sub;
    }
    counts[i] += 1;
    memo.insert(key, total.clone());
    total
}

/// `E[y^gamma]` for `y ~ N(0, cov)`, via the Wick pairing sum.
pub fn gaussian_moment(cov: &SymMatrix, gamma: &MultiIndex) -> Result<f64> {
    if gamma.n() != cov.size() {
        return Err(Error::DimensionMismatch { expected: cov.size(), got: gamma.n() });
    }
    Ok(wick_sum(gamma, &|i, j| cov.get(i, j)))
}

/// Degree-`d` moment matrix of the Gaussian-like measure attached to `Q`,
/// indexed by the degree-`d/2` monomial basis.
#[derive(Debug, Clone)]
pub struct MomentMatrix {
    basis: MonomialBasis,
    matrix: SymMatrix,
    sigma: f64,
    degree: u32,
}

impl MomentMatrix {
    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Largest spread `max - min` over entries that share a total exponent
    /// `alpha + beta`.  The construction computes one value per distinct total
    /// exponent, so this is exactly `0.0`; a nonzero value flags corruption.
    pub fn hankel_deviation(&self) -> f64 {
        let mut per_gamma: HashMap<MultiIndex, (f64, f64)> = HashMap::new();
        let m = self.basis.len();
        for a in 0..m {
            for b in 0..m {
                let gamma = self.basis.indices()[a].sum(&self.basis.indices()[b]).expect("same length");
                let v = self.matrix.get(a, b);
                let e = per_gamma.entry(gamma).or_insert((v, v));
                e.0 = e.0.min(v);
                e.1 = e.1.max(v);
            }
        }
        per_gamma.values().map(|&(lo, hi)| hi - lo).fold(0.0, f64::max)
    }

    /// Copy with one symmetric entry overwritten.  Diagnostic aid: it lets a
    /// caller confirm that [`Self::hankel_deviation`] actually detects damage.
    pub fn with_entry(&self, a: usize, b: usize, value: f64) -> MomentMatrix {
        let mut m = self.matrix.as_dmatrix().clone();
        m[(a, b)] = value;
        m[(b, a)] = value;
        MomentMatrix {
            basis: self.basis.clone(),
            matrix: SymMatrix::from_dmatrix(m).expect("stays symmetric"),
            sigma: self.sigma,
            degree: self.degree,
        }
    }

    pub fn to_json(&self) -> String {
        let repr = MomentMatrixRepr {
            size: self.basis.len(),
            rows: self.matrix.rows(),
            basis: self.basis.indices().iter().map(|a| a.exps().to_vec()).collect(),
        };
        serde_json::to_string_pretty(&repr).expect("serializable")
    }
}

#[derive(Serialize, Deserialize)]
struct MomentMatrixRepr {
    size: usize,
    rows: Vec<Vec<f64>>,
    basis: Vec<Vec<u32>>,
}

/// Build the degree-`d` moment matrix `M[Q]`: entry `(alpha, beta)` is the
/// moment `E[y^{alpha+beta}]` of `N(0, sigma_d^2 Q^{-1})`.
///
/// Each distinct total exponent is computed once and written to every slot
/// that shares it, so equal-total-exponent entries agree bit for bit.
pub fn moment_matrix(q: &SymMatrix, d: u32) -> Result<MomentMatrix> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    let n = q.size();
    let qinv = q.inverse_pd()?;
    let sigma_pow = sigma_pow_d_exact(n, d)?.to_f64();
    let basis = monomial_basis(n, d / 2)?;
    let m = basis.len();
    let mut values: HashMap<MultiIndex, f64> = HashMap::new();
    let mut mat = nalgebra::DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let gamma = basis.indices()[a].sum(&basis.indices()[b])?;
            let v = match values.get(&gamma) {
                Some(&v) => v,
                None => {
                    let v = sigma_pow * wick_sum::<f64, _>(&gamma, &|i, j| qinv.get(i, j));
                    values.insert(gamma, v);
                    v
                }
            };
            mat[(a, b)] = v;
            mat[(b, a)] = v;
        }
    }
    Ok(MomentMatrix {
        basis,
        matrix: SymMatrix::from_dmatrix(mat)?,
        sigma: sigma_pow.powf(1.0 / d as f64),
        degree: d,
    })
}

/// Exact rational moment matrix for a rational positive definite `Q`.
pub fn moment_matrix_exact(q: &RatMatrix, d: u32) -> Result<(MonomialBasis, RatMatrix)> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    if !q.is_positive_definite() {
        return Err(Error::NotPositiveDefinite("exact moment matrix requires a positive definite Q".into()));
    }
    let n = q.size();
    let qinv = q.inverse()?;
    let sigma_pow = sigma_pow_d_exact(n, d)?;
    let basis = monomial_basis(n, d / 2)?;
    let m = basis.len();
    let mut values: HashMap<MultiIndex, BigRational> = HashMap::new();
    let mut rows = vec![vec![BigRational::zero(); m]; m];
    for a in 0..m {
        for b in a..m {
            let gamma = basis.indices()[a].sum(&basis.indices()[b])?;
            let v = match values.get(&gamma) {
                Some(v) => v.clone(),
                None => {
                    let v = &sigma_pow * wick_sum::<BigRational, _>(&gamma, &|i, j| qinv.get(i, j).clone());
                    values.insert(gamma, v.clone());
                    v
                }
            };
            rows[a][b] = v.clone();
            rows[b][a] = v;
        }
    }
    Ok((basis, RatMatrix::from_rows(rows)?))
}

/// Expand `(x^T Q x)^{d/2}` into a degree-`d` form.
pub fn expand_power_quadratic(q: &SymMatrix, d: u32) -> Result<Form<f64>> {
    if d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    let n = q.size();
    let mut quad = Form::<f64>::zero(n, 2);
    for i in 0..n {
        for j in i..n {
            let coef = if i == j { q.get(i, i) } else { 2.0 * q.get(i, j) };
            let mut exps = vec![0u32; n];
            exps[i] += 1;
            exps[j] += 1;
            quad.add_term(MultiIndex::new(exps), coef)?;
        }
    }
    Ok(quad.powu(d / 2))
}

/// Exact counterpart of [`expand_power_quadratic`] for rational `Q`.
pub fn expand_power_quadratic_exact(q: &RatMatrix, d: u32) -> Result<Form<BigRational>> {
    if d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    let n = q.size();
    let two = BigRational::from_u64(2);
    let mut quad = Form::<BigRational>::zero(n, 2);
    for i in 0..n {
        for j in i..n {
            let coef = if i == j { q.get(i, i).clone() } else { &two * q.get(i, j) };
            let mut exps = vec![0u32; n];
            exps[i] += 1;
            exps[j] += 1;
            quad.add_term(MultiIndex::new(exps), coef)?;
        }
    }
    Ok(quad.powu(d / 2))
}

/// Residual and conditioning of the Gram identity check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GramResidual {
    /// Largest absolute coefficient of `Gram(M^-1) - (x^T Q x)^{d/2}`.
    pub residual: f64,
    /// Condition number of the moment matrix that was inverted.
    pub condition: f64,
}

/// Check the Gram identity `m(x)^T M[Q]^{-1} m(x) = (x^T Q x)^{d/2}` by
/// expanding both sides in the monomial basis and comparing coefficients.
pub fn gram_identity_residual(q: &SymMatrix, d: u32) -> Result<GramResidual> {
    let mm = moment_matrix(q, d)?;
    let inv = mm.matrix().inverse_pd()?;
    let lhs = gram_expand(mm.basis(), |a, b| inv.get(a, b))?;
    let rhs = expand_power_quadratic(q, d)?;
    let diff = lhs.sub(&rhs)?;
    Ok(GramResidual { residual: diff.max_abs_coefficient(), condition: mm.matrix().condition_number() })
}

/// Exact-arithmetic Gram identity residual; the theorem says this is zero for
/// every rational positive definite `Q`.
pub fn gram_identity_residual_exact(q: &RatMatrix, d: u32) -> Result<BigRational> {
    let (basis, mat) = moment_matrix_exact(q, d)?;
    let inv = mat.inverse()?;
    let lhs = gram_expand(&basis, |a, b| inv.get(a, b).clone())?;
    let rhs = expand_power_quadratic_exact(q, d)?;
    let diff = lhs.sub(&rhs)?;
    let mut worst = BigRational::zero();
    for (_, c) in diff.terms() {
        let a = c.abs();
        if a > worst {
            worst = a;
        }
    }
    Ok(worst)
}

/// Monte Carlo moment `int z^gamma dnu` of the sphere measure whose density
/// against the uniform probability measure on the unit sphere is
/// `C(d/2+n-1, n-1) sqrt(det Q) (z^T Q z)^{-(d+n)/2}`.
///
/// Its total mass is `C(d/2+n-1, n-1)` charged with checking against the
/// moment matrix through the shared-moment identity.
pub fn sphere_measure_moment_mc(
    q: &SymMatrix,
    d: u32,
    gamma: &MultiIndex,
    cfg: &McConfig,
) -> Result<Estimate> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    let n = q.size();
    if gamma.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: gamma.n() });
    }
    let det = q.determinant();
    if !(det > 0.0) || !q.is_positive_definite() {
        return Err(Error::NotPositiveDefinite("sphere measure requires a positive definite Q".into()));
    }
    let mass = binomial_u128(u64::from(d / 2) + n as u64 - 1, n as u64 - 1) as f64;
    let scale = mass * det.sqrt();
    let expo = -((d as f64 + n as f64) / 2.0);
    let q = q.clone();
    let gamma = gamma.clone();
    let acc = sphere_integrate(n, cfg, move |z| {
        let quad = q.quadratic(z);
        let mut mono = 1.0;
        for (zi, &e) in z.iter().zip(gamma.exps()) {
            mono *= zi.powi(e as i32);
        }
        Outcome::Val(mono * quad.powf(expo))
    })?;
    Ok(acc.estimate(scale))
}

/// The normalization exponent coefficient `k = 1 / (2 C(d/2 + n - 1, n))`.
pub fn k_constant(n: usize, d: u32) -> Result<f64> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    Ok(0.5 / binomial_u128(u64::from(d / 2) + n as u64 - 1, n as u64) as f64)
}

/// Closed-form partition integral `int exp(-k (y^T Q y)^{d/2}) dy`:
///
/// ```text
///     vol(S^{n-1}) Gamma((n+d)/d) / (k^{n/d} n sqrt(det Q)).
/// ```
pub fn partition_mass(q: &SymMatrix, d: u32, k: f64) -> Result<f64> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    if !(k > 0.0) {
        return Err(Error::Input(format!("partition mass requires k > 0, got {k}")));
    }
    let n = q.size();
    let det = q.determinant();
    if !(det > 0.0) || !q.is_positive_definite() {
        return Err(Error::NotPositiveDefinite("partition mass requires a positive definite Q".into()));
    }
    let nf = n as f64;
    let df = d as f64;
    Ok(sphere_surface_area(n) * gamma((nf + df) / df) / (k.powf(nf / df) * nf * det.sqrt()))
}

/// Monte Carlo moment `E[y^gamma]` of the probability measure with density
/// proportional to `exp(-k (y^T Q y)^{d/2})`, with `k` from [`k_constant`].
///
/// Radial-angular factorization turns this into a spherical average:
/// `E[y^gamma] = Gamma((n+m)/d) vol(S^{n-1}) k^{-(n+m)/d} / d / Z` times the
/// spherical mean of `z^gamma (z^T Q z)^{-(n+m)/2}`, where `m = |gamma|`.
pub fn gaussian_like_moment_mc(
    q: &SymMatrix,
    d: u32,
    gamma: &MultiIndex,
    cfg: &McConfig,
) -> Result<Estimate> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::OddDegree(d));
    }
    let n = q.size();
    if gamma.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: gamma.n() });
    }
    if gamma.degree() % 2 != 0 {
        // Odd moments vanish by symmetry of the density.
        return Ok(Estimate { value: 0.0, stderr: 0.0, samples: cfg.samples });
    }
    let k = k_constant(n, d)?;
    let z_mass = partition_mass(q, d, k)?;
    let nf = n as f64;
    let df = d as f64;
    let m = gamma.degree() as f64;
    let scale = crate::special::gamma((nf + m) / df) * sphere_surface_area(n) / (df * k.powf((nf + m) / df) * z_mass);
    let expo = -((nf + m) / 2.0);
    let q = q.clone();
    let gamma = gamma.clone();
    let acc = sphere_integrate(n, cfg, move |z| {
        let quad = q.quadratic(z);
        let mut mono = 1.0;
        for (zi, &e) in z.iter().zip(gamma.exps()) {
            mono *= zi.powi(e as i32);
        }
        Outcome::Val(mono * quad.powf(expo))
    })?;
    Ok(acc.estimate(scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rational;
    use approx::assert_relative_eq;

    fn rat(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn sigma_powers_match_known_rationals() {
        assert_eq!(sigma_pow_d_exact(2, 4).unwrap(), rat("3/8"));
        assert_eq!(sigma_pow_d_exact(2, 6).unwrap(), rat("1/12"));
        for n in 1..=5 {
            assert_eq!(sigma_pow_d_exact(n, 2).unwrap(), rat("1"));
        }
        // C(5,2) / (3*5*7) = 10/105 = 2/21.
        assert_eq!(sigma_pow_d_exact(3, 6).unwrap(), rat("2/21"));
        assert!(sigma_pow_d_exact(2, 3).is_err());
    }

    #[test]
    fn wick_matches_hand_values() {
        let cov = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let m = |exps: &[u32]| gaussian_moment(&cov, &MultiIndex::new(exps.to_vec())).unwrap();
        assert_relative_eq!(m(&[1, 1]), 1.0);
        assert_relative_eq!(m(&[4, 0]), 3.0 * 4.0); // 3 Sigma_11^2
        assert_relative_eq!(m(&[3, 1]), 3.0 * 2.0 * 1.0); // 3 Sigma_11 Sigma_12
        assert_relative_eq!(m(&[2, 2]), 2.0 * 3.0 + 2.0 * 1.0); // Sigma_11 Sigma_22 + 2 Sigma_12^2
        assert_eq!(m(&[3, 0]), 0.0);
        assert_eq!(m(&[1, 0]), 0.0);
        // Degree 6: E[y1^6] = 15 Sigma_11^3.
        assert_relative_eq!(m(&[6, 0]), 15.0 * 8.0);
    }

    #[test]
    fn wick_is_exact_over_rationals() {
        let cov = RatMatrix::from_rows(vec![
            vec![rat("2"), rat("1/2")],
            vec![rat("1/2"), rat("1")],
        ])
        .unwrap();
        let gamma = MultiIndex::new(vec![2, 2]);
        let v = wick_sum::<BigRational, _>(&gamma, &|i, j| cov.get(i, j).clone());
        // Sigma_11 Sigma_22 + 2 Sigma_12^2 = 2 + 2/4 = 5/2.
        assert_eq!(v, rat("5/2"));
    }

    #[test]
    fn degree_two_moment_matrix_is_q_inverse() {
        let q = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let mm = moment_matrix(&q, 2).unwrap();
        let qinv = q.inverse_pd().unwrap();
        for a in 0..2 {
            for b in 0..2 {
                assert_relative_eq!(mm.matrix().get(a, b), qinv.get(a, b), max_relative = 1e-12);
            }
        }
        // Multiplying back by Q recovers the identity to high accuracy.
        let prod = mm.matrix().mul_raw(&q);
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((prod[a][b] - want).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn quartic_identity_moment_matrix_is_exactly_right() {
        let mm = moment_matrix(&SymMatrix::identity(2), 4).unwrap();
        // Basis order: x^2, xy, y^2.
        let want = [
            [9.0 / 8.0, 0.0, 3.0 / 8.0],
            [0.0, 3.0 / 8.0, 0.0],
            [3.0 / 8.0, 0.0, 9.0 / 8.0],
        ];
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(mm.matrix().get(a, b), want[a][b]);
            }
        }
        assert_relative_eq!(mm.sigma(), (3.0f64 / 8.0).powf(0.25));
        assert_eq!(mm.degree(), 4);
    }

    #[test]
    fn hankel_structure_holds_and_damage_is_detected() {
        let q = SymMatrix::from_rows(&[
            vec![3.0, 1.0, 0.2],
            vec![1.0, 2.0, -0.4],
            vec![0.2, -0.4, 1.5],
        ])
        .unwrap();
        let mm = moment_matrix(&q, 4).unwrap();
        assert_eq!(mm.hankel_deviation(), 0.0);
        // (x1^2, x2^2) and (x1 x2, x1 x2) share the total exponent (2,2,0).
        let basis = mm.basis();
        let a = basis.position(&MultiIndex::new(vec![2, 0, 0])).unwrap();
        let b = basis.position(&MultiIndex::new(vec![0, 2, 0])).unwrap();
        let c = basis.position(&MultiIndex::new(vec![1, 1, 0])).unwrap();
        let damaged = mm.with_entry(a, b, mm.matrix().get(c, c) + 1e-9);
        assert!(damaged.hankel_deviation() >= 0.5e-9);
    }

    #[test]
    fn exact_moment_matrix_matches_float_path() {
        let q = RatMatrix::from_rows(vec![
            vec![rat("2"), rat("1")],
            vec![rat("1"), rat("1")],
        ])
        .unwrap();
        let (basis, exact) = moment_matrix_exact(&q, 4).unwrap();
        let qf = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let mm = moment_matrix(&qf, 4).unwrap();
        assert_eq!(basis.len(), mm.basis().len());
        for a in 0..basis.len() {
            for b in 0..basis.len() {
                let e = exact.get(a, b).to_f64();
                assert_relative_eq!(e, mm.matrix().get(a, b), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn power_of_quadratic_expands_correctly() {
        let f = expand_power_quadratic(&SymMatrix::identity(2), 4).unwrap();
        // (x^2 + y^2)^2 = x^4 + 2 x^2 y^2 + y^4.
        assert_relative_eq!(f.eval(&[1.0, 2.0]).unwrap(), 25.0, max_relative = 1e-14);
        assert_eq!(f.terms().count(), 3);
        let q = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let g = expand_power_quadratic(&q, 2).unwrap();
        assert_relative_eq!(g.eval(&[3.0, 1.0]).unwrap(), 11.0);
    }

    #[test]
    fn gram_identity_residual_is_small_in_floats() {
        // d = 2: the identity reduces to x^T Q^-1-inverse x, trivially tight.
        let q2 = SymMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let r2 = gram_identity_residual(&q2, 2).unwrap();
        assert!(r2.residual <= 1e-12, "residual {}", r2.residual);

        let r4 = gram_identity_residual(&SymMatrix::identity(2), 4).unwrap();
        assert!(r4.residual <= 1e-12, "residual {}", r4.residual);
        assert!(r4.condition >= 1.0);

        let q3 = SymMatrix::from_rows(&[
            vec![2.5, 0.6, -0.3],
            vec![0.6, 1.8, 0.2],
            vec![-0.3, 0.2, 1.2],
        ])
        .unwrap();
        let r6 = gram_identity_residual(&q3, 6).unwrap();
        assert!(r6.residual <= 1e-8, "residual {}", r6.residual);
    }

    #[test]
    fn gram_identity_residual_is_exactly_zero_over_rationals() {
        let zero = BigRational::zero();
        let id = RatMatrix::identity(2);
        assert_eq!(gram_identity_residual_exact(&id, 4).unwrap(), zero);
        let q = RatMatrix::from_rows(vec![
            vec![rat("2"), rat("1")],
            vec![rat("1"), rat("1")],
        ])
        .unwrap();
        assert_eq!(gram_identity_residual_exact(&q, 4).unwrap(), zero);
        let q3 = RatMatrix::from_rows(vec![
            vec![rat("3"), rat("1"), rat("0")],
            vec![rat("1"), rat("2"), rat("1/2")],
            vec![rat("0"), rat("1/2"), rat("1")],
        ])
        .unwrap();
        assert_eq!(gram_identity_residual_exact(&q3, 6).unwrap(), zero);
    }

    #[test]
    fn quartic_inverse_moment_matrix_matches_known_value() {
        let mm = moment_matrix(&SymMatrix::identity(2), 4).unwrap();
        let inv = mm.matrix().inverse_pd().unwrap();
        let want = [
            [1.0, 0.0, -1.0 / 3.0],
            [0.0, 8.0 / 3.0, 0.0],
            [-1.0 / 3.0, 0.0, 1.0],
        ];
        for a in 0..3 {
            for b in 0..3 {
                assert_relative_eq!(inv.get(a, b), want[a][b], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gram_identity_is_rotation_covariant() {
        // Residuals stay small when Q is conjugated by a rotation.
        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let rot = [[c, -s], [s, c]];
        let base = [[2.0, 0.0], [0.0, 0.5]];
        let mut conj = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        conj[i][j] += rot[k][i] * base[k][l] * rot[l][j];
                    }
                }
            }
        }
        let rows: Vec<Vec<f64>> = conj.iter().map(|r| r.to_vec()).collect();
        let q = SymMatrix::from_rows(&rows).unwrap();
        let r = gram_identity_residual(&q, 4).unwrap();
        assert!(r.residual <= 1e-10, "residual {}", r.residual);
    }

    #[test]
    fn sphere_measure_mass_and_moments() {
        let cfg = McConfig::new(200_000, 7);
        let q = SymMatrix::identity(2);
        // Total mass = C(d/2+n-1, n-1) = C(3,1) = 3.
        let mass = sphere_measure_moment_mc(&q, 4, &MultiIndex::new(vec![0, 0]), &cfg).unwrap();
        assert!((mass.value - 3.0).abs() <= 4.0 * mass.stderr, "mass {} +- {}", mass.value, mass.stderr);
        // gamma = (4, 0): known value 9/8.
        let m40 = sphere_measure_moment_mc(&q, 4, &MultiIndex::new(vec![4, 0]), &cfg).unwrap();
        assert!(
            (m40.value - 9.0 / 8.0).abs() <= 4.0 * m40.stderr,
            "moment {} +- {}",
            m40.value,
            m40.stderr
        );
        // Odd moments vanish by symmetry (exactly, thanks to antithetic-free
        // symmetry of the integrand mean; statistically here).
        let m31 = sphere_measure_moment_mc(&q, 4, &MultiIndex::new(vec![3, 1]), &cfg).unwrap();
        assert!(m31.value.abs() <= 4.0 * m31.stderr.max(1e-12));
    }

    #[test]
    fn sphere_measure_moments_match_moment_matrix() {
        // The degree-d moments of the sphere measure equal the moment matrix
        // entries; spot-check a non-identity Q.
        let q = SymMatrix::from_rows(&[vec![1.5, 0.4], vec![0.4, 0.8]]).unwrap();
        let mm = moment_matrix(&q, 4).unwrap();
        let cfg = McConfig::new(400_000, 11);
        let basis = mm.basis();
        let a = basis.position(&MultiIndex::new(vec![2, 0])).unwrap();
        let b = basis.position(&MultiIndex::new(vec![1, 1])).unwrap();
        let est = sphere_measure_moment_mc(&q, 4, &MultiIndex::new(vec![3, 1]), &cfg).unwrap();
        let want = mm.matrix().get(a, b);
        assert!(
            (est.value - want).abs() <= 4.0 * est.stderr,
            "estimate {} +- {} vs {}",
            est.value,
            est.stderr,
            want
        );
    }

    #[test]
    fn partition_mass_matches_quadrature_oracles() {
        // Oracle: numerically integrated exp(-0.3 (x^2 + 4 y^2)^2) over R^2.
        let q = SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let z = partition_mass(&q, 4, 0.3).unwrap();
        assert_relative_eq!(z, 2.5415823762102346, max_relative = 1e-13);
        // Oracle: integral of exp(-2 x^6) over R.
        let q1 = SymMatrix::identity(1);
        let z1 = partition_mass(&q1, 6, 2.0).unwrap();
        assert_relative_eq!(z1, 1.6530079302500234, max_relative = 1e-13);
        // d = 2, k = 1/2 recovers the standard Gaussian integral (2 pi)^{n/2}.
        for n in 1..=4 {
            let zn = partition_mass(&SymMatrix::identity(n), 2, 0.5).unwrap();
            assert_relative_eq!(zn, (2.0 * std::f64::consts::PI).powf(n as f64 / 2.0), max_relative = 1e-12);
        }
        // d = 2, k = 1: pi^{n/2}.
        let zpi = partition_mass(&SymMatrix::identity(2), 2, 1.0).unwrap();
        assert_relative_eq!(zpi, std::f64::consts::PI, max_relative = 1e-13);
    }

    #[test]
    fn k_constant_values() {
        assert_relative_eq!(k_constant(2, 2).unwrap(), 0.5);
        assert_relative_eq!(k_constant(2, 4).unwrap(), 1.0 / 6.0);
        assert_relative_eq!(k_constant(3, 4).unwrap(), 1.0 / 8.0);
        assert_relative_eq!(k_constant(3, 6).unwrap(), 0.05);
    }

    #[test]
    fn gaussian_like_moments_match_wick_moments() {
        // With k = k_constant, the degree-d moments of the Gaussian-like
        // measure must match the Wick moments sigma_d^d wick(Q^-1, gamma).
        let q = SymMatrix::from_rows(&[vec![1.2, 0.3], vec![0.3, 0.9]]).unwrap();
        let d = 4;
        let mm = moment_matrix(&q, d).unwrap();
        let cfg = McConfig::new(400_000, 23);
        for (gamma, a, b) in [
            (vec![4, 0], vec![2, 0], vec![2, 0]),
            (vec![2, 2], vec![2, 0], vec![0, 2]),
            (vec![1, 3], vec![1, 1], vec![0, 2]),
        ] {
            let est = gaussian_like_moment_mc(&q, d, &MultiIndex::new(gamma), &cfg).unwrap();
            let ia = mm.basis().position(&MultiIndex::new(a)).unwrap();
            let ib = mm.basis().position(&MultiIndex::new(b)).unwrap();
            let want = mm.matrix().get(ia, ib);
            assert!(
                (est.value - want).abs() <= 4.0 * est.stderr,
                "estimate {} +- {} vs {}",
                est.value,
                est.stderr,
                want
            );
        }
        // An odd moment is identically zero.
        let odd = gaussian_like_moment_mc(&q, d, &MultiIndex::new(vec![1, 2]), &cfg).unwrap();
        assert_eq!(odd.value, 0.0);
    }

    #[test]
    fn cov_spec_packages_the_surrogate_gaussian() {
        let q = SymMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let spec = CovSpec::new(q, 4).unwrap();
        let s = (3.0f64 / 8.0).powf(0.25);
        assert_relative_eq!(spec.sigma(), s);
        // covariance = sigma^2 Q^-1 = sigma^2 / 2 I.
        assert_relative_eq!(spec.covariance().get(0, 0), s * s / 2.0, max_relative = 1e-12);
        assert_relative_eq!(spec.covariance().get(0, 1), 0.0);
        assert!(CovSpec::new(SymMatrix::identity(2), 3).is_err());
    }
}
