//! Sums of squares through Gram matrices and pseudo-moment functionals.
//!
//! A symmetric matrix G indexed by the degree-d/2 monomial basis represents
//! the form g(x) = m_{d/2}(x)ᵀ G m_{d/2}(x); positive semidefinite G certify
//! g as a sum of squares. Linear functionals L on H_{d,n} are stored by their
//! moments L(y^γ), |γ| = d; their moment matrix M_d(L)[α,β] = L(y^{α+β}) is
//! the dual object, and inverting it recovers a Gram matrix for forms whose
//! moment functional lies in the interior of the cone.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::form::{Form, FormRepr};
use crate::index::{monomial_basis, MonomialBasis, MultiIndex};
use crate::matrix::{MatrixRepr, SymMatrix};
use crate::scalar::Coeff;

/// Expand m_k(x)ᵀ G m_k(x) into a form of degree 2k, generically over the
/// coefficient scalar. `get(i, j)` reads G (must be symmetric).
pub fn gram_expand<S, F>(basis: &MonomialBasis, get: F) -> Result<Form<S>>
where
    S: Coeff,
    F: Fn(usize, usize) -> S,
{
    let n = basis.n();
    let d = 2 * basis.degree();
    let mut form = Form::zero(n, d);
    for (i, alpha) in basis.indices().iter().enumerate() {
        for (j, beta) in basis.indices().iter().enumerate() {
            let c = get(i, j);
            if !c.is_zero() {
                form.add_term(alpha.sum(beta)?, c)?;
            }
        }
    }
    Ok(form)
}

/// Expand a symmetric f64 Gram matrix over the given basis into its form.
/// The coefficient of x^γ is Σ_{α+β=γ} G[α,β].
pub fn gram_to_form(g: &SymMatrix, basis: &MonomialBasis) -> Result<Form<f64>> {
    if g.size() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: g.size(),
        });
    }
    gram_expand(basis, |i, j| g.get(i, j))
}

/// A Gram matrix together with its basis and expanded form.
#[derive(Clone, Debug)]
pub struct GramForm {
    basis: MonomialBasis,
    matrix: SymMatrix,
    form: Form<f64>,
}

impl GramForm {
    pub fn new(matrix: SymMatrix, basis: MonomialBasis) -> Result<Self> {
        let form = gram_to_form(&matrix, &basis)?;
        Ok(GramForm {
            basis,
            matrix,
            form,
        })
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.matrix
    }

    pub fn form(&self) -> &Form<f64> {
        &self.form
    }

    /// Max |difference| between the stored form and a fresh expansion of the
    /// stored matrix (0 unless a caller mutated state out from under us).
    pub fn expansion_residual(&self) -> f64 {
        match gram_to_form(&self.matrix, &self.basis) {
            Ok(fresh) => match fresh.sub(&self.form) {
                Ok(diff) => diff.max_abs_coefficient(),
                Err(_) => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        }
    }

    /// Whether the Gram matrix is PSD at the spectral threshold
    /// −1e−10·‖G‖, certifying the form as a sum of squares.
    pub fn is_sos_certificate(&self) -> bool {
        let eigs = self.matrix.eigenvalues();
        let norm = eigs.iter().map(|e| e.abs()).fold(0.0f64, f64::max);
        eigs.iter().all(|&e| e >= -1e-10 * norm.max(1.0))
    }

    /// Parse the JSON bundle, re-expand the matrix, and verify the declared
    /// form against the expansion (coefficient-wise, at rounding level).
    pub fn from_json(s: &str) -> Result<Self> {
        let repr: GramFormRepr = serde_json::from_str(s)?;
        if repr.d == 0 || repr.d % 2 != 0 {
            return Err(Error::OddDegree(repr.d));
        }
        let basis = monomial_basis(repr.n, repr.d / 2)?;
        let listed: Vec<Vec<u32>> =
            basis.indices().iter().map(|a| a.exps().to_vec()).collect();
        if listed != repr.basis {
            return Err(Error::Input(
                "basis does not match the canonical graded-lex order".into(),
            ));
        }
        let gram = GramForm::new(repr.matrix.to_f64()?, basis)?;
        let declared = Form::<f64>::from_repr(repr.form)?;
        let diff = gram.form.sub(&declared)?;
        let scale = gram.form.max_abs_coefficient().max(1.0);
        if diff.max_abs_coefficient() > 1e-9 * scale {
            return Err(Error::Input(
                "declared form does not match the Gram expansion".into(),
            ));
        }
        Ok(gram)
    }

    pub fn to_json(&self) -> String {
        let repr = GramFormRepr {
            n: self.basis.n(),
            d: self.form.degree(),
            basis: self.basis.indices().iter().map(|a| a.exps().to_vec()).collect(),
            matrix: MatrixRepr::from_f64(&self.matrix),
            form: self.form.to_repr(),
        };
        serde_json::to_string_pretty(&repr).expect("serializable")
    }
}

/// On-disk Gram bundle: basis + matrix + expanded form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramFormRepr {
    pub n: usize,
    pub d: u32,
    pub basis: Vec<Vec<u32>>,
    pub matrix: MatrixRepr,
    pub form: FormRepr,
}

/// Rank-one matrix Θ_ℓ = m_{d/2}(ℓ) m_{d/2}(ℓ)ᵀ over the degree-d/2 basis.
/// Satisfies the trace identity Tr(Θ_ℓ G) = g(ℓ) for any Gram matrix G of g.
pub fn rank_one_theta(ell: &[f64], d: u32) -> Result<(MonomialBasis, SymMatrix)> {
    if d % 2 != 0 || d == 0 {
        return Err(Error::OddDegree(d));
    }
    let basis = monomial_basis(ell.len(), d / 2)?;
    let m = basis.eval_vector(ell)?;
    let rows: Vec<Vec<f64>> = m.iter().map(|a| m.iter().map(|b| a * b).collect()).collect();
    Ok((basis, SymMatrix::from_rows(&rows)?))
}

/// Frobenius pairing Tr(A B) of two symmetric matrices.
pub fn trace_product(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.size() != b.size() {
        return Err(Error::DimensionMismatch {
            expected: a.size(),
            got: b.size(),
        });
    }
    let n = a.size();
    let mut tr = 0.0;
    for i in 0..n {
        for j in 0..n {
            tr += a.get(i, j) * b.get(j, i);
        }
    }
    Ok(tr)
}

/// A linear functional on H_{d,n} stored by its moments L(y^γ), complete
/// over all |γ| = d.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoMomentFunctional {
    n: usize,
    d: u32,
    moments: BTreeMap<MultiIndex, f64>,
}

impl PseudoMomentFunctional {
    /// Build from (γ, value) pairs; every degree-d multi-index must appear
    /// exactly once.
    pub fn from_moments<I>(n: usize, d: u32, moments: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut map = BTreeMap::new();
        for (gamma, v) in moments {
            if gamma.n() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: gamma.n(),
                });
            }
            if gamma.degree() != d {
                return Err(Error::DegreeMismatch(format!(
                    "moment index {gamma:?} has degree {}, functional has degree {d}",
                    gamma.degree()
                )));
            }
            if map.insert(gamma.clone(), v).is_some() {
                return Err(Error::Input(format!("duplicate moment for {gamma:?}")));
            }
        }
        for gamma in monomial_basis(n, d)?.indices() {
            if !map.contains_key(gamma) {
                return Err(Error::MissingMoment(gamma.exps().to_vec()));
            }
        }
        Ok(PseudoMomentFunctional { n, d, moments: map })
    }

    /// Point evaluation at ℓ: L(y^γ) = ℓ^γ, i.e. L(g) = g(ℓ).
    pub fn point_evaluation(ell: &[f64], d: u32) -> Result<Self> {
        let n = ell.len();
        let moments = monomial_basis(n, d)?
            .indices()
            .iter()
            .map(|gamma| {
                let v = gamma
                    .exps()
                    .iter()
                    .zip(ell)
                    .map(|(&e, &x)| x.powi(e as i32))
                    .product();
                (gamma.clone(), v)
            })
            .collect::<Vec<_>>();
        Self::from_moments(n, d, moments)
    }

    /// Convex combination Σ wᵢ Lᵢ of functionals with matching (n, d).
    pub fn convex_combination(parts: &[(f64, &PseudoMomentFunctional)]) -> Result<Self> {
        let (n, d) = match parts.first() {
            Some((_, l)) => (l.n, l.d),
            None => return Err(Error::Input("empty combination".into())),
        };
        let basis = monomial_basis(n, d)?;
        let mut out: Vec<(MultiIndex, f64)> = basis
            .indices()
            .iter()
            .map(|g| (g.clone(), 0.0))
            .collect();
        for (w, l) in parts {
            if l.n != n || l.d != d {
                return Err(Error::DegreeMismatch(
                    "combination operands must share (n, d)".into(),
                ));
            }
            for (gamma, acc) in out.iter_mut() {
                *acc += w * l.moments[gamma];
            }
        }
        Self::from_moments(n, d, out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    /// L(y^γ); errors if |γ| ≠ d.
    pub fn moment(&self, gamma: &MultiIndex) -> Result<f64> {
        self.moments
            .get(gamma)
            .copied()
            .ok_or_else(|| Error::MissingMoment(gamma.exps().to_vec()))
    }

    /// Apply the functional to a form of matching (n, d).
    pub fn apply(&self, g: &Form<f64>) -> Result<f64> {
        if g.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: g.n(),
            });
        }
        if g.degree() != self.d {
            return Err(Error::DegreeMismatch(format!(
                "functional of degree {} applied to degree {}",
                self.d,
                g.degree()
            )));
        }
        let mut acc = 0.0;
        for (gamma, c) in g.terms() {
            acc += c * self.moment(gamma)?;
        }
        Ok(acc)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: PseudoMomentRepr = serde_json::from_str(s)?;
        Self::from_moments(
            repr.n,
            repr.d,
            repr.moments
                .into_iter()
                .map(|m| (MultiIndex::new(m.gamma), m.value)),
        )
    }

    pub fn to_json(&self) -> String {
        let repr = PseudoMomentRepr {
            n: self.n,
            d: self.d,
            moments: self
                .moments
                .iter()
                .map(|(g, &v)| MomentRepr {
                    gamma: g.exps().to_vec(),
                    value: v,
                })
                .collect(),
        };
        serde_json::to_string(&repr).expect("functional serialization")
    }
}

/// On-disk pseudo-moment schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PseudoMomentRepr {
    pub n: usize,
    pub d: u32,
    pub moments: Vec<MomentRepr>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentRepr {
    pub gamma: Vec<u32>,
    pub value: f64,
}

/// PSD status of a moment matrix at the spectral threshold −1e−10·‖M‖.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub threshold: f64,
    pub is_psd: bool,
}

/// Moment matrix M_d(L)[α, β] = L(y^{α+β}) over the degree-d/2 basis, with
/// its PSD status.
pub fn pseudo_moment_matrix(
    l: &PseudoMomentFunctional,
) -> Result<(MonomialBasis, SymMatrix, PsdReport)> {
    if l.d % 2 != 0 || l.d == 0 {
        return Err(Error::OddDegree(l.d));
    }
    let basis = monomial_basis(l.n, l.d / 2)?;
    let m = basis.len();
    let mut rows = vec![vec![0.0; m]; m];
    for (i, alpha) in basis.indices().iter().enumerate() {
        for (j, beta) in basis.indices().iter().enumerate().skip(i) {
            let v = l.moment(&alpha.sum(beta)?)?;
            rows[i][j] = v;
            rows[j][i] = v;
        }
    }
    let mat = SymMatrix::from_rows(&rows)?;
    let eigs = mat.eigenvalues();
    let norm = eigs.iter().map(|e| e.abs()).fold(0.0f64, f64::max);
    let min_eigenvalue = eigs.first().copied().unwrap_or(0.0);
    let threshold = -1e-10 * norm.max(1.0);
    let report = PsdReport {
        min_eigenvalue,
        threshold,
        is_psd: min_eigenvalue >= threshold,
    };
    Ok((basis, mat, report))
}

/// Recover the Gram matrix G = M_d(L)^{-1} for a functional in the interior
/// (M_d(L) positive definite); errors with the offending eigenvalue
/// otherwise.
pub fn nesterov_gram(l: &PseudoMomentFunctional) -> Result<GramForm> {
    let (basis, mat, psd) = pseudo_moment_matrix(l)?;
    let inv = mat.inverse_pd().map_err(|_| Error::NotInInterior {
        min_eig: psd.min_eigenvalue,
    })?;
    GramForm::new(inv, basis)
}

/// Volume of the sublevel set of the sum-of-squares form a Gram matrix
/// represents.  For quadratics (degree-1 basis) the Monte Carlo value is
/// cross-checked against the spectral closed form and a disagreement beyond
/// noise is reported as inconclusive rather than returned silently.
pub fn sos_volume(
    gram: &GramForm,
    cfg: &crate::mc::McConfig,
) -> Result<crate::volume::VolumeEstimate> {
    let est = crate::volume::volume_mc(gram.form(), cfg)?;
    if gram.form().degree() == 2 {
        let q = crate::volume::quadratic_matrix(gram.form())?;
        let closed = crate::volume::volume_quadratic_closed(&q)?;
        let dev = (est.value - closed).abs();
        if dev > 5.0 * est.stderr + 1e-9 * closed.abs() {
            return Err(Error::Inconclusive(format!(
                "sum-of-squares volume estimate {} disagrees with the quadratic closed form {}",
                est.value, closed
            )));
        }
    }
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn mi(e: &[u32]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    #[test]
    fn identity_gram_expands_to_sum_of_even_monomial_squares() {
        // G = I over (x², xy, y²) gives x⁴ + x²y² + y⁴
        let basis = monomial_basis(2, 2).unwrap();
        let g = gram_to_form(&SymMatrix::identity(3), &basis).unwrap();
        assert_eq!(g.coefficient(&mi(&[4, 0])), 1.0);
        assert_eq!(g.coefficient(&mi(&[2, 2])), 1.0);
        assert_eq!(g.coefficient(&mi(&[0, 4])), 1.0);
        assert_eq!(g.num_terms(), 3);
    }

    #[test]
    fn moment_matrix_inverse_gram_expands_to_squared_norm() {
        // (1/3)[[3,0,-1],[0,8,0],[-1,0,3]] over (x², xy, y²) gives (x²+y²)²
        let basis = monomial_basis(2, 2).unwrap();
        let m = SymMatrix::from_rows(&[
            vec![1.0, 0.0, -1.0 / 3.0],
            vec![0.0, 8.0 / 3.0, 0.0],
            vec![-1.0 / 3.0, 0.0, 1.0],
        ])
        .unwrap();
        let g = gram_to_form(&m, &basis).unwrap();
        assert_relative_eq!(g.coefficient(&mi(&[4, 0])), 1.0, epsilon = 1e-15);
        assert_relative_eq!(g.coefficient(&mi(&[2, 2])), 2.0, epsilon = 1e-15);
        assert_relative_eq!(g.coefficient(&mi(&[0, 4])), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn gram_bundle_round_trips_through_json() {
        let basis = monomial_basis(2, 2).unwrap();
        let m = SymMatrix::from_rows(&[
            vec![1.0, 0.5, -1.0 / 3.0],
            vec![0.5, 8.0 / 3.0, 0.25],
            vec![-1.0 / 3.0, 0.25, 1.0],
        ])
        .unwrap();
        let gram = GramForm::new(m, basis).unwrap();
        let back = GramForm::from_json(&gram.to_json()).unwrap();
        assert_eq!(back.form(), gram.form());
        assert_eq!(back.matrix().rows(), gram.matrix().rows());

        // A bundle whose declared form disagrees with its matrix is rejected.
        let mut repr: GramFormRepr = serde_json::from_str(&gram.to_json()).unwrap();
        repr.form.terms[0].coef = "7".into();
        let tampered = serde_json::to_string(&repr).unwrap();
        assert!(matches!(GramForm::from_json(&tampered), Err(Error::Input(_))));
    }

    #[test]
    fn rank_one_gram_is_square_of_linear_combination() {
        // rank-one G = vvᵀ with v = (1, 0, -1) over (x², xy, y²): (x²−y²)²
        let basis = monomial_basis(2, 2).unwrap();
        let v = [1.0, 0.0, -1.0];
        let rows: Vec<Vec<f64>> = v.iter().map(|a| v.iter().map(|b| a * b).collect()).collect();
        let g = gram_to_form(&SymMatrix::from_rows(&rows).unwrap(), &basis).unwrap();
        assert_eq!(g.coefficient(&mi(&[4, 0])), 1.0);
        assert_eq!(g.coefficient(&mi(&[2, 2])), -2.0);
        assert_eq!(g.coefficient(&mi(&[0, 4])), 1.0);
    }

    #[test]
    fn theta_examples() {
        // all-ones 3×3 for ℓ = (1,1,1), d = 2
        let (_, theta) = rank_one_theta(&[1.0, 1.0, 1.0], 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(theta.get(i, j), 1.0);
            }
        }
        // d = 4, n = 2, ℓ = (1,2): m = (1, 2, 4)
        let (basis, theta) = rank_one_theta(&[1.0, 2.0], 4).unwrap();
        assert_eq!(basis.degree(), 2);
        assert_eq!(theta.get(0, 0), 1.0);
        assert_eq!(theta.get(0, 2), 4.0);
        assert_eq!(theta.get(2, 2), 16.0);
        // e₁: only the x₁^{d/2} corner survives
        let (_, theta) = rank_one_theta(&[1.0, 0.0], 4).unwrap();
        assert_eq!(theta.get(0, 0), 1.0);
        let total: f64 = (0..3).map(|i| (0..3).map(|j| theta.get(i, j)).sum::<f64>()).sum();
        assert_eq!(total, 1.0);
    }

    #[test]
    fn trace_identity_random() {
        // Tr(Θ_ℓ G) = g(ℓ) for 100 random (ℓ, G)
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..100 {
            let n = 2 + trial % 2;
            let d = 4;
            let basis = monomial_basis(n, d / 2).unwrap();
            let m = basis.len();
            let a = nalgebra::DMatrix::from_fn(m, m, |_, _| {
                rng.sample::<f64, _>(rand_distr::StandardNormal)
            });
            let sym = SymMatrix::from_dmatrix(&a * a.transpose()).unwrap();
            let gram = GramForm::new(sym, basis).unwrap();
            let ell: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let (_, theta) = rank_one_theta(&ell, d as u32).unwrap();
            let lhs = trace_product(&theta, gram.matrix()).unwrap();
            let rhs = gram.form().eval(&ell).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()),
                "trace {lhs} vs eval {rhs}"
            );
        }
    }

    #[test]
    fn point_evaluation_matrix_is_theta() {
        let ell = [0.5, -1.5];
        let l = PseudoMomentFunctional::point_evaluation(&ell, 4).unwrap();
        let (_, m, psd) = pseudo_moment_matrix(&l).unwrap();
        let (_, theta) = rank_one_theta(&ell, 4).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(m.get(i, j), theta.get(i, j), epsilon = 1e-14);
            }
        }
        assert!(psd.is_psd, "rank-one moment matrix is PSD");
    }

    #[test]
    fn nesterov_rejects_rank_one_functional() {
        let l = PseudoMomentFunctional::point_evaluation(&[1.0, 2.0], 4).unwrap();
        assert!(matches!(nesterov_gram(&l), Err(Error::NotInInterior { .. })));
    }

    #[test]
    fn functional_validation() {
        // missing moment
        let r = PseudoMomentFunctional::from_moments(2, 2, [(mi(&[2, 0]), 1.0)]);
        assert!(matches!(r, Err(Error::MissingMoment(_))));
        // wrong degree key
        let r = PseudoMomentFunctional::from_moments(2, 2, [(mi(&[1, 0]), 1.0)]);
        assert!(matches!(r, Err(Error::DegreeMismatch(_))));
    }

    #[test]
    fn apply_matches_point_evaluation() {
        let ell = [1.0, 2.0];
        let l = PseudoMomentFunctional::point_evaluation(&ell, 2).unwrap();
        let g = Form::from_terms(
            2,
            2,
            [
                (mi(&[2, 0]), 1.0),
                (mi(&[1, 1]), 3.0),
                (mi(&[0, 2]), 1.0),
            ],
        )
        .unwrap();
        assert_relative_eq!(l.apply(&g).unwrap(), 11.0, epsilon = 1e-14);
    }

    #[test]
    fn functional_json_round_trip() {
        let l = PseudoMomentFunctional::point_evaluation(&[1.0, 2.0], 2).unwrap();
        let back = PseudoMomentFunctional::from_json(&l.to_json()).unwrap();
        assert_eq!(l, back);
    }

    #[test]
    fn expansion_residual_zero_and_certificate() {
        let basis = monomial_basis(2, 2).unwrap();
        let gram = GramForm::new(SymMatrix::identity(3), basis).unwrap();
        assert_eq!(gram.expansion_residual(), 0.0);
        assert!(gram.is_sos_certificate());
    }

    #[test]
    fn sos_volume_runs_and_cross_checks_quadratics() {
        use crate::mc::McConfig;
        // Degree-1 basis: the Gram form is x^2 + 4 y^2, closed-form volume pi/2.
        let basis = monomial_basis(2, 1).unwrap();
        let gram = GramForm::new(
            SymMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap(),
            basis,
        )
        .unwrap();
        let est = sos_volume(&gram, &McConfig::new(150_000, 5)).unwrap();
        assert!((est.value - std::f64::consts::PI / 2.0).abs() <= 4.0 * est.stderr);
        // Quartic: identity Gram over the degree-2 basis is x^4 + x^2 y^2 + y^4.
        let basis4 = monomial_basis(2, 2).unwrap();
        let gram4 = GramForm::new(SymMatrix::identity(3), basis4).unwrap();
        let est4 = sos_volume(&gram4, &McConfig::new(200_000, 6)).unwrap();
        assert!(
            (est4.value - 3.371_500_709_625_192).abs() <= 4.0 * est4.stderr,
            "estimate {} +- {}",
            est4.value,
            est4.stderr
        );
    }
}
