//! Random generators for matrices and forms used by statistical checks.
//!
//! Positive definite matrices are drawn as `U diag(lambda) U^T` with a Haar
//! orthogonal `U` and log-uniform eigenvalues, so the condition number is
//! controlled explicitly rather than left to chance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::form::Form;
use crate::index::monomial_basis;
use crate::matrix::SymMatrix;
use crate::sos::gram_to_form;

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the sign
/// convention that makes the decomposition unique (positive diagonal of R).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Positive definite matrix with eigenvalues log-uniform in `[1, kappa]`,
/// where the condition bound `kappa` is itself uniform in `[2, kappa_max]`.
pub fn random_pd_matrix<R: Rng + ?Sized>(n: usize, kappa_max: f64, rng: &mut R) -> SymMatrix {
    let kappa = rng.random_range(2.0..kappa_max.max(2.5));
    let u = random_orthogonal(n, rng);
    let mut lambda = vec![0.0; n];
    for l in lambda.iter_mut() {
        let t: f64 = rng.random_range(0.0..1.0);
        *l = kappa.powf(t);
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += u[(i, k)] * lambda[k] * u[(j, k)];
            }
            m[(i, j)] = s;
        }
    }
    // Symmetrize against rounding before the strict constructor sees it.
    let sym = (&m + m.transpose()) * 0.5;
    SymMatrix::from_dmatrix(sym).expect("symmetric by construction")
}

/// Gaussian form in the Bombieri inner product: coefficient of `x^alpha` is
/// `c_alpha sqrt(multinomial(alpha))` with i.i.d. standard normal `c_alpha`.
/// This ensemble is invariant under orthogonal changes of variables.
pub fn random_form_bombieri<R: Rng + ?Sized>(n: usize, d: u32, rng: &mut R) -> Result<Form<f64>> {
    let basis = monomial_basis(n, d)?;
    let mut g = Form::zero(n, d);
    for alpha in basis.indices() {
        let c: f64 = rng.sample(StandardNormal);
        g.add_term(alpha.clone(), c * (alpha.multinomial() as f64).sqrt())?;
    }
    Ok(g)
}

/// Strictly positive definite form of even degree `d`: the Gram expansion of
/// `A^T A / m + 0.2 I` over the degree-`d/2` monomial basis.  The identity
/// shift bounds the form below by `0.2` times a sum of even monomial powers,
/// which vanishes only at the origin.
pub fn random_pd_form<R: Rng + ?Sized>(n: usize, d: u32, rng: &mut R) -> Result<Form<f64>> {
    let basis = monomial_basis(n, d / 2)?;
    let m = basis.len();
    let a = DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let gram = a.transpose() * &a / (m as f64) + DMatrix::identity(m, m) * 0.2;
    let sym = SymMatrix::from_dmatrix((&gram + gram.transpose()) * 0.5).expect("symmetric");
    gram_to_form(&sym, &basis)
}
