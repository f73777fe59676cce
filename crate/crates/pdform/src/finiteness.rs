//! Finiteness of sublevel-set volume: exact classification for binary forms,
//! deterministic quadrature for their volumes, a numeric zero-structure check
//! for n ≥ 3, and a sampling diagnostic.
//!
//! For g binary (n = 2) everything reduces to the dehomogenization
//! ĝ(y) = g(1, y): projective zeros are real roots of ĝ together with a zero
//! "at infinity" of order d − deg ĝ, and the volume of {g ≤ 1} is finite iff
//! every zero has order ≤ d/2 − 1.  Orders come from exact square-free
//! decomposition, so binary verdicts are certified.  For n ≥ 3 the boundary
//! structure is probed numerically: multi-start minimization of g on the unit
//! sphere locates zeros, and tangent Hessian eigenvalues decide whether each
//! zero is nondegenerate (every tangent eigenvalue bounded away from zero).

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::form::{EvalForm, Form};
use crate::matrix::SymMatrix;
use crate::mc::{sphere_point, McConfig};
use crate::quad::tanh_sinh;
use crate::ratpoly::{isolate_real_roots, RatPoly, RootLoc};
use crate::scalar::Coeff;
use crate::volume::volume_mc;

/// Verdict of a classification routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Strictly positive away from the origin: no projective zeros at all.
    PositiveDefinite,
    /// Zeros exist but every order is ≤ d/2 − 1, so the volume is finite.
    Finite,
    /// Some zero has order > d/2 − 1: the volume diverges.
    Infinite,
    /// The form takes negative values.
    Negative,
    /// All zeros are nondegenerate (tangent Hessian positive definite).
    Generic,
    /// Some zero has a clearly degenerate tangent Hessian.
    NonGeneric,
    /// The numeric check could not decide at the configured tolerances.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::PositiveDefinite => "positive_definite",
            Verdict::Finite => "finite",
            Verdict::Infinite => "infinite",
            Verdict::Negative => "negative",
            Verdict::Generic => "generic",
            Verdict::NonGeneric => "non_generic",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// One projective zero of a form, as located by a classifier.
#[derive(Debug, Clone, Serialize)]
pub struct ZeroEntry {
    /// True for the zero in the direction missing from the dehomogenization.
    pub at_infinity: bool,
    /// Unit-vector representative of the zero direction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<Vec<f64>>,
    /// Exact rational root of the dehomogenized polynomial, when it is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_root: Option<String>,
    /// Vanishing order (binary classification; certified).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    /// Value of the form at the reported location (numeric checks).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    /// Number of tangent Hessian eigenvalues inside the zero band.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hessian_corank: Option<usize>,
    /// Smallest tangent Hessian eigenvalue at the zero.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tangent_min_eigenvalue: Option<f64>,
}

impl ZeroEntry {
    fn new(at_infinity: bool) -> Self {
        ZeroEntry {
            at_infinity,
            location: None,
            exact_root: None,
            order: None,
            value: None,
            hessian_corank: None,
            tangent_min_eigenvalue: None,
        }
    }
}

/// Result of a classification: verdict, located zeros, and how much to trust
/// it ("exact" verdicts are certified by rational arithmetic, "numeric"
/// verdicts hold at the recorded tolerances).
#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub zeros: Vec<ZeroEntry>,
    pub certification: String,
    pub tolerances: BTreeMap<String, f64>,
}

impl Classification {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Convert an f64 form to the exact rational form with the same (dyadic)
/// coefficients.
pub fn rationalize(g: &Form<f64>) -> Result<Form<BigRational>> {
    let mut out = Form::zero(g.n(), g.degree());
    for (alpha, &c) in g.terms() {
        if c == 0.0 {
            continue;
        }
        let r = BigRational::from_f64(c)
            .ok_or_else(|| Error::Input(format!("coefficient {c} is not finite")))?;
        out.add_term(alpha.clone(), r)?;
    }
    Ok(out)
}

/// ĝ(y) = g(1, y) for a binary form, as a dense univariate polynomial.
fn dehomogenize(g: &Form<BigRational>) -> RatPoly {
    let d = g.degree() as usize;
    let mut coeffs = vec![BigRational::zero(); d + 1];
    for (alpha, c) in g.terms() {
        coeffs[alpha.exps()[1] as usize] = c.clone();
    }
    RatPoly::new(coeffs)
}

struct BinaryFactor {
    poly: RatPoly,
    mult: u32,
    roots: Vec<RootLoc>,
}

struct BinaryAnalysis {
    hat: RatPoly,
    lead_positive: bool,
    order_at_infinity: u32,
    factors: Vec<BinaryFactor>,
}

fn analyze_binary(g: &Form<BigRational>) -> Result<BinaryAnalysis> {
    if g.n() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: g.n(),
        });
    }
    let d = g.degree();
    if d == 0 || d % 2 == 1 {
        return Err(Error::OddDegree(d));
    }
    if g.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let hat = dehomogenize(g);
    let deg = hat.degree().expect("nonzero form dehomogenizes to nonzero") as u32;
    let factors = hat
        .square_free_decomposition()?
        .into_iter()
        .map(|(poly, mult)| {
            let roots = isolate_real_roots(&poly)?;
            Ok(BinaryFactor { poly, mult, roots })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinaryAnalysis {
        lead_positive: hat.leading().is_positive(),
        order_at_infinity: d - deg,
        hat,
        factors,
    })
}

fn classification_from(an: &BinaryAnalysis, d: u32) -> Classification {
    let finite_limit = d / 2 - 1;
    let mut has_odd = an.order_at_infinity % 2 == 1;
    let mut located: Vec<(f64, ZeroEntry)> = Vec::new();
    for factor in &an.factors {
        for root in &factor.roots {
            let y = root.to_f64(&factor.poly);
            let norm = (1.0 + y * y).sqrt();
            let mut entry = ZeroEntry::new(false);
            entry.location = Some(vec![1.0 / norm, y / norm]);
            entry.order = Some(factor.mult);
            if let RootLoc::Exact(r) = root {
                entry.exact_root = Some(r.to_string());
            }
            if factor.mult % 2 == 1 {
                has_odd = true;
            }
            located.push((y, entry));
        }
    }
    located.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut zeros: Vec<ZeroEntry> = located.into_iter().map(|(_, e)| e).collect();
    if an.order_at_infinity > 0 {
        let mut entry = ZeroEntry::new(true);
        entry.location = Some(vec![0.0, 1.0]);
        entry.order = Some(an.order_at_infinity);
        zeros.push(entry);
    }
    let verdict = if !an.lead_positive || has_odd {
        Verdict::Negative
    } else if zeros.is_empty() {
        Verdict::PositiveDefinite
    } else if zeros
        .iter()
        .all(|z| z.order.unwrap_or(u32::MAX) <= finite_limit)
    {
        Verdict::Finite
    } else {
        Verdict::Infinite
    };
    Classification {
        verdict,
        zeros,
        certification: "exact".into(),
        tolerances: BTreeMap::new(),
    }
}

/// Exact classification of a binary form: negative / positive_definite /
/// finite / infinite, with every projective zero and its certified order.
pub fn classify_binary(g: &Form<BigRational>) -> Result<Classification> {
    let an = analyze_binary(g)?;
    Ok(classification_from(&an, g.degree()))
}

/// Locate an exactly-negative value of ĝ for the error report.
fn negative_witness_error(an: &BinaryAnalysis, d: u32) -> Error {
    let bound = an.hat.cauchy_root_bound() + BigRational::one();
    let mut candidates = vec![bound.clone(), -bound, BigRational::zero()];
    let delta_scale = BigRational::new(1.into(), 65536.into());
    for factor in &an.factors {
        for root in &factor.roots {
            let y = root.to_f64(&factor.poly);
            if let Some(r) = BigRational::from_f64(y) {
                let delta = &delta_scale * (BigRational::one() + Signed::abs(&r));
                candidates.push(&r + &delta);
                candidates.push(&r - &delta);
            }
        }
    }
    for c in candidates {
        let v = an.hat.eval(&c);
        if v.is_negative() {
            let y = c.to_f64();
            let norm = (1.0 + y * y).sqrt();
            let value = v.to_f64() / (1.0 + y * y).powf(d as f64 / 2.0);
            return Error::NegativeForm {
                point: vec![1.0 / norm, y / norm],
                value,
            };
        }
    }
    Error::NegativeForm {
        point: vec![0.0, 1.0],
        value: an.hat.leading().to_f64(),
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

struct SegmentFactor {
    coeffs: Vec<f64>,
    dcoeffs: Vec<f64>,
    mult: i32,
}

/// Integrate ĝ^{−2/d} over [a, b] where the endpoints may be roots of a
/// factor.  Within 1e−8 of a root the factor is replaced by its linearization
/// u'(r)·(x − r), using the cancellation-free endpoint distance supplied by
/// the quadrature.
fn integrate_segment(
    a: f64,
    b: f64,
    left: Option<usize>,
    right: Option<usize>,
    factors: &[SegmentFactor],
    lead: f64,
    expo: f64,
) -> Result<f64> {
    let eps_a = 1e-8 * (1.0 + a.abs());
    let eps_b = 1e-8 * (1.0 + b.abs());
    let lslope = left.map(|i| horner(&factors[i].dcoeffs, a));
    let rslope = right.map(|i| horner(&factors[i].dcoeffs, b));
    let integrand = |x: f64, da: f64, db: f64| -> f64 {
        let mut p = lead;
        for (i, f) in factors.iter().enumerate() {
            let v = if left == Some(i) && da < eps_a {
                lslope.unwrap() * da
            } else if right == Some(i) && db < eps_b {
                rslope.unwrap() * (-db)
            } else {
                horner(&f.coeffs, x)
            };
            p *= v.powi(f.mult);
        }
        if p <= 0.0 {
            0.0
        } else {
            p.powf(expo)
        }
    };
    tanh_sinh(a, b, 1e-10, integrand).or_else(|_| tanh_sinh(a, b, 3e-8, integrand))
}

/// Tail ∫_R^∞ p(y)^{−2/d} dy via u = 1/y: the reversed-coefficient polynomial
/// is regular and positive near u = 0, and the u^{2m/d − 2} factor (exponent
/// in (−1, 0]) is an integrable endpoint singularity.
fn integrate_tail(coeffs: &[f64], big: f64, d: u32) -> Result<f64> {
    let m = coeffs.len() - 1;
    let rev: Vec<f64> = coeffs.iter().rev().cloned().collect();
    let texp = 2.0 * m as f64 / d as f64 - 2.0;
    let pexp = -2.0 / d as f64;
    let integrand = |_x: f64, da: f64, _db: f64| -> f64 {
        let rv = horner(&rev, da);
        if rv <= 0.0 {
            return 0.0;
        }
        rv.powf(pexp) * da.powf(texp)
    };
    tanh_sinh(0.0, 1.0 / big, 1e-10, integrand).or_else(|_| tanh_sinh(0.0, 1.0 / big, 3e-8, integrand))
}

/// Volume of {g ≤ 1} for a binary form by deterministic quadrature:
/// vol = ∫_ℝ ĝ(y)^{−2/d} dy, split at the (exactly located) real roots of ĝ
/// with tails mapped to [0, 1/R].  Requires a finite or positive-definite
/// classification; errors with a witness on negative forms and with
/// `InfiniteVolume` when a zero's order makes the integral diverge.
pub fn binary_volume_quadrature(g: &Form<BigRational>) -> Result<f64> {
    let d = g.degree();
    let an = analyze_binary(g)?;
    let cls = classification_from(&an, d);
    match cls.verdict {
        Verdict::PositiveDefinite | Verdict::Finite => {}
        Verdict::Negative => return Err(negative_witness_error(&an, d)),
        _ => {
            let worst = cls
                .zeros
                .iter()
                .filter_map(|z| z.order)
                .max()
                .unwrap_or(0);
            return Err(Error::InfiniteVolume(format!(
                "a projective zero of order {worst} exceeds the integrability threshold {}",
                d / 2 - 1
            )));
        }
    }

    let lead = an.hat.leading().to_f64();
    let factors: Vec<SegmentFactor> = an
        .factors
        .iter()
        .map(|f| SegmentFactor {
            coeffs: f.poly.to_f64_coeffs(),
            dcoeffs: f.poly.derivative().to_f64_coeffs(),
            mult: f.mult as i32,
        })
        .collect();
    let mut roots: Vec<(f64, usize)> = Vec::new();
    for (i, f) in an.factors.iter().enumerate() {
        for r in &f.roots {
            roots.push((r.to_f64(&f.poly), i));
        }
    }
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rmax = roots.iter().map(|r| r.0.abs()).fold(0.0f64, f64::max);
    let big = 1.0 + rmax;
    let expo = -2.0 / d as f64;

    let mut breakpoints: Vec<(f64, Option<usize>)> = vec![(-big, None)];
    breakpoints.extend(roots.iter().map(|&(r, i)| (r, Some(i))));
    breakpoints.push((big, None));

    let mut total = 0.0;
    for w in breakpoints.windows(2) {
        let (a, la) = w[0];
        let (b, rb) = w[1];
        if b - a <= f64::EPSILON * (1.0 + a.abs().max(b.abs())) {
            continue;
        }
        total += integrate_segment(a, b, la, rb, &factors, lead, expo)?;
    }

    let hat_coeffs = an.hat.to_f64_coeffs();
    let hat_reflected: Vec<f64> = hat_coeffs
        .iter()
        .enumerate()
        .map(|(j, &c)| if j % 2 == 0 { c } else { -c })
        .collect();
    total += integrate_tail(&hat_coeffs, big, d)?;
    total += integrate_tail(&hat_reflected, big, d)?;
    Ok(total)
}

/// Convenience wrapper: exact-rationalize an f64 binary form and integrate.
pub fn binary_volume_quadrature_f64(g: &Form<f64>) -> Result<f64> {
    binary_volume_quadrature(&rationalize(g)?)
}

/// Configuration for the numeric zero-structure check on the unit sphere.
#[derive(Debug, Clone)]
pub struct GenericConfig {
    /// Random starts per variable (total random starts = this × n).
    pub starts_per_var: usize,
    /// Seed for the deterministic start set.
    pub seed: u64,
    /// Absolute zero threshold; default 1e−10 × (sampled sup-norm of g).
    pub tol_zero: Option<f64>,
    /// Gradient norm required at a reported zero (on the sup-normalized form).
    pub tol_grad: f64,
    /// Tangent Hessian eigenvalue band; default 1e−6 × ‖Hess‖ per zero.
    pub tol_pd: Option<f64>,
    /// Projected-descent iteration cap per start.
    pub max_iters: usize,
}

impl Default for GenericConfig {
    fn default() -> Self {
        GenericConfig {
            starts_per_var: 64,
            seed: 7,
            tol_zero: None,
            tol_grad: 1e-7,
            tol_pd: None,
            max_iters: 300,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|t| t * t).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    for t in &mut v {
        *t /= n;
    }
    v
}

/// Orthonormal basis of the tangent space at unit vector z, as the non-pivot
/// columns of the Householder reflector exchanging z with ±e_j.
fn tangent_basis(z: &[f64]) -> DMatrix<f64> {
    let n = z.len();
    let j = (0..n)
        .max_by(|&a, &b| z[a].abs().total_cmp(&z[b].abs()))
        .unwrap();
    let s = if z[j] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = z.to_vec();
    v[j] += s;
    let vn2: f64 = v.iter().map(|t| t * t).sum();
    let mut b = DMatrix::zeros(n, n - 1);
    let mut col = 0;
    for k in 0..n {
        if k == j {
            continue;
        }
        for row in 0..n {
            let idv = if row == k { 1.0 } else { 0.0 };
            b[(row, col)] = idv - 2.0 * v[row] * v[k] / vn2;
        }
        col += 1;
    }
    b
}

#[derive(Clone)]
struct Critical {
    val: f64,
    point: Vec<f64>,
    grad_norm: f64,
}

struct SphereObjective {
    geval: EvalForm,
    partials: Vec<EvalForm>,
    second: Vec<(usize, usize, EvalForm)>,
    n: usize,
}

impl SphereObjective {
    fn new(g: &Form<f64>) -> Result<Self> {
        let n = g.n();
        let partials: Vec<EvalForm> = (0..n)
            .map(|i| Ok(g.partial(i)?.compiled()))
            .collect::<Result<_>>()?;
        let mut second = Vec::new();
        for i in 0..n {
            let gi = g.partial(i)?;
            for j in i..n {
                second.push((i, j, gi.partial(j)?.compiled()));
            }
        }
        Ok(SphereObjective {
            geval: g.compiled(),
            partials,
            second,
            n,
        })
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.geval.eval(x)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.partials.iter().map(|p| p.eval(x)).collect()
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n, self.n);
        for (i, j, f) in &self.second {
            let v = f.eval(x);
            h[(*i, *j)] = v;
            h[(*j, *i)] = v;
        }
        h
    }

    /// Projected descent with backtracking, then tangent-space Newton polish.
    fn descend(&self, start: Vec<f64>, max_iters: usize) -> Critical {
        let mut x = normalize(start);
        let mut val = self.value(&x);
        let mut eta = 0.05f64;
        for _ in 0..max_iters {
            let gr = self.gradient(&x);
            let rad = dot(&x, &gr);
            let pg: Vec<f64> = gr.iter().zip(&x).map(|(g, xi)| g - rad * xi).collect();
            let pgn = norm(&pg);
            if pgn <= 1e-13 * (1.0 + val.abs()) {
                break;
            }
            let mut accepted = false;
            let mut e = eta;
            for _ in 0..60 {
                let cand: Vec<f64> = x.iter().zip(&pg).map(|(xi, p)| xi - e * p).collect();
                let cand = normalize(cand);
                let cval = self.value(&cand);
                if cval <= val - 0.25 * e * pgn * pgn {
                    x = cand;
                    val = cval;
                    eta = (e * 2.0).min(0.25);
                    accepted = true;
                    break;
                }
                e *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        // Newton on tangent coordinates for quadratic-rate convergence.
        for _ in 0..15 {
            let gr = self.gradient(&x);
            let rad = dot(&x, &gr);
            let b = tangent_basis(&x);
            let grv = DVector::from_vec(gr.clone());
            let tg = b.transpose() * &grv;
            let pgn = tg.norm();
            if pgn <= 1e-16 * (1.0 + val.abs()) {
                break;
            }
            let h = self.hessian(&x);
            let mut t = b.transpose() * &h * &b;
            for k in 0..t.nrows() {
                t[(k, k)] -= rad;
            }
            let Some(step) = t.lu().solve(&(-&tg)) else {
                break;
            };
            let move_vec = &b * step;
            let cand: Vec<f64> = x.iter().zip(move_vec.iter()).map(|(xi, m)| xi + m).collect();
            let cand = normalize(cand);
            let cval = self.value(&cand);
            let cgr = self.gradient(&cand);
            let crad = dot(&cand, &cgr);
            let cpg: Vec<f64> = cgr.iter().zip(&cand).map(|(g, xi)| g - crad * xi).collect();
            if cval.abs() <= val.abs() + 1e-18 || norm(&cpg) <= pgn {
                x = cand;
                val = cval;
            } else {
                break;
            }
        }
        let gr = self.gradient(&x);
        Critical {
            val,
            grad_norm: norm(&gr),
            point: x,
        }
    }
}

/// Flip sign so the largest-magnitude coordinate is positive (canonical
/// representative among antipodes).
fn canonical_orientation(mut z: Vec<f64>) -> Vec<f64> {
    let j = (0..z.len())
        .max_by(|&a, &b| z[a].abs().total_cmp(&z[b].abs()))
        .unwrap();
    if z[j] < 0.0 {
        for t in &mut z {
            *t = -*t;
        }
    }
    z
}

fn angular_distance_antipodal(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b).abs().min(1.0);
    c.acos()
}

/// True when the spherical arc from `p` to `q` (sign of `q` chosen to make
/// the nearer of ±q) stays within `tol` of zero at its quarter points.
fn valley_connected(obj: &SphereObjective, p: &[f64], q: &[f64], tol: f64) -> bool {
    let sign = if dot(p, q) >= 0.0 { 1.0 } else { -1.0 };
    for s in [0.25, 0.5, 0.75] {
        let m: Vec<f64> =
            p.iter().zip(q).map(|(a, b)| (1.0 - s) * a + s * sign * b).collect();
        if norm(&m) < 1e-6 {
            return false;
        }
        let m = normalize(m);
        if obj.value(&m).abs() > tol {
            return false;
        }
    }
    true
}

fn uf_find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Union nearby clusters whose connecting arcs stay below `8 * tol_zero`;
/// each merged group keeps its lowest-value member as representative.
fn merge_valley_clusters(
    obj: &SphereObjective,
    clusters: Vec<Critical>,
    tol_zero: f64,
) -> Vec<Critical> {
    let k = clusters.len();
    let mut parent: Vec<usize> = (0..k).collect();
    for i in 0..k {
        for j in (i + 1)..k {
            if angular_distance_antipodal(&clusters[i].point, &clusters[j].point) < 0.25
                && valley_connected(obj, &clusters[i].point, &clusters[j].point, 8.0 * tol_zero)
            {
                let (ri, rj) = (uf_find(&mut parent, i), uf_find(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = rj.min(ri);
                }
            }
        }
    }
    let mut merged: Vec<Critical> = Vec::new();
    let mut root_slot: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..k {
        let r = uf_find(&mut parent, i);
        match root_slot.get(&r) {
            Some(&slot) => {
                if clusters[i].val < merged[slot].val {
                    merged[slot] = clusters[i].clone();
                }
            }
            None => {
                root_slot.insert(r, merged.len());
                merged.push(clusters[i].clone());
            }
        }
    }
    merged
}

/// Numeric zero-structure check for n ≥ 3, even d ≥ 4: multi-start projected
/// minimization of g on the unit sphere, clustering of near-zero minima, and
/// tangent Hessian eigenvalue tests at each cluster.
pub fn generic_check(g: &Form<f64>, cfg: &GenericConfig) -> Result<Classification> {
    let n = g.n();
    let d = g.degree();
    if n < 3 {
        return Err(Error::Input(
            "zero-structure search needs n >= 3; binary forms have the exact classifier classify_binary".into(),
        ));
    }
    if d % 2 == 1 {
        return Err(Error::OddDegree(d));
    }
    if d < 4 {
        return Err(Error::Input(
            "degree-2 forms are classified exactly by matrix eigenvalues; this check needs d >= 4".into(),
        ));
    }
    if g.is_zero() {
        return Err(Error::ZeroPolynomial);
    }

    // Work on the sup-normalized form so flat tolerances are meaningful;
    // reported values are scaled back at the end.
    let coeff_scale = g.max_abs_coefficient();
    let gs = g.scale(1.0 / coeff_scale);
    let obj = SphereObjective::new(&gs)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut buf = vec![0.0f64; n];
    for _ in 0..cfg.starts_per_var * n {
        sphere_point(&mut rng, &mut buf);
        starts.push(buf.clone());
    }
    if n <= 12 {
        let inv = 1.0 / (n as f64).sqrt();
        for mask in 0u64..(1u64 << (n - 1)) {
            let mut v = vec![inv; n];
            for (j, t) in v.iter_mut().enumerate().skip(1) {
                if (mask >> (j - 1)) & 1 == 1 {
                    *t = -inv;
                }
            }
            starts.push(v);
        }
    }
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        starts.push(v);
    }

    let mut sup = 0.0f64;
    for _ in 0..1024 {
        sphere_point(&mut rng, &mut buf);
        sup = sup.max(obj.value(&buf).abs());
    }
    for s in &starts {
        sup = sup.max(obj.value(s).abs());
    }
    let tol_zero = cfg.tol_zero.unwrap_or(1e-10 * sup.max(1e-300));

    let finals: Vec<Critical> = starts
        .into_iter()
        .map(|s| obj.descend(s, cfg.max_iters))
        .collect();
    let start_count = finals.len();

    let mut tolerances = BTreeMap::new();
    tolerances.insert("tol_zero".into(), tol_zero * coeff_scale);
    tolerances.insert("tol_grad".into(), cfg.tol_grad * coeff_scale);
    tolerances.insert("cluster_angle".into(), 1e-3);
    tolerances.insert("starts".into(), start_count as f64);

    let best = finals
        .iter()
        .min_by(|a, b| a.val.total_cmp(&b.val))
        .expect("at least one start");

    if best.val < -tol_zero {
        let mut entry = ZeroEntry::new(false);
        entry.location = Some(canonical_orientation(best.point.clone()));
        entry.value = Some(best.val * coeff_scale);
        return Ok(Classification {
            verdict: Verdict::Negative,
            zeros: vec![entry],
            certification: "numeric".into(),
            tolerances,
        });
    }
    if best.val > tol_zero {
        return Ok(Classification {
            verdict: Verdict::PositiveDefinite,
            zeros: Vec::new(),
            certification: "numeric".into(),
            tolerances,
        });
    }

    // Cluster the near-zero endpoints, antipodes identified.
    let mut candidates: Vec<&Critical> = finals.iter().filter(|c| c.val <= tol_zero).collect();
    candidates.sort_by(|a, b| {
        a.val
            .total_cmp(&b.val)
            .then_with(|| a.point.iter().map(|t| t.to_bits()).cmp(b.point.iter().map(|t| t.to_bits())))
    });
    let mut clusters: Vec<Critical> = Vec::new();
    for c in candidates {
        let hit = clusters
            .iter()
            .any(|rep| angular_distance_antipodal(&rep.point, &c.point) < 1e-3);
        if !hit {
            clusters.push(Critical {
                val: c.val,
                grad_norm: c.grad_norm,
                point: canonical_orientation(c.point.clone()),
            });
        }
    }
    // A zero that is flat to order k along some tangent direction lets
    // descent endpoints scatter over a region of size ~ tol_zero^{1/k},
    // far beyond the cluster radius.  Merge clusters connected by a valley:
    // the arc between them stays below a small multiple of tol_zero.
    let clusters = merge_valley_clusters(&obj, clusters, tol_zero);

    let mut any_unconverged = false;
    let mut any_negative = false;
    let mut any_ambiguous = false;
    let mut any_degenerate = false;
    let mut max_tol_pd = 0.0f64;
    let mut zeros = Vec::new();
    for rep in &clusters {
        if rep.grad_norm > cfg.tol_grad {
            any_unconverged = true;
        }
        let h = obj.hessian(&rep.point);
        let hnorm = h.iter().map(|t| t * t).sum::<f64>().sqrt();
        let tol_pd = cfg.tol_pd.unwrap_or(1e-6 * hnorm.max(1e-300));
        max_tol_pd = max_tol_pd.max(tol_pd);
        let gr = obj.gradient(&rep.point);
        let rad = dot(&rep.point, &gr);
        let b = tangent_basis(&rep.point);
        let mut t = b.transpose() * &h * &b;
        for k in 0..t.nrows() {
            t[(k, k)] -= rad;
        }
        let eigs = SymMatrix::from_dmatrix(t)?.eigenvalues();
        let lam_min = eigs[0];
        let corank = eigs.iter().filter(|&&l| f64::abs(l) <= tol_pd).count();
        if lam_min < -tol_pd {
            any_negative = true;
        } else if corank > 0 {
            if eigs
                .iter()
                .filter(|&&l| f64::abs(l) <= tol_pd)
                .all(|&l| f64::abs(l) <= 0.01 * tol_pd)
            {
                any_degenerate = true;
            } else {
                any_ambiguous = true;
            }
        }
        let mut entry = ZeroEntry::new(false);
        entry.location = Some(rep.point.clone());
        entry.value = Some(rep.val * coeff_scale);
        entry.hessian_corank = Some(corank);
        entry.tangent_min_eigenvalue = Some(lam_min * coeff_scale);
        zeros.push(entry);
    }
    tolerances.insert("tol_pd".into(), max_tol_pd * coeff_scale);

    let verdict = if any_negative {
        Verdict::Negative
    } else if any_degenerate {
        Verdict::NonGeneric
    } else if any_ambiguous || any_unconverged || clusters.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::Generic
    };
    Ok(Classification {
        verdict,
        zeros,
        certification: "numeric".into(),
        tolerances,
    })
}

/// Diagnostic verdict from the sampling-based finiteness probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticVerdict {
    LikelyFinite,
    LikelyInfinite,
    Inconclusive,
    Negative,
}

impl DiagnosticVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            DiagnosticVerdict::LikelyFinite => "likely_finite",
            DiagnosticVerdict::LikelyInfinite => "likely_infinite",
            DiagnosticVerdict::Inconclusive => "inconclusive",
            DiagnosticVerdict::Negative => "negative",
        }
    }
}

/// One stage of the growing-sample diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticStage {
    pub samples: u64,
    pub value: f64,
    pub stderr: f64,
    pub max_term_share: f64,
    /// Hill tail-index estimate of the |term| distribution at this stage.
    pub tail_index: Option<f64>,
}

/// Report of the sampling diagnostic: stage estimates, drift between stages
/// in combined standard errors, the decay of the heaviest-sample share, and
/// the tail index of the integrand sample distribution.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticReport {
    pub stages: Vec<DiagnosticStage>,
    pub max_drift_z: f64,
    pub share_ratio: f64,
    /// Tail index from the final (largest) stage; at or below 1 the term
    /// distribution has a divergent mean and the volume is likely infinite.
    pub tail_index: Option<f64>,
    pub verdict: DiagnosticVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative_witness: Option<Vec<f64>>,
}

impl DiagnosticReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Sampling-based finiteness probe: run the volume estimator at a 1:4:16
/// sample schedule and look at (a) the Hill tail index of the integrand's
/// |term| distribution — a divergent integral shows a tail index at or below
/// 1 (infinite mean), while an integrable singularity keeps it strictly
/// above 1; (b) drift of the estimate between stages in combined standard
/// errors; and (c) the share of the total carried by the heaviest single
/// sample.  A sampled negative value short-circuits to a `negative` verdict
/// with the witness point.
pub fn finiteness_diagnostic(g: &Form<f64>, cfg: &McConfig) -> Result<DiagnosticReport> {
    let base = cfg.samples.max(16_000);
    let schedule = [base / 16, base / 4, base];
    let mut stages: Vec<DiagnosticStage> = Vec::new();
    for (i, s) in schedule.iter().enumerate() {
        let stage_cfg = McConfig {
            samples: *s,
            ..cfg.offshoot(31 + i as u64)
        };
        match volume_mc(g, &stage_cfg) {
            Ok(est) => stages.push(DiagnosticStage {
                samples: est.samples,
                value: est.value,
                stderr: est.stderr,
                max_term_share: est.max_term_share,
                tail_index: est.tail_index,
            }),
            Err(Error::NegativeForm { point, .. }) => {
                return Ok(DiagnosticReport {
                    stages,
                    max_drift_z: 0.0,
                    share_ratio: 0.0,
                    tail_index: None,
                    verdict: DiagnosticVerdict::Negative,
                    negative_witness: Some(point),
                });
            }
            Err(e) => return Err(e),
        }
    }

    let mut max_drift_z = 0.0f64;
    for w in stages.windows(2) {
        let diff = (w[1].value - w[0].value).abs();
        let denom = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
        // Floor the error so a drift against exactly-zero stderr stays a
        // finite (astronomically large) z rather than an unserializable inf.
        let z = if diff == 0.0 { 0.0 } else { diff / denom.max(1e-300) };
        max_drift_z = max_drift_z.max(z);
    }
    let share_last = stages[2].max_term_share;
    let share_first = stages[0].max_term_share;
    let share_ratio = if share_last == 0.0 {
        0.0
    } else if share_first == 0.0 {
        1.0
    } else {
        share_last / share_first
    };

    // The term distribution of the spherical-reduction integrand is Pareto
    // near a boundary zero, with tail index alpha = 1 exactly at the
    // finite/infinite threshold: alpha <= 1 means the mean (the volume)
    // diverges, alpha > 1 means it exists.  The Hill estimate over the top
    // 512 order statistics has sd ~ alpha/sqrt(512) ~ 0.044*alpha, so the
    // cut at 1.10 sits 2+ sigma above alpha = 1 and the cut at 1.18 sits
    // 2+ sigma below alpha = 4/3, the slowest-decaying finite case a
    // boundary zero of a sextic threefold produces.
    let tail_index = stages[2].tail_index;
    let verdict = match tail_index {
        Some(a) if a <= 1.10 && share_last >= 0.01 => DiagnosticVerdict::LikelyInfinite,
        Some(a) if a >= 1.18 && max_drift_z <= 4.0 => DiagnosticVerdict::LikelyFinite,
        _ if share_last <= 1e-3 && max_drift_z <= 4.0 => DiagnosticVerdict::LikelyFinite,
        None if max_drift_z <= 4.0 => DiagnosticVerdict::LikelyFinite,
        _ => DiagnosticVerdict::Inconclusive,
    };
    Ok(DiagnosticReport {
        stages,
        max_drift_z,
        share_ratio,
        tail_index,
        verdict,
        negative_witness: None,
    })
}
