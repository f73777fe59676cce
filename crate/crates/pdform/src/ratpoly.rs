//! Exact univariate polynomials over the rationals.
//!
//! This is the arithmetic backbone of the binary classification: square-free
//! decomposition by Yun's algorithm assigns exact multiplicities, Sturm
//! chains count real roots in intervals, and bisection isolates each root —
//! all without floating point, so root orders are certified rather than
//! guessed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::Coeff;

/// Dense univariate polynomial with ascending rational coefficients.
/// The zero polynomial is the empty coefficient vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatPoly {
    coeffs: Vec<BigRational>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        RatPoly { coeffs }
    }

    pub fn zero() -> Self {
        RatPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        RatPoly::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Leading coefficient; panics on the zero polynomial.
    pub fn leading(&self) -> &BigRational {
        self.coeffs.last().expect("nonzero polynomial")
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Coefficients converted once for fast repeated f64 evaluation.
    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.to_f64()).collect()
    }

    pub fn derivative(&self) -> RatPoly {
        if self.coeffs.len() <= 1 {
            return RatPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_u64(i as u64))
            .collect();
        RatPoly::new(coeffs)
    }

    pub fn neg(&self) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![BigRational::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        RatPoly::new(out)
    }

    pub fn sub(&self, other: &RatPoly) -> RatPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        RatPoly::new(out)
    }

    pub fn scale(&self, c: &BigRational) -> RatPoly {
        RatPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    /// Euclidean division: `self = q * div + r` with `deg r < deg div`.
    pub fn div_rem(&self, div: &RatPoly) -> Result<(RatPoly, RatPoly)> {
        if div.is_zero() {
            return Err(Error::Input("division by the zero polynomial".into()));
        }
        let dd = div.degree().unwrap();
        let lead = div.leading().clone();
        let mut rem = self.coeffs.clone();
        if rem.len() < div.coeffs.len() {
            return Ok((RatPoly::zero(), self.clone()));
        }
        let qn = rem.len() - dd;
        let mut q = vec![BigRational::zero(); qn];
        for k in (0..qn).rev() {
            let c = &rem[k + dd] / &lead;
            if !c.is_zero() {
                for (j, dc) in div.coeffs.iter().enumerate() {
                    let v = &c * dc;
                    rem[k + j] -= v;
                }
            }
            q[k] = c;
        }
        rem.truncate(dd);
        Ok((RatPoly::new(q), RatPoly::new(rem)))
    }

    /// Monic multiple of the GCD (Euclid with positive-leading normalization).
    pub fn gcd(&self, other: &RatPoly) -> Result<RatPoly> {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b)?;
            a = b;
            b = r;
        }
        if a.is_zero() {
            return Ok(a);
        }
        let lead = a.leading().clone();
        Ok(a.scale(&(BigRational::one() / lead)))
    }

    /// Yun's square-free decomposition: returns `(factor, multiplicity)`
    /// pairs with square-free, pairwise-coprime, non-constant factors, so
    /// that `self = lc * prod factor_i^{mult_i}` up to the constant.
    pub fn square_free_decomposition(&self) -> Result<Vec<(RatPoly, u32)>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        if self.degree() == Some(0) {
            return Ok(Vec::new());
        }
        let lead = self.leading().clone();
        let f = self.scale(&(BigRational::one() / lead));
        let fp = f.derivative();
        let a0 = f.gcd(&fp)?;
        let mut out = Vec::new();
        if a0.degree() == Some(0) || a0.is_zero() {
            out.push((f, 1));
            return Ok(out);
        }
        let (mut b, _) = f.div_rem(&a0)?;
        let (mut c, _) = fp.div_rem(&a0)?;
        let mut m = 1u32;
        loop {
            let d = c.sub(&b.derivative());
            if d.is_zero() {
                if b.degree().is_some_and(|dg| dg > 0) {
                    out.push((b, m));
                }
                break;
            }
            let a = b.gcd(&d)?;
            if a.degree().is_some_and(|dg| dg > 0) {
                out.push((a.clone(), m));
            }
            let (nb, _) = b.div_rem(&a)?;
            let (nc, _) = d.div_rem(&a)?;
            b = nb;
            c = nc;
            m += 1;
            if b.degree() == Some(0) {
                break;
            }
        }
        Ok(out)
    }

    /// Sturm chain of a square-free polynomial (each remainder negated and
    /// positively rescaled to keep coefficients small without changing signs).
    pub fn sturm_chain(&self) -> Result<Vec<RatPoly>> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let k = chain.len();
            if chain[k - 1].is_zero() {
                chain.pop();
                break;
            }
            if chain[k - 1].degree() == Some(0) {
                break;
            }
            let (_, r) = chain[k - 2].div_rem(&chain[k - 1])?;
            if r.is_zero() {
                break;
            }
            let neg = r.neg();
            // Positive rescale by 1/|lc| keeps growth in check.
            let lead = Signed::abs(neg.leading());
            chain.push(neg.scale(&(BigRational::one() / lead)));
        }
        Ok(chain)
    }

    /// Upper bound on |roots|: Cauchy's `1 + max |a_i / a_n|`.
    pub fn cauchy_root_bound(&self) -> BigRational {
        let lead = Signed::abs(self.leading());
        let mut best = BigRational::zero();
        for c in &self.coeffs[..self.coeffs.len() - 1] {
            let v = Signed::abs(c) / lead.clone();
            if v > best {
                best = v;
            }
        }
        best + BigRational::one()
    }
}

fn sign_of(v: &BigRational) -> i32 {
    if v.is_zero() {
        0
    } else if v.is_positive() {
        1
    } else {
        -1
    }
}

fn variations(signs: impl Iterator<Item = i32>) -> usize {
    let mut count = 0;
    let mut last = 0;
    for s in signs {
        if s == 0 {
            continue;
        }
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

/// Sign variations of the chain at a finite point.
pub fn variations_at(chain: &[RatPoly], x: &BigRational) -> usize {
    variations(chain.iter().map(|p| sign_of(&p.eval(x))))
}

/// Sign variations at `-inf` (false) or `+inf` (true).
pub fn variations_at_infinity(chain: &[RatPoly], positive: bool) -> usize {
    variations(chain.iter().map(|p| {
        if p.is_zero() {
            return 0;
        }
        let s = sign_of(p.leading());
        if positive || p.degree().unwrap() % 2 == 0 {
            s
        } else {
            -s
        }
    }))
}

/// Number of distinct real roots of the (square-free) chain head in `(a, b]`.
pub fn count_roots_in(chain: &[RatPoly], a: &BigRational, b: &BigRational) -> usize {
    variations_at(chain, a).saturating_sub(variations_at(chain, b))
}

/// A located real root of a square-free polynomial: either exactly rational,
/// or isolated in an open interval containing exactly one root.
#[derive(Debug, Clone)]
pub enum RootLoc {
    Exact(BigRational),
    Interval(BigRational, BigRational),
}

impl RootLoc {
    /// Refine to an f64 value (bisection to f64 resolution, then Newton).
    pub fn to_f64(&self, poly: &RatPoly) -> f64 {
        match self {
            RootLoc::Exact(r) => r.to_f64(),
            RootLoc::Interval(a, b) => {
                let (mut lo, mut hi) = (a.clone(), b.clone());
                let sign_lo = sign_of(&poly.eval(&lo));
                // Rational bisection until the f64 images collide or 80 steps.
                for _ in 0..80 {
                    let lof = lo.to_f64();
                    let hif = hi.to_f64();
                    if (hif - lof).abs() <= 1e-13 * (1.0 + lof.abs().max(hif.abs())) {
                        break;
                    }
                    let mid = (&lo + &hi) / BigRational::from_u64(2);
                    let s = sign_of(&poly.eval(&mid));
                    if s == 0 {
                        return mid.to_f64();
                    }
                    if s == sign_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let coeffs = poly.to_f64_coeffs();
                let dcoeffs = poly.derivative().to_f64_coeffs();
                let horner = |cs: &[f64], x: f64| cs.iter().rev().fold(0.0, |acc, &c| acc * x + c);
                let mut x = 0.5 * (lo.to_f64() + hi.to_f64());
                for _ in 0..8 {
                    let fx = horner(&coeffs, x);
                    let dx = horner(&dcoeffs, x);
                    if dx == 0.0 {
                        break;
                    }
                    let step = fx / dx;
                    let nx = x - step;
                    if !nx.is_finite() || (nx - x).abs() <= 1e-16 * (1.0 + x.abs()) {
                        x = nx.is_finite().then_some(nx).unwrap_or(x);
                        break;
                    }
                    x = nx;
                }
                x
            }
        }
    }
}

/// Rational roots of an exact polynomial by the rational-root theorem, with
/// divisor enumeration bounded so huge coefficients just skip the probe.
fn rational_root_candidates(p: &RatPoly) -> Vec<BigRational> {
    // Clear denominators to an integer polynomial.
    let mut denom_lcm = BigInt::one();
    for c in p.coeffs() {
        let d = c.denom();
        let g = num_integer::Integer::gcd(&denom_lcm, d);
        denom_lcm = &denom_lcm / g * d;
    }
    let ints: Vec<BigInt> = p
        .coeffs()
        .iter()
        .map(|c| c.numer() * (&denom_lcm / c.denom()))
        .collect();
    // Lowest nonzero coefficient (roots at zero are handled by the caller via
    // an exact hit at 0, but defend anyway) and leading coefficient.
    let lead = ints.last().cloned().unwrap_or_else(BigInt::one);
    let lowest = ints
        .iter()
        .find(|c| !c.is_zero())
        .cloned()
        .unwrap_or_else(BigInt::one);
    let divisors = |v: &BigInt| -> Vec<BigInt> {
        let v = v.abs();
        let limit = BigInt::from(1_000_000u64);
        if v.is_zero() || v > limit {
            return vec![BigInt::one()];
        }
        let mut out = Vec::new();
        let mut d = BigInt::one();
        while &d * &d <= v {
            if (&v % &d).is_zero() {
                out.push(d.clone());
                out.push(&v / &d);
            }
            d += 1;
            if out.len() > 200 {
                break;
            }
        }
        out
    };
    let mut cands = vec![BigRational::zero()];
    for pnum in divisors(&lowest) {
        for qden in divisors(&lead) {
            let r = BigRational::new(pnum.clone(), qden.clone());
            cands.push(r.clone());
            cands.push(-r);
        }
    }
    cands.sort();
    cands.dedup();
    cands
}

/// Isolate all real roots of a square-free polynomial.  Rational roots are
/// reported exactly; the rest get disjoint open isolating intervals.
/// Roots are returned in increasing order.
pub fn isolate_real_roots(poly: &RatPoly) -> Result<Vec<RootLoc>> {
    let deg = match poly.degree() {
        None => return Err(Error::ZeroPolynomial),
        Some(0) => return Ok(Vec::new()),
        Some(d) => d,
    };
    let _ = deg;
    // Split off exact rational roots first.
    let mut work = poly.clone();
    let mut exact = Vec::new();
    for r in rational_root_candidates(poly) {
        if work.degree() == Some(0) {
            break;
        }
        if work.eval(&r).is_zero() {
            // Square-free: each rational root is simple.
            let lin = RatPoly::new(vec![-&r * BigRational::one(), BigRational::one()]);
            let (q, rem) = work.div_rem(&lin)?;
            debug_assert!(rem.is_zero());
            work = q;
            exact.push(r);
        }
    }
    let mut out: Vec<(BigRational, RootLoc)> =
        exact.into_iter().map(|r| (r.clone(), RootLoc::Exact(r))).collect();

    if work.degree().is_some_and(|d| d > 0) {
        let chain = work.sturm_chain()?;
        let bound = work.cauchy_root_bound();
        let total = variations_at(&chain, &(-bound.clone())) - variations_at(&chain, &bound);
        let mut stack = vec![(-bound.clone(), bound.clone(), total)];
        while let Some((a, b, count)) = stack.pop() {
            if count == 0 {
                continue;
            }
            if count == 1 {
                out.push(((&a + &b) / BigRational::from_u64(2), RootLoc::Interval(a, b)));
                continue;
            }
            let mid = (&a + &b) / BigRational::from_u64(2);
            if work.eval(&mid).is_zero() {
                // A dyadic root the candidate probe missed: deflate and rescan
                // both halves against the reduced counts.
                out.push((mid.clone(), RootLoc::Exact(mid.clone())));
                let left = count_roots_in(&chain, &a, &mid) - 1;
                let right = count_roots_in(&chain, &mid, &b);
                // Nudge the endpoint off the root before recursing.
                let eps = (&b - &a) / BigRational::from_u64(1u64 << 20);
                stack.push((a, &mid - &eps, left));
                stack.push((&mid + &eps, b, right));
            } else {
                let left = count_roots_in(&chain, &a, &mid);
                stack.push((a, mid.clone(), left));
                stack.push((mid, b, count - left));
            }
        }
    }
    out.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(out.into_iter().map(|(_, loc)| loc).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::parse_rational;

    fn poly(cs: &[&str]) -> RatPoly {
        RatPoly::new(cs.iter().map(|s| parse_rational(s).unwrap()).collect())
    }

    #[test]
    fn division_and_gcd() {
        // (y^2 - 1) = (y + 1)(y - 1).
        let p = poly(&["-1", "0", "1"]);
        let d = poly(&["1", "1"]);
        let (q, r) = p.div_rem(&d).unwrap();
        assert!(r.is_zero());
        assert_eq!(q, poly(&["-1", "1"]));
        // gcd(y^2 - 1, y^2 - 2y + 1) = y - 1.
        let a = poly(&["-1", "0", "1"]);
        let b = poly(&["1", "-2", "1"]);
        assert_eq!(a.gcd(&b).unwrap(), poly(&["-1", "1"]));
    }

    #[test]
    fn yun_recovers_multiplicities() {
        // (y - 1)^2 (y + 2)^3 y.
        let f = poly(&["-1", "1"]);
        let g = poly(&["2", "1"]);
        let y = poly(&["0", "1"]);
        let p = f.mul(&f).mul(&g).mul(&g).mul(&g).mul(&y);
        let sf = p.square_free_decomposition().unwrap();
        let mut mults: Vec<(usize, u32)> = sf
            .iter()
            .map(|(fac, m)| (fac.degree().unwrap(), *m))
            .collect();
        mults.sort();
        assert_eq!(mults, vec![(1, 1), (1, 2), (1, 3)]);
        for (fac, m) in &sf {
            match m {
                1 => assert_eq!(fac, &y),
                2 => assert_eq!(fac, &f),
                3 => assert_eq!(fac, &g),
                _ => panic!("unexpected multiplicity"),
            }
        }
    }

    #[test]
    fn sturm_counts_roots() {
        // y^3 - y has roots -1, 0, 1.
        let p = poly(&["0", "-1", "0", "1"]);
        let chain = p.sturm_chain().unwrap();
        let lo = parse_rational("-2").unwrap();
        let hi = parse_rational("2").unwrap();
        assert_eq!(variations_at(&chain, &lo) - variations_at(&chain, &hi), 3);
        assert_eq!(
            variations_at_infinity(&chain, false) - variations_at_infinity(&chain, true),
            3
        );
        // No roots in (1/2, 3/4).
        let a = parse_rational("1/2").unwrap();
        let b = parse_rational("3/4").unwrap();
        assert_eq!(count_roots_in(&chain, &a, &b), 0);
        // y^2 + 1 has none.
        let q = poly(&["1", "0", "1"]);
        let qc = q.sturm_chain().unwrap();
        assert_eq!(
            variations_at_infinity(&qc, false) - variations_at_infinity(&qc, true),
            0
        );
    }

    #[test]
    fn isolation_finds_exact_and_irrational_roots() {
        // y^3 - y: all three roots rational.
        let p = poly(&["0", "-1", "0", "1"]);
        let roots = isolate_real_roots(&p).unwrap();
        assert_eq!(roots.len(), 3);
        let vals: Vec<f64> = roots.iter().map(|r| r.to_f64(&p)).collect();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!(vals[1].abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12);
        for r in &roots {
            assert!(matches!(r, RootLoc::Exact(_)));
        }
        // y^2 - 2: irrational pair.
        let q = poly(&["-2", "0", "1"]);
        let roots = isolate_real_roots(&q).unwrap();
        assert_eq!(roots.len(), 2);
        let vals: Vec<f64> = roots.iter().map(|r| r.to_f64(&q)).collect();
        assert!((vals[0] + 2.0f64.sqrt()).abs() < 1e-12);
        assert!((vals[1] - 2.0f64.sqrt()).abs() < 1e-12);
        // y^2 - y/3 - 2/9 = (y - 2/3)(y + 1/3): non-dyadic rationals come out exact.
        let r = poly(&["-2/9", "-1/3", "1"]);
        let roots = isolate_real_roots(&r).unwrap();
        assert_eq!(roots.len(), 2);
        for root in &roots {
            assert!(matches!(root, RootLoc::Exact(_)), "{root:?}");
        }
        // No real roots.
        let s = poly(&["1", "0", "1"]);
        assert!(isolate_real_roots(&s).unwrap().is_empty());
    }

    #[test]
    fn cauchy_bound_contains_roots() {
        let p = poly(&["-6", "11", "-6", "1"]); // roots 1, 2, 3
        let b = p.cauchy_root_bound();
        assert!(b.to_f64() >= 3.0);
        let roots = isolate_real_roots(&p).unwrap();
        assert_eq!(roots.len(), 3);
    }

    #[test]
    fn eval_and_derivative() {
        let p = poly(&["1", "2", "3"]); // 1 + 2y + 3y^2
        let x = parse_rational("1/2").unwrap();
        assert_eq!(p.eval(&x), parse_rational("11/4").unwrap());
        assert_eq!(p.derivative(), poly(&["2", "6"]));
    }
}
