//! Truncated multivariate Taylor arithmetic ("jets").
//!
//! A jet stores the Taylor coefficients of a smooth function of `m` coupling
//! directions around a base point, truncated at total degree `K`. The 1/k!
//! factors are folded into the stored coefficients, so multiplication is a
//! plain Cauchy product over multi-indices. Coefficients are complex
//! throughout; an order-0 jet behaves exactly like a scalar.
//!
//! Jets are immutable: every operation returns a fresh value. Spaces (the
//! multi-index tables for a given `(m, K)` signature) are interned globally
//! and shared via `Arc`, so jet values are cheap to clone and safe to move
//! across threads.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;

use crate::error::{Error, Result};

/// Multi-index table for jets in `num_vars` directions truncated at total
/// degree `order`. Holds the graded index enumeration and a precomputed
/// Cauchy-product pairing table.
pub struct JetSpace {
    num_vars: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    /// Triples (i, j, k) with index(i) + index(j) = index(k), covering every
    /// coefficient pair that survives truncation.
    prod_table: Vec<(u32, u32, u32)>,
}

static SPACE_CACHE: Lazy<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn enumerate_indices(num_vars: usize, order: usize) -> Vec<Vec<u8>> {
    // Graded enumeration: all multi-indices of total degree d, for d = 0..=K.
    let mut all = Vec::new();
    for d in 0..=order {
        let mut idx = vec![0u8; num_vars];
        fn rec(idx: &mut Vec<u8>, pos: usize, left: u8, out: &mut Vec<Vec<u8>>) {
            if pos + 1 == idx.len() {
                idx[pos] = left;
                out.push(idx.clone());
                return;
            }
            for v in 0..=left {
                idx[pos] = v;
                rec(idx, pos + 1, left - v, out);
            }
            idx[pos] = 0;
        }
        if num_vars == 0 {
            if d == 0 {
                all.push(Vec::new());
            }
            continue;
        }
        rec(&mut idx, 0, d as u8, &mut all);
    }
    all
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "JetSpace(m={}, K={}, dim={})",
            self.num_vars,
            self.order,
            self.indices.len()
        )
    }
}

impl JetSpace {
    /// Interned space for the `(num_vars, order)` signature.
    pub fn get(num_vars: usize, order: usize) -> Arc<JetSpace> {
        let mut cache = SPACE_CACHE.lock().unwrap();
        if let Some(s) = cache.get(&(num_vars, order)) {
            return Arc::clone(s);
        }
        let indices = enumerate_indices(num_vars, order);
        let mut lookup = HashMap::with_capacity(indices.len());
        for (p, idx) in indices.iter().enumerate() {
            lookup.insert(idx.clone(), p);
        }
        let mut prod_table = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            let da: usize = a.iter().map(|&v| v as usize).sum();
            for (j, b) in indices.iter().enumerate() {
                let db: usize = b.iter().map(|&v| v as usize).sum();
                if da + db > order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                let k = lookup[&sum];
                prod_table.push((i as u32, j as u32, k as u32));
            }
        }
        let space = Arc::new(JetSpace {
            num_vars,
            order,
            indices,
            lookup,
            prod_table,
        });
        cache.insert((num_vars, order), Arc::clone(&space));
        space
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, multi: &[u8]) -> Option<usize> {
        self.lookup.get(multi).copied()
    }

    pub fn multi_index(&self, pos: usize) -> &[u8] {
        &self.indices[pos]
    }
}

/// Truncated Taylor polynomial of a function of the coupling directions.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn zero(space: &Arc<JetSpace>) -> Jet {
        Jet {
            space: Arc::clone(space),
            coeffs: vec![Complex64::new(0.0, 0.0); space.len()],
        }
    }

    pub fn constant(space: &Arc<JetSpace>, value: Complex64) -> Jet {
        let mut j = Jet::zero(space);
        j.coeffs[0] = value;
        j
    }

    pub fn from_re(space: &Arc<JetSpace>, value: f64) -> Jet {
        Jet::constant(space, Complex64::new(value, 0.0))
    }

    /// The coordinate function of direction `var` with the given base value:
    /// base + (t_var - base_var). Requires order >= 1.
    pub fn variable(space: &Arc<JetSpace>, var: usize, base: Complex64) -> Result<Jet> {
        if space.order() == 0 {
            return Err(Error::InsufficientJetOrder { need: 1, have: 0 });
        }
        assert!(var < space.num_vars(), "direction out of range");
        let mut j = Jet::constant(space, base);
        let mut idx = vec![0u8; space.num_vars()];
        idx[var] = 1;
        let pos = space.index_of(&idx).expect("degree-1 index");
        j.coeffs[pos] = Complex64::new(1.0, 0.0);
        Ok(j)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.space.order()
    }

    pub fn num_vars(&self) -> usize {
        self.space.num_vars()
    }

    /// Constant (order-0) part.
    pub fn order0(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Taylor coefficient for a multi-index, zero when outside the truncation.
    pub fn coeff(&self, multi: &[u8]) -> Complex64 {
        match self.space.index_of(multi) {
            Some(p) => self.coeffs[p],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest magnitude among coefficients of total degree >= 1.
    pub fn nilpotent_max_abs(&self) -> f64 {
        self.coeffs[1..].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_same_space(&self, other: &Jet) -> bool {
        self.space.num_vars() == other.space.num_vars()
            && self.space.order() == other.space.order()
    }

    fn assert_same_space(&self, other: &Jet) {
        assert!(
            self.is_same_space(other),
            "jet spaces differ: ({},{}) vs ({},{})",
            self.space.num_vars(),
            self.space.order(),
            other.space.num_vars(),
            other.space.order()
        );
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Jet {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Multiplicative inverse. The order-0 part must be nonzero.
    pub fn invert(&self) -> Result<Jet> {
        let a0 = self.order0();
        if a0.norm() == 0.0 {
            return Err(Error::NonInvertibleJet);
        }
        // 1/a = (1/a0) * sum (-u)^k with u = a/a0 - 1 nilpotent.
        let inv0 = Complex64::new(1.0, 0.0) / a0;
        let u = self.scale(inv0) - Jet::from_re(&self.space, 1.0);
        let one = Jet::from_re(&self.space, 1.0);
        let mut acc = one.clone();
        for _ in 0..self.space.order() {
            acc = &one - &(&u * &acc);
        }
        Ok(acc.scale(inv0))
    }

    /// Principal square root. Errors when the order-0 part is zero or lies on
    /// the negative real axis (the branch cut).
    pub fn sqrt(&self) -> Result<Jet> {
        let a0 = self.order0();
        if a0.norm() == 0.0 || (a0.im == 0.0 && a0.re < 0.0) {
            return Err(Error::SqrtBranch);
        }
        let b0 = a0.sqrt();
        let inv0 = Complex64::new(1.0, 0.0) / a0;
        let u = self.scale(inv0) - Jet::from_re(&self.space, 1.0);
        // sqrt(1+u) via the binomial series; u is nilpotent so K+1 terms are exact.
        let mut series = Jet::from_re(&self.space, 1.0);
        let mut upow = Jet::from_re(&self.space, 1.0);
        let mut binom = 1.0f64;
        for k in 1..=self.space.order() {
            binom *= (0.5 - (k as f64 - 1.0)) / k as f64;
            upow = &upow * &u;
            series = &series + &upow.scale_re(binom);
        }
        Ok(series.scale(b0))
    }

    /// Principal logarithm. Same branch restrictions as `sqrt`.
    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.order0();
        if a0.norm() == 0.0 || (a0.im == 0.0 && a0.re < 0.0) {
            return Err(Error::LogBranch);
        }
        let inv0 = Complex64::new(1.0, 0.0) / a0;
        let u = self.scale(inv0) - Jet::from_re(&self.space, 1.0);
        let mut series = Jet::constant(&self.space, a0.ln());
        let mut upow = Jet::from_re(&self.space, 1.0);
        for k in 1..=self.space.order() {
            upow = &upow * &u;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            series = &series + &upow.scale_re(sign / k as f64);
        }
        Ok(series)
    }

    pub fn powi(&self, n: usize) -> Jet {
        let mut acc = Jet::from_re(&self.space, 1.0);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// k-th partial derivative in direction `var`, returned at order K - k.
    /// For k = 0 this is the identity.
    pub fn extract_partial(&self, var: usize, k: usize) -> Result<Jet> {
        assert!(var < self.space.num_vars(), "direction out of range");
        if k > self.space.order() {
            return Err(Error::InsufficientJetOrder {
                need: k,
                have: self.space.order(),
            });
        }
        let target = JetSpace::get(self.space.num_vars(), self.space.order() - k);
        let mut out = Jet::zero(&target);
        let mut src_idx = vec![0u8; self.space.num_vars()];
        for (p, idx) in target.indices.iter().enumerate() {
            src_idx.copy_from_slice(idx);
            src_idx[var] += k as u8;
            let sp = self
                .space
                .index_of(&src_idx)
                .expect("source index inside truncation");
            // Taylor convention: d^k/dt^k maps coefficient of t^(b+k) to
            // (b+k)!/b! times itself.
            let mut factor = 1.0f64;
            for step in 1..=k {
                factor *= (idx[var] as usize + step) as f64;
            }
            out.coeffs[p] = self.coeffs[sp] * factor;
        }
        Ok(out)
    }

    /// Truncate to a lower order (identity when `new_order` equals the order).
    pub fn reduce_order(&self, new_order: usize) -> Jet {
        assert!(new_order <= self.space.order(), "cannot raise jet order");
        if new_order == self.space.order() {
            return self.clone();
        }
        let target = JetSpace::get(self.space.num_vars(), new_order);
        let n = target.len();
        let mut out = Jet::zero(&target);
        out.coeffs.copy_from_slice(&self.coeffs[..n]);
        out
    }

    /// Promote to a higher order, padding with zeros. Only meaningful for
    /// values that are exactly polynomial in the couplings (used by tests).
    pub fn pad_order(&self, new_order: usize) -> Jet {
        assert!(new_order >= self.space.order());
        let target = JetSpace::get(self.space.num_vars(), new_order);
        let mut out = Jet::zero(&target);
        out.coeffs[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        out
    }

    pub fn approx_eq(&self, other: &Jet, tol: f64) -> bool {
        self.assert_same_space(other);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .all(|(a, b)| (a - b).norm() <= tol)
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Jet(m={}, K={}, c0={:.6}",
            self.space.num_vars(),
            self.space.order(),
            self.coeffs[0]
        )?;
        if self.space.order() > 0 {
            write!(f, ", |nil|={:.3e}", self.nilpotent_max_abs())?;
        }
        write!(f, ")")
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $impl_fn:ident) => {
        impl $trait for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $impl_fn(self, rhs)
            }
        }
        impl $trait for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $impl_fn(&self, &rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $impl_fn(&self, rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $impl_fn(self, &rhs)
            }
        }
    };
}

fn jet_add(a: &Jet, b: &Jet) -> Jet {
    a.assert_same_space(b);
    let mut out = a.clone();
    for (c, d) in out.coeffs.iter_mut().zip(&b.coeffs) {
        *c += d;
    }
    out
}

fn jet_sub(a: &Jet, b: &Jet) -> Jet {
    a.assert_same_space(b);
    let mut out = a.clone();
    for (c, d) in out.coeffs.iter_mut().zip(&b.coeffs) {
        *c -= d;
    }
    out
}

fn jet_mul(a: &Jet, b: &Jet) -> Jet {
    a.assert_same_space(b);
    let mut out = Jet::zero(&a.space);
    for &(i, j, k) in &a.space.prod_table {
        out.coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
    }
    out
}

fn jet_div(a: &Jet, b: &Jet) -> Jet {
    let inv = b.invert().expect("division by non-invertible jet");
    jet_mul(a, &inv)
}

binop!(Add, add, jet_add);
binop!(Sub, sub, jet_sub);
binop!(Mul, mul, jet_mul);
binop!(Div, div, jet_div);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale_re(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale_re(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn x_var(space: &Arc<JetSpace>) -> Jet {
        Jet::variable(space, 0, c(0.0, 0.0)).unwrap()
    }

    #[test]
    fn product_of_linear_factors() {
        // (1+x)(1-x) at K=2 -> 1 - x^2.
        let s = JetSpace::get(1, 2);
        let x = x_var(&s);
        let one = Jet::from_re(&s, 1.0);
        let p = (&one + &x) * (&one - &x);
        assert!((p.coeff(&[0]) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(p.coeff(&[1]).norm() < 1e-15);
        assert!((p.coeff(&[2]) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn order_zero_is_plain_scalar() {
        let s = JetSpace::get(4, 0);
        let a = Jet::from_re(&s, 3.0);
        let b = Jet::from_re(&s, 4.0);
        let p = &a * &b;
        assert_eq!(p.order0(), c(12.0, 0.0));
        assert_eq!(p.coeffs().len(), 1);
    }

    #[test]
    fn geometric_series_inverse() {
        // 1/(1+x) at K=3 against the independently summed geometric series.
        let s = JetSpace::get(1, 3);
        let x = x_var(&s);
        let inv = (Jet::from_re(&s, 1.0) + &x).invert().unwrap();
        let mut oracle = Jet::zero(&s);
        let mut pow = Jet::from_re(&s, 1.0);
        for k in 0..=3 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            oracle = &oracle + &pow.scale_re(sign);
            pow = &pow * &x;
        }
        assert!(inv.approx_eq(&oracle, 1e-15));
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (k, e) in expect.iter().enumerate() {
            assert!((inv.coeff(&[k as u8]) - c(*e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn non_invertible_jet_reports() {
        let s = JetSpace::get(1, 2);
        let x = x_var(&s);
        match x.invert() {
            Err(Error::NonInvertibleJet) => {}
            other => panic!("expected non-invertible jet, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_of_perfect_square() {
        // sqrt(4 + 4x + x^2) = 2 + x at K=2.
        let s = JetSpace::get(1, 2);
        let x = x_var(&s);
        let sq = Jet::from_re(&s, 4.0) + x.scale_re(4.0) + (&x * &x);
        let r = sq.sqrt().unwrap();
        assert!((r.coeff(&[0]) - c(2.0, 0.0)).norm() < 1e-14);
        assert!((r.coeff(&[1]) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(r.coeff(&[2]).norm() < 1e-14);
    }

    #[test]
    fn sqrt_matches_binomial_series() {
        // sqrt(1+x) at K=3 -> 1 + x/2 - x^2/8 + x^3/16 (binomial coefficients
        // C(1/2, k) computed separately).
        let s = JetSpace::get(1, 3);
        let x = x_var(&s);
        let r = (Jet::from_re(&s, 1.0) + &x).sqrt().unwrap();
        let expect = [1.0, 0.5, -0.125, 0.0625];
        for (k, e) in expect.iter().enumerate() {
            assert!((r.coeff(&[k as u8]) - c(*e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn sqrt_branch_cut_rejected() {
        let s = JetSpace::get(1, 1);
        assert!(matches!(
            Jet::from_re(&s, -1.0).sqrt(),
            Err(Error::SqrtBranch)
        ));
        assert!(matches!(Jet::zero(&s).sqrt(), Err(Error::SqrtBranch)));
        // Just off the axis is fine.
        assert!(Jet::constant(&s, c(-1.0, 1e-12)).sqrt().is_ok());
    }

    #[test]
    fn extract_partial_square_at_base() {
        // f = t^2 around base 3: jet (9, 6, 1); d/dt -> value 6 at order 1.
        let s = JetSpace::get(1, 2);
        let t = Jet::variable(&s, 0, c(3.0, 0.0)).unwrap();
        let f = &t * &t;
        let d = f.extract_partial(0, 1).unwrap();
        assert_eq!(d.order(), 1);
        assert!((d.order0() - c(6.0, 0.0)).norm() < 1e-14);
        assert!((d.coeff(&[1]) - c(2.0, 0.0)).norm() < 1e-14);
        let id = f.extract_partial(0, 0).unwrap();
        assert!(id.approx_eq(&f, 0.0));
    }

    #[test]
    fn second_partial_of_reciprocal() {
        // d^2/dx^2 of 1/(1+x) at 0 is 2.
        let s = JetSpace::get(1, 2);
        let x = x_var(&s);
        let f = (Jet::from_re(&s, 1.0) + &x).invert().unwrap();
        let d2 = f.extract_partial(0, 2).unwrap();
        assert_eq!(d2.order(), 0);
        assert!((d2.order0() - c(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn extract_beyond_order_is_rejected() {
        let s = JetSpace::get(1, 2);
        let x = x_var(&s);
        assert!(matches!(
            x.extract_partial(0, 3),
            Err(Error::InsufficientJetOrder { need: 3, have: 2 })
        ));
    }

    #[test]
    fn mixed_partials_commute_exactly() {
        let s = JetSpace::get(3, 3);
        let a = Jet::variable(&s, 0, c(0.3, 0.1)).unwrap();
        let b = Jet::variable(&s, 1, c(-0.2, 0.0)).unwrap();
        let cc = Jet::variable(&s, 2, c(0.5, -0.4)).unwrap();
        let f = (&a * &b + &cc * &a + b.powi(3)).sqrt();
        let f = match f {
            Ok(v) => v,
            Err(_) => return,
        };
        let d01 = f
            .extract_partial(0, 1)
            .unwrap()
            .extract_partial(1, 1)
            .unwrap();
        let d10 = f
            .extract_partial(1, 1)
            .unwrap()
            .extract_partial(0, 1)
            .unwrap();
        assert!(d01.approx_eq(&d10, 0.0));
    }

    #[test]
    fn finite_difference_cross_check() {
        // Jet partials of f(t) = sqrt(2 + t0 + t0*t1) vs central differences.
        let eval = |t0: f64, t1: f64| (2.0 + t0 + t0 * t1).sqrt();
        let s = JetSpace::get(2, 2);
        let t0 = Jet::variable(&s, 0, c(0.1, 0.0)).unwrap();
        let t1 = Jet::variable(&s, 1, c(0.2, 0.0)).unwrap();
        let f = (Jet::from_re(&s, 2.0) + &t0 + &t0 * &t1).sqrt().unwrap();
        let h = 1e-5;
        let fd0 = (eval(0.1 + h, 0.2) - eval(0.1 - h, 0.2)) / (2.0 * h);
        let fd1 = (eval(0.1, 0.2 + h) - eval(0.1, 0.2 - h)) / (2.0 * h);
        let j0 = f.extract_partial(0, 1).unwrap().order0().re;
        let j1 = f.extract_partial(1, 1).unwrap().order0().re;
        assert!((fd0 - j0).abs() < 1e-6 * (1.0 + j0.abs()));
        assert!((fd1 - j1).abs() < 1e-6 * (1.0 + j1.abs()));
    }

    #[test]
    fn division_round_trip() {
        let s = JetSpace::get(2, 3);
        let a = Jet::variable(&s, 0, c(1.5, 0.2)).unwrap();
        let b = Jet::variable(&s, 1, c(-0.7, 0.9)).unwrap();
        let f = &a * &a + b.scale_re(0.3) + Jet::from_re(&s, 0.1);
        let g = &b + Jet::constant(&s, c(2.0, -1.0));
        let q = &f / &g;
        let back = &q * &g;
        assert!(back.approx_eq(&f, 1e-12));
    }

    #[test]
    fn reduce_order_truncates_prefix() {
        let s = JetSpace::get(2, 3);
        let a = Jet::variable(&s, 0, c(0.4, 0.0)).unwrap();
        let f = (Jet::from_re(&s, 1.0) + &a).powi(3);
        let r = f.reduce_order(1);
        assert_eq!(r.order(), 1);
        assert!((r.order0() - f.order0()).norm() < 1e-15);
        assert!((r.coeff(&[1, 0]) - f.coeff(&[1, 0])).norm() < 1e-15);
    }
}
