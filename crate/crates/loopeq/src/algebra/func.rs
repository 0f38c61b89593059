//! Closed-form algebra on the hyperelliptic curve y^2 = (z - alpha)(z - beta).
//!
//! Every resolvent-type quantity in the hierarchy is a combination
//! (A + B R)/D with polynomial A, B, D and R = sqrt(z - alpha) sqrt(z - beta)
//! branched exactly on the cut. Keeping this closed form (instead of only a
//! truncated expansion) lets the same object be expanded at infinity, fed
//! through coupling derivatives, and evaluated at arbitrary points off the
//! cut for the contour cross-checks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};

use super::laurent::LaurentSeries;
use super::poly::PolyZ;

use std::sync::Arc;

/// Relative threshold below which an order-0 part of a denominator
/// coefficient counts as structurally nilpotent.
const NILPOTENT_TOL: f64 = 1e-10;

/// Minimum distance from an evaluation point to the cut or to a denominator
/// zero, relative to the local scale.
const EVAL_GUARD: f64 = 1e-8;

/// Branch data: the two cut endpoints as jets in the couplings.
#[derive(Clone, Debug)]
pub struct BranchCut {
    pub alpha: Jet,
    pub beta: Jet,
}

impl BranchCut {
    pub fn new(alpha: Jet, beta: Jet) -> BranchCut {
        BranchCut { alpha, beta }
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        self.alpha.space()
    }

    /// (z - alpha)(z - beta) as a monic quadratic.
    pub fn s_poly(&self) -> PolyZ {
        let s = self.space();
        PolyZ::from_coeffs(
            s,
            vec![
                &self.alpha * &self.beta,
                -(&self.alpha + &self.beta),
                Jet::from_re(s, 1.0),
            ],
        )
    }

    pub fn close_to(&self, other: &BranchCut, tol: f64) -> bool {
        self.alpha.approx_eq(&other.alpha, tol) && self.beta.approx_eq(&other.beta, tol)
    }

    pub fn reduce_order(&self, new_order: usize) -> BranchCut {
        BranchCut {
            alpha: self.alpha.reduce_order(new_order),
            beta: self.beta.reduce_order(new_order),
        }
    }

    /// Laurent expansion of R = sqrt(z - alpha) sqrt(z - beta) around
    /// infinity, resolved down to z^(-depth).
    pub fn root_series(&self, depth: i64) -> LaurentSeries {
        let space = self.space();
        let n = (depth + 2) as usize;
        // sqrt(1 - a w) as a power series in w = 1/z, one factor per endpoint.
        let factor = |a: &Jet| -> Vec<Jet> {
            let mut terms = Vec::with_capacity(n);
            let mut t = Jet::from_re(space, 1.0);
            terms.push(t.clone());
            for k in 0..n - 1 {
                let ratio = (0.5 - k as f64) / (k as f64 + 1.0);
                t = (&t * a).scale_re(-ratio);
                terms.push(t.clone());
            }
            terms
        };
        let fa = factor(&self.alpha);
        let fb = factor(&self.beta);
        let mut prod = vec![Jet::zero(space); n];
        for (i, x) in fa.iter().enumerate() {
            for (j, y) in fb.iter().enumerate() {
                if i + j < n {
                    prod[i + j] = &prod[i + j] + &(x * y);
                }
            }
        }
        // Coefficient of w^k multiplies z^(1-k).
        LaurentSeries::new(space, 1, prod)
    }
}

/// Rational combination (a + b R)/d over the branch.
#[derive(Clone, Debug)]
pub struct AlgebraicFn {
    branch: BranchCut,
    a: PolyZ,
    b: PolyZ,
    d: PolyZ,
}

/// Highest denominator coefficient with genuine order-0 content. Jet
/// components above it are nilpotent freight that must not be mistaken for
/// a leading coefficient.
fn regular_top(d: &PolyZ) -> Result<usize> {
    if d.is_zero() {
        return Err(Error::ZeroDivision);
    }
    let deg = d.degree().unwrap();
    // Noise scale for the order-0 slots only: jet arithmetic is triangular,
    // so roundoff there is set by the order-0 magnitudes, not by the (often
    // much larger) higher-order components.
    let scale = (0..=deg)
        .map(|k| d.coeff(k).order0().norm())
        .fold(1.0f64, f64::max);
    (0..=deg)
        .rev()
        .find(|&k| d.coeff(k).order0().norm() > NILPOTENT_TOL * scale)
        .ok_or(Error::NonInvertibleJet)
}

/// Series inverse of a denominator around infinity. Any pure-nilpotent top
/// block is split off first: with d = reg + nil the inverse is
/// (sum_k (-nil/reg)^k)/reg, and the sum terminates at the truncation
/// order. Doing the split on series keeps every intermediate near the
/// magnitude of d itself; the equivalent polynomial rewrite multiplies
/// degrees out and inflates coefficients until the deep window drowns in
/// roundoff.
fn denominator_inverse_series(d: &PolyZ, dstar: usize, work: i64) -> LaurentSeries {
    let deg = d.degree().unwrap();
    if dstar == deg {
        return LaurentSeries::from_poly(d, -work)
            .inverse()
            .expect("top coefficient is invertible");
    }
    let space = d.space().clone();
    let reg = PolyZ::from_coeffs(&space, d.coeffs()[..=dstar].to_vec());
    // Order-0 parts above the split point are noise by the choice of the
    // split; zero them so the geometric series terminates exactly.
    let mut nil_coeffs = vec![Jet::zero(&space); deg + 1];
    for (k, slot) in nil_coeffs.iter_mut().enumerate().skip(dstar + 1) {
        let c = d.coeff(k);
        *slot = &c - &Jet::constant(&space, c.order0());
    }
    let nil = PolyZ::from_coeffs(&space, nil_coeffs);
    let inv_reg = LaurentSeries::from_poly(&reg, -work)
        .inverse()
        .expect("split coefficient is invertible");
    let t = inv_reg.mul(&LaurentSeries::from_poly(&nil, -work)).neg();
    let one = LaurentSeries::from_poly(&PolyZ::constant_re(&space, 1.0), -work);
    let mut acc = one.clone();
    for _ in 0..space.order() {
        acc = one.add(&t.mul(&acc));
    }
    acc.mul(&inv_reg)
}

impl AlgebraicFn {
    pub fn new(branch: BranchCut, a: PolyZ, b: PolyZ, d: PolyZ) -> Result<AlgebraicFn> {
        let (a, b, d) = normalize_denominator(a, b, d)?;
        Ok(AlgebraicFn { branch, a, b, d })
    }

    pub fn from_poly(branch: BranchCut, p: PolyZ) -> AlgebraicFn {
        let space = p.space().clone();
        AlgebraicFn {
            branch,
            a: p,
            b: PolyZ::zero(&space),
            d: PolyZ::constant_re(&space, 1.0),
        }
    }

    pub fn zero(branch: BranchCut) -> AlgebraicFn {
        let space = branch.space().clone();
        AlgebraicFn::from_poly(branch, PolyZ::zero(&space))
    }

    /// R itself.
    pub fn root(branch: BranchCut) -> AlgebraicFn {
        let space = branch.space().clone();
        AlgebraicFn {
            branch,
            a: PolyZ::zero(&space),
            b: PolyZ::constant_re(&space, 1.0),
            d: PolyZ::constant_re(&space, 1.0),
        }
    }

    pub fn branch(&self) -> &BranchCut {
        &self.branch
    }

    pub fn rational_part(&self) -> &PolyZ {
        &self.a
    }

    pub fn root_part(&self) -> &PolyZ {
        &self.b
    }

    pub fn denominator(&self) -> &PolyZ {
        &self.d
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        self.branch.space()
    }

    fn assert_branch(&self, other: &AlgebraicFn) {
        assert!(
            self.branch.close_to(&other.branch, 1e-9),
            "operands live on different branch cuts"
        );
    }

    /// Library-level compatibility check for combining externally built
    /// functions.
    pub fn require_same_branch(&self, other: &AlgebraicFn) -> Result<()> {
        if self.branch.close_to(&other.branch, 1e-9) {
            Ok(())
        } else {
            Err(Error::BranchMismatch)
        }
    }

    pub fn add(&self, other: &AlgebraicFn) -> AlgebraicFn {
        self.assert_branch(other);
        let a = self.a.mul(&other.d).add(&other.a.mul(&self.d));
        let b = self.b.mul(&other.d).add(&other.b.mul(&self.d));
        let d = self.d.mul(&other.d);
        AlgebraicFn::new(self.branch.clone(), a, b, d)
            .expect("product of invertible-top denominators")
    }

    pub fn sub(&self, other: &AlgebraicFn) -> AlgebraicFn {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> AlgebraicFn {
        AlgebraicFn {
            branch: self.branch.clone(),
            a: self.a.neg(),
            b: self.b.neg(),
            d: self.d.clone(),
        }
    }

    pub fn scale_re(&self, s: f64) -> AlgebraicFn {
        AlgebraicFn {
            branch: self.branch.clone(),
            a: self.a.scale_re(s),
            b: self.b.scale_re(s),
            d: self.d.clone(),
        }
    }

    pub fn scale(&self, s: &Jet) -> AlgebraicFn {
        AlgebraicFn {
            branch: self.branch.clone(),
            a: self.a.scale(s),
            b: self.b.scale(s),
            d: self.d.clone(),
        }
    }

    pub fn mul(&self, other: &AlgebraicFn) -> AlgebraicFn {
        self.assert_branch(other);
        let s = self.branch.s_poly();
        let a = self
            .a
            .mul(&other.a)
            .add(&self.b.mul(&other.b).mul(&s));
        let b = self.a.mul(&other.b).add(&self.b.mul(&other.a));
        let d = self.d.mul(&other.d);
        AlgebraicFn::new(self.branch.clone(), a, b, d)
            .expect("product of invertible-top denominators")
    }

    /// Multiplicative inverse via the conjugate: 1/((a + bR)/d) =
    /// d(a - bR)/(a^2 - b^2 S).
    pub fn inverse(&self) -> Result<AlgebraicFn> {
        let s = self.branch.s_poly();
        let denom = self.a.mul(&self.a).sub(&self.b.mul(&self.b).mul(&s));
        let a = self.d.mul(&self.a);
        let b = self.d.mul(&self.b).neg();
        AlgebraicFn::new(self.branch.clone(), a, b, denom)
    }

    pub fn div(&self, other: &AlgebraicFn) -> Result<AlgebraicFn> {
        self.assert_branch(other);
        Ok(self.mul(&other.inverse()?))
    }

    /// Root-flip conjugate: (a - bR)/d.
    pub fn conjugate(&self) -> AlgebraicFn {
        AlgebraicFn {
            branch: self.branch.clone(),
            a: self.a.clone(),
            b: self.b.neg(),
            d: self.d.clone(),
        }
    }

    /// Coefficientwise reduction of the truncation order.
    pub fn reduce_order(&self, new_order: usize) -> AlgebraicFn {
        AlgebraicFn {
            branch: self.branch.reduce_order(new_order),
            a: self.a.reduce_order(new_order),
            b: self.b.reduce_order(new_order),
            d: self.d.reduce_order(new_order),
        }
    }

    /// Expansion around infinity, resolved down to z^(-depth). The working
    /// window is padded by the polynomial degrees so every reported
    /// coefficient has all contributions resolved.
    pub fn laurent_expand(&self, depth: i64) -> LaurentSeries {
        if self.a.is_zero() && self.b.is_zero() {
            return LaurentSeries::zero(self.space(), -depth);
        }
        let deg_a = self.a.degree().unwrap_or(0) as i64;
        let deg_b = self.b.degree().unwrap_or(0) as i64;
        let deg_d = self.d.degree().unwrap_or(0) as i64;
        let work = depth + deg_d + deg_a.max(deg_b + 1) + 4;
        let mut num = LaurentSeries::from_poly(&self.a, -work);
        if !self.b.is_zero() {
            let r = self.branch.root_series(work);
            let bl = LaurentSeries::from_poly(&self.b, -work);
            num = num.add(&bl.mul(&r));
        }
        let dl = LaurentSeries::from_poly(&self.d, -work);
        let inv = dl
            .inverse()
            .expect("normalized denominator has invertible lead");
        let full = num.mul(&inv);
        assert!(
            full.bottom_power() <= -depth,
            "expansion window fell short of requested depth"
        );
        full.truncate_bottom(-depth)
    }

    /// Value at a point off the cut, with the couplings still live.
    pub fn alg_eval(&self, z0: Complex64) -> Result<Jet> {
        self.alg_eval_jet(&Jet::constant(self.space(), z0))
    }

    /// Value at a jet-valued point (branch selection by its order-0 part).
    pub fn alg_eval_jet(&self, zj: &Jet) -> Result<Jet> {
        let z0 = zj.order0();
        let a0 = self.branch.alpha.order0();
        let b0 = self.branch.beta.order0();
        let cut_dist = dist_to_segment(z0, a0, b0);
        let scale = f64::max(1.0, f64::max(a0.norm(), b0.norm()));
        if cut_dist < EVAL_GUARD * scale {
            return Err(Error::UnstableEvaluation(cut_dist));
        }
        // Conditioning of the denominator at this point.
        let dmag = self.d.eval_c64(z0).norm();
        let dref: f64 = self
            .d
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| c.max_abs() * z0.norm().powi(k as i32))
            .sum();
        if dmag <= EVAL_GUARD * f64::max(1.0, dref) * 1e-2 {
            return Err(Error::UnstableEvaluation(dmag / f64::max(1.0, dref)));
        }
        let za = zj - &self.branch.alpha;
        let zb = zj - &self.branch.beta;
        let r = if z0.im == 0.0 && z0.re < a0.re {
            // Left of the cut both factors sit on the principal-branch cut;
            // go through the square and restore the sign R ~ z there.
            -((&za * &zb).sqrt()?)
        } else if z0.im == 0.0 && z0.re > b0.re {
            (&za * &zb).sqrt()?
        } else {
            &za.sqrt()? * &zb.sqrt()?
        };
        let num = &self.a.eval_jet(zj) + &(&self.b.eval_jet(zj) * &r);
        let den = self.d.eval_jet(zj);
        let den_inv = den.invert().map_err(|_| Error::UnstableEvaluation(dmag))?;
        Ok(&num * &den_inv)
    }

    /// Numerators of the derivative in direction `var` over the shared
    /// denominator 2 S D^2, everything one order lower.
    fn partial_numerators(&self, var: usize) -> Result<(PolyZ, PolyZ)> {
        let red = self.space().order() - 1;
        let branch = self.branch.reduce_order(red);
        let space = branch.space().clone();
        let a = self.a.reduce_order(red);
        let b = self.b.reduce_order(red);
        let d = self.d.reduce_order(red);
        let da = self.a.extract_partial(var, 1)?;
        let db = self.b.extract_partial(var, 1)?;
        let dd = self.d.extract_partial(var, 1)?;
        let dalpha = self.branch.alpha.extract_partial(var, 1)?;
        let dbeta = self.branch.beta.extract_partial(var, 1)?;
        let two_s = branch.s_poly().scale_re(2.0);
        // W = dalpha (z - beta) + dbeta (z - alpha) tracks the moving cut.
        let z_minus_beta = PolyZ::z(&space).sub(&PolyZ::constant(&space, branch.beta.clone()));
        let z_minus_alpha = PolyZ::z(&space).sub(&PolyZ::constant(&space, branch.alpha.clone()));
        let w = z_minus_beta
            .scale(&dalpha)
            .add(&z_minus_alpha.scale(&dbeta));
        let new_a = two_s.mul(&da.mul(&d).sub(&a.mul(&dd)));
        let new_b = two_s
            .mul(&db.mul(&d).sub(&b.mul(&dd)))
            .sub(&b.mul(&w).mul(&d));
        Ok((new_a, new_b))
    }

    /// The denominator shared by all coupling-derivative numerators.
    fn partial_denominator(&self) -> PolyZ {
        let red = self.space().order() - 1;
        let branch = self.branch.reduce_order(red);
        let d = self.d.reduce_order(red);
        branch.s_poly().scale_re(2.0).mul(&d).mul(&d)
    }

    /// Derivative in coupling direction `var`, one order lower.
    pub fn partial_t(&self, var: usize) -> Result<AlgebraicFn> {
        let order = self.space().order();
        if order == 0 {
            return Err(Error::InsufficientJetOrder { need: 1, have: 0 });
        }
        let (na, nb) = self.partial_numerators(var)?;
        AlgebraicFn::new(
            self.branch.reduce_order(order - 1),
            na,
            nb,
            self.partial_denominator(),
        )
    }

    /// Numerators of every coupling derivative plus the shared denominator,
    /// for callers assembling linear combinations of the partials without
    /// compounding denominators.
    pub fn coupling_gradient(&self) -> Result<(Vec<(PolyZ, PolyZ)>, PolyZ)> {
        let order = self.space().order();
        if order == 0 {
            return Err(Error::InsufficientJetOrder { need: 1, have: 0 });
        }
        let m = self.space().num_vars();
        let mut parts = Vec::with_capacity(m);
        for var in 0..m {
            parts.push(self.partial_numerators(var)?);
        }
        Ok((parts, self.partial_denominator()))
    }
}

/// Distance from a point to the straight segment between two endpoints.
fn dist_to_segment(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * ab.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian_branch(order: usize) -> BranchCut {
        let s = JetSpace::get(1, order);
        BranchCut::new(Jet::from_re(&s, -2.0), Jet::from_re(&s, 2.0))
    }

    #[test]
    fn root_series_reference_coefficients() {
        // R on [-2, 2]: z - 2/z - 2/z^3 - 4/z^5 - 10/z^7, even powers absent.
        let br = gaussian_branch(0);
        let r = br.root_series(8);
        let expect = [(1, 1.0), (-1, -2.0), (-3, -2.0), (-5, -4.0), (-7, -10.0)];
        for (p, v) in expect {
            assert!(
                (r.coeff(p).order0() - c(v, 0.0)).norm() < 1e-13,
                "z^{p}"
            );
        }
        for p in [0, -2, -4, -6] {
            assert!(r.coeff(p).order0().norm() < 1e-13);
        }
    }

    #[test]
    fn square_of_root_is_the_quadratic() {
        let br = gaussian_branch(0);
        let r = AlgebraicFn::root(br.clone());
        let sq = r.mul(&r);
        assert!(sq.root_part().is_zero());
        let lau = sq.laurent_expand(4);
        assert!((lau.coeff(2).order0() - c(1.0, 0.0)).norm() < 1e-13);
        assert!((lau.coeff(0).order0() - c(-4.0, 0.0)).norm() < 1e-13);
        for p in [1, -1, -2, -3, -4] {
            assert!(lau.coeff(p).order0().norm() < 1e-12);
        }
    }

    #[test]
    fn conjugate_halves_multiply_to_one() {
        // (z - R)/2 * (z + R)/2 = (z^2 - S)/4 = 1 on [-2, 2].
        let br = gaussian_branch(0);
        let space = br.space().clone();
        let z = PolyZ::z(&space);
        let half = PolyZ::constant_re(&space, 2.0);
        let minus = AlgebraicFn::new(
            br.clone(),
            z.clone(),
            PolyZ::constant_re(&space, -1.0),
            half.clone(),
        )
        .unwrap();
        let plus = AlgebraicFn::new(br, z, PolyZ::constant_re(&space, 1.0), half).unwrap();
        let prod = minus.mul(&plus);
        let lau = prod.laurent_expand(6);
        assert!((lau.coeff(0).order0() - c(1.0, 0.0)).norm() < 1e-12);
        for p in [2, 1, -1, -2, -3, -4, -5, -6] {
            assert!(lau.coeff(p).order0().norm() < 1e-12, "z^{p}");
        }
    }

    #[test]
    fn catalan_series_of_resolvent_half() {
        // (z - R)/2 on [-2, 2] generates the Catalan numbers at odd depth.
        let br = gaussian_branch(0);
        let space = br.space().clone();
        let w0 = AlgebraicFn::new(
            br,
            PolyZ::z(&space),
            PolyZ::constant_re(&space, -1.0),
            PolyZ::constant_re(&space, 2.0),
        )
        .unwrap();
        let lau = w0.laurent_expand(13);
        let catalan = [1.0, 1.0, 2.0, 5.0, 14.0, 42.0, 132.0];
        for (k, &cat) in catalan.iter().enumerate() {
            let p = -(2 * k as i64 + 1);
            assert!(
                (lau.coeff(p).order0() - c(cat, 0.0)).norm() < 1e-11,
                "catalan at z^{p}"
            );
            if k > 0 {
                assert!(lau.coeff(p + 1).order0().norm() < 1e-11);
            }
        }
    }

    #[test]
    fn evaluation_picks_the_decaying_branch() {
        let br = gaussian_branch(0);
        let r = AlgebraicFn::root(br.clone());
        let v = r.alg_eval(c(3.0, 0.0)).unwrap().order0();
        assert!((v - c(5f64.sqrt(), 0.0)).norm() < 1e-14);
        // Left of the cut R is negative real (still ~ z at infinity).
        let v = r.alg_eval(c(-3.0, 0.0)).unwrap().order0();
        assert!((v - c(-(5f64.sqrt()), 0.0)).norm() < 1e-14);
        // Off axis: R(2i) = 2 sqrt(2) i.
        let v = r.alg_eval(c(0.0, 2.0)).unwrap().order0();
        assert!((v - c(0.0, 2.0 * 2f64.sqrt())).norm() < 1e-13);
        // W0(3) = (3 - sqrt 5)/2.
        let space = br.space().clone();
        let w0 = AlgebraicFn::new(
            br,
            PolyZ::z(&space),
            PolyZ::constant_re(&space, -1.0),
            PolyZ::constant_re(&space, 2.0),
        )
        .unwrap();
        let v = w0.alg_eval(c(3.0, 0.0)).unwrap().order0();
        assert!((v - c((3.0 - 5f64.sqrt()) / 2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn evaluation_guards_reject_cut_and_poles() {
        let br = gaussian_branch(0);
        let r = AlgebraicFn::root(br.clone());
        assert!(matches!(
            r.alg_eval(c(0.5, 0.0)),
            Err(Error::UnstableEvaluation(_))
        ));
        let space = br.space().clone();
        // 1/(z - 3) blows up at 3.
        let f = AlgebraicFn::new(
            br,
            PolyZ::constant_re(&space, 1.0),
            PolyZ::zero(&space),
            PolyZ::from_re_coeffs(&space, &[-3.0, 1.0]),
        )
        .unwrap();
        assert!(matches!(
            f.alg_eval(c(3.0, 1e-12)),
            Err(Error::UnstableEvaluation(_))
        ));
    }

    #[test]
    fn division_round_trip_in_expansion() {
        let br = gaussian_branch(1);
        let space = br.space().clone();
        let t = Jet::variable(&space, 0, c(0.3, 0.0)).unwrap();
        let f = AlgebraicFn::new(
            br.clone(),
            PolyZ::from_coeffs(&space, vec![t.clone(), Jet::from_re(&space, 2.0)]),
            PolyZ::constant(&space, t.clone()),
            PolyZ::from_re_coeffs(&space, &[1.0, 0.0, 0.5]),
        )
        .unwrap();
        let g = AlgebraicFn::new(
            br,
            PolyZ::from_re_coeffs(&space, &[0.0, 1.0, 3.0]),
            PolyZ::constant_re(&space, 1.0),
            PolyZ::constant_re(&space, 1.0),
        )
        .unwrap();
        let q = f.div(&g).unwrap();
        let back = q.mul(&g);
        let l1 = back.laurent_expand(8);
        let l2 = f.laurent_expand(8);
        for p in (-8..=2).rev() {
            assert!(l1.coeff(p).approx_eq(&l2.coeff(p), 1e-10), "z^{p}");
        }
    }

    #[test]
    fn nilpotent_top_denominator_is_normalized() {
        // 1/(1 + t z) = 1 - t z + t^2 z^2 exactly at order 2.
        let br = gaussian_branch(2);
        let space = br.space().clone();
        let t = Jet::variable(&space, 0, c(0.0, 0.0)).unwrap();
        let f = AlgebraicFn::new(
            br,
            PolyZ::constant_re(&space, 1.0),
            PolyZ::zero(&space),
            PolyZ::from_coeffs(&space, vec![Jet::from_re(&space, 1.0), t.clone()]),
        )
        .unwrap();
        assert_eq!(f.denominator().degree(), Some(0));
        let lau = f.laurent_expand(2);
        let one = Jet::from_re(&space, 1.0);
        assert!(lau.coeff(0).approx_eq(&one, 1e-13));
        assert!(lau.coeff(1).approx_eq(&-(&t), 1e-13));
        assert!(lau.coeff(2).approx_eq(&(&t * &t), 1e-13));
        assert!(lau.coeff(-1).max_abs() < 1e-13);
    }

    #[test]
    fn coupling_derivative_of_moving_root() {
        // Endpoints -2 - t, 2 - t: the t-derivative of R expands as
        // z/R = 1 + 2 z^-2 + 6 z^-4 + 20 z^-6 (central binomials).
        let s = JetSpace::get(1, 2);
        let t = Jet::variable(&s, 0, c(0.0, 0.0)).unwrap();
        let br = BranchCut::new(
            Jet::from_re(&s, -2.0) - &t,
            Jet::from_re(&s, 2.0) - &t,
        );
        let r = AlgebraicFn::root(br);
        let dr = r.partial_t(0).unwrap();
        assert_eq!(dr.space().order(), 1);
        let lau = dr.laurent_expand(7);
        let expect = [(0, 1.0), (-2, 2.0), (-4, 6.0), (-6, 20.0)];
        for (p, v) in expect {
            assert!(
                (lau.coeff(p).order0() - c(v, 0.0)).norm() < 1e-11,
                "z^{p}"
            );
        }
        for p in [1, -1, -3, -5] {
            assert!(lau.coeff(p).order0().norm() < 1e-11);
        }
    }
}
