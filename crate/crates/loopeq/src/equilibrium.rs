//! One-cut equilibrium measure: endpoint equations, density, Lagrange
//! multiplier, and the leading resolvent.
//!
//! The cut [alpha, beta] is parametrized by center and radius. Averaging
//! V'(c + r cos theta) over theta turns both endpoint conditions into exact
//! polynomial equations in (c, r), solved by Newton at order 0 (with
//! coupling continuation as a fallback) and then lifted to jets using the
//! frozen order-0 Jacobian. The density is psi = (1/2 pi) sqrt((x - alpha)
//! (beta - x)) h(x) with h the polynomial part of V'/R at infinity.

use num_complex::Complex64;

use crate::algebra::{poly_roots_order0, AlgebraicFn, BranchCut, PolyZ};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::model::ExternalField;
use crate::oracles::quadrature::integrate_theta;

/// Distance from the closest zero of h to the cut below which the one-cut
/// ansatz is refused as unreliable.
const CRITICAL_LIMIT: f64 = 0.1;

const NEWTON_MAX_ITER: usize = 60;
const NEWTON_TOL: f64 = 1e-13;

/// Average of (c + r cos)^k over theta, one entry per power 0..=kmax.
/// Only even cosine powers survive: (1/pi) integral cos^i = (i-1)!!/i!!.
fn averaged_powers(c: f64, r: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut sum = 0.0;
        let mut binom = 1.0f64;
        let mut ratio = 1.0f64; // (i-1)!!/i!! for the current even i
        let mut i = 0usize;
        loop {
            sum += binom * c.powi((k - i) as i32) * r.powi(i as i32) * ratio;
            if i + 2 > k {
                break;
            }
            // Step the binomial C(k, i) -> C(k, i+2) and the factorial ratio.
            binom *= ((k - i) * (k - i - 1)) as f64 / ((i + 1) * (i + 2)) as f64;
            ratio *= (i + 1) as f64 / (i + 2) as f64;
            i += 2;
        }
        *slot = sum;
    }
    out
}

/// Average of (c + r cos)^k * cos: odd powers, (1/pi) integral cos^(i+1) =
/// i!!/(i+1)!!.
fn averaged_powers_cos(c: f64, r: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    for (k, slot) in out.iter_mut().enumerate() {
        if k == 0 {
            continue;
        }
        let mut sum = 0.0;
        let mut binom = k as f64; // C(k, 1)
        let mut ratio = 0.5; // i!!/(i+1)!! at i = 1
        let mut i = 1usize;
        loop {
            sum += binom * c.powi((k - i) as i32) * r.powi(i as i32) * ratio;
            if i + 2 > k {
                break;
            }
            binom *= ((k - i) * (k - i - 1)) as f64 / ((i + 1) * (i + 2)) as f64;
            ratio *= (i + 2) as f64 / (i + 3) as f64;
            i += 2;
        }
        *slot = sum;
    }
    out
}

/// Jet-valued version of `averaged_powers`.
fn averaged_powers_jet(c: &Jet, r: &Jet, kmax: usize) -> Vec<Jet> {
    let space = c.space();
    let mut cpow = vec![Jet::from_re(space, 1.0)];
    let mut rpow = vec![Jet::from_re(space, 1.0)];
    for k in 1..=kmax {
        cpow.push(&cpow[k - 1] * c);
        rpow.push(&rpow[k - 1] * r);
    }
    let mut out = Vec::with_capacity(kmax + 1);
    for k in 0..=kmax {
        let mut sum = Jet::zero(space);
        let mut binom = 1.0f64;
        let mut ratio = 1.0f64;
        let mut i = 0usize;
        loop {
            sum = &sum + &(&cpow[k - i] * &rpow[i]).scale_re(binom * ratio);
            if i + 2 > k {
                break;
            }
            binom *= ((k - i) * (k - i - 1)) as f64 / ((i + 1) * (i + 2)) as f64;
            ratio *= (i + 1) as f64 / (i + 2) as f64;
            i += 2;
        }
        out.push(sum);
    }
    out
}

/// Order-0 endpoint residuals (f1, f2) for coefficients `v` of V'.
fn endpoint_residual(v: &[f64], c: f64, r: f64) -> (f64, f64) {
    let kmax = v.len(); // need averages up to deg + 1
    let avg = averaged_powers(c, r, kmax);
    let mut f1 = 0.0;
    let mut f2 = 0.0;
    for (k, &vk) in v.iter().enumerate() {
        f1 += vk * avg[k];
        f2 += vk * avg[k + 1];
    }
    (f1, f2 - 2.0)
}

/// Order-0 Jacobian of the endpoint residuals in (c, r).
fn endpoint_jacobian(v: &[f64], c: f64, r: f64) -> [[f64; 2]; 2] {
    let kmax = v.len();
    let avg = averaged_powers(c, r, kmax);
    let avg_cos = averaged_powers_cos(c, r, kmax);
    let mut jac = [[0.0; 2]; 2];
    for (k, &vk) in v.iter().enumerate() {
        if k >= 1 {
            jac[0][0] += vk * k as f64 * avg[k - 1];
            jac[0][1] += vk * k as f64 * avg_cos[k - 1];
        }
        jac[1][0] += vk * (k + 1) as f64 * avg[k];
        jac[1][1] += vk * (k + 1) as f64 * avg_cos[k];
    }
    jac
}

fn solve_2x2(jac: &[[f64; 2]; 2], rhs: (f64, f64)) -> Result<(f64, f64)> {
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if det.abs() < 1e-14 {
        return Err(Error::IllConditioned(
            "endpoint Jacobian is singular".into(),
        ));
    }
    Ok((
        (rhs.0 * jac[1][1] - rhs.1 * jac[0][1]) / det,
        (jac[0][0] * rhs.1 - jac[1][0] * rhs.0) / det,
    ))
}

/// Newton iteration from a given start; returns (c, r) on convergence.
fn newton_order0(v: &[f64], start: (f64, f64)) -> Option<(f64, f64)> {
    let (mut c, mut r) = start;
    for _ in 0..NEWTON_MAX_ITER {
        let f = endpoint_residual(v, c, r);
        if f.0.abs() + f.1.abs() < NEWTON_TOL {
            return (r > 0.0).then_some((c, r));
        }
        let jac = endpoint_jacobian(v, c, r);
        let step = solve_2x2(&jac, f).ok()?;
        c -= step.0;
        r -= step.1;
        if !c.is_finite() || !r.is_finite() || r <= 0.0 {
            return None;
        }
    }
    None
}

/// Equilibrium data for one field.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    field: ExternalField,
    center: Jet,
    radius: Jet,
    branch: BranchCut,
    h: PolyZ,
    residuals: Residuals,
}

/// Defect measures of a computed equilibrium, all of which should sit at
/// rounding level for a valid solution.
#[derive(Clone, Copy, Debug)]
pub struct Residuals {
    /// Largest coefficient of the polynomial part of V' - R h.
    pub poly_part: f64,
    /// Deviation of the z^-1 coefficient of V' - R h from 2.
    pub inverse_z: f64,
    /// Deviation of the total density mass from 1.
    pub mass: f64,
    /// Most negative density value on a fine grid of the cut.
    pub min_density: f64,
}

impl Residuals {
    pub fn max_defect(&self) -> f64 {
        self.poly_part
            .max(self.inverse_z)
            .max(self.mass)
            .max((-self.min_density).max(0.0))
    }
}

/// Variational diagnostics: the effective potential against its on-cut
/// level.
#[derive(Clone, Debug)]
pub struct Variational {
    pub lagrange: Jet,
    /// Largest deviation of the effective potential from the multiplier on
    /// interior sample points.
    pub max_equality_dev: f64,
    /// Smallest excess of the effective potential over the multiplier on
    /// exterior sample points (positive in the admissible regime).
    pub min_exterior_margin: f64,
}

/// Distance from the nearest order-0 zero of h to the cut segment, if h has
/// any zeros.
pub(crate) fn nearest_h_zero_distance(
    h: &PolyZ,
    alpha: Complex64,
    beta: Complex64,
) -> Result<Option<f64>> {
    let zeros = poly_roots_order0(h)?;
    Ok(zeros
        .into_iter()
        .map(|z| dist_point_segment(z, alpha, beta))
        .min_by(f64::total_cmp))
}

fn dist_point_segment(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

/// Solves the endpoint equations for the field and assembles the
/// equilibrium data.
pub fn solve(field: &ExternalField) -> Result<Equilibrium> {
    let space = field.space().clone();
    let vp = field.vprime();
    let deg = vp.degree().unwrap_or(0);
    let v0: Vec<f64> = (0..=deg).map(|k| vp.coeff(k).order0().re).collect();

    // Order 0: Newton from the free endpoint values, then coupling
    // continuation if the direct start fails.
    let mut sol = newton_order0(&v0, (0.0, 2.0));
    if sol.is_none() {
        'outer: for steps in [5usize, 10] {
            let mut carry = (0.0, 2.0);
            let mut ok = true;
            for s in 1..=steps {
                let frac = s as f64 / steps as f64;
                // Scale the coupling part of each coefficient, keeping the
                // bare z from the Gaussian term.
                let vs: Vec<f64> = v0
                    .iter()
                    .enumerate()
                    .map(|(k, &vk)| {
                        let bare = if k == 1 { 1.0 } else { 0.0 };
                        bare + frac * (vk - bare)
                    })
                    .collect();
                match newton_order0(&vs, carry) {
                    Some(p) => carry = p,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                sol = Some(carry);
                break 'outer;
            }
        }
    }
    let (c0, r0) = sol.ok_or_else(|| {
        Error::IllConditioned("endpoint equations did not converge under continuation".into())
    })?;

    // Jet lift: Newton with the frozen order-0 Jacobian gains one nilpotent
    // order per sweep.
    let jac0 = endpoint_jacobian(&v0, c0, r0);
    let mut c = Jet::from_re(&space, c0);
    let mut r = Jet::from_re(&space, r0);
    let kmax = deg + 2;
    for _ in 0..space.order() + 2 {
        let avg = averaged_powers_jet(&c, &r, kmax);
        let mut f1 = Jet::zero(&space);
        let mut f2 = Jet::from_re(&space, -2.0);
        for k in 0..=deg {
            let vk = vp.coeff(k);
            f1 = &f1 + &(&vk * &avg[k]);
            f2 = &f2 + &(&vk * &avg[k + 1]);
        }
        let det = jac0[0][0] * jac0[1][1] - jac0[0][1] * jac0[1][0];
        let dc = (&f1.scale_re(jac0[1][1]) - &f2.scale_re(jac0[0][1])).scale_re(1.0 / det);
        let dr = (&f2.scale_re(jac0[0][0]) - &f1.scale_re(jac0[1][0])).scale_re(1.0 / det);
        c = &c - &dc;
        r = &r - &dr;
    }

    eprintln!("SOLVE DEBUG c0={:.3e} r0={:.3e} cmax={:.3e} rmax={:.3e}", c.order0().norm(), r.order0().norm(), c.max_abs(), r.max_abs());
    let alpha = &c - &r;
    let beta = &c + &r;
    let branch = BranchCut::new(alpha, beta);

    // h is the polynomial part of V'/R at infinity: V'/R = V' R / S.
    let s_poly = branch.s_poly();
    let v_over_r = AlgebraicFn::new(branch.clone(), PolyZ::zero(&space), vp.clone(), s_poly)?;
    let h = v_over_r.laurent_expand(2).plus_part();

    let eq = Equilibrium {
        field: field.clone(),
        center: c,
        radius: r,
        branch,
        h,
        residuals: Residuals {
            poly_part: 0.0,
            inverse_z: 0.0,
            mass: 0.0,
            min_density: 0.0,
        },
    };
    let residuals = eq.compute_residuals();
    let eq = Equilibrium { residuals, ..eq };

    {
        let hh = &eq.h;
        let d = hh.degree().unwrap_or(0);
        let o0: Vec<String> = (0..=d).map(|k| format!("{:.3e}", hh.coeff(k).order0().norm())).collect();
        let ma: Vec<String> = (0..=d).map(|k| format!("{:.3e}", hh.coeff(k).max_abs())).collect();
        eprintln!("H DEBUG deg={d} order0={o0:?} maxabs={ma:?}");
    }
    // Refuse configurations drifting toward cut birth or merger.
    if let Some(dist) = nearest_h_zero_distance(
        &eq.h,
        eq.branch.alpha.order0(),
        eq.branch.beta.order0(),
    )? {
        if dist < CRITICAL_LIMIT {
            return Err(Error::NearCritical {
                dist,
                limit: CRITICAL_LIMIT,
            });
        }
    }
    Ok(eq)
}

impl Equilibrium {
    pub fn field(&self) -> &ExternalField {
        &self.field
    }

    pub fn branch(&self) -> &BranchCut {
        &self.branch
    }

    pub fn alpha(&self) -> &Jet {
        &self.branch.alpha
    }

    pub fn beta(&self) -> &Jet {
        &self.branch.beta
    }

    pub fn center(&self) -> &Jet {
        &self.center
    }

    pub fn radius(&self) -> &Jet {
        &self.radius
    }

    pub fn h(&self) -> &PolyZ {
        &self.h
    }

    pub fn residuals(&self) -> &Residuals {
        &self.residuals
    }

    /// Density at a point of the cut (order-0 values).
    pub fn density(&self, x: f64) -> f64 {
        let a = self.branch.alpha.order0().re;
        let b = self.branch.beta.order0().re;
        if x < a || x > b {
            return 0.0;
        }
        let disc = ((x - a) * (b - x)).max(0.0);
        disc.sqrt() * self.h.eval_c64(Complex64::new(x, 0.0)).re
            / (2.0 * std::f64::consts::PI)
    }

    /// Leading resolvent (V' - R h)/2 in closed form.
    pub fn resolvent_p0(&self) -> AlgebraicFn {
        let space = self.field.space().clone();
        let a = self.field.vprime().scale_re(0.5);
        let b = self.h.scale_re(-0.5);
        AlgebraicFn::new(
            self.branch.clone(),
            a,
            b,
            PolyZ::constant_re(&space, 1.0),
        )
        .expect("constant denominator")
    }

    /// V' - R h as a function (vanishing polynomial part, z^-1 weight 2).
    pub fn normalization_defect(&self) -> AlgebraicFn {
        self.resolvent_p0().scale_re(2.0)
    }

    fn compute_residuals(&self) -> Residuals {
        let defect = self.normalization_defect().laurent_expand(2);
        let poly_part = defect.plus_part().max_abs();
        let two = Jet::from_re(self.field.space(), 2.0);
        let inverse_z = (&defect.coeff(-1) - &two).max_abs();
        // Mass by exact trigonometric quadrature of the density.
        let c0 = self.center.order0().re;
        let r0 = self.radius.order0().re;
        let nodes = 4 * (self.h.degree().unwrap_or(0) + 4);
        let mass = integrate_theta(nodes, |th| {
            let lam = c0 + r0 * th.cos();
            let hval = self.h.eval_c64(Complex64::new(lam, 0.0)).re;
            r0 * r0 * hval * th.sin().powi(2) / (2.0 * std::f64::consts::PI)
        });
        let mut min_density = f64::INFINITY;
        for i in 0..256 {
            let phi = (i as f64 + 0.5) * std::f64::consts::PI / 256.0;
            min_density = min_density.min(self.density(c0 + r0 * phi.cos()));
        }
        Residuals {
            poly_part,
            inverse_z,
            mass: (mass - 1.0).abs(),
            min_density,
        }
    }

    /// Log-potential of the density at an interior angle, via the cosine
    /// coefficients of the weight (the expansion terminates for polynomial
    /// h, so this is exact up to quadrature of trigonometric polynomials).
    fn cosine_weights(&self) -> Vec<Jet> {
        let space = self.field.space().clone();
        let nmax = self.h.degree().unwrap_or(0) + 2;
        let nodes = 4 * (nmax + 4);
        let h = std::f64::consts::PI / nodes as f64;
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut vals = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let th = (j as f64 + 0.5) * h;
            let lam = &self.center + &self.radius.scale_re(th.cos());
            let w = (&(&self.radius * &self.radius) * &self.h.eval_jet(&lam))
                .scale_re(th.sin().powi(2) / two_pi);
            vals.push(w);
        }
        let mut out = Vec::with_capacity(nmax + 1);
        for n in 0..=nmax {
            let mut acc = Jet::zero(&space);
            for (j, w) in vals.iter().enumerate() {
                let th = (j as f64 + 0.5) * h;
                acc = &acc + &w.scale_re((n as f64 * th).cos() * h);
            }
            out.push(acc);
        }
        out
    }

    /// Log-potential at an interior point lambda = c + r cos(phi).
    fn log_potential_interior(&self, cw: &[Jet], phi: f64) -> Result<Jet> {
        let half_r = self.radius.scale_re(0.5);
        let mut acc = &half_r.ln()? * &cw[0];
        for (n, cn) in cw.iter().enumerate().skip(1) {
            acc = &acc - &cn.scale_re(2.0 * (n as f64 * phi).cos() / n as f64);
        }
        Ok(acc)
    }

    /// Log-potential at a real exterior point.
    fn log_potential_exterior(&self, cw: &[Jet], lam: f64) -> Result<Jet> {
        let space = self.field.space();
        let x = &(&Jet::from_re(space, lam) - &self.center) * &self.radius.invert()?;
        let sign = if x.order0().re >= 0.0 { 1.0 } else { -1.0 };
        let disc = (&x * &x - Jet::from_re(space, 1.0)).sqrt()?;
        let u = &x + &disc.scale_re(sign);
        // r |u| / 2 with |u| = sign * u for real exterior points.
        let amp = (&self.radius.scale_re(0.5 * sign) * &u).ln()?;
        let mut acc = &amp * &cw[0];
        let u_inv = u.invert()?;
        let mut upow = u_inv.clone();
        for (n, cn) in cw.iter().enumerate().skip(1) {
            acc = &acc - &(cn * &upow).scale_re(2.0 / n as f64);
            upow = &upow * &u_inv;
        }
        Ok(acc)
    }

    /// Effective-potential diagnostics: the multiplier as the mean over
    /// interior Chebyshev angles, the worst interior deviation from it, and
    /// the smallest exterior margin over a bracket of nearby outside points.
    pub fn variational(&self, n_interior: usize, n_exterior: usize) -> Result<Variational> {
        let space = self.field.space().clone();
        let cw = self.cosine_weights();
        let v = self.field.v_poly();
        let mut phi_vals = Vec::with_capacity(n_interior);
        for k in 0..n_interior {
            let phi = (k as f64 + 0.5) * std::f64::consts::PI / n_interior as f64;
            let lam = &self.center + &self.radius.scale_re(phi.cos());
            let eff = &v.eval_jet(&lam) - &self.log_potential_interior(&cw, phi)?.scale_re(2.0);
            phi_vals.push(eff);
        }
        let mut lagrange = Jet::zero(&space);
        for eff in &phi_vals {
            lagrange = &lagrange + eff;
        }
        lagrange = lagrange.scale_re(1.0 / n_interior as f64);
        let max_equality_dev = phi_vals
            .iter()
            .map(|eff| (eff - &lagrange).order0().norm())
            .fold(0.0, f64::max);

        let a0 = self.branch.alpha.order0().re;
        let b0 = self.branch.beta.order0().re;
        let half = n_exterior / 2;
        let mut min_margin = f64::INFINITY;
        for side in 0..2 {
            for k in 0..half {
                let frac = k as f64 / (half.max(2) - 1) as f64;
                let lam = if side == 0 {
                    a0 - 0.05 - frac * 1.95
                } else {
                    b0 + 0.05 + frac * 1.95
                };
                let lamj = Jet::from_re(&space, lam);
                let eff = &v.eval_jet(&lamj)
                    - &self.log_potential_exterior(&cw, lam)?.scale_re(2.0);
                let margin = (eff - &lagrange).order0().re;
                min_margin = min_margin.min(margin);
            }
        }
        Ok(Variational {
            lagrange,
            max_equality_dev,
            min_exterior_margin: min_margin,
        })
    }
}
