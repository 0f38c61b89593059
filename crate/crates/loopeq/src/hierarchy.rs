//! The genus recursion for resolvent corrections.
//!
//! Writing the resolvent as sum_g N^(-2g) P_g(z), each correction satisfies
//! M P_g = Q_g + U_g with M = R h, where U_g collects the coupling-insertion
//! derivative of the previous level plus the convolution of lower levels,
//! and Q_g is the polynomial part. The decay of P_g at infinity together
//! with regularity at the zeros of h pins Q_g uniquely; the linear solve is
//! triangular up to nilpotent coupling handled by fixed-point sweeps.
//!
//! Corrections are carried as sums of exact terms (a + b R)/d. Dividing a
//! source term by R h rearranges in closed form, (a + b R)/(d R h) =
//! (b S + a R)/(d S h), so no stage of the recursion ever approximates the
//! rational structure. The zeros of h survive in the denominators: the
//! solved corrections are regular there on the physical sheet only, because
//! the truncated insertion sum breaks the exact sheet antisymmetry.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{poly_roots_lifted, AlgebraicFn, BranchCut, LaurentSeries, PolyZ};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};

/// Relative tolerance on the post-solve decay residuals of a level.
const LEVEL_RESIDUAL_TOL: f64 = 1e-9;

/// Relative threshold below which an order-0 coefficient of h counts as
/// structurally absent when sizing the level solve.
const H_DEGREE_TOL: f64 = 1e-9;

/// Sum of algebraic terms kept unmerged. Combining the terms over a common
/// denominator would build polynomials whose coefficient range exceeds what
/// f64 can carry faithfully; every consumer folds over the terms instead.
#[derive(Clone, Debug)]
pub struct FnSum {
    terms: Vec<AlgebraicFn>,
}

impl FnSum {
    fn empty() -> FnSum {
        FnSum { terms: Vec::new() }
    }

    fn from_terms(terms: Vec<AlgebraicFn>) -> FnSum {
        FnSum { terms }
    }

    pub fn terms(&self) -> &[AlgebraicFn] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        self.terms.first().expect("empty function sum").space()
    }

    pub fn reduce_order(&self, new_order: usize) -> FnSum {
        FnSum {
            terms: self.terms.iter().map(|t| t.reduce_order(new_order)).collect(),
        }
    }

    /// Termwise product with a single function.
    pub fn mul_fn(&self, f: &AlgebraicFn) -> FnSum {
        FnSum {
            terms: self.terms.iter().map(|t| t.mul(f)).collect(),
        }
    }

    pub fn laurent_expand(&self, depth: i64) -> LaurentSeries {
        let mut acc: Option<LaurentSeries> = None;
        for t in &self.terms {
            let s = t.laurent_expand(depth);
            acc = Some(match acc {
                None => s,
                Some(a) => a.add(&s),
            });
        }
        acc.expect("expanding an empty function sum")
    }

    pub fn alg_eval_jet(&self, zj: &Jet) -> Result<Jet> {
        let mut acc = Jet::zero(zj.space());
        for t in &self.terms {
            acc = &acc + &t.alg_eval_jet(zj)?;
        }
        Ok(acc)
    }

    pub fn alg_eval(&self, z0: Complex64) -> Result<Jet> {
        let space = self.space().clone();
        self.alg_eval_jet(&Jet::constant(&space, z0))
    }
}

#[derive(Clone, Debug)]
pub struct LoopLevel {
    pub genus: usize,
    /// Resolvent correction at this genus, order K - genus, as a sum of
    /// exact terms coming straight out of the level equation.
    pub p: FnSum,
    /// Source term of the level equation (empty at genus 0).
    pub u: FnSum,
    /// Expansion of `p` at infinity to the configured depth.
    pub laurent: LaurentSeries,
    /// Largest decay-condition defect left by the linear solve.
    pub solve_residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct HierarchySettings {
    pub g_max: usize,
    /// Laurent resolution depth for the stored expansions.
    pub depth: i64,
}

impl Default for HierarchySettings {
    fn default() -> Self {
        HierarchySettings { g_max: 2, depth: 12 }
    }
}

#[derive(Clone, Debug)]
pub struct LoopHierarchy {
    eq: Equilibrium,
    levels: Vec<LoopLevel>,
    depth: i64,
}

/// Coupling-insertion derivative: -sum_j z^(-j-1) d/dt_j f, assembled over
/// the shared denominator so the polynomial degrees stay bounded. One jet
/// order lower than the input.
pub fn vertex_derivative(f: &AlgebraicFn) -> Result<AlgebraicFn> {
    let m = f.space().num_vars();
    let (parts, shared_d) = f.coupling_gradient()?;
    let red = f.space().order() - 1;
    let branch = f.branch().reduce_order(red);
    let space = branch.space().clone();
    let mut num_a = PolyZ::zero(&space);
    let mut num_b = PolyZ::zero(&space);
    for (j0, (na, nb)) in parts.into_iter().enumerate() {
        // Direction j0 carries coupling j0 + 1: the insertion weight is
        // z^(-j0-2), which becomes z^(m-1-j0) over the common pole z^(m+1).
        num_a = num_a.add(&na.shift_up(m - 1 - j0));
        num_b = num_b.add(&nb.shift_up(m - 1 - j0));
    }
    AlgebraicFn::new(
        branch,
        num_a.neg(),
        num_b.neg(),
        shared_d.shift_up(m + 1),
    )
}

/// Inverse of a small complex matrix by Gauss-Jordan with partial pivoting.
fn invert_matrix(mut a: Vec<Vec<Complex64>>) -> Result<Vec<Vec<Complex64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        if a[pivot][col].norm() < 1e-13 {
            return Err(Error::IllConditioned(
                "singular root-condition matrix".into(),
            ));
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = Complex64::new(1.0, 0.0) / a[col][col];
        for v in a[col].iter_mut() {
            *v *= scale;
        }
        for v in inv[col].iter_mut() {
            *v *= scale;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor.norm() == 0.0 {
                continue;
            }
            for j in 0..n {
                let t = a[col][j] * factor;
                a[row][j] -= t;
                let t = inv[col][j] * factor;
                inv[row][j] -= t;
            }
        }
    }
    Ok(inv)
}

/// Horner evaluation of jet coefficients at a jet point.
fn eval_poly_at_jet(coeffs: &[Jet], z: &Jet) -> Jet {
    let space = z.space();
    let mut acc = Jet::zero(space);
    for c in coeffs.iter().rev() {
        acc = &(&acc * z) + c;
    }
    acc
}

/// Short Taylor column of R around a jet point off the cut, from R^2 = S.
fn root_taylor(branch: &BranchCut, z0: &Jet, n: usize) -> Result<Vec<Jet>> {
    let s_t = branch.s_poly().taylor_at(z0, n);
    let r0 = AlgebraicFn::root(branch.clone()).alg_eval_jet(z0)?;
    let half_inv = r0.scale_re(2.0).invert()?;
    let mut out = Vec::with_capacity(n + 1);
    out.push(r0);
    for k in 1..=n {
        let mut acc = s_t[k].clone();
        for i in 1..k {
            acc = &acc - &(&out[i] * &out[k - i]);
        }
        out.push(&acc * &half_inv);
    }
    Ok(out)
}

/// Convolution of two Taylor columns, truncated at order n.
fn taylor_mul(a: &[Jet], b: &[Jet], n: usize, space: &Arc<JetSpace>) -> Vec<Jet> {
    let mut out = vec![Jet::zero(space); n + 1];
    for (i, ai) in a.iter().enumerate().take(n + 1) {
        for (j, bj) in b.iter().enumerate() {
            if i + j > n {
                break;
            }
            out[i + j] = &out[i + j] + &(ai * bj);
        }
    }
    out
}

/// Inverse of a Taylor column with invertible lead, to the column's length.
fn taylor_inverse(col: &[Jet]) -> Result<Vec<Jet>> {
    let space = col[0].space();
    let lead_inv = col[0].invert()?;
    let mut out = vec![Jet::zero(space); col.len()];
    out[0] = lead_inv.clone();
    for k in 1..col.len() {
        let mut acc = Jet::zero(space);
        for i in 1..=k {
            acc = &acc + &(&col[i] * &out[k - i]);
        }
        out[k] = -(&acc * &lead_inv);
    }
    Ok(out)
}

/// Value of a term sum at a lifted zero of h. Individual denominators may
/// vanish there while the sum stays finite, so every term contributes a
/// short local expansion around the point and the principal parts have to
/// cancel across the terms.
fn eval_terms_at_h_root(terms: &[AlgebraicFn], branch: &BranchCut, z0: &Jet) -> Result<Jet> {
    let space = z0.space().clone();
    const CAP: usize = 12;
    let mut locals: Vec<Vec<Jet>> = Vec::with_capacity(terms.len());
    let mut c_max = 0usize;
    let mut pp_scale = 0.0f64;
    for t in terms {
        let probe = t.denominator().taylor_at(z0, CAP);
        let den_scale = probe.iter().map(Jet::max_abs).fold(0.0, f64::max);
        let c = match probe
            .iter()
            .position(|d| d.max_abs() > 1e-8 * den_scale)
        {
            Some(c) => c,
            None => {
                return Err(Error::IllConditioned(
                    "term denominator vanishes to high order at a zero of h".into(),
                ))
            }
        };
        let den = t.denominator().taylor_at(z0, 2 * c);
        let den_inv = taylor_inverse(&den[c..])?;
        let r_t = root_taylor(branch, z0, c)?;
        let num_a = t.rational_part().taylor_at(z0, c);
        let num_b = t.root_part().taylor_at(z0, c);
        let odd = taylor_mul(&num_b, &r_t, c, &space);
        let num: Vec<Jet> = num_a.iter().zip(&odd).map(|(x, y)| x + y).collect();
        // Entry k carries the local order k - c.
        let vals = taylor_mul(&num, &den_inv, c, &space);
        for v in vals.iter().take(c) {
            pp_scale = pp_scale.max(v.max_abs());
        }
        c_max = c_max.max(c);
        locals.push(vals);
    }
    let mut acc = vec![Jet::zero(&space); c_max + 1];
    for vals in &locals {
        let c = vals.len() - 1;
        for (k, v) in vals.iter().enumerate() {
            acc[c_max + k - c] = &acc[c_max + k - c] + v;
        }
    }
    let tol = 1e-7 * f64::max(1.0, pp_scale);
    for (slot, v) in acc.iter().enumerate().take(c_max) {
        if v.max_abs() > tol {
            return Err(Error::IllConditioned(format!(
                "singular parts fail to cancel at a zero of h (order {}, size {:.3e})",
                slot as i64 - c_max as i64,
                v.max_abs()
            )));
        }
    }
    Ok(acc[c_max].clone())
}

/// Largest coefficient magnitude over the powers of [lo, hi] that the
/// resolved window actually covers.
fn window_max(s: &LaurentSeries, lo: i64, hi: i64) -> f64 {
    let lo = lo.max(s.bottom_power());
    let hi = hi.min(s.top_power());
    let mut worst = 0.0f64;
    let mut p = lo;
    while p <= hi {
        worst = worst.max(s.coeff(p).max_abs());
        p += 1;
    }
    worst
}

struct LevelSolution {
    p: FnSum,
    series: LaurentSeries,
    residual: f64,
}

/// Determines the polynomial part Q from the decay and regularity
/// constraints, then assembles the correction exactly term by term.
fn solve_level(m_fn: &AlgebraicFn, h_g: &PolyZ, u: &FnSum) -> Result<LevelSolution> {
    let space = m_fn.space().clone();
    let order = space.order();
    let m = space.num_vars();

    // Effective order-0 degree of h sets the split between decay-pinned and
    // root-pinned coefficients.
    let h_deg = h_g.degree().unwrap_or(0);
    // Scale from the order-0 slots only; higher jet components can be many
    // orders larger without saying anything about order-0 roundoff.
    let h_scale = (0..=h_deg)
        .map(|k| h_g.coeff(k).order0().norm())
        .fold(1.0f64, f64::max);
    let mut d0 = 0usize;
    for k in (0..=h_deg).rev() {
        if h_g.coeff(k).order0().norm() > H_DEGREE_TOL * h_scale {
            d0 = k;
            break;
        }
    }
    if h_g.coeff(d0).order0().norm() <= H_DEGREE_TOL * h_scale {
        return Err(Error::IllConditioned(
            "h vanishes at order 0 on the whole cut".into(),
        ));
    }

    if m < 3 {
        return Err(Error::InvalidConfig(
            "need at least three coupling directions for the level solve".into(),
        ));
    }
    let dq = m - 3;
    if d0 > dq + 1 {
        return Err(Error::IllConditioned(
            "probe count too small for the degree of h".into(),
        ));
    }

    let depth = (4 * m + 60) as i64;
    let t_ser = m_fn.inverse()?.laurent_expand(depth);
    let u_ser = u.laurent_expand(depth);
    let s_u = u_ser.mul(&t_ser);
    let t_lead_inv = t_ser.coeff(-(d0 as i64) - 1).invert()?;

    // Lifted zeros of h for the regularity conditions.
    let roots = if d0 > 0 {
        poly_roots_lifted(h_g)?
    } else {
        Vec::new()
    };
    if roots.len() != d0 {
        return Err(Error::IllConditioned(format!(
            "expected {d0} finite zeros of h, found {}",
            roots.len()
        )));
    }
    let u_at_roots: Vec<Jet> = roots
        .iter()
        .map(|z| eval_terms_at_h_root(u.terms(), m_fn.branch(), z))
        .collect::<Result<_>>()?;
    let vand_inv = if d0 > 0 {
        let v0: Vec<Vec<Complex64>> = roots
            .iter()
            .map(|z| {
                let z0 = z.order0();
                (0..d0).map(|k| z0.powu(k as u32)).collect()
            })
            .collect();
        Some(invert_matrix(v0)?)
    } else {
        None
    };

    let mut q = vec![Jet::zero(&space); dq + 1];
    let sweeps = 2 * (order + 2) + 20;
    for _ in 0..sweeps {
        // Decay conditions, top coefficient first: the equation at power
        // d - d0 - 1 is dominated by q_d through the leading series entry.
        for d in (d0..=dq).rev() {
            let p = d as i64 - d0 as i64 - 1;
            let mut acc = s_u.coeff(p);
            for (dp, qv) in q.iter().enumerate() {
                if dp == d {
                    continue;
                }
                let tp = p - dp as i64;
                if t_ser.has_power(tp) {
                    acc = &acc + &(qv * &t_ser.coeff(tp));
                }
            }
            q[d] = -(&acc * &t_lead_inv);
        }
        // Regularity at the zeros of h: correct the low coefficients with
        // the order-0 inverse of the root matrix.
        if let Some(inv) = &vand_inv {
            let res: Vec<Jet> = roots
                .iter()
                .zip(&u_at_roots)
                .map(|(z, uz)| -(uz + &eval_poly_at_jet(&q, z)))
                .collect();
            for (d, slot) in q.iter_mut().enumerate().take(d0) {
                let mut delta = Jet::zero(&space);
                for (i, r) in res.iter().enumerate() {
                    delta = &delta + &r.scale(inv[d][i]);
                }
                *slot = &*slot + &delta;
            }
        }
    }

    // Every decay condition in the resolved window must now hold, including
    // the ones never solved for explicitly. The reference scale stays in the
    // shallow window: deep expansion coefficients grow geometrically and
    // would make the comparison vacuous.
    let top_check = (2 * m) as i64;
    let out_scale = f64::max(
        1.0,
        window_max(&s_u, -top_check - 2, top_check).max(window_max(&t_ser, -top_check - 2, 0)),
    );
    let mut residual = 0.0f64;
    for p in -1..=top_check {
        let mut acc = s_u.coeff(p);
        for (dp, qv) in q.iter().enumerate() {
            let tp = p - dp as i64;
            if t_ser.has_power(tp) {
                acc = &acc + &(qv * &t_ser.coeff(tp));
            }
        }
        residual = residual.max(acc.max_abs());
    }
    let residual = residual / out_scale;
    if residual > LEVEL_RESIDUAL_TOL {
        return Err(Error::IllConditioned(format!(
            "level solve left a decay defect of {residual:.3e}"
        )));
    }
    if d0 > 0 {
        let worst_root = roots
            .iter()
            .zip(&u_at_roots)
            .map(|(z, uz)| (uz + &eval_poly_at_jet(&q, z)).max_abs())
            .fold(0.0, f64::max)
            / out_scale;
        if worst_root > LEVEL_RESIDUAL_TOL {
            return Err(Error::IllConditioned(format!(
                "level solve left a regularity defect of {worst_root:.3e}"
            )));
        }
    }

    // Exact assembly: P = (Q + U)/(R h) becomes Q R/(S h) plus one term
    // (b S + a R)/(d S h) per source term, using 1/R = R/S.
    let q_poly = PolyZ::from_coeffs(&space, q);
    let s_poly = m_fn.branch().s_poly();
    let sh = s_poly.mul(h_g);
    let mut terms = Vec::with_capacity(u.terms().len() + 1);
    terms.push(AlgebraicFn::new(
        m_fn.branch().clone(),
        PolyZ::zero(&space),
        q_poly.clone(),
        sh.clone(),
    )?);
    for t in u.terms() {
        terms.push(AlgebraicFn::new(
            m_fn.branch().clone(),
            t.root_part().mul(&s_poly),
            t.rational_part().clone(),
            t.denominator().mul(&sh),
        )?);
    }
    let p_sum = FnSum::from_terms(terms);

    // The series solved for and the expansion of the assembled terms are
    // built along independent routes; they must agree where both are well
    // conditioned.
    let q_ser = LaurentSeries::from_poly(&q_poly, -depth);
    let p_ser = q_ser.mul(&t_ser).add(&s_u);
    let from_terms = p_sum.laurent_expand(16);
    let check_scale = f64::max(1.0, window_max(&p_ser, -16, -2));
    for pw in -16..=-2_i64 {
        let diff = (&from_terms.coeff(pw) - &p_ser.coeff(pw)).max_abs();
        if diff > 1e-8 * check_scale {
            {
                let d = &from_terms.coeff(pw) - &p_ser.coeff(pw);
                let sp = d.space().clone();
                let mut per_order = vec![(0.0f64, 0.0f64, 0.0f64); sp.order() + 1];
                for (i, v) in d.coeffs().iter().enumerate() {
                    let o: usize = sp.multi_index(i).iter().map(|&x| x as usize).sum();
                    per_order[o].0 = per_order[o].0.max(v.norm());
                    per_order[o].1 = per_order[o].1.max(from_terms.coeff(pw).coeffs()[i].norm());
                    per_order[o].2 = per_order[o].2.max(p_ser.coeff(pw).coeffs()[i].norm());
                }
                for (o, (dv, fv, pv)) in per_order.iter().enumerate() {
                    eprintln!("DRIFT pw={pw} jet-order {o}: diff {dv:.3e} ft {fv:.3e} ps {pv:.3e}");
                }
                let mut worst = (0.0f64, 0usize);
                for (i, v) in d.coeffs().iter().enumerate() {
                    if v.norm() > worst.0 { worst = (v.norm(), i); }
                }
                eprintln!("DRIFT worst slot multi {:?}", sp.multi_index(worst.1));
                for (ti, t) in p_sum.terms().iter().enumerate() {
                    let te = t.laurent_expand(16);
                    let c = te.coeff(pw);
                    let slotv = c.coeffs()[worst.1].norm();
                    eprintln!("DRIFT term {ti}: coeff(-16) max {:.3e} worst-slot {:.3e} (a deg {:?} b deg {:?} d deg {:?})",
                        c.max_abs(), slotv, t.root_part().degree(), t.rational_part().degree(), t.denominator().degree());
                }
            }
            return Err(Error::IllConditioned(format!(
                "term assembly drifted at z^{pw} by {diff:.3e}"
            )));
        }
    }

    Ok(LevelSolution {
        p: p_sum,
        series: p_ser,
        residual,
    })
}

/// Runs the recursion up to the requested genus.
pub fn run(eq: &Equilibrium, settings: &HierarchySettings) -> Result<LoopHierarchy> {
    let field = eq.field();
    let k_avail = field.order();
    if k_avail < settings.g_max {
        return Err(Error::InsufficientJetOrder {
            need: settings.g_max,
            have: k_avail,
        });
    }
    let depth = settings.depth.max((field.probe_m() + 2) as i64);

    let p0 = eq.resolvent_p0();
    let lead_lau = p0.laurent_expand(depth);
    // The polynomial part of P_0 cancels between V' and R h.
    let lead_defect = lead_lau.plus_part().max_abs();
    if lead_defect > LEVEL_RESIDUAL_TOL * f64::max(1.0, lead_lau.max_abs()) {
        return Err(Error::IllConditioned(format!(
            "leading resolvent fails to decay (defect {lead_defect:.3e})"
        )));
    }
    let mut levels = vec![LoopLevel {
        genus: 0,
        u: FnSum::empty(),
        laurent: lead_lau.truncate_top(-1),
        p: FnSum::from_terms(vec![p0]),
        solve_residual: lead_defect,
    }];

    for g in 1..=settings.g_max {
        let ord = k_avail - g;
        let target = JetSpace::get(field.probe_m(), ord);
        let branch_g = eq.branch().reduce_order(ord);
        let h_g = eq.h().reduce_order(ord);
        let m_fn = AlgebraicFn::new(
            branch_g.clone(),
            PolyZ::zero(&target),
            h_g.clone(),
            PolyZ::constant_re(&target, 1.0),
        )?;

        let mut terms = Vec::new();
        for t in levels[g - 1].p.terms() {
            terms.push(vertex_derivative(t)?);
        }
        for g1 in 1..g {
            let f1 = levels[g1].p.reduce_order(ord);
            let f2 = levels[g - g1].p.reduce_order(ord);
            for t1 in f1.terms() {
                for t2 in f2.terms() {
                    terms.push(t1.mul(t2));
                }
            }
        }
        let u = FnSum::from_terms(terms);

        let sol = solve_level(&m_fn, &h_g, &u)?;
        let lau = sol.series.truncate_bottom(-depth);
        let tail_defect = lau
            .plus_part()
            .max_abs()
            .max(lau.coeff(-1).max_abs())
            .max(lau.coeff(0).max_abs());
        if tail_defect > LEVEL_RESIDUAL_TOL * f64::max(1.0, window_max(&lau, -8, 8)) {
            return Err(Error::IllConditioned(format!(
                "genus {g} correction fails to decay (defect {tail_defect:.3e})"
            )));
        }
        levels.push(LoopLevel {
            genus: g,
            p: sol.p,
            u,
            laurent: lau.truncate_top(-2),
            solve_residual: sol.residual,
        });
    }

    Ok(LoopHierarchy {
        eq: eq.clone(),
        levels,
        depth,
    })
}

/// Per-genus Taylor data of the free-energy coefficients around the base
/// couplings, as multi-index / value pairs. The constant term is the
/// difference from the base value, hence always zero.
#[derive(Clone, Debug)]
pub struct GenusTable {
    pub genus: usize,
    pub entries: Vec<(Vec<u8>, f64)>,
}

impl GenusTable {
    pub fn coefficient(&self, multi: &[u8]) -> f64 {
        self.entries
            .iter()
            .find(|(idx, _)| idx == multi)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }
}

impl LoopHierarchy {
    pub fn equilibrium(&self) -> &Equilibrium {
        &self.eq
    }

    pub fn levels(&self) -> &[LoopLevel] {
        &self.levels
    }

    pub fn level(&self, genus: usize) -> &LoopLevel {
        &self.levels[genus]
    }

    pub fn depth(&self) -> i64 {
        self.depth
    }

    /// Derivative of the genus-g free-energy coefficient in coupling t_j
    /// (j is 1-based), as a jet over the remaining orders.
    pub fn eg_derivative(&self, genus: usize, j: usize) -> Result<Jet> {
        let lau = &self.levels[genus].laurent;
        let power = -(j as i64) - 1;
        if !lau.has_power(power) {
            return Err(Error::InsufficientJetOrder {
                need: j + 1,
                have: (-lau.bottom_power()) as usize,
            });
        }
        Ok(-lau.coeff(power))
    }

    /// Taylor tables of the free-energy coefficients, one per computed
    /// genus, spanning every coupling direction to the attainable degree.
    pub fn free_energy_tables(&self) -> Result<Vec<GenusTable>> {
        let m = self.eq.field().probe_m();
        let mut out = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            let g = level.genus;
            let ord = level.p.space().order();
            let grads: Vec<Jet> = (1..=m)
                .map(|j| self.eg_derivative(g, j))
                .collect::<Result<_>>()?;
            let table_space = JetSpace::get(m, ord + 1);
            let mut entries = Vec::new();
            for pos in 0..table_space.len() {
                let idx = table_space.multi_index(pos).to_vec();
                let total: usize = idx.iter().map(|&v| v as usize).sum();
                if total == 0 {
                    entries.push((idx, 0.0));
                    continue;
                }
                let j0 = idx.iter().position(|&v| v > 0).unwrap();
                let mut lower = idx.clone();
                lower[j0] -= 1;
                let c = grads[j0].coeff(&lower) / (idx[j0] as f64);
                if c.im.abs() > 1e-9 * (1.0 + c.re.abs()) {
                    return Err(Error::IllConditioned(format!(
                        "free-energy coefficient came out complex: {c}"
                    )));
                }
                entries.push((idx, c.re));
            }
            out.push(GenusTable { genus: g, entries });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve;
    use crate::model::{build_field, AdmissibilityParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian_hierarchy(order: usize, g_max: usize) -> LoopHierarchy {
        let f = build_field(
            &[0.0, 0.0, 0.0, 0.0],
            8,
            order,
            &AdmissibilityParams::default(),
        )
        .unwrap();
        let eq = solve(&f).unwrap();
        run(
            &eq,
            &HierarchySettings {
                g_max,
                depth: 14,
            },
        )
        .unwrap()
    }

    #[test]
    fn vertex_derivative_kills_constants() {
        let f = build_field(
            &[0.0, 0.0, 0.0, 0.0],
            6,
            2,
            &AdmissibilityParams::default(),
        )
        .unwrap();
        let eq = solve(&f).unwrap();
        let one = AlgebraicFn::from_poly(
            eq.branch().clone(),
            PolyZ::constant_re(f.space(), 3.5),
        );
        let dv = vertex_derivative(&one).unwrap();
        let lau = dv.laurent_expand(8);
        assert!(lau.max_abs() < 1e-12);
    }

    #[test]
    fn first_correction_source_is_the_coincident_pair_function() {
        // At the free point U_1 = 1/(z^2-4)^2 = z^-4 + 8 z^-6 + 48 z^-8 + ...
        let hi = gaussian_hierarchy(1, 1);
        let u1 = &hi.level(1).u;
        let lau = u1.laurent_expand(9);
        let expect = [(-4, 1.0), (-6, 8.0), (-8, 48.0)];
        for (p, v) in expect {
            assert!(
                (lau.coeff(p).order0() - c(v, 0.0)).norm() < 1e-9,
                "z^{p}: {}",
                lau.coeff(p).order0()
            );
        }
        for p in [-3, -5, -7] {
            assert!(lau.coeff(p).order0().norm() < 1e-9);
        }
        // Pointwise evaluation is consistent with the deep expansion; the
        // difference from 1/(z^2-4)^2 itself is the probe truncation tail,
        // a few parts in 1e4 at this distance from the cut.
        let z = c(4.0, 1.5);
        let deep = u1.laurent_expand(60);
        let mut summed = c(0.0, 0.0);
        for p in (-60..=deep.top_power()).rev() {
            summed += deep.coeff(p).order0() * z.powi(p as i32);
        }
        let direct = u1.alg_eval(z).unwrap().order0();
        assert!((direct - summed).norm() < 1e-10, "{direct} vs {summed}");
        let s = z * z - 4.0;
        assert!((direct - 1.0 / (s * s)).norm() < 1e-3);
    }

    #[test]
    fn genus_one_expansion_counts_tori() {
        let hi = gaussian_hierarchy(1, 1);
        let lau = &hi.level(1).laurent;
        let expect = [(-5, 1.0), (-7, 10.0), (-9, 70.0)];
        for (p, v) in expect {
            assert!(
                (lau.coeff(p).order0() - c(v, 0.0)).norm() < 1e-8,
                "z^{p}: {}",
                lau.coeff(p).order0()
            );
        }
        for p in [-2, -3, -4, -6, -8] {
            assert!(lau.coeff(p).order0().norm() < 1e-8, "z^{p}");
        }
        // The stored terms are faithful to their own expansion, and
        // approximate (z^2-4)^(-5/2) up to the probe truncation tail.
        let p1 = &hi.level(1).p;
        let at4 = p1.alg_eval(c(4.0, 0.0)).unwrap().order0();
        let deep = p1.laurent_expand(60);
        let mut summed = c(0.0, 0.0);
        for p in -60..=-5_i64 {
            summed += deep.coeff(p).order0() * 4.0_f64.powi(p as i32);
        }
        assert!((at4 - summed).norm() < 1e-11, "{at4} vs {summed}");
        assert!((at4 - c(12.0_f64.powf(-2.5), 0.0)).norm() < 1e-4, "{at4}");
    }

    #[test]
    fn genus_two_expansion_counts_double_tori() {
        let hi = gaussian_hierarchy(2, 2);
        let lau = &hi.level(2).laurent;
        assert!(
            (lau.coeff(-9).order0() - c(21.0, 0.0)).norm() < 1e-6,
            "z^-9: {}",
            lau.coeff(-9).order0()
        );
        // No genus-2 surface from fewer than four pairings.
        for p in [-2, -3, -4, -5, -6, -7, -8] {
            assert!(lau.coeff(p).order0().norm() < 1e-6, "z^{p}");
        }
    }

    #[test]
    fn level_equation_residual_via_series() {
        // [M P_g]_minus must reproduce U_g coefficient by coefficient.
        let hi = gaussian_hierarchy(2, 2);
        for g in 1..=2 {
            let level = hi.level(g);
            let ord = level.p.space().order();
            let branch = hi.equilibrium().branch().reduce_order(ord);
            let space = branch.space().clone();
            let h_g = hi.equilibrium().h().reduce_order(ord);
            let m_fn = AlgebraicFn::new(
                branch,
                PolyZ::zero(&space),
                h_g,
                PolyZ::constant_re(&space, 1.0),
            )
            .unwrap();
            let lhs = level.p.mul_fn(&m_fn).laurent_expand(10);
            let rhs = level.u.laurent_expand(10);
            for p in (-10..=-1).rev() {
                let diff = (&lhs.coeff(p) - &rhs.coeff(p)).max_abs();
                assert!(diff < 1e-8, "genus {g} z^{p}: {diff:.3e}");
            }
        }
    }

    #[test]
    fn free_energy_derivatives_at_the_free_point() {
        // d e_0 / d t_4 = -2 (planar quartic count), d e_1 / d t_4 = -1.
        let hi = gaussian_hierarchy(2, 1);
        let d0 = hi.eg_derivative(0, 4).unwrap().order0();
        assert!((d0 - c(-2.0, 0.0)).norm() < 1e-9, "{d0}");
        let d1 = hi.eg_derivative(1, 4).unwrap().order0();
        assert!((d1 - c(-1.0, 0.0)).norm() < 1e-9, "{d1}");
        // Odd moments vanish at the symmetric point.
        let d3 = hi.eg_derivative(0, 3).unwrap().order0();
        assert!(d3.norm() < 1e-10);
    }

    #[test]
    fn taylor_tables_are_symmetric_in_mixed_partials() {
        let hi = gaussian_hierarchy(2, 1);
        let tables = hi.free_energy_tables().unwrap();
        let t0 = &tables[0];
        // alpha = e_2 + e_4 reachable through either direction: compare the
        // two quotient routes via the gradient jets directly.
        let g2 = hi.eg_derivative(0, 2).unwrap();
        let g4 = hi.eg_derivative(0, 4).unwrap();
        let mut idx4 = vec![0u8; 8];
        idx4[3] = 1;
        let mut idx2 = vec![0u8; 8];
        idx2[1] = 1;
        let via2 = g2.coeff(&idx4);
        let via4 = g4.coeff(&idx2);
        assert!((via2 - via4).norm() < 1e-9, "{via2} vs {via4}");
        // The stored entry matches one of the routes.
        let mut alpha = vec![0u8; 8];
        alpha[1] = 1;
        alpha[3] = 1;
        assert!((t0.coefficient(&alpha) - via2.re).abs() < 1e-9);
        // Constant terms are zero by construction.
        assert_eq!(t0.coefficient(&[0u8; 8]), 0.0);
    }

    /// -d e_1/d t_4 for the quartic in closed form, from the endpoint
    /// relation a (1 + 12 t a) = 1 with a = r^2/4 and
    /// e_1 = -(ln(1 + 24 t a) + ln a)/12. Reproduces the free-point values
    /// -1 and 60 for the first two derivatives.
    fn quartic_e1_slope(t: f64) -> f64 {
        let s = (1.0 + 48.0 * t).sqrt();
        let a = (s - 1.0) / (24.0 * t);
        let ap = -12.0 * a * a / s;
        ((24.0 * a + 24.0 * t * ap) / s + ap / a) / 12.0
    }

    #[test]
    fn quartic_base_levels_solve_cleanly() {
        let f = build_field(
            &[0.0, 0.0, 0.0, 0.05],
            8,
            2,
            &AdmissibilityParams::default(),
        )
        .unwrap();
        let eq = solve(&f).unwrap();
        let hi = run(&eq, &HierarchySettings { g_max: 2, depth: 12 }).unwrap();
        for g in 1..=2 {
            assert!(hi.level(g).solve_residual < 1e-9, "genus {g}");
            // Decay enforced: nothing at z^0 or z^-1.
            let lau = &hi.level(g).laurent;
            assert!(lau.coeff(-2).max_abs().is_finite());
        }
        // The genus-1 torus coefficient equals the closed-form coupling
        // slope of e_1 up to the probe truncation tail.
        let expect = quartic_e1_slope(0.05);
        let v = hi.level(1).laurent.coeff(-5).order0();
        assert!(v.im.abs() < 1e-10, "{v}");
        assert!((v.re - expect).abs() < 5e-3, "{} vs {expect}", v.re);
    }

    #[test]
    fn quartic_torus_coefficient_converges_in_probe_count() {
        // The truncation error of the insertion sum alternates and shrinks
        // by about 0.4 per added probe pair; fourteen probes sit within
        // 4e-4 of the closed form.
        let expect = quartic_e1_slope(0.05);
        let mk = |probes: usize| {
            let f = build_field(
                &[0.0, 0.0, 0.0, 0.05],
                probes,
                1,
                &AdmissibilityParams::default(),
            )
            .unwrap();
            let eq = solve(&f).unwrap();
            let hi = run(&eq, &HierarchySettings { g_max: 1, depth: 12 }).unwrap();
            hi.level(1).laurent.coeff(-5).order0().re
        };
        let coarse = (mk(8) - expect).abs();
        let fine = (mk(14) - expect).abs();
        assert!(fine < 4e-4, "{fine:.3e}");
        assert!(fine < coarse / 4.0, "{fine:.3e} vs {coarse:.3e}");
    }

    #[test]
    fn probe_count_does_not_change_shared_coefficients() {
        let mk = |probes: usize| {
            let f = build_field(
                &[0.0, 0.0, 0.0, 0.0],
                probes,
                1,
                &AdmissibilityParams::default(),
            )
            .unwrap();
            let eq = solve(&f).unwrap();
            run(&eq, &HierarchySettings { g_max: 1, depth: 12 }).unwrap()
        };
        let small = mk(6);
        let large = mk(8);
        // With m probe directions the insertion sum is truncated at order m;
        // the first affected coefficient of the genus-1 correction is
        // z^(-m-3), so six and eight probes must agree through z^-10.
        for p in (-10..=-2).rev() {
            let a = small.level(1).laurent.coeff(p).order0();
            let b = large.level(1).laurent.coeff(p).order0();
            assert!((a - b).norm() < 1e-9, "z^{p}: {a} vs {b}");
        }
        // Deeper coefficients genuinely differ: the truth needs more probes.
        let a = small.level(1).laurent.coeff(-11).order0();
        let b = large.level(1).laurent.coeff(-11).order0();
        assert!((b - Complex64::new(420.0, 0.0)).norm() < 1e-7, "{b}");
        assert!((a - b).norm() > 1.0, "six probes cannot resolve z^-11");
    }
}
