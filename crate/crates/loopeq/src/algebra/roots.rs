//! Roots of jet-coefficient polynomials: simultaneous iteration for the
//! order-0 roots, then a Newton lift for the nilpotent corrections.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::Jet;

use super::poly::PolyZ;

const DK_MAX_ITER: usize = 500;
const DK_TOL: f64 = 1e-14;
const SEPARATION_REL: f64 = 1e-6;

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Simultaneous root iteration. `coeffs` ascending, leading entry nonzero.
/// The step tolerance is relative to the Cauchy root bound.
fn durand_kerner(coeffs: &[Complex64], max_iter: usize, tol: f64) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let bound = 1.0
        + monic[..deg]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut xs: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..max_iter {
        let mut max_step = 0.0f64;
        for i in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    denom *= xs[i] - xs[j];
                }
            }
            if denom.norm() == 0.0 {
                // Collided iterates; nudge and keep going.
                xs[i] += Complex64::new(1e-6, 1e-6);
                max_step = f64::INFINITY;
                continue;
            }
            let step = horner(&monic, xs[i]) / denom;
            xs[i] -= step;
            max_step = max_step.max(step.norm());
        }
        if max_step <= tol * bound {
            return Ok(xs);
        }
    }
    Err(Error::RootsDiverged)
}

/// Order-0 roots only, tolerating clustered roots (no nilpotent lift, no
/// separation requirement). Used for geometric diagnostics.
pub fn poly_roots_order0(p: &PolyZ) -> Result<Vec<Complex64>> {
    let deg = match p.degree() {
        Some(d) => d,
        None => return Ok(Vec::new()),
    };
    let c0: Vec<Complex64> = (0..=deg).map(|k| p.coeff(k).order0()).collect();
    let scale = c0.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(Vec::new());
    }
    // Drop a numerically vanishing lead instead of failing; the dropped
    // degrees correspond to roots at infinity.
    let mut top = deg;
    while top > 0 && c0[top].norm() <= 1e-12 * scale {
        top -= 1;
    }
    if top == 0 {
        return Ok(Vec::new());
    }
    // Multiple roots slow the iteration to a linear rate; allow for it.
    durand_kerner(&c0[..=top], 5000, 1e-10)
}

/// Finite roots with nilpotent corrections, sorted by order-0 value (real
/// part, then imaginary). The order-0 roots come from the part of the
/// polynomial whose coefficients do not vanish at order 0; pure-nilpotent
/// top coefficients push the remaining roots out to infinity and those are
/// not returned. Order-0 roots must be simple.
pub fn poly_roots_lifted(p: &PolyZ) -> Result<Vec<Jet>> {
    let deg = match p.degree() {
        Some(d) => d,
        None => return Err(Error::IllConditioned("root search on zero polynomial".into())),
    };
    let space = p.space();
    let c0: Vec<Complex64> = (0..=deg).map(|k| p.coeff(k).order0()).collect();
    let scale = c0.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut top = deg;
    while top > 0 && c0[top].norm() <= 1e-12 * scale {
        top -= 1;
    }
    if top == 0 {
        return Ok(Vec::new());
    }
    let base = durand_kerner(&c0[..=top], DK_MAX_ITER, DK_TOL)?;
    let spread = 1.0 + base.iter().map(|r| r.norm()).fold(0.0, f64::max);
    for i in 0..base.len() {
        for j in 0..i {
            if (base[i] - base[j]).norm() < SEPARATION_REL * spread {
                return Err(Error::ConfluentRoots);
            }
        }
    }
    let dp = p.derivative_z();
    let mut lifted = Vec::with_capacity(base.len());
    for &r in &base {
        let mut z = Jet::constant(space, r);
        // Newton doubles the resolved nilpotent degree each step.
        for _ in 0..=space.order() {
            let dv = dp.eval_jet(&z);
            let dv_inv = dv.invert().map_err(|_| Error::ConfluentRoots)?;
            z = &z - &(&p.eval_jet(&z) * &dv_inv);
        }
        lifted.push(z);
    }
    lifted.sort_by(|a, b| {
        let (x, y) = (a.order0(), b.order0());
        x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
    });
    Ok(lifted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::JetSpace;

    #[test]
    fn cubic_with_integer_roots() {
        // z^3 - 7z + 6 = (z-1)(z-2)(z+3).
        let s = JetSpace::get(1, 0);
        let p = PolyZ::from_re_coeffs(&s, &[6.0, -7.0, 0.0, 1.0]);
        let roots = poly_roots_lifted(&p).unwrap();
        let expect = [-3.0, 1.0, 2.0];
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip(expect) {
            assert!((r.order0() - Complex64::new(e, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn purely_imaginary_pair() {
        // 0.4 z^2 + 1.46944 -> z = +-i sqrt(3.6736).
        let s = JetSpace::get(1, 0);
        let p = PolyZ::from_re_coeffs(&s, &[1.46944, 0.0, 0.4]);
        let roots = poly_roots_lifted(&p).unwrap();
        let m = (1.46944f64 / 0.4).sqrt();
        for want in [Complex64::new(0.0, -m), Complex64::new(0.0, m)] {
            let hit = roots
                .iter()
                .map(|r| (r.order0() - want).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(hit < 1e-10, "missing root near {want}");
        }
    }

    #[test]
    fn linear_jet_root() {
        // z - t around t = 0: the root is the coupling itself.
        let s = JetSpace::get(1, 2);
        let t = Jet::variable(&s, 0, Complex64::new(0.0, 0.0)).unwrap();
        let p = PolyZ::from_coeffs(&s, vec![-(&t), Jet::from_re(&s, 1.0)]);
        let roots = poly_roots_lifted(&p).unwrap();
        assert_eq!(roots.len(), 1);
        assert!(roots[0].approx_eq(&t, 1e-13));
    }

    #[test]
    fn lifted_square_root_pair() {
        // z^2 - (1+t): roots +-sqrt(1+t), matching the binomial series.
        let s = JetSpace::get(1, 3);
        let t = Jet::variable(&s, 0, Complex64::new(0.0, 0.0)).unwrap();
        let c = -(Jet::from_re(&s, 1.0) + &t);
        let p = PolyZ::from_coeffs(&s, vec![c, Jet::zero(&s), Jet::from_re(&s, 1.0)]);
        let roots = poly_roots_lifted(&p).unwrap();
        let sq = (Jet::from_re(&s, 1.0) + &t).sqrt().unwrap();
        assert!(roots[0].approx_eq(&-(&sq), 1e-12));
        assert!(roots[1].approx_eq(&sq, 1e-12));
    }

    #[test]
    fn repeated_roots_are_refused() {
        let s = JetSpace::get(1, 1);
        // (z-1)^2.
        let p = PolyZ::from_re_coeffs(&s, &[1.0, -2.0, 1.0]);
        assert!(matches!(poly_roots_lifted(&p), Err(Error::ConfluentRoots)));
    }
}
