//! The perturbed Gaussian potential and its coupling structure.
//!
//! The weight is exp(-N tr V(M)) with V(x) = x^2/2 + sum_{j<=upsilon} t_j x^j.
//! Couplings t_1..t_m are carried as jet directions: the first upsilon have
//! the physical values as base points, the rest are probe directions frozen
//! at zero. Probes beyond the physical degree exist so that coupling
//! derivatives of arbitrary moment order are available to the hierarchy.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};
use num_complex::Complex64;

use crate::algebra::PolyZ;

/// Bounds defining the admissible coupling region.
#[derive(Clone, Copy, Debug)]
pub struct AdmissibilityParams {
    /// Euclidean bound on the coupling vector.
    pub t_bound: f64,
    /// Dominance factor: the top coupling must exceed gamma times the sum of
    /// the lower magnitudes.
    pub gamma: f64,
}

impl Default for AdmissibilityParams {
    fn default() -> Self {
        AdmissibilityParams {
            t_bound: 1.0,
            gamma: 1.0,
        }
    }
}

/// True when the coupling vector keeps the one-cut regime: either all zero
/// (the closure point of the family) or even top degree with a dominant,
/// positive top coupling inside the Euclidean ball.
pub fn admissible(t: &[f64], params: &AdmissibilityParams) -> bool {
    let norm = t.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return true;
    }
    if norm > params.t_bound {
        return false;
    }
    let upsilon = t.len();
    if upsilon % 2 != 0 {
        return false;
    }
    let top = t[upsilon - 1];
    if top <= 0.0 {
        return false;
    }
    let lower: f64 = t[..upsilon - 1].iter().map(|x| x.abs()).sum();
    top > params.gamma * lower
}

/// Potential data with couplings lifted to jets.
#[derive(Clone, Debug)]
pub struct ExternalField {
    upsilon: usize,
    t: Vec<f64>,
    probe_m: usize,
    space: Arc<JetSpace>,
    vprime: PolyZ,
}

/// Validates the couplings and lifts them to jet directions. `t` lists
/// t_1..t_upsilon; `probe_m >= upsilon` directions are created in total;
/// `order` is the truncation order of the jets.
pub fn build_field(
    t: &[f64],
    probe_m: usize,
    order: usize,
    params: &AdmissibilityParams,
) -> Result<ExternalField> {
    let upsilon = t.len();
    if upsilon == 0 || upsilon % 2 != 0 {
        return Err(Error::InvalidField(format!(
            "coupling vector must have even positive length, got {upsilon}"
        )));
    }
    if probe_m < upsilon {
        return Err(Error::InvalidField(format!(
            "probe count {probe_m} below coupling degree {upsilon}"
        )));
    }
    let all_zero = t.iter().all(|&x| x == 0.0);
    if !all_zero && t[upsilon - 1] <= 0.0 {
        return Err(Error::InvalidField(
            "top coupling must be positive".into(),
        ));
    }
    if !admissible(t, params) {
        return Err(Error::InvalidField(format!(
            "couplings {t:?} outside the admissible region (bound {}, gamma {})",
            params.t_bound, params.gamma
        )));
    }
    let space = JetSpace::get(probe_m, order);
    // V'(z) = z + sum_j j t_j z^(j-1): coefficient of z^k is
    // delta_{k,1} + (k+1) t_{k+1}, couplings live, probes based at zero.
    let mut coeffs = Vec::with_capacity(probe_m);
    for k in 0..probe_m {
        let base = if k + 1 <= upsilon { t[k] } else { 0.0 };
        let tj = if order > 0 {
            Jet::variable(&space, k, Complex64::new(base, 0.0))?
        } else {
            Jet::from_re(&space, base)
        };
        let mut c = tj.scale_re((k + 1) as f64);
        if k == 1 {
            c = c + Jet::from_re(&space, 1.0);
        }
        coeffs.push(c);
    }
    let vprime = PolyZ::from_coeffs(&space, coeffs);
    Ok(ExternalField {
        upsilon,
        t: t.to_vec(),
        probe_m,
        space,
        vprime,
    })
}

impl ExternalField {
    pub fn upsilon(&self) -> usize {
        self.upsilon
    }

    pub fn probe_m(&self) -> usize {
        self.probe_m
    }

    pub fn order(&self) -> usize {
        self.space.order()
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn couplings(&self) -> &[f64] {
        &self.t
    }

    pub fn is_gaussian(&self) -> bool {
        self.t.iter().all(|&x| x == 0.0)
    }

    /// V'(z) with live couplings.
    pub fn vprime(&self) -> &PolyZ {
        &self.vprime
    }

    /// V(z) with live couplings: z^2/2 plus the coupling monomials.
    pub fn v_poly(&self) -> PolyZ {
        let mut coeffs = vec![Jet::zero(&self.space); self.probe_m + 1];
        for k in 0..self.probe_m {
            // vprime coeff of z^k is delta_{k,1} + (k+1) t_{k+1}; undo the
            // prefactor to recover t_{k+1} with its live jet direction.
            let mut tj = self.vprime.coeff(k);
            if k == 1 {
                tj = tj - Jet::from_re(&self.space, 1.0);
            }
            coeffs[k + 1] = tj.scale_re(1.0 / (k + 1) as f64);
        }
        coeffs[2] = &coeffs[2] + &Jet::from_re(&self.space, 0.5);
        PolyZ::from_coeffs(&self.space, coeffs)
    }

    /// Scalar V(x) at the physical couplings.
    pub fn potential_value(&self, x: f64) -> f64 {
        let mut v = 0.5 * x * x;
        let mut pow = 1.0;
        for &tj in &self.t {
            pow *= x;
            v += tj * pow;
        }
        v
    }

    /// Scalar V'(x) at the physical couplings.
    pub fn vprime_value(&self, x: f64) -> f64 {
        let mut v = x;
        let mut pow = 1.0;
        for (j, &tj) in self.t.iter().enumerate() {
            v += (j + 1) as f64 * tj * pow;
            pow *= x;
        }
        v
    }

    /// Same field with jets truncated at a lower order.
    pub fn reduce_order(&self, new_order: usize) -> ExternalField {
        ExternalField {
            upsilon: self.upsilon,
            t: self.t.clone(),
            probe_m: self.probe_m,
            space: JetSpace::get(self.probe_m, new_order),
            vprime: self.vprime.reduce_order(new_order),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> AdmissibilityParams {
        AdmissibilityParams::default()
    }

    #[test]
    fn gaussian_closure_point_is_accepted() {
        let f = build_field(&[0.0, 0.0, 0.0, 0.0], 8, 2, &params()).unwrap();
        assert!(f.is_gaussian());
        assert_eq!(f.upsilon(), 4);
        // V' = z exactly at the base point.
        let vp = f.vprime();
        assert!((vp.coeff(1).order0().re - 1.0).abs() < 1e-15);
        for k in [0usize, 2, 3, 4, 5, 6, 7] {
            assert!(vp.coeff(k).order0().norm() < 1e-15, "z^{k}");
        }
        // Coupling directions are live: d/dt_4 of the z^3 coefficient is 4.
        let mut idx = vec![0u8; 8];
        idx[3] = 1;
        assert!((vp.coeff(3).coeff(&idx).re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn quartic_field_coefficients() {
        let f = build_field(&[0.0, 0.0, 0.0, 0.1], 8, 1, &params()).unwrap();
        let vp = f.vprime();
        assert!((vp.coeff(1).order0().re - 1.0).abs() < 1e-15);
        assert!((vp.coeff(3).order0().re - 0.4).abs() < 1e-15);
        assert!((f.potential_value(2.0) - (2.0 + 0.1 * 16.0)).abs() < 1e-14);
        assert!((f.vprime_value(2.0) - (2.0 + 0.4 * 8.0)).abs() < 1e-14);
    }

    #[test]
    fn inadmissible_fields_are_rejected() {
        // Odd length.
        assert!(build_field(&[0.1], 4, 1, &params()).is_err());
        // Negative top coupling.
        assert!(build_field(&[0.0, 0.0, 0.0, -0.1], 8, 1, &params()).is_err());
        // Dominance violated: |t_1| + |t_2| + |t_3| >= t_4.
        assert!(build_field(&[0.2, 0.0, 0.0, 0.1], 8, 1, &params()).is_err());
        // Outside the Euclidean ball.
        assert!(build_field(&[0.0, 0.0, 0.0, 1.5], 8, 1, &params()).is_err());
        // Probe count below physical degree.
        assert!(build_field(&[0.0, 0.0, 0.0, 0.1], 2, 1, &params()).is_err());
        // Sextic with dominant top passes.
        assert!(build_field(&[0.0, 0.01, 0.0, 0.02, 0.0, 0.05], 8, 1, &params()).is_ok());
    }

    proptest! {
        #[test]
        fn admissibility_survives_shrinking(
            t4 in 0.01f64..0.5,
            frac in 0.0f64..0.9,
            s in 0.01f64..1.0,
        ) {
            // Build an admissible quartic, then shrink it; both bounds are
            // homogeneous or monotone under scaling toward zero.
            let t = [0.0, frac * t4 * 0.9, 0.0, t4];
            prop_assume!(admissible(&t, &params()));
            let shrunk: Vec<f64> = t.iter().map(|x| x * s).collect();
            prop_assert!(admissible(&shrunk, &params()));
        }
    }
}
