//! Polynomials in the spectral variable with jet coefficients.
//!
//! Coefficients are stored in ascending powers of z. The zero polynomial is
//! an empty coefficient vector; `trim` keeps representations canonical by
//! dropping top coefficients that are negligible relative to the largest
//! entry.

use std::sync::Arc;

use num_complex::Complex64;

use crate::jet::{Jet, JetSpace};

const TRIM_REL: f64 = 1e-13;

/// Polynomial in z over jet coefficients, ascending powers.
#[derive(Clone, Debug)]
pub struct PolyZ {
    space: Arc<JetSpace>,
    coeffs: Vec<Jet>,
}

impl PolyZ {
    pub fn zero(space: &Arc<JetSpace>) -> PolyZ {
        PolyZ {
            space: Arc::clone(space),
            coeffs: Vec::new(),
        }
    }

    pub fn from_coeffs(space: &Arc<JetSpace>, coeffs: Vec<Jet>) -> PolyZ {
        let mut p = PolyZ {
            space: Arc::clone(space),
            coeffs,
        };
        p.trim();
        p
    }

    /// Constant polynomial.
    pub fn constant(space: &Arc<JetSpace>, value: Jet) -> PolyZ {
        PolyZ::from_coeffs(space, vec![value])
    }

    pub fn constant_re(space: &Arc<JetSpace>, value: f64) -> PolyZ {
        PolyZ::constant(space, Jet::from_re(space, value))
    }

    /// The monomial z.
    pub fn z(space: &Arc<JetSpace>) -> PolyZ {
        PolyZ::from_coeffs(
            space,
            vec![Jet::zero(space), Jet::from_re(space, 1.0)],
        )
    }

    /// Real-coefficient polynomial lifted to constant jets.
    pub fn from_re_coeffs(space: &Arc<JetSpace>, coeffs: &[f64]) -> PolyZ {
        PolyZ::from_coeffs(
            space,
            coeffs.iter().map(|&c| Jet::from_re(space, c)).collect(),
        )
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[Jet] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    /// Coefficient of z^k (zero jet when k exceeds the degree).
    pub fn coeff(&self, k: usize) -> Jet {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| Jet::zero(&self.space))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(Jet::max_abs).fold(0.0, f64::max)
    }

    fn trim(&mut self) {
        // Noise floors are per jet component: the arithmetic never feeds a
        // higher-order slot into a lower one, so each slot's roundoff scale
        // is set by that slot alone across the polynomial. A single global
        // scale would let large high-order components eat exact low-order
        // coefficients.
        let dim = match self.coeffs.first() {
            Some(c) => c.coeffs().len(),
            None => return,
        };
        let mut scale = vec![1.0f64; dim];
        for c in &self.coeffs {
            for (s, v) in scale.iter_mut().zip(c.coeffs()) {
                *s = s.max(v.norm());
            }
        }
        while let Some(top) = self.coeffs.last() {
            let droppable = top
                .coeffs()
                .iter()
                .zip(&scale)
                .all(|(v, s)| v.norm() <= TRIM_REL * s);
            if droppable {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn add(&self, other: &PolyZ) -> PolyZ {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) + other.coeff(k));
        }
        PolyZ::from_coeffs(&self.space, out)
    }

    pub fn sub(&self, other: &PolyZ) -> PolyZ {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            out.push(self.coeff(k) - other.coeff(k));
        }
        PolyZ::from_coeffs(&self.space, out)
    }

    pub fn mul(&self, other: &PolyZ) -> PolyZ {
        if self.is_zero() || other.is_zero() {
            return PolyZ::zero(&self.space);
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = vec![Jet::zero(&self.space); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        PolyZ::from_coeffs(&self.space, out)
    }

    pub fn scale(&self, s: &Jet) -> PolyZ {
        PolyZ::from_coeffs(
            &self.space,
            self.coeffs.iter().map(|c| c * s).collect(),
        )
    }

    pub fn scale_re(&self, s: f64) -> PolyZ {
        PolyZ::from_coeffs(
            &self.space,
            self.coeffs.iter().map(|c| c.scale_re(s)).collect(),
        )
    }

    pub fn neg(&self) -> PolyZ {
        self.scale_re(-1.0)
    }

    /// Multiply by z^k.
    pub fn shift_up(&self, k: usize) -> PolyZ {
        if self.is_zero() {
            return self.clone();
        }
        let mut out = vec![Jet::zero(&self.space); k];
        out.extend(self.coeffs.iter().cloned());
        PolyZ::from_coeffs(&self.space, out)
    }

    /// d/dz.
    pub fn derivative_z(&self) -> PolyZ {
        if self.coeffs.len() <= 1 {
            return PolyZ::zero(&self.space);
        }
        let out: Vec<Jet> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.scale_re(k as f64))
            .collect();
        PolyZ::from_coeffs(&self.space, out)
    }

    /// Horner evaluation at a jet-valued point.
    pub fn eval_jet(&self, z: &Jet) -> Jet {
        let mut acc = Jet::zero(&self.space);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    /// Taylor coefficients of p(z0 + x) in x through order n.
    pub fn taylor_at(&self, z0: &Jet, n: usize) -> Vec<Jet> {
        let mut out = Vec::with_capacity(n + 1);
        let mut cur = self.clone();
        let mut fact = 1.0f64;
        for k in 0..=n {
            if k > 0 {
                fact *= k as f64;
            }
            out.push(cur.eval_jet(z0).scale_re(1.0 / fact));
            cur = cur.derivative_z();
        }
        out
    }

    /// Horner evaluation of the order-0 part at a complex point.
    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c.order0();
        }
        acc
    }

    /// Coefficientwise order reduction.
    pub fn reduce_order(&self, new_order: usize) -> PolyZ {
        let target = JetSpace::get(self.space.num_vars(), new_order);
        PolyZ::from_coeffs(
            &target,
            self.coeffs.iter().map(|c| c.reduce_order(new_order)).collect(),
        )
    }

    /// Coefficientwise partial derivative in coupling direction `var`.
    pub fn extract_partial(&self, var: usize, k: usize) -> crate::error::Result<PolyZ> {
        let target = JetSpace::get(self.space.num_vars(), self.space.order() - k);
        let mut out = Vec::with_capacity(self.coeffs.len());
        for c in &self.coeffs {
            out.push(c.extract_partial(var, k)?);
        }
        Ok(PolyZ::from_coeffs(&target, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiply_and_trim() {
        let s = JetSpace::get(1, 0);
        // (z - 1)(z + 1) = z^2 - 1.
        let a = PolyZ::from_re_coeffs(&s, &[-1.0, 1.0]);
        let b = PolyZ::from_re_coeffs(&s, &[1.0, 1.0]);
        let p = a.mul(&b);
        assert_eq!(p.degree(), Some(2));
        assert!((p.eval_c64(Complex64::new(2.0, 0.0)) - 3.0).norm() < 1e-14);
        // Cancellation trims the degree.
        let d = a.mul(&b).sub(&PolyZ::from_re_coeffs(&s, &[0.0, 0.0, 1.0]));
        assert_eq!(d.degree(), Some(0));
    }

    #[test]
    fn derivative_and_eval() {
        let s = JetSpace::get(1, 1);
        // p = z^3 + 2z, p' = 3z^2 + 2, p'(2) = 14.
        let p = PolyZ::from_re_coeffs(&s, &[0.0, 2.0, 0.0, 1.0]);
        let dp = p.derivative_z();
        assert!((dp.eval_c64(Complex64::new(2.0, 0.0)) - 14.0).norm() < 1e-14);
    }

    #[test]
    fn jet_coefficients_propagate() {
        let s = JetSpace::get(1, 1);
        let t = Jet::variable(&s, 0, Complex64::new(0.5, 0.0)).unwrap();
        // p = t * z; evaluated at z = 3 gives jet 1.5 + 3 dt.
        let p = PolyZ::from_coeffs(&s, vec![Jet::zero(&s), t]);
        let v = p.eval_jet(&Jet::from_re(&s, 3.0));
        assert!((v.order0() - Complex64::new(1.5, 0.0)).norm() < 1e-14);
        assert!((v.coeff(&[1]) - Complex64::new(3.0, 0.0)).norm() < 1e-14);
    }
}
