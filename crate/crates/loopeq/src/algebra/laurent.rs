//! Laurent expansions around z = infinity with jet coefficients.
//!
//! A series holds the coefficients of z^top, z^(top-1), ... down to some
//! bottom power; everything below the bottom is unresolved tail, everything
//! above the top is exactly zero. Arithmetic tracks the resolved window so
//! that a coefficient is only ever reported when every contribution to it
//! is known. Callers over-expand and truncate rather than trusting the last
//! few entries of a tight window.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{Jet, JetSpace};

use super::poly::PolyZ;

#[derive(Clone, Debug)]
pub struct LaurentSeries {
    space: Arc<JetSpace>,
    /// Power of z carried by `coeffs[0]`.
    top_power: i64,
    /// Descending powers: `coeffs[i]` multiplies z^(top_power - i).
    coeffs: Vec<Jet>,
}

impl LaurentSeries {
    pub fn new(space: &Arc<JetSpace>, top_power: i64, coeffs: Vec<Jet>) -> LaurentSeries {
        assert!(!coeffs.is_empty(), "empty expansion window");
        let mut s = LaurentSeries {
            space: Arc::clone(space),
            top_power,
            coeffs,
        };
        s.trim_exact_zeros();
        s
    }

    /// Zero series resolved down to `bottom` (exactly zero above it too).
    pub fn zero(space: &Arc<JetSpace>, bottom: i64) -> LaurentSeries {
        LaurentSeries {
            space: Arc::clone(space),
            top_power: bottom,
            coeffs: vec![Jet::zero(space)],
        }
    }

    /// Polynomial viewed as a Laurent series resolved down to `bottom`
    /// (all coefficients below the constant term are exactly zero).
    pub fn from_poly(p: &PolyZ, bottom: i64) -> LaurentSeries {
        let space = p.space();
        let deg = p.degree().unwrap_or(0) as i64;
        assert!(bottom <= 0);
        let len = (deg - bottom + 1) as usize;
        let mut coeffs = Vec::with_capacity(len);
        for k in (bottom..=deg).rev() {
            if k >= 0 {
                coeffs.push(p.coeff(k as usize));
            } else {
                coeffs.push(Jet::zero(space));
            }
        }
        LaurentSeries::new(space, deg, coeffs)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn top_power(&self) -> i64 {
        self.top_power
    }

    pub fn bottom_power(&self) -> i64 {
        self.top_power - (self.coeffs.len() as i64 - 1)
    }

    pub fn has_power(&self, p: i64) -> bool {
        p >= self.bottom_power()
    }

    /// Coefficient of z^p. Exactly zero above the window; querying below the
    /// resolved bottom is a logic error.
    pub fn coeff(&self, p: i64) -> Jet {
        if p > self.top_power {
            return Jet::zero(&self.space);
        }
        assert!(
            p >= self.bottom_power(),
            "coefficient of z^{p} below resolved depth (bottom {})",
            self.bottom_power()
        );
        self.coeffs[(self.top_power - p) as usize].clone()
    }

    fn trim_exact_zeros(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs[0].max_abs() == 0.0 {
            self.coeffs.remove(0);
            self.top_power -= 1;
        }
    }

    /// Forget coefficients above `max_power` (caller asserts they are
    /// negligible or structurally known to vanish).
    pub fn truncate_top(&self, max_power: i64) -> LaurentSeries {
        if max_power >= self.top_power {
            return self.clone();
        }
        let skip = (self.top_power - max_power) as usize;
        assert!(skip < self.coeffs.len(), "window emptied by truncation");
        LaurentSeries::new(&self.space, max_power, self.coeffs[skip..].to_vec())
    }

    /// Forget coefficients below `min_power` (shrinks the resolved window).
    pub fn truncate_bottom(&self, min_power: i64) -> LaurentSeries {
        if min_power <= self.bottom_power() {
            return self.clone();
        }
        assert!(min_power <= self.top_power, "window emptied by truncation");
        let keep = (self.top_power - min_power + 1) as usize;
        LaurentSeries::new(&self.space, self.top_power, self.coeffs[..keep].to_vec())
    }

    pub fn scale(&self, s: &Jet) -> LaurentSeries {
        LaurentSeries {
            space: Arc::clone(&self.space),
            top_power: self.top_power,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> LaurentSeries {
        LaurentSeries {
            space: Arc::clone(&self.space),
            top_power: self.top_power,
            coeffs: self.coeffs.iter().map(|c| c.scale_re(s)).collect(),
        }
    }

    pub fn neg(&self) -> LaurentSeries {
        self.scale_re(-1.0)
    }

    pub fn add(&self, other: &LaurentSeries) -> LaurentSeries {
        let top = self.top_power.max(other.top_power);
        let bottom = self.bottom_power().max(other.bottom_power());
        assert!(bottom <= top, "windows do not overlap");
        let len = (top - bottom + 1) as usize;
        let mut coeffs = Vec::with_capacity(len);
        for p in (bottom..=top).rev() {
            coeffs.push(self.coeff(p) + other.coeff(p));
        }
        LaurentSeries::new(&self.space, top, coeffs)
    }

    pub fn sub(&self, other: &LaurentSeries) -> LaurentSeries {
        self.add(&other.neg())
    }

    /// Cauchy product on the jointly resolved window.
    pub fn mul(&self, other: &LaurentSeries) -> LaurentSeries {
        let top = self.top_power + other.top_power;
        let bottom = (self.bottom_power() + other.top_power)
            .max(other.bottom_power() + self.top_power);
        assert!(bottom <= top, "windows do not overlap");
        let len = (top - bottom + 1) as usize;
        let mut coeffs = vec![Jet::zero(&self.space); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            let pa = self.top_power - i as i64;
            for (j, b) in other.coeffs.iter().enumerate() {
                let pb = other.top_power - j as i64;
                let p = pa + pb;
                if p < bottom {
                    continue;
                }
                let slot = (top - p) as usize;
                coeffs[slot] = &coeffs[slot] + &(a * b);
            }
        }
        LaurentSeries::new(&self.space, top, coeffs)
    }

    /// Reciprocal series. The top coefficient must have an invertible
    /// order-0 part; the result window has the same number of resolved
    /// coefficients, starting at minus the top power.
    pub fn inverse(&self) -> Result<LaurentSeries> {
        let lead = &self.coeffs[0];
        if lead.order0().norm() == 0.0 {
            return Err(Error::NonInvertibleJet);
        }
        let lead_inv = lead.invert()?;
        let n = self.coeffs.len();
        let mut d: Vec<Jet> = Vec::with_capacity(n);
        d.push(lead_inv.clone());
        for k in 1..n {
            let mut acc = Jet::zero(&self.space);
            for j in 1..=k {
                acc = &acc + &(&self.coeffs[j] * &d[k - j]);
            }
            d.push(-(&acc * &lead_inv));
        }
        Ok(LaurentSeries::new(&self.space, -self.top_power, d))
    }

    /// Polynomial part: coefficients of z^p for p >= 0.
    pub fn plus_part(&self) -> PolyZ {
        if self.top_power < 0 {
            return PolyZ::zero(&self.space);
        }
        let mut coeffs = Vec::with_capacity(self.top_power as usize + 1);
        for p in 0..=self.top_power {
            if p >= self.bottom_power() {
                coeffs.push(self.coeff(p));
            } else {
                coeffs.push(Jet::zero(&self.space));
            }
        }
        PolyZ::from_coeffs(&self.space, coeffs)
    }

    /// Strictly decaying part: the series restricted to powers <= -1.
    pub fn minus_part(&self) -> LaurentSeries {
        self.truncate_top(-1)
    }

    /// Coefficientwise order reduction.
    pub fn reduce_order(&self, new_order: usize) -> LaurentSeries {
        let target = JetSpace::get(self.space.num_vars(), new_order);
        LaurentSeries {
            space: target,
            top_power: self.top_power,
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.reduce_order(new_order))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(Jet::max_abs).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn space0() -> Arc<JetSpace> {
        JetSpace::get(1, 0)
    }

    fn re_series(top: i64, vals: &[f64]) -> LaurentSeries {
        let s = space0();
        LaurentSeries::new(
            &s,
            top,
            vals.iter().map(|&v| Jet::from_re(&s, v)).collect(),
        )
    }

    fn coeff_re(s: &LaurentSeries, p: i64) -> f64 {
        s.coeff(p).order0().re
    }

    #[test]
    fn product_windows_shrink_correctly() {
        // (z + 1 + 1/z) * (z - 1/z): resolved down to max(-1+1, -1+1) = 0.
        let a = re_series(1, &[1.0, 1.0, 1.0]);
        let b = re_series(1, &[1.0, 0.0, -1.0]);
        let p = a.mul(&b);
        assert_eq!(p.top_power(), 2);
        assert_eq!(p.bottom_power(), 0);
        assert!((coeff_re(&p, 2) - 1.0).abs() < 1e-15);
        assert!((coeff_re(&p, 1) - 1.0).abs() < 1e-15);
        assert!(coeff_re(&p, 0).abs() < 1e-15);
    }

    #[test]
    fn inverse_of_geometric() {
        // 1/(z - 1) = z^-1 + z^-2 + z^-3 + ... .
        let f = re_series(1, &[1.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        let inv = f.inverse().unwrap();
        assert_eq!(inv.top_power(), -1);
        for p in 1..=6 {
            assert!((coeff_re(&inv, -p) - 1.0).abs() < 1e-14, "power -{p}");
        }
        let prod = f.mul(&inv);
        assert!((coeff_re(&prod, 0) - 1.0).abs() < 1e-14);
        for p in 1..=3 {
            assert!(coeff_re(&prod, -p).abs() < 1e-14);
        }
    }

    #[test]
    fn plus_minus_split() {
        let f = re_series(2, &[3.0, 0.0, 1.0, 5.0, 7.0]);
        let plus = f.plus_part();
        assert_eq!(plus.degree(), Some(2));
        assert!((plus.coeff(0).order0().re - 1.0).abs() < 1e-15);
        assert!((plus.coeff(2).order0().re - 3.0).abs() < 1e-15);
        let minus = f.minus_part();
        assert_eq!(minus.top_power(), -1);
        assert!((coeff_re(&minus, -1) - 5.0).abs() < 1e-15);
        assert!((coeff_re(&minus, -2) - 7.0).abs() < 1e-15);
    }

    #[test]
    fn poly_embedding_is_exact_below() {
        let s = space0();
        let p = PolyZ::from_re_coeffs(&s, &[2.0, 0.0, 1.0]); // z^2 + 2
        let f = LaurentSeries::from_poly(&p, -4);
        assert_eq!(f.bottom_power(), -4);
        assert!((coeff_re(&f, 2) - 1.0).abs() < 1e-15);
        assert!(coeff_re(&f, -3).abs() < 1e-15);
        // Multiplying by a deep series keeps a deep window.
        let g = re_series(0, &[1.0, 0.5, 0.25, 0.125, 0.0625]);
        let fg = f.mul(&g);
        assert_eq!(fg.bottom_power(), -2);
    }

    #[test]
    fn jet_coefficients_flow_through_inverse() {
        // f = z - t around t = 0: 1/f = z^-1 + t z^-2 + t^2 z^-3 + ... .
        let s = JetSpace::get(1, 2);
        let t = Jet::variable(&s, 0, Complex64::new(0.0, 0.0)).unwrap();
        let f = LaurentSeries::new(
            &s,
            1,
            vec![Jet::from_re(&s, 1.0), -t, Jet::zero(&s), Jet::zero(&s)],
        );
        let inv = f.inverse().unwrap();
        assert!((inv.coeff(-1).order0() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((inv.coeff(-2).coeff(&[1]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((inv.coeff(-3).coeff(&[2]) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }
}
