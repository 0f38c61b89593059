//! Quadrature rules backing the independent numerical checks.

use num_complex::Complex64;

/// Gauss-Legendre nodes and weights on [-1, 1]. Newton iteration on the
/// Legendre recurrence; accurate to machine precision for n up to a few
/// hundred.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' by upward recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre grid: `segments` equal pieces of [a, b] with
/// `per_segment` nodes each.
pub fn composite_gauss_legendre(
    a: f64,
    b: f64,
    segments: usize,
    per_segment: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(per_segment);
    let h = (b - a) / segments as f64;
    let mut nodes = Vec::with_capacity(segments * per_segment);
    let mut weights = Vec::with_capacity(segments * per_segment);
    for s in 0..segments {
        let lo = a + s as f64 * h;
        let mid = lo + 0.5 * h;
        for (&x, &w) in xs.iter().zip(&ws) {
            nodes.push(mid + 0.5 * h * x);
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// Midpoint rule for integrals over theta in [0, pi]. Exact for cosine
/// polynomials of harmonic degree below 2n.
pub fn integrate_theta<F: FnMut(f64) -> f64>(n: usize, mut f: F) -> f64 {
    let h = std::f64::consts::PI / n as f64;
    (0..n).map(|j| f((j as f64 + 0.5) * h)).sum::<f64>() * h
}

/// Equispaced nodes and tangent weights for a closed ellipse contour with
/// center `c`, horizontal semi-axis `ax`, vertical semi-axis `ay`. Returns
/// (x_j, dx_j) so that a contour integral is approximated by
/// (2 pi / n) * sum f(x_j) dx_j; spectrally accurate for smooth integrands.
pub fn ellipse_contour(c: f64, ax: f64, ay: f64, n: usize) -> Vec<(Complex64, Complex64)> {
    let step = 2.0 * std::f64::consts::PI / n as f64;
    (0..n)
        .map(|j| {
            let s = j as f64 * step;
            let x = Complex64::new(c + ax * s.cos(), ay * s.sin());
            let dx = Complex64::new(-ax * s.sin(), ay * s.cos());
            (x, dx)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        // n points integrate degree 2n-1 exactly: check x^6 with n = 4.
        let (xs, ws) = gauss_legendre(4);
        let got: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(6)).sum();
        assert!((got - 2.0 / 7.0).abs() < 1e-14);
        let sum: f64 = ws.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn composite_grid_integrates_gaussian() {
        let (xs, ws) = composite_gauss_legendre(-8.0, 8.0, 40, 20);
        let got: f64 = xs
            .iter()
            .zip(&ws)
            .map(|(x, w)| w * (-0.5 * x * x).exp())
            .sum();
        let want = (2.0 * std::f64::consts::PI).sqrt();
        assert!((got - want).abs() < 1e-13);
    }

    #[test]
    fn theta_rule_kills_harmonics() {
        for k in 1..10 {
            let v = integrate_theta(16, |th| (k as f64 * th).cos());
            assert!(v.abs() < 1e-13, "harmonic {k}");
        }
        let v = integrate_theta(16, |th| (2.0 * th).cos().powi(2));
        assert!((v - std::f64::consts::PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn contour_rule_recovers_residue() {
        // (1/2 pi i) closed integral of 1/(x - 1) around an ellipse
        // containing 1 equals the residue.
        let nodes = ellipse_contour(0.0, 2.5, 0.5, 256);
        let n = nodes.len() as f64;
        let sum: Complex64 = nodes
            .iter()
            .map(|&(x, dx)| dx / (x - Complex64::new(1.0, 0.0)))
            .sum();
        // (1/(2 pi i)) * (2 pi / n) * sum f dx = sum f dx / (i n).
        let got = sum / Complex64::new(0.0, n);
        assert!((got - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }
}
