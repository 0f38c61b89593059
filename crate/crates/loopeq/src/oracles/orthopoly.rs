//! Finite-size ensembles through orthogonal polynomials.
//!
//! The weight e^{-n V} determines a three-term recurrence; the recurrence
//! determines the kernel density, the squared-norm product behind the
//! partition function, and every moment. All of it is plain quadrature
//! plus linear recurrences. The support estimate from the equilibrium
//! solver is used only to place the quadrature window; any window wide
//! enough gives the same numbers.

use crate::equilibrium::solve;
use crate::error::{Error, Result};
use crate::model::ExternalField;
use crate::oracles::quadrature::composite_gauss_legendre;

const WINDOW_PAD: f64 = 4.0;
const GRID_SEGMENTS: usize = 50;
const GRID_PER_SEGMENT: usize = 80;
const MAX_KERNEL_SIZE: usize = 200;
const MAX_PARTITION_SIZE: usize = 12;

/// Recurrence data of the polynomials orthonormal under e^{-n V}.
/// diag[l] and offdiag[l] drive offdiag[l+1] p_{l+1} =
/// (x - diag[l]) p_l - offdiag[l] p_{l-1}; offdiag[0] is zero by
/// convention and gamma0 is the total weight mass.
#[derive(Clone, Debug)]
pub struct OrthoBasis {
    n: usize,
    diag: Vec<f64>,
    offdiag: Vec<f64>,
    gamma0: f64,
}

impl OrthoBasis {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    /// Values of the first `count` orthonormal polynomials at x.
    pub fn eval_orthonormal(&self, x: f64, count: usize) -> Vec<f64> {
        assert!(count <= self.diag.len(), "basis holds {} degrees", self.diag.len());
        let mut out = Vec::with_capacity(count);
        if count == 0 {
            return out;
        }
        out.push(1.0 / self.gamma0.sqrt());
        for l in 1..count {
            let prev2 = if l >= 2 { out[l - 2] } else { 0.0 };
            let v = ((x - self.diag[l - 1]) * out[l - 1] - self.offdiag[l - 1] * prev2)
                / self.offdiag[l];
            out.push(v);
        }
        out
    }

    /// Kernel density at x: the normalized Christoffel-Darboux diagonal,
    /// (1/n) e^{-n V(x)} sum of the first n squared polynomials.
    pub fn kernel_density(&self, field: &ExternalField, x: f64) -> f64 {
        let p = self.eval_orthonormal(x, self.n);
        let s: f64 = p.iter().map(|v| v * v).sum();
        s * (-(self.n as f64) * field.potential_value(x)).exp() / self.n as f64
    }

    /// Log of the product of the first n squared norms, the size-dependent
    /// factor of the partition function.
    pub fn log_gamma_product(&self) -> f64 {
        let mut acc = self.n as f64 * self.gamma0.ln();
        for k in 1..self.n {
            acc += 2.0 * (self.n - k) as f64 * self.offdiag[k].ln();
        }
        acc
    }
}

/// Quadrature window comfortably past the support.
fn weight_window(field: &ExternalField) -> Result<(f64, f64)> {
    let eq = solve(&field.reduce_order(0))?;
    Ok((
        eq.alpha().order0().re - WINDOW_PAD,
        eq.beta().order0().re + WINDOW_PAD,
    ))
}

/// Orthonormal recurrence for weight e^{-n V} by the discretized
/// Stieltjes procedure: inner products on a dense Gauss grid, one degree
/// at a time. `count` polynomials means degrees 0..count-1.
pub fn stieltjes_basis(field: &ExternalField, n: usize, count: usize) -> Result<OrthoBasis> {
    if n == 0 {
        return Err(Error::InvalidConfig("ensemble size must be positive".into()));
    }
    let (lo, hi) = weight_window(field)?;
    let (xs, wq) = composite_gauss_legendre(lo, hi, GRID_SEGMENTS, GRID_PER_SEGMENT);
    let w: Vec<f64> = xs
        .iter()
        .zip(&wq)
        .map(|(&x, &q)| q * (-(n as f64) * field.potential_value(x)).exp())
        .collect();
    let gamma0: f64 = w.iter().sum();
    if !(gamma0 > 0.0) || !gamma0.is_finite() {
        return Err(Error::StieltjesBreakdown(0));
    }

    let mut diag = Vec::with_capacity(count);
    let mut offdiag = vec![0.0f64; 1];
    let mut p_prev = vec![0.0f64; xs.len()];
    let mut p_cur = vec![1.0 / gamma0.sqrt(); xs.len()];
    for l in 0..count {
        let mut al = 0.0;
        for i in 0..xs.len() {
            al += w[i] * xs[i] * p_cur[i] * p_cur[i];
        }
        diag.push(al);
        if l + 1 == count {
            break;
        }
        let bl = offdiag[l];
        let mut norm_sq = 0.0;
        let mut q = vec![0.0f64; xs.len()];
        for i in 0..xs.len() {
            let v = (xs[i] - al) * p_cur[i] - bl * p_prev[i];
            q[i] = v;
            norm_sq += w[i] * v * v;
        }
        if !(norm_sq > 1e-24) || !norm_sq.is_finite() {
            return Err(Error::StieltjesBreakdown(l + 1));
        }
        let bnext = norm_sq.sqrt();
        for v in &mut q {
            *v /= bnext;
        }
        offdiag.push(bnext);
        p_prev = std::mem::take(&mut p_cur);
        p_cur = q;
    }
    Ok(OrthoBasis { n, diag, offdiag, gamma0 })
}

/// Closed-form recurrence at the Gaussian point: diagonal zero,
/// off-diagonal sqrt(l/n). An independent route to the same kernel.
pub fn hermite_basis(n: usize, count: usize) -> OrthoBasis {
    let nf = n as f64;
    let diag = vec![0.0; count];
    let mut offdiag = Vec::with_capacity(count);
    for l in 0..count {
        offdiag.push((l as f64 / nf).sqrt());
    }
    OrthoBasis {
        n,
        diag,
        offdiag,
        gamma0: (2.0 * std::f64::consts::PI / nf).sqrt(),
    }
}

/// Expected eigenvalue density of the size-n ensemble on a grid.
#[derive(Clone, Debug)]
pub struct FiniteNDensity {
    pub n: usize,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub basis: OrthoBasis,
}

impl FiniteNDensity {
    /// Trapezoid mass over the stored grid.
    pub fn mass(&self) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.grid.len() {
            acc += 0.5 * (self.values[i] + self.values[i - 1]) * (self.grid[i] - self.grid[i - 1]);
        }
        acc
    }
}

/// Density of eigenvalues at size n on the given grid. The Gaussian point
/// takes the closed-form recurrence; everything else runs the Stieltjes
/// procedure on the quadrature grid.
pub fn finite_n_one_point(
    field: &ExternalField,
    n: usize,
    grid: &[f64],
) -> Result<FiniteNDensity> {
    if n == 0 || n > MAX_KERNEL_SIZE {
        return Err(Error::InvalidConfig(format!(
            "kernel density supports sizes 1..={MAX_KERNEL_SIZE}, requested {n}"
        )));
    }
    let eq = solve(&field.reduce_order(0))?;
    let (alpha, beta) = (eq.alpha().order0().re, eq.beta().order0().re);
    for &x in grid {
        if x < alpha - 2.0 || x > beta + 2.0 {
            return Err(Error::InvalidConfig(format!(
                "grid point {x} outside [{:.3}, {:.3}]",
                alpha - 2.0,
                beta + 2.0
            )));
        }
    }
    let basis = if field.is_gaussian() {
        hermite_basis(n, n)
    } else {
        stieltjes_basis(field, n, n)?
    };
    let values = grid.iter().map(|&x| basis.kernel_density(field, x)).collect();
    Ok(FiniteNDensity { n, grid: grid.to_vec(), values, basis })
}

/// Log of the partition-function ratio to the Gaussian ensemble at the
/// same size. Both sides run the identical discretized procedure, so the
/// proportionality constant and its discretization error cancel.
pub fn finite_n_partition(field: &ExternalField, n: usize) -> Result<f64> {
    if n == 0 || n > MAX_PARTITION_SIZE {
        return Err(Error::InvalidConfig(format!(
            "partition ratio supports sizes 1..={MAX_PARTITION_SIZE}, requested {n}"
        )));
    }
    let gaussian = crate::model::build_field(
        &[0.0, 0.0],
        2,
        0,
        &crate::model::AdmissibilityParams::default(),
    )?;
    let num = stieltjes_basis(field, n, n)?;
    let den = stieltjes_basis(&gaussian, n, n)?;
    Ok(num.log_gamma_product() - den.log_gamma_product())
}

/// Expectation of the normalized trace of the j-th matrix power at size n:
/// the j-th moment of the kernel density, integrated on the weight grid.
pub fn density_moment(field: &ExternalField, n: usize, j: usize) -> Result<f64> {
    if n == 0 || n > MAX_KERNEL_SIZE {
        return Err(Error::InvalidConfig(format!(
            "moments support sizes 1..={MAX_KERNEL_SIZE}, requested {n}"
        )));
    }
    let basis = if field.is_gaussian() {
        hermite_basis(n, n)
    } else {
        stieltjes_basis(field, n, n)?
    };
    let (lo, hi) = weight_window(field)?;
    let (xs, wq) = composite_gauss_legendre(lo, hi, GRID_SEGMENTS, GRID_PER_SEGMENT);
    let mut acc = 0.0;
    for (&x, &q) in xs.iter().zip(&wq) {
        acc += q * x.powi(j as i32) * basis.kernel_density(field, x);
    }
    Ok(acc)
}

/// Least-squares fit of moments against 1 + 1/n + 1/n^2 + 1/n^3 across
/// the given sizes; returns the four fitted coefficients.
pub fn moment_extrapolation(
    field: &ExternalField,
    j: usize,
    n_list: &[usize],
) -> Result<[f64; 4]> {
    if n_list.len() < 4 {
        return Err(Error::InvalidConfig(format!(
            "need at least 4 sizes to fit 4 coefficients, got {}",
            n_list.len()
        )));
    }
    let n_min = *n_list.iter().min().unwrap() as f64;
    let mut ata = [[0.0f64; 4]; 4];
    let mut aty = [0.0f64; 4];
    for &n in n_list {
        let y = density_moment(field, n, j)?;
        // Powers of the scaled variable n_min/n keep the normal equations
        // well conditioned.
        let u = n_min / n as f64;
        let row = [1.0, u, u * u, u * u * u];
        for r in 0..4 {
            for c in 0..4 {
                ata[r][c] += row[r] * row[c];
            }
            aty[r] += row[r] * y;
        }
    }
    let c = solve4(&mut ata, &mut aty)?;
    Ok([
        c[0],
        c[1] * n_min,
        c[2] * n_min * n_min,
        c[3] * n_min * n_min * n_min,
    ])
}

fn solve4(a: &mut [[f64; 4]; 4], b: &mut [f64; 4]) -> Result<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .unwrap();
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::IllConditioned(
                "singular normal equations in the moment fit".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in 0..4 {
            if r == col {
                continue;
            }
            let f = a[r][col] / a[col][col];
            for c in col..4 {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = b[i] / a[i][i];
    }
    Ok(out)
}

/// Finite-size Gaussian density minus the limiting semicircle minus the
/// leading oscillatory correction, on a grid strictly inside the bulk.
/// The correction is (1/4 pi n)(1/(x-2) - 1/(x+2)) cos(2 pi n S(x)) with
/// S(x) the semicircle mass between x and the right edge; the 2 pi in the
/// phase makes the oscillation track the eigenvalue spacing 1/(n psi),
/// which is what the computed kernel does. What remains is one order
/// smaller in 1/n.
pub fn hermite_bulk_remainder(n: usize, grid: &[f64]) -> Result<Vec<f64>> {
    let pi = std::f64::consts::PI;
    for &x in grid {
        if x.abs() >= 1.95 {
            return Err(Error::InvalidConfig(format!(
                "bulk remainder needs |x| < 1.95, got {x}"
            )));
        }
    }
    let field = crate::model::build_field(
        &[0.0, 0.0],
        2,
        0,
        &crate::model::AdmissibilityParams::default(),
    )?;
    let basis = hermite_basis(n, n);
    let nf = n as f64;
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid {
        let psi = (4.0 - x * x).sqrt() / (2.0 * pi);
        let mass_to_edge = (pi - x / 2.0 * (4.0 - x * x).sqrt() - 2.0 * (x / 2.0).asin())
            / (2.0 * pi);
        let amp = (1.0 / (4.0 * pi * nf)) * (1.0 / (x - 2.0) - 1.0 / (x + 2.0));
        let osc = amp * (2.0 * pi * nf * mass_to_edge).cos();
        out.push(basis.kernel_density(&field, x) - psi - osc);
    }
    Ok(out)
}

/// Probability mass of the size-n density farther than delta outside the
/// support.
pub fn tail_mass(field: &ExternalField, n: usize, delta: f64) -> Result<f64> {
    if n == 0 || n > MAX_KERNEL_SIZE {
        return Err(Error::InvalidConfig(format!(
            "tail mass supports sizes 1..={MAX_KERNEL_SIZE}, requested {n}"
        )));
    }
    let eq = solve(&field.reduce_order(0))?;
    let (alpha, beta) = (eq.alpha().order0().re, eq.beta().order0().re);
    let (lo, hi) = (alpha - WINDOW_PAD, beta + WINDOW_PAD);
    let basis = if field.is_gaussian() {
        hermite_basis(n, n)
    } else {
        stieltjes_basis(field, n, n)?
    };
    let mut acc = 0.0;
    for (a, b) in [(lo, alpha - delta), (beta + delta, hi)] {
        let (xs, wq) = composite_gauss_legendre(a, b, 20, 40);
        for (&x, &q) in xs.iter().zip(&wq) {
            acc += q * basis.kernel_density(field, x);
        }
    }
    Ok(acc)
}
