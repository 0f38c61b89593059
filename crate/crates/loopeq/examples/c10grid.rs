use loopeq::equilibrium::solve;
use loopeq::model::{build_field, AdmissibilityParams, ExternalField};
use loopeq::oracles::quadrature::composite_gauss_legendre;

// density_moment with adjustable grid resolution, to test convergence
fn moment_at(field: &ExternalField, n: usize, j: i32, segs: usize, per: usize) -> f64 {
    let eq = solve(field).unwrap();
    let lo = eq.alpha().order0().re - 4.0;
    let hi = eq.beta().order0().re + 4.0;
    let (xs, wq) = composite_gauss_legendre(lo, hi, segs, per);
    let w: Vec<f64> = xs.iter().zip(&wq)
        .map(|(&x, &q)| q * (-(n as f64) * field.potential_value(x)).exp())
        .collect();
    let gamma0: f64 = w.iter().sum();
    let mut diag = Vec::new();
    let mut offdiag = vec![0.0f64];
    let mut p_prev = vec![0.0f64; xs.len()];
    let mut p_cur = vec![1.0 / gamma0.sqrt(); xs.len()];
    for l in 0..n {
        let mut al = 0.0;
        for i in 0..xs.len() { al += w[i] * xs[i] * p_cur[i] * p_cur[i]; }
        diag.push(al);
        if l + 1 == n { break; }
        let bl = offdiag[l];
        let mut norm_sq = 0.0;
        let mut q = vec![0.0f64; xs.len()];
        for i in 0..xs.len() {
            let v = (xs[i] - al) * p_cur[i] - bl * p_prev[i];
            q[i] = v;
            norm_sq += w[i] * v * v;
        }
        let bnext = norm_sq.sqrt();
        for v in &mut q { *v /= bnext; }
        offdiag.push(bnext);
        p_prev = std::mem::take(&mut p_cur);
        p_cur = q;
    }
    // kernel density integral of x^j: sum over levels of orthonormal p_l^2
    // done directly on the grid values we already have
    let mut acc = 0.0;
    // rebuild all levels on the fly: redo recurrence storing sum of squares
    let mut pp = vec![0.0f64; xs.len()];
    let mut pc = vec![1.0 / gamma0.sqrt(); xs.len()];
    let mut sum_sq: Vec<f64> = pc.iter().map(|v| v * v).collect();
    for l in 0..n - 1 {
        let mut q = vec![0.0f64; xs.len()];
        for i in 0..xs.len() {
            q[i] = ((xs[i] - diag[l]) * pc[i] - offdiag[l] * pp[i]) / offdiag[l + 1];
            sum_sq[i] += q[i] * q[i];
        }
        pp = std::mem::take(&mut pc);
        pc = q;
    }
    for i in 0..xs.len() {
        acc += w[i] / (n as f64) * xs[i].powi(j) * sum_sq[i];
    }
    acc
}

fn main() {
    let f = build_field(&[0.0, 0.0, 0.0, 0.05], 4, 0, &AdmissibilityParams::default()).unwrap();
    for n in [20usize, 40, 60] {
        let coarse = moment_at(&f, n, 6, 50, 80);
        let fine = moment_at(&f, n, 6, 100, 160);
        println!("n={n}: m6 coarse {coarse:.12e} fine {fine:.12e} diff {:.2e}", (fine - coarse).abs());
    }
}
