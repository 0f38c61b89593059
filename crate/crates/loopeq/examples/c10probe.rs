use loopeq::model::{build_field, AdmissibilityParams};
use loopeq::oracles::orthopoly::density_moment;

// General least squares y = sum c_k u^k via normal equations, tiny sizes.
fn lsq(us: &[f64], ys: &[f64], terms: usize) -> Vec<f64> {
    let mut a = vec![vec![0.0f64; terms]; terms];
    let mut b = vec![0.0f64; terms];
    for (&u, &y) in us.iter().zip(ys) {
        let pow: Vec<f64> = (0..terms).map(|k| u.powi(k as i32)).collect();
        for r in 0..terms {
            b[r] += pow[r] * y;
            for c in 0..terms {
                a[r][c] += pow[r] * pow[c];
            }
        }
    }
    // Gauss elimination with partial pivot
    for col in 0..terms {
        let piv = (col..terms).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv); b.swap(col, piv);
        for r in 0..terms {
            if r == col { continue; }
            let f = a[r][col] / a[col][col];
            for c in 0..terms { a[r][c] -= f * a[col][c]; }
            b[r] -= f * b[col];
        }
    }
    (0..terms).map(|k| b[k] / a[k][k]).collect()
}

fn main() {
    let t4 = 0.05;
    let f = build_field(&[0.0, 0.0, 0.0, t4], 4, 0, &AdmissibilityParams::default()).unwrap();
    let j = 6usize;
    for sizes in [vec![20usize, 28, 36, 44, 52, 60], (20..=60).collect::<Vec<_>>()] {
        let n_min = sizes[0] as f64;
        let us: Vec<f64> = sizes.iter().map(|&n| n_min / n as f64).collect();
        let ys: Vec<f64> = sizes.iter().map(|&n| density_moment(&f, n, j).unwrap()).collect();
        for terms in [4usize, 5, 6] {
            let c = lsq(&us, &ys, terms);
            let a: Vec<f64> = c.iter().enumerate().map(|(k, &ck)| ck * n_min.powi(k as i32)).collect();
            println!("sizes={} terms={terms}: a = {:?}", sizes.len(), a.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>());
        }
    }
}
