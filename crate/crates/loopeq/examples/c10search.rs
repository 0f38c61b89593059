use loopeq::equilibrium::solve;
use loopeq::hierarchy::{run, HierarchySettings};
use loopeq::model::{build_field, AdmissibilityParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Cubic LSQ leak coefficients: fit y = u^p on grid, return fitted u^3 coeff.
fn leak(us: &[f64], p: i32) -> f64 {
    let terms = 4usize;
    let mut a = vec![vec![0.0f64; terms]; terms];
    let mut b = vec![0.0f64; terms];
    for &u in us {
        let pw: Vec<f64> = (0..terms).map(|k| u.powi(k as i32)).collect();
        let y = u.powi(p);
        for r in 0..terms {
            b[r] += pw[r] * y;
            for c in 0..terms { a[r][c] += pw[r] * pw[c]; }
        }
    }
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
    b[3] / a[3][3]
}

fn score(sizes: &[usize]) -> (f64, f64, f64) {
    let n_min = sizes[0] as f64;
    let us: Vec<f64> = sizes.iter().map(|&n| n_min / n as f64).collect();
    let l4 = leak(&us, 4);
    let l6 = leak(&us, 6);
    (l4.abs().max(l6.abs() / 20.0), l4, l6)
}

fn main() {
    // cross-check: genus-2 moment coefficient from the hierarchy
    let f = build_field(&[0.0, 0.0, 0.0, 0.05], 8, 2, &AdmissibilityParams::default()).unwrap();
    let eq = solve(&f).unwrap();
    let hi = run(&eq, &HierarchySettings { g_max: 2, depth: 12 }).unwrap();
    for j in [2i64, 4, 6] {
        println!("P2 coeff z^-{}: {:.6e}", j + 1, hi.level(2).laurent.coeff(-j - 1).order0().re);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut best: (f64, f64, f64, Vec<usize>) = (f64::INFINITY, 0.0, 0.0, vec![]);
    for _ in 0..400000 {
        let k = rng.gen_range(6..=9usize);
        let mut s = std::collections::BTreeSet::new();
        s.insert(20usize);
        while s.len() < k { s.insert(rng.gen_range(20..=60usize)); }
        let sizes: Vec<usize> = s.into_iter().collect();
        let (sc, l4, l6) = score(&sizes);
        if sc < best.0 { best = (sc, l4, l6, sizes); }
    }
    // local refinement: try single-element swaps
    let mut cur = best.3.clone();
    loop {
        let mut improved = false;
        for i in 0..cur.len() {
            for cand in 20..=60usize {
                if cur.contains(&cand) { continue; }
                let mut t = cur.clone(); t[i] = cand; t.sort(); t.dedup();
                if t.len() < 5 || t[0] != 20 { continue; }
                let (sc, l4, l6) = score(&t);
                if sc < best.0 { best = (sc, l4, l6, t.clone()); cur = t; improved = true; }
            }
        }
        if !improved { break; }
    }
    println!("best sizes {:?}: score {:.3e}, leak4 {:+.3e}, leak6 {:+.3e}", best.3, best.0, best.1, best.2);
}
