//! Polygon-gluing census by genus.
//!
//! Glue the 2j sides of a polygon in pairs and classify the resulting
//! closed surface: one vertex, j edges and F faces give 2 - 2g = 1 - j + F,
//! with the faces read off as cycles of side-rotation composed with the
//! matching. The counts are exact integers and serve as the ground truth
//! for everything the rest of the crate claims at the Gaussian point.

use crate::error::{Error, Result};

/// Gluing counts by genus: entry (j, g) is the number of ways to pair the
/// sides of a 2j-gon so the glued surface has genus g.
#[derive(Clone, Debug)]
pub struct GenusMomentTable {
    rows: Vec<Vec<u64>>,
}

impl GenusMomentTable {
    pub fn j_max(&self) -> usize {
        self.rows.len()
    }

    /// Count for half-degree j and genus g; zero outside the table.
    pub fn count(&self, j: usize, g: usize) -> u64 {
        if j == 0 || j > self.rows.len() {
            return 0;
        }
        self.rows[j - 1].get(g).copied().unwrap_or(0)
    }

    /// Total gluings of a 2j-gon, all genera.
    pub fn total(&self, j: usize) -> u64 {
        if j == 0 || j > self.rows.len() {
            return 0;
        }
        self.rows[j - 1].iter().sum()
    }

    /// Finite-size moment sum_g count(j, g) n^{-2g}: the exact expectation
    /// of the normalized trace of the 2j-th power at the Gaussian point.
    pub fn gaussian_moment(&self, j: usize, n: f64) -> f64 {
        if j == 0 || j > self.rows.len() {
            return 0.0;
        }
        let mut acc = 0.0;
        for (g, &c) in self.rows[j - 1].iter().enumerate() {
            acc += c as f64 * n.powi(-2 * g as i32);
        }
        acc
    }
}

/// Exhaustive census of all (2j-1)!! matchings for every j up to j_max.
pub fn pairing_genus_counts(j_max: usize) -> Result<GenusMomentTable> {
    if j_max == 0 || j_max > 8 {
        return Err(Error::InvalidConfig(format!(
            "census limit is 1..=8 half-edges, requested {j_max}"
        )));
    }
    let mut rows = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let mut row = vec![0u64; j / 2 + 1];
        let mut partner = vec![usize::MAX; 2 * j];
        glue_remaining(&mut partner, j, &mut row);
        rows.push(row);
    }
    Ok(GenusMomentTable { rows })
}

fn glue_remaining(partner: &mut [usize], j: usize, row: &mut [u64]) {
    let n = 2 * j;
    let Some(i) = partner.iter().position(|&p| p == usize::MAX) else {
        row[genus_of(partner, j)] += 1;
        return;
    };
    for k in (i + 1)..n {
        if partner[k] != usize::MAX {
            continue;
        }
        partner[i] = k;
        partner[k] = i;
        glue_remaining(partner, j, row);
        partner[i] = usize::MAX;
        partner[k] = usize::MAX;
    }
}

fn genus_of(partner: &[usize], j: usize) -> usize {
    let n = 2 * j;
    let mut seen = vec![false; n];
    let mut faces = 0usize;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        faces += 1;
        let mut cur = start;
        while !seen[cur] {
            seen[cur] = true;
            cur = (partner[cur] + 1) % n;
        }
    }
    (1 + j - faces) / 2
}

/// (2j-1)!!, the number of perfect matchings of 2j points.
pub fn double_factorial_odd(j: usize) -> u64 {
    (1..=j as u64).map(|k| 2 * k - 1).product()
}

/// Catalan number C_j.
pub fn catalan(j: usize) -> u64 {
    let mut binom: u128 = 1;
    for k in 0..j as u128 {
        binom = binom * (2 * j as u128 - k) / (k + 1);
    }
    (binom / (j as u128 + 1)) as u64
}
