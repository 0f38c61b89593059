//! Cauchy-kernel quadrature check of the solved level equations.
//!
//! For z outside a contour surrounding the cut,
//! (1/2 pi i) closed-integral of M(x) P_g(x) / (z - x) picks out exactly the
//! decaying part of M P_g, which the level equation says is U_g(z). The
//! quadrature side knows nothing about Laurent coefficients or the linear
//! solve, so agreement validates the corrections as analytic functions.

use num_complex::Complex64;

use crate::algebra::{AlgebraicFn, PolyZ};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::hierarchy::LoopHierarchy;
use crate::oracles::quadrature::ellipse_contour;

/// Ellipse around the cut: horizontal semi-axis reaches delta beyond the
/// endpoints, vertical semi-axis is delta itself.
#[derive(Clone, Copy, Debug)]
pub struct ContourSpec {
    pub center: f64,
    pub ax: f64,
    pub ay: f64,
    pub nodes: usize,
}

impl ContourSpec {
    /// The standoff delta also sets the closest approach to the origin,
    /// where the truncated coupling tail of deeper sources piles up poles.
    /// Keep delta at 1.0 or more past the first level, or the quadrature
    /// needs thousands of nodes to resolve the near-origin peak.
    pub fn around(eq: &Equilibrium, delta: f64, nodes: usize) -> ContourSpec {
        ContourSpec {
            center: eq.center().order0().re,
            ax: eq.radius().order0().re + delta,
            ay: delta,
            nodes,
        }
    }

    /// True when z lies on or inside the ellipse.
    pub fn contains(&self, z: Complex64) -> bool {
        let dx = (z.re - self.center) / self.ax;
        let dy = z.im / self.ay;
        dx * dx + dy * dy <= 1.0
    }
}

/// Largest relative residual of the contour form of the level equation at
/// the sample points. A level with an empty source has nothing to check.
pub fn contour_residual(
    hi: &LoopHierarchy,
    g: usize,
    spec: &ContourSpec,
    z_samples: &[Complex64],
) -> Result<f64> {
    if g >= hi.levels().len() {
        return Err(Error::InvalidConfig(format!(
            "hierarchy holds {} levels, requested genus {g}",
            hi.levels().len()
        )));
    }
    let level = hi.level(g);
    if level.u.is_empty() {
        return Ok(0.0);
    }
    for &z in z_samples {
        if spec.contains(z) {
            return Err(Error::InvalidConfig(format!(
                "sample point {z} lies inside the contour"
            )));
        }
    }

    // Order-0 reduction: the check is pointwise in the complex plane.
    let eq = hi.equilibrium();
    let branch = eq.branch().reduce_order(0);
    let space = branch.space().clone();
    let m_fn = AlgebraicFn::new(
        branch,
        PolyZ::zero(&space),
        eq.h().reduce_order(0),
        PolyZ::constant_re(&space, 1.0),
    )?;
    let p = level.p.reduce_order(0);
    let u = level.u.reduce_order(0);

    let nodes = ellipse_contour(spec.center, spec.ax, spec.ay, spec.nodes);
    let n = nodes.len() as f64;
    let mut values = Vec::with_capacity(nodes.len());
    for &(x, dx) in &nodes {
        let xj = crate::jet::Jet::constant(&space, x);
        let f = &m_fn.alg_eval_jet(&xj)? * &p.alg_eval_jet(&xj)?;
        values.push((f.order0(), x, dx));
    }

    let mut worst = 0.0f64;
    for &z in z_samples {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(f, x, dx) in &values {
            acc += f * dx / (z - x);
        }
        let integral = acc / Complex64::new(0.0, n);
        let expect = u.alg_eval(z)?.order0();
        let rel = (integral - expect).norm() / f64::max(expect.norm(), 1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve;
    use crate::hierarchy::{run, HierarchySettings};
    use crate::model::{build_field, AdmissibilityParams};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hierarchy(t4: f64, order: usize, g_max: usize) -> LoopHierarchy {
        let f = build_field(
            &[0.0, 0.0, 0.0, t4],
            8,
            order,
            &AdmissibilityParams::default(),
        )
        .unwrap();
        let eq = solve(&f).unwrap();
        run(&eq, &HierarchySettings { g_max, depth: 12 }).unwrap()
    }

    #[test]
    fn first_level_matches_quadrature_at_both_bases() {
        for t4 in [0.0, 0.05] {
            let hi = hierarchy(t4, 1, 1);
            let spec = ContourSpec::around(hi.equilibrium(), 1.0, 256);
            let res = contour_residual(
                &hi,
                1,
                &spec,
                &[c(3.5, 0.0), c(0.0, 4.0), c(-5.0, 0.0)],
            )
            .unwrap();
            assert!(res < 1e-8, "t4 = {t4}: residual {res:.3e}");
        }
    }

    #[test]
    fn second_level_matches_quadrature() {
        let hi = hierarchy(0.05, 2, 2);
        let spec = ContourSpec::around(hi.equilibrium(), 1.0, 256);
        let res = contour_residual(&hi, 2, &spec, &[c(3.5, 0.0), c(0.0, 4.0)]).unwrap();
        assert!(res < 1e-8, "residual {res:.3e}");
    }

    #[test]
    fn residual_decays_spectrally_in_node_count() {
        let hi = hierarchy(0.05, 1, 1);
        let coarse = ContourSpec::around(hi.equilibrium(), 0.5, 128);
        let fine = ContourSpec::around(hi.equilibrium(), 0.5, 256);
        let samples = [c(3.0, 0.0)];
        let r128 = contour_residual(&hi, 1, &coarse, &samples).unwrap();
        let r256 = contour_residual(&hi, 1, &fine, &samples).unwrap();
        // Trapezoid error on an analytic integrand drops exponentially:
        // doubling the rule takes ~4e-3 down to the solver floor.
        assert!(r256 < 1e-8, "{r256:.3e}");
        assert!(r256 < r128 / 1e4, "{r128:.3e} -> {r256:.3e}");
    }

    #[test]
    fn vacuous_level_reports_zero() {
        let hi = hierarchy(0.0, 1, 1);
        let spec = ContourSpec::around(hi.equilibrium(), 0.5, 64);
        let res = contour_residual(&hi, 0, &spec, &[c(3.0, 0.0)]).unwrap();
        assert_eq!(res, 0.0);
    }

    #[test]
    fn inside_sample_is_rejected() {
        let hi = hierarchy(0.0, 1, 1);
        let spec = ContourSpec::around(hi.equilibrium(), 0.5, 64);
        let err = contour_residual(&hi, 1, &spec, &[c(1.0, 0.0)]);
        assert!(err.is_err());
    }
}
