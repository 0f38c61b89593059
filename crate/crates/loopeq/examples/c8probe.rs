use loopeq::equilibrium::solve;
use loopeq::hierarchy::{run, HierarchySettings};
use loopeq::model::{build_field, AdmissibilityParams};
use loopeq::oracles::contour::{contour_residual, ContourSpec};
use num_complex::Complex64;

fn main() {
    for t4 in [0.0f64, 0.05] {
        let f = build_field(&[0.0, 0.0, 0.0, t4], 8, 2, &AdmissibilityParams::default()).unwrap();
        let eq = solve(&f).unwrap();
        let hi = run(&eq, &HierarchySettings { g_max: 2, depth: 12 }).unwrap();
        for nodes in [256usize, 512, 1024] {
            let spec = ContourSpec::around(hi.equilibrium(), 1.0, nodes);
            for z in [Complex64::new(3.5,0.0), Complex64::new(-3.6,0.0), Complex64::new(0.0,4.0), Complex64::new(1.0,3.0), Complex64::new(0.0,-2.5)] {
                let mut worst = 0.0f64;
                for g in 1..=2 { worst = worst.max(contour_residual(&hi, g, &spec, &[z]).unwrap()); }
                println!("t4={t4} nodes={nodes} z={z}: {worst:.2e}");
            }
        }
    }
}
