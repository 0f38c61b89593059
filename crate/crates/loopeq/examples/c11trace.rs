use loopeq::equilibrium::solve;
use loopeq::model::{build_field, AdmissibilityParams};
use loopeq::hierarchy::{run, HierarchySettings};

fn main() {
    for order in [2usize, 3, 4, 5] {
        eprintln!("=== ORDER {order} ===");
        let f = build_field(&[0.0, 0.0, 0.0, 0.0], 8, order, &AdmissibilityParams::default()).unwrap();
        match solve(&f) {
            Err(e) => println!("order {order}: solve failed: {e}"),
            Ok(eq) => match run(&eq, &HierarchySettings { g_max: 1, depth: 12 }) {
                Err(e) => println!("order {order}: hierarchy failed: {e}"),
                Ok(hi) => match hi.free_energy_tables() {
                    Err(e) => println!("order {order}: tables failed: {e}"),
                    Ok(t) => println!("order {order}: ok, table max degree {}", t[0].entries.iter().map(|e| e.0.iter().map(|&x| x as usize).sum::<usize>()).max().unwrap_or(0)),
                },
            },
        }
    }
}
