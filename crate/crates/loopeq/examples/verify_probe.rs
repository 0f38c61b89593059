use loopeq::verify::run_criterion;

fn main() {
    let ids: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("criterion id"))
        .collect();
    for id in ids {
        let r = run_criterion(id);
        println!(
            "criterion {:2} [{}] {}: {} ({:.2}s)",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail,
            r.seconds
        );
    }
}
