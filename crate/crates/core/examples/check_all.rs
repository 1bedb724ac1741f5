//! Runs the acceptance criteria and prints one line each.

fn main() {
    let seed = std::env::args().nth(1).map(|s| s.parse().expect("seed")).unwrap_or(20261016);
    let mut failed = 0;
    for r in decay_bounds::checks::run_all(seed) {
        println!("{}", r.line());
        failed += usize::from(!r.passed);
    }
    println!("{failed} failing");
}
