//! One line per numbered criterion; exits non-zero if any fails.

use hexaperiod::checks;

fn main() {
    let mut failed = Vec::new();
    for c in checks::acceptance() {
        let o = c.run();
        println!("{}", o.line());
        if !o.passed {
            failed.push(o.id);
        }
    }
    let total = checks::acceptance().len();
    println!("acceptance: {} of {total} criteria pass", total - failed.len());
    if !failed.is_empty() {
        println!("failing: {failed:?}");
        std::process::exit(1);
    }
}
