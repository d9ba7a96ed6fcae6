//! Runs every acceptance criterion with default settings and prints one line each.

use height2::checks::{run_all, Config, Session, CRITERIA};
use std::process::ExitCode;

fn main() -> ExitCode {
    let session = Session::new(Config::default()).expect("default configuration is valid");
    let results = run_all(&session);
    assert_eq!(results.len(), CRITERIA.len());
    let mut failed = 0;
    for (k, r) in results.iter().enumerate() {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {verdict}: {}", k + 1, r.to_line());
        failed += !r.passed() as usize;
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
