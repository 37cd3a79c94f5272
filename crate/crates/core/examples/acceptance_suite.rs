//! Runs the numbered acceptance suite and prints its pass/fail matrix.

use pvlab::suite::{run_suite, SUITE_NAME};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    for r in run_suite(SUITE_NAME, workers)? {
        println!("{}", r.line());
    }
    Ok(())
}
