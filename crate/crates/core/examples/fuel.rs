//! Solve the built-in minimum-effort crossing and print its cost.
//!
//! This is the README's library example; it takes about a minute because
//! the default configuration runs single-threaded to a tight tolerance.

use delrelax::{builtin, evaluate_cost, solve, SweepConfig};

fn main() -> Result<(), delrelax::Error> {
    let problem = builtin("fuel")?;
    let guess = problem.default_guess()?;
    let outcome = solve(&problem, &guess, &SweepConfig::default())?;
    assert!(outcome.report.converged);
    println!("cost {}", evaluate_cost(&problem, &outcome.trajectory)?);
    Ok(())
}
