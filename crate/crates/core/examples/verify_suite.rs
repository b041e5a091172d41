//! Runs the symbol suite and prints one line per check.

use steklov::config::Config;
use steklov::verify::run_suite;

fn main() -> steklov::Result<()> {
    let report = run_suite("symbols", &Config::default())?;
    for c in &report.checks {
        println!("{} {:<40} {:.3e}", if c.pass { "ok  " } else { "FAIL" }, c.id, c.measured);
    }
    println!("pass = {}", report.pass);
    Ok(())
}
