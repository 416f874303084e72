//! Brute-force depth sweep against the analytic mask.
//!
//!     cargo run --release --example oracle_check -- [cases]

use panoepi::epipolar::MaskParams;
use panoepi::geometry::GridSpec;
use panoepi::oracle::DepthSweep;
use panoepi::validate::oracle_suite;

fn main() -> panoepi::Result<()> {
    let cases = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let sweep = DepthSweep::default();
    for k in [250, 2000, 20000] {
        let params = MaskParams::new(GridSpec::new(64, 32)?).with_k(k);
        let (suite, report) = oracle_suite(cases, &params, &sweep, 0)?;
        println!("K={k}:");
        for line in &suite.lines {
            println!("  {line}");
        }
        for v in report.violations.iter().take(3) {
            println!("  {v}");
        }
    }
    Ok(())
}
