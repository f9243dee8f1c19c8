//! Monte Carlo check of the moment duality between a branching-coalescing
//! chain and the resampling-selection diffusion.
//!
//! The chain `X` branches at rate `b·k`, dies at `d·k`, and coalesces at
//! `c·k(k-1)`; the diffusion `Y` solves
//!
//! ```text
//! dY = (b - d)·Y dt - b·Y² dt + sqrt(2c·Y(1-Y)) dB
//! ```
//!
//! on `[0, 1]`.  The duality states `E_n[(1-y)^{X_t}] = E_y[(1-Y_t)^n]`.
//! The chain side is simulated exactly (Gillespie); the diffusion side by
//! Euler–Maruyama, so the pass tolerance adds a measured dt-vs-dt/2 bias
//! allowance to the three-standard-error band.
//!
//! ```text
//! cargo run --release --example moment_duality_mc
//! ```

use ipsdual::diffusion::BracoParams;
use ipsdual::experiments::moment_duality_report;
use ipsdual::DEFAULT_SEED;

fn main() -> ipsdual::Result<()> {
    let p = BracoParams::new(1.0, 1.0, 0.5)?;
    let (n, y, t) = (3, 0.3, 1.0);
    let (reps, dt) = (40_000, 1e-3);

    let report = moment_duality_report(&p, n, y, t, reps, dt, DEFAULT_SEED)?;
    println!("chain side      E_n[(1-y)^X_t]  = {:.6} ± {:.6}", report.lhs_estimate, report.lhs_se);
    println!("diffusion side  E_y[(1-Y_t)^n]  = {:.6} ± {:.6}", report.rhs_estimate, report.rhs_se);
    println!("gap             {:.6e}", report.gap);
    println!("bias allowance  {:.6e} (dt vs dt/2)", report.bias_allowance);
    println!("tolerance       {:.6e} (3 combined SE + bias)", report.tolerance);
    println!("pass            {}", report.pass);
    assert!(report.pass);
    Ok(())
}
