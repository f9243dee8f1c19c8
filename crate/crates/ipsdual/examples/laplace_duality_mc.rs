//! Laplace duality of the logistic Feller diffusion, checked two ways.
//!
//! The diffusion `dX = (αX - γX²) dt + sqrt(2βX) dB` satisfies
//!
//! ```text
//! E^x[exp(-r X_t y)] = E^y[exp(-r x Y_t)]
//! ```
//!
//! where `Y` is again logistic Feller with parameters `(α, rβ, γ/r)`.
//!
//! First check: with `α = γ = 0` the dual is a deterministic decay,
//! `y_t = y/(1 + βty)`, so the left side must land on the closed form
//! `exp(-x·y_t)` — at `β = x = y = t = 1` that is `e^{-1/2} ≈ 0.606531`.
//! Second check: the general self-dual pair at `α = γ = β = 1`.
//!
//! ```text
//! cargo run --release --example laplace_duality_mc
//! ```

use ipsdual::diffusion::{feller_laplace_closed_form, FellerParams};
use ipsdual::experiments::laplace_duality_report;
use ipsdual::DEFAULT_SEED;

fn main() -> ipsdual::Result<()> {
    let (reps, dt) = (40_000, 1e-3);

    // --- Closed-form anchor: pure branching diffusion. ---
    let pure = FellerParams::new(0.0, 0.0, 1.0)?;
    let report = laplace_duality_report(&pure, 1.0, 1.0, 1.0, 1.0, reps, dt, DEFAULT_SEED)?;
    println!("pure branching (alpha = gamma = 0), beta = x = y = t = 1:");
    println!("  Monte Carlo   E[e^(-X_t)] = {:.6} ± {:.6}", report.lhs_estimate, report.lhs_se);
    println!("  closed form   e^(-1/2)    = {:.6}", feller_laplace_closed_form(1.0, 1.0, 1.0, 1.0));
    println!("  gap {:.4e}, tolerance {:.4e}, pass {}", report.gap, report.tolerance, report.pass);
    assert!(report.pass);

    // --- General case: both sides Monte Carlo. ---
    let p = FellerParams::new(1.0, 1.0, 1.0)?;
    let (r, x, y, t) = (1.0, 2.0, 0.5, 1.0);
    let report = laplace_duality_report(&p, r, x, y, t, reps, dt, DEFAULT_SEED)?;
    println!("\nlogistic Feller (1, 1, 1), r = 1, x = 2, y = 0.5, t = 1 (self-dual parameters):");
    println!("  lhs {:.6} ± {:.6}", report.lhs_estimate, report.lhs_se);
    println!("  rhs {:.6} ± {:.6}", report.rhs_estimate, report.rhs_se);
    println!("  gap {:.4e}, tolerance {:.4e}, pass {}", report.gap, report.tolerance, report.pass);
    assert!(report.pass);
    Ok(())
}
