//! Three scaling limits of the standard interacting particle system, each
//! quantified by a distance that shrinks as the system grows.
//!
//! 1. **Sparse occupancy**: with the coalescent rate coupled as `γ = cN`,
//!    the occupied-site count converges to a branching-coalescing chain
//!    with birth `u+β`, death `e+β`, pairwise coalescence `c` (distance:
//!    total variation between exact laws).
//! 2. **Diffusive rescaling**: at `u = e + α/√N`, the rescaled count
//!    `|X_{t√N}|/√N` converges to a logistic Feller diffusion.  Holding
//!    `e` fixed shifts the limit parameters to `(α, γ+e, β+e)` — the
//!    birth/death pair mechanisms contribute at diffusion order (distance:
//!    Wasserstein-1 against a Monte Carlo reference).
//! 3. **Pure coalescence**: the rescaled mean of the pure-coalescent chain
//!    follows the decay curve `y_t = y/(1+βty)` (distance: sup-norm error
//!    of the exact mean path).
//!
//! ```text
//! cargo run --release --example scaling_limits
//! ```

use ipsdual::experiments::{braco_scaling_table, feller_scaling_table, pure_death_scaling};
use ipsdual::DEFAULT_SEED;

fn main() -> ipsdual::Result<()> {
    println!("occupied-site count vs branching-coalescing chain (TV distance):");
    let table = braco_scaling_table(&[25, 50, 100, 200], 2, 1.0, 0.5, 0.5, 1.0, 1.0)?;
    for row in &table.rows {
        println!("  N = {:4}  tv = {:.6e}", row.n_sites, row.distance);
    }
    assert!(table.rows.last().unwrap().distance < table.rows[0].distance);

    println!("\nrescaled count vs logistic Feller diffusion (Wasserstein-1):");
    let table = feller_scaling_table(
        &[100, 400, 1600],
        1.0,
        1.0,
        0.5,
        1.0,
        1.0,
        0.5,
        50_000,
        1e-3,
        DEFAULT_SEED,
    )?;
    for row in &table.rows {
        println!("  N = {:4}  w1 = {:.6e}", row.n_sites, row.distance);
    }
    assert!(table.rows.last().unwrap().distance < table.rows[0].distance);

    println!("\nrescaled pure-coalescent mean vs decay curve (sup error):");
    let table = pure_death_scaling(&[100, 400, 1600], 1.0, 1.0, &[0.25, 0.5, 0.75, 1.0])?;
    for row in &table.rows {
        println!("  N = {:4}  sup = {:.6e}", row.n_sites, row.distance);
    }
    assert!(table.monotone);
    Ok(())
}
