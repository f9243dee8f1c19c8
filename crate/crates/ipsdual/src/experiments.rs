//! Duality-verification experiments and scaling-limit convergence tables.
//!
//! Reports compare the two sides of a duality identity by Monte Carlo.  The
//! identities are exact equalities, but the estimates carry sampling noise
//! and — on the SDE sides — Euler discretization bias, so the pass
//! criterion is
//!
//! ```text
//! |lhs - rhs|  <=  3 * sqrt(lhs_se² + rhs_se²)  +  b_dt
//! ```
//!
//! where `b_dt` is measured, not assumed: every discretized side is rerun at
//! half the step and the observed shift is added to the allowance.
//!
//! Convergence tables evaluate a scaling limit at a list of system sizes and
//! report a distance per size: total variation for the fixed-`n`
//! branching-coalescing limit, Wasserstein-1 against a Monte Carlo reference
//! for the diffusion limit, and a sup-norm mean-path error for the
//! pure-death limit.  All replicate streams are keyed by
//! `(seed, replicate)`, so results are byte-identical across reruns and
//! thread counts.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::diffusion::{
    braco_generator, braco_truncation_cap, pure_death_solution, simulate_braco,
    simulate_logistic_feller, simulate_resem, BracoParams, FellerParams, SdeRun,
};
use crate::exact::{
    count_generator, evolve_distribution, Distribution, ScalingPlan, DEFAULT_EVOLVE_TOL,
};
use crate::graphical::RateSpec;
use crate::numeric::mean_and_se;
use crate::rng::replicate_rng;
use crate::{Error, Result};

/// Tail mass allowed when truncating the branching-coalescing reference law.
const BRACO_REFERENCE_TAIL: f64 = 1e-10;

/// Two-sided Monte Carlo comparison of a duality identity.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct DualityReport {
    pub lhs_estimate: f64,
    pub rhs_estimate: f64,
    /// Standard errors; zero for a side computed exactly.
    pub lhs_se: f64,
    pub rhs_se: f64,
    pub gap: f64,
    /// Measured discretization allowance: the dt vs dt/2 shift, summed over
    /// the discretized sides.
    pub bias_allowance: f64,
    /// The realized pass threshold `3·sqrt(lhs_se² + rhs_se²) + bias`.
    pub tolerance: f64,
    pub pass: bool,
    /// Full parameter set and seed, for reproducibility.
    pub metadata: BTreeMap<String, String>,
}

impl DualityReport {
    fn from_sides(
        (lhs_estimate, lhs_se): (f64, f64),
        (rhs_estimate, rhs_se): (f64, f64),
        bias_allowance: f64,
        metadata: BTreeMap<String, String>,
    ) -> Self {
        let gap = (lhs_estimate - rhs_estimate).abs();
        let tolerance = 3.0 * (lhs_se * lhs_se + rhs_se * rhs_se).sqrt() + bias_allowance;
        Self {
            lhs_estimate,
            rhs_estimate,
            lhs_se,
            rhs_se,
            gap,
            bias_allowance,
            tolerance,
            pass: gap <= tolerance,
            metadata,
        }
    }
}

/// One system size of a convergence table.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n_sites: usize,
    pub distance: f64,
    /// Time and space rescaling applied at this size.
    pub plan: ScalingPlan,
    /// Wall-clock seconds; excluded from serialized output so that reruns
    /// are byte-identical.
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Distances against a scaling limit across increasing system sizes.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Whether the distance is nonincreasing down the table.
    pub monotone: bool,
}

impl ConvergenceTable {
    fn new(rows: Vec<ConvergenceRow>) -> Self {
        let monotone = rows.windows(2).all(|w| w[1].distance <= w[0].distance);
        Self { rows, monotone }
    }
}

fn check_size_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::InvalidArgument("empty size list".into()));
    }
    if !n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument(format!(
            "size list {n_list:?} must be strictly increasing"
        )));
    }
    Ok(())
}

/// An Euler run over `[0, t]` at step `dt`, clamped to a single step when
/// `dt` exceeds the horizon.  Invalid `dt` still errors.
fn euler_run(dt: f64, t: f64) -> Result<SdeRun> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be positive and finite")));
    }
    SdeRun::new(if t > 0.0 { dt.min(t) } else { dt }, t)
}

/// Deterministic parallel Monte Carlo: replicate `r` draws from the stream
/// `(seed, offset + r)`, and the aggregation order is fixed.
fn parallel_samples<F>(reps: u64, seed: u64, offset: u64, sample: F) -> Vec<f64>
where
    F: Fn(&mut rand_chacha::ChaCha8Rng) -> f64 + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|r| sample(&mut replicate_rng(seed, offset + r)))
        .collect()
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// `(1-y)^count` with the `0^0 = 1` convention.
fn survival_weight(y: f64, count: u64) -> f64 {
    if y == 0.0 {
        return 1.0;
    }
    (1.0 - y).powi(count.min(i32::MAX as u64) as i32)
}

/// Monte Carlo check of the moment duality between the
/// branching-coalescing chain `X` and the resampling-selection diffusion
/// `Y`:  `E^n[(1-y)^{X_t}] = E^y[(1-Y_t)^n]`.
///
/// The chain side is simulated exactly; the diffusion side by
/// Euler–Maruyama at step `dt`, rerun at `dt/2` to measure the bias
/// allowance.
pub fn moment_duality_report(
    p: &BracoParams,
    n: u64,
    y: f64,
    t: f64,
    reps: u64,
    dt: f64,
    seed: u64,
) -> Result<DualityReport> {
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::InvalidArgument(format!("y = {y} outside [0, 1]")));
    }
    if n > i32::MAX as u64 {
        return Err(Error::InvalidArgument(format!("n = {n} too large")));
    }
    if reps < 2 {
        return Err(Error::InvalidArgument("need at least two replicates".into()));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("t = {t} must be finite and >= 0")));
    }
    let run = euler_run(dt, t)?;

    let chain = parallel_samples(reps, seed, 0, |rng| {
        survival_weight(y, simulate_braco(p, n, t, rng))
    });
    let diffusion = parallel_samples(reps, seed, reps, |rng| {
        let y_t = simulate_resem(p, y, &run, rng).expect("validated inputs");
        (1.0 - y_t).powi(n as i32)
    });
    let diffusion_half = parallel_samples(reps, seed, 2 * reps, |rng| {
        let y_t = simulate_resem(p, y, &run.halved(), rng).expect("validated inputs");
        (1.0 - y_t).powi(n as i32)
    });

    let lhs = mean_and_se(&chain);
    let rhs = mean_and_se(&diffusion);
    let (rhs_half, _) = mean_and_se(&diffusion_half);
    let bias = (rhs.0 - rhs_half).abs();

    let metadata = BTreeMap::from(
        [
            ("kind", "moment".to_string()),
            ("b", fmt_f64(p.b)),
            ("c", fmt_f64(p.c)),
            ("d", fmt_f64(p.d)),
            ("n", n.to_string()),
            ("y", fmt_f64(y)),
            ("t", fmt_f64(t)),
            ("reps", reps.to_string()),
            ("dt", fmt_f64(dt)),
            ("seed", seed.to_string()),
        ]
        .map(|(k, v)| (k.to_string(), v)),
    );
    Ok(DualityReport::from_sides(lhs, rhs, bias, metadata))
}

/// Monte Carlo check of the Laplace duality between two logistic Feller
/// diffusions:  `E^x[e^{-rX_t y}] = E^y[e^{-rx Y_t}]`, where `Y` has the
/// parameter triple `(α, rβ, γ/r)`.
///
/// When `α = γ = 0` the right side is replaced by the closed form
/// `exp(-rx · y_t)` with `y_t` the pure-death solution, giving an exact
/// anchor for the Monte Carlo left side.
pub fn laplace_duality_report(
    p: &FellerParams,
    r: f64,
    x: f64,
    y: f64,
    t: f64,
    reps: u64,
    dt: f64,
    seed: u64,
) -> Result<DualityReport> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidArgument(format!("r = {r} must be positive and finite")));
    }
    for (name, v) in [("x", x), ("y", y)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidArgument(format!("{name} = {v} must be finite and >= 0")));
        }
    }
    if reps < 2 {
        return Err(Error::InvalidArgument("need at least two replicates".into()));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("t = {t} must be finite and >= 0")));
    }
    let run = euler_run(dt, t)?;
    let dual = p.laplace_dual(r)?;

    let lhs_values = parallel_samples(reps, seed, 0, |rng| {
        let x_t = simulate_logistic_feller(p, x, &run, rng).expect("validated inputs");
        (-r * x_t * y).exp()
    });
    let lhs_half_values = parallel_samples(reps, seed, 2 * reps, |rng| {
        let x_t = simulate_logistic_feller(p, x, &run.halved(), rng).expect("validated inputs");
        (-r * x_t * y).exp()
    });
    let lhs = mean_and_se(&lhs_values);
    let (lhs_half, _) = mean_and_se(&lhs_half_values);
    let mut bias = (lhs.0 - lhs_half).abs();

    let exact_rhs = p.alpha == 0.0 && p.gamma == 0.0;
    let rhs = if exact_rhs {
        // Dual parameters (0, rβ, 0): a deterministic pure-death flow.
        ((-r * x * pure_death_solution(y, r * p.beta, t)).exp(), 0.0)
    } else {
        let rhs_values = parallel_samples(reps, seed, reps, |rng| {
            let y_t = simulate_logistic_feller(&dual, y, &run, rng).expect("validated inputs");
            (-r * x * y_t).exp()
        });
        let rhs_half_values = parallel_samples(reps, seed, 3 * reps, |rng| {
            let y_t =
                simulate_logistic_feller(&dual, y, &run.halved(), rng).expect("validated inputs");
            (-r * x * y_t).exp()
        });
        let rhs = mean_and_se(&rhs_values);
        let (rhs_half, _) = mean_and_se(&rhs_half_values);
        bias += (rhs.0 - rhs_half).abs();
        rhs
    };

    let metadata = BTreeMap::from(
        [
            ("kind", "laplace".to_string()),
            ("alpha", fmt_f64(p.alpha)),
            ("gamma", fmt_f64(p.gamma)),
            ("beta", fmt_f64(p.beta)),
            ("r", fmt_f64(r)),
            ("x", fmt_f64(x)),
            ("y", fmt_f64(y)),
            ("t", fmt_f64(t)),
            ("reps", reps.to_string()),
            ("dt", fmt_f64(dt)),
            ("seed", seed.to_string()),
            ("rhs_exact", exact_rhs.to_string()),
        ]
        .map(|(k, v)| (k.to_string(), v)),
    );
    Ok(DualityReport::from_sides(lhs, rhs, bias, metadata))
}

/// Convergence of the occupied-site count to the branching-coalescing chain
/// with `b = u+β`, `d = e+β`, fixed `c`, as the coalescent rate scales as
/// `γ = cN`.  Distance per size: total variation at time `t` between the
/// exact count-chain law from `n0` and the exact truncated reference law.
pub fn braco_scaling_table(
    n_list: &[usize],
    n0: usize,
    u: f64,
    e: f64,
    beta: f64,
    c: f64,
    t: f64,
) -> Result<ConvergenceTable> {
    check_size_list(n_list)?;
    if n0 > n_list[0] {
        return Err(Error::InvalidArgument(format!(
            "n0 = {n0} exceeds the smallest size {}",
            n_list[0]
        )));
    }
    let p = BracoParams::new(u + beta, c, e + beta)?;
    let cap = braco_truncation_cap(&p, n0 as u64, t, BRACO_REFERENCE_TAIL)?;
    let reference_gen = braco_generator(&p, cap)?;
    let reference = evolve_distribution(
        &reference_gen,
        &Distribution::point(cap + 1, n0)?,
        t,
        DEFAULT_EVOLVE_TOL,
    )?;

    let mut rows = Vec::with_capacity(n_list.len());
    for &n_sites in n_list {
        let started = Instant::now();
        let rates = RateSpec::new(u, e, c * n_sites as f64, beta)?;
        let gen = count_generator(n_sites, &rates)?;
        let law = evolve_distribution(
            &gen,
            &Distribution::point(n_sites + 1, n0)?,
            t,
            DEFAULT_EVOLVE_TOL,
        )?;
        rows.push(ConvergenceRow {
            n_sites,
            distance: tv_distance(&law, &reference),
            plan: ScalingPlan::new(1.0, 1.0, (u - e).max(0.0))?,
            runtime_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(ConvergenceTable::new(rows))
}

/// Convergence of `|X^N_{t√N}| / √N` to the logistic Feller diffusion.
///
/// The drift condition `(u-e)√N → α` is realized as `u = e + α/√N` with `e`
/// held fixed, and with that realization the per-pair birth and death
/// mechanisms contribute at diffusion order too: the limit is the logistic
/// Feller diffusion with parameters `(α, γ+e, β+e)`, which collapses to
/// `(α, γ, β)` as `e → 0`.  The reference law is a Monte Carlo sample of
/// that limit started from `x`; distance is Wasserstein-1 at rescaled time
/// `t`.
#[allow(clippy::too_many_arguments)]
pub fn feller_scaling_table(
    n_list: &[usize],
    x: f64,
    alpha: f64,
    e: f64,
    gamma: f64,
    beta: f64,
    t: f64,
    reps: u64,
    dt: f64,
    seed: u64,
) -> Result<ConvergenceTable> {
    check_size_list(n_list)?;
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidArgument(format!("x = {x} must be finite and >= 0")));
    }
    if reps < 2 {
        return Err(Error::InvalidArgument("need at least two replicates".into()));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("t = {t} must be finite and >= 0")));
    }

    // One shared reference sample of the limit diffusion.
    let limit = FellerParams::new(alpha, gamma + e, beta + e)?;
    let run = euler_run(dt, t)?;
    let mut sample = if t == 0.0 {
        vec![x; reps as usize]
    } else {
        parallel_samples(reps, seed, 0, |rng| {
            simulate_logistic_feller(&limit, x, &run, rng).expect("validated inputs")
        })
    };
    sample.sort_by(f64::total_cmp);
    let w = 1.0 / reps as f64;
    let reference: Vec<(f64, f64)> = sample.into_iter().map(|v| (v, w)).collect();

    let mut rows = Vec::with_capacity(n_list.len());
    for &n_sites in n_list {
        let started = Instant::now();
        let sqrt_n = (n_sites as f64).sqrt();
        let k0 = (x * sqrt_n).floor() as usize;
        if k0 > n_sites {
            return Err(Error::InvalidArgument(format!(
                "x√N = {k0} exceeds N = {n_sites}; x too large for this size"
            )));
        }
        let u = e + alpha / sqrt_n;
        if u < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "u = e + alpha/√N = {u} negative at N = {n_sites}"
            )));
        }
        let rates = RateSpec::new(u, e, gamma, beta)?;
        let gen = count_generator(n_sites, &rates)?;
        let law = evolve_distribution(
            &gen,
            &Distribution::point(n_sites + 1, k0)?,
            t * sqrt_n,
            DEFAULT_EVOLVE_TOL,
        )?;
        let points: Vec<(f64, f64)> = law
            .weights()
            .iter()
            .enumerate()
            .filter(|(_, &wk)| wk > 0.0)
            .map(|(k, &wk)| (k as f64 / sqrt_n, wk))
            .collect();
        rows.push(ConvergenceRow {
            n_sites,
            distance: wasserstein1(&points, &reference)?,
            plan: ScalingPlan::new(sqrt_n, sqrt_n, (u - e).max(0.0))?,
            runtime_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(ConvergenceTable::new(rows))
}

/// Convergence of the rescaled pure-coalescence count
/// `|Y_{t√N}| / √N` to the pure-death ODE solution `y_t = y/(1+βty)`.
/// Distance per size: the sup over the time grid of the absolute error of
/// the exact mean path.
pub fn pure_death_scaling(
    n_list: &[usize],
    beta: f64,
    y: f64,
    t_grid: &[f64],
) -> Result<ConvergenceTable> {
    check_size_list(n_list)?;
    if !y.is_finite() || y < 0.0 {
        return Err(Error::InvalidArgument(format!("y = {y} must be finite and >= 0")));
    }
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if !t_grid.windows(2).all(|w| w[0] <= w[1]) || t_grid.iter().any(|&t| !t.is_finite() || t < 0.0)
    {
        return Err(Error::InvalidArgument(format!(
            "time grid {t_grid:?} must be nondecreasing and nonnegative"
        )));
    }

    let mut rows = Vec::with_capacity(n_list.len());
    for &n_sites in n_list {
        let started = Instant::now();
        let sqrt_n = (n_sites as f64).sqrt();
        let k0 = (y * sqrt_n).floor() as usize;
        if k0 > n_sites {
            return Err(Error::InvalidArgument(format!(
                "y√N = {k0} exceeds N = {n_sites}; y too large for this size"
            )));
        }
        // The quadratic death rate (β/N)k(k-1) is the coalescent slot of the
        // count chain with every other mechanism off.
        let rates = RateSpec::new(0.0, 0.0, beta, 0.0)?;
        let gen = count_generator(n_sites, &rates)?;

        let mut law = Distribution::point(n_sites + 1, k0)?;
        let mut prev_t = 0.0;
        let mut sup_err = 0.0f64;
        for &t in t_grid {
            law = evolve_distribution(&gen, &law, (t - prev_t) * sqrt_n, DEFAULT_EVOLVE_TOL)?;
            prev_t = t;
            let mean = law.mean_index() / sqrt_n;
            sup_err = sup_err.max((mean - pure_death_solution(y, beta, t)).abs());
        }
        rows.push(ConvergenceRow {
            n_sites,
            distance: sup_err,
            plan: ScalingPlan::new(sqrt_n, sqrt_n, 0.0)?,
            runtime_s: started.elapsed().as_secs_f64(),
        });
    }
    Ok(ConvergenceTable::new(rows))
}

/// Total variation distance `(1/2) Σ |p_i - q_i|`; the shorter vector is
/// read as padded with zeros.
pub fn tv_distance(p: &Distribution, q: &Distribution) -> f64 {
    let (long, short) = if p.dim() >= q.dim() { (p, q) } else { (q, p) };
    let mut sum = 0.0;
    for (i, &w) in long.weights().iter().enumerate() {
        let other = short.weights().get(i).copied().unwrap_or(0.0);
        sum += (w - other).abs();
    }
    sum / 2.0
}

/// Wasserstein-1 distance between two finitely supported laws on the line,
/// each given as `(position, mass)` pairs with masses summing to one.
pub fn wasserstein1(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<f64> {
    for (name, side) in [("first", a), ("second", b)] {
        if side.is_empty() {
            return Err(Error::InvalidArgument(format!("{name} law has empty support")));
        }
        let mut mass = 0.0;
        for &(x, w) in side {
            if !x.is_finite() || !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} law has invalid atom ({x}, {w})"
                )));
            }
            mass += w;
        }
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("{name} law has total mass {mass}")));
        }
    }

    // W1 = ∫ |F_a - F_b|: sweep the merged support accumulating the CDF gap.
    let mut deltas: Vec<(f64, f64)> = a
        .iter()
        .map(|&(x, w)| (x, w))
        .chain(b.iter().map(|&(x, w)| (x, -w)))
        .collect();
    deltas.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut distance = 0.0;
    let mut cdf_gap = 0.0f64;
    let mut prev_x = deltas[0].0;
    for (x, dw) in deltas {
        distance += cdf_gap.abs() * (x - prev_x);
        cdf_gap += dw;
        prev_x = x;
    }
    Ok(distance)
}
