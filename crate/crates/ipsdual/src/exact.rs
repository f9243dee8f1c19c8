//! Exact finite-state computations: generators for the full `2^N` chain and
//! its occupied-site count chain, distribution evolution by uniformization,
//! and exact duality gaps at small `N`.
//!
//! The full chain lives on configuration space `{0,1}^N`, encoded as `N`-bit
//! integers (site `i` at bit `i`).  Its one-dimensional projection, the
//! number of occupied sites, is itself Markov for the standard mechanisms:
//! every configuration with `k` ones has exactly `k(N-k)` ordered `(1,0)`
//! pairs, `k(k-1)` ordered `(1,1)` pairs, and so on, so the jump rates
//! depend on the configuration only through `k`.  [`count_generator`] builds
//! that birth–death chain directly; the agreement of the two routes is
//! tested as the lumping property.
//!
//! Distributions evolve by uniformization: with `Λ` at least the largest
//! exit rate, `P = I + Q/Λ` is stochastic and
//! `p_t = Σ_k  e^{-Λt} (Λt)^k / k! · p_0 P^k`.
//! The series is truncated once the retained Poisson mass reaches
//! `1 - tol` and the result is renormalized, so the truncation error is at
//! most `tol` in total variation.

use rand::Rng;

use crate::graphical::{Configuration, RateSpec};
use crate::mechanism::{BasicMechanism, PairState};
use crate::numeric::{ln_choose, ln_factorial_table, poisson_weights};
use crate::{Error, Result};

/// Default cap on `N` for the full `2^N` chain (16,384 states).
pub const DEFAULT_FULL_SITE_CAP: usize = 14;

/// Default cap on `N` for the count chain (`N + 1` states).
pub const DEFAULT_COUNT_STATE_CAP: usize = 20_000;

/// Default uniformization truncation tolerance (total variation).
pub const DEFAULT_EVOLVE_TOL: f64 = 1e-12;

/// Sparse conservative generator: off-diagonal rates by row, with the
/// diagonal implied as minus the row sum.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
    exit: Vec<f64>,
}

impl GeneratorMatrix {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("generator needs at least one state".into()));
        }
        Ok(Self { dim, rows: vec![Vec::new(); dim], exit: vec![0.0; dim] })
    }

    /// Add an off-diagonal rate `from -> to`.
    pub fn add(&mut self, from: usize, to: usize, rate: f64) -> Result<()> {
        if from >= self.dim || to >= self.dim || from == to {
            return Err(Error::Mismatch(format!(
                "transition {from} -> {to} invalid in dimension {}",
                self.dim
            )));
        }
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidArgument(format!("rate {rate} must be finite and >= 0")));
        }
        if rate > 0.0 {
            self.rows[from].push((to, rate));
            self.exit[from] += rate;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total outflow of a state (minus its diagonal entry).
    pub fn exit_rate(&self, state: usize) -> f64 {
        self.exit[state]
    }

    /// Largest exit rate; the uniformization constant.
    pub fn max_exit_rate(&self) -> f64 {
        self.exit.iter().fold(0.0f64, |a, &b| a.max(b))
    }

    /// Off-diagonal entries of one row.
    pub fn row(&self, state: usize) -> &[(usize, f64)] {
        &self.rows[state]
    }

    /// Expected number of transitions per state, for sizing diagnostics.
    pub fn entry_count(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// One step of the uniformized chain: `out = p · (I + Q/Λ)`.
    fn stochastic_step(&self, p: &[f64], lambda: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = p[i] * (1.0 - self.exit[i] / lambda);
        }
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for &(j, rate) in &self.rows[i] {
                out[j] += pi * rate / lambda;
            }
        }
    }
}

/// A probability vector over generator states.
#[derive(Clone, PartialEq, Debug)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Validate and wrap a weight vector: nonnegative, summing to one within
    /// `1e-12`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("empty distribution".into()));
        }
        let mut sum = 0.0;
        for &w in &weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidArgument(format!("weight {w} must be finite and >= 0")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Point mass at `state`.
    pub fn point(dim: usize, state: usize) -> Result<Self> {
        if state >= dim {
            return Err(Error::Mismatch(format!("state {state} out of range for dimension {dim}")));
        }
        let mut weights = vec![0.0; dim];
        weights[state] = 1.0;
        Ok(Self { weights })
    }

    /// Uniform law over the full-chain configurations with exactly `n_ones`
    /// occupied sites.
    pub fn uniform_over_count(n_sites: usize, n_ones: usize) -> Result<Self> {
        if n_ones > n_sites {
            return Err(Error::InvalidArgument(format!("{n_ones} ones on {n_sites} sites")));
        }
        if n_sites > DEFAULT_FULL_SITE_CAP {
            return Err(Error::ResourceLimit(format!(
                "{n_sites} sites exceeds the full-chain cap {DEFAULT_FULL_SITE_CAP}"
            )));
        }
        let dim = 1usize << n_sites;
        let mut weights = vec![0.0; dim];
        let mut hits = 0usize;
        for (state, w) in weights.iter_mut().enumerate() {
            if state.count_ones() as usize == n_ones {
                *w = 1.0;
                hits += 1;
            }
        }
        for w in &mut weights {
            *w /= hits as f64;
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `Σ k · p_k` — the mean state index (the mean count for count chains).
    pub fn mean_index(&self) -> f64 {
        self.weights.iter().enumerate().map(|(k, &w)| k as f64 * w).sum()
    }

    /// Project a full-chain law onto the occupied-site count.
    pub fn project_to_counts(&self, n_sites: usize) -> Result<Distribution> {
        if self.dim() != 1usize << n_sites {
            return Err(Error::Mismatch(format!(
                "distribution over {} states is not a {n_sites}-site full chain",
                self.dim()
            )));
        }
        let mut counts = vec![0.0; n_sites + 1];
        for (state, &w) in self.weights.iter().enumerate() {
            counts[state.count_ones() as usize] += w;
        }
        Ok(Distribution { weights: counts })
    }
}

/// Time horizon and rescaling constants for one step of a scaling-limit
/// experiment: time is run to `t · time_scale`, state is divided by
/// `space_scale`, and `growth_rate` bounds the mean growth of the dominating
/// submartingale used for truncation.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct ScalingPlan {
    pub time_scale: f64,
    pub space_scale: f64,
    pub growth_rate: f64,
}

impl ScalingPlan {
    pub fn new(time_scale: f64, space_scale: f64, growth_rate: f64) -> Result<Self> {
        if !(time_scale > 0.0) || !(space_scale > 0.0) || !time_scale.is_finite() || !space_scale.is_finite()
        {
            return Err(Error::InvalidArgument(format!(
                "scales ({time_scale}, {space_scale}) must be positive and finite"
            )));
        }
        if !growth_rate.is_finite() {
            return Err(Error::InvalidArgument(format!("growth rate {growth_rate} must be finite")));
        }
        Ok(Self { time_scale, space_scale, growth_rate })
    }
}

/// Generator of the full chain on `{0,1}^N`: for every state, every ordered
/// site pair `(i, j)` and every mechanism `k` whose arrow would change the
/// state, a transition at rate `rates[k]/N`.
pub fn full_generator(
    n_sites: usize,
    rates: &RateSpec,
    mechanisms: &[BasicMechanism; 4],
) -> Result<GeneratorMatrix> {
    full_generator_with_cap(n_sites, rates, mechanisms, DEFAULT_FULL_SITE_CAP)
}

/// [`full_generator`] with an explicit cap on `N` instead of the default.
pub fn full_generator_with_cap(
    n_sites: usize,
    rates: &RateSpec,
    mechanisms: &[BasicMechanism; 4],
    cap: usize,
) -> Result<GeneratorMatrix> {
    if n_sites == 0 {
        return Err(Error::InvalidArgument("need at least one site".into()));
    }
    if n_sites > cap.min(63) {
        return Err(Error::ResourceLimit(format!(
            "{n_sites} sites exceeds the full-chain cap {cap}"
        )));
    }
    let per_pair = rates.as_list().map(|r| r / n_sites as f64);
    let dim = 1usize << n_sites;
    let mut gen = GeneratorMatrix::new(dim)?;
    for state in 0..dim {
        for i in 0..n_sites {
            for j in 0..n_sites {
                if i == j {
                    continue;
                }
                let input = PairState::new(state >> i & 1 == 1, state >> j & 1 == 1);
                for (k, mech) in mechanisms.iter().enumerate() {
                    if per_pair[k] == 0.0 {
                        continue;
                    }
                    let out = mech.apply(input);
                    if out == input {
                        continue;
                    }
                    let mut next = state;
                    next = next & !(1 << i) | (out.first as usize) << i;
                    next = next & !(1 << j) | (out.second as usize) << j;
                    gen.add(state, next, per_pair[k])?;
                }
            }
        }
    }
    Ok(gen)
}

/// Generator of the occupied-site count chain on `{0, ..., N}`:
/// `k -> k+1` at `(u+β) k(N-k)/N` and
/// `k -> k-1` at `(e+β) k(N-k)/N + (e+γ) k(k-1)/N`.
pub fn count_generator(n_sites: usize, rates: &RateSpec) -> Result<GeneratorMatrix> {
    count_generator_with_cap(n_sites, rates, DEFAULT_COUNT_STATE_CAP)
}

/// [`count_generator`] with an explicit cap on `N` instead of the default.
pub fn count_generator_with_cap(
    n_sites: usize,
    rates: &RateSpec,
    cap: usize,
) -> Result<GeneratorMatrix> {
    if n_sites == 0 {
        return Err(Error::InvalidArgument("need at least one site".into()));
    }
    if n_sites > cap {
        return Err(Error::ResourceLimit(format!(
            "{n_sites} sites exceeds the count-chain cap {cap}"
        )));
    }
    let n = n_sites as f64;
    let mut gen = GeneratorMatrix::new(n_sites + 1)?;
    for k in 0..=n_sites {
        let kf = k as f64;
        let up = (rates.u + rates.beta) * kf * (n - kf) / n;
        let down = (rates.e + rates.beta) * kf * (n - kf) / n
            + (rates.e + rates.gamma) * kf * (kf - 1.0) / n;
        if k < n_sites {
            gen.add(k, k + 1, up)?;
        }
        if k > 0 {
            gen.add(k, k - 1, down)?;
        }
    }
    Ok(gen)
}

/// Evolve `p0` for time `t`: `p_t = p0 · exp(t·Q)` by uniformization, with
/// truncation error at most `tol` in total variation and the output
/// renormalized.
pub fn evolve_distribution(
    gen: &GeneratorMatrix,
    p0: &Distribution,
    t: f64,
    tol: f64,
) -> Result<Distribution> {
    if p0.dim() != gen.dim() {
        return Err(Error::Mismatch(format!(
            "distribution over {} states, generator over {}",
            p0.dim(),
            gen.dim()
        )));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("time {t} must be finite and >= 0")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} out of (0, 1)")));
    }

    let lambda = gen.max_exit_rate();
    if t == 0.0 || lambda == 0.0 {
        return Ok(p0.clone());
    }

    let weights = poisson_weights(lambda * t, tol);
    let mut v = p0.weights().to_vec();
    let mut next = vec![0.0; v.len()];
    let mut out = vec![0.0; v.len()];
    for (i, o) in out.iter_mut().enumerate() {
        *o = weights[0] * v[i];
    }
    for &w in &weights[1..] {
        gen.stochastic_step(&v, lambda, &mut next);
        std::mem::swap(&mut v, &mut next);
        if w == 0.0 {
            continue;
        }
        for (o, &vi) in out.iter_mut().zip(&v) {
            *o += w * vi;
        }
    }

    let sum: f64 = out.iter().sum();
    for o in &mut out {
        *o = (*o / sum).max(0.0);
    }
    Distribution::new(out)
}

/// Exact two-sided disjointness probability gap
/// `|P^x[X_t ∧ y = 0] - P^y[x ∧ Y_t = 0]|`, where `X` runs the standard
/// mechanisms at rates `(u, e, γ, β)` and `Y` at the swapped rates
/// `(u, e, β, γ)`.  In exact arithmetic the gap is zero; what remains
/// is uniformization slack.
pub fn wedge_duality_gap(
    n_sites: usize,
    rates: &RateSpec,
    x: &Configuration,
    y: &Configuration,
    t: f64,
) -> Result<f64> {
    let (lhs, rhs) = wedge_duality_sides(n_sites, rates, x, y, t)?;
    Ok((lhs - rhs).abs())
}

/// The two disjointness probabilities compared by [`wedge_duality_gap`],
/// returned as `(lhs, rhs)`.
pub fn wedge_duality_sides(
    n_sites: usize,
    rates: &RateSpec,
    x: &Configuration,
    y: &Configuration,
    t: f64,
) -> Result<(f64, f64)> {
    if x.len() != n_sites || y.len() != n_sites {
        return Err(Error::Mismatch(format!(
            "configurations of {} and {} sites on an {n_sites}-site system",
            x.len(),
            y.len()
        )));
    }
    let mechs = crate::graphical::standard_mechanisms();
    let lhs = disjoint_probability(n_sites, rates, x, y, t, &mechs)?;
    let rhs = disjoint_probability(n_sites, &rates.swapped(), y, x, t, &mechs)?;
    Ok((lhs, rhs))
}

/// `P^start[ Z_t ∧ other = 0 ]` for the full standard chain.
fn disjoint_probability(
    n_sites: usize,
    rates: &RateSpec,
    start: &Configuration,
    other: &Configuration,
    t: f64,
    mechs: &[BasicMechanism; 4],
) -> Result<f64> {
    let gen = full_generator(n_sites, rates, mechs)?;
    let p0 = Distribution::point(gen.dim(), start.to_index())?;
    let p_t = evolve_distribution(&gen, &p0, t, DEFAULT_EVOLVE_TOL)?;
    let mask = other.to_index();
    Ok(p_t
        .weights()
        .iter()
        .enumerate()
        .filter(|(state, _)| state & mask == 0)
        .map(|(_, &w)| w)
        .sum())
}

/// Probability that a hypergeometric draw misses all marked items:
/// `C(N-R, l) / C(N, l)`, in log space; `0` when `l > N-R`.
pub fn hyp_zero(n: usize, r: usize, l: usize) -> Result<f64> {
    if r > n || l > n {
        return Err(Error::InvalidArgument(format!("hyp_zero({n}, {r}, {l}) out of range")));
    }
    if l > n - r {
        return Ok(0.0);
    }
    let table = ln_factorial_table(n);
    Ok((ln_choose(&table, n - r, l) - ln_choose(&table, n, l)).exp())
}

/// Exact total-variation distance between `Binomial(l, R/N)` and
/// `Hypergeometric(N, R, l)`, together with the bound `4l/N`.  The distance
/// is asserted to respect the bound before returning.
pub fn binom_hyp_tv_bound_check(n: usize, r: usize, l: usize) -> Result<(f64, f64)> {
    if n == 0 || r > n || l > n {
        return Err(Error::InvalidArgument(format!(
            "binom_hyp_tv_bound_check({n}, {r}, {l}) out of range"
        )));
    }
    let table = ln_factorial_table(n);
    let p = r as f64 / n as f64;
    let mut tv = 0.0;
    for j in 0..=l {
        let binom = if p == 0.0 {
            (j == 0) as u8 as f64
        } else if p == 1.0 {
            (j == l) as u8 as f64
        } else {
            (ln_choose(&table, l, j) + j as f64 * p.ln() + (l - j) as f64 * (1.0 - p).ln()).exp()
        };
        let hyper = (ln_choose(&table, r, j) + ln_choose(&table, n - r, l - j)
            - ln_choose(&table, n, l))
        .exp();
        tv += (binom - hyper).abs();
    }
    let tv = tv / 2.0;
    let bound = 4.0 * l as f64 / n as f64;
    assert!(tv <= bound + 1e-12, "tv {tv} exceeds bound {bound} for ({n}, {r}, {l})");
    Ok((tv, bound))
}

/// Uniform sample over the `C(N, n)` configurations with exactly `n` ones,
/// by partial Fisher–Yates shuffle.
pub fn sample_uniform_config<R: Rng + ?Sized>(
    n_sites: usize,
    n_ones: usize,
    rng: &mut R,
) -> Result<Configuration> {
    if n_ones > n_sites {
        return Err(Error::InvalidArgument(format!("{n_ones} ones on {n_sites} sites")));
    }
    let mut sites: Vec<usize> = (0..n_sites).collect();
    for i in 0..n_ones {
        let j = rng.gen_range(i..n_sites);
        sites.swap(i, j);
    }
    Configuration::with_ones_at(n_sites, &sites[..n_ones])
}

/// Finite-`N` mixture duality gap
/// `|E[(1-k/N)^{|X_t|}] - E[(1-|Y_t|/N)^n]|` for the count chains started
/// from `n` and `k`, with `Y` at the swapped rates.  Vanishes as `N` grows;
/// at finite `N` it measures the hypergeometric-vs-binomial approximation.
pub fn prototype_duality_gap(
    n_sites: usize,
    n: usize,
    k: usize,
    rates: &RateSpec,
    t: f64,
) -> Result<f64> {
    if n > n_sites || k > n_sites {
        return Err(Error::InvalidArgument(format!(
            "initial counts ({n}, {k}) exceed {n_sites} sites"
        )));
    }
    let x_gen = count_generator(n_sites, rates)?;
    let x_t = evolve_distribution(&x_gen, &Distribution::point(n_sites + 1, n)?, t, DEFAULT_EVOLVE_TOL)?;
    let lhs = expect_power_miss(&x_t, k, n_sites);

    let y_gen = count_generator(n_sites, &rates.swapped())?;
    let y_t = evolve_distribution(&y_gen, &Distribution::point(n_sites + 1, k)?, t, DEFAULT_EVOLVE_TOL)?;
    let rhs: f64 = y_t
        .weights()
        .iter()
        .enumerate()
        .map(|(m, &w)| w * pow_one_minus(m, n, n_sites))
        .sum();

    Ok((lhs - rhs).abs())
}

/// `E[(1 - k/N)^M]` under a count distribution, in log space.
fn expect_power_miss(dist: &Distribution, k: usize, n_sites: usize) -> f64 {
    dist.weights()
        .iter()
        .enumerate()
        .map(|(m, &w)| w * pow_one_minus(k, m, n_sites))
        .sum()
}

/// `(1 - k/N)^m` via `exp(m · log1p(-k/N))`, with the `k = N` case read as
/// `0^m` (one only when `m = 0`).
fn pow_one_minus(k: usize, m: usize, n_sites: usize) -> f64 {
    if k == n_sites {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    (m as f64 * (-(k as f64) / n_sites as f64).ln_1p()).exp()
}
