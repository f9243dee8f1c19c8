//! Simulators for the limit objects of the particle system: the
//! branching-coalescing chain (`braco`), the resampling-selection diffusion
//! (`resem`) on `[0,1]`, the logistic Feller diffusion on `[0,∞)`, and the
//! pure-death ODE closed forms.
//!
//! The chain is simulated exactly (Gillespie, event by event); the SDEs by
//! Euler–Maruyama.  Square-root diffusion coefficients are clamped inside
//! the root and the state is projected back into its domain after every
//! step — naive Euler exits the domain with positive probability, and
//! projection is the standard simple remedy.  The projection bias is
//! first-order in the step size; experiment-level pass criteria measure it
//! empirically by rerunning at half the step.

use rand::Rng;
use rand_distr::{Distribution as RandDistribution, Exp, StandardNormal};

use crate::exact::GeneratorMatrix;
use crate::{Error, Result};

/// Rates of the branching-coalescing chain: each particle splits at `b`,
/// dies at `d`, and each ordered pair coalesces at `c`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct BracoParams {
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl BracoParams {
    pub fn new(b: f64, c: f64, d: f64) -> Result<Self> {
        for (name, v) in [("b", b), ("c", c), ("d", d)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(Self { b, c, d })
    }
}

/// Parameters of the logistic Feller diffusion
/// `dX = αX dt − γX² dt + √(2βX) dB`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct FellerParams {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl FellerParams {
    pub fn new(alpha: f64, gamma: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} must be finite")));
        }
        for (name, v) in [("gamma", gamma), ("beta", beta)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(Self { alpha, gamma, beta })
    }

    /// The dual triple under the Laplace duality with constant `r`:
    /// `(α, rβ, γ/r)`.
    pub fn laplace_dual(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidArgument(format!("r = {r} must be positive and finite")));
        }
        Self::new(self.alpha, r * self.beta, self.gamma / r)
    }
}

/// Discretization of an Euler–Maruyama run.
///
/// The realized step is `horizon / ceil(horizon/dt)`: the widest uniform
/// partition with steps no larger than `dt`, so the run lands on the horizon
/// exactly.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct SdeRun {
    pub dt: f64,
    pub horizon: f64,
}

impl SdeRun {
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidArgument(format!("dt = {dt} must be positive and finite")));
        }
        if !horizon.is_finite() || horizon < 0.0 {
            return Err(Error::InvalidArgument(format!("horizon = {horizon} must be finite and >= 0")));
        }
        if horizon > 0.0 && dt > horizon {
            return Err(Error::InvalidArgument(format!("dt = {dt} exceeds horizon {horizon}")));
        }
        Ok(Self { dt, horizon })
    }

    /// The same run at half the step — used to measure discretization bias.
    pub fn halved(&self) -> Self {
        Self { dt: self.dt / 2.0, horizon: self.horizon }
    }

    fn steps(&self) -> (u64, f64) {
        if self.horizon == 0.0 {
            return (0, 0.0);
        }
        let n = (self.horizon / self.dt).ceil().max(1.0) as u64;
        (n, self.horizon / n as f64)
    }
}

/// Exact simulation of the branching-coalescing chain from `n0`, returning
/// the particle count at time `t`.  From state `k` the chain waits an
/// exponential time with rate `bk + dk + ck(k-1)`, then steps `+1` with
/// probability proportional to `bk`, else `-1`.  State `0` is absorbing.
pub fn simulate_braco<R: Rng + ?Sized>(p: &BracoParams, n0: u64, t: f64, rng: &mut R) -> u64 {
    let mut k = n0;
    let mut now = 0.0f64;
    loop {
        if k == 0 {
            return 0;
        }
        let kf = k as f64;
        let up = p.b * kf;
        let down = p.d * kf + p.c * kf * (kf - 1.0);
        let total = up + down;
        if total == 0.0 {
            return k;
        }
        now += Exp::new(total).expect("positive rate").sample(rng);
        if now > t {
            return k;
        }
        if rng.gen::<f64>() * total < up {
            k += 1;
        } else {
            k -= 1;
        }
    }
}

/// Euler–Maruyama for `dY = (b-d)Y dt − bY² dt + √(2cY(1-Y)) dB` on `[0,1]`.
/// The root argument is clamped to `[0, 1]` and the state projected back to
/// `[0,1]` after every step.
pub fn simulate_resem<R: Rng + ?Sized>(
    p: &BracoParams,
    y0: f64,
    run: &SdeRun,
    rng: &mut R,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&y0) {
        return Err(Error::InvalidArgument(format!("y0 = {y0} outside [0, 1]")));
    }
    let (steps, h) = run.steps();
    let sqrt_h = h.sqrt();
    let mut y = y0;
    for _ in 0..steps {
        let z: f64 = StandardNormal.sample(rng);
        let drift = (p.b - p.d) * y - p.b * y * y;
        let diffusion = (2.0 * p.c * y.max(0.0) * (1.0 - y).max(0.0)).sqrt();
        y += drift * h + diffusion * sqrt_h * z;
        y = y.clamp(0.0, 1.0);
    }
    Ok(y)
}

/// Euler–Maruyama for `dX = αX dt − γX² dt + √(2βX) dB` on `[0,∞)`.  The
/// root argument is clamped at zero and the state projected back to `[0,∞)`
/// after every step.
pub fn simulate_logistic_feller<R: Rng + ?Sized>(
    p: &FellerParams,
    x0: f64,
    run: &SdeRun,
    rng: &mut R,
) -> Result<f64> {
    if !(x0 >= 0.0) || !x0.is_finite() {
        return Err(Error::InvalidArgument(format!("x0 = {x0} must be finite and >= 0")));
    }
    let (steps, h) = run.steps();
    let sqrt_h = h.sqrt();
    let mut x = x0;
    for _ in 0..steps {
        let z: f64 = StandardNormal.sample(rng);
        let drift = p.alpha * x - p.gamma * x * x;
        let diffusion = (2.0 * p.beta * x.max(0.0)).sqrt();
        x += drift * h + diffusion * sqrt_h * z;
        x = x.max(0.0);
    }
    Ok(x)
}

/// Solution of `dy/dt = -βy²` from `y0`: `y_t = y0 / (1 + β t y0)`.
pub fn pure_death_solution(y0: f64, beta: f64, t: f64) -> f64 {
    debug_assert!(y0 >= 0.0 && beta >= 0.0 && t >= 0.0);
    y0 / (1.0 + beta * t * y0)
}

/// `E^x[exp(-F_t · y)]` for Feller's branching diffusion (`α = γ = 0`) with
/// noise coefficient `β`: equals `exp(-x · y_t)` with `y_t` the pure-death
/// solution from `y`.
pub fn feller_laplace_closed_form(x: f64, y: f64, beta: f64, t: f64) -> f64 {
    (-x * pure_death_solution(y, beta, t)).exp()
}

/// Generator of the branching-coalescing chain truncated to `{0, ..., cap}`:
/// up `bk` (suppressed at the cap), down `(d + c(k-1))k`.
pub fn braco_generator(p: &BracoParams, cap: usize) -> Result<GeneratorMatrix> {
    let mut gen = GeneratorMatrix::new(cap + 1)?;
    for k in 1..=cap {
        let kf = k as f64;
        if k < cap {
            gen.add(k, k + 1, p.b * kf)?;
        }
        gen.add(k, k - 1, (p.d + p.c * (kf - 1.0)) * kf)?;
    }
    Ok(gen)
}

/// Smallest cap `K` such that the chain started from `n0` stays below `K`
/// up to time `t` except with probability `< tol`.
///
/// The chain is dominated pathwise by the pure-birth process with rate `b`
/// per particle, whose value at `t` is negative binomial; since pure birth
/// only grows, its time-`t` tail bounds the probability of ever reaching
/// `K`.  The tail is summed directly.
pub fn braco_truncation_cap(p: &BracoParams, n0: u64, t: f64, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} out of (0, 1)")));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!("time {t} must be finite and >= 0")));
    }
    if n0 == 0 || p.b == 0.0 || t == 0.0 {
        return Ok(n0 as usize);
    }
    let n0f = n0 as f64;
    let log_survive = -n0f * p.b * t;
    if log_survive < -600.0 {
        return Err(Error::ResourceLimit(format!(
            "pure-birth domination from n0 = {n0} over bt = {} underflows; \
             truncation cap would be astronomically large",
            p.b * t
        )));
    }
    // Negative binomial pmf of the pure-birth count, by ratio recurrence:
    // P(n0) = e^{-n0 bt}, P(m+1) = P(m) * m q / (m + 1 - n0), q = 1 - e^{-bt}.
    let q = -(-p.b * t).exp_m1();
    let mut pmf = log_survive.exp();
    let mut cdf = pmf;
    let mut m = n0 as usize;
    while 1.0 - cdf >= tol {
        let mf = m as f64;
        pmf *= mf * q / (mf + 1.0 - n0f);
        cdf += pmf;
        m += 1;
        if m > 100_000_000 {
            return Err(Error::ResourceLimit(format!(
                "truncation cap exceeds 1e8 for n0 = {n0}, bt = {}",
                p.b * t
            )));
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::mean_and_se;
    use crate::rng::replicate_rng;

    /// Classic fourth-order Runge–Kutta, used as an independent oracle for
    /// the ODE closed forms.
    fn rk4(mut y: f64, f: impl Fn(f64) -> f64, t: f64, steps: usize) -> f64 {
        let h = t / steps as f64;
        for _ in 0..steps {
            let k1 = f(y);
            let k2 = f(y + 0.5 * h * k1);
            let k3 = f(y + 0.5 * h * k2);
            let k4 = f(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        y
    }

    #[test]
    fn braco_trivial_cases() {
        let mut rng = replicate_rng(31, 0);
        let p = BracoParams::new(1.0, 1.0, 0.5).unwrap();
        assert_eq!(simulate_braco(&p, 0, 5.0, &mut rng), 0);

        let frozen = BracoParams::new(0.0, 0.0, 0.0).unwrap();
        assert_eq!(simulate_braco(&frozen, 7, 5.0, &mut rng), 7);
    }

    #[test]
    fn braco_is_deterministic_per_stream() {
        let p = BracoParams::new(1.0, 0.5, 0.3).unwrap();
        let a = simulate_braco(&p, 10, 2.0, &mut replicate_rng(37, 4));
        let b = simulate_braco(&p, 10, 2.0, &mut replicate_rng(37, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn braco_pure_birth_mean_is_exponential() {
        // b = 1, c = d = 0 from one particle: E[X_t] = e^t.
        let p = BracoParams::new(1.0, 0.0, 0.0).unwrap();
        let reps = 100_000;
        let values: Vec<f64> = (0..reps)
            .map(|r| simulate_braco(&p, 1, 1.0, &mut replicate_rng(41, r)) as f64)
            .collect();
        let (mean, se) = mean_and_se(&values);
        let target = 1.0f64.exp();
        assert!((mean - target).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn braco_comes_down_from_large_starts() {
        // Quadratic coalescence makes runs from n0 = 10^4 terminate fast.
        let p = BracoParams::new(1.0, 1.0, 0.5).unwrap();
        for r in 0..50 {
            let k = simulate_braco(&p, 10_000, 1.0, &mut replicate_rng(43, r));
            assert!(k < 100, "run {r} ended at {k}");
        }
    }

    #[test]
    fn resem_domain_and_absorption() {
        let p = BracoParams::new(1.0, 1.0, 0.5).unwrap();
        let run = SdeRun::new(1e-3, 1.0).unwrap();
        assert!(simulate_resem(&p, -0.1, &run, &mut replicate_rng(47, 0)).is_err());
        assert!(simulate_resem(&p, 1.1, &run, &mut replicate_rng(47, 0)).is_err());
        assert_eq!(simulate_resem(&p, 0.0, &run, &mut replicate_rng(47, 0)).unwrap(), 0.0);

        let noisy = BracoParams::new(0.0, 2.0, 0.0).unwrap();
        for r in 0..100 {
            let y = simulate_resem(&noisy, 1.0, &run, &mut replicate_rng(53, r)).unwrap();
            assert!((0.0..=1.0).contains(&y));
        }
    }

    #[test]
    fn resem_deterministic_case_matches_ode() {
        // c = 0, b = d: dY = -bY² dt, the pure-death ODE.
        let p = BracoParams::new(1.0, 0.0, 1.0).unwrap();
        let run = SdeRun::new(1e-4, 1.0).unwrap();
        let y = simulate_resem(&p, 1.0, &run, &mut replicate_rng(59, 0)).unwrap();
        assert!((y - 0.5).abs() < 1e-3, "y = {y}");
    }

    #[test]
    fn euler_error_halves_with_the_step() {
        let p = BracoParams::new(1.0, 0.0, 1.0).unwrap();
        let exact = 0.5;
        let coarse = simulate_resem(&p, 1.0, &SdeRun::new(1e-2, 1.0).unwrap(), &mut replicate_rng(61, 0))
            .unwrap();
        let fine = simulate_resem(&p, 1.0, &SdeRun::new(5e-3, 1.0).unwrap(), &mut replicate_rng(61, 0))
            .unwrap();
        let ratio = (coarse - exact).abs() / (fine - exact).abs();
        assert!((1.5..=2.7).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn feller_domain_and_deterministic_exponential() {
        let p = FellerParams::new(1.0, 0.0, 0.0).unwrap();
        let run = SdeRun::new(1e-3, 1.0).unwrap();
        assert!(simulate_logistic_feller(&p, -1.0, &run, &mut replicate_rng(67, 0)).is_err());
        assert_eq!(
            simulate_logistic_feller(&p, 0.0, &run, &mut replicate_rng(67, 0)).unwrap(),
            0.0
        );

        // beta = gamma = 0: dX = X dt, so X_1 = e within O(dt).
        let x = simulate_logistic_feller(&p, 1.0, &run, &mut replicate_rng(67, 1)).unwrap();
        assert!((x - 1.0f64.exp()).abs() < 3e-3, "x = {x}");
    }

    #[test]
    fn feller_driftless_mean_is_conserved() {
        // alpha = gamma = 0: X is a nonnegative martingale, E[X_t] = x0.
        let p = FellerParams::new(0.0, 0.0, 1.0).unwrap();
        let run = SdeRun::new(1e-3, 1.0).unwrap();
        let values: Vec<f64> = (0..20_000)
            .map(|r| simulate_logistic_feller(&p, 1.0, &run, &mut replicate_rng(71, r)).unwrap())
            .collect();
        let (mean, se) = mean_and_se(&values);
        assert!((mean - 1.0).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn pure_death_closed_form_and_rk4_oracle() {
        assert_eq!(pure_death_solution(1.0, 1.0, 0.0), 1.0);
        assert_eq!(pure_death_solution(0.0, 1.0, 3.0), 0.0);
        assert!((pure_death_solution(1.0, 1.0, 1.0) - 0.5).abs() < 1e-15);

        // Independent check of the closed form against RK4.
        for (y0, beta, t) in [(1.0, 1.0, 1.0), (2.5, 0.7, 1.3), (0.4, 3.0, 2.0)] {
            let ode = rk4(y0, |y| -beta * y * y, t, 4000);
            let closed = pure_death_solution(y0, beta, t);
            assert!((ode - closed).abs() < 1e-10, "({y0}, {beta}, {t}): {ode} vs {closed}");
        }
    }

    #[test]
    fn laplace_closed_form_values() {
        assert_eq!(feller_laplace_closed_form(0.0, 0.7, 1.0, 2.0), 1.0);
        let xy = 0.8f64 * 0.6;
        assert!((feller_laplace_closed_form(0.8, 0.6, 1.0, 0.0) - (-xy).exp()).abs() < 1e-15);
        assert!((feller_laplace_closed_form(1.0, 1.0, 1.0, 1.0) - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn truncated_generator_matches_rates() {
        let p = BracoParams::new(1.5, 1.0, 1.0).unwrap();
        let gen = braco_generator(&p, 10).unwrap();
        // k = 3: up 4.5, down (1 + 1*2)*3 = 9.
        let up = gen.row(3).iter().find(|&&(to, _)| to == 4).unwrap().1;
        let down = gen.row(3).iter().find(|&&(to, _)| to == 2).unwrap().1;
        assert!((up - 4.5).abs() < 1e-15);
        assert!((down - 9.0).abs() < 1e-15);
        assert_eq!(gen.exit_rate(0), 0.0);
        // Cap state has no upward flow.
        assert!(gen.row(10).iter().all(|&(to, _)| to == 9));
    }

    #[test]
    fn truncation_cap_bounds_the_pure_birth_tail() {
        let p = BracoParams::new(1.0, 1.0, 0.5).unwrap();
        let cap = braco_truncation_cap(&p, 2, 1.0, 1e-10).unwrap();
        assert!(cap > 2);

        // Direct check: the negative binomial tail beyond the cap is small.
        let bt = 1.0f64;
        let q = 1.0 - (-bt).exp();
        let mut pmf = (-2.0 * bt).exp();
        let mut tail = 1.0 - pmf;
        for m in 2..cap {
            let mf = m as f64;
            pmf *= mf * q / (mf - 1.0);
            tail -= pmf;
        }
        assert!(tail < 1e-10, "tail beyond {cap} is {tail:.3e}");

        assert_eq!(braco_truncation_cap(&p, 5, 0.0, 1e-10).unwrap(), 5);
        let no_birth = BracoParams::new(0.0, 1.0, 0.5).unwrap();
        assert_eq!(braco_truncation_cap(&no_birth, 5, 3.0, 1e-10).unwrap(), 5);
        assert!(braco_truncation_cap(&p, 10_000, 1.0, 1e-10).is_err());
    }

    #[test]
    fn run_partition_lands_on_horizon() {
        let run = SdeRun::new(1e-3, 1.0).unwrap();
        let (n, h) = run.steps();
        assert_eq!(n, 1000);
        assert!((n as f64 * h - 1.0).abs() < 1e-15);
        assert!(h <= 1e-3 + 1e-18);

        assert!(SdeRun::new(0.0, 1.0).is_err());
        assert!(SdeRun::new(2.0, 1.0).is_err());
        assert!(SdeRun::new(1e-3, 0.0).is_ok());
    }
}
