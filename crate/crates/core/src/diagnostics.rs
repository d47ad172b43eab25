//! Statistical estimators and oracle checks: Gibbs reference densities,
//! occupation histograms, exit-time statistics, Arrhenius and sharpening
//! fits, success probabilities, and finite-difference gradient/Hessian
//! oracles. Estimators are pure reductions over chain outputs; aggregation
//! is keyed by chain index and therefore order-independent.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{drive_chain, EnsembleResult, EtaLaw, IntegratorConfig};
use crate::error::{Error, Result};
use crate::geometry::{sample_uniform_configuration, Configuration};
use crate::landscapes::{wrap_angle, BasinLabel, CircleSystem, LandscapeSpec};
use crate::potential::{
    anchor_grad_raw, argmax_candidate, grad_raw, hessian_anchor_raw, infonce_hessian_anchor,
    loss_raw, PairSet, SimilarityKind,
};
use crate::schedules::Schedule;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
/// 97.5% normal quantile used by every 95% interval here.
const Z_95: f64 = 1.959963984540054;

/// Counts of angles over equal bins of [-pi, pi).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AngularHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl AngularHistogram {
    pub fn new(bins: usize) -> Result<Self> {
        if bins < 8 {
            return Err(Error::InsufficientData {
                needed: 8,
                got: bins,
            });
        }
        Ok(Self {
            counts: vec![0; bins],
            total: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn record(&mut self, theta: f64) {
        let w = wrap_angle(theta);
        let b = (((w + std::f64::consts::PI) / TWO_PI) * self.counts.len() as f64) as usize;
        let b = b.min(self.counts.len() - 1);
        self.counts[b] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &AngularHistogram) {
        debug_assert_eq!(self.bins(), other.bins());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let t = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / t).collect()
    }

    pub fn bin_center(&self, b: usize) -> f64 {
        -std::f64::consts::PI + (b as f64 + 0.5) * TWO_PI / self.counts.len() as f64
    }
}

/// Per-bin masses of the Gibbs density exp(-beta U)/Z on S^1, by composite
/// trapezoid quadrature with `grid` panels total (rounded up to a multiple
/// of `bins`). Refining the grid twice moves each bin by less than 1e-6.
pub fn gibbs_reference_density(
    spec: &LandscapeSpec,
    beta: f64,
    bins: usize,
    grid: usize,
) -> Result<Vec<f64>> {
    assert!(beta > 0.0, "the Gibbs density requires beta > 0");
    assert!(grid >= 256, "quadrature grid must have at least 256 panels");
    if bins < 8 {
        return Err(Error::InsufficientData {
            needed: 8,
            got: bins,
        });
    }
    let per_bin = grid.div_ceil(bins);
    let h = TWO_PI / (bins * per_bin) as f64;
    // Subtract the minimum potential before exponentiating so large beta
    // cannot underflow the whole density.
    let mut u_min = f64::INFINITY;
    let mut u_at = vec![0.0; bins * per_bin + 1];
    for (i, u) in u_at.iter_mut().enumerate() {
        *u = spec.value(-std::f64::consts::PI + i as f64 * h);
        u_min = u_min.min(*u);
    }
    let w: Vec<f64> = u_at.iter().map(|u| (-beta * (u - u_min)).exp()).collect();
    let mut masses = vec![0.0; bins];
    for (b, mass) in masses.iter_mut().enumerate() {
        let lo = b * per_bin;
        let mut acc = 0.5 * (w[lo] + w[lo + per_bin]);
        for i in lo + 1..lo + per_bin {
            acc += w[i];
        }
        *mass = acc * h;
    }
    let z: f64 = masses.iter().sum();
    for m in &mut masses {
        *m /= z;
    }
    Ok(masses)
}

/// Total variation (1/2) sum |empirical_b - reference_b| in [0, 1].
pub fn total_variation(h: &AngularHistogram, reference: &[f64]) -> Result<f64> {
    if h.bins() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: h.bins(),
            got: reference.len(),
        });
    }
    let emp = h.frequencies();
    Ok(0.5
        * emp
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Pooled equilibrium occupation versus the Gibbs reference.
#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    pub histogram: AngularHistogram,
    pub reference: Vec<f64>,
    pub tv: f64,
}

/// Runs `chains` fixed-temperature chains of `steps` steps each, discards
/// the first `burn_in_frac` of every chain, pools the post-burn-in angles
/// into one histogram and compares it against the quadrature Gibbs
/// reference. Chains start uniformly on the circle from their own streams.
pub fn equilibrium_occupation(
    spec: &LandscapeSpec,
    beta: f64,
    icfg: &IntegratorConfig,
    chains: u32,
    burn_in_frac: f64,
    bins: usize,
) -> Result<EquilibriumReport> {
    assert!(chains >= 1);
    assert!((0.0..1.0).contains(&burn_in_frac));
    let sched = Schedule::constant(beta)?;
    let sys = CircleSystem::new(spec);
    let burn = (icfg.steps as f64 * burn_in_frac) as u64;
    let partials: Vec<Result<AngularHistogram>> = (0..chains)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(icfg.seed);
            rng.set_stream(i as u64 + 1);
            let theta0: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let mut hist = AngularHistogram::new(bins)?;
            drive_chain(&sys, theta0, &sched, icfg, &mut rng, |k, th| {
                if k > burn {
                    hist.record(*th);
                }
                ControlFlow::Continue(())
            })?;
            Ok(hist)
        })
        .collect();
    let mut histogram = AngularHistogram::new(bins)?;
    for p in partials {
        histogram.merge(&p?);
    }
    let reference = gibbs_reference_density(spec, beta, bins, 1 << 14)?;
    let tv = total_variation(&histogram, &reference)?;
    Ok(EquilibriumReport {
        histogram,
        reference,
        tv,
    })
}

/// First exit of one chain; `None` exit means censored at the horizon.
#[derive(Debug, Clone, Copy)]
pub struct ExitTimeSample {
    pub chain: u32,
    pub exit_step: Option<u64>,
    pub beta: f64,
    pub from_basin: usize,
}

#[derive(Debug, Clone)]
pub struct ExitTimeSummary {
    pub samples: Vec<ExitTimeSample>,
    /// Arithmetic mean of uncensored exit steps.
    pub mean_steps: f64,
    /// Arithmetic mean of uncensored exit times (steps scaled into SDE time
    /// by the learning rate).
    pub mean_time: f64,
    /// 95% interval from a normal approximation on the log of exit times.
    pub ci_time: (f64, f64),
    pub censored: usize,
}

/// Starts `m` chains at the minimum of `start_basin` under constant `beta`
/// noise and records the first step whose basin label leaves the start
/// basin. Censored chains are reported, never dropped; if every chain is
/// censored the horizon was too short and `AllCensored` is returned.
pub fn estimate_exit_times(
    spec: &LandscapeSpec,
    beta: f64,
    start_basin: usize,
    m: u32,
    horizon: u64,
    icfg: &IntegratorConfig,
) -> Result<ExitTimeSummary> {
    assert!(m >= 1);
    if start_basin >= spec.minima().len() {
        return Err(Error::InvalidInstance(format!(
            "basin {start_basin} out of range"
        )));
    }
    let eta = match icfg.eta {
        EtaLaw::Constant { eta0 } => eta0,
        EtaLaw::Decaying { .. } => {
            return Err(Error::InvalidInstance(
                "exit-time estimation expects a constant learning rate".into(),
            ))
        }
    };
    let sched = Schedule::constant(beta)?;
    let sys = CircleSystem::new(spec);
    let theta0 = spec.minimum_angle(start_basin);
    let run_cfg = IntegratorConfig {
        steps: horizon,
        ..*icfg
    };
    let samples: Vec<Result<ExitTimeSample>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(icfg.seed);
            rng.set_stream(i as u64 + 1);
            let mut exit: Option<u64> = None;
            drive_chain(&sys, theta0, &sched, &run_cfg, &mut rng, |k, th| {
                if k > 0 && spec.basin_of(*th) != BasinLabel::Basin(start_basin) {
                    exit = Some(k);
                    return ControlFlow::Break(());
                }
                ControlFlow::Continue(())
            })?;
            Ok(ExitTimeSample {
                chain: i,
                exit_step: exit,
                beta,
                from_basin: start_basin,
            })
        })
        .collect();
    let samples: Vec<ExitTimeSample> = samples.into_iter().collect::<Result<Vec<_>>>()?;

    let exits: Vec<f64> = samples
        .iter()
        .filter_map(|s| s.exit_step)
        .map(|k| k as f64)
        .collect();
    let censored = samples.len() - exits.len();
    if exits.is_empty() {
        return Err(Error::AllCensored);
    }
    let mean_steps = exits.iter().sum::<f64>() / exits.len() as f64;
    let logs: Vec<f64> = exits.iter().map(|&t| (t * eta).ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / logs.len() as f64;
    let var_log = if logs.len() > 1 {
        logs.iter().map(|l| (l - mean_log).powi(2)).sum::<f64>() / (logs.len() - 1) as f64
    } else {
        0.0
    };
    let se = (var_log / logs.len() as f64).sqrt();
    Ok(ExitTimeSummary {
        samples,
        mean_steps,
        mean_time: mean_steps * eta,
        ci_time: ((mean_log - Z_95 * se).exp(), (mean_log + Z_95 * se).exp()),
        censored,
    })
}

/// Ordinary least-squares summary.
#[derive(Debug, Clone, Copy)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual_se: f64,
    pub n: usize,
}

/// Least squares of y against x; needs at least 3 points.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let dof = (x.len() - 2).max(1) as f64;
    Ok(FitResult {
        slope,
        intercept,
        residual_se: (ss_res / dof).sqrt(),
        n: x.len(),
    })
}

/// Arrhenius fit ln(mean exit time) = dE * beta + const. The slope
/// estimates the barrier; the negated intercept estimates ln of the rate
/// prefactor.
pub fn arrhenius_fit(samples: &[(f64, f64)]) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: samples.len(),
        });
    }
    let x: Vec<f64> = samples.iter().map(|&(b, _)| b).collect();
    let y: Vec<f64> = samples.iter().map(|&(_, t)| t.ln()).collect();
    linear_fit(&x, &y)
}

/// Wilson 95% score interval for a binomial fraction.
#[derive(Debug, Clone, Copy)]
pub struct WilsonInterval {
    pub fraction: f64,
    pub low: f64,
    pub high: f64,
    pub successes: u64,
    pub total: u64,
}

impl WilsonInterval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn overlaps(&self, other: &WilsonInterval) -> bool {
        self.low <= other.high && other.low <= self.high
    }
}

pub fn wilson_interval(successes: u64, total: u64) -> WilsonInterval {
    assert!(total >= 1, "interval needs at least one trial");
    assert!(successes <= total);
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (Z_95 / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // The score bounds are exactly 0 and 1 at the degenerate counts; pin
    // them so rounding cannot leak past.
    let low = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if successes == total {
        1.0
    } else {
        (center + half).min(1.0)
    };
    WilsonInterval {
        fraction: p,
        low,
        high,
        successes,
        total,
    }
}

/// Fraction of completed chains whose final state satisfies the predicate.
/// Chains that failed count toward the total as non-successes.
pub fn success_fraction<S, P: Fn(&S) -> bool>(
    ens: &EnsembleResult<S>,
    predicate: P,
) -> WilsonInterval {
    let total = ens.outcomes.len() as u64;
    let successes = ens
        .outcomes
        .iter()
        .filter(|o| o.final_state.as_ref().map(&predicate).unwrap_or(false))
        .count() as u64;
    wilson_interval(successes, total)
}

/// Central-difference step: max(1e-6, cbrt(machine epsilon)).
pub fn fd_step() -> f64 {
    f64::EPSILON.cbrt().max(1e-6)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdOrder {
    /// Two-point central difference, O(h^2).
    Central2,
    /// Five-point central difference, O(h^4); kept as a cross-check.
    Central4,
}

fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64, order: FdOrder) -> f64 {
    match order {
        FdOrder::Central2 => (f(x + h) - f(x - h)) / (2.0 * h),
        FdOrder::Central4 => {
            (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
        }
    }
}

/// Finite-difference gradient of the loss in ambient coordinates.
pub fn fd_gradient(
    points: &[Vec<f64>],
    beta: f64,
    kind: SimilarityKind,
    pairs: &PairSet,
    order: FdOrder,
) -> Vec<Vec<f64>> {
    let h = fd_step();
    let mut out = vec![vec![0.0; points[0].len()]; points.len()];
    for m in 0..points.len() {
        for c in 0..points[m].len() {
            let f = |x: f64| {
                let mut w = points.to_vec();
                w[m][c] = x;
                let views: Vec<&[f64]> = w.iter().map(|r| r.as_slice()).collect();
                loss_raw(&views, beta, kind, pairs)
            };
            out[m][c] = central_diff(f, points[m][c], h, order);
        }
    }
    out
}

/// Finite-difference Jacobian of the anchor-term gradient with respect to
/// the anchor coordinates: the oracle for the anchor Hessian.
pub fn fd_anchor_hessian(
    points: &[Vec<f64>],
    i: usize,
    j: usize,
    beta: f64,
    kind: SimilarityKind,
    order: FdOrder,
) -> Vec<Vec<f64>> {
    let h = fd_step();
    let d = points[0].len();
    let mut out = vec![vec![0.0; d]; d];
    for c in 0..d {
        let grad_at = |x: f64| -> Vec<f64> {
            let mut w = points.to_vec();
            w[i][c] = x;
            let views: Vec<&[f64]> = w.iter().map(|r| r.as_slice()).collect();
            anchor_grad_raw(&views, i, j, beta, kind)
        };
        let col = match order {
            FdOrder::Central2 => {
                let plus = grad_at(points[i][c] + h);
                let minus = grad_at(points[i][c] - h);
                (0..d)
                    .map(|r| (plus[r] - minus[r]) / (2.0 * h))
                    .collect::<Vec<f64>>()
            }
            FdOrder::Central4 => {
                let m2 = grad_at(points[i][c] - 2.0 * h);
                let m1 = grad_at(points[i][c] - h);
                let p1 = grad_at(points[i][c] + h);
                let p2 = grad_at(points[i][c] + 2.0 * h);
                (0..d)
                    .map(|r| (m2[r] - 8.0 * m1[r] + 8.0 * p1[r] - p2[r]) / (12.0 * h))
                    .collect::<Vec<f64>>()
            }
        };
        for r in 0..d {
            out[r][c] = col[r];
        }
    }
    out
}

fn rel_error(analytic: &[Vec<f64>], fd: &[Vec<f64>]) -> f64 {
    let mut scale: f64 = 1e-4;
    for row in analytic.iter().chain(fd.iter()) {
        for v in row {
            scale = scale.max(v.abs());
        }
    }
    let mut worst: f64 = 0.0;
    for (ra, rf) in analytic.iter().zip(fd) {
        for (a, f) in ra.iter().zip(rf) {
            worst = worst.max((a - f).abs());
        }
    }
    worst / scale
}

/// Random pair set: floor(n/2) pairs with distinct anchors.
fn random_pairs(n: usize, rng: &mut ChaCha8Rng) -> PairSet {
    let count = (n / 2).max(1);
    let mut pairs = Vec::with_capacity(count);
    for i in 0..count {
        let mut j = rng.random_range(0..n);
        while j == i {
            j = rng.random_range(0..n);
        }
        pairs.push((i, j));
    }
    PairSet::new(pairs, n).expect("generated pairs are valid")
}

/// Max relative error between the analytic full gradient and central
/// differences of the loss, over `trials` random instances.
pub fn fd_check_gradient(
    kind: SimilarityKind,
    n: usize,
    d: usize,
    beta: f64,
    trials: usize,
    seed: u64,
) -> f64 {
    assert!(trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let z = sample_uniform_configuration(n, d, &mut rng).expect("valid sizes");
        let pairs = random_pairs(n, &mut rng);
        let points: Vec<Vec<f64>> = z.rows().iter().map(|r| r.to_vec()).collect();
        let views: Vec<&[f64]> = points.iter().map(|r| r.as_slice()).collect();
        let analytic = grad_raw(&views, beta, kind, &pairs);
        let fd = fd_gradient(&points, beta, kind, &pairs, FdOrder::Central2);
        worst = worst.max(rel_error(&analytic, &fd));
    }
    worst
}

/// Max relative error between the analytic anchor Hessian and central
/// differences of the anchor gradient, over `trials` random instances.
pub fn fd_check_hessian(
    kind: SimilarityKind,
    n: usize,
    d: usize,
    beta: f64,
    trials: usize,
    seed: u64,
) -> f64 {
    assert!(trials >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let z = sample_uniform_configuration(n, d, &mut rng).expect("valid sizes");
        let pairs = random_pairs(n, &mut rng);
        let &(i, j) = &pairs.pairs()[0];
        let points: Vec<Vec<f64>> = z.rows().iter().map(|r| r.to_vec()).collect();
        let views: Vec<&[f64]> = points.iter().map(|r| r.as_slice()).collect();
        let analytic = hessian_anchor_raw(&views, i, j, beta, kind);
        let fd = fd_anchor_hessian(&points, i, j, beta, kind, FdOrder::Central2);
        worst = worst.max(rel_error(&analytic, &fd));
    }
    worst
}

/// Spectral norm of a symmetric matrix by power iteration to 1e-10.
pub fn spectral_norm(mat: &[Vec<f64>]) -> f64 {
    let d = mat.len();
    if d == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.01 * i as f64).collect();
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= vn;
    }
    let mut lambda = 0.0_f64;
    for _ in 0..10_000 {
        let mut w = vec![0.0; d];
        for r in 0..d {
            for c in 0..d {
                w[r] += mat[r][c] * v[c];
            }
        }
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if wn == 0.0 {
            return 0.0;
        }
        let next = wn; // |Hv| with unit v converges to |lambda_max|
        for x in &mut w {
            *x /= wn;
        }
        v = w;
        if (next - lambda).abs() <= 1e-10 * next.max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Least-squares slope of ln ||H||_2 versus ln beta at a fixed suboptimal
/// configuration. Errors with `NotSuboptimal` when the positive already is
/// the argmax candidate of its anchor.
pub fn sharpening_fit(
    z: &Configuration,
    i: usize,
    j: usize,
    betas: &[f64],
    kind: SimilarityKind,
    pairs: &PairSet,
) -> Result<FitResult> {
    if betas.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: betas.len(),
        });
    }
    let lo = betas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = betas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(lo > 0.0) || hi / lo < 10.0 {
        return Err(Error::InvalidInstance(format!(
            "beta grid must be positive and span at least one decade, got [{lo}, {hi}]"
        )));
    }
    if argmax_candidate(z, i, kind) == j {
        return Err(Error::NotSuboptimal);
    }
    let mut xs = Vec::with_capacity(betas.len());
    let mut ys = Vec::with_capacity(betas.len());
    for &beta in betas {
        let h = infonce_hessian_anchor(z, i, j, beta, kind, pairs)?;
        xs.push(beta.ln());
        ys.push(spectral_norm(&h).ln());
    }
    linear_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::EtaLaw;
    use approx::assert_abs_diff_eq;

    #[test]
    fn histogram_basics() {
        assert!(AngularHistogram::new(4).is_err());
        let mut h = AngularHistogram::new(8).unwrap();
        h.record(0.0);
        h.record(-std::f64::consts::PI);
        h.record(3.1);
        assert_eq!(h.total(), 3);
        assert_eq!(h.counts().iter().sum::<u64>(), 3);
    }

    #[test]
    fn gibbs_density_flat_potential_is_uniform() {
        // beta -> 0 washes out the double well.
        let spec = LandscapeSpec::symmetric_double_well();
        let masses = gibbs_reference_density(&spec, 1e-8, 64, 1 << 14).unwrap();
        for m in &masses {
            assert_abs_diff_eq!(*m, 1.0 / 64.0, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(masses.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn gibbs_density_symmetric_modes_balance() {
        let spec = LandscapeSpec::symmetric_double_well();
        let masses = gibbs_reference_density(&spec, 6.0, 64, 1 << 14).unwrap();
        // U(theta) = cos 2 theta puts the wells at +-pi/2: compare the mass
        // of theta < 0 against theta > 0.
        let left: f64 = masses[..32].iter().sum();
        let right: f64 = masses[32..].iter().sum();
        assert_abs_diff_eq!(left, right, epsilon = 1e-9);
    }

    #[test]
    fn gibbs_density_is_grid_stable() {
        let spec = LandscapeSpec::tilted_double_well(0.2).unwrap();
        let coarse = gibbs_reference_density(&spec, 4.0, 64, 1 << 14).unwrap();
        let fine = gibbs_reference_density(&spec, 4.0, 64, 1 << 15).unwrap();
        for (a, b) in coarse.iter().zip(&fine) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn total_variation_examples() {
        let mut h = AngularHistogram::new(8).unwrap();
        for b in 0..8 {
            for _ in 0..10 {
                h.record(h.bin_center(b));
            }
        }
        let uniform = vec![0.125; 8];
        assert_abs_diff_eq!(total_variation(&h, &uniform).unwrap(), 0.0, epsilon = 1e-12);
        // Disjoint supports: all mass in the first half vs all in the second.
        let mut g = AngularHistogram::new(8).unwrap();
        for b in 0..4 {
            g.record(g.bin_center(b));
        }
        let other = vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25];
        assert_abs_diff_eq!(total_variation(&g, &other).unwrap(), 1.0, epsilon = 1e-12);
        // Uniform vs concentrated-on-half: exactly 0.5.
        let half = vec![0.25, 0.25, 0.25, 0.25, 0.0, 0.0, 0.0, 0.0];
        assert_abs_diff_eq!(total_variation(&h, &half).unwrap(), 0.5, epsilon = 1e-12);
        assert!(total_variation(&h, &[1.0]).is_err());
    }

    #[test]
    fn exit_times_noiseless_chains_never_exit() {
        let spec = LandscapeSpec::symmetric_double_well();
        let icfg =
            IntegratorConfig::new(EtaLaw::constant(1e-2).unwrap(), 0, 11).with_noise(false);
        let err = estimate_exit_times(&spec, 3.0, 1, 8, 2_000, &icfg).unwrap_err();
        assert_eq!(err, Error::AllCensored);
    }

    #[test]
    fn exit_times_small_beta_exits_quickly() {
        // At beta = 0.1 the barrier is almost invisible; every chain leaves
        // within a short horizon. The small eta keeps per-step noise
        // sqrt(2 eta / beta) far from the overflow limit.
        let spec = LandscapeSpec::symmetric_double_well();
        let icfg = IntegratorConfig::new(EtaLaw::constant(1e-3).unwrap(), 0, 12);
        let summary = estimate_exit_times(&spec, 0.1, 1, 32, 50_000, &icfg).unwrap();
        assert_eq!(summary.censored, 0, "censored = {}", summary.censored);
        assert!(summary.mean_steps >= 1.0);
        assert!(summary.ci_time.0 <= summary.ci_time.1);
    }

    #[test]
    fn arrhenius_fit_recovers_exact_exponentials() {
        // tau = e^{2 beta} / A: slope 2, intercept -ln A.
        let a = 2.0 / std::f64::consts::PI;
        let samples: Vec<(f64, f64)> = [2.0, 3.0, 4.0, 5.0, 6.0]
            .iter()
            .map(|&b: &f64| (b, (2.0 * b).exp() / a))
            .collect();
        let fit = arrhenius_fit(&samples).unwrap();
        assert_abs_diff_eq!(fit.slope, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, -a.ln(), epsilon = 1e-12);
        assert!(fit.residual_se < 1e-12);
        assert!(arrhenius_fit(&samples[..2]).is_err());
    }

    #[test]
    fn wilson_interval_width_at_half() {
        let w = wilson_interval(100, 200);
        assert_abs_diff_eq!(w.fraction, 0.5, epsilon = 1e-12);
        assert!((w.width() - 0.1373).abs() < 0.01, "width = {}", w.width());
        let all = wilson_interval(10, 10);
        assert_eq!(all.fraction, 1.0);
        assert_eq!(all.high, 1.0);
        let none = wilson_interval(0, 10);
        assert_eq!(none.fraction, 0.0);
        assert_eq!(none.low, 0.0);
    }

    #[test]
    fn wilson_interval_shrinks_like_root_n() {
        let w1 = wilson_interval(50, 100);
        let w2 = wilson_interval(5_000, 10_000);
        let ratio = w1.width() / w2.width();
        assert!((ratio - 10.0).abs() < 0.5, "ratio = {ratio}");
    }

    #[test]
    fn gradient_oracle_spot_checks() {
        let e1 = fd_check_gradient(SimilarityKind::Cosine, 4, 3, 5.0, 50, 1);
        assert!(e1 <= 1e-6, "cosine max rel err = {e1}");
        let e2 = fd_check_gradient(SimilarityKind::gaussian(0.7).unwrap(), 6, 4, 20.0, 20, 2);
        assert!(e2 <= 1e-6, "gaussian max rel err = {e2}");
        // Pathologically small beta: the gradient is tiny but the check
        // still passes on its scale floor.
        let e3 = fd_check_gradient(SimilarityKind::Cosine, 4, 3, 1e-12, 5, 3);
        assert!(e3 <= 1e-6, "small-beta max rel err = {e3}");
    }

    #[test]
    fn hessian_oracle_spot_checks() {
        let e1 = fd_check_hessian(SimilarityKind::Cosine, 5, 3, 4.0, 20, 4);
        assert!(e1 <= 1e-4, "cosine max rel err = {e1}");
        let e2 = fd_check_hessian(SimilarityKind::gaussian(1.0).unwrap(), 5, 3, 4.0, 20, 5);
        assert!(e2 <= 1e-4, "gaussian max rel err = {e2}");
    }

    #[test]
    fn hessian_oracle_degenerate_candidates() {
        // All candidates coincide: analytic H = 0 and the finite difference
        // agrees within an absolute 1e-8.
        let z = Configuration::from_angles(&[0.0, 1.3, 1.3, 1.3]).unwrap();
        let pairs = PairSet::new(vec![(0, 1)], 4).unwrap();
        let points: Vec<Vec<f64>> = z.rows().iter().map(|r| r.to_vec()).collect();
        let fd = fd_anchor_hessian(&points, 0, 1, 4.0, SimilarityKind::Cosine, FdOrder::Central2);
        let views: Vec<&[f64]> = points.iter().map(|r| r.as_slice()).collect();
        let analytic = hessian_anchor_raw(&views, 0, 1, 4.0, SimilarityKind::Cosine);
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(analytic[r][c], 0.0, epsilon = 1e-12);
                assert_abs_diff_eq!(fd[r][c], 0.0, epsilon = 1e-8);
            }
        }
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn spectral_norm_of_known_matrix() {
        // Symmetric with eigenvalues 3 and 1.
        let m = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
        assert_abs_diff_eq!(spectral_norm(&m), 3.0, epsilon = 1e-9);
        // Dominant negative eigenvalue: the norm is its magnitude.
        let neg = vec![vec![-5.0, 0.0], vec![0.0, 2.0]];
        assert_abs_diff_eq!(spectral_norm(&neg), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn sharpening_fit_exact_linear_input() {
        // H(beta) = beta M via the gaussian kind at a crafted configuration
        // is checked by the acceptance suite; here the fit machinery itself:
        // ln||beta M|| against ln beta has slope exactly 1.
        let xs: Vec<f64> = [10.0, 18.0, 32.0, 56.0, 100.0]
            .iter()
            .map(|b: &f64| b.ln())
            .collect();
        let ys: Vec<f64> = [10.0, 18.0, 32.0, 56.0, 100.0]
            .iter()
            .map(|b: &f64| (b * 2.5).ln())
            .collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert_abs_diff_eq!(fit.slope, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sharpening_fit_guards() {
        // Positive is the argmax: NotSuboptimal.
        let z = Configuration::from_angles(&[0.0, 0.1, 2.0, 3.0]).unwrap();
        let pairs = PairSet::new(vec![(0, 1)], 4).unwrap();
        let betas = [10.0, 18.0, 32.0, 56.0, 100.0];
        assert_eq!(
            sharpening_fit(&z, 0, 1, &betas, SimilarityKind::Cosine, &pairs).unwrap_err(),
            Error::NotSuboptimal
        );
        // Decade guard.
        let z2 = Configuration::from_angles(&[0.0, 2.5, 0.3, 3.0]).unwrap();
        assert!(matches!(
            sharpening_fit(&z2, 0, 1, &[10.0, 20.0, 40.0], SimilarityKind::Cosine, &pairs),
            Err(Error::InvalidInstance(_))
        ));
    }

    #[test]
    fn sharpening_slope_near_one_for_gaussian_suboptimal() {
        // Anchor at 0, positive far at 2.5, a close negative at 0.3: the
        // argmax is the negative, and the beta-linear Hessian term of the
        // RBF kind dominates across the decade.
        let z = Configuration::from_angles(&[0.0, 2.5, 0.3, std::f64::consts::PI]).unwrap();
        let pairs = PairSet::new(vec![(0, 1)], 4).unwrap();
        let kind = SimilarityKind::gaussian(1.0).unwrap();
        let betas = [10.0, 18.0, 32.0, 56.0, 100.0];
        let fit = sharpening_fit(&z, 0, 1, &betas, kind, &pairs).unwrap();
        assert!(
            fit.slope > 0.8 && fit.slope < 1.2,
            "slope = {}",
            fit.slope
        );
    }

    #[test]
    fn equilibrium_quick_tv_sanity() {
        // Short run at moderate beta: the pooled occupation should already
        // be closer to Gibbs than to uniform.
        let spec = LandscapeSpec::symmetric_double_well();
        let icfg = IntegratorConfig::new(EtaLaw::constant(1e-2).unwrap(), 20_000, 7);
        let report = equilibrium_occupation(&spec, 2.0, &icfg, 8, 0.1, 64).unwrap();
        assert!(report.tv < 0.2, "tv = {}", report.tv);
        let uniform = vec![1.0 / 64.0; 64];
        let tv_uniform = total_variation(&report.histogram, &uniform).unwrap();
        assert!(report.tv < tv_uniform);
    }
}
