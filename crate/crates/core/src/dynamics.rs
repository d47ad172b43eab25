//! Annealed SGLD on the product sphere: one explicit Euler-Maruyama step
//! per call, trajectory recording, and seeded ensembles.
//!
//! The update per point is
//!   z' = retract(z, -eta grad + sqrt(2 eta / beta) xi)
//! with xi a tangent-plane standard Gaussian, drawn only when noise is on.
//! Beta is evaluated at the start of the step; one step advances SDE time by
//! eta (cumulative-eta mode, the default) or by one unit (raw step mode).
//!
//! A single trajectory is strictly sequential. Ensembles fan out across
//! chains; chain i derives its stream from (seed, i), so results do not
//! depend on the execution order or the number of worker threads.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{norm, retract, tangent_project, Configuration};
use crate::potential::InfoNceInstance;
use crate::schedules::Schedule;

/// Per-point steps at or beyond this magnitude abort with `StepOverflow`:
/// past a quarter turn the projection retraction badly violates the
/// geodesic approximation.
pub const STEP_OVERFLOW_LIMIT: f64 = std::f64::consts::FRAC_PI_2;

/// Learning-rate law eta_k.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaLaw {
    Constant { eta0: f64 },
    /// eta_k = eta0 / (1 + k)^a with a in (0.5, 1], so that
    /// sum eta = infinity while sum eta^2 stays finite.
    Decaying { eta0: f64, exponent: f64 },
}

impl EtaLaw {
    pub fn constant(eta0: f64) -> Result<Self> {
        if !(eta0 > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "learning rate must be positive, got {eta0}"
            )));
        }
        Ok(Self::Constant { eta0 })
    }

    pub fn decaying(eta0: f64, exponent: f64) -> Result<Self> {
        if !(eta0 > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "learning rate must be positive, got {eta0}"
            )));
        }
        if !(exponent > 0.5 && exponent <= 1.0) {
            return Err(Error::InvalidInstance(format!(
                "decay exponent must lie in (0.5, 1], got {exponent}"
            )));
        }
        Ok(Self::Decaying { eta0, exponent })
    }

    pub fn at(&self, k: u64) -> f64 {
        match *self {
            Self::Constant { eta0 } => eta0,
            Self::Decaying { eta0, exponent } => eta0 / (1.0 + k as f64).powf(exponent),
        }
    }
}

/// How step k maps to the SDE time at which beta is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMode {
    /// t_k = sum of eta over previous steps (standard Euler-Maruyama time).
    CumulativeEta,
    /// t_k = k. Kept for comparison runs; the discrete scheme leaves the
    /// identification open.
    StepIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub eta: EtaLaw,
    pub steps: u64,
    pub record_every: u64,
    pub seed: u64,
    pub noise_on: bool,
    pub time_mode: TimeMode,
}

impl IntegratorConfig {
    pub fn new(eta: EtaLaw, steps: u64, seed: u64) -> Self {
        Self {
            eta,
            steps,
            record_every: 1,
            seed,
            noise_on: true,
            time_mode: TimeMode::CumulativeEta,
        }
    }

    pub fn with_record_every(mut self, record_every: u64) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn with_noise(mut self, noise_on: bool) -> Self {
        self.noise_on = noise_on;
        self
    }

    pub fn with_time_mode(mut self, mode: TimeMode) -> Self {
        self.time_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.record_every < 1 {
            return Err(Error::InvalidInstance(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn eta_at(&self, k: u64) -> f64 {
        self.eta.at(k)
    }

    /// SDE time at which step k evaluates beta. The cumulative-eta branch
    /// sums left to right, matching the drivers' running accumulation bit
    /// for bit.
    pub fn time_at(&self, k: u64) -> f64 {
        match self.time_mode {
            TimeMode::StepIndex => k as f64,
            TimeMode::CumulativeEta => {
                let mut t = 0.0;
                for j in 0..k {
                    t += self.eta.at(j);
                }
                t
            }
        }
    }
}

/// Overflow report from a failed step, before the step index is attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFail {
    pub point: usize,
    pub magnitude: f64,
}

/// A system the annealed integrator can evolve: state space, recorded
/// potential values, and one Euler-Maruyama step at given (eta, beta).
pub trait AnnealSystem: Sync {
    type State: Clone + Send;

    /// Potential value recorded as `loss` (InfoNCE loss at beta, or U for
    /// analytic landscapes).
    fn loss(&self, state: &Self::State, beta: f64) -> f64;

    /// Limiting potential recorded as `u0`.
    fn u0(&self, state: &Self::State) -> f64;

    /// One step. Noise must be drawn from `rng` exactly when `noise_on`.
    fn step(
        &self,
        state: &Self::State,
        eta: f64,
        beta: f64,
        noise_on: bool,
        rng: &mut ChaCha8Rng,
    ) -> std::result::Result<Self::State, StepFail>;
}

impl AnnealSystem for InfoNceInstance {
    type State = Configuration;

    fn loss(&self, state: &Configuration, beta: f64) -> f64 {
        InfoNceInstance::loss(self, state, beta)
    }

    fn u0(&self, state: &Configuration) -> f64 {
        self.limiting_potential(state)
    }

    fn step(
        &self,
        z: &Configuration,
        eta: f64,
        beta: f64,
        noise_on: bool,
        rng: &mut ChaCha8Rng,
    ) -> std::result::Result<Configuration, StepFail> {
        let eval = self.gradient(z, beta);
        let noise_scale = (2.0 * eta / beta).sqrt();
        let d = z.dim();
        let mut points = Vec::with_capacity(z.n());
        for (m, p) in z.points().iter().enumerate() {
            let g = eval.riemannian_grad.component(m);
            let mut step: Vec<f64> = g.iter().map(|x| -eta * x).collect();
            if noise_on {
                let raw: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let xi = tangent_project(p, &raw);
                for (s, x) in step.iter_mut().zip(&xi) {
                    *s += noise_scale * x;
                }
            }
            let magnitude = norm(&step);
            if magnitude >= STEP_OVERFLOW_LIMIT {
                return Err(StepFail {
                    point: m,
                    magnitude,
                });
            }
            // A tangent step never cancels z (|z + step|^2 = 1 + |step|^2),
            // so the retraction cannot fail here.
            let q = retract(p, &step).expect("tangent step within overflow limit");
            points.push(q);
        }
        Ok(Configuration::new(points).expect("point count and dimension preserved"))
    }
}

/// One annealed SGLD step of a configuration under the given potential.
/// Deterministic in (state, k, schedule, config, rng state).
pub fn sgld_step(
    z: &Configuration,
    k: u64,
    sched: &Schedule,
    icfg: &IntegratorConfig,
    potential: &InfoNceInstance,
    rng: &mut ChaCha8Rng,
) -> Result<Configuration> {
    icfg.validate()?;
    let beta = sched.beta_at(icfg.time_at(k));
    let eta = icfg.eta_at(k);
    potential
        .step(z, eta, beta, icfg.noise_on, rng)
        .map_err(|f| Error::StepOverflow {
            step: k,
            point: f.point,
            magnitude: f.magnitude,
        })
}

/// Drives one chain for `icfg.steps` steps, invoking `observe` with the
/// state before any step (k = 0) and after each step (k = 1..=steps).
/// `ControlFlow::Break` stops the chain early. Returns the last state and
/// the number of steps actually taken.
pub fn drive_chain<Sys, F>(
    sys: &Sys,
    z0: Sys::State,
    sched: &Schedule,
    icfg: &IntegratorConfig,
    rng: &mut ChaCha8Rng,
    mut observe: F,
) -> Result<(Sys::State, u64)>
where
    Sys: AnnealSystem,
    F: FnMut(u64, &Sys::State) -> ControlFlow<()>,
{
    icfg.validate()?;
    let mut state = z0;
    if observe(0, &state).is_break() {
        return Ok((state, 0));
    }
    let mut t = 0.0;
    for k in 0..icfg.steps {
        let beta = match icfg.time_mode {
            TimeMode::CumulativeEta => sched.beta_at(t),
            TimeMode::StepIndex => sched.beta_at(k as f64),
        };
        let eta = icfg.eta_at(k);
        state = sys
            .step(&state, eta, beta, icfg.noise_on, rng)
            .map_err(|f| Error::StepOverflow {
                step: k,
                point: f.point,
                magnitude: f.magnitude,
            })?;
        t += eta;
        if observe(k + 1, &state).is_break() {
            return Ok((state, k + 1));
        }
    }
    Ok((state, icfg.steps))
}

/// Time-indexed record of one chain.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    pub times: Vec<u64>,
    pub states: Vec<S>,
    pub beta_values: Vec<f64>,
    pub loss_values: Vec<f64>,
    pub u0_values: Vec<f64>,
}

impl<S> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integrates a chain from `z0`, recording step 0, every `record_every`-th
/// step, and the final step: exactly ceil(steps / record_every) + 1 records.
pub fn run_trajectory<Sys: AnnealSystem>(
    sys: &Sys,
    z0: Sys::State,
    sched: &Schedule,
    icfg: &IntegratorConfig,
) -> Result<Trajectory<Sys::State>> {
    let mut rng = ChaCha8Rng::seed_from_u64(icfg.seed);
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        beta_values: Vec::new(),
        loss_values: Vec::new(),
        u0_values: Vec::new(),
    };
    // Running clock mirroring drive_chain's accumulation, advanced lazily up
    // to each recorded step so beta is reported at the recording time.
    let mut clock_t = 0.0;
    let mut clock_k = 0u64;
    drive_chain(sys, z0, sched, icfg, &mut rng, |k, state| {
        if k % icfg.record_every == 0 || k == icfg.steps {
            while clock_k < k {
                clock_t += icfg.eta_at(clock_k);
                clock_k += 1;
            }
            let beta = match icfg.time_mode {
                TimeMode::CumulativeEta => sched.beta_at(clock_t),
                TimeMode::StepIndex => sched.beta_at(k as f64),
            };
            traj.times.push(k);
            traj.states.push(state.clone());
            traj.beta_values.push(beta);
            traj.loss_values.push(sys.loss(state, beta));
            traj.u0_values.push(sys.u0(state));
        }
        ControlFlow::Continue(())
    })?;
    Ok(traj)
}

/// Outcome of one ensemble chain. Failed chains carry their error instead of
/// aborting the rest of the ensemble.
#[derive(Debug, Clone)]
pub struct ChainOutcome<S> {
    pub index: u32,
    pub final_state: Option<S>,
    /// Classifier label at each requested checkpoint (prefix only if the
    /// chain failed in between).
    pub checkpoint_labels: Vec<i64>,
    /// First step at which the stop rule fired, if one was supplied.
    pub exit_step: Option<u64>,
    pub error: Option<Error>,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult<S> {
    pub master_seed: u64,
    pub outcomes: Vec<ChainOutcome<S>>,
}

impl<S> EnsembleResult<S> {
    pub fn chain_count(&self) -> usize {
        self.outcomes.len()
    }

    /// Final labels of chains that completed, in chain order.
    pub fn final_labels(&self) -> Vec<(u32, i64)> {
        self.outcomes
            .iter()
            .filter_map(|o| {
                o.checkpoint_labels
                    .last()
                    .map(|&l| (o.index, l))
            })
            .collect()
    }
}

/// Runs `m` independent chains. Chain i seeds stream i + 1 of the master
/// seed, draws its start from `init`, evolves for `icfg.steps` steps and
/// evaluates `classifier` at each checkpoint (the final step is always a
/// checkpoint). The result is invariant to chain execution order.
pub fn run_ensemble<Sys, Init, Label>(
    sys: &Sys,
    m: u32,
    init: Init,
    sched: &Schedule,
    icfg: &IntegratorConfig,
    classifier: Label,
    checkpoints: &[u64],
) -> EnsembleResult<Sys::State>
where
    Sys: AnnealSystem,
    Init: Fn(u32, &mut ChaCha8Rng) -> Sys::State + Sync,
    Label: Fn(&Sys::State) -> i64 + Sync,
{
    assert!(m >= 1, "an ensemble needs at least one chain");
    let mut marks: Vec<u64> = checkpoints
        .iter()
        .copied()
        .filter(|&c| c <= icfg.steps)
        .chain(std::iter::once(icfg.steps))
        .collect();
    marks.sort_unstable();
    marks.dedup();

    let outcomes: Vec<ChainOutcome<Sys::State>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(icfg.seed);
            rng.set_stream(i as u64 + 1);
            let z0 = init(i, &mut rng);
            let mut labels = Vec::with_capacity(marks.len());
            let mut next_mark = 0usize;
            let res = drive_chain(sys, z0, sched, icfg, &mut rng, |k, state| {
                while next_mark < marks.len() && marks[next_mark] == k {
                    labels.push(classifier(state));
                    next_mark += 1;
                }
                ControlFlow::Continue(())
            });
            match res {
                Ok((state, _)) => ChainOutcome {
                    index: i,
                    final_state: Some(state),
                    checkpoint_labels: labels,
                    exit_step: None,
                    error: None,
                },
                Err(e) => ChainOutcome {
                    index: i,
                    final_state: None,
                    checkpoint_labels: labels,
                    exit_step: None,
                    error: Some(e),
                },
            }
        })
        .collect();

    EnsembleResult {
        master_seed: icfg.seed,
        outcomes,
    }
}
