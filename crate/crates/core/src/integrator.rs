//! Euler–Maruyama time stepping of the semi-discretized system.
//!
//! One step of the scheme is
//!
//! ```text
//! u' = clamp_[0,1]( u + [A u + 1/2 B u^2] dt + n^d sigma(u) .* dF )
//! ```
//!
//! with `dF` a correlated cell increment from the [`crate::noise`] model.
//! The continuous-time system keeps its state in `[0,1]` exactly; the
//! explicit scheme cannot, so every step projects back onto `[0,1]` and logs
//! the pre-clamp excursion (count and largest magnitude). Excursions vanish
//! as `dt` shrinks, which is what the range-invariant test suite measures.
//!
//! Replicas of an ensemble are independent: replica `r` draws from stream
//! `r` of a ChaCha cipher keyed by the master seed, so an ensemble is
//! reproducible under any execution order, parallel or not.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::coefficients::SigmaCoefficient;
use crate::exec;
use crate::grid::GridSpec;
use crate::noise::{CorrelationKernel, NoiseModel};
use crate::operators::{build_gradient, build_laplacian, LatticeField, OperatorMatrix};
use crate::{Error, Result};

use std::sync::Arc;

/// Hard cap on `N x snapshots` per trajectory.
const MAX_RECORDED_VALUES: usize = 1 << 26;

/// Which part of the drift the stepper applies. `LaplacianOnly` deliberately
/// drops the nonlinear transport term; it exists as a negative control for
/// the martingale diagnostics and is recorded in the config echo.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriftMode {
    #[default]
    Full,
    LaplacianOnly,
}

impl DriftMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            DriftMode::Full => "full",
            DriftMode::LaplacianOnly => "laplacian-only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(DriftMode::Full),
            "laplacian-only" => Ok(DriftMode::LaplacianOnly),
            _ => Err(Error::Parameter(format!(
                "unknown drift mode `{s}`; expected full or laplacian-only"
            ))),
        }
    }
}

/// Complete description of a simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub replicas: usize,
    /// Correlation kernel registry spec, e.g. `constant:1`.
    pub kernel: String,
    /// Diffusion coefficient registry spec, e.g. `stepping-stone`.
    pub sigma: String,
    /// Initial condition registry spec, e.g. `constant:0.5`.
    pub initial: String,
    /// Steps between stored snapshots.
    pub record_stride: usize,
    /// Quadrature refinement of the cell covariance.
    pub quad_refine: usize,
    /// Accept a dt above the stability ceiling `1/(4 d n^2)`.
    pub allow_cfl_violation: bool,
    pub drift_mode: DriftMode,
}

impl SimConfig {
    /// A config with the registry defaults for a given grid and horizon.
    pub fn new(grid: GridSpec, dt: f64, t_end: f64) -> Self {
        SimConfig {
            grid,
            dt,
            t_end,
            seed: 0,
            replicas: 1,
            kernel: "constant:1".into(),
            sigma: "stepping-stone".into(),
            initial: "constant:0.5".into(),
            record_stride: 1,
            quad_refine: 4,
            allow_cfl_violation: false,
            drift_mode: DriftMode::Full,
        }
    }

    /// Explicit-scheme stability ceiling `1/(4 d n^2)`.
    pub fn cfl_ceiling(&self) -> f64 {
        1.0 / (4.0
            * self.grid.dim() as f64
            * (self.grid.resolution() * self.grid.resolution()) as f64)
    }

    /// Number of whole steps covering the horizon.
    pub fn steps(&self) -> u64 {
        if self.t_end == 0.0 {
            0
        } else {
            (self.t_end / self.dt).round().max(1.0) as u64
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::Parameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !self.t_end.is_finite() || self.t_end < 0.0 {
            return Err(Error::Parameter(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.t_end > 0.0 && self.dt > self.t_end * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "dt = {} exceeds the horizon t_end = {}",
                self.dt, self.t_end
            )));
        }
        if !self.allow_cfl_violation && self.dt > self.cfl_ceiling() * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "dt = {} above the stability ceiling 1/(4 d n^2) = {:.3e}; \
                 pass allow_cfl_violation to override",
                self.dt,
                self.cfl_ceiling()
            )));
        }
        if self.replicas < 1 {
            return Err(Error::Parameter("replicas must be at least 1".into()));
        }
        if self.record_stride < 1 {
            return Err(Error::Parameter("record_stride must be at least 1".into()));
        }
        if self.quad_refine < 1 {
            return Err(Error::Parameter("quad_refine must be at least 1".into()));
        }
        let snapshots = (self.steps() / self.record_stride as u64 + 2) as usize;
        if self.grid.node_count().saturating_mul(snapshots) > MAX_RECORDED_VALUES {
            return Err(Error::Capacity(format!(
                "recording {} nodes x {snapshots} snapshots exceeds the budget; \
                 raise record_stride",
                self.grid.node_count()
            )));
        }
        CorrelationKernel::parse(&self.kernel)?;
        SigmaCoefficient::parse(&self.sigma)?;
        InitialCondition::parse(&self.initial)?;
        Ok(())
    }

    /// Canonical `key=value` echo of every field, one per line.
    pub fn echo(&self) -> String {
        format!(
            "dim={}\nn={}\ndt={}\nt_end={}\nseed={}\nreplicas={}\nkernel={}\nsigma={}\n\
             initial={}\nrecord_stride={}\nquad_refine={}\nallow_cfl_violation={}\ndrift_mode={}\n",
            self.grid.dim(),
            self.grid.resolution(),
            self.dt,
            self.t_end,
            self.seed,
            self.replicas,
            self.kernel,
            self.sigma,
            self.initial,
            self.record_stride,
            self.quad_refine,
            self.allow_cfl_violation,
            self.drift_mode.as_str(),
        )
    }

    /// FNV-1a hash of the canonical echo; stamped on every trajectory.
    pub fn fingerprint(&self) -> u64 {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in self.echo().bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash
    }
}

type PointFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Continuous initial profile `D -> [0,1]`.
#[derive(Clone)]
pub struct InitialCondition {
    eval: Arc<PointFn>,
    name: String,
}

impl std::fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InitialCondition")
            .field("name", &self.name)
            .finish()
    }
}

impl InitialCondition {
    /// Constant profile `u0 = c`.
    pub fn constant(c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Parameter(format!(
                "constant initial value must lie in [0,1], got {c}"
            )));
        }
        Ok(InitialCondition {
            eval: Arc::new(move |_| c),
            name: format!("constant:{c}"),
        })
    }

    /// Product-sine bump `prod_j sin(pi x_j)`, zero on the boundary.
    pub fn product_sine() -> Self {
        InitialCondition {
            eval: Arc::new(|x| {
                x.iter()
                    .map(|&v| (std::f64::consts::PI * v).sin())
                    .product()
            }),
            name: "product-sine".into(),
        }
    }

    /// Caller-supplied profile; node values are validated when sampling.
    pub fn custom(name: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        InitialCondition {
            eval: Arc::new(f),
            name: name.to_string(),
        }
    }

    /// Parses `constant:<c>` or `product-sine`.
    pub fn parse(spec: &str) -> Result<Self> {
        if spec == "product-sine" {
            return Ok(Self::product_sine());
        }
        if let Some(arg) = spec.strip_prefix("constant:") {
            let c = arg.parse::<f64>().map_err(|_| {
                Error::Parameter(format!("cannot parse initial level from `{spec}`"))
            })?;
            return Self::constant(c);
        }
        Err(Error::Parameter(format!(
            "unknown initial condition `{spec}`; expected constant:<c> or product-sine"
        )))
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Node samples; every value must lie in `[0,1]`.
    pub fn sample(&self, grid: GridSpec) -> Result<LatticeField> {
        let field = LatticeField::from_fn(grid, |x| (self.eval)(x))?;
        for (i, &v) in field.values().iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!(
                    "initial condition `{}` takes value {v} outside [0,1] at node {}",
                    self.name,
                    i + 1
                )));
            }
        }
        Ok(field)
    }
}

/// Clamp activity of a single step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    /// Components clamped this step.
    pub clamped: u32,
    /// Largest pre-clamp excursion outside `[0,1]`.
    pub max_excursion: f64,
}

/// One step with clamp activity, stored sparsely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampEvent {
    pub step: u64,
    pub clamped: u32,
    pub max_excursion: f64,
}

/// Clamp activity of a whole trajectory; steps without events are implicit.
#[derive(Debug, Clone, Default)]
pub struct ClampLog {
    total_steps: u64,
    events: Vec<ClampEvent>,
}

impl ClampLog {
    fn record(&mut self, step: u64, stats: StepStats) {
        if stats.clamped > 0 {
            self.events.push(ClampEvent {
                step,
                clamped: stats.clamped,
                max_excursion: stats.max_excursion,
            });
        }
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps
    }

    /// Steps on which at least one component was clamped.
    pub fn events(&self) -> &[ClampEvent] {
        &self.events
    }

    /// Total clamped components over the run.
    pub fn total_clamped(&self) -> u64 {
        self.events.iter().map(|e| e.clamped as u64).sum()
    }

    /// Largest pre-clamp excursion over the run.
    pub fn max_excursion(&self) -> f64 {
        self.events
            .iter()
            .map(|e| e.max_excursion)
            .fold(0.0, f64::max)
    }

    /// Fraction of steps with at least one clamp event.
    pub fn event_fraction(&self) -> f64 {
        if self.total_steps == 0 {
            0.0
        } else {
            self.events.len() as f64 / self.total_steps as f64
        }
    }
}

/// Recorded path of one replica.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: GridSpec,
    replica: usize,
    times: Vec<f64>,
    states: Vec<LatticeField>,
    clamp: ClampLog,
    fingerprint: u64,
}

impl Trajectory {
    /// Wraps an externally produced path (synthetic states, loaded records).
    pub fn from_parts(grid: GridSpec, times: Vec<f64>, states: Vec<LatticeField>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(Error::Shape(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::Parameter("trajectory must start at t = 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("times must be strictly increasing".into()));
        }
        if states.iter().any(|s| s.grid() != grid) {
            return Err(Error::Shape("state grids do not match".into()));
        }
        Ok(Trajectory {
            grid,
            replica: 0,
            times,
            states,
            clamp: ClampLog::default(),
            fingerprint: 0,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn replica(&self) -> usize {
        self.replica
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[LatticeField] {
        &self.states
    }

    pub fn final_state(&self) -> &LatticeField {
        self.states.last().expect("trajectory holds u0 at least")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory holds t=0 at least")
    }

    pub fn clamp_log(&self) -> &ClampLog {
        &self.clamp
    }

    /// Fingerprint of the config that produced this trajectory.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

/// Generator for replica `r`: stream `r` of a ChaCha cipher keyed by `seed`.
pub fn replica_rng(seed: u64, replica: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

struct StepBuffers {
    lap: Vec<f64>,
    squared: Vec<f64>,
    grad: Vec<f64>,
    normals: Vec<f64>,
    noise: Vec<f64>,
}

impl StepBuffers {
    fn new(count: usize) -> Self {
        StepBuffers {
            lap: vec![0.0; count],
            squared: vec![0.0; count],
            grad: vec![0.0; count],
            normals: vec![0.0; count],
            noise: vec![0.0; count],
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn step_in_place(
    values: &mut [f64],
    laplacian: &OperatorMatrix,
    gradient: &OperatorMatrix,
    noise: &NoiseModel,
    sigma: &SigmaCoefficient,
    dt: f64,
    drift_mode: DriftMode,
    step_index: u64,
    buffers: &mut StepBuffers,
    rng: &mut impl Rng,
) -> Result<StepStats> {
    let amplification = noise.grid().volume_scale();
    laplacian.apply_slice(values, &mut buffers.lap);
    if drift_mode == DriftMode::Full {
        for (s, &v) in buffers.squared.iter_mut().zip(values.iter()) {
            *s = v * v;
        }
        gradient.apply_slice(&buffers.squared, &mut buffers.grad);
    } else {
        buffers.grad.fill(0.0);
    }
    noise.sample_increment_into(dt, rng, &mut buffers.normals, &mut buffers.noise);

    let mut clamped = 0u32;
    let mut max_excursion = 0.0f64;
    for i in 0..values.len() {
        let drift = buffers.lap[i] + 0.5 * buffers.grad[i];
        let proposal =
            values[i] + dt * drift + amplification * sigma.evaluate(values[i]) * buffers.noise[i];
        if !proposal.is_finite() {
            return Err(Error::BlowUp {
                step: step_index,
                time: step_index as f64 * dt,
                detail: format!("component {} became non-finite", i + 1),
            });
        }
        let excursion = if proposal < 0.0 {
            -proposal
        } else if proposal > 1.0 {
            proposal - 1.0
        } else {
            0.0
        };
        if excursion > 0.0 {
            clamped += 1;
            max_excursion = max_excursion.max(excursion);
        }
        values[i] = proposal.clamp(0.0, 1.0);
    }
    Ok(StepStats {
        clamped,
        max_excursion,
    })
}

/// One Euler–Maruyama step from a state in `[0,1]^N`.
pub fn step(
    u: &LatticeField,
    laplacian: &OperatorMatrix,
    gradient: &OperatorMatrix,
    noise: &NoiseModel,
    sigma: &SigmaCoefficient,
    dt: f64,
    rng: &mut impl Rng,
) -> Result<(LatticeField, StepStats)> {
    if laplacian.grid() != u.grid() || gradient.grid() != u.grid() || noise.grid() != u.grid() {
        return Err(Error::Shape(
            "state, operators and noise model must share a grid".into(),
        ));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    let mut values = u.values().to_vec();
    let mut buffers = StepBuffers::new(values.len());
    let stats = step_in_place(
        &mut values,
        laplacian,
        gradient,
        noise,
        sigma,
        dt,
        DriftMode::Full,
        0,
        &mut buffers,
        rng,
    )?;
    Ok((LatticeField::new(u.grid(), values)?, stats))
}

/// Shared immutable inputs of an ensemble run: operators, noise model,
/// coefficient and sampled initial state.
pub struct SimContext {
    config: SimConfig,
    laplacian: OperatorMatrix,
    gradient: OperatorMatrix,
    noise: NoiseModel,
    sigma: SigmaCoefficient,
    initial_state: LatticeField,
    fingerprint: u64,
}

impl SimContext {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid;
        let laplacian = build_laplacian(&grid)?;
        let gradient = build_gradient(&grid)?;
        let kernel = CorrelationKernel::parse(&config.kernel)?;
        let noise = NoiseModel::build(&kernel, &grid, config.quad_refine)?;
        let sigma = SigmaCoefficient::parse(&config.sigma)?;
        let initial_state = InitialCondition::parse(&config.initial)?.sample(grid)?;

        // the scheme multiplies sigma by n^d while increments have standard
        // deviation at most sqrt(sup f) n^-d per unit time; verify the
        // cancellation once per run
        let amp2 = grid.volume_scale() * grid.volume_scale();
        for k in 0..grid.node_count() {
            let scaled = amp2 * noise.covariance()[(k, k)];
            if scaled > kernel.sup_bound() * (1.0 + 1e-9) {
                return Err(Error::Kernel(format!(
                    "noise scaling check failed at node {}: n^2d C_kk = {scaled} > sup f",
                    k + 1
                )));
            }
        }
        Ok(SimContext {
            config: config.clone(),
            laplacian,
            gradient,
            noise,
            sigma,
            initial_state,
            fingerprint: config.fingerprint(),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn sigma(&self) -> &SigmaCoefficient {
        &self.sigma
    }

    pub fn laplacian(&self) -> &OperatorMatrix {
        &self.laplacian
    }

    pub fn gradient(&self) -> &OperatorMatrix {
        &self.gradient
    }

    pub fn initial_state(&self) -> &LatticeField {
        &self.initial_state
    }

    /// Runs one replica from `u0` to the horizon, recording every
    /// `record_stride` steps plus the final state.
    pub fn run_replica(&self, replica: usize) -> Result<Trajectory> {
        let cfg = &self.config;
        let grid = cfg.grid;
        let steps = cfg.steps();
        let stride = cfg.record_stride as u64;
        let mut rng = replica_rng(cfg.seed, replica);
        let mut values = self.initial_state.values().to_vec();
        let mut buffers = StepBuffers::new(values.len());
        let mut clamp = ClampLog {
            total_steps: steps,
            events: Vec::new(),
        };
        let mut times = Vec::with_capacity((steps / stride + 2) as usize);
        let mut states = Vec::with_capacity((steps / stride + 2) as usize);
        times.push(0.0);
        states.push(self.initial_state.clone());
        for k in 1..=steps {
            let stats = step_in_place(
                &mut values,
                &self.laplacian,
                &self.gradient,
                &self.noise,
                &self.sigma,
                cfg.dt,
                cfg.drift_mode,
                k,
                &mut buffers,
                &mut rng,
            )?;
            clamp.record(k, stats);
            if k % stride == 0 || k == steps {
                times.push(k as f64 * cfg.dt);
                states.push(LatticeField::new(grid, values.clone())?);
            }
        }
        Ok(Trajectory {
            grid,
            replica,
            times,
            states,
            clamp,
            fingerprint: self.fingerprint,
        })
    }
}

impl SimContext {
    /// Runs every configured replica; fans out over the rayon pool when the
    /// `parallel` feature is enabled, and the result order is the replica
    /// order either way.
    pub fn run_ensemble(&self) -> Result<Vec<Trajectory>> {
        exec::map_indexed(self.config.replicas, |r| self.run_replica(r))
            .into_iter()
            .collect()
    }
}

/// Runs the configured ensemble. See [`SimContext::run_ensemble`].
pub fn simulate(config: &SimConfig) -> Result<Vec<Trajectory>> {
    SimContext::new(config)?.run_ensemble()
}

/// Single-thread variant of [`simulate`], the comparison baseline for the
/// benches.
pub fn simulate_sequential(config: &SimConfig) -> Result<Vec<Trajectory>> {
    let context = SimContext::new(config)?;
    exec::map_indexed_seq(config.replicas, |r| context.run_replica(r))
        .into_iter()
        .collect()
}

/// Classical fourth-order reference solution of the deterministic system
/// `u' = A u (+ 1/2 B u^2 when `gradient` is given)`, no clamping, recording
/// every `record_every` steps plus the final state.
pub fn ode_reference(
    u0: &LatticeField,
    laplacian: &OperatorMatrix,
    gradient: Option<&OperatorMatrix>,
    dt: f64,
    t_end: f64,
    record_every: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::Parameter(format!(
            "need dt > 0 and t_end >= 0, got dt={dt}, t_end={t_end}"
        )));
    }
    if record_every < 1 {
        return Err(Error::Parameter("record_every must be at least 1".into()));
    }
    let grid = u0.grid();
    let count = grid.node_count();
    let steps = if t_end == 0.0 {
        0
    } else {
        (t_end / dt).round().max(1.0) as u64
    };
    let rhs = |state: &[f64], out: &mut [f64], squared: &mut [f64], grad_out: &mut [f64]| {
        laplacian.apply_slice(state, out);
        if let Some(b) = gradient {
            for (s, &v) in squared.iter_mut().zip(state.iter()) {
                *s = v * v;
            }
            b.apply_slice(squared, grad_out);
            for (o, g) in out.iter_mut().zip(grad_out.iter()) {
                *o += 0.5 * g;
            }
        }
    };
    let mut values = u0.values().to_vec();
    let mut k1 = vec![0.0; count];
    let mut k2 = vec![0.0; count];
    let mut k3 = vec![0.0; count];
    let mut k4 = vec![0.0; count];
    let mut stage = vec![0.0; count];
    let mut squared = vec![0.0; count];
    let mut grad_out = vec![0.0; count];
    let mut times = vec![0.0];
    let mut states = vec![u0.clone()];
    for step_index in 1..=steps {
        rhs(&values, &mut k1, &mut squared, &mut grad_out);
        for i in 0..count {
            stage[i] = values[i] + 0.5 * dt * k1[i];
        }
        rhs(&stage, &mut k2, &mut squared, &mut grad_out);
        for i in 0..count {
            stage[i] = values[i] + 0.5 * dt * k2[i];
        }
        rhs(&stage, &mut k3, &mut squared, &mut grad_out);
        for i in 0..count {
            stage[i] = values[i] + dt * k3[i];
        }
        rhs(&stage, &mut k4, &mut squared, &mut grad_out);
        for i in 0..count {
            values[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if !values[i].is_finite() {
                return Err(Error::BlowUp {
                    step: step_index,
                    time: step_index as f64 * dt,
                    detail: format!("reference solver component {} non-finite", i + 1),
                });
            }
        }
        if step_index % record_every as u64 == 0 || step_index == steps {
            times.push(step_index as f64 * dt);
            states.push(LatticeField::new(grid, values.clone())?);
        }
    }
    Ok(Trajectory {
        grid,
        replica: 0,
        times,
        states,
        clamp: ClampLog {
            total_steps: steps,
            events: Vec::new(),
        },
        fingerprint: 0,
    })
}

/// Deterministic reference for a zero-sigma config: fourth-order integration
/// at `dt/100`, recorded on the same time grid the Euler run would use.
pub fn mild_oracle(config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let sigma = SigmaCoefficient::parse(&config.sigma)?;
    if !sigma.is_zero() {
        return Err(Error::Parameter(
            "the deterministic oracle requires sigma = zero".into(),
        ));
    }
    let grid = config.grid;
    let laplacian = build_laplacian(&grid)?;
    let gradient = build_gradient(&grid)?;
    let u0 = InitialCondition::parse(&config.initial)?.sample(grid)?;
    let refinement = 100usize;
    let mut trajectory = ode_reference(
        &u0,
        &laplacian,
        Some(&gradient),
        config.dt / refinement as f64,
        config.t_end,
        config.record_stride * refinement,
    )?;
    trajectory.fingerprint = config.fingerprint();
    Ok(trajectory)
}
