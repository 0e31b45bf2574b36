//! Martingale-problem verification and convergence diagnostics.
//!
//! For a smooth test function `phi` vanishing on the boundary, the tested
//! process
//!
//! ```text
//! M(t) = <u(t), phi> - <u(0), phi>
//!        - int_0^t <u(s), A phi> ds + 1/2 int_0^t <u(s)^2, G phi> ds
//! ```
//!
//! (node averages `<v, w> = n^-d sum v w`, `A` the discrete Laplacian, `G`
//! the adjoint-side gradient of [`crate::operators::apply_gradient_adjoint`])
//! is, in continuous time, exactly the stochastic integral of the noise
//! term, hence a martingale with quadratic variation
//!
//! ```text
//! <M>(t) = int_0^t  w(s)^T C w(s)  ds,    w_k(s) = phi_k sigma(u_k(s)),
//! ```
//!
//! with `C` the cell covariance. Time discretization and the trapezoid
//! quadrature over snapshots add O(dt) bias, so the ensemble test uses
//! thresholds that absorb both statistical and discretization error:
//! `|z| <= 3` on the mean and an empirical/predicted quadratic-variation
//! ratio in `[0.8, 1.2]`.

use std::sync::Arc;

use crate::coefficients::SigmaCoefficient;
use crate::exec;
use crate::grid::GridSpec;
use crate::integrator::Trajectory;
use crate::noise::NoiseModel;
use crate::operators::{apply_gradient_adjoint, apply_laplacian, LatticeField};
use crate::stats::{self, CompensatedSum};
use crate::{Error, Result};

/// Mean z-score accepted by the ensemble test.
pub const Z_LIMIT: f64 = 3.0;
/// Accepted band of empirical vs predicted quadratic variation.
pub const QV_BAND: (f64, f64) = (0.8, 1.2);
/// Fewest replicas with meaningful test power.
pub const MIN_REPLICAS: usize = 100;
/// Fewest samples per side of the two-sample statistic.
pub const MIN_KS_SAMPLES: usize = 200;
/// Residual magnitude a collapsed (deterministic) ensemble may carry and
/// still count as zero: the time-discretization bias of the statistic is
/// O(dt) and stays well under this for any stable step size.
pub const DEGENERATE_M_TOL: f64 = 3e-3;

type PointFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Twice continuously differentiable test function vanishing on the boundary.
#[derive(Clone)]
pub struct TestFunction {
    eval: Arc<PointFn>,
    name: String,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .finish()
    }
}

impl TestFunction {
    /// `prod_j sin(pi x_j)`.
    pub fn product_sine() -> Self {
        TestFunction {
            eval: Arc::new(|x| {
                x.iter()
                    .map(|&v| (std::f64::consts::PI * v).sin())
                    .product()
            }),
            name: "product-sine".into(),
        }
    }

    /// `prod_j x_j (1 - x_j)`.
    pub fn product_quadratic() -> Self {
        TestFunction {
            eval: Arc::new(|x| x.iter().map(|&v| v * (1.0 - v)).product()),
            name: "product-quadratic".into(),
        }
    }

    /// Caller-supplied function; boundary vanishing is checked on sampled
    /// boundary points the first time node samples are taken.
    pub fn custom(name: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        TestFunction {
            eval: Arc::new(f),
            name: name.to_string(),
        }
    }

    /// Parses `product-sine` or `product-quadratic`.
    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "product-sine" => Ok(Self::product_sine()),
            "product-quadratic" => Ok(Self::product_quadratic()),
            _ => Err(Error::Parameter(format!(
                "unknown test function `{spec}`; expected product-sine or product-quadratic"
            ))),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Checks `|phi| <= 1e-12` on a sampled grid of every boundary face.
    pub fn validate_boundary(&self, dim: usize) -> Result<()> {
        let levels = [0.0, 0.25, 0.5, 0.75, 1.0];
        let mut point = vec![0.0; dim];
        let check = |point: &[f64]| -> Result<()> {
            let v = (self.eval)(point);
            if v.abs() > 1e-12 {
                return Err(Error::Parameter(format!(
                    "test function `{}` must vanish on the boundary; got {v} at {point:?}",
                    self.name
                )));
            }
            Ok(())
        };
        for axis in 0..dim {
            for side in [0.0, 1.0] {
                let others = dim - 1;
                let combos = levels.len().pow(others as u32);
                for combo in 0..combos {
                    let mut rem = combo;
                    for (slot, value) in point.iter_mut().enumerate() {
                        if slot == axis {
                            *value = side;
                        } else {
                            *value = levels[rem % levels.len()];
                            rem /= levels.len();
                        }
                    }
                    check(&point)?;
                }
            }
        }
        Ok(())
    }

    /// Samples the function at the interior nodes after validating boundary
    /// vanishing.
    pub fn node_samples(&self, grid: GridSpec) -> Result<Vec<f64>> {
        self.validate_boundary(grid.dim())?;
        Ok(LatticeField::from_fn(grid, |x| (self.eval)(x))?.into_values())
    }
}

/// The tested functional `<u, phi> = n^-d sum_k u_k phi_k` of one state.
pub fn field_functional(state: &LatticeField, phi: &TestFunction) -> Result<f64> {
    let weights = phi.node_samples(state.grid())?;
    Ok(weighted_average(state.values(), &weights, state.grid()))
}

fn weighted_average(values: &[f64], weights: &[f64], grid: GridSpec) -> f64 {
    let mut acc = CompensatedSum::new();
    for (v, w) in values.iter().zip(weights) {
        acc.add(v * w);
    }
    acc.value() * grid.spacing().powi(grid.dim() as i32)
}

/// Test-function data shared across replicas.
struct PhiData {
    nodes: Vec<f64>,
    laplacian_phi: Vec<f64>,
    gradient_phi: Vec<f64>,
    cell_volume: f64,
}

impl PhiData {
    fn new(grid: GridSpec, phi: &TestFunction) -> Result<Self> {
        let nodes = phi.node_samples(grid)?;
        let field = LatticeField::new(grid, nodes.clone())?;
        Ok(PhiData {
            laplacian_phi: apply_laplacian(&field).into_values(),
            gradient_phi: apply_gradient_adjoint(&field).into_values(),
            nodes,
            cell_volume: grid.spacing().powi(grid.dim() as i32),
        })
    }
}

fn check_snapshot_density(traj: &Trajectory) -> Result<()> {
    let times = traj.times();
    if times.len() < 2 {
        return Ok(());
    }
    let horizon = traj.t_end();
    let max_gap = times.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
    if max_gap > horizon / 50.0 * (1.0 + 1e-9) {
        return Err(Error::Resolution(format!(
            "snapshot gap {max_gap} exceeds t_end/50 = {}; lower record_stride",
            horizon / 50.0
        )));
    }
    Ok(())
}

fn martingale_series(traj: &Trajectory, phi: &PhiData) -> Vec<f64> {
    let times = traj.times();
    let mut tested = Vec::with_capacity(times.len());
    let mut drift_lap = Vec::with_capacity(times.len());
    let mut drift_grad = Vec::with_capacity(times.len());
    for state in traj.states() {
        let values = state.values();
        let mut t = CompensatedSum::new();
        let mut l = CompensatedSum::new();
        let mut g = CompensatedSum::new();
        for i in 0..values.len() {
            t.add(values[i] * phi.nodes[i]);
            l.add(values[i] * phi.laplacian_phi[i]);
            g.add(values[i] * values[i] * phi.gradient_phi[i]);
        }
        tested.push(t.value() * phi.cell_volume);
        drift_lap.push(l.value() * phi.cell_volume);
        drift_grad.push(g.value() * phi.cell_volume);
    }
    let int_lap = stats::cumulative_trapezoid(times, &drift_lap);
    let int_grad = stats::cumulative_trapezoid(times, &drift_grad);
    (0..times.len())
        .map(|i| tested[i] - tested[0] - int_lap[i] + 0.5 * int_grad[i])
        .collect()
}

/// The martingale statistic of one trajectory: `(t, M(t))` at every snapshot.
pub fn martingale_statistic(traj: &Trajectory, phi: &TestFunction) -> Result<Vec<(f64, f64)>> {
    check_snapshot_density(traj)?;
    let data = PhiData::new(traj.grid(), phi)?;
    let series = martingale_series(traj, &data);
    Ok(traj.times().iter().cloned().zip(series).collect())
}

fn predicted_qv_series(
    traj: &Trajectory,
    phi: &PhiData,
    noise: &NoiseModel,
    sigma: &SigmaCoefficient,
) -> Result<Vec<f64>> {
    let covariance = noise.covariance();
    let count = phi.nodes.len();
    let scale = covariance.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut integrand = Vec::with_capacity(traj.times().len());
    let mut weights = vec![0.0; count];
    for state in traj.states() {
        for (w, (&u, &p)) in weights
            .iter_mut()
            .zip(state.values().iter().zip(&phi.nodes))
        {
            *w = p * sigma.evaluate(u);
        }
        let mut quad = 0.0;
        for k in 0..count {
            let mut row = 0.0;
            for j in 0..count {
                row += covariance[(k, j)] * weights[j];
            }
            quad += weights[k] * row;
        }
        let weight_norm: f64 = weights.iter().map(|w| w * w).sum();
        if quad < -1e-12 * scale * weight_norm.max(1.0) {
            return Err(Error::Numeric(format!(
                "quadratic-variation integrand {quad} negative beyond tolerance"
            )));
        }
        integrand.push(quad.max(0.0));
    }
    Ok(stats::cumulative_trapezoid(traj.times(), &integrand))
}

/// Predicted quadratic variation `<M>(t)` of the martingale statistic along
/// one trajectory: `(t, <M>(t))` at every snapshot.
pub fn predicted_qv(
    traj: &Trajectory,
    phi: &TestFunction,
    noise: &NoiseModel,
    sigma: &SigmaCoefficient,
) -> Result<Vec<(f64, f64)>> {
    if noise.grid() != traj.grid() {
        return Err(Error::Shape(
            "noise model and trajectory built for different grids".into(),
        ));
    }
    check_snapshot_density(traj)?;
    let data = PhiData::new(traj.grid(), phi)?;
    let series = predicted_qv_series(traj, &data, noise, sigma)?;
    Ok(traj.times().iter().cloned().zip(series).collect())
}

/// Ensemble summary of the martingale test at the checkpoint times.
#[derive(Debug, Clone)]
pub struct MartingaleReport {
    pub times: Vec<f64>,
    pub mean_m: Vec<f64>,
    pub se_m: Vec<f64>,
    /// Ensemble mean of the per-path predicted quadratic variation.
    pub qv_predicted: Vec<f64>,
    /// Ensemble mean of `M(t)^2`.
    pub qv_empirical: Vec<f64>,
    /// `mean / se`; `None` when the ensemble spread is numerically zero.
    pub z_scores: Vec<Option<f64>>,
    /// `qv_empirical / qv_predicted`; `None` when the prediction is zero.
    pub qv_ratios: Vec<Option<f64>>,
    pub replicas: usize,
    /// Set when the ensemble collapsed to a deterministic path.
    pub degenerate: bool,
    pub pass: bool,
}

impl MartingaleReport {
    /// Structured text with one row per checkpoint and a machine-readable
    /// `RESULT` line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# martingale test replicas={} degenerate={}\n",
            self.replicas, self.degenerate
        ));
        out.push_str("# t mean_m se_m z qv_empirical qv_predicted qv_ratio\n");
        for i in 0..self.times.len() {
            let z = self.z_scores[i]
                .map(|v| v.to_string())
                .unwrap_or_else(|| "NA".into());
            let ratio = self.qv_ratios[i]
                .map(|v| v.to_string())
                .unwrap_or_else(|| "NA".into());
            out.push_str(&format!(
                "checkpoint {} {} {} {} {} {} {}\n",
                self.times[i],
                self.mean_m[i],
                self.se_m[i],
                z,
                self.qv_empirical[i],
                self.qv_predicted[i],
                ratio
            ));
        }
        out.push_str(&format!(
            "RESULT {}\n",
            if self.pass { "PASS" } else { "FAIL" }
        ));
        out
    }
}

/// Runs the ensemble martingale test: at every checkpoint the mean of `M`
/// must sit within [`Z_LIMIT`] standard errors of zero and the ratio of
/// empirical to predicted quadratic variation within [`QV_BAND`].
pub fn martingale_test(
    trajectories: &[Trajectory],
    phi: &TestFunction,
    noise: &NoiseModel,
    sigma: &SigmaCoefficient,
    checkpoints: &[f64],
) -> Result<MartingaleReport> {
    if trajectories.len() < MIN_REPLICAS {
        return Err(Error::StatisticalPower(format!(
            "{} replicas; the martingale test needs at least {MIN_REPLICAS}",
            trajectories.len()
        )));
    }
    if checkpoints.is_empty() {
        return Err(Error::Parameter("no checkpoint times given".into()));
    }
    let first = &trajectories[0];
    let grid = first.grid();
    if noise.grid() != grid {
        return Err(Error::Shape(
            "noise model and ensemble built for different grids".into(),
        ));
    }
    for traj in trajectories {
        if traj.grid() != grid || traj.times() != first.times() {
            return Err(Error::Shape(
                "ensemble trajectories disagree on grid or snapshot times".into(),
            ));
        }
    }
    check_snapshot_density(first)?;
    let times = first.times();
    let horizon = first.t_end();
    let mut indices = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        if !(cp > 0.0 && cp <= horizon * (1.0 + 1e-9)) {
            return Err(Error::Parameter(format!(
                "checkpoint {cp} outside (0, {horizon}]"
            )));
        }
        let idx = times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - cp).abs().total_cmp(&(b.1 - cp).abs()))
            .map(|(i, _)| i)
            .expect("non-empty times");
        indices.push(idx);
    }

    let data = PhiData::new(grid, phi)?;
    let per_replica: Vec<Result<(Vec<f64>, Vec<f64>)>> =
        exec::map_indexed(trajectories.len(), |r| {
            let traj = &trajectories[r];
            let m = martingale_series(traj, &data);
            let qv = predicted_qv_series(traj, &data, noise, sigma)?;
            Ok((
                indices.iter().map(|&i| m[i]).collect(),
                indices.iter().map(|&i| qv[i]).collect(),
            ))
        });

    let count = indices.len();
    let replicas = trajectories.len();
    let mut m_at: Vec<Vec<f64>> = (0..count).map(|_| Vec::with_capacity(replicas)).collect();
    let mut qv_at: Vec<Vec<f64>> = (0..count).map(|_| Vec::with_capacity(replicas)).collect();
    for entry in per_replica {
        let (m, qv) = entry?;
        for i in 0..count {
            m_at[i].push(m[i]);
            qv_at[i].push(qv[i]);
        }
    }

    let mut report = MartingaleReport {
        times: indices.iter().map(|&i| times[i]).collect(),
        mean_m: Vec::with_capacity(count),
        se_m: Vec::with_capacity(count),
        qv_predicted: Vec::with_capacity(count),
        qv_empirical: Vec::with_capacity(count),
        z_scores: Vec::with_capacity(count),
        qv_ratios: Vec::with_capacity(count),
        replicas,
        degenerate: false,
        pass: true,
    };
    for i in 0..count {
        let mean = stats::mean(&m_at[i]);
        let se = stats::standard_error(&m_at[i]);
        let squares: Vec<f64> = m_at[i].iter().map(|v| v * v).collect();
        let empirical = stats::mean(&squares);
        let predicted = stats::mean(&qv_at[i]);
        let degenerate_here = !(se > 1e-14 * mean.abs().max(1.0));
        let z = if degenerate_here {
            report.degenerate = true;
            None
        } else {
            Some(mean / se)
        };
        let ratio = if predicted > 1e-16 {
            Some(empirical / predicted)
        } else {
            None
        };
        let residual_ok = empirical.sqrt() <= DEGENERATE_M_TOL;
        let z_ok = match z {
            Some(v) => v.abs() <= Z_LIMIT,
            // collapsed ensemble: M must sit at discretization scale
            None => residual_ok,
        };
        let ratio_ok = match ratio {
            Some(v) => (QV_BAND.0..=QV_BAND.1).contains(&v),
            None => residual_ok,
        };
        report.pass &= z_ok && ratio_ok;
        report.mean_m.push(mean);
        report.se_m.push(se);
        report.qv_predicted.push(predicted);
        report.qv_empirical.push(empirical);
        report.z_scores.push(z);
        report.qv_ratios.push(ratio);
    }
    Ok(report)
}

/// Two-sample Kolmogorov–Smirnov statistic between functionals computed on a
/// coarse and a fine grid.
pub fn ks_refinement(coarse: &[f64], fine: &[f64]) -> Result<f64> {
    if coarse.len() < MIN_KS_SAMPLES || fine.len() < MIN_KS_SAMPLES {
        return Err(Error::SampleSize(format!(
            "need at least {MIN_KS_SAMPLES} samples per side, got {} and {}",
            coarse.len(),
            fine.len()
        )));
    }
    let mut a = coarse.to_vec();
    let mut b = fine.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d.max((1.0 - j as f64 / nb).abs()).max(1.0 - i as f64 / na))
}
