//! Space-correlated driving noise.
//!
//! The noise is white in time and correlated in space through a bounded
//! continuous symmetric kernel `f(x, y)`. The scheme only ever consumes the
//! increments aggregated over grid cells, whose covariance per unit time is
//!
//! ```text
//! C[k][j] = integral over cell_k x cell_j of f(x, y) dx dy
//! ```
//!
//! so the model stores the `N x N` cell covariance and a lower-triangular
//! factor `L` with `L L^T = C` (up to a recorded jitter). Increments over a
//! step `dt` are `sqrt(dt) * L * z` with `z` standard normal.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::exec;
use crate::grid::GridSpec;
use crate::{Error, Result};

/// Jitter ladder tried in order when factorizing the cell covariance.
const JITTERS: [f64; 4] = [0.0, 1e-14, 1e-12, 1e-10];

/// Relative tolerance of the factorization residual `|L L^T - C|_max`.
const RESIDUAL_RTOL: f64 = 1e-8;

/// Symmetry / boundedness tolerance for sampled kernel checks.
const KERNEL_TOL: f64 = 1e-12;

type KernelFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// Bounded continuous symmetric correlation kernel on `D x D`.
#[derive(Clone)]
pub struct CorrelationKernel {
    eval: Arc<KernelFn>,
    sup_bound: f64,
    spec: String,
}

impl std::fmt::Debug for CorrelationKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorrelationKernel")
            .field("spec", &self.spec)
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

impl CorrelationKernel {
    /// Constant kernel `f = c0`.
    pub fn constant(c0: f64) -> Result<Self> {
        if !c0.is_finite() || c0 < 0.0 {
            return Err(Error::Parameter(format!(
                "constant kernel level must be finite and nonnegative, got {c0}"
            )));
        }
        Ok(CorrelationKernel {
            eval: Arc::new(move |_, _| c0),
            sup_bound: c0,
            spec: format!("constant:{c0}"),
        })
    }

    /// Exponential kernel `exp(-|x-y| / ell)`.
    pub fn exponential(ell: f64) -> Result<Self> {
        if !ell.is_finite() || ell <= 0.0 {
            return Err(Error::Parameter(format!(
                "correlation length must be positive, got {ell}"
            )));
        }
        Ok(CorrelationKernel {
            eval: Arc::new(move |x, y| (-distance(x, y) / ell).exp()),
            sup_bound: 1.0,
            spec: format!("exp:{ell}"),
        })
    }

    /// Squared-exponential kernel `exp(-|x-y|^2 / ell^2)`.
    pub fn gaussian(ell: f64) -> Result<Self> {
        if !ell.is_finite() || ell <= 0.0 {
            return Err(Error::Parameter(format!(
                "correlation length must be positive, got {ell}"
            )));
        }
        Ok(CorrelationKernel {
            eval: Arc::new(move |x, y| {
                let r = distance(x, y);
                (-(r * r) / (ell * ell)).exp()
            }),
            sup_bound: 1.0,
            spec: format!("gaussian:{ell}"),
        })
    }

    /// Caller-supplied kernel with a declared supremum.
    pub fn custom(
        name: &str,
        sup_bound: f64,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CorrelationKernel {
            eval: Arc::new(f),
            sup_bound,
            spec: name.to_string(),
        }
    }

    /// Parses a registry spec: `constant:<c0>`, `exp:<ell>` or `gaussian:<ell>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, a),
            None => (spec, ""),
        };
        let value = |what: &str| -> Result<f64> {
            arg.parse::<f64>().map_err(|_| {
                Error::Parameter(format!("kernel `{spec}`: cannot parse {what} from `{arg}`"))
            })
        };
        match name {
            "constant" => Self::constant(value("level")?),
            "exp" => Self::exponential(value("correlation length")?),
            "gaussian" => Self::gaussian(value("correlation length")?),
            _ => Err(Error::Parameter(format!(
                "unknown kernel `{spec}`; expected constant:<c0>, exp:<ell> or gaussian:<ell>"
            ))),
        }
    }

    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.eval)(x, y)
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    /// Checks symmetry and the declared bound on a deterministic sample of
    /// point pairs in `[0,1]^dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let points = sample_points(dim, 24);
        for (i, x) in points.iter().enumerate() {
            for y in points.iter().skip(i) {
                let fxy = self.evaluate(x, y);
                let fyx = self.evaluate(y, x);
                if !fxy.is_finite() {
                    return Err(Error::Kernel(format!("non-finite value at {x:?}, {y:?}")));
                }
                if (fxy - fyx).abs() > KERNEL_TOL * fxy.abs().max(1.0) {
                    return Err(Error::Kernel(format!(
                        "asymmetric: f(x,y)={fxy} vs f(y,x)={fyx} at {x:?}, {y:?}"
                    )));
                }
                if fxy > self.sup_bound + KERNEL_TOL * self.sup_bound.abs().max(1.0) {
                    return Err(Error::Kernel(format!(
                        "value {fxy} exceeds declared bound {}",
                        self.sup_bound
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Deterministic low-discrepancy sample of the unit cube.
fn sample_points(dim: usize, count: usize) -> Vec<Vec<f64>> {
    const ROOTS: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
    (0..count)
        .map(|i| {
            (0..dim)
                .map(|a| {
                    let alpha = ROOTS[a % ROOTS.len()].sqrt();
                    ((i as f64 + 0.5) * alpha).fract()
                })
                .collect()
        })
        .collect()
}

/// Midpoint quadrature nodes of one cell, `m` points per axis.
fn cell_quadrature_points(grid: &GridSpec, linear: usize, m: usize) -> Vec<Vec<f64>> {
    let k = grid.to_multi(linear).expect("index in range");
    let n = grid.resolution() as f64;
    let d = grid.dim();
    let per_axis: Vec<Vec<f64>> = k
        .components()
        .iter()
        .map(|&c| {
            (0..m)
                .map(|t| (c as f64 + (2 * t + 1) as f64 / (2 * m) as f64) / n)
                .collect()
        })
        .collect();
    let total = m.pow(d as u32);
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        points.push((0..d).map(|a| per_axis[a][idx[a]]).collect());
        for a in 0..d {
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
        }
    }
    points
}

/// Cell covariance matrix by midpoint tensor quadrature with `m` points per
/// axis per cell; exact for constant kernels.
pub fn cell_covariance(
    kernel: &CorrelationKernel,
    grid: &GridSpec,
    m: usize,
) -> Result<DMatrix<f64>> {
    if m < 1 {
        return Err(Error::Parameter(
            "quadrature refinement must be at least 1".into(),
        ));
    }
    kernel.validate(grid.dim())?;
    let count = grid.node_count();
    let points_per_cell = m.pow(grid.dim() as u32);
    if count
        .checked_mul(points_per_cell)
        .map(|t| t > (1 << 24))
        .unwrap_or(true)
    {
        return Err(Error::Capacity(format!(
            "quadrature needs {count} x {points_per_cell} nodes; reduce m or the grid"
        )));
    }
    let cells: Vec<Vec<Vec<f64>>> = (1..=count)
        .map(|i| cell_quadrature_points(grid, i, m))
        .collect();
    // weight of one quadrature point pair: (cell volume / points per cell)^2
    let w = grid.spacing().powi(grid.dim() as i32) / points_per_cell as f64;
    let w2 = w * w;

    // upper triangle row by row; rows are independent work items
    let rows: Vec<Vec<f64>> = exec::map_indexed(count, |k| {
        (k..count)
            .map(|j| {
                let mut acc = 0.0;
                for p in &cells[k] {
                    for q in &cells[j] {
                        acc += kernel.evaluate(p, q);
                    }
                }
                w2 * acc
            })
            .collect()
    });

    let mut c = DMatrix::zeros(count, count);
    for (k, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            c[(k, k + off)] = v;
            c[(k + off, k)] = v;
        }
    }
    Ok(c)
}

/// Lower-triangular factorization of a symmetric positive-semidefinite
/// matrix, trying jitters `C + eps I` from a fixed ladder. Returns the factor
/// and the jitter used; fails when even the largest jitter leaves a residual
/// above tolerance.
pub fn factorize(c: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if c.nrows() != c.ncols() {
        return Err(Error::Shape("covariance matrix must be square".into()));
    }
    let norm = c.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    for &eps in &JITTERS {
        if let Some(l) = try_cholesky(c, eps) {
            if residual_max(c, &l) <= RESIDUAL_RTOL * norm {
                return Ok((l, eps));
            }
        }
    }
    Err(Error::NotPositiveSemidefinite(format!(
        "factorization residual above {RESIDUAL_RTOL} * {norm} at every jitter"
    )))
}

fn try_cholesky(c: &DMatrix<f64>, eps: f64) -> Option<DMatrix<f64>> {
    let n = c.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = c[(j, j)] + eps;
        for t in 0..j {
            pivot -= l[(j, t)] * l[(j, t)];
        }
        if pivot < 0.0 {
            return None;
        }
        if pivot == 0.0 {
            // exactly singular direction: leave the column zero
            continue;
        }
        let root = pivot.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut s = c[(i, j)];
            for t in 0..j {
                s -= l[(i, t)] * l[(j, t)];
            }
            l[(i, j)] = s / root;
        }
    }
    Some(l)
}

fn residual_max(c: &DMatrix<f64>, l: &DMatrix<f64>) -> f64 {
    let n = c.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for t in 0..=j {
                acc += l[(i, t)] * l[(j, t)];
            }
            worst = worst.max((acc - c[(i, j)]).abs());
        }
    }
    worst
}

/// Cell covariance together with its factor, ready for increment sampling.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    grid: GridSpec,
    covariance: DMatrix<f64>,
    factor: DMatrix<f64>,
    jitter: f64,
    sup_bound: f64,
}

impl NoiseModel {
    /// Builds the model for a kernel on a grid with quadrature refinement `m`.
    pub fn build(kernel: &CorrelationKernel, grid: &GridSpec, m: usize) -> Result<Self> {
        let covariance = cell_covariance(kernel, grid, m)?;
        Self::from_covariance(*grid, covariance, kernel.sup_bound())
    }

    /// Wraps an explicit covariance matrix (already per unit time).
    pub fn from_covariance(
        grid: GridSpec,
        covariance: DMatrix<f64>,
        sup_bound: f64,
    ) -> Result<Self> {
        let count = grid.node_count();
        if covariance.nrows() != count || covariance.ncols() != count {
            return Err(Error::Shape(format!(
                "covariance is {}x{}, grid has {count} nodes",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        let norm = covariance.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        for i in 0..count {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > KERNEL_TOL * norm.max(1.0) {
                    return Err(Error::Kernel(format!(
                        "covariance asymmetric at ({},{})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        // variance bound: C_kk <= sup(f) * n^(-2d)
        let bound = sup_bound * grid.spacing().powi(2 * grid.dim() as i32);
        for k in 0..count {
            let var = covariance[(k, k)];
            if var < -KERNEL_TOL * norm.max(1.0) {
                return Err(Error::Kernel(format!(
                    "negative cell variance at {}",
                    k + 1
                )));
            }
            if var > bound * (1.0 + 1e-12) + f64::MIN_POSITIVE {
                return Err(Error::Kernel(format!(
                    "cell variance {var} exceeds sup(f) n^(-2d) = {bound} at {}",
                    k + 1
                )));
            }
        }
        let (factor, jitter) = factorize(&covariance)?;
        Ok(NoiseModel {
            grid,
            covariance,
            factor,
            jitter,
            sup_bound,
        })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// Jitter added on the diagonal before factorization succeeded.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// One increment of the cell-aggregated noise over a step `dt`.
    pub fn sample_increment(&self, dt: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
        }
        let n = self.grid.node_count();
        let mut z = vec![0.0; n];
        let mut out = vec![0.0; n];
        self.sample_increment_into(dt, rng, &mut z, &mut out);
        Ok(out)
    }

    /// Allocation-free variant for the hot loop.
    pub(crate) fn sample_increment_into(
        &self,
        dt: f64,
        rng: &mut impl Rng,
        z: &mut [f64],
        out: &mut [f64],
    ) {
        let n = self.grid.node_count();
        debug_assert_eq!(z.len(), n);
        debug_assert_eq!(out.len(), n);
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let sqrt_dt = dt.sqrt();
        out.fill(0.0);
        for j in 0..n {
            let zj = z[j];
            if zj == 0.0 {
                continue;
            }
            let col = self.factor.column(j);
            for i in j..n {
                out[i] += col[i] * zj;
            }
        }
        for o in out.iter_mut() {
            *o *= sqrt_dt;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn constant_kernel_covariance_is_exact() {
        let g = GridSpec::new(1, 3).unwrap();
        let kernel = CorrelationKernel::constant(1.0).unwrap();
        let c = cell_covariance(&kernel, &g, 4).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((c[(i, j)] - 1.0 / 9.0).abs() < 1e-16);
            }
        }
        // general dimension: every entry c0 * n^(-2d)
        let g = GridSpec::new(2, 4).unwrap();
        let kernel = CorrelationKernel::constant(2.5).unwrap();
        let c = cell_covariance(&kernel, &g, 3).unwrap();
        let expected = 2.5 / (4.0f64).powi(4);
        assert!(c.iter().all(|&v| (v - expected).abs() < 1e-15));
    }

    #[test]
    fn zero_kernel_gives_zero_model() {
        let g = GridSpec::new(1, 4).unwrap();
        let kernel = CorrelationKernel::constant(0.0).unwrap();
        let model = NoiseModel::build(&kernel, &g, 2).unwrap();
        assert!(model.covariance().iter().all(|&v| v == 0.0));
        assert!(model.factor().iter().all(|&v| v == 0.0));
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let inc = model.sample_increment(0.5, &mut rng).unwrap();
        assert!(inc.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadrature_refinement_converges() {
        // The exponential kernel has a kink on the diagonal, so the midpoint
        // rule converges at order m^-2: the error against a fine reference
        // must be small and must shrink by ~16x when m quadruples.
        let g = GridSpec::new(1, 2).unwrap();
        let kernel = CorrelationKernel::exponential(1.0).unwrap();
        let reference = cell_covariance(&kernel, &g, 1024).unwrap()[(0, 0)];
        let err64 =
            (cell_covariance(&kernel, &g, 64).unwrap()[(0, 0)] - reference).abs() / reference;
        let err256 =
            (cell_covariance(&kernel, &g, 256).unwrap()[(0, 0)] - reference).abs() / reference;
        assert!(err64 <= 5e-5, "m=64 relative error {err64}");
        assert!(
            err256 <= err64 / 8.0,
            "refinement must shrink the error: {err64} -> {err256}"
        );
    }

    #[test]
    fn variance_bound_holds_for_builtin_kernels() {
        for spec in ["constant:1", "exp:0.7", "gaussian:0.4"] {
            let kernel = CorrelationKernel::parse(spec).unwrap();
            for (d, n) in [(1usize, 5usize), (2, 4)] {
                let g = GridSpec::new(d, n).unwrap();
                let model = NoiseModel::build(&kernel, &g, 4).unwrap();
                let bound = kernel.sup_bound() * g.spacing().powi(2 * d as i32);
                for k in 0..g.node_count() {
                    assert!(model.covariance()[(k, k)] <= bound * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn factorize_identity() {
        let c = DMatrix::identity(3, 3);
        let (l, eps) = factorize(&c).unwrap();
        assert_eq!(eps, 0.0);
        assert_eq!(l, DMatrix::identity(3, 3));
    }

    #[test]
    fn factorize_rank_one() {
        let c = DMatrix::from_element(2, 2, 1.0 / 9.0);
        let (l, eps) = factorize(&c).unwrap();
        assert!(eps <= 1e-14);
        assert!((l[(0, 0)] - 1.0 / 3.0).abs() < 1e-7);
        assert!((l[(1, 0)] - 1.0 / 3.0).abs() < 1e-7);
        assert!(l[(0, 1)].abs() < 1e-7);
        assert!(l[(1, 1)].abs() < 1e-7);
        let res = &l * l.transpose() - &c;
        assert!(res.iter().all(|&v| v.abs() <= 1e-8 / 9.0));
    }

    #[test]
    fn factorize_absorbs_tiny_negative_eigenvalue() {
        // rotate diag(1, -1e-16): indefinite by a hair, as quadrature noise makes it
        let (s, c) = (0.6f64.sin(), 0.6f64.cos());
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-16]);
        let m = &q * d * q.transpose();
        let (l, eps) = factorize(&m).unwrap();
        assert!(eps <= 1e-14, "jitter {eps}");
        let res = &l * l.transpose() - &m;
        assert!(res.iter().all(|&v| v.abs() <= 1e-8));
    }

    #[test]
    fn factorize_rejects_indefinite() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            factorize(&c),
            Err(Error::NotPositiveSemidefinite(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let g = GridSpec::new(1, 4).unwrap();
        let kernel = CorrelationKernel::exponential(0.5).unwrap();
        let model = NoiseModel::build(&kernel, &g, 4).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            (0..5)
                .flat_map(|_| model.sample_increment(0.01, &mut rng).unwrap())
                .collect::<Vec<f64>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn sample_covariance_matches_model() {
        let g = GridSpec::new(1, 3).unwrap();
        let kernel = CorrelationKernel::constant(1.0).unwrap();
        let model = NoiseModel::build(&kernel, &g, 4).unwrap();
        let draws = 100_000usize;
        let dt = 1.0;
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let mut acc = DMatrix::zeros(2, 2);
        for _ in 0..draws {
            let inc = model.sample_increment(dt, &mut rng).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    acc[(i, j)] += inc[i] * inc[j];
                }
            }
        }
        acc /= draws as f64;
        for i in 0..2 {
            for j in 0..2 {
                let expected = model.covariance()[(i, j)] * dt;
                let se = ((model.covariance()[(i, i)] * model.covariance()[(j, j)]
                    + model.covariance()[(i, j)].powi(2))
                    / draws as f64)
                    .sqrt();
                assert!(
                    (acc[(i, j)] - expected).abs() <= 3.0 * se,
                    "entry ({i},{j}): {} vs {expected} (se {se})",
                    acc[(i, j)]
                );
            }
        }
    }

    #[test]
    fn increments_are_white_in_time() {
        let g = GridSpec::new(1, 3).unwrap();
        let kernel = CorrelationKernel::exponential(0.5).unwrap();
        let model = NoiseModel::build(&kernel, &g, 4).unwrap();
        let steps = 100_000usize;
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut series: Vec<Vec<f64>> = (0..2).map(|_| Vec::with_capacity(steps)).collect();
        for _ in 0..steps {
            let inc = model.sample_increment(1e-3, &mut rng).unwrap();
            for (site, v) in inc.iter().enumerate() {
                series[site].push(*v);
            }
        }
        for lag in 1..=2usize {
            for site in &series {
                let m = stats::mean(site);
                let mut num = 0.0;
                let mut den = 0.0;
                for t in 0..steps {
                    den += (site[t] - m) * (site[t] - m);
                    if t + lag < steps {
                        num += (site[t] - m) * (site[t + lag] - m);
                    }
                }
                let r = num / den;
                assert!(
                    r.abs() <= 3.0 / (steps as f64).sqrt(),
                    "lag-{lag} autocorrelation {r}"
                );
            }
        }
    }

    #[test]
    fn kernel_registry_parses_and_rejects() {
        assert!(CorrelationKernel::parse("constant:1").is_ok());
        assert!(CorrelationKernel::parse("exp:0.5").is_ok());
        assert!(CorrelationKernel::parse("gaussian:2").is_ok());
        assert!(matches!(
            CorrelationKernel::parse("matern:1.5"),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            CorrelationKernel::parse("exp:abc"),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            CorrelationKernel::parse("constant:-1"),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn asymmetric_kernel_is_rejected() {
        let kernel = CorrelationKernel::custom("skew", 2.0, |x, y| 1.0 + x[0] - y[0]);
        let g = GridSpec::new(1, 3).unwrap();
        assert!(matches!(
            NoiseModel::build(&kernel, &g, 2),
            Err(Error::Kernel(_))
        ));
    }

    #[test]
    fn underdeclared_bound_is_rejected() {
        let kernel = CorrelationKernel::custom("hot", 0.5, |_, _| 1.0);
        let g = GridSpec::new(1, 3).unwrap();
        assert!(matches!(
            NoiseModel::build(&kernel, &g, 2),
            Err(Error::Kernel(_))
        ));
    }
}
