//! Discrete heat kernel of the killed random walk.
//!
//! The continuous-time random walk generated by the discrete Laplacian (with
//! Dirichlet killing at the boundary) has transition function
//! `exp(t A)`; the kernel used by the mild form of the scheme is the
//! `n^d`-scaled version
//!
//! ```text
//! p(t, x, y) = n^d * P(walk at y at time t | started at x)
//! ```
//!
//! In one dimension the kernel is computed spectrally from the symmetric
//! eigendecomposition of the tridiagonal Laplacian; in higher dimensions it
//! is the product of one-dimensional kernels over the axes (the axis
//! components of the walk are independent).
//!
//! [`HeatKernel1D::estimate_report`] measures the decay and regularity
//! properties the tightness analysis of the scheme rests on: the
//! sub-probability L1 row norms and their exponential decay, and the power
//! laws of the kernel's L1/weighted-L2 moduli of continuity in space and
//! time.

use nalgebra::DMatrix;

use crate::grid::{GridSpec, MultiIndex};
use crate::operators::build_laplacian;
use crate::stats;
use crate::{Error, Result};

/// Entries more negative than this (relative to `n`) indicate an eigensolve
/// failure rather than floating-point dust.
const CLIP_TOL: f64 = 1e-12;

/// Panels used by the composite-trapezoid time integrals of the report.
const TIME_PANELS: usize = 200;

/// Spectral data of the one-dimensional discrete Laplacian.
#[derive(Debug, Clone)]
pub struct HeatKernel1D {
    resolution: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

/// One evaluation of the scaled kernel matrix `n * exp(t A)`.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    /// Entry `(i, j)` is `p(t, i+1, j+1)` (0-based storage).
    pub values: DMatrix<f64>,
    /// Largest negative excursion clipped to zero.
    pub max_clip: f64,
}

/// Exponent of the singular weight `|x - y|^(-alpha)` in the weighted norm
/// `|phi|_alpha^2 = integral |phi(x)| |x-y|^(-alpha) |phi(y)| dx dy`;
/// integrable only for `0 < alpha < min(2, d)`.
#[derive(Debug, Clone, Copy)]
pub struct AlphaNorm {
    alpha: f64,
}

impl AlphaNorm {
    pub fn new(alpha: f64, dim: usize) -> Result<Self> {
        let cap = 2.0f64.min(dim as f64);
        if !(alpha > 0.0 && alpha < cap) {
            return Err(Error::Parameter(format!(
                "alpha must lie in (0, {cap}) for dimension {dim}, got {alpha}"
            )));
        }
        Ok(AlphaNorm { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl HeatKernel1D {
    /// Eigendecomposition of the one-dimensional Laplacian at resolution `n`.
    pub fn new(resolution: usize) -> Result<Self> {
        let grid = GridSpec::new(1, resolution)?;
        let dense = build_laplacian(&grid)?.to_dense();
        let scale = 2.0 * (resolution * resolution) as f64;
        let eigen = nalgebra::SymmetricEigen::new(dense.clone());

        // reconstruction must hold to 1e-10 relative before the kernel is trusted
        let reconstructed = &eigen.eigenvectors
            * DMatrix::from_diagonal(&eigen.eigenvalues)
            * eigen.eigenvectors.transpose();
        let err = (&reconstructed - &dense)
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        if err > 1e-10 * scale {
            return Err(Error::Numeric(format!(
                "eigendecomposition reconstructs the Laplacian to {err:e} (limit {:e})",
                1e-10 * scale
            )));
        }

        let mut order: Vec<usize> = (0..eigen.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
        let mut eigenvalues = Vec::with_capacity(order.len());
        let mut eigenvectors = DMatrix::zeros(order.len(), order.len());
        for (slot, &src) in order.iter().enumerate() {
            let lambda = eigen.eigenvalues[src];
            if lambda > 1e-10 * scale {
                return Err(Error::Numeric(format!(
                    "positive eigenvalue {lambda} in a negative semidefinite operator"
                )));
            }
            eigenvalues.push(lambda.min(0.0));
            eigenvectors
                .column_mut(slot)
                .copy_from(&eigen.eigenvectors.column(src));
        }
        Ok(HeatKernel1D {
            resolution,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Eigenvalues in ascending order (most negative first).
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// The slowest-decaying (least negative) eigenvalue.
    pub fn least_negative_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("at least one eigenvalue")
    }

    /// Scaled kernel matrix `n * exp(t A)`; tiny negative entries from the
    /// spectral reconstruction are clipped to zero and reported.
    pub fn kernel_1d(&self, t: f64) -> Result<KernelMatrix> {
        if !(t >= 0.0) {
            return Err(Error::Parameter(format!("time must be >= 0, got {t}")));
        }
        let m = self.eigenvalues.len();
        let n = self.resolution as f64;
        if t == 0.0 {
            return Ok(KernelMatrix {
                values: DMatrix::identity(m, m) * n,
                max_clip: 0.0,
            });
        }
        let mut weighted = self.eigenvectors.clone();
        for (j, mut col) in weighted.column_iter_mut().enumerate() {
            let decay = (t * self.eigenvalues[j]).exp();
            for v in col.iter_mut() {
                *v *= decay;
            }
        }
        let mut values = weighted * self.eigenvectors.transpose();
        let mut max_clip = 0.0f64;
        for v in values.iter_mut() {
            *v *= n;
            if *v < 0.0 {
                max_clip = max_clip.max(-*v);
                *v = 0.0;
            }
        }
        if max_clip > CLIP_TOL * n {
            return Err(Error::Numeric(format!(
                "kernel entry clipped by {max_clip:e}, beyond floating-point dust"
            )));
        }
        Ok(KernelMatrix { values, max_clip })
    }

    /// `d`-dimensional kernel value as the product of per-axis kernels.
    pub fn kernel_d(&self, t: f64, x: &MultiIndex, y: &MultiIndex) -> Result<f64> {
        if x.dim() != y.dim() || x.dim() == 0 {
            return Err(Error::Shape(format!(
                "multi-indices of dimensions {} and {}",
                x.dim(),
                y.dim()
            )));
        }
        let slice = self.kernel_1d(t)?;
        self.kernel_d_from(&slice, x, y)
    }

    fn kernel_d_from(&self, slice: &KernelMatrix, x: &MultiIndex, y: &MultiIndex) -> Result<f64> {
        let m = self.eigenvalues.len();
        let mut acc = 1.0;
        for axis in 0..x.dim() {
            let (xi, yi) = (x.components()[axis], y.components()[axis]);
            if xi < 1 || xi > m || yi < 1 || yi > m {
                return Err(Error::InvalidIndex(format!(
                    "component outside 1..={m} in kernel evaluation"
                )));
            }
            acc *= slice.values[(xi - 1, yi - 1)];
        }
        Ok(acc)
    }

    /// Largest Chapman-Kolmogorov deviation
    /// `max over (x,y) of | sum_z n^(-d) p(t,x,z) p(s,z,y) - p(t+s,x,y) |`
    /// over all interior node pairs of the `dim`-dimensional grid.
    pub fn semigroup_check(&self, t: f64, s: f64, dim: usize) -> Result<f64> {
        let grid = GridSpec::new(dim, self.resolution)?;
        let count = grid.node_count();
        if count.pow(3) > (1 << 27) {
            return Err(Error::Capacity(format!(
                "semigroup check needs {count}^3 kernel products"
            )));
        }
        let pt = self.kernel_1d(t)?;
        let ps = self.kernel_1d(s)?;
        let pts = self.kernel_1d(t + s)?;
        let cell_volume = grid.spacing().powi(dim as i32);
        let nodes: Vec<MultiIndex> = grid.multi_indices().collect();
        let mut worst = 0.0f64;
        for x in &nodes {
            for y in &nodes {
                let mut conv = 0.0;
                for z in &nodes {
                    conv += self.kernel_d_from(&pt, x, z)? * self.kernel_d_from(&ps, z, y)?;
                }
                let direct = self.kernel_d_from(&pts, x, y)?;
                worst = worst.max((cell_volume * conv - direct).abs());
            }
        }
        Ok(worst)
    }

    /// Scaled L1 row norm `sup_x (1/n) sum_z p(t, x, z)`; lies in `[0,1]` for
    /// a killed walk and decays like the slowest eigenvalue.
    pub fn sup_row_l1(&self, t: f64) -> Result<f64> {
        let slice = self.kernel_1d(t)?;
        let inv_n = 1.0 / self.resolution as f64;
        Ok(slice
            .values
            .row_iter()
            .map(|row| row.iter().sum::<f64>() * inv_n)
            .fold(0.0, f64::max))
    }

    /// Numerical survey of the kernel estimates: L1 decay, spatial and
    /// temporal L1 moduli, and the weighted `alpha`-norm modulus, each with a
    /// fitted power-law exponent over the sampled range.
    pub fn estimate_report(
        &self,
        t_grid: &[f64],
        h_grid: &[f64],
        alpha: AlphaNorm,
    ) -> Result<EstimateReport> {
        if t_grid.is_empty() || h_grid.is_empty() {
            return Err(Error::Parameter("report grids must be non-empty".into()));
        }
        for &t in t_grid {
            if !(t > 0.0) {
                return Err(Error::Parameter(format!(
                    "report times must be > 0, got {t}"
                )));
            }
        }
        for &h in h_grid {
            if !(h > 0.0) {
                return Err(Error::Parameter(format!(
                    "report offsets must be > 0, got {h}"
                )));
            }
        }
        let n = self.resolution as f64;
        let m = self.eigenvalues.len();
        let lambda = self.least_negative_eigenvalue();
        let mut max_clip = 0.0f64;

        // (i) sup-row L1 norms over the time grid, with the decay slope
        let mut l1_rows = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let slice = self.kernel_1d(t)?;
            max_clip = max_clip.max(slice.max_clip);
            let sup = slice
                .values
                .row_iter()
                .map(|row| row.iter().sum::<f64>() / n)
                .fold(0.0, f64::max);
            l1_rows.push((t, sup));
        }
        let l1_within_unit = l1_rows
            .iter()
            .all(|&(_, v)| (-1e-12..=1.0 + 1e-12).contains(&v));
        let threshold = 5.0 / lambda.abs();
        let tail: Vec<(f64, f64)> = l1_rows
            .iter()
            .filter(|&&(t, v)| t >= threshold && v > 0.0)
            .cloned()
            .collect();
        let l1_decay_slope = if tail.len() >= 2 {
            let ts: Vec<f64> = tail.iter().map(|p| p.0).collect();
            let logs: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
            stats::slope(&ts, &logs)
        } else {
            f64::NAN
        };

        // shared time panels for the s-integrals, at the largest grid time
        let t_star = t_grid.iter().cloned().fold(0.0, f64::max);
        let tau: Vec<f64> = (0..=TIME_PANELS)
            .map(|i| t_star * i as f64 / TIME_PANELS as f64)
            .collect();
        let base: Vec<KernelMatrix> = tau
            .iter()
            .map(|&v| self.kernel_1d(v))
            .collect::<Result<_>>()?;
        for slice in &base {
            max_clip = max_clip.max(slice.max_clip);
        }

        // (ii) integral of the squared L1 distance between rows, by separation
        let mut spatial_rows = Vec::new();
        for sep in 1..m {
            let mut integrand = vec![0.0; tau.len()];
            for (ti, slice) in base.iter().enumerate() {
                let mut worst = 0.0f64;
                for i in 0..(m - sep) {
                    let mut l1 = 0.0;
                    for z in 0..m {
                        l1 += (slice.values[(i, z)] - slice.values[(i + sep, z)]).abs();
                    }
                    worst = worst.max(l1 / n);
                }
                integrand[ti] = worst * worst;
            }
            let value = *stats::cumulative_trapezoid(&tau, &integrand)
                .last()
                .expect("non-empty grid");
            spatial_rows.push((sep as f64 / n, value));
        }
        let spatial_exponent = stats::power_law_exponent(
            &spatial_rows.iter().map(|p| p.0).collect::<Vec<_>>(),
            &spatial_rows.iter().map(|p| p.1).collect::<Vec<_>>(),
        );
        // implied constant of the sqrt upper envelope; the fitted exponent
        // flattens once rows stop overlapping, so the envelope constant is
        // the meaningful check at fixed n
        let spatial_constant = spatial_rows
            .iter()
            .map(|&(sep, v)| v / sep.sqrt())
            .fold(0.0f64, f64::max);

        // (iii) and (iv): L1 and alpha-norm time moduli over the h grid
        let weights = alpha_norm_weights(self.resolution, alpha.alpha());
        let mut temporal_rows = Vec::new();
        let mut alpha_rows = Vec::new();
        for &h in h_grid {
            let shifted: Vec<KernelMatrix> = tau
                .iter()
                .map(|&v| self.kernel_1d(v + h))
                .collect::<Result<_>>()?;
            let mut l1_integrand = vec![0.0; tau.len()];
            let mut alpha_integrand = vec![0.0; tau.len()];
            let mut diff = vec![0.0; m];
            for ti in 0..tau.len() {
                let (a, b) = (&base[ti].values, &shifted[ti].values);
                let mut worst_l1 = 0.0f64;
                let mut worst_alpha = 0.0f64;
                for x in 0..m {
                    let mut l1 = 0.0;
                    for z in 0..m {
                        diff[z] = (a[(x, z)] - b[(x, z)]).abs();
                        l1 += diff[z];
                    }
                    worst_l1 = worst_l1.max(l1 / n);
                    let mut norm = 0.0;
                    for z in 0..m {
                        for w in 0..m {
                            norm += diff[z] * weights[(z, w)] * diff[w];
                        }
                    }
                    worst_alpha = worst_alpha.max(norm);
                }
                l1_integrand[ti] = worst_l1;
                alpha_integrand[ti] = worst_alpha;
            }
            temporal_rows.push((
                h,
                *stats::cumulative_trapezoid(&tau, &l1_integrand)
                    .last()
                    .expect("non-empty grid"),
            ));
            alpha_rows.push((
                h,
                *stats::cumulative_trapezoid(&tau, &alpha_integrand)
                    .last()
                    .expect("non-empty grid"),
            ));
        }
        let temporal_exponent = stats::power_law_exponent(
            &temporal_rows.iter().map(|p| p.0).collect::<Vec<_>>(),
            &temporal_rows.iter().map(|p| p.1).collect::<Vec<_>>(),
        );
        let alpha_exponent = stats::power_law_exponent(
            &alpha_rows.iter().map(|p| p.0).collect::<Vec<_>>(),
            &alpha_rows.iter().map(|p| p.1).collect::<Vec<_>>(),
        );

        Ok(EstimateReport {
            resolution: self.resolution,
            alpha: alpha.alpha(),
            max_clip,
            l1_rows,
            l1_within_unit,
            l1_decay_slope,
            l1_decay_target: lambda,
            spatial_rows,
            spatial_exponent,
            spatial_constant,
            temporal_rows,
            temporal_exponent,
            alpha_rows,
            alpha_exponent,
        })
    }

    /// Report over the default grids: 50 times spanning ten decay half-lives
    /// and five offsets spanning `[1e-4, 1e-2]`.
    pub fn default_report(&self, alpha: AlphaNorm) -> Result<EstimateReport> {
        let lambda = self.least_negative_eigenvalue().abs();
        let t_max = 10.0 / lambda;
        let t_grid: Vec<f64> = (1..=50).map(|i| t_max * i as f64 / 50.0).collect();
        let h_grid: Vec<f64> = (0..5).map(|i| 1e-4 * 100f64.powf(i as f64 / 4.0)).collect();
        self.estimate_report(&t_grid, &h_grid, alpha)
    }
}

/// Exact pair integrals `W[z][w] = integral over cell_z x cell_w of
/// |x - y|^(-alpha) dx dy` for the one-dimensional cells of resolution `n`.
fn alpha_norm_weights(n: usize, alpha: f64) -> DMatrix<f64> {
    let m = n - 1;
    let nf = n as f64;
    let denom = (1.0 - alpha) * (2.0 - alpha);
    let anti = |r: f64| r.abs().powf(2.0 - alpha) / denom;
    let mut w = DMatrix::zeros(m, m);
    for z in 0..m {
        let (a1, a2) = ((z + 1) as f64 / nf, (z + 2) as f64 / nf);
        for y in 0..m {
            let (b1, b2) = ((y + 1) as f64 / nf, (y + 2) as f64 / nf);
            w[(z, y)] = anti(a2 - b1) - anti(a1 - b1) - anti(a2 - b2) + anti(a1 - b2);
        }
    }
    w
}

/// Numerical survey of the kernel decay and regularity estimates.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub resolution: usize,
    pub alpha: f64,
    /// Largest negative kernel entry clipped to zero during the survey.
    pub max_clip: f64,
    /// `(t, sup_x |p(t,x,.)|_L1)` rows; values in `[0,1]` for a killed walk.
    pub l1_rows: Vec<(f64, f64)>,
    pub l1_within_unit: bool,
    /// Fitted slope of `log` L1 norm for `t >= 5/|lambda_1|`.
    pub l1_decay_slope: f64,
    /// The slowest eigenvalue the slope should match.
    pub l1_decay_target: f64,
    /// `(|x-y|, integral of squared L1 row distance)` by cell separation.
    pub spatial_rows: Vec<(f64, f64)>,
    pub spatial_exponent: f64,
    /// Largest ratio of the spatial modulus to `|x-y|^(1/2)`: the implied
    /// constant of the square-root envelope on the sampled range.
    pub spatial_constant: f64,
    /// `(h, integral of L1 distance between times t and t+h)`.
    pub temporal_rows: Vec<(f64, f64)>,
    pub temporal_exponent: f64,
    /// `(h, integral of the squared alpha-norm distance)`.
    pub alpha_rows: Vec<(f64, f64)>,
    pub alpha_exponent: f64,
}

impl EstimateReport {
    /// Relative gap between the fitted L1 decay slope and the slowest eigenvalue.
    pub fn l1_slope_gap(&self) -> f64 {
        ((self.l1_decay_slope - self.l1_decay_target) / self.l1_decay_target).abs()
    }

    /// Whether every surveyed quantity is consistent with its expected
    /// behavior on the sampled range: L1 norms in `[0,1]` with slope within
    /// 5% of the slowest eigenvalue, temporal exponent at least `1/2 - 0.1`,
    /// alpha exponent at least `1 - alpha/2 - 0.1`, and a finite spatial
    /// envelope constant. The spatial modulus saturates once rows stop
    /// overlapping, so its fitted exponent is reported but not gated.
    pub fn bounds_hold(&self) -> bool {
        self.l1_within_unit
            && self.l1_slope_gap() <= 0.05
            && self.spatial_constant.is_finite()
            && self.temporal_exponent >= 0.4
            && self.alpha_exponent >= 1.0 - self.alpha / 2.0 - 0.1
    }

    /// Delimited text rendering, one section per estimate.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# heat kernel estimates n={} alpha={} max_clip={:e}\n",
            self.resolution, self.alpha, self.max_clip
        ));
        out.push_str("# section l1: t sup_row_l1\n");
        for (t, v) in &self.l1_rows {
            out.push_str(&format!("l1 {t} {v}\n"));
        }
        out.push_str(&format!(
            "l1_slope {} target {} gap {}\n",
            self.l1_decay_slope,
            self.l1_decay_target,
            self.l1_slope_gap()
        ));
        out.push_str("# section spatial: separation integral_sq_l1\n");
        for (s, v) in &self.spatial_rows {
            out.push_str(&format!("spatial {s} {v}\n"));
        }
        out.push_str(&format!(
            "spatial_exponent {} envelope_constant {}\n",
            self.spatial_exponent, self.spatial_constant
        ));
        out.push_str("# section temporal: h integral_l1\n");
        for (h, v) in &self.temporal_rows {
            out.push_str(&format!("temporal {h} {v}\n"));
        }
        out.push_str(&format!("temporal_exponent {}\n", self.temporal_exponent));
        out.push_str("# section alpha: h integral_sq_alpha_norm\n");
        for (h, v) in &self.alpha_rows {
            out.push_str(&format!("alpha {h} {v}\n"));
        }
        out.push_str(&format!("alpha_exponent {}\n", self.alpha_exponent));
        out.push_str(&format!(
            "bounds_hold {}\n",
            if self.bounds_hold() { "yes" } else { "no" }
        ));
        out
    }
}
