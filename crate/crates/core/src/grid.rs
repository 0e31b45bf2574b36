//! Interior lattice of the unit cube `[0,1]^d`.
//!
//! A grid of resolution `n` has interior nodes `x_k = (k_1/n, ..., k_d/n)`
//! with every component `k_j` in `{1, ..., n-1}`, so there are
//! `N = (n-1)^d` of them. Each node owns the half-open cell
//! `[k_1/n, (k_1+1)/n) x ... x [k_d/n, (k_d+1)/n)`.
//!
//! All indices are 1-based at the API surface: linear indices run over
//! `{1, ..., N}` and multi-index components over `{1, ..., n-1}`.

use crate::{Error, Result};

/// Largest interior node count accepted when building grids; beyond this the
/// dense cell covariance no longer fits a desk-scale memory budget.
pub const MAX_NODES: usize = 1 << 20;

/// Dimension and resolution of the interior lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    dim: usize,
    resolution: usize,
    nodes: usize,
}

/// Position of an interior node, one 1-based component per axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

/// Axis-aligned cell attached to a node.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Result of shifting a multi-index by one lattice step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Neighbor {
    Interior(MultiIndex),
    /// The shift leaves the interior lattice; the Dirichlet value 0 applies.
    Boundary,
}

/// Direction of a one-step shift along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl MultiIndex {
    pub fn new(components: Vec<usize>) -> Self {
        MultiIndex(components)
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

impl GridSpec {
    /// Builds a grid for `[0,1]^dim` with spacing `1/resolution`.
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        if resolution < 2 {
            return Err(Error::Parameter(format!(
                "resolution must be at least 2, got {resolution}"
            )));
        }
        let m = resolution - 1;
        let mut nodes: usize = 1;
        for _ in 0..dim {
            nodes = nodes.checked_mul(m).ok_or_else(|| {
                Error::Capacity(format!("(n-1)^d overflows for n={resolution}, d={dim}"))
            })?;
            if nodes > MAX_NODES {
                return Err(Error::Capacity(format!(
                    "grid has more than {MAX_NODES} interior nodes (n={resolution}, d={dim})"
                )));
            }
        }
        Ok(GridSpec {
            dim,
            resolution,
            nodes,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of interior nodes, `(n-1)^d`.
    pub fn node_count(&self) -> usize {
        self.nodes
    }

    /// Lattice spacing `1/n`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// Number of interior positions per axis, `n-1`.
    pub fn axis_len(&self) -> usize {
        self.resolution - 1
    }

    /// `n^d` as a float; the noise amplification factor of the scheme.
    pub fn volume_scale(&self) -> f64 {
        (self.resolution as f64).powi(self.dim as i32)
    }

    /// Distance between linear indices of nodes adjacent along `axis` (1-based).
    pub fn axis_stride(&self, axis: usize) -> usize {
        debug_assert!(axis >= 1 && axis <= self.dim);
        self.axis_len().pow((axis - 1) as u32)
    }

    fn check_multi(&self, k: &MultiIndex) -> Result<()> {
        if k.dim() != self.dim {
            return Err(Error::Shape(format!(
                "multi-index {k} has dimension {}, grid has {}",
                k.dim(),
                self.dim
            )));
        }
        for (axis, &c) in k.components().iter().enumerate() {
            if c < 1 || c > self.axis_len() {
                return Err(Error::InvalidIndex(format!(
                    "component {} of {k} outside 1..={} ",
                    axis + 1,
                    self.axis_len()
                )));
            }
        }
        Ok(())
    }

    /// Linear index of a node: `k_1 + (k_2-1)(n-1) + ... + (k_d-1)(n-1)^(d-1)`.
    pub fn to_linear(&self, k: &MultiIndex) -> Result<usize> {
        self.check_multi(k)?;
        let m = self.axis_len();
        let mut idx = 0usize;
        for &c in k.components().iter().rev() {
            idx = idx * m + (c - 1);
        }
        Ok(idx + 1)
    }

    /// Inverse of [`GridSpec::to_linear`].
    pub fn to_multi(&self, i: usize) -> Result<MultiIndex> {
        if i < 1 || i > self.nodes {
            return Err(Error::InvalidIndex(format!(
                "linear index {i} outside 1..={}",
                self.nodes
            )));
        }
        let m = self.axis_len();
        let mut rem = i - 1;
        let mut components = Vec::with_capacity(self.dim);
        for _ in 0..self.dim {
            components.push(rem % m + 1);
            rem /= m;
        }
        Ok(MultiIndex(components))
    }

    /// Multi-index of the cell containing `x`, with components clamped into
    /// the interior range so the map stays total on `[0,1]^d`; the clamp only
    /// acts on the boundary margin `x_j < 1/n` and on `x_j = 1`.
    pub fn cell_of(&self, x: &[f64]) -> Result<MultiIndex> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "point has dimension {}, grid has {}",
                x.len(),
                self.dim
            )));
        }
        let mut components = Vec::with_capacity(self.dim);
        for (axis, &xi) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&xi) {
                return Err(Error::Domain(format!(
                    "coordinate {} = {xi} outside [0,1]",
                    axis + 1
                )));
            }
            let c = (self.resolution as f64 * xi).floor() as usize;
            components.push(c.clamp(1, self.axis_len()));
        }
        Ok(MultiIndex(components))
    }

    /// Shifts `k` one step along `axis` (1-based); [`Neighbor::Boundary`]
    /// when the shift leaves the interior lattice.
    pub fn neighbor(&self, k: &MultiIndex, axis: usize, dir: Direction) -> Result<Neighbor> {
        self.check_multi(k)?;
        if axis < 1 || axis > self.dim {
            return Err(Error::InvalidIndex(format!(
                "axis {axis} outside 1..={}",
                self.dim
            )));
        }
        let c = k.components()[axis - 1];
        let shifted = match dir {
            Direction::Forward => c + 1,
            Direction::Backward => c.wrapping_sub(1),
        };
        if shifted < 1 || shifted > self.axis_len() {
            return Ok(Neighbor::Boundary);
        }
        let mut components = k.components().to_vec();
        components[axis - 1] = shifted;
        Ok(Neighbor::Interior(MultiIndex(components)))
    }

    /// Coordinates of the node `x_k = (k_1/n, ..., k_d/n)`.
    pub fn node_position(&self, k: &MultiIndex) -> Result<Vec<f64>> {
        self.check_multi(k)?;
        let n = self.resolution as f64;
        Ok(k.components().iter().map(|&c| c as f64 / n).collect())
    }

    /// The half-open cell attached to `k`.
    pub fn cell(&self, k: &MultiIndex) -> Result<Cell> {
        let lower = self.node_position(k)?;
        let h = self.spacing();
        let upper = lower.iter().map(|&a| a + h).collect();
        Ok(Cell { lower, upper })
    }

    /// All interior multi-indices in linear-index order.
    pub fn multi_indices(&self) -> MultiIndexIter {
        MultiIndexIter {
            grid: *self,
            next: Some(MultiIndex(vec![1; self.dim])),
        }
    }
}

/// Iterator over interior multi-indices in linear order (axis 1 fastest).
pub struct MultiIndexIter {
    grid: GridSpec,
    next: Option<MultiIndex>,
}

impl Iterator for MultiIndexIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let current = self.next.take()?;
        let mut following = current.clone();
        let m = self.grid.axis_len();
        for axis in 0..self.grid.dim() {
            if following.0[axis] < m {
                following.0[axis] += 1;
                self.next = Some(following);
                return Some(current);
            }
            following.0[axis] = 1;
        }
        // odometer wrapped: current was the last index
        Some(current)
    }
}
