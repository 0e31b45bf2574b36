//! Discrete operators of the semi-discretized equation.
//!
//! Two independent realizations are kept deliberately:
//!
//! * stencil applications ([`apply_laplacian`], [`apply_gradient_sq`]) that
//!   walk the lattice neighbor structure directly, and
//! * sparse matrices ([`build_laplacian`], [`build_gradient`]) assembled by
//!   the dimensional recurrence (a Kronecker sum of the one-dimensional
//!   operator with itself, one copy per axis).
//!
//! The two must agree on every field; the test suites cross-check them.
//! Out-of-grid neighbors contribute 0 (Dirichlet boundary).

use crate::grid::GridSpec;
use crate::{Error, Result};

/// Real-valued field attached to the interior nodes, in linear-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Shape(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        Ok(LatticeField { grid, values })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        LatticeField {
            grid,
            values: vec![value; grid.node_count()],
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at every node position, in linear order.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.node_count());
        for k in grid.multi_indices() {
            values.push(f(&grid.node_position(&k)?));
        }
        Ok(LatticeField { grid, values })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Componentwise square.
    pub fn squared(&self) -> LatticeField {
        LatticeField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * v).collect(),
        }
    }
}

/// Which operator a matrix realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Discrete Laplacian: diagonal `-2dn^2`, interior neighbors `n^2`.
    Laplacian,
    /// Summed forward difference: diagonal `-dn`, interior forward neighbors `n`.
    Gradient,
}

/// Sparse operator matrix stored as per-row neighbor lists (columns sorted).
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    grid: GridSpec,
    kind: OperatorKind,
    rows: Vec<Vec<(usize, f64)>>,
}

impl OperatorMatrix {
    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.rows.len()
    }

    /// Entry at 1-based `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> Result<f64> {
        let n = self.node_count();
        if row < 1 || row > n || col < 1 || col > n {
            return Err(Error::InvalidIndex(format!(
                "entry ({row},{col}) outside 1..={n}"
            )));
        }
        Ok(self.rows[row - 1]
            .iter()
            .find(|&&(c, _)| c == col - 1)
            .map(|&(_, v)| v)
            .unwrap_or(0.0))
    }

    /// Matrix-vector product as a field operation.
    pub fn apply(&self, u: &LatticeField) -> Result<LatticeField> {
        if u.grid() != self.grid {
            return Err(Error::Shape(
                "field and operator built for different grids".into(),
            ));
        }
        let mut out = vec![0.0; u.values().len()];
        self.apply_slice(u.values(), &mut out);
        LatticeField::new(self.grid, out)
    }

    pub(crate) fn apply_slice(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows.len());
        debug_assert_eq!(out.len(), self.rows.len());
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, v) in row {
                acc += v * x[j];
            }
            out[i] = acc;
        }
    }

    /// Dense copy, for small-grid inspection and spectral work.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.node_count();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Coordinate-format text: one `row col value` line per stored nonzero,
    /// 1-based, rows ascending and columns ascending within a row.
    pub fn coordinate_text(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                if v != 0.0 {
                    out.push_str(&format!("{} {} {}\n", i + 1, j + 1, v));
                }
            }
        }
        out
    }

    /// Nonzero entries as 1-based `(row, col, value)` triples.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, v)| (i + 1, j + 1, v)))
    }
}

/// One-dimensional tridiagonal seed of the recurrence.
fn one_dim_rows(axis_len: usize, lower: f64, diag: f64, upper: f64) -> Vec<Vec<(usize, f64)>> {
    (0..axis_len)
        .map(|r| {
            let mut row = Vec::with_capacity(3);
            if r > 0 && lower != 0.0 {
                row.push((r - 1, lower));
            }
            row.push((r, diag));
            if r + 1 < axis_len && upper != 0.0 {
                row.push((r + 1, upper));
            }
            row
        })
        .collect()
}

/// Extends `rows` (an operator on `(n-1)^(d-1)` nodes) by one axis: block
/// copies of the existing operator plus the one-dimensional operator acting
/// across blocks. Diagonal contributions accumulate.
fn kronecker_sum_step(
    rows: &[Vec<(usize, f64)>],
    one_dim: &[Vec<(usize, f64)>],
) -> Vec<Vec<(usize, f64)>> {
    let block = rows.len();
    let m = one_dim.len();
    let mut next = Vec::with_capacity(block * m);
    for b in 0..m {
        for r in 0..block {
            let own = b * block + r;
            let mut row: Vec<(usize, f64)> =
                rows[r].iter().map(|&(c, v)| (b * block + c, v)).collect();
            for &(bc, v) in &one_dim[b] {
                if bc == b {
                    // merge with the diagonal entry copied from the block
                    let d = row
                        .iter_mut()
                        .find(|(c, _)| *c == own)
                        .expect("block operator carries a diagonal entry");
                    d.1 += v;
                } else {
                    row.push((bc * block + r, v));
                }
            }
            row.sort_unstable_by_key(|&(c, _)| c);
            next.push(row);
        }
    }
    next
}

fn build_by_recurrence(
    grid: &GridSpec,
    kind: OperatorKind,
    lower: f64,
    diag: f64,
    upper: f64,
) -> OperatorMatrix {
    let one_dim = one_dim_rows(grid.axis_len(), lower, diag, upper);
    let mut rows = one_dim.clone();
    for _ in 1..grid.dim() {
        rows = kronecker_sum_step(&rows, &one_dim);
    }
    OperatorMatrix {
        grid: *grid,
        kind,
        rows,
    }
}

/// Assembles the discrete Laplacian matrix for `grid`.
pub fn build_laplacian(grid: &GridSpec) -> Result<OperatorMatrix> {
    let n2 = (grid.resolution() * grid.resolution()) as f64;
    Ok(build_by_recurrence(
        grid,
        OperatorKind::Laplacian,
        n2,
        -2.0 * n2,
        n2,
    ))
}

/// Assembles the summed forward-difference matrix for `grid`; applied to the
/// componentwise square of the field it gives the nonlinear transport term.
pub fn build_gradient(grid: &GridSpec) -> Result<OperatorMatrix> {
    let n = grid.resolution() as f64;
    Ok(build_by_recurrence(
        grid,
        OperatorKind::Gradient,
        0.0,
        -n,
        n,
    ))
}

/// Walks all nodes in linear order, handing the callback the per-axis
/// interior neighbor values (forward, backward) with Dirichlet zeros.
fn for_each_node(
    u: &LatticeField,
    mut f: impl FnMut(usize, f64, &dyn Fn(usize) -> (f64, f64)) -> f64,
    out: &mut [f64],
) {
    let grid = u.grid();
    let m = grid.axis_len();
    let d = grid.dim();
    let values = u.values();
    let strides: Vec<usize> = (1..=d).map(|a| grid.axis_stride(a)).collect();
    let mut odometer = vec![1usize; d];
    for i in 0..values.len() {
        let neighbors = |axis0: usize| -> (f64, f64) {
            let fwd = if odometer[axis0] < m {
                values[i + strides[axis0]]
            } else {
                0.0
            };
            let bwd = if odometer[axis0] > 1 {
                values[i - strides[axis0]]
            } else {
                0.0
            };
            (fwd, bwd)
        };
        out[i] = f(i, values[i], &neighbors);
        for c in odometer.iter_mut() {
            if *c < m {
                *c += 1;
                break;
            }
            *c = 1;
        }
    }
}

/// Stencil form of the discrete Laplacian:
/// `n^2 * sum_i [u(x+e_i/n) + u(x-e_i/n) - 2 u(x)]`.
pub fn apply_laplacian(u: &LatticeField) -> LatticeField {
    let grid = u.grid();
    let n2 = (grid.resolution() * grid.resolution()) as f64;
    let d = grid.dim();
    let mut out = vec![0.0; grid.node_count()];
    for_each_node(
        u,
        |_, ui, neighbors| {
            let mut acc = 0.0;
            for axis0 in 0..d {
                let (fwd, bwd) = neighbors(axis0);
                acc += fwd + bwd - 2.0 * ui;
            }
            n2 * acc
        },
        &mut out,
    );
    LatticeField::new(grid, out).expect("stencil output matches grid")
}

/// Stencil form of the summed forward difference of the squared field:
/// `sum_i n * [u(x+e_i/n)^2 - u(x)^2]`.
pub fn apply_gradient_sq(u: &LatticeField) -> LatticeField {
    let grid = u.grid();
    let n = grid.resolution() as f64;
    let d = grid.dim();
    let mut out = vec![0.0; grid.node_count()];
    for_each_node(
        u,
        |_, ui, neighbors| {
            let mut acc = 0.0;
            for axis0 in 0..d {
                let (fwd, _) = neighbors(axis0);
                acc += fwd * fwd - ui * ui;
            }
            n * acc
        },
        &mut out,
    );
    LatticeField::new(grid, out).expect("stencil output matches grid")
}

/// Adjoint-side gradient for moving the transport term onto a test function:
/// `sum_i n * [v(x) - v(x-e_i/n)]` with Dirichlet zeros, the exact transpose
/// identity `<phi, B w> = -<apply_gradient_adjoint(phi), w>` for every `w`.
pub fn apply_gradient_adjoint(v: &LatticeField) -> LatticeField {
    let grid = v.grid();
    let n = grid.resolution() as f64;
    let d = grid.dim();
    let mut out = vec![0.0; grid.node_count()];
    for_each_node(
        v,
        |_, vi, neighbors| {
            let mut acc = 0.0;
            for axis0 in 0..d {
                let (_, bwd) = neighbors(axis0);
                acc += vi - bwd;
            }
            n * acc
        },
        &mut out,
    );
    LatticeField::new(grid, out).expect("stencil output matches grid")
}

/// Drift of the semi-discretized system: `A u + 1/2 B u^2` with the square
/// taken componentwise.
pub fn drift(
    u: &LatticeField,
    laplacian: &OperatorMatrix,
    gradient: &OperatorMatrix,
) -> Result<LatticeField> {
    if laplacian.grid() != u.grid() || gradient.grid() != u.grid() {
        return Err(Error::Shape(
            "drift operators built for a different grid".into(),
        ));
    }
    let mut out = vec![0.0; u.values().len()];
    let mut scratch = vec![0.0; u.values().len()];
    laplacian.apply_slice(u.values(), &mut out);
    let squared: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    gradient.apply_slice(&squared, &mut scratch);
    for (o, s) in out.iter_mut().zip(&scratch) {
        *o += 0.5 * s;
    }
    LatticeField::new(u.grid(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn field(d: usize, n: usize, values: &[f64]) -> LatticeField {
        LatticeField::new(GridSpec::new(d, n).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn laplacian_stencil_examples() {
        let u = field(1, 3, &[1.0, 1.0]);
        assert_eq!(apply_laplacian(&u).values(), &[-9.0, -9.0]);
        let u = field(1, 3, &[1.0, 0.0]);
        assert_eq!(apply_laplacian(&u).values(), &[-18.0, 9.0]);
        let z = LatticeField::zeros(GridSpec::new(2, 4).unwrap());
        assert!(apply_laplacian(&z).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_stencil_examples() {
        let u = field(1, 3, &[1.0, 1.0]);
        assert_eq!(apply_gradient_sq(&u).values(), &[0.0, -3.0]);
        let u = field(2, 3, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(apply_gradient_sq(&u).values(), &[0.0, -3.0, -3.0, -6.0]);
        let z = LatticeField::zeros(GridSpec::new(1, 5).unwrap());
        assert!(apply_gradient_sq(&z).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn laplacian_matrix_ground_truth() {
        let g = GridSpec::new(1, 3).unwrap();
        let a = build_laplacian(&g).unwrap();
        let dense = a.to_dense();
        assert_eq!(dense[(0, 0)], -18.0);
        assert_eq!(dense[(0, 1)], 9.0);
        assert_eq!(dense[(1, 0)], 9.0);
        assert_eq!(dense[(1, 1)], -18.0);

        let g = GridSpec::new(1, 2).unwrap();
        let a = build_laplacian(&g).unwrap();
        assert_eq!(a.to_dense()[(0, 0)], -8.0);
    }

    #[test]
    fn gradient_matrix_ground_truth() {
        let g = GridSpec::new(1, 3).unwrap();
        let b = build_gradient(&g).unwrap();
        let dense = b.to_dense();
        assert_eq!(dense[(0, 0)], -3.0);
        assert_eq!(dense[(0, 1)], 3.0);
        assert_eq!(dense[(1, 0)], 0.0);
        assert_eq!(dense[(1, 1)], -3.0);

        // hand-derived 4x4 from the block recurrence
        let g = GridSpec::new(2, 3).unwrap();
        let b = build_gradient(&g).unwrap().to_dense();
        let expected = [
            [-6.0, 3.0, 3.0, 0.0],
            [0.0, -6.0, 0.0, 3.0],
            [0.0, 0.0, -6.0, 3.0],
            [0.0, 0.0, 0.0, -6.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(b[(i, j)], expected[i][j], "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn matrix_and_stencil_paths_agree() {
        let mut rng = StdRng::seed_from_u64(42);
        for d in 1..=3usize {
            for n in 2..=5usize {
                let g = GridSpec::new(d, n).unwrap();
                let a = build_laplacian(&g).unwrap();
                let b = build_gradient(&g).unwrap();
                for _ in 0..20 {
                    let u = LatticeField::new(
                        g,
                        (0..g.node_count()).map(|_| rng.random::<f64>()).collect(),
                    )
                    .unwrap();
                    let via_matrix = a.apply(&u).unwrap();
                    let via_stencil = apply_laplacian(&u);
                    let scale = (n * n) as f64;
                    for (x, y) in via_matrix.values().iter().zip(via_stencil.values()) {
                        assert!((x - y).abs() <= 1e-12 * scale, "laplacian d={d} n={n}");
                    }
                    let via_matrix = b.apply(&u.squared()).unwrap();
                    let via_stencil = apply_gradient_sq(&u);
                    for (x, y) in via_matrix.values().iter().zip(via_stencil.values()) {
                        assert!((x - y).abs() <= 1e-12 * n as f64, "gradient d={d} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_adjoint_is_exact_transpose() {
        let mut rng = StdRng::seed_from_u64(7);
        for d in 1..=3usize {
            for n in [3usize, 4] {
                let g = GridSpec::new(d, n).unwrap();
                let b = build_gradient(&g).unwrap();
                for _ in 0..10 {
                    let phi = LatticeField::new(
                        g,
                        (0..g.node_count())
                            .map(|_| rng.random::<f64>() - 0.5)
                            .collect(),
                    )
                    .unwrap();
                    let w = LatticeField::new(
                        g,
                        (0..g.node_count())
                            .map(|_| rng.random::<f64>() - 0.5)
                            .collect(),
                    )
                    .unwrap();
                    let lhs: f64 = phi
                        .values()
                        .iter()
                        .zip(b.apply(&w).unwrap().values())
                        .map(|(p, bw)| p * bw)
                        .sum();
                    let rhs: f64 = apply_gradient_adjoint(&phi)
                        .values()
                        .iter()
                        .zip(w.values())
                        .map(|(gp, wv)| gp * wv)
                        .sum();
                    assert!((lhs + rhs).abs() < 1e-10, "d={d} n={n}: {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn drift_example() {
        let g = GridSpec::new(1, 3).unwrap();
        let a = build_laplacian(&g).unwrap();
        let b = build_gradient(&g).unwrap();
        let u = field(1, 3, &[1.0, 1.0]);
        let dr = drift(&u, &a, &b).unwrap();
        assert_eq!(dr.values(), &[-9.0, -10.5]);
        let z = LatticeField::zeros(g);
        assert!(drift(&z, &a, &b)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn drift_rejects_mismatched_grid() {
        let g = GridSpec::new(1, 3).unwrap();
        let other = GridSpec::new(1, 4).unwrap();
        let a = build_laplacian(&other).unwrap();
        let b = build_gradient(&other).unwrap();
        let u = LatticeField::zeros(g);
        assert!(matches!(drift(&u, &a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn laplacian_is_symmetric_negative_semidefinite() {
        // dense eigensolve up to N = 64
        for (d, n) in [(1usize, 8usize), (1, 65), (2, 5), (2, 8), (3, 3), (3, 4)] {
            let g = GridSpec::new(d, n).unwrap();
            let dense = build_laplacian(&g).unwrap().to_dense();
            assert_eq!(dense.clone().transpose(), dense, "symmetry d={d} n={n}");
            let eig = nalgebra::SymmetricEigen::new(dense);
            let scale = 2.0 * (d * n * n) as f64;
            for &lambda in eig.eigenvalues.iter() {
                assert!(lambda <= 1e-10 * scale, "eigenvalue {lambda} > 0");
            }
        }
    }

    #[test]
    fn row_sums_count_missing_neighbors() {
        for (d, n) in [(1usize, 5usize), (2, 4), (3, 3)] {
            let g = GridSpec::new(d, n).unwrap();
            let a = build_laplacian(&g).unwrap();
            let b = build_gradient(&g).unwrap();
            let m = g.axis_len();
            let n2 = (n * n) as f64;
            for (i, k) in g.multi_indices().enumerate() {
                let missing_any: usize = k
                    .components()
                    .iter()
                    .map(|&c| usize::from(c == 1) + usize::from(c == m))
                    .sum();
                let missing_fwd: usize = k.components().iter().filter(|&&c| c == m).count();
                let row_a: f64 = (1..=g.node_count())
                    .map(|j| a.entry(i + 1, j).unwrap())
                    .sum();
                let row_b: f64 = (1..=g.node_count())
                    .map(|j| b.entry(i + 1, j).unwrap())
                    .sum();
                assert!(
                    (row_a + n2 * missing_any as f64).abs() < 1e-9,
                    "A row sum at {k}"
                );
                assert!(
                    (row_b + n as f64 * missing_fwd as f64).abs() < 1e-9,
                    "B row sum at {k}"
                );
            }
        }
    }

    #[test]
    fn off_diagonal_entries_are_nonnegative() {
        for (d, n) in [(1usize, 6usize), (2, 4), (3, 3)] {
            let g = GridSpec::new(d, n).unwrap();
            for op in [build_laplacian(&g).unwrap(), build_gradient(&g).unwrap()] {
                for (i, j, v) in op.triples() {
                    if i != j {
                        assert!(v >= 0.0, "negative off-diagonal at ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_matrix_is_upper_triangular() {
        let g = GridSpec::new(3, 4).unwrap();
        let b = build_gradient(&g).unwrap();
        for (i, j, v) in b.triples() {
            if v != 0.0 {
                assert!(j >= i, "entry below the diagonal at ({i},{j})");
            }
        }
    }

    #[test]
    fn coordinate_text_matches_layout() {
        let g = GridSpec::new(1, 3).unwrap();
        let b = build_gradient(&g).unwrap();
        assert_eq!(b.coordinate_text(), "1 1 -3\n1 2 3\n2 2 -3\n");
    }
}
