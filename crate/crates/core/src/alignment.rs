//! Exact dynamic time warping.
//!
//! Paths move through an `n x m` grid from `(0, 0)` to `(n-1, m-1)` using the
//! steps right `(0,1)`, down `(1,0)` and diagonal `(1,1)`. Cells outside the grid
//! behave as `+inf` in the accumulated-cost recursion.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{euclidean, Matrix};

/// Grid size above which [`enumerate_alignments`] refuses to run.
pub const ENUMERATION_LIMIT: usize = 7;

/// Pairwise distances between the frames of two sequences; entry `(i, j)` is
/// `d(z1_i, z2_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix(Matrix);

impl DistanceMatrix {
    /// Wraps a matrix, checking that it is nonempty with finite nonnegative entries.
    pub fn new(values: Matrix) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("distance matrix is empty"));
        }
        if values.as_slice().iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(invalid("distance entries must be finite and nonnegative"));
        }
        Ok(Self(values))
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn cols(&self) -> usize {
        self.0.cols()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }
}

impl core::ops::Index<(usize, usize)> for DistanceMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Monotone path of `(i, j)` steps through the grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentPath {
    steps: Vec<(usize, usize)>,
}

impl AlignmentPath {
    /// Validates the steps against an `n x m` grid.
    pub fn new(steps: Vec<(usize, usize)>, n: usize, m: usize) -> Result<Self> {
        let path = Self { steps };
        path.validate(n, m)?;
        Ok(path)
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<()> {
        let steps = &self.steps;
        if n == 0 || m == 0 {
            return Err(invalid("alignment grid is empty"));
        }
        if steps.first() != Some(&(0, 0)) {
            return Err(invalid("path must start at (0, 0)"));
        }
        if steps.last() != Some(&(n - 1, m - 1)) {
            return Err(invalid("path must end at the bottom-right cell"));
        }
        for &(i, j) in steps {
            if i >= n || j >= m {
                return Err(invalid("path step out of bounds"));
            }
        }
        for w in steps.windows(2) {
            let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            if !matches!((di, dj), (0, 1) | (1, 0) | (1, 1)) {
                return Err(invalid("consecutive path steps must move right, down or diagonally"));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Sum of `d` over the path, i.e. `<A, D>` for the path's alignment matrix.
    pub fn cost(&self, d: &DistanceMatrix) -> f64 {
        self.steps.iter().map(|&ij| d[ij]).sum()
    }
}

/// Binary `n x m` matrix marking the cells a path visits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl AlignmentMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.cols + j]
    }

    pub fn identity(n: usize) -> Self {
        let mut cells = vec![false; n * n];
        for i in 0..n {
            cells[i * n + i] = true;
        }
        Self {
            rows: n,
            cols: n,
            cells,
        }
    }

    /// Builds a matrix from explicit 0/1 rows without path validation. Every
    /// consumer that relies on row/column coverage checks it itself.
    pub fn from_rows(rows: &[&[u8]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            cells.extend(r.iter().map(|&v| v != 0));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            cells,
        })
    }

    pub fn row_sum(&self, i: usize) -> usize {
        (0..self.cols).filter(|&j| self.get(i, j)).count()
    }

    pub fn col_sum(&self, j: usize) -> usize {
        (0..self.rows).filter(|&i| self.get(i, j)).count()
    }

    /// `<A, D>`.
    pub fn inner(&self, d: &DistanceMatrix) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) {
                    s += d[(i, j)];
                }
            }
        }
        s
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| if self.get(i, j) { 1.0 } else { 0.0 })
    }
}

/// Euclidean distance matrix between two embedding sequences.
pub fn distance_matrix(z1: &Matrix, z2: &Matrix) -> Result<DistanceMatrix> {
    distance_matrix_with(z1, z2, euclidean)
}

/// Distance matrix under an arbitrary frame distance.
pub fn distance_matrix_with(
    z1: &Matrix,
    z2: &Matrix,
    dist: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<DistanceMatrix> {
    if z1.rows() == 0 || z2.rows() == 0 {
        return Err(invalid("sequences must be nonempty"));
    }
    if z1.cols() != z2.cols() {
        return Err(Error::DimensionMismatch {
            expected: z1.cols(),
            got: z2.cols(),
        });
    }
    let m = Matrix::from_fn(z1.rows(), z2.rows(), |i, j| dist(z1.row(i), z2.row(j)));
    DistanceMatrix::new(m)
}

/// Accumulated-cost table `r`.
fn accumulate(d: &DistanceMatrix) -> Matrix {
    let (n, m) = (d.rows(), d.cols());
    let mut r = Matrix::filled(n, m, f64::INFINITY);
    for i in 0..n {
        for j in 0..m {
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = if i > 0 { r[(i - 1, j)] } else { f64::INFINITY };
                let left = if j > 0 { r[(i, j - 1)] } else { f64::INFINITY };
                let diag = if i > 0 && j > 0 { r[(i - 1, j - 1)] } else { f64::INFINITY };
                up.min(left).min(diag)
            };
            r[(i, j)] = d[(i, j)] + best;
        }
    }
    r
}

/// Minimum alignment cost `min_A <A, D>`.
pub fn dtw_cost(d: &DistanceMatrix) -> f64 {
    let r = accumulate(d);
    r[(d.rows() - 1, d.cols() - 1)]
}

/// Minimum-cost path. Ties in the backtrack prefer the diagonal predecessor,
/// then the vertical one `(i-1, j)`, then the horizontal one `(i, j-1)`.
pub fn dtw_path(d: &DistanceMatrix) -> AlignmentPath {
    let r = accumulate(d);
    let (mut i, mut j) = (d.rows() - 1, d.cols() - 1);
    let mut steps = vec![(i, j)];
    while (i, j) != (0, 0) {
        let (ni, nj) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = r[(i - 1, j - 1)];
            let up = r[(i - 1, j)];
            let left = r[(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        i = ni;
        j = nj;
        steps.push((i, j));
    }
    steps.reverse();
    AlignmentPath { steps }
}

/// Binary matrix form of a path on an `n x m` grid.
pub fn alignment_matrix(path: &AlignmentPath, n: usize, m: usize) -> Result<AlignmentMatrix> {
    path.validate(n, m)?;
    let mut cells = vec![false; n * m];
    for &(i, j) in path.steps() {
        cells[i * m + j] = true;
    }
    Ok(AlignmentMatrix { rows: n, cols: m, cells })
}

/// Every monotone path on an `n x m` grid. Refuses grids larger than
/// [`ENUMERATION_LIMIT`] in either direction.
pub fn enumerate_paths(n: usize, m: usize) -> Result<Vec<AlignmentPath>> {
    if n == 0 || m == 0 {
        return Err(invalid("alignment grid is empty"));
    }
    if n > ENUMERATION_LIMIT || m > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            n,
            m,
            limit: ENUMERATION_LIMIT,
        });
    }
    let mut out = Vec::new();
    let mut stack = vec![(0usize, 0usize)];
    extend_paths(n, m, &mut stack, &mut out);
    Ok(out)
}

fn extend_paths(n: usize, m: usize, stack: &mut Vec<(usize, usize)>, out: &mut Vec<AlignmentPath>) {
    let (i, j) = *stack.last().expect("nonempty");
    if (i, j) == (n - 1, m - 1) {
        out.push(AlignmentPath {
            steps: stack.clone(),
        });
        return;
    }
    for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
        let (ni, nj) = (i + di, j + dj);
        if ni < n && nj < m {
            stack.push((ni, nj));
            extend_paths(n, m, stack, out);
            stack.pop();
        }
    }
}

/// Every alignment matrix on an `n x m` grid.
pub fn enumerate_alignments(n: usize, m: usize) -> Result<Vec<AlignmentMatrix>> {
    enumerate_paths(n, m)?
        .iter()
        .map(|p| alignment_matrix(p, n, m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn delannoy(n: usize, m: usize) -> usize {
        let mut c = vec![vec![1usize; m]; n];
        for i in 1..n {
            for j in 1..m {
                c[i][j] = c[i - 1][j] + c[i][j - 1] + c[i - 1][j - 1];
            }
        }
        c[n - 1][m - 1]
    }

    fn dm(rows: &[&[f64]]) -> DistanceMatrix {
        DistanceMatrix::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    fn brute_min(d: &DistanceMatrix) -> f64 {
        enumerate_alignments(d.rows(), d.cols())
            .unwrap()
            .iter()
            .map(|a| a.inner(d))
            .fold(f64::INFINITY, f64::min)
    }

    fn lcg_matrix(seed: u64, n: usize, m: usize) -> DistanceMatrix {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let v = Matrix::from_fn(n, m, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 * 3.0
        });
        DistanceMatrix::new(v).unwrap()
    }

    #[test]
    fn distance_matrix_three_four_five() {
        let z1 = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let z2 = Matrix::from_rows(&[[3.0, 4.0]]).unwrap();
        assert_eq!(distance_matrix(&z1, &z2).unwrap()[(0, 0)], 5.0);
    }

    #[test]
    fn distance_matrix_self_has_zero_diagonal() {
        let z = Matrix::from_fn(5, 3, |i, j| (i as f64 * 0.7 - j as f64).sin());
        let d = distance_matrix(&z, &z).unwrap();
        for i in 0..5 {
            assert_eq!(d[(i, i)], 0.0);
        }
    }

    #[test]
    fn distance_matrix_matches_scalar_recomputation() {
        let z1 = Matrix::from_fn(4, 3, |i, j| ((i * 3 + j) as f64 * 1.3).sin());
        let z2 = Matrix::from_fn(6, 3, |i, j| ((i * 5 + j) as f64 * 0.4).cos());
        let d = distance_matrix(&z1, &z2).unwrap();
        for i in 0..4 {
            for j in 0..6 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += (z1[(i, k)] - z2[(j, k)]).powi(2);
                }
                assert!((d[(i, j)] - s.sqrt()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn distance_matrix_dimension_mismatch() {
        let z1 = Matrix::zeros(2, 3);
        let z2 = Matrix::zeros(2, 4);
        assert!(matches!(
            distance_matrix(&z1, &z2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pluggable_distance() {
        let z1 = Matrix::from_rows(&[[1.0], [2.0]]).unwrap();
        let z2 = Matrix::from_rows(&[[4.0]]).unwrap();
        let d = distance_matrix_with(&z1, &z2, |a, b| (a[0] - b[0]).abs() * 2.0).unwrap();
        assert_eq!(d[(0, 0)], 6.0);
        assert_eq!(d[(1, 0)], 4.0);
    }

    #[test]
    fn empty_distance_matrix_rejected() {
        assert!(DistanceMatrix::new(Matrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn single_cell() {
        let d = dm(&[&[2.5]]);
        assert_eq!(dtw_cost(&d), 2.5);
        assert_eq!(dtw_path(&d).steps(), &[(0, 0)]);
    }

    #[test]
    fn identical_sequences_cost_zero_and_diagonal_path() {
        let z = Matrix::from_fn(6, 2, |i, j| (i * i + j) as f64);
        let d = distance_matrix(&z, &z).unwrap();
        assert_eq!(dtw_cost(&d), 0.0);
        let expected: Vec<_> = (0..6).map(|i| (i, i)).collect();
        assert_eq!(dtw_path(&d).steps(), expected.as_slice());
    }

    #[test]
    fn random_cost_matches_enumeration() {
        let d = lcg_matrix(3, 4, 5);
        assert_eq!(dtw_cost(&d), brute_min(&d));
    }

    #[test]
    fn random_path_reproduces_cost() {
        for seed in 0..20 {
            let d = lcg_matrix(seed, 5, 5);
            let p = dtw_path(&d);
            p.validate(5, 5).unwrap();
            let a = alignment_matrix(&p, 5, 5).unwrap();
            assert_eq!(a.inner(&d), dtw_cost(&d));
        }
    }

    #[test]
    fn tie_break_prefers_diagonal_then_vertical() {
        // All-zero costs: every predecessor ties, so the path is diagonal
        // and then vertical along the last column.
        let d = DistanceMatrix::new(Matrix::zeros(4, 2)).unwrap();
        assert_eq!(dtw_path(&d).steps(), &[(0, 0), (1, 0), (2, 0), (3, 1)]);
        let d = DistanceMatrix::new(Matrix::zeros(2, 4)).unwrap();
        assert_eq!(dtw_path(&d).steps(), &[(0, 0), (0, 1), (0, 2), (1, 3)]);
    }

    #[test]
    fn alignment_matrix_examples() {
        let diag = AlignmentPath::new(vec![(0, 0), (1, 1), (2, 2)], 3, 3).unwrap();
        assert_eq!(alignment_matrix(&diag, 3, 3).unwrap(), AlignmentMatrix::identity(3));
        let p = AlignmentPath::new(vec![(0, 0), (1, 0), (1, 1)], 2, 2).unwrap();
        let a = alignment_matrix(&p, 2, 2).unwrap();
        assert_eq!(a.to_matrix(), Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0]]).unwrap());
    }

    #[test]
    fn alignment_matrix_rejects_out_of_bounds() {
        let p = AlignmentPath {
            steps: vec![(0, 0), (1, 1), (2, 2)],
        };
        assert!(alignment_matrix(&p, 2, 2).is_err());
    }

    #[test]
    fn invalid_paths_rejected() {
        assert!(AlignmentPath::new(vec![(0, 0), (1, 2)], 2, 3).is_err());
        assert!(AlignmentPath::new(vec![(0, 1), (1, 2)], 2, 3).is_err());
        assert!(AlignmentPath::new(vec![(0, 0), (1, 1)], 2, 3).is_err());
        assert!(AlignmentPath::new(vec![(0, 0), (1, 0), (0, 1)], 2, 2).is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_alignments(2, 2).unwrap().len(), 3);
        assert_eq!(enumerate_alignments(3, 3).unwrap().len(), delannoy(3, 3));
        assert_eq!(delannoy(3, 3), 13);
        for m in 1..=7 {
            assert_eq!(enumerate_alignments(1, m).unwrap().len(), 1);
        }
        for n in 1..=5 {
            for m in 1..=5 {
                assert_eq!(enumerate_paths(n, m).unwrap().len(), delannoy(n, m));
            }
        }
    }

    #[test]
    fn enumeration_guard() {
        assert!(matches!(enumerate_alignments(8, 2), Err(Error::TooLarge { .. })));
        assert!(enumerate_alignments(7, 7).is_ok());
    }

    #[test]
    fn enumerated_alignments_cover_rows_and_columns() {
        for a in enumerate_alignments(3, 4).unwrap() {
            assert!((0..3).all(|i| a.row_sum(i) >= 1));
            assert!((0..4).all(|j| a.col_sum(j) >= 1));
        }
    }

    fn small_matrix() -> impl Strategy<Value = DistanceMatrix> {
        (1usize..=5, 1usize..=5).prop_flat_map(|(n, m)| {
            proptest::collection::vec(0.0f64..10.0, n * m)
                .prop_map(move |v| DistanceMatrix::new(Matrix::from_vec(n, m, v).unwrap()).unwrap())
        })
    }

    proptest! {
        #[test]
        fn cost_equals_enumerated_minimum(d in small_matrix()) {
            prop_assert_eq!(dtw_cost(&d), brute_min(&d));
        }

        #[test]
        fn cost_symmetric_under_transpose(d in small_matrix()) {
            prop_assert_eq!(dtw_cost(&d), dtw_cost(&d.transpose()));
        }

        #[test]
        fn path_valid_and_optimal(d in small_matrix()) {
            let p = dtw_path(&d);
            prop_assert!(p.validate(d.rows(), d.cols()).is_ok());
            prop_assert_eq!(p.cost(&d), dtw_cost(&d));
            let a = alignment_matrix(&p, d.rows(), d.cols()).unwrap();
            prop_assert!((0..d.rows()).all(|i| a.row_sum(i) >= 1));
            prop_assert!((0..d.cols()).all(|j| a.col_sum(j) >= 1));
        }

        #[test]
        fn cost_monotone_in_entries(d in small_matrix(), bump in 0.0f64..5.0, cell in 0usize..25) {
            let (n, m) = (d.rows(), d.cols());
            let k = cell % (n * m);
            let mut v = d.as_matrix().clone();
            v.as_mut_slice()[k] += bump;
            let bumped = DistanceMatrix::new(v).unwrap();
            prop_assert!(dtw_cost(&bumped) >= dtw_cost(&d));
            prop_assert!(dtw_cost(&d) >= 0.0);
        }
    }
}
