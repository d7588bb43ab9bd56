//! Linear-algebra utilities shared by the steering and diagnostics pipeline:
//! PCA over stacked difference vectors, orthogonal projection, unit
//! normalization, cosine similarity, and rank aggregation.
//!
//! Everything here is pure and operates on plain `f64` slices so hooks and
//! tests can compose it freely.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise dot-product bound for a basis passed to [`project_out`].
pub const ORTHO_TOL: f64 = 1e-6;
/// Pairwise orthogonality guaranteed for PCA components.
pub const COMPONENT_ORTHO_TOL: f64 = 1e-8;
/// Unit-norm tolerance for PCA components.
pub const UNIT_NORM_TOL: f64 = 1e-10;
/// Below this norm a vector counts as degenerate.
pub const MIN_NORM: f64 = 1e-12;
/// Eigenvalues below this fraction of the largest are treated as rank loss.
pub const RANK_REL_TOL: f64 = 1e-12;

/// Dense row-major matrix of finite `f64` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                what: "matrix data length".into(),
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("matrix contains non-finite values".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("matrix rows".into()));
        }
        let cols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension {
                    what: format!("row {i}"),
                    expected: cols,
                    got: r.len(),
                });
            }
        }
        Matrix::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Principal components of a mean-centered sample, eigenvalue-descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// Unit-norm components; pairwise orthogonal within [`COMPONENT_ORTHO_TOL`].
    pub components: Vec<Vec<f64>>,
    /// Sample variances along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    /// Column mean subtracted before decomposition.
    pub mean: Vec<f64>,
    /// True when fewer independent directions existed than were requested.
    pub rank_deficient: bool,
}

/// Top-`k` principal components of the sample covariance of `x`.
///
/// Components follow the sign convention that the largest-magnitude entry is
/// positive, so artifacts are byte-comparable across runs.
pub fn pca_fit(x: &Matrix, k: usize) -> Result<PcaResult> {
    let n = x.rows();
    let d = x.cols();
    if n < 2 {
        return Err(Error::EmptyInput(format!(
            "pca needs at least 2 rows, got {n}"
        )));
    }
    let k_max = (n - 1).min(d);
    if k == 0 || k > k_max {
        return Err(Error::Dimension {
            what: "pca component count".into(),
            expected: k_max,
            got: k,
        });
    }

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    // Sample covariance of the centered rows, normalized by n - 1.
    let mut cov = vec![0.0; d * d];
    for i in 0..n {
        let r = x.row(i);
        for a in 0..d {
            let ca = r[a] - mean[a];
            for b in a..d {
                cov[a * d + b] += ca * (r[b] - mean[b]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in a..d {
            let v = cov[a * d + b] / denom;
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }

    let (eigvals, eigvecs) = jacobi_eigh(&cov, d);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigvals[b]
            .partial_cmp(&eigvals[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let lambda_max = eigvals[order[0]].max(0.0);
    let cutoff = lambda_max * RANK_REL_TOL;

    let mut components = Vec::new();
    let mut explained = Vec::new();
    for &idx in order.iter().take(k) {
        let lambda = eigvals[idx];
        if lambda <= cutoff || lambda <= 0.0 {
            break;
        }
        let mut comp: Vec<f64> = (0..d).map(|r| eigvecs[r * d + idx]).collect();
        fix_sign(&mut comp);
        components.push(comp);
        explained.push(lambda);
    }

    let rank_deficient = components.len() < k;
    Ok(PcaResult {
        components,
        explained_variance: explained,
        mean,
        rank_deficient,
    })
}

/// Flip so the largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric `n x n` matrix.
///
/// Returns eigenvalues and the eigenvector matrix in column-major pairing:
/// eigenvector `j` is `vecs[i * n + j]` for `i` in `0..n`.
fn jacobi_eigh(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return ((0..n).map(|i| m[i * n + i]).collect(), v);
    }
    let tol = 1e-15 * frob;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let mip = m[i * n + p];
                    let miq = m[i * n + q];
                    m[i * n + p] = c * mip - s * miq;
                    m[i * n + q] = s * mip + c * miq;
                }
                for j in 0..n {
                    let mpj = m[p * n + j];
                    let mqj = m[q * n + j];
                    m[p * n + j] = c * mpj - s * mqj;
                    m[q * n + j] = s * mpj + c * mqj;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    ((0..n).map(|i| m[i * n + i]).collect(), v)
}

/// `h` minus its projection onto the span of `basis`.
///
/// The basis must be unit-norm and pairwise orthogonal within [`ORTHO_TOL`];
/// anything else is a contract violation, not a silent best effort.
pub fn project_out(h: &[f64], basis: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_basis(h.len(), basis, ORTHO_TOL)?;
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("projection input is non-finite".into()));
    }
    let mut out = h.to_vec();
    for v in basis {
        let dot = dot(&out, v);
        for (o, b) in out.iter_mut().zip(v) {
            *o -= dot * b;
        }
    }
    Ok(out)
}

pub(crate) fn check_basis(dim: usize, basis: &[Vec<f64>], tol: f64) -> Result<()> {
    for (i, v) in basis.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::Dimension {
                what: format!("basis vector {i}"),
                expected: dim,
                got: v.len(),
            });
        }
        let n = norm(v);
        if (n - 1.0).abs() > tol {
            return Err(Error::NonOrthonormal(format!(
                "vector {i} has norm {n:.12}"
            )));
        }
        for (j, w) in basis.iter().enumerate().take(i) {
            let d = dot(v, w).abs();
            if d > tol {
                return Err(Error::NonOrthonormal(format!(
                    "vectors {j} and {i} have |dot| = {d:.3e}"
                )));
            }
        }
    }
    Ok(())
}

/// Scale `w` to unit norm. Near-zero input is a degenerate-vector error.
pub fn unit_normalize(w: &[f64]) -> Result<Vec<f64>> {
    let n = norm(w);
    if !n.is_finite() || n <= MIN_NORM {
        return Err(Error::Degenerate {
            what: "unit_normalize input".into(),
            norm: n,
        });
    }
    Ok(w.iter().map(|x| x / n).collect())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; degenerate inputs are an error rather than NaN.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            what: "cosine".into(),
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na <= MIN_NORM || nb <= MIN_NORM {
        return Err(Error::Degenerate {
            what: "cosine input".into(),
            norm: na.min(nb),
        });
    }
    Ok(dot(a, b) / (na * nb))
}

/// Per-criterion ranks, rank sums, and the selected index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    /// `ranks[list][item]`, 1.0 = best; ties share the mean rank.
    pub ranks: Vec<Vec<f64>>,
    pub rank_sums: Vec<f64>,
    pub selected: usize,
    /// True when another index shared the winning rank sum.
    pub tied: bool,
}

/// Rank each score list (1 = best per its flag, mean ranks on ties) and pick
/// the index with the lowest rank sum; ties resolve to the lowest index.
pub fn rank_aggregate(score_lists: &[Vec<f64>], higher_is_better: &[bool]) -> Result<RankTable> {
    if score_lists.is_empty() {
        return Err(Error::EmptyInput("rank_aggregate score lists".into()));
    }
    if higher_is_better.len() != score_lists.len() {
        return Err(Error::Dimension {
            what: "higher_is_better flags".into(),
            expected: score_lists.len(),
            got: higher_is_better.len(),
        });
    }
    let n = score_lists[0].len();
    if n == 0 {
        return Err(Error::EmptyInput("rank_aggregate scores".into()));
    }
    for (i, list) in score_lists.iter().enumerate() {
        if list.len() != n {
            return Err(Error::Dimension {
                what: format!("score list {i}"),
                expected: n,
                got: list.len(),
            });
        }
        if list.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("score list {i} has non-finite entries")));
        }
    }

    let mut ranks = Vec::with_capacity(score_lists.len());
    for (list, &hib) in score_lists.iter().zip(higher_is_better) {
        ranks.push(rank_with_mean_ties(list, hib));
    }

    let mut rank_sums = vec![0.0; n];
    for r in &ranks {
        for (s, v) in rank_sums.iter_mut().zip(r) {
            *s += v;
        }
    }

    let mut selected = 0;
    for (i, &s) in rank_sums.iter().enumerate() {
        if s < rank_sums[selected] {
            selected = i;
        }
    }
    let tied = rank_sums
        .iter()
        .enumerate()
        .any(|(i, &s)| i != selected && s == rank_sums[selected]);

    Ok(RankTable {
        ranks,
        rank_sums,
        selected,
        tied,
    })
}

fn rank_with_mean_ties(scores: &[f64], higher_is_better: bool) -> Vec<f64> {
    let n = scores.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        let ord = scores[a]
            .partial_cmp(&scores[b])
            .unwrap_or(std::cmp::Ordering::Equal);
        if higher_is_better {
            ord.reverse().then(a.cmp(&b))
        } else {
            ord.then(a.cmp(&b))
        }
    });
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the mean of ranks i+1..=j+1.
        let mean = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = mean;
        }
        i = j + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    // ------------------------------------------------------------------
    // Independent oracle: power iteration with deflation, test-only.
    // ------------------------------------------------------------------

    fn covariance_oracle(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = rows.len();
        let d = rows[0].len();
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v / n as f64;
            }
        }
        let mut cov = vec![vec![0.0; d]; d];
        for r in rows {
            for a in 0..d {
                for b in 0..d {
                    cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / (n - 1) as f64;
                }
            }
        }
        (mean, cov)
    }

    fn power_iteration_eig(cov: &mut [Vec<f64>], k: usize, seed: u64) -> Vec<(f64, Vec<f64>)> {
        let d = cov.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for _ in 0..k {
            let mut v: Vec<f64> = (0..d)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let mut lambda = 0.0;
            for _ in 0..20_000 {
                let mut w = vec![0.0; d];
                for a in 0..d {
                    for b in 0..d {
                        w[a] += cov[a][b] * v[b];
                    }
                }
                let nw = norm(&w);
                if nw < 1e-300 {
                    break;
                }
                let next: Vec<f64> = w.iter().map(|x| x / nw).collect();
                let delta: f64 = next
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b).abs().min((a + b).abs()))
                    .sum();
                v = next;
                lambda = nw;
                if delta < 1e-15 {
                    break;
                }
            }
            for a in 0..d {
                for b in 0..d {
                    cov[a][b] -= lambda * v[a] * v[b];
                }
            }
            out.push((lambda, v));
        }
        out
    }

    fn angle_between(a: &[f64], b: &[f64]) -> f64 {
        let c = dot(a, b).abs() / (norm(a) * norm(b));
        c.min(1.0).acos()
    }

    #[test]
    fn pca_hand_example_two_dims() {
        let x = Matrix::from_rows(&[
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![2.0, 0.0],
            vec![-2.0, 0.0],
        ])
        .unwrap();
        let r = pca_fit(&x, 1).unwrap();
        assert_eq!(r.components.len(), 1);
        assert!((r.components[0][0] - 1.0).abs() < 1e-12);
        assert!(r.components[0][1].abs() < 1e-12);
        assert!((r.explained_variance[0] - 10.0 / 3.0).abs() < 1e-12);
        assert!(!r.rank_deficient);
    }

    #[test]
    fn pca_identical_rows_is_rank_deficient_with_zero_variance() {
        let x = Matrix::from_rows(&[vec![3.0, 4.0], vec![3.0, 4.0], vec![3.0, 4.0]]).unwrap();
        let r = pca_fit(&x, 1).unwrap();
        assert!(r.rank_deficient);
        assert!(r.explained_variance.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pca_matches_power_iteration_oracle_on_anisotropic_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let scales = [8.0, 2.0, 0.5];
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| {
                scales
                    .iter()
                    .map(|s| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect()
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let r = pca_fit(&x, 3).unwrap();

        let (_, mut cov) = covariance_oracle(&rows);
        let oracle = power_iteration_eig(&mut cov, 3, 99);
        for (mine, (lambda, vec)) in r.components.iter().zip(&oracle) {
            assert!(angle_between(mine, vec) < 1e-6);
            let pos = oracle.iter().position(|(l, _)| l == lambda).unwrap();
            assert!((r.explained_variance[pos] - lambda).abs() / lambda < 1e-9);
        }
    }

    #[test]
    fn pca_k_out_of_range_is_dimension_error() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // rows - 1 = 1, so k = 2 is out of range.
        assert!(matches!(
            pca_fit(&x, 2),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn pca_full_rank_reconstructs_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| {
                (0..4)
                    .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                    .collect()
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let r = pca_fit(&x, 4).unwrap();
        assert_eq!(r.components.len(), 4);
        for row in &rows {
            let centered: Vec<f64> = row.iter().zip(&r.mean).map(|(a, m)| a - m).collect();
            let mut recon = r.mean.clone();
            for c in &r.components {
                let coeff = dot(&centered, c);
                for (o, b) in recon.iter_mut().zip(c) {
                    *o += coeff * b;
                }
            }
            for (a, b) in row.iter().zip(&recon) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn project_out_axis() {
        let r = project_out(&[3.0, 4.0], &[vec![1.0, 0.0]]).unwrap();
        assert_eq!(r, vec![0.0, 4.0]);
    }

    #[test]
    fn project_out_empty_basis_is_identity() {
        let h = vec![1.5, -2.5, 3.5];
        assert_eq!(project_out(&h, &[]).unwrap(), h);
    }

    #[test]
    fn project_out_coordinate_elimination() {
        let r = project_out(
            &[1.0, 1.0, 1.0],
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(r, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn project_out_rejects_bad_basis() {
        assert!(matches!(
            project_out(&[1.0, 0.0], &[vec![2.0, 0.0]]),
            Err(Error::NonOrthonormal(_))
        ));
        let inv = 1.0 / 2f64.sqrt();
        assert!(matches!(
            project_out(&[1.0, 0.0], &[vec![1.0, 0.0], vec![inv, inv]]),
            Err(Error::NonOrthonormal(_))
        ));
        assert!(matches!(
            project_out(&[1.0, 0.0], &[vec![1.0, 0.0, 0.0]]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn unit_normalize_345() {
        let r = unit_normalize(&[3.0, 4.0]).unwrap();
        assert!((r[0] - 0.6).abs() < 1e-15);
        assert!((r[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn unit_normalize_idempotent_and_guards_zero() {
        let u = unit_normalize(&[0.3, -0.4, 0.5]).unwrap();
        let again = unit_normalize(&u).unwrap();
        for (a, b) in u.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(
            unit_normalize(&[0.0, 0.0]),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn rank_aggregate_three_list_example() {
        let lists = vec![
            vec![0.1, 0.9, 0.5],
            vec![0.2, 0.8, 0.4],
            vec![0.0, 0.7, 0.9],
        ];
        let t = rank_aggregate(&lists, &[true, true, true]).unwrap();
        assert_eq!(t.selected, 1);
        assert_eq!(t.rank_sums[1], 4.0);
        assert!(!t.tied);
    }

    #[test]
    fn rank_aggregate_single_layer() {
        let t = rank_aggregate(&[vec![0.4]], &[true]).unwrap();
        assert_eq!(t.selected, 0);
    }

    #[test]
    fn rank_aggregate_full_tie_picks_lowest_index() {
        let lists = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let t = rank_aggregate(&lists, &[true, true]).unwrap();
        assert_eq!(t.selected, 0);
        assert!(t.tied);
        assert_eq!(t.ranks[0], vec![1.5, 1.5]);
    }

    #[test]
    fn rank_aggregate_empty_is_error() {
        assert!(matches!(
            rank_aggregate(&[], &[]),
            Err(Error::EmptyInput(_))
        ));
    }

    // ------------------------------------------------------------------
    // Property tests
    // ------------------------------------------------------------------

    fn orthonormal_basis(dim: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < k {
            let v: Vec<f64> = (0..dim)
                .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            let mut w = project_out(&v, &basis).unwrap();
            if let Ok(u) = unit_normalize(&w) {
                w = u;
                basis.push(w);
            }
        }
        basis
    }

    proptest! {
        #[test]
        fn projection_idempotent_and_non_expansive(seed in 0u64..500, dim in 3usize..16) {
            let k = 1 + (seed as usize) % (dim / 2);
            let basis = orthonormal_basis(dim, k, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
            let h: Vec<f64> = (0..dim)
                .map(|_| 10.0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            let once = project_out(&h, &basis).unwrap();
            let twice = project_out(&once, &basis).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            prop_assert!(norm(&once) <= norm(&h) + 1e-12);
            for v in &basis {
                prop_assert!(dot(&once, v).abs() <= 1e-6 * norm(&h).max(1.0));
            }
        }

        #[test]
        fn rank_aggregate_invariant_under_monotone_rescale(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 3 + (seed as usize) % 6;
            let lists: Vec<Vec<f64>> = (0..3)
                .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect();
            let flags = [true, true, true];
            let base = rank_aggregate(&lists, &flags).unwrap();
            let which = (seed as usize) % 3;
            let mut rescaled = lists.clone();
            // Strictly increasing map x -> exp(2x) + 3x.
            rescaled[which] = rescaled[which]
                .iter()
                .map(|x| (2.0 * x).exp() + 3.0 * x)
                .collect();
            let after = rank_aggregate(&rescaled, &flags).unwrap();
            prop_assert_eq!(base.selected, after.selected);
        }
    }
}
