use crate::error::{Error, Result};

/// Relative pivot tolerance: pivots below `RELATIVE_TOL * max diagonal`
/// end the factorization.
pub const RELATIVE_TOL: f64 = 1e-12;

/// Factor `L` (`dim x rank`, rows in the original order) with `L L^T = C`.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerFactor {
    dim: usize,
    rank: usize,
    values: Vec<f64>,
}

impl LowerFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.rank..(i + 1) * self.rank]
    }

    /// Reconstructs `L L^T`.
    pub fn product(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect()
    }
}

/// Diagonally pivoted Cholesky factorization of a symmetric positive
/// semidefinite matrix.
pub fn pivoted_cholesky(cov: &[Vec<f64>]) -> Result<LowerFactor> {
    let d = cov.len();
    if cov.iter().any(|row| row.len() != d) {
        return Err(Error::Factorization("covariance must be square".into()));
    }
    let scale = cov.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if cov.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Factorization("covariance has non-finite entries".into()));
    }
    #[allow(clippy::needless_range_loop)]
    for i in 0..d {
        for j in 0..i {
            if (cov[i][j] - cov[j][i]).abs() > RELATIVE_TOL * scale {
                return Err(Error::Factorization(format!("covariance not symmetric at ({i}, {j})")));
            }
        }
    }

    let max_diag = (0..d).map(|i| cov[i][i]).fold(0.0f64, f64::max);
    let tol = RELATIVE_TOL * max_diag;
    let mut a: Vec<Vec<f64>> = cov.to_vec();
    let mut perm: Vec<usize> = (0..d).collect();
    // columns of L in pivot order, indexed by original row
    let mut cols: Vec<Vec<f64>> = Vec::new();

    let mut rank = 0;
    while rank < d {
        let (p, piv) = (rank..d)
            .map(|i| (i, a[perm[i]][perm[i]]))
            .fold((rank, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best });
        if piv <= tol {
            break;
        }
        perm.swap(rank, p);
        let pk = perm[rank];
        let lkk = piv.sqrt();
        let mut col = vec![0.0; d];
        col[pk] = lkk;
        for &pi in &perm[rank + 1..] {
            col[pi] = a[pi][pk] / lkk;
        }
        for &pi in &perm[rank + 1..] {
            for &pj in &perm[rank + 1..] {
                a[pi][pj] -= col[pi] * col[pj];
            }
        }
        cols.push(col);
        rank += 1;
    }

    // The Schur complement left over must be numerically zero and PSD.
    let rest = &perm[rank..];
    for &pi in rest {
        if a[pi][pi] < -tol.max(RELATIVE_TOL * scale) {
            return Err(Error::Factorization(format!(
                "matrix is indefinite (residual diagonal {} at index {pi})",
                a[pi][pi]
            )));
        }
        for &pj in rest {
            let bound = (a[pi][pi].max(0.0) * a[pj][pj].max(0.0)).sqrt() + tol.max(RELATIVE_TOL * scale);
            if a[pi][pj].abs() > bound {
                return Err(Error::Factorization(format!(
                    "matrix is indefinite (residual entry {} at ({pi}, {pj}))",
                    a[pi][pj]
                )));
            }
        }
    }

    let mut values = vec![0.0; d * rank];
    for (k, col) in cols.iter().enumerate() {
        for i in 0..d {
            values[i * rank + k] = col[i];
        }
    }
    Ok(LowerFactor { dim: d, rank, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn factors_positive_definite() {
        let c = vec![vec![4.0, 2.0, 0.4], vec![2.0, 3.0, 0.1], vec![0.4, 0.1, 1.0]];
        let l = pivoted_cholesky(&c).unwrap();
        assert_eq!(l.rank(), 3);
        assert!(close(&l.product(), &c, 1e-12));
    }

    #[test]
    fn factors_semidefinite() {
        // rank one: v v^T with v = (1, 2, 0)
        let c = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 0.0]];
        let l = pivoted_cholesky(&c).unwrap();
        assert_eq!(l.rank(), 1);
        assert!(close(&l.product(), &c, 1e-12));
    }

    #[test]
    fn rejects_indefinite() {
        let c = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(pivoted_cholesky(&c), Err(Error::Factorization(_))));
        let c = vec![vec![1.0, 0.0], vec![0.0, -1.0]];
        assert!(pivoted_cholesky(&c).is_err());
    }

    #[test]
    fn rejects_asymmetric() {
        let c = vec![vec![1.0, 0.5], vec![0.4, 1.0]];
        assert!(pivoted_cholesky(&c).is_err());
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let l = pivoted_cholesky(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(l.rank(), 0);
    }
}
