use crate::error::{Error, Result};
use crate::mld::MultilevelDictionary;
use crate::numerics::{dist_sq, dot, Matrix};
use crate::scalar::Scalar;

/// Minimum-cost perfect matching on a square cost matrix given row-major as
/// `cost[i][j]`. Returns `col_of_row` and the optimal total.
///
/// Shortest augmenting paths with row/column potentials, `O(n³)`.
pub fn assignment(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = cost.len();
    if cost.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch("assignment cost matrix must be square".into()));
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument("assignment costs must be finite".into()));
    }
    // 1-based arrays; index 0 is the virtual source column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of_row = vec![0; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost[i][col_of_row[i]]).sum();
    Ok((col_of_row, total))
}

/// Best alignment of two dictionaries up to per-level atom permutation and sign.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryDifference {
    /// `‖Ψ − Λ P S‖_F` over all levels.
    pub value: f64,
    /// `permutations[l][j]`: atom of Λ_l matched to ψ_{l,j}.
    pub permutations: Vec<Vec<usize>>,
    pub signs: Vec<Vec<f64>>,
}

/// Matches the columns of `b` to those of `a`; returns the squared difference,
/// the matching and the signs.
pub fn level_difference<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<(f64, Vec<usize>, Vec<f64>)> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "levels are {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let a = a.cast::<f64>();
    let b = b.cast::<f64>();
    let k = a.cols();
    let cost: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| 2.0 - 2.0 * dot(a.col(i), b.col(j)).abs()).collect())
        .collect();
    let (perm, _) = assignment(&cost)?;
    let mut signs = Vec::with_capacity(k);
    let mut sq = 0.0;
    let mut flipped = vec![0.0; a.rows()];
    for (i, &j) in perm.iter().enumerate() {
        let s = if dot(a.col(i), b.col(j)) < 0.0 { -1.0 } else { 1.0 };
        for (f, &x) in flipped.iter_mut().zip(b.col(j)) {
            *f = s * x;
        }
        sq += dist_sq(a.col(i), &flipped);
        signs.push(s);
    }
    Ok((sq, perm, signs))
}

/// Minimum Frobenius distance between two multilevel dictionaries over
/// column permutations and sign changes within each level.
pub fn dictionary_difference<T: Scalar>(
    psi: &MultilevelDictionary<T>,
    lambda: &MultilevelDictionary<T>,
) -> Result<DictionaryDifference> {
    if psi.dim() != lambda.dim() || psi.per_level_k() != lambda.per_level_k() {
        return Err(Error::ShapeMismatch(format!(
            "dictionaries differ in shape: M {} vs {}, K {:?} vs {:?}",
            psi.dim(),
            lambda.dim(),
            psi.per_level_k(),
            lambda.per_level_k()
        )));
    }
    let mut total = 0.0;
    let mut permutations = Vec::new();
    let mut signs = Vec::new();
    for (a, b) in psi.levels().iter().zip(lambda.levels()) {
        let (sq, p, s) = level_difference(a, b)?;
        total += sq;
        permutations.push(p);
        signs.push(s);
    }
    Ok(DictionaryDifference {
        value: total.sqrt(),
        permutations,
        signs,
    })
}
