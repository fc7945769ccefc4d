//! Greedy wedge-volume basis extraction: from a finite vector set pick X₁ of
//! maximal norm, then repeatedly the vector maximizing the wedge volume
//! |X₁∧…∧X_k| (computed through Gram determinants), and express every input
//! vector over the chosen basis. The coefficients are bounded by 2^(d−1).

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct WedgeBasis {
    /// Indices into the input set, in selection order.
    pub basis: Vec<usize>,
    /// One row per input vector: its coordinates over `basis`.
    pub coefficients: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut d = 1.0;
    for col in 0..n {
        let (pivot, _) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            d = -d;
        }
        d *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    d
}

fn gram(s: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter()
        .map(|&i| idx.iter().map(|&j| dot(&s[i], &s[j])).collect())
        .collect()
}

/// Solve the symmetric positive-definite system G x = b.
fn solve(mut g: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = g.len();
    for col in 0..n {
        let (pivot, _) = (col..n)
            .map(|r| (r, g[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        g.swap(pivot, col);
        b.swap(pivot, col);
        for r in col + 1..n {
            let f = g[r][col] / g[col][col];
            for c in col..n {
                g[r][c] -= f * g[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| g[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / g[row][row];
    }
    x
}

/// Relative volume floor below which a candidate counts as dependent.
const VOL_RATIO_FLOOR: f64 = 1e-18;

pub fn wedge_basis(s: &[Vec<f64>]) -> Result<WedgeBasis> {
    let dim = s.first().map(|v| v.len()).unwrap_or(0);
    if s.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("vectors must share one dimension"));
    }
    let mut basis: Vec<usize> = Vec::new();
    while basis.len() < dim {
        // volume² of basis ∪ {y} = det Gram; compare against the Hadamard
        // bound to decide degeneracy scale-freely.
        let mut best: Option<(usize, f64)> = None;
        for i in 0..s.len() {
            if basis.contains(&i) {
                continue;
            }
            let mut idx = basis.clone();
            idx.push(i);
            let vol2 = det(gram(s, &idx));
            let hadamard: f64 = idx.iter().map(|&j| dot(&s[j], &s[j])).product();
            if hadamard <= 0.0 || vol2 <= VOL_RATIO_FLOOR * hadamard {
                continue;
            }
            if best.map(|(_, v)| vol2 > v).unwrap_or(true) {
                best = Some((i, vol2));
            }
        }
        match best {
            Some((i, _)) => basis.push(i),
            None => break,
        }
    }
    let g = gram(s, &basis);
    let coefficients = s
        .iter()
        .map(|y| {
            if basis.is_empty() {
                Vec::new()
            } else {
                let b: Vec<f64> = basis.iter().map(|&i| dot(&s[i], y)).collect();
                solve(g.clone(), b)
            }
        })
        .collect();
    Ok(WedgeBasis { basis, coefficients })
}
