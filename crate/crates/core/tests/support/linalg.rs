//! Normal-equations least squares by Gauss-Jordan elimination, for checking
//! the QR-based fit.

/// Inverse of a small dense matrix with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..k).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k).max_by(|&x, &y| m[x][col].abs().total_cmp(&m[y][col].abs())).unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..k {
            if row != col {
                let f = m[row][col];
                let src = m[col].clone();
                for (v, s) in m[row].iter_mut().zip(src) {
                    *v -= f * s;
                }
            }
        }
    }
    m.into_iter().map(|r| r[k..].to_vec()).collect()
}

/// (coefficients, standard errors) from `(X'X)^-1 X'y`.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let k = x[0].len();
    let xtx: Vec<Vec<f64>> = (0..k)
        .map(|a| (0..k).map(|b| (0..n).map(|i| x[i][a] * x[i][b]).sum()).collect())
        .collect();
    let xty: Vec<f64> = (0..k).map(|a| (0..n).map(|i| x[i][a] * y[i]).sum()).collect();
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let rss: f64 = (0..n)
        .map(|i| {
            let fit: f64 = (0..k).map(|j| x[i][j] * beta[j]).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    let s2 = rss / (n - k) as f64;
    let se = (0..k).map(|j| (s2 * inv[j][j]).sqrt()).collect();
    (beta, se)
}
