//! Small dense banded solves used by the Newton polish.

/// Solve a tridiagonal system T x = b with partial pivoting (LU with one
/// fill-in superdiagonal). `sub`, `diag`, `sup` have lengths n-1, n, n-1.
/// Returns None when a pivot underflows.
pub fn solve_tridiag_pivoted(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    b: &[f64],
) -> Option<Vec<f64>> {
    let n = diag.len();
    assert!(sub.len() == n - 1 && sup.len() == n - 1 && b.len() == n);
    if n == 0 {
        return Some(Vec::new());
    }
    // Working bands: d (diag), e (first super), f (second super, fill-in)
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    let mut f = vec![0.0; n];
    e[..n - 1].copy_from_slice(sup);
    let low = sub.to_vec();
    let mut rhs = b.to_vec();

    for k in 0..n - 1 {
        let a_kk = d[k];
        let a_k1k = low[k];
        if a_kk.abs() >= a_k1k.abs() {
            if a_kk == 0.0 {
                return None;
            }
            let m = a_k1k / a_kk;
            d[k + 1] -= m * e[k];
            e[k + 1] -= m * f[k];
            rhs[k + 1] -= m * rhs[k];
        } else {
            // swap rows k and k+1
            if a_k1k == 0.0 {
                return None;
            }
            let (dk, ek, fk) = (d[k], e[k], f[k]);
            d[k] = low[k];
            e[k] = d[k + 1];
            f[k] = if k + 1 < n - 1 { e[k + 1] } else { 0.0 };
            let new_d1 = ek - (dk / d[k]) * e[k];
            let new_e1 = fk - (dk / d[k]) * f[k];
            d[k + 1] = new_d1;
            e[k + 1] = new_e1;
            rhs.swap(k, k + 1);
            let m = dk / d[k];
            rhs[k + 1] -= m * rhs[k];
        }
        // the subdiagonal entry of row k+2 is untouched by row ops on k, k+1
    }
    if d[n - 1] == 0.0 {
        return None;
    }
    // Back substitution with two superdiagonals.
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        if k + 1 < n {
            s -= e[k] * x[k + 1];
        }
        if k + 2 < n {
            s -= f[k] * x[k + 2];
        }
        x[k] = s / d[k];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mul_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], x: &[f64]) -> Vec<f64> {
        let n = diag.len();
        (0..n)
            .map(|i| {
                let mut s = diag[i] * x[i];
                if i > 0 {
                    s += sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    #[test]
    fn solves_diagonally_dominant() {
        let n = 50;
        let sub = vec![-1.0; n - 1];
        let sup = vec![-1.0; n - 1];
        let diag = vec![4.0; n];
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = mul_tridiag(&sub, &diag, &sup, &x_true);
        let x = solve_tridiag_pivoted(&sub, &diag, &sup, &b).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn solves_indefinite_with_pivoting() {
        // Small diagonal entries force row swaps.
        let sub = vec![3.0, -2.0, 5.0, 1.0];
        let diag = vec![1e-14, 2.0, -1e-13, 4.0, -0.5];
        let sup = vec![1.0, -1.0, 2.0, -3.0];
        let x_true = vec![1.0, -2.0, 3.0, 0.5, -1.5];
        let b = mul_tridiag(&sub, &diag, &sup, &x_true);
        let x = solve_tridiag_pivoted(&sub, &diag, &sup, &b).unwrap();
        for (a, b) in x.iter().zip(&x_true) {
            assert_relative_eq!(a, b, max_relative = 1e-9);
        }
    }

    #[test]
    fn singular_returns_none() {
        let sub = vec![0.0];
        let diag = vec![0.0, 1.0];
        let sup = vec![0.0];
        assert!(solve_tridiag_pivoted(&sub, &diag, &sup, &[1.0, 1.0]).is_none());
    }
}
