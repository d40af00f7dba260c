use crate::scalar::Scalar;

pub(crate) const PIVOT_EPS: f64 = 1e-10;

/// Row echelon form in place; returns pivot columns.
fn echelon<T: Scalar>(m: &mut [Vec<T>], cols: usize, eps: f64) -> Vec<usize> {
    let rows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut best = r;
        for i in r + 1..rows {
            if m[i][c].abs() > m[best][c].abs() {
                best = i;
            }
        }
        if m[best][c].near_zero(eps) {
            continue;
        }
        m.swap(r, best);
        let p = m[r][c].clone();
        for i in 0..rows {
            if i == r || m[i][c].is_zero() {
                continue;
            }
            let factor = m[i][c].clone() / p.clone();
            for k in c + 1..m[i].len() {
                let v = m[r][k].clone() * factor.clone();
                m[i][k] = m[i][k].clone() - v;
            }
            m[i][c] = T::zero();
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Numerical rank of the row set (exact for rational scalars).
pub fn rank<T: Scalar>(rows: &[Vec<T>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |a, b| T::max_of(a, b.abs()))
        .to_f64_lossy()
        .max(1.0);
    let mut m = rows.to_vec();
    echelon(&mut m, cols, PIVOT_EPS * scale).len()
}

/// Solves `A x = b` for a system whose solution is unique; `None` if rank-deficient or inconsistent.
pub fn solve_square<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    if a.is_empty() {
        return None;
    }
    let n = a[0].len();
    let mut m: Vec<Vec<T>> = a
        .iter()
        .zip(b)
        .map(|(r, bi)| {
            let mut row = r.clone();
            row.push(bi.clone());
            row
        })
        .collect();
    let pivots = echelon(&mut m, n, PIVOT_EPS);
    if pivots.len() < n {
        return None;
    }
    // rows beyond the rank must be consistent
    for row in m.iter().skip(n) {
        if !row[n].near_zero(1e-9) {
            return None;
        }
    }
    let mut x = vec![T::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = m[r][n].clone() / m[r][c].clone();
    }
    Some(x)
}

/// Inverse of a square matrix by Gauss-Jordan with partial pivoting.
pub(crate) fn invert<T: Scalar>(a: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = a.len();
    let mut m: Vec<Vec<T>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { T::one() } else { T::zero() }));
            row
        })
        .collect();
    let pivots = echelon(&mut m, n, 1e-13);
    if pivots.len() < n {
        return None;
    }
    Some(
        m.into_iter()
            .zip(pivots)
            .map(|(row, c)| {
                let p = row[c].clone();
                row[n..].iter().map(|v| v.clone() / p.clone()).collect()
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    #[test]
    fn rank_and_solve() {
        let r = |a: i64| Rational::from_ratio(a, 1);
        let a = vec![vec![r(1), r(2)], vec![r(2), r(4)], vec![r(0), r(1)]];
        assert_eq!(rank(&a), 2);
        assert_eq!(rank(&a[..2]), 1);
        let x = solve_square(&a, &[r(3), r(6), r(1)]).unwrap();
        assert_eq!(x, vec![r(1), r(1)]);
        assert!(solve_square(&a, &[r(3), r(7), r(1)]).is_none());
        let inv: Vec<Vec<f64>> = invert(&[vec![2.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!((inv[0][0] - 0.5).abs() < 1e-15 && (inv[1][0] + 0.5).abs() < 1e-15);
    }
}
