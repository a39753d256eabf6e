//! Dense exact linear algebra over the rationals, sized for Gram matrices of a few dozen rows.

use num_traits::{Signed, Zero};

use crate::rational::Q;

pub type Matrix = Vec<Vec<Q>>;

/// Inverse by Gauss-Jordan elimination; `None` when singular.
pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut a: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::from_integer(1.into()) } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for v in a[col].iter_mut() {
            *v /= &p;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= &f * pv;
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

pub fn mat_vec(m: &Matrix, v: &[Q]) -> Vec<Q> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Leading principal minors, computed as running products of elimination pivots.
/// Stops (returning the minors found so far plus a zero) at the first vanishing pivot.
pub fn leading_minors(m: &Matrix) -> Vec<Q> {
    let n = m.len();
    let mut a = m.clone();
    let mut minors = Vec::with_capacity(n);
    let mut det = Q::from_integer(1.into());
    for k in 0..n {
        let p = a[k][k].clone();
        det *= &p;
        minors.push(det.clone());
        if p.is_zero() {
            break;
        }
        for r in k + 1..n {
            if a[r][k].is_zero() {
                continue;
            }
            let f = &a[r][k] / &p;
            let (top, bottom) = a.split_at_mut(r);
            for (x, y) in bottom[0][k..n].iter_mut().zip(&top[k][k..n]) {
                *x -= &f * y;
            }
        }
    }
    minors
}

/// Sylvester's criterion.
pub fn is_positive_definite(m: &Matrix) -> bool {
    let minors = leading_minors(m);
    minors.len() == m.len() && minors.iter().all(|d| d.is_positive())
}

/// Basis of the right null space of `m` (rows are equations).
pub fn null_space(m: &Matrix, ncols: usize) -> Vec<Vec<Q>> {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row >= a.len() {
            break;
        }
        let Some(p) = (row..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let pv = a[row][col].clone();
        for v in a[row].iter_mut() {
            *v /= &pv;
        }
        let prow = a[row].clone();
        for (r, other) in a.iter_mut().enumerate() {
            if r == row || other[col].is_zero() {
                continue;
            }
            let f = other[col].clone();
            for (v, x) in other.iter_mut().zip(&prow) {
                *v -= &f * x;
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); ncols];
            v[f] = Q::from_integer(1.into());
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, q};

    fn m(rows: &[&[i64]]) -> Matrix {
        rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
    }

    #[test]
    fn inverse_of_small_matrix() {
        let a = m(&[&[2, 1], &[1, 1]]);
        let inv = inverse(&a).unwrap();
        assert_eq!(inv, m(&[&[1, -1], &[-1, 2]]));
        assert!(inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn sylvester() {
        assert!(is_positive_definite(&m(&[&[2, -1], &[-1, 1]])));
        assert!(!is_positive_definite(&m(&[&[1, 2], &[2, 1]])));
        assert!(!is_positive_definite(&m(&[&[0, 0], &[0, 1]])));
        assert_eq!(leading_minors(&m(&[&[2, 1], &[1, 2]])), vec![q(2), q(3)]);
    }

    #[test]
    fn kernel() {
        let a = m(&[&[1, 1, 0]]);
        let ns = null_space(&a, 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((&v[0] + &v[1]).is_zero());
        }
        let b = vec![vec![q(2), frac(1, 2)]];
        assert_eq!(null_space(&b, 2), vec![vec![frac(-1, 4), q(1)]]);
    }
}
