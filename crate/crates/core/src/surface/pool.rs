//! The finite set of irreducible curves on `W` the engine knows about.
//!
//! Points are in general position apart from declared incidences, so besides the prime
//! exceptional curves and declared curves the only negative plane curves are the
//! (-1)-classes `d l - sum m_i e_i` with `3d - sum m = 1`, `d^2 - sum m^2 = -1`.

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::lattice::{Curve, CurveKind, DivisorClass, ProximityForest};

pub const DEFAULT_SEARCH_BOUND: u32 = 8;

#[derive(Clone, Debug)]
pub struct CurvePool {
    curves: Vec<Curve>,
    search_bound: u32,
}

impl CurvePool {
    /// Validates the declared curves and enumerates generic (-1)-classes up to degree
    /// `search_bound`.
    pub fn build(forest: &ProximityForest, declared: &[DivisorClass], search_bound: u32) -> Result<Self> {
        let r = forest.len();
        let mut curves: Vec<Curve> = (0..r).map(|i| Curve::exceptional(forest, i)).collect();
        for c in declared {
            if c.rank() != r {
                return Err(Error::Instance(format!("declared curve {c} has the wrong rank")));
            }
            if curves.iter().any(|x| x.class == *c) {
                continue;
            }
            if c.arithmetic_genus().is_negative() {
                return Err(Error::Instance(format!("declared curve {c} has negative arithmetic genus")));
            }
            if !c.is_integral() || !c.line_coeff().is_positive() {
                return Err(Error::Instance(format!("declared curve {c} is not a plane curve class")));
            }
            curves.push(Curve { class: c.clone(), kind: CurveKind::Plane });
        }
        for (i, a) in curves.iter().enumerate() {
            for b in &curves[i + 1..] {
                if a.class.dot_unchecked(&b.class).is_negative() {
                    return Err(Error::Instance(format!("curves {a} and {b} meet negatively")));
                }
            }
        }
        let known = curves.clone();
        for d in 1..=i64::from(search_bound) {
            for m in minus_one_multiplicities(forest, d) {
                let class = DivisorClass::plane_curve(d, &m);
                if known.iter().any(|x| x.class == class) {
                    continue;
                }
                if known.iter().all(|x| !x.class.dot_unchecked(&class).is_negative()) {
                    curves.push(Curve { class, kind: CurveKind::Plane });
                }
            }
        }
        curves.sort();
        curves.dedup();
        Ok(CurvePool { curves, search_bound })
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn search_bound(&self) -> u32 {
        self.search_bound
    }

    pub fn contains(&self, c: &DivisorClass) -> bool {
        self.curves.iter().any(|x| x.class == *c)
    }

    pub fn find(&self, c: &DivisorClass) -> Option<&Curve> {
        self.curves.iter().find(|x| x.class == *c)
    }
}

/// Multiplicity vectors of degree-`d` (-1)-classes satisfying the proximity inequalities.
pub fn minus_one_multiplicities(forest: &ProximityForest, d: i64) -> Vec<Vec<i64>> {
    let r = forest.len();
    let max_m = if d == 1 { 1 } else { d - 1 };
    let mut out = Vec::new();
    let mut cur = vec![0i64; r];
    search(forest, 0, 3 * d - 1, d * d + 1, max_m, &mut cur, &mut out);
    out
}

fn search(
    forest: &ProximityForest,
    i: usize,
    sum: i64,
    sq: i64,
    max_m: i64,
    cur: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) {
    let n = (cur.len() - i) as i64;
    if sum < 0 || sq < 0 || sum > sq || sum * sum > n * sq || sq > sum * max_m {
        return;
    }
    if i == cur.len() {
        if sum == 0 && sq == 0 && forest.satisfies_proximity(cur) {
            out.push(cur.clone());
        }
        return;
    }
    // a point infinitely near to i carries at most the multiplicity at its parent
    let cap = match forest.points()[i].parent {
        Some(p) => max_m.min(cur[p]),
        None => max_m,
    };
    for m in 0..=cap {
        cur[i] = m;
        search(forest, i + 1, sum - m, sq - m * m, max_m, cur, out);
    }
    cur[i] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::PointSpec;

    #[test]
    fn del_pezzo_counts() {
        // numbers of lines on del Pezzo surfaces of degree 9 - r
        let expected = [(1, 1), (2, 3), (3, 6), (4, 10), (5, 16), (6, 27), (7, 56), (8, 240)];
        for (r, n) in expected {
            let f = ProximityForest::free(r);
            let pool = CurvePool::build(&f, &[], 8).unwrap();
            let neg = pool.curves().iter().filter(|c| c.class.square() == crate::rational::q(-1)).count();
            assert_eq!(neg, n, "r = {r}");
        }
    }

    #[test]
    fn declared_collinearity_removes_conic() {
        let f = ProximityForest::free(5);
        let line = DivisorClass::plane_curve(1, &[1, 1, 1, 0, 0]);
        let pool = CurvePool::build(&f, std::slice::from_ref(&line), 8).unwrap();
        assert!(pool.contains(&line));
        assert!(!pool.contains(&DivisorClass::plane_curve(2, &[1, 1, 1, 1, 1])));
        assert!(!pool.contains(&DivisorClass::plane_curve(1, &[1, 1, 0, 0, 0])));
    }

    #[test]
    fn infinitely_near_pair() {
        let f = ProximityForest::new(vec![PointSpec::proper(), PointSpec::near(0)]).unwrap();
        let pool = CurvePool::build(&f, &[], 8).unwrap();
        let classes: Vec<String> = pool.curves().iter().map(|c| c.class.to_string()).collect();
        assert_eq!(classes, vec!["e1 - e2", "e2", "l - e1 - e2"]);
    }
}
