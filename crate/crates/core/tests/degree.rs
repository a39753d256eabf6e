mod common;

use std::cmp::Ordering;
use std::sync::Arc;

use proptest::prelude::*;
use sarkisov_core::degree::{degree_compare, exceptional_data, lambda_and_e, noether_fano, sarkisov_degree, HSystem, SarkisovDegree};
use sarkisov_core::engine::untwist;
use sarkisov_core::instance::{gen_cremona, Problem};
use sarkisov_core::lattice::{ContractionSet, DivisorClass, ProximityForest};
use sarkisov_core::rational::{frac, q, Q};
use sarkisov_core::surface::{make_mfs, make_surface, Base, Boundary, CurvePool, MfsState, Mode};

use common::{all_forests, chain_discrepancies, chain_orders};

fn plane(forest: &ProximityForest) -> MfsState {
    let f = Arc::new(forest.clone());
    let pool = CurvePool::build(forest, &[], 3).unwrap();
    let s = make_surface(f.clone(), ContractionSet::all_exceptional(forest), Arc::new(Boundary::empty(forest.len()))).unwrap();
    make_mfs(s, Base::Point, None, &pool, Mode::Genuine).unwrap()
}

fn deg(mu: Q, lambda: Q, e: u64) -> SarkisovDegree {
    SarkisovDegree::new(mu, lambda, e)
}

#[test]
fn quadratic_cremona_source_degree() {
    let p = Problem::new(gen_cremona()).unwrap();
    assert_eq!(p.h.class(), &DivisorClass::plane_curve(6, &[3, 3, 3]));
    let d = sarkisov_degree(&p.source, &p.h).unwrap();
    assert_eq!(d, deg(q(2), q(3), 3));
    let nf = noether_fano(&p.source, &p.h, &d).unwrap();
    assert!(!nf.nef);
}

#[test]
fn quadratic_cremona_intermediate_models() {
    let p = Problem::new(gen_cremona()).unwrap();
    let fac = untwist(&p).unwrap();
    let x1 = &fac.states[1];
    assert_eq!(sarkisov_degree(x1, &p.h).unwrap(), deg(frac(3, 2), q(3), 2));
    let x2 = &fac.states[2];
    let l = lambda_and_e(x2, &p.h).unwrap();
    assert_eq!((l.lambda.clone(), l.e), (q(3), 1));
    let ab: Vec<(String, Q, Q)> = exceptional_data(x2, &p.h)
        .into_iter()
        .map(|d| (d.curve.class.to_string(), d.a, d.b))
        .collect();
    assert_eq!(ab, vec![("e3".into(), q(1), q(3)), ("l - e1 - e2".into(), q(1), q(0))]);
    let last = fac.final_state();
    let d = sarkisov_degree(last, &p.h).unwrap();
    assert_eq!(d, deg(q(1), q(0), 0));
    assert!(noether_fano(last, &p.h, &d).unwrap().nef);
}

#[test]
fn irrelevant_point_does_not_change_the_degree() {
    let h3 = HSystem::from_class(DivisorClass::plane_curve(6, &[3, 3, 3]));
    let h4 = HSystem::from_class(DivisorClass::plane_curve(6, &[3, 3, 3, 0]));
    let a = sarkisov_degree(&plane(&ProximityForest::free(3)), &h3).unwrap();
    let b = sarkisov_degree(&plane(&ProximityForest::free(4)), &h4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fiber_representative_does_not_change_the_degree() {
    let forest = Arc::new(ProximityForest::free(2));
    let pool = CurvePool::build(&forest, &[], 3).unwrap();
    let contracted = ContractionSet::from_classes(&forest, [DivisorClass::from_ints(0, &[0, 1])]);
    let s = make_surface(forest.clone(), contracted, Arc::new(Boundary::empty(2))).unwrap();
    let h = HSystem::from_class(DivisorClass::plane_curve(4, &[2, 1]));
    let mut seen = Vec::new();
    for k in -2..=2 {
        let f = DivisorClass::from_ints(1, &[-1, k]);
        let x = make_mfs(s.clone(), Base::Curve, Some(f), &pool, Mode::Genuine).unwrap();
        seen.push(sarkisov_degree(&x, &h).unwrap());
    }
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(seen[0].mu, q(1));
}

#[test]
fn lexicographic_order_examples() {
    let a = deg(q(2), q(3), 3);
    assert_eq!(degree_compare(&deg(frac(3, 2), q(9), 9), &a), Ordering::Less);
    assert_eq!(degree_compare(&deg(q(2), q(3), 2), &a), Ordering::Less);
    assert_eq!(degree_compare(&deg(q(2), frac(5, 2), 7), &a), Ordering::Less);
    assert_eq!(degree_compare(&a, &a), Ordering::Equal);
    assert!(deg(q(2), q(3), 4) > a);
}

#[test]
fn noether_fano_on_the_plane() {
    let x = plane(&ProximityForest::free(1));
    for (d, m, expect) in [(3, 0, true), (3, 1, true), (6, 2, true), (6, 3, false), (9, 4, false)] {
        let h = HSystem::from_class(DivisorClass::plane_curve(d, &[m]));
        let deg = sarkisov_degree(&x, &h).unwrap();
        assert_eq!(deg.mu, frac(d, 3));
        assert_eq!(noether_fano(&x, &h, &deg).unwrap().nef, expect, "d = {d}, m = {m}");
    }
}

/// The threshold of the pair computed blowup by blowup.
fn oracle(f: &ProximityForest, m: &[i64]) -> (Q, u64) {
    let a = chain_discrepancies(f);
    let b = chain_orders(f, m);
    let ratios: Vec<Q> = a.iter().zip(&b).filter(|(_, b)| **b > 0).map(|(a, b)| frac(*b, *a)).collect();
    let best = ratios.iter().cloned().max().unwrap_or_else(|| q(0));
    let count = if best == q(0) { 0 } else { ratios.iter().filter(|r| **r == best).count() as u64 };
    (best, count)
}

#[test]
fn threshold_matches_blowup_oracle_on_small_forests() {
    let mut cases = 0;
    for n in 1..=4 {
        for f in all_forests(n) {
            let x = plane(&f);
            for seed in 0..6i64 {
                let m: Vec<i64> = (0..n as i64).map(|i| (seed * 7 + i * 3) % 4).collect();
                let d = 3 * m.iter().sum::<i64>().max(1);
                let h = HSystem::from_class(DivisorClass::plane_curve(d, &m));
                let l = lambda_and_e(&x, &h).unwrap();
                assert_eq!((l.lambda, l.e), oracle(&f, &m), "forest {:?}, m {m:?}", f.signature());
                cases += 1;
            }
        }
    }
    assert!(cases > 100);
}

proptest! {
    #[test]
    fn threshold_with_an_extra_level(
        m in prop::collection::vec(0i64..5, 1..5),
        at in any::<prop::sample::Index>(),
        extra in 0i64..3,
    ) {
        let n = m.len();
        let i = at.index(n);
        let f = ProximityForest::free(n).extend(sarkisov_core::lattice::PointSpec::near(i)).unwrap();
        let mut mm = m.clone();
        mm.push(extra.min(m[i]));
        let x = plane(&f);
        let h = HSystem::from_class(DivisorClass::plane_curve(3 * mm.iter().sum::<i64>().max(1), &mm));
        let l = lambda_and_e(&x, &h).unwrap();
        // a point on E_i: discrepancy a_i + 1 = 2 and order b_i + m = m_i + m
        let mut ratios: Vec<Q> = m.iter().map(|&v| q(v)).collect();
        ratios.push(frac(m[i] + mm[n], 2));
        let best = ratios.iter().cloned().max().unwrap();
        prop_assert_eq!(&l.lambda, &best);
        if best > q(0) {
            prop_assert_eq!(l.e, ratios.iter().filter(|r| **r == best).count() as u64);
        }
    }

    #[test]
    fn degree_order_is_lexicographic(
        a in (0i64..5, 1i64..4, 0i64..5, 0u64..4),
        b in (0i64..5, 1i64..4, 0i64..5, 0u64..4),
    ) {
        let x = deg(frac(a.0, a.1), q(a.2), a.3);
        let y = deg(frac(b.0, b.1), q(b.2), b.3);
        let key = |d: &SarkisovDegree| (d.mu.clone(), d.lambda.clone(), d.e);
        prop_assert_eq!(degree_compare(&x, &y), key(&x).cmp(&key(&y)));
        prop_assert_eq!(degree_compare(&y, &x), degree_compare(&x, &y).reverse());
    }
}
