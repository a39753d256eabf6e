//! Extremal rays of a rank-2 relative cone of curves.

use num_traits::{Signed, Zero};

use super::pool::CurvePool;
use crate::error::{Error, Result};
use crate::lattice::{ContractionSet, Curve, DivisorClass};
use crate::linalg;
use crate::rational::Q;

/// The other boundary ray of a two-dimensional relative cone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ray {
    /// An irreducible curve of negative square; `image` is its pullback class.
    Divisorial { curve: Curve, image: DivisorClass },
    /// A primitive isotropic nef class.
    Fibering { class: DivisorClass },
}

impl Ray {
    pub fn class(&self) -> &DivisorClass {
        match self {
            Ray::Divisorial { image, .. } => image,
            Ray::Fibering { class } => class,
        }
    }

    pub fn is_fibering(&self) -> bool {
        matches!(self, Ray::Fibering { .. })
    }
}

/// A relative cone of curves on the model contracting `contracted`, restricted to classes
/// orthogonal to `fiber` when the relative base is a curve.
pub struct RelativeCone<'a> {
    pub contracted: &'a ContractionSet,
    pub fiber: Option<&'a DivisorClass>,
}

impl RelativeCone<'_> {
    fn basis(&self, rank: usize) -> Result<Vec<DivisorClass>> {
        let mut rows: Vec<Vec<Q>> = self.contracted.classes().map(|c| c.form_row()).collect();
        if let Some(f) = self.fiber {
            rows.push(f.form_row());
        }
        let basis: Vec<DivisorClass> = linalg::null_space(&rows, rank + 1)
            .iter()
            .map(|v| DivisorClass::from_vec(v))
            .collect();
        if basis.len() != 2 {
            return Err(Error::InternalInvariant(format!(
                "relative Picard rank is {}, expected 2",
                basis.len()
            )));
        }
        Ok(basis)
    }

    /// Finds the boundary ray of the cone other than `known`. The class `orientation` must
    /// vanish on `known` and be nonnegative on every effective class of the cone.
    pub fn other_ray(&self, known: &DivisorClass, orientation: &DivisorClass, pool: &CurvePool) -> Result<Ray> {
        let rank = known.rank();
        let basis = self.basis(rank)?;
        if !known.dot_unchecked(orientation).is_zero() {
            return Err(Error::InternalInvariant("orientation class does not vanish on the known ray".into()));
        }
        let u = basis
            .iter()
            .chain(std::iter::once(&(&basis[0] + &basis[1])))
            .find_map(|v| {
                let p = v.dot_unchecked(orientation);
                if p.is_positive() {
                    Some(v.clone())
                } else if p.is_negative() {
                    Some(-v)
                } else {
                    None
                }
            })
            .ok_or_else(|| Error::InternalInvariant("orientation class vanishes on the relative space".into()))?;
        let pu = u.dot_unchecked(orientation);
        let pivot = known
            .to_vec()
            .iter()
            .position(|x| !x.is_zero())
            .ok_or_else(|| Error::InternalInvariant("known ray is zero".into()))?;
        let kp = known.to_vec()[pivot].clone();
        let coords = |g: &DivisorClass| -> (Q, Q) {
            let beta = g.dot_unchecked(orientation) / &pu;
            let rest = g - &u.scale(&beta);
            (rest.to_vec()[pivot].clone() / &kp, beta)
        };

        let projector = self.contracted.projector()?;
        let mut best: Option<(Q, &Curve, DivisorClass)> = None;
        for curve in pool.curves() {
            if self.contracted.contains(&curve.class) {
                continue;
            }
            let g = projector.apply(&curve.class);
            if g.is_zero() {
                continue;
            }
            if let Some(f) = self.fiber {
                if !g.dot_unchecked(f).is_zero() {
                    continue;
                }
            }
            let (alpha, beta) = coords(&g);
            if beta.is_negative() {
                return Err(Error::InternalInvariant(format!(
                    "orientation class is negative on the curve {curve}"
                )));
            }
            if beta.is_zero() {
                continue;
            }
            let t = alpha / beta;
            if best.as_ref().is_none_or(|(bt, bc, _)| t < *bt || (t == *bt && curve < *bc)) {
                best = Some((t, curve, g));
            }
        }

        let k2 = known.square();
        let ku = known.dot_unchecked(&u);
        let u2 = u.square();
        let divisorial = |b: Option<(Q, &Curve, DivisorClass)>| match b {
            Some((_, curve, image)) => Ok(Ray::Divisorial { curve: curve.clone(), image }),
            None => Err(Error::RayNotFound("no candidate curve in the relative cone".into())),
        };
        if self.fiber.is_some() {
            return divisorial(best);
        }
        // isotropic boundary of the positive cone on the far side from `known`
        if k2.is_zero() {
            if !ku.is_positive() {
                return Err(Error::InternalInvariant("isotropic known ray is not nef".into()));
            }
            let t_iso = -&u2 / (Q::from_integer(2.into()) * &ku);
            if best.as_ref().is_some_and(|(t, _, _)| *t < t_iso) {
                return divisorial(best);
            }
            return fibering(&(&known.scale(&t_iso) + &u));
        }
        if !k2.is_negative() {
            return Err(Error::InternalInvariant("known ray has positive square".into()));
        }
        let mid = -&ku / &k2;
        if let Some((t, _, g)) = &best {
            if g.square().is_negative() && *t < mid {
                return divisorial(best);
            }
        }
        let disc = &ku * &ku - &k2 * &u2;
        let root = rational_sqrt(&disc).ok_or_else(|| {
            Error::RayNotFound("the isotropic boundary of the relative cone is irrational".into())
        })?;
        let t_iso = (-&ku + root) / &k2;
        fibering(&(&known.scale(&t_iso) + &u))
    }
}

fn fibering(class: &DivisorClass) -> Result<Ray> {
    let class = class
        .primitive()
        .ok_or_else(|| Error::InternalInvariant("zero isotropic class".into()))?;
    if !class.square().is_zero() {
        return Err(Error::InternalInvariant(format!("fibering class {class} is not isotropic")));
    }
    Ok(Ray::Fibering { class })
}

/// Exact square root of a nonnegative rational, when it is rational.
pub fn rational_sqrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    (&n * &n == *x.numer() && &d * &d == *x.denom()).then(|| Q::new(n, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ProximityForest;
    use crate::rational::{frac, q};

    #[test]
    fn sqrt() {
        assert_eq!(rational_sqrt(&frac(9, 4)), Some(frac(3, 2)));
        assert_eq!(rational_sqrt(&q(2)), None);
        assert_eq!(rational_sqrt(&q(0)), Some(q(0)));
    }

    #[test]
    fn first_hirzebruch_over_point() {
        let f = ProximityForest::free(3);
        let pool = CurvePool::build(&f, &[], 8).unwrap();
        let c = ContractionSet::from_classes(&f, vec![
            DivisorClass::from_ints(0, &[0, 1, 0]),
            DivisorClass::from_ints(0, &[0, 0, 1]),
        ]);
        let cone = RelativeCone { contracted: &c, fiber: None };
        let k = DivisorClass::from_ints(0, &[1, 0, 0]);
        let p = DivisorClass::from_ints(3, &[0, 0, 0]);
        let ray = cone.other_ray(&k, &p, &pool).unwrap();
        assert_eq!(ray, Ray::Fibering { class: DivisorClass::plane_curve(1, &[1, 0, 0]) });
    }

    #[test]
    fn ruling_of_product_surface() {
        let f = ProximityForest::free(2);
        let pool = CurvePool::build(&f, &[], 8).unwrap();
        let c = ContractionSet::from_classes(&f, vec![DivisorClass::plane_curve(1, &[1, 1])]);
        let cone = RelativeCone { contracted: &c, fiber: None };
        let f1 = DivisorClass::plane_curve(1, &[1, 0]);
        let ray = cone.other_ray(&f1, &f1, &pool).unwrap();
        assert_eq!(ray, Ray::Fibering { class: DivisorClass::plane_curve(1, &[0, 1]) });
    }
}
