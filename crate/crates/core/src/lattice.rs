//! Intersection theory on the Picard lattice of a rational surface `W` obtained from the
//! projective plane by blowing up a cluster of (possibly infinitely near) points.
//!
//! Classes are written in the total-transform basis `l, e_1, .., e_r`, where the form is
//! diagonal: `l.l = 1`, `e_i.e_i = -1`. Prime exceptional curves and proximity only enter
//! through derived classes and validators.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rational::{q, serde_q, serde_q_vec, show_q, Q};

/// A rational divisor class `line * l + sum exc[i] * e_{i+1}` on `W`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DivisorClass {
    #[serde(with = "serde_q")]
    line: Q,
    #[serde(with = "serde_q_vec")]
    exc: Vec<Q>,
}

impl DivisorClass {
    pub fn new(line: Q, exc: Vec<Q>) -> Self {
        DivisorClass { line, exc }
    }

    /// `d l + sum m_i e_i` with the coefficients taken literally (so a plane curve of degree
    /// `d` with multiplicities `m` is `from_ints(d, &[-m_1, ..])`).
    pub fn from_ints(d: i64, coeffs: &[i64]) -> Self {
        DivisorClass::new(q(d), coeffs.iter().map(|&c| q(c)).collect())
    }

    /// Strict-transform class `d l - sum m_i e_i` of a plane curve.
    pub fn plane_curve(d: i64, mult: &[i64]) -> Self {
        DivisorClass::new(q(d), mult.iter().map(|&m| q(-m)).collect())
    }

    pub fn zero(rank: usize) -> Self {
        DivisorClass::new(Q::zero(), vec![Q::zero(); rank])
    }

    pub fn line(rank: usize) -> Self {
        DivisorClass::new(Q::one(), vec![Q::zero(); rank])
    }

    /// Total transform `e_i` (0-based index).
    pub fn total_exceptional(rank: usize, i: usize) -> Self {
        let mut c = DivisorClass::zero(rank);
        c.exc[i] = Q::one();
        c
    }

    /// `K_W = -3 l + sum e_i`.
    pub fn canonical(rank: usize) -> Self {
        DivisorClass::new(q(-3), vec![Q::one(); rank])
    }

    pub fn rank(&self) -> usize {
        self.exc.len()
    }

    pub fn line_coeff(&self) -> &Q {
        &self.line
    }

    pub fn exc_coeffs(&self) -> &[Q] {
        &self.exc
    }

    pub fn dot(&self, other: &DivisorClass) -> Result<Q> {
        intersect(self, other)
    }

    /// Intersection number assuming equal rank; used on hot paths after validation.
    pub(crate) fn dot_unchecked(&self, other: &DivisorClass) -> Q {
        let mut s = &self.line * &other.line;
        for (a, b) in self.exc.iter().zip(&other.exc) {
            s -= a * b;
        }
        s
    }

    pub fn square(&self) -> Q {
        self.dot_unchecked(self)
    }

    pub fn scale(&self, c: &Q) -> Self {
        DivisorClass::new(&self.line * c, self.exc.iter().map(|x| x * c).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.line.is_zero() && self.exc.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.line.is_integer() && self.exc.iter().all(|x| x.is_integer())
    }

    /// Embeds into the lattice of a larger forest with zero new coordinates.
    pub fn embed(&self, rank: usize) -> Self {
        let mut exc = self.exc.clone();
        exc.resize(rank.max(self.rank()), Q::zero());
        DivisorClass::new(self.line.clone(), exc)
    }

    /// Coordinates `(line, exc_1, .., exc_r)`.
    pub fn to_vec(&self) -> Vec<Q> {
        self.coords().cloned().collect()
    }

    pub fn from_vec(v: &[Q]) -> Self {
        DivisorClass::new(v[0].clone(), v[1..].to_vec())
    }

    /// The linear functional `x -> self . x` written in coordinates.
    pub(crate) fn form_row(&self) -> Vec<Q> {
        std::iter::once(self.line.clone()).chain(self.exc.iter().map(|x| -x)).collect()
    }

    fn coords(&self) -> impl Iterator<Item = &Q> {
        std::iter::once(&self.line).chain(self.exc.iter())
    }

    /// The primitive integral class on the ray spanned by `self`; `None` for the zero class.
    pub fn primitive(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let den = self.coords().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = self
            .coords()
            .map(|x| (x * Q::from_integer(den.clone())).to_integer())
            .collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        let scaled: Vec<Q> = ints.into_iter().map(|x| Q::from_integer(x / &g)).collect();
        Some(DivisorClass::new(scaled[0].clone(), scaled[1..].to_vec()))
    }

    /// True when `self = c * other` for some rational `c > 0`.
    pub fn positively_proportional(&self, other: &DivisorClass) -> bool {
        self.proportionality(other).is_some_and(|c| c.is_positive())
    }

    /// The factor `c` with `self = c * other`, when it exists (`other` nonzero).
    pub fn proportionality(&self, other: &DivisorClass) -> Option<Q> {
        let pivot = other.coords().position(|x| !x.is_zero())?;
        let a = self.coords().nth(pivot)?;
        let b = other.coords().nth(pivot)?;
        let c = a / b;
        (other.scale(&c) == *self).then_some(c)
    }

    /// Arithmetic genus `(C^2 + C.K)/2 + 1`.
    pub fn arithmetic_genus(&self) -> Q {
        let k = DivisorClass::canonical(self.rank());
        (self.square() + self.dot_unchecked(&k)) / q(2) + Q::one()
    }
}

impl Add for &DivisorClass {
    type Output = DivisorClass;
    fn add(self, o: &DivisorClass) -> DivisorClass {
        let rank = self.rank().max(o.rank());
        let a = self.embed(rank);
        let b = o.embed(rank);
        DivisorClass::new(
            &a.line + &b.line,
            a.exc.iter().zip(&b.exc).map(|(x, y)| x + y).collect(),
        )
    }
}

impl Add for DivisorClass {
    type Output = DivisorClass;
    fn add(self, o: DivisorClass) -> DivisorClass {
        &self + &o
    }
}

impl Sub for &DivisorClass {
    type Output = DivisorClass;
    fn sub(self, o: &DivisorClass) -> DivisorClass {
        self + &(-o)
    }
}

impl Sub for DivisorClass {
    type Output = DivisorClass;
    fn sub(self, o: DivisorClass) -> DivisorClass {
        &self - &o
    }
}

impl Neg for &DivisorClass {
    type Output = DivisorClass;
    fn neg(self) -> DivisorClass {
        DivisorClass::new(-&self.line, self.exc.iter().map(|x| -x).collect())
    }
}

impl Neg for DivisorClass {
    type Output = DivisorClass;
    fn neg(self) -> DivisorClass {
        -&self
    }
}

impl fmt::Display for DivisorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms = Vec::new();
        let mut push = |c: &Q, name: String| {
            if c.is_zero() {
                return;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            let mag = c.abs();
            let coeff = if mag.is_one() { String::new() } else { show_q(&mag) };
            terms.push((sign, format!("{coeff}{name}")));
        };
        push(&self.line, "l".into());
        for (i, c) in self.exc.iter().enumerate() {
            push(c, format!("e{}", i + 1));
        }
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (sign, t)) in terms.iter().enumerate() {
            match (k, *sign) {
                (0, "-") => write!(f, "-{t}")?,
                (0, _) => write!(f, "{t}")?,
                (_, s) => write!(f, " {s} {t}")?,
            }
        }
        Ok(())
    }
}

/// The intersection pairing; errors when the classes live over different forests.
pub fn intersect(a: &DivisorClass, b: &DivisorClass) -> Result<Q> {
    if a.rank() != b.rank() {
        return Err(Error::Instance(format!(
            "intersecting classes of ranks {} and {}",
            a.rank(),
            b.rank()
        )));
    }
    Ok(a.dot_unchecked(b))
}

/// Placement of one point of the cluster: a proper point of the plane (`parent = None`) or a
/// point on the exceptional curve of `parent`, possibly also lying on the strict transforms
/// of earlier exceptional curves (`satellites`). Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct PointSpec {
    pub parent: Option<usize>,
    #[serde(default)]
    pub satellites: Vec<usize>,
}

impl PointSpec {
    pub fn proper() -> Self {
        PointSpec::default()
    }

    pub fn near(parent: usize) -> Self {
        PointSpec { parent: Some(parent), satellites: Vec::new() }
    }

    pub fn satellite(parent: usize, other: usize) -> Self {
        PointSpec { parent: Some(parent), satellites: vec![other] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ProximityForest {
    points: Vec<PointSpec>,
}

impl ProximityForest {
    pub fn new(points: Vec<PointSpec>) -> Result<Self> {
        points
            .into_iter()
            .try_fold(ProximityForest::default(), |f, p| f.extend(p))
    }

    /// `n` proper points in general position.
    pub fn free(n: usize) -> Self {
        ProximityForest { points: vec![PointSpec::proper(); n] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PointSpec] {
        &self.points
    }

    /// Adds one point after validating its proximity data.
    pub fn extend(&self, spec: PointSpec) -> Result<Self> {
        let i = self.len();
        let err = |m: String| Err(Error::Instance(format!("point {}: {m}", i + 1)));
        match spec.parent {
            None => {
                if !spec.satellites.is_empty() {
                    return err("a proper point cannot be proximate to other points".into());
                }
            }
            Some(p) => {
                if p >= i {
                    return err(format!("parent {} is not an earlier point", p + 1));
                }
                if spec.satellites.len() > 1 {
                    return err("a point is proximate to at most two points".into());
                }
                for &s in &spec.satellites {
                    if s == p || !self.is_strict_ancestor(s, p) {
                        return err(format!("satellite {} is not a strict ancestor of the parent", s + 1));
                    }
                    if !self.proximate_to(p).contains(&s) {
                        return err(format!(
                            "parent {} does not lie on the exceptional curve of {}",
                            p + 1,
                            s + 1
                        ));
                    }
                    let taken = self.points.iter().any(|q| q.parent == Some(p) && q.satellites.contains(&s));
                    if taken {
                        return err(format!(
                            "the intersection point of curves {} and {} is already used",
                            p + 1,
                            s + 1
                        ));
                    }
                }
            }
        }
        let mut points = self.points.clone();
        points.push(spec);
        Ok(ProximityForest { points })
    }

    fn is_strict_ancestor(&self, a: usize, mut i: usize) -> bool {
        // a is an ancestor of i or i itself
        loop {
            if i == a {
                return true;
            }
            match self.points[i].parent {
                Some(p) => i = p,
                None => return false,
            }
        }
    }

    /// The points that `i` is proximate to: its parent and its satellites.
    pub fn proximate_to(&self, i: usize) -> Vec<usize> {
        let p = &self.points[i];
        p.parent.iter().copied().chain(p.satellites.iter().copied()).collect()
    }

    /// The points proximate to `i`.
    pub fn proximate_points(&self, i: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.proximate_to(j).contains(&i))
            .collect()
    }

    pub fn depth(&self, mut i: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.points[i].parent {
            d += 1;
            i = p;
        }
        d
    }

    /// `m_i >= sum of m_j over points j proximate to i`, for every `i`.
    pub fn satisfies_proximity(&self, mult: &[i64]) -> bool {
        (0..self.len()).all(|i| {
            let s: i64 = self.proximate_points(i).iter().map(|&j| mult[j]).sum();
            mult[i] >= s
        })
    }

    pub fn prime_exceptional_class(&self, i: usize) -> DivisorClass {
        prime_exceptional_class(self, i)
    }

    pub fn prime_exceptionals(&self) -> Vec<DivisorClass> {
        (0..self.len()).map(|i| prime_exceptional_class(self, i)).collect()
    }

    /// Index of the prime exceptional curve equal to `c`, if any.
    pub fn exceptional_index(&self, c: &DivisorClass) -> Option<usize> {
        (0..self.len()).find(|&i| prime_exceptional_class(self, i) == *c)
    }

    /// Signature `(positive, negative)` of the intersection form.
    pub fn signature(&self) -> (usize, usize) {
        (1, self.len())
    }
}

/// `ebar_i = e_i - sum_{j proximate to i} e_j`.
pub fn prime_exceptional_class(forest: &ProximityForest, i: usize) -> DivisorClass {
    let r = forest.len();
    let mut c = DivisorClass::total_exceptional(r, i);
    for j in forest.proximate_points(i) {
        c.exc[j] -= Q::one();
    }
    c
}

pub fn extend_forest(forest: &ProximityForest, spec: PointSpec) -> Result<ProximityForest> {
    forest.extend(spec)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveKind {
    /// Prime exceptional curve of the given point (0-based).
    Exceptional(usize),
    /// Strict transform of a plane curve.
    Plane,
}

/// A prime curve on `W` together with its provenance.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Curve {
    pub class: DivisorClass,
    pub kind: CurveKind,
}

impl Curve {
    pub fn from_class(forest: &ProximityForest, class: DivisorClass) -> Self {
        let kind = match forest.exceptional_index(&class) {
            Some(i) => CurveKind::Exceptional(i),
            None => CurveKind::Plane,
        };
        Curve { class, kind }
    }

    pub fn exceptional(forest: &ProximityForest, i: usize) -> Self {
        Curve { class: prime_exceptional_class(forest, i), kind: CurveKind::Exceptional(i) }
    }
}

impl Ord for Curve {
    fn cmp(&self, other: &Self) -> Ordering {
        // lower degree first, then larger multiplicities at earlier points
        self.kind
            .cmp(&other.kind)
            .then_with(|| self.class.line.cmp(&other.class.line))
            .then_with(|| self.class.exc.cmp(&other.class.exc))
    }
}

impl PartialOrd for Curve {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            CurveKind::Exceptional(i) => write!(f, "E{} = {}", i + 1, self.class),
            CurveKind::Plane => write!(f, "{}", self.class),
        }
    }
}

/// The prime curves contracted by a birational morphism `W -> X`, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ContractionSet {
    curves: Vec<Curve>,
}

impl ContractionSet {
    /// Builds the set without geometric validation; see [`ContractionSet::check`].
    pub fn from_curves(curves: impl IntoIterator<Item = Curve>) -> Self {
        let mut curves: Vec<Curve> = curves.into_iter().collect();
        curves.sort();
        curves.dedup();
        ContractionSet { curves }
    }

    pub fn from_classes(forest: &ProximityForest, classes: impl IntoIterator<Item = DivisorClass>) -> Self {
        ContractionSet::from_curves(classes.into_iter().map(|c| Curve::from_class(forest, c)))
    }

    /// All prime exceptional curves: the contraction `W -> P^2`.
    pub fn all_exceptional(forest: &ProximityForest) -> Self {
        ContractionSet::from_curves((0..forest.len()).map(|i| Curve::exceptional(forest, i)))
    }

    pub fn curves(&self) -> &[Curve] {
        &self.curves
    }

    pub fn classes(&self) -> impl Iterator<Item = &DivisorClass> {
        self.curves.iter().map(|c| &c.class)
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn contains(&self, c: &DivisorClass) -> bool {
        self.curves.iter().any(|x| x.class == *c)
    }

    pub fn position(&self, c: &DivisorClass) -> Option<usize> {
        self.curves.iter().position(|x| x.class == *c)
    }

    pub fn with(&self, c: Curve) -> Self {
        ContractionSet::from_curves(self.curves.iter().cloned().chain(std::iter::once(c)))
    }

    pub fn without(&self, c: &DivisorClass) -> Self {
        ContractionSet { curves: self.curves.iter().filter(|x| x.class != *c).cloned().collect() }
    }

    pub fn gram(&self) -> Matrix {
        self.curves
            .iter()
            .map(|a| self.curves.iter().map(|b| a.class.dot_unchecked(&b.class)).collect())
            .collect()
    }

    /// Combinatorial and lattice validity: every curve has negative square and nonnegative
    /// arithmetic genus, distinct curves meet nonnegatively, and the Gram matrix is
    /// negative definite.
    pub fn check(&self) -> Result<()> {
        for (i, a) in self.curves.iter().enumerate() {
            if !a.class.square().is_negative() {
                return Err(Error::NonContractible(format!("{a} has nonnegative self-intersection")));
            }
            if a.class.arithmetic_genus().is_negative() {
                return Err(Error::Instance(format!("{a} has negative arithmetic genus")));
            }
            for b in &self.curves[i + 1..] {
                if a.class.dot_unchecked(&b.class).is_negative() {
                    return Err(Error::Instance(format!("distinct curves {a} and {b} meet negatively")));
                }
            }
        }
        if !gram_negative_definite(self) {
            return Err(Error::NonContractible("Gram matrix is not negative definite".into()));
        }
        Ok(())
    }

    /// Orthogonal projection data onto the complement of the span of the set.
    pub fn projector(&self) -> Result<Projector> {
        let inverse = linalg::inverse(&self.gram()).ok_or_else(|| {
            Error::InternalInvariant("singular Gram matrix of a contraction set".into())
        })?;
        Ok(Projector { classes: self.classes().cloned().collect(), inverse })
    }
}

pub fn gram_negative_definite(c: &ContractionSet) -> bool {
    let neg: Matrix = c.gram().into_iter().map(|row| row.into_iter().map(|x| -x).collect()).collect();
    linalg::is_positive_definite(&neg)
}

/// The pullback `p^* p_* D` together with the coefficients `x` of `D + sum x_j c_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pullback {
    pub class: DivisorClass,
    pub coefficients: Vec<Q>,
}

/// Precomputed inverse Gram matrix of a contraction set.
#[derive(Clone, Debug)]
pub struct Projector {
    classes: Vec<DivisorClass>,
    inverse: Matrix,
}

impl Projector {
    pub fn pullback(&self, d: &DivisorClass) -> Pullback {
        let rhs: Vec<Q> = self.classes.iter().map(|c| -d.dot_unchecked(c)).collect();
        let x = linalg::mat_vec(&self.inverse, &rhs);
        let mut class = d.clone();
        for (xi, c) in x.iter().zip(&self.classes) {
            if !xi.is_zero() {
                class = &class + &c.scale(xi);
            }
        }
        Pullback { class, coefficients: x }
    }

    pub fn apply(&self, d: &DivisorClass) -> DivisorClass {
        self.pullback(d).class
    }
}

/// The unique class congruent to `D` modulo the span of `C` and orthogonal to every member.
pub fn relative_pullback(d: &DivisorClass, c: &ContractionSet) -> Result<Pullback> {
    if let Some(x) = c.classes().next() {
        intersect(d, x)?;
    }
    Ok(c.projector()?.pullback(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn l(r: usize) -> DivisorClass {
        DivisorClass::line(r)
    }

    fn e(r: usize, i: usize) -> DivisorClass {
        DivisorClass::total_exceptional(r, i - 1)
    }

    /// Blowup-chain oracle: discrepancy of E_i over the plane, a_i = 1 + sum over points
    /// that i is proximate to.
    fn chain_discrepancies(f: &ProximityForest) -> Vec<Q> {
        let mut a: Vec<Q> = Vec::new();
        for i in 0..f.len() {
            let s: Q = f.proximate_to(i).iter().map(|&j| a[j].clone()).sum();
            a.push(s + Q::one());
        }
        a
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(intersect(&l(0), &l(0)).unwrap(), q(1));
        let a = &(&l(3) - &e(3, 1)) - &e(3, 2);
        let b = &(&l(3) - &e(3, 1)) - &e(3, 3);
        assert_eq!(intersect(&a, &b).unwrap(), q(0));
        assert!(matches!(intersect(&l(2), &l(3)), Err(Error::Instance(_))));
        let f = ProximityForest::free(2);
        let k = DivisorClass::canonical(2);
        assert_eq!(intersect(&k, &f.prime_exceptional_class(1)).unwrap(), q(-1));
    }

    #[test]
    fn prime_exceptional_examples() {
        let f = ProximityForest::free(2);
        assert_eq!(f.prime_exceptional_class(0), e(2, 1));
        let chain = ProximityForest::new(vec![PointSpec::proper(), PointSpec::near(0)]).unwrap();
        assert_eq!(chain.prime_exceptional_class(0), &e(2, 1) - &e(2, 2));
        let sat = ProximityForest::new(vec![
            PointSpec::proper(),
            PointSpec::near(0),
            PointSpec::satellite(1, 0),
        ])
        .unwrap();
        assert_eq!(sat.prime_exceptional_class(0), &(&e(3, 1) - &e(3, 2)) - &e(3, 3));
        assert_eq!(sat.prime_exceptional_class(1), &e(3, 2) - &e(3, 3));
    }

    #[test]
    fn extend_forest_examples() {
        let f = extend_forest(&ProximityForest::default(), PointSpec::proper()).unwrap();
        assert_eq!(f.len(), 1);
        let g = extend_forest(&f, PointSpec::near(0)).unwrap();
        assert_eq!(g.prime_exceptional_class(0), &e(2, 1) - &e(2, 2));
        // satellite of a point that is not an ancestor
        let h = ProximityForest::free(2).extend(PointSpec::near(0)).unwrap();
        assert!(matches!(h.extend(PointSpec::satellite(2, 1)), Err(Error::Instance(_))));
        // parent must lie on the satellite's curve
        let c = ProximityForest::new(vec![PointSpec::proper(), PointSpec::near(0), PointSpec::near(1)]).unwrap();
        assert!(c.extend(PointSpec::satellite(2, 0)).is_err());
        assert!(c.extend(PointSpec::satellite(2, 1)).is_ok());
        // the same satellite position cannot be used twice
        let s = ProximityForest::new(vec![PointSpec::proper(), PointSpec::near(0), PointSpec::satellite(1, 0)]).unwrap();
        assert!(s.extend(PointSpec::satellite(1, 0)).is_err());
        // old classes embed with a zero coordinate
        let d = DivisorClass::plane_curve(2, &[1]);
        assert_eq!(d.embed(2), DivisorClass::plane_curve(2, &[1, 0]));
    }

    #[test]
    fn relative_pullback_examples() {
        let r = 3;
        let f = ProximityForest::free(r);
        let c = ContractionSet::from_classes(&f, vec![e(r, 2), e(r, 3)]);
        let d = l(r);
        let pb = relative_pullback(&d, &c).unwrap();
        assert_eq!(pb.class, d);
        assert_eq!(pb.coefficients, vec![q(0), q(0)]);

        let all = ContractionSet::all_exceptional(&f);
        let k = relative_pullback(&DivisorClass::canonical(r), &all).unwrap();
        assert_eq!(k.class, l(r).scale(&q(-3)));
        assert_eq!(k.coefficients, vec![q(-1); 3]);

        let h = DivisorClass::plane_curve(6, &[3, 3, 3]);
        let pb = relative_pullback(&h, &c).unwrap();
        assert_eq!(pb.class, DivisorClass::plane_curve(6, &[3, 0, 0]));
        assert_eq!(pb.coefficients, vec![q(3), q(3)]);
    }

    #[test]
    fn negative_definiteness() {
        let f = ProximityForest::new(vec![PointSpec::proper(), PointSpec::near(0)]).unwrap();
        let one = ContractionSet::from_classes(&f, vec![e(2, 1)]);
        assert!(gram_negative_definite(&one));
        let chain = ContractionSet::all_exceptional(&f);
        assert!(gram_negative_definite(&chain));
        let line = ContractionSet::from_classes(&f, vec![l(2)]);
        assert!(!gram_negative_definite(&line));
        assert!(matches!(line.check(), Err(Error::NonContractible(_))));
    }

    #[test]
    fn discrepancies_match_chain_oracle() {
        let f = ProximityForest::new(vec![
            PointSpec::proper(),
            PointSpec::near(0),
            PointSpec::satellite(1, 0),
            PointSpec::near(2),
            PointSpec::proper(),
        ])
        .unwrap();
        let all = ContractionSet::all_exceptional(&f);
        let pb = relative_pullback(&DivisorClass::canonical(f.len()), &all).unwrap();
        assert_eq!(pb.class, l(f.len()).scale(&q(-3)));
        let a: Vec<Q> = pb.coefficients.iter().map(|x| -x).collect();
        let expected = chain_discrepancies(&f);
        for (curve, ai) in all.curves().iter().zip(&a) {
            let CurveKind::Exceptional(i) = curve.kind else { panic!() };
            assert_eq!(ai, &expected[i]);
        }
        assert_eq!(expected, vec![q(1), q(2), q(4), q(5), q(1)]);
    }

    #[test]
    fn primitive_and_proportional() {
        let c = DivisorClass::new(frac(3, 2), vec![frac(-3, 2), q(0)]);
        assert_eq!(c.primitive().unwrap(), DivisorClass::from_ints(1, &[-1, 0]));
        assert!(c.positively_proportional(&DivisorClass::from_ints(2, &[-2, 0])));
        assert!(!c.positively_proportional(&DivisorClass::from_ints(-2, &[2, 0])));
        assert_eq!(format!("{}", DivisorClass::plane_curve(6, &[3, 0, 1])), "6l - 3e1 - e3");
    }
}
