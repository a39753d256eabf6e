//! The untwisting loop: maximal divisorial extractions, two-ray games and Sarkisov links.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::degree::{lambda_and_e, noether_fano, sarkisov_degree, ExceptionalData, HSystem, SarkisovDegree};
use crate::error::{Error, Result};
use crate::instance::Problem;
use crate::lattice::{Curve, DivisorClass};
use crate::rational::{factorial, is_half_integer, lcm_denominators, q, serde_q, show_q, Q};
use crate::surface::{
    make_mfs, sarkisov_related_check, Base, CurvePool, MarkedSurface, MfsState, Mode, Ray, RelativeCone,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkType {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for LinkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkType::I => "I",
            LinkType::II => "II",
            LinkType::III => "III",
            LinkType::IV => "IV",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    LambdaGtMu,
    LambdaLeMu,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub index: usize,
    pub link_type: LinkType,
    pub branch: Branch,
    pub extracted: Option<DivisorClass>,
    pub contracted: Option<DivisorClass>,
    pub base_before: Base,
    pub base_after: Base,
    pub fiber_after: Option<DivisorClass>,
    /// `1/lambda` on the extraction branch, `1/mu` otherwise.
    #[serde(with = "serde_q")]
    pub threshold: Q,
    pub degree_before: SarkisovDegree,
    pub degree_after: SarkisovDegree,
    /// `-(K + B) . R` for the contracted or fibering ray `R`.
    #[serde(with = "serde_q")]
    pub ray_length: Q,
}

/// Result of a maximal divisorial extraction `Z -> X`.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub z: MarkedSurface,
    pub extracted: Curve,
    pub data: ExceptionalData,
}

fn crepant_pullback(x: &MarkedSurface, h: &HSystem, c: &Q) -> DivisorClass {
    x.log_canonical() + &x.image(h.class()).scale(c)
}

pub fn maximal_divisorial_blowup(x: &MfsState, h: &HSystem, mode: Mode) -> Result<Extraction> {
    let l = lambda_and_e(x, h)?;
    if l.lambda.is_zero() {
        return Err(Error::Precondition("lambda = 0: there is nothing to extract".into()));
    }
    let c = l.lambda.recip();
    let target = crepant_pullback(&x.surface, h, &c);
    let mut failures = Vec::new();
    for curve in &l.crepant {
        let z = x.surface.with_contracted(x.surface.contracted().without(&curve.class))?;
        if let Err(e) = z.check_mode(mode) {
            failures.push(e.to_string());
            continue;
        }
        if crepant_pullback(&z, h, &c) != target {
            return Err(Error::InternalInvariant(format!("extraction of {curve} is not crepant")));
        }
        let data = l.exceptionals.iter().find(|d| d.curve == *curve).cloned().expect("crepant curve data");
        return Ok(Extraction { z, extracted: curve.clone(), data });
    }
    let msg = failures.join("; ");
    Err(match mode {
        Mode::Genuine => Error::NoCrepantAtDepthZero(msg),
        _ => Error::SingularityClass(msg),
    })
}

/// The nef threshold construction: contract `W -> X` one ray at a time, always the ray
/// achieving the relative nef threshold of `nu (K + B) + H`.
#[derive(Clone, Debug)]
pub struct NefThresholdRun {
    pub z: MarkedSurface,
    pub extracted: Curve,
    pub thresholds: Vec<Q>,
}

pub fn nef_threshold_blowup(x: &MfsState, h: &HSystem, mode: Mode) -> Result<NefThresholdRun> {
    let l = lambda_and_e(x, h)?;
    if l.lambda.is_zero() {
        return Err(Error::Precondition("lambda = 0: there is nothing to extract".into()));
    }
    let full = x.surface.contracted().clone();
    let mut y = x.surface.with_contracted(Default::default())?;
    let mut remaining: Vec<Curve> = full.curves().to_vec();
    let mut thresholds: Vec<Q> = Vec::new();
    loop {
        let mut best: Option<(Q, usize)> = None;
        for (i, c) in remaining.iter().enumerate() {
            let g = y.image(&c.class);
            let kb = y.log_canonical().dot_unchecked(&g);
            if !kb.is_negative() {
                continue;
            }
            let nu = y.image(h.class()).dot_unchecked(&g) / -kb;
            // ties go to the highest key so that the lowest key is extracted last
            if best.as_ref().is_none_or(|(b, _)| nu <= *b) {
                best = Some((nu, i));
            }
        }
        let (nu, i) = best.ok_or_else(|| {
            Error::InternalInvariant("no (K + B)-negative exceptional ray left over X".into())
        })?;
        if thresholds.last().is_some_and(|prev| nu < *prev) {
            return Err(Error::InternalInvariant("nef thresholds decreased".into()));
        }
        thresholds.push(nu);
        if remaining.len() == 1 {
            let extracted = remaining.remove(0);
            if thresholds.last() != Some(&l.lambda) {
                return Err(Error::InternalInvariant(format!(
                    "last nef threshold {} differs from lambda = {}",
                    show_q(thresholds.last().expect("nonempty")),
                    show_q(&l.lambda)
                )));
            }
            y.check_mode(mode)?;
            return Ok(NefThresholdRun { z: y, extracted, thresholds });
        }
        let c = remaining.remove(i);
        y = y.with_contracted(y.contracted().with(c))?;
    }
}

/// Outcome of the two-ray game on a model of relative Picard number two.
#[derive(Clone, Debug)]
pub struct TwoRay {
    pub ray: Ray,
    pub ray_length: Q,
}

pub struct TwoRayInput<'a> {
    pub z: &'a MarkedSurface,
    pub fiber: Option<&'a DivisorClass>,
    pub d: &'a DivisorClass,
    pub known: &'a DivisorClass,
    pub orientation: &'a DivisorClass,
}

pub fn two_ray_step(input: &TwoRayInput, h: &HSystem, pool: &CurvePool, mode: Mode) -> Result<TwoRay> {
    let z = input.z;
    let cone = RelativeCone { contracted: z.contracted(), fiber: input.fiber };
    let ray = cone.other_ray(input.known, input.orientation, pool)?;
    let r = ray.class();
    if !input.d.dot_unchecked(r).is_negative() {
        return Err(Error::InternalInvariant(format!(
            "minimal model reached: D = {} is nonnegative on the ray {r}",
            input.d
        )));
    }
    if z.image(h.class()).dot_unchecked(r).is_negative() {
        return Err(Error::InternalInvariant(format!("H is negative on the ray {r}")));
    }
    if let Ray::Divisorial { curve, image } = &ray {
        z.contracted().with(curve.clone()).check()?;
        if mode == Mode::Genuine && (image.square() != q(-1) || z.log_canonical().dot_unchecked(image) != q(-1)) {
            return Err(Error::InternalInvariant(format!("contracted curve {curve} is not a (-1)-curve")));
        }
    }
    let ray_length = -z.log_canonical().dot_unchecked(r);
    if !ray_length.is_positive() || (mode == Mode::Genuine && ray_length > q(4)) {
        return Err(Error::InternalInvariant(format!(
            "length {} of the ray {r} is outside (0, 4]",
            show_q(&ray_length)
        )));
    }
    Ok(TwoRay { ray, ray_length })
}

/// Denominator bound for `mu` over a curve in log modes.
pub fn mu_denominator_bound(problem: &Problem) -> BigInt {
    let coeffs = problem.boundary.components().iter().map(|c| &c.coefficient);
    let d = lcm_denominators(coeffs.chain(std::iter::once(problem.boundary.epsilon())));
    let d: u64 = d.try_into().unwrap_or(u64::MAX);
    factorial(2 * d)
}

/// Checks the invariants every link must satisfy.
pub fn check_link(problem: &Problem, rec: &LinkRecord, next: &MfsState) -> Result<()> {
    let (b, a) = (&rec.degree_before, &rec.degree_after);
    let fail = |m: String| Err(Error::InternalInvariant(format!("link {}: {m}", rec.index)));
    if a >= b {
        return fail(format!("degree {a} does not decrease from {b}"));
    }
    match rec.branch {
        Branch::LambdaLeMu => {
            if a.mu >= b.mu {
                return fail("mu does not decrease".into());
            }
        }
        Branch::LambdaGtMu => {
            if a.mu > b.mu || a.lambda > b.lambda {
                return fail("mu or lambda increased".into());
            }
            if a.lambda == b.lambda && a.e >= b.e {
                return fail("lambda persists but e does not drop".into());
            }
        }
    }
    next.surface.check_mode(problem.mode)?;
    if problem.mode != Mode::Genuine {
        let eps = problem.boundary.epsilon();
        if let Some(d) = next.surface.discrepancies().iter().find(|d| d.discrepancy <= -eps) {
            return fail(format!("discrepancy {} along {} is not above -epsilon", show_q(&d.discrepancy), d.curve));
        }
        let report = sarkisov_related_check(&[&next.surface]);
        if let Some((_, c, v)) = report.failures.first() {
            return fail(format!("ramification {} along {c} breaks the support criterion", show_q(v)));
        }
    }
    if next.base == Base::Curve {
        let ok = match problem.mode {
            Mode::Genuine => is_half_integer(&a.mu),
            _ => (mu_denominator_bound(problem) % a.mu.denom()).is_zero(),
        };
        if !ok {
            return fail(format!("mu = {} breaks the quantization bound", show_q(&a.mu)));
        }
    }
    Ok(())
}

pub fn run_link(problem: &Problem, state: &MfsState, deg: &SarkisovDegree, index: usize) -> Result<(MfsState, LinkRecord)> {
    let h = &problem.h;
    let pool = &problem.pool;
    let mode = problem.mode;
    let (next, link_type, branch, extracted, contracted, threshold, ray_length) = if deg.lambda > deg.mu {
        let ext = maximal_divisorial_blowup(state, h, mode)?;
        let c = deg.lambda.recip();
        let z = &ext.z;
        let d = crepant_pullback(z, h, &c);
        let known = z.image(&ext.extracted.class);
        let orientation = -state.surface.log_canonical();
        let input = TwoRayInput { z, fiber: state.fiber.as_ref(), d: &d, known: &known, orientation: &orientation };
        let step = two_ray_step(&input, h, pool, mode)?;
        let (next, link_type, contracted) = match (&step.ray, state.base) {
            (Ray::Fibering { class }, Base::Point) => {
                (make_mfs(z.clone(), Base::Curve, Some(class.clone()), pool, mode)?, LinkType::I, None)
            }
            (Ray::Divisorial { curve, .. }, base) => {
                let y = z.with_contracted(z.contracted().with(curve.clone()))?;
                (make_mfs(y, base, state.fiber.clone(), pool, mode)?, LinkType::II, Some(curve.class.clone()))
            }
            (Ray::Fibering { .. }, Base::Curve) => {
                return Err(Error::InternalInvariant("fibering ray inside a fiber".into()));
            }
        };
        (next, link_type, Branch::LambdaGtMu, Some(ext.extracted.class), contracted, c, step.ray_length)
    } else {
        if state.base == Base::Point {
            return Err(Error::InternalInvariant(
                "lambda <= mu over a point is nef by proportionality".into(),
            ));
        }
        let c = deg.mu.recip();
        let x = &state.surface;
        let d = crepant_pullback(x, h, &c);
        let f = state.fiber.clone().ok_or_else(|| Error::MissingRay("model over a curve without a fiber".into()))?;
        let input = TwoRayInput { z: x, fiber: None, d: &d, known: &f, orientation: &f };
        let step = two_ray_step(&input, h, pool, mode)?;
        let (next, link_type, contracted) = match &step.ray {
            Ray::Divisorial { curve, .. } => {
                let y = x.with_contracted(x.contracted().with(curve.clone()))?;
                (make_mfs(y, Base::Point, None, pool, mode)?, LinkType::III, Some(curve.class.clone()))
            }
            Ray::Fibering { class } => {
                (make_mfs(x.clone(), Base::Curve, Some(class.clone()), pool, mode)?, LinkType::IV, None)
            }
        };
        (next, link_type, Branch::LambdaLeMu, None, contracted, c, step.ray_length)
    };
    let after = sarkisov_degree(&next, h)?;
    let rec = LinkRecord {
        index,
        link_type,
        branch,
        extracted,
        contracted,
        base_before: state.base,
        base_after: next.base,
        fiber_after: next.fiber.clone(),
        threshold,
        degree_before: deg.clone(),
        degree_after: after,
        ray_length,
    };
    check_link(problem, &rec, &next)?;
    Ok((next, rec))
}

/// The full chain of links from the source to the target.
#[derive(Clone, Debug)]
pub struct Factorization {
    pub initial: SarkisovDegree,
    pub links: Vec<LinkRecord>,
    pub states: Vec<MfsState>,
    pub final_degree: SarkisovDegree,
}

impl Factorization {
    pub fn final_state(&self) -> &MfsState {
        self.states.last().expect("at least the source state")
    }
}

/// Runs links until the Noether-Fano test passes, then checks that the model reached is
/// the target.
pub fn untwist(problem: &Problem) -> Result<Factorization> {
    let h = &problem.h;
    let mut state = problem.source.clone();
    let mut deg = sarkisov_degree(&state, h)?;
    let initial = deg.clone();
    let mut links = Vec::new();
    let mut states = vec![state.clone()];
    loop {
        if noether_fano(&state, h, &deg)?.nef {
            break;
        }
        if links.len() >= problem.config.max_links {
            return Err(Error::IterationCapExceeded(problem.config.max_links));
        }
        let (next, rec) = run_link(problem, &state, &deg, links.len())?;
        deg = rec.degree_after.clone();
        links.push(rec);
        state = next;
        states.push(state.clone());
    }
    check_final(problem, &state, &deg)?;
    Ok(Factorization { initial, links, states, final_degree: deg })
}

/// The model where the Noether-Fano test passed must be the target Mori fiber space.
pub fn check_final(problem: &Problem, state: &MfsState, deg: &SarkisovDegree) -> Result<()> {
    let t = &problem.target;
    let same_fiber = match (&state.fiber, &t.fiber) {
        (None, None) => true,
        (Some(a), Some(b)) => a.positively_proportional(b),
        _ => false,
    };
    if state.surface.contracted() != t.surface.contracted() || state.base != t.base || !same_fiber {
        return Err(Error::InternalInvariant("the Noether-Fano model is not the target".into()));
    }
    let expected = SarkisovDegree::new(problem.h.mu_prime().clone(), Q::zero(), 0);
    if *deg != expected {
        return Err(Error::InternalInvariant(format!("final degree {deg} differs from {expected}")));
    }
    Ok(())
}
