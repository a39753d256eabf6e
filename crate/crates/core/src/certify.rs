//! Certificates (`sarkisov-cert/1`): canonical serialization and an independent verifier.
//!
//! The verifier rebuilds the instance and replays every link with the lattice, surface and
//! degree layers only; it never calls into the engine.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::degree::{adjoint_class, lambda_and_e, noether_fano, sarkisov_degree, SarkisovDegree};
use crate::engine::{Branch, Factorization, LinkRecord, LinkType};
use crate::error::{Error, Result};
use crate::instance::{BoundarySpec, EngineConfig, HSpec, InstanceFile, MfsSpec, PointRecord, Problem, INSTANCE_SCHEMA};
use crate::lattice::DivisorClass;
use crate::rational::{factorial, is_half_integer, lcm_denominators, q, serde_q, serde_q_vec, show_q, Q};
use crate::surface::{make_mfs, sarkisov_related_check, Base, MarkedSurface, MfsState, Mode};

pub const CERT_SCHEMA: &str = "sarkisov-cert/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDigest {
    pub forest: Vec<PointRecord>,
    pub curves: Vec<DivisorClass>,
    pub source: MfsSpec,
    pub target: MfsSpec,
    pub boundary: Vec<BoundarySpec>,
    #[serde(with = "serde_q")]
    pub epsilon: Q,
    pub mode: Mode,
    pub h_system: HSpec,
    pub search_bound: u32,
    pub h_w: DivisorClass,
}

impl InstanceDigest {
    fn from_problem(p: &Problem) -> Self {
        let f = &p.file;
        InstanceDigest {
            forest: f.forest.clone(),
            curves: f.curves.clone(),
            source: f.source.clone(),
            target: f.target.clone(),
            boundary: f.boundary.clone(),
            epsilon: f.epsilon.clone(),
            mode: f.mode,
            h_system: f.h_system.clone(),
            search_bound: f.engine.search_bound,
            h_w: p.h.class().clone(),
        }
    }

    pub fn to_instance(&self) -> InstanceFile {
        InstanceFile {
            schema: INSTANCE_SCHEMA.into(),
            forest: self.forest.clone(),
            curves: self.curves.clone(),
            source: self.source.clone(),
            target: self.target.clone(),
            boundary: self.boundary.clone(),
            epsilon: self.epsilon.clone(),
            mode: self.mode,
            h_system: self.h_system.clone(),
            engine: EngineConfig { search_bound: self.search_bound, ..EngineConfig::default() },
        }
    }

    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("digest serialization");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NefWitness {
    pub ray: DivisorClass,
    #[serde(with = "serde_q")]
    pub value: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalWitness {
    pub degree: SarkisovDegree,
    pub contracted: Vec<DivisorClass>,
    pub base: Base,
    pub fiber: Option<DivisorClass>,
    /// `K + B + (1/mu) H` as a class on `W`, and its degrees on the extremal rays.
    pub adjoint: DivisorClass,
    pub nef_witnesses: Vec<NefWitness>,
    pub matches_target: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(with = "serde_q_vec")]
    pub mu_values: Vec<Q>,
    #[serde(with = "serde_q_vec")]
    pub ray_lengths: Vec<Q>,
    pub decrease_ok: bool,
    pub quantization_ok: bool,
    pub related_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SarkisovCertificate {
    pub schema: String,
    pub instance: InstanceDigest,
    pub instance_sha256: String,
    pub initial_degree: SarkisovDegree,
    pub link_count: usize,
    pub links: Vec<LinkRecord>,
    #[serde(rename = "final")]
    pub final_witness: FinalWitness,
    pub checks: Checks,
}

fn final_witness(problem: &Problem, state: &MfsState, deg: &SarkisovDegree) -> Result<FinalWitness> {
    let adjoint = state.surface.image(&adjoint_class(state, &problem.h, &deg.mu.recip()));
    let rays: Vec<DivisorClass> = match state.base {
        Base::Point => vec![state.surface.image(&DivisorClass::line(state.surface.rank()))],
        Base::Curve => {
            let f = state.fiber.clone().ok_or_else(|| Error::MissingRay("final model without fiber".into()))?;
            let s = state.second_ray.clone().ok_or_else(|| Error::MissingRay("final model without second ray".into()))?;
            vec![f, s]
        }
    };
    let nef_witnesses = rays
        .into_iter()
        .map(|ray| NefWitness { value: adjoint.dot_unchecked(&ray), ray })
        .collect();
    let t = &problem.target;
    let matches_target = state.surface.contracted() == t.surface.contracted()
        && state.base == t.base
        && match (&state.fiber, &t.fiber) {
            (None, None) => true,
            (Some(a), Some(b)) => a.positively_proportional(b),
            _ => false,
        };
    Ok(FinalWitness {
        degree: deg.clone(),
        contracted: state.surface.contracted().classes().cloned().collect(),
        base: state.base,
        fiber: state.fiber.clone(),
        adjoint,
        nef_witnesses,
        matches_target,
    })
}

fn mu_bound(problem: &Problem) -> BigInt {
    let b = &problem.boundary;
    let d = lcm_denominators(b.components().iter().map(|c| &c.coefficient).chain(std::iter::once(b.epsilon())));
    factorial(2 * u64::try_from(d).unwrap_or(u64::MAX))
}

fn quantized(problem: &Problem, state: &MfsState, mu: &Q) -> bool {
    if state.base != Base::Curve {
        return true;
    }
    match problem.mode {
        Mode::Genuine => is_half_integer(mu),
        _ => (mu_bound(problem) % mu.denom()).is_zero(),
    }
}

fn related(problem: &Problem, s: &MarkedSurface) -> bool {
    problem.mode == Mode::Genuine
        || (sarkisov_related_check(&[s]).ok()
            && s.discrepancies().iter().all(|d| d.discrepancy > -problem.boundary.epsilon()))
}

fn decreases(rec: &LinkRecord) -> bool {
    let (b, a) = (&rec.degree_before, &rec.degree_after);
    a < b
        && match rec.branch {
            Branch::LambdaLeMu => a.mu < b.mu,
            Branch::LambdaGtMu => a.mu <= b.mu && a.lambda <= b.lambda && (a.lambda != b.lambda || a.e < b.e),
        }
}

/// Assembles the certificate of an engine run.
pub fn certificate(problem: &Problem, fac: &Factorization) -> Result<SarkisovCertificate> {
    let instance = InstanceDigest::from_problem(problem);
    let mut mu_values = vec![fac.initial.mu.clone()];
    mu_values.extend(fac.links.iter().map(|l| l.degree_after.mu.clone()));
    let checks = Checks {
        mu_values,
        ray_lengths: fac.links.iter().map(|l| l.ray_length.clone()).collect(),
        decrease_ok: fac.links.iter().all(decreases),
        quantization_ok: fac
            .states
            .iter()
            .zip(std::iter::once(&fac.initial).chain(fac.links.iter().map(|l| &l.degree_after)))
            .all(|(s, d)| quantized(problem, s, &d.mu)),
        related_ok: fac.states.iter().all(|s| related(problem, &s.surface)),
    };
    Ok(SarkisovCertificate {
        schema: CERT_SCHEMA.into(),
        instance_sha256: instance.sha256(),
        instance,
        initial_degree: fac.initial.clone(),
        link_count: fac.links.len(),
        links: fac.links.clone(),
        final_witness: final_witness(problem, fac.final_state(), &fac.final_degree)?,
        checks,
    })
}

/// Canonical text: fixed field order, rationals as `"n/d"`, two-space indentation.
pub fn emit(cert: &SarkisovCertificate) -> String {
    let mut s = serde_json::to_string_pretty(cert).expect("certificate serialization");
    s.push('\n');
    s
}

pub fn load(text: &str) -> Result<SarkisovCertificate> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    match value.get("schema").and_then(|v| v.as_str()) {
        Some(CERT_SCHEMA) => {}
        Some(other) => return Err(Error::Schema(format!("unsupported certificate schema {other:?}"))),
        None => return Err(Error::Schema("missing schema field".into())),
    }
    serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyFailure {
    pub link: Option<usize>,
    pub message: String,
}

impl fmt::Display for VerifyFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.link {
            Some(i) => write!(f, "link {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

type Check<T> = std::result::Result<T, VerifyFailure>;

fn at(link: Option<usize>) -> impl Fn(String) -> VerifyFailure {
    move |message| VerifyFailure { link, message }
}

fn ensure(cond: bool, link: Option<usize>, msg: impl FnOnce() -> String) -> Check<()> {
    if cond {
        Ok(())
    } else {
        Err(at(link)(msg()))
    }
}

/// Verifies the canonical text of a certificate. Malformed input is a schema error; a
/// well-formed certificate that does not check out yields the first failure.
pub fn verify_text(text: &str) -> Result<Check<()>> {
    let cert = load(text)?;
    if emit(&cert) != text {
        return Ok(Err(at(None)("certificate is not in canonical form".into())));
    }
    Ok(verify(&cert))
}

/// `g = a k + b r` with `a, b >= 0`.
fn in_cone(g: &DivisorClass, k: &DivisorClass, r: &DivisorClass) -> bool {
    let (gv, kv, rv) = (g.to_vec(), k.to_vec(), r.to_vec());
    let n = kv.len();
    for i in 0..n {
        for j in i + 1..n {
            let det = &kv[i] * &rv[j] - &kv[j] * &rv[i];
            if det.is_zero() {
                continue;
            }
            let a = (&gv[i] * &rv[j] - &gv[j] * &rv[i]) / &det;
            let b = (&kv[i] * &gv[j] - &kv[j] * &gv[i]) / &det;
            let ok = &k.scale(&a) + &r.scale(&b) == *g;
            return ok && !a.is_negative() && !b.is_negative();
        }
    }
    false
}

/// Every known curve of the relative cone lies between `k` and `r`.
fn extremal(z: &MarkedSurface, problem: &Problem, fiber: Option<&DivisorClass>, k: &DivisorClass, r: &DivisorClass) -> bool {
    problem.pool.curves().iter().all(|c| {
        if z.contracted().contains(&c.class) {
            return true;
        }
        let g = z.image(&c.class);
        if g.is_zero() || fiber.is_some_and(|f| !g.dot_unchecked(f).is_zero()) {
            return true;
        }
        in_cone(&g, k, r)
    })
}

fn fibering_ok(z: &MarkedSurface, problem: &Problem, d: &DivisorClass, f: &DivisorClass, k: &DivisorClass) -> Result<(), String> {
    if f.primitive().as_ref() != Some(f) || !f.is_integral() {
        return Err(format!("fiber class {f} is not primitive integral"));
    }
    if z.image(f) != *f || !f.square().is_zero() {
        return Err(format!("fiber class {f} is not an isotropic class on the model"));
    }
    if !d.dot_unchecked(f).is_negative() {
        return Err(format!("D is not negative on the fibering ray {f}"));
    }
    for c in problem.pool.curves() {
        if !z.contracted().contains(&c.class) && z.image(&c.class).dot_unchecked(f).is_negative() {
            return Err(format!("fiber class {f} is negative on {c}"));
        }
    }
    if !extremal(z, problem, None, k, f) {
        return Err(format!("{f} is not an extremal ray"));
    }
    Ok(())
}

fn divisorial_ok(
    z: &MarkedSurface,
    problem: &Problem,
    d: &DivisorClass,
    g_class: &DivisorClass,
    fiber: Option<&DivisorClass>,
    k: &DivisorClass,
) -> Result<MarkedSurface, String> {
    let curve = problem.pool.find(g_class).ok_or_else(|| format!("{g_class} is not a known curve"))?;
    if z.contracted().contains(g_class) {
        return Err(format!("{g_class} is already contracted"));
    }
    let g = z.image(g_class);
    if !g.square().is_negative() {
        return Err(format!("{g_class} does not have negative square on the model"));
    }
    if !d.dot_unchecked(&g).is_negative() {
        return Err(format!("D is not negative on {g_class}"));
    }
    if z.image(problem.h.class()).dot_unchecked(&g).is_negative() {
        return Err(format!("H is negative on {g_class}"));
    }
    if fiber.is_some_and(|f| !g.dot_unchecked(f).is_zero()) {
        return Err(format!("{g_class} is not contained in a fiber"));
    }
    if fiber.is_none() && !k.dot_unchecked(&g).is_positive() {
        return Err(format!("{g_class} and the known ray do not bound a cone containing the ample classes"));
    }
    if !extremal(z, problem, fiber, k, &g) {
        return Err(format!("{g_class} is not an extremal ray"));
    }
    z.with_contracted(z.contracted().with(curve.clone())).map_err(|e| e.to_string())
}

fn replay_link(problem: &Problem, state: &MfsState, deg: &SarkisovDegree, rec: &LinkRecord, i: usize) -> Check<MfsState> {
    let l = Some(i);
    let err = at(l);
    let h = &problem.h;
    let mode = problem.mode;
    ensure(rec.index == i, l, || format!("index {} out of order", rec.index))?;
    ensure(rec.degree_before == *deg, l, || format!("degree before is {deg}, recorded {}", rec.degree_before))?;
    ensure(rec.base_before == state.base, l, || "base before does not match".into())?;
    let nf = noether_fano(state, h, deg).map_err(|e| err(e.to_string()))?;
    ensure(!nf.nef, l, || "the Noether-Fano test already passes".into())?;
    let gt = deg.lambda > deg.mu;
    ensure(rec.branch == if gt { Branch::LambdaGtMu } else { Branch::LambdaLeMu }, l, || "wrong branch".into())?;
    let (next, length) = if gt {
        ensure(rec.threshold == deg.lambda.recip(), l, || "threshold is not 1/lambda".into())?;
        let e = rec.extracted.as_ref().ok_or_else(|| err("missing extracted class".into()))?;
        let lam = lambda_and_e(state, h).map_err(|x| err(x.to_string()))?;
        ensure(lam.crepant.iter().any(|c| c.class == *e), l, || format!("{e} is not crepant"))?;
        let x = &state.surface;
        let z = x.with_contracted(x.contracted().without(e)).map_err(|x| err(x.to_string()))?;
        z.check_mode(mode).map_err(|x| err(x.to_string()))?;
        let c = &rec.threshold;
        let dx = x.log_canonical() + &x.image(h.class()).scale(c);
        let d = z.log_canonical() + &z.image(h.class()).scale(c);
        ensure(d == dx, l, || "extraction is not crepant".into())?;
        let k = z.image(e);
        match (rec.link_type, state.base) {
            (LinkType::I, Base::Point) => {
                ensure(rec.contracted.is_none(), l, || "type I contracts nothing".into())?;
                let f = rec.fiber_after.as_ref().ok_or_else(|| err("missing fiber".into()))?;
                fibering_ok(&z, problem, &d, f, &k).map_err(&err)?;
                let next = make_mfs(z.clone(), Base::Curve, Some(f.clone()), &problem.pool, mode).map_err(|x| err(x.to_string()))?;
                (next, -z.log_canonical().dot_unchecked(f))
            }
            (LinkType::II, base) => {
                let g = rec.contracted.as_ref().ok_or_else(|| err("missing contracted class".into()))?;
                let y = divisorial_ok(&z, problem, &d, g, state.fiber.as_ref(), &k).map_err(&err)?;
                let next = make_mfs(y, base, state.fiber.clone(), &problem.pool, mode).map_err(|x| err(x.to_string()))?;
                (next, -z.log_canonical().dot_unchecked(&z.image(g)))
            }
            _ => return Err(err(format!("type {} does not follow an extraction here", rec.link_type))),
        }
    } else {
        ensure(state.base == Base::Curve, l, || "lambda <= mu over a point".into())?;
        ensure(rec.extracted.is_none(), l, || "no extraction on this branch".into())?;
        ensure(rec.threshold == deg.mu.recip(), l, || "threshold is not 1/mu".into())?;
        let x = &state.surface;
        let d = x.log_canonical() + &x.image(h.class()).scale(&rec.threshold);
        let f = state.fiber.clone().ok_or_else(|| err("missing fiber".into()))?;
        match rec.link_type {
            LinkType::III => {
                let g = rec.contracted.as_ref().ok_or_else(|| err("missing contracted class".into()))?;
                let y = divisorial_ok(x, problem, &d, g, None, &f).map_err(&err)?;
                let next = make_mfs(y, Base::Point, None, &problem.pool, mode).map_err(|x| err(x.to_string()))?;
                (next, -x.log_canonical().dot_unchecked(&x.image(g)))
            }
            LinkType::IV => {
                ensure(rec.contracted.is_none(), l, || "type IV contracts nothing".into())?;
                let f1 = rec.fiber_after.as_ref().ok_or_else(|| err("missing fiber".into()))?;
                fibering_ok(x, problem, &d, f1, &f).map_err(&err)?;
                let next = make_mfs(x.clone(), Base::Curve, Some(f1.clone()), &problem.pool, mode).map_err(|x| err(x.to_string()))?;
                (next, -x.log_canonical().dot_unchecked(f1))
            }
            t => return Err(err(format!("type {t} needs an extraction"))),
        }
    };
    ensure(rec.ray_length == length, l, || format!("ray length is {}", show_q(&length)))?;
    ensure(length.is_positive() && (mode != Mode::Genuine || length <= q(4)), l, || "ray length outside (0, 4]".into())?;
    ensure(rec.base_after == next.base, l, || "base after does not match".into())?;
    ensure(rec.fiber_after == next.fiber, l, || "fiber after does not match".into())?;
    let after = sarkisov_degree(&next, h).map_err(|x| err(x.to_string()))?;
    ensure(rec.degree_after == after, l, || format!("degree after is {after}, recorded {}", rec.degree_after))?;
    ensure(decreases(rec), l, || "degree does not decrease as required".into())?;
    ensure(related(problem, &next.surface), l, || "support criterion or epsilon bound fails".into())?;
    ensure(quantized(problem, &next, &after.mu), l, || "mu breaks the quantization bound".into())?;
    Ok(next)
}

pub fn verify(cert: &SarkisovCertificate) -> Check<()> {
    let top = at(None);
    ensure(cert.schema == CERT_SCHEMA, None, || "wrong schema".into())?;
    ensure(cert.instance.sha256() == cert.instance_sha256, None, || "instance digest mismatch".into())?;
    let problem = Problem::new(cert.instance.to_instance()).map_err(|e| top(format!("instance: {e}")))?;
    ensure(InstanceDigest::from_problem(&problem) == cert.instance, None, || "instance is not normalized".into())?;
    let mut state = problem.source.clone();
    let mut deg = sarkisov_degree(&state, &problem.h).map_err(|e| top(e.to_string()))?;
    ensure(cert.initial_degree == deg, None, || format!("initial degree is {deg}"))?;
    ensure(cert.link_count == cert.links.len(), None, || "link count mismatch".into())?;
    let mut states = vec![state.clone()];
    for (i, rec) in cert.links.iter().enumerate() {
        state = replay_link(&problem, &state, &deg, rec, i)?;
        deg = rec.degree_after.clone();
        states.push(state.clone());
    }
    let nf = noether_fano(&state, &problem.h, &deg).map_err(|e| top(e.to_string()))?;
    ensure(nf.nef, None, || "the Noether-Fano test fails at the end".into())?;
    let witness = final_witness(&problem, &state, &deg).map_err(|e| top(e.to_string()))?;
    ensure(witness == cert.final_witness, None, || "final witness mismatch".into())?;
    ensure(witness.matches_target, None, || "final model is not the target".into())?;
    ensure(
        deg == SarkisovDegree::new(problem.h.mu_prime().clone(), Q::zero(), 0),
        None,
        || "final degree is not (mu', 0, 0)".into(),
    )?;
    let mut mu_values = vec![cert.initial_degree.mu.clone()];
    mu_values.extend(cert.links.iter().map(|l| l.degree_after.mu.clone()));
    let checks = Checks {
        mu_values,
        ray_lengths: cert.links.iter().map(|l| l.ray_length.clone()).collect(),
        decrease_ok: true,
        quantization_ok: true,
        related_ok: states.iter().all(|s| related(&problem, &s.surface)),
    };
    ensure(checks == cert.checks, None, || "recorded checks do not match".into())?;
    Ok(())
}

/// The link chain as a DOT digraph.
pub fn to_dot(cert: &SarkisovCertificate) -> String {
    let mut s = String::from("digraph sarkisov {\n  rankdir=LR;\n  node [shape=box];\n");
    let label = |base: Base, d: &SarkisovDegree| {
        format!("{base}\\nmu={} lambda={} e={}", show_q(&d.mu), show_q(&d.lambda), d.e)
    };
    let base0 = cert.links.first().map_or(cert.final_witness.base, |l| l.base_before);
    let _ = writeln!(s, "  s0 [label=\"{}\"];", label(base0, &cert.initial_degree));
    for (i, l) in cert.links.iter().enumerate() {
        let _ = writeln!(s, "  s{} [label=\"{}\"];", i + 1, label(l.base_after, &l.degree_after));
        let _ = writeln!(s, "  s{i} -> s{} [label=\"{}\"];", i + 1, l.link_type);
    }
    s.push_str("}\n");
    s
}
