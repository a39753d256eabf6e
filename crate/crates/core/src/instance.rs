//! The `sarkisov-instance/1` input format, its validation, and instance generators.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::degree::HSystem;
use crate::error::{Error, Result};
use crate::lattice::{ContractionSet, Curve, DivisorClass, PointSpec, ProximityForest};
use crate::rational::{q, serde_q, Q};
use crate::surface::{
    make_mfs, make_surface, sarkisov_related_check, Base, Boundary, BoundaryComponent, CurvePool, MfsState, Mode,
    Ray, RelativeCone, DEFAULT_SEARCH_BOUND,
};

pub const INSTANCE_SCHEMA: &str = "sarkisov-instance/1";
pub const DEFAULT_MAX_LINKS: usize = 10_000;

/// One point of the forest with 1-based references.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointRecord {
    pub parent: Option<usize>,
    #[serde(default)]
    pub satellites: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MfsSpec {
    pub contracted: Vec<DivisorClass>,
    pub base: Base,
    #[serde(default)]
    pub fiber: Option<DivisorClass>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub class: DivisorClass,
    #[serde(with = "serde_q")]
    pub coefficient: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HSpec {
    #[serde(with = "serde_q")]
    pub mu_prime: Q,
    #[serde(with = "serde_q")]
    pub ample_degree: Q,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub search_bound: u32,
    pub max_links: usize,
    pub deterministic: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { search_bound: DEFAULT_SEARCH_BOUND, max_links: DEFAULT_MAX_LINKS, deterministic: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema: String,
    pub forest: Vec<PointRecord>,
    #[serde(default)]
    pub curves: Vec<DivisorClass>,
    pub source: MfsSpec,
    pub target: MfsSpec,
    #[serde(default)]
    pub boundary: Vec<BoundarySpec>,
    #[serde(with = "serde_q")]
    pub epsilon: Q,
    pub mode: Mode,
    pub h_system: HSpec,
    #[serde(default)]
    pub engine: EngineConfig,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        if file.schema != INSTANCE_SCHEMA {
            return Err(Error::Schema(format!("unsupported instance schema {:?}", file.schema)));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization")
    }

    /// Sorts every list of curves by curve key so that equal instances serialize equally.
    fn sort_classes(&mut self) {
        let Ok(f) = self.forest_spec() else { return };
        let key = |c: &DivisorClass| Curve::from_class(&f, c.clone());
        for spec in [&mut self.source, &mut self.target] {
            spec.contracted.sort_by_cached_key(key);
        }
        self.curves.sort_by_cached_key(key);
        self.curves.dedup();
        self.boundary.sort_by_cached_key(|b| key(&b.class));
    }

    pub fn forest_spec(&self) -> Result<ProximityForest> {
        let specs = self
            .forest
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let idx = |j: usize| {
                    if j == 0 || j > i {
                        Err(Error::Instance(format!("point {}: reference {j} is not an earlier point", i + 1)))
                    } else {
                        Ok(j - 1)
                    }
                };
                Ok(PointSpec {
                    parent: p.parent.map(idx).transpose()?,
                    satellites: p.satellites.iter().map(|&s| idx(s)).collect::<Result<_>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProximityForest::new(specs)
    }

    /// Applies command-line overrides and the mode normalization.
    pub fn with_overrides(mut self, mode: Option<Mode>, epsilon: Option<Q>, search_bound: Option<u32>, max_links: Option<usize>) -> Self {
        if let Some(m) = mode {
            self.mode = m;
        }
        if let Some(e) = epsilon {
            self.epsilon = e;
        }
        if let Some(b) = search_bound {
            self.engine.search_bound = b;
        }
        if let Some(n) = max_links {
            self.engine.max_links = n;
        }
        self
    }

    /// klt with `epsilon = 0` and no boundary is the genuine program.
    pub fn normalized(mut self) -> Self {
        if self.mode == Mode::Klt && self.epsilon.is_zero() && self.boundary.is_empty() {
            self.mode = Mode::Genuine;
        }
        self.sort_classes();
        self
    }
}

/// A validated instance: both Mori fiber spaces on a common `W`, the boundary, the mobile
/// system and the curve pool.
#[derive(Clone, Debug)]
pub struct Problem {
    pub file: InstanceFile,
    pub forest: Arc<ProximityForest>,
    pub boundary: Arc<Boundary>,
    pub pool: CurvePool,
    pub mode: Mode,
    pub h: HSystem,
    pub source: MfsState,
    pub target: MfsState,
    pub config: EngineConfig,
}

impl Problem {
    pub fn load(text: &str) -> Result<Self> {
        Problem::new(InstanceFile::from_json(text)?)
    }

    pub fn new(file: InstanceFile) -> Result<Self> {
        let file = file.normalized();
        if file.schema != INSTANCE_SCHEMA {
            return Err(Error::Schema(format!("unsupported instance schema {:?}", file.schema)));
        }
        let forest = Arc::new(file.forest_spec()?);
        let r = forest.len();
        let rank_ok = |c: &DivisorClass| {
            if c.rank() == r {
                Ok(())
            } else {
                Err(Error::Instance(format!("class {c} has {} exceptional coordinates, expected {r}", c.rank())))
            }
        };
        let all_classes = file
            .curves
            .iter()
            .chain(&file.source.contracted)
            .chain(&file.target.contracted)
            .chain(file.boundary.iter().map(|b| &b.class))
            .chain(file.source.fiber.iter())
            .chain(file.target.fiber.iter());
        for c in all_classes {
            rank_ok(c)?;
        }
        let mode = file.mode;
        if mode == Mode::Genuine && (!file.boundary.is_empty() || !file.epsilon.is_zero()) {
            return Err(Error::Instance("genuine mode takes no boundary and epsilon = 0".into()));
        }
        if mode == Mode::Klt && file.epsilon >= Q::one() {
            return Err(Error::Instance("klt mode needs epsilon < 1".into()));
        }
        let declared: Vec<DivisorClass> = file
            .curves
            .iter()
            .chain(&file.source.contracted)
            .chain(&file.target.contracted)
            .chain(file.boundary.iter().map(|b| &b.class))
            .filter(|c| forest.exceptional_index(c).is_none())
            .cloned()
            .collect();
        let pool = CurvePool::build(&forest, &declared, file.engine.search_bound)?;
        let cx = ContractionSet::from_classes(&forest, file.source.contracted.iter().cloned());
        let cy = ContractionSet::from_classes(&forest, file.target.contracted.iter().cloned());
        for (name, spec, set) in [("source", &file.source, &cx), ("target", &file.target, &cy)] {
            if set.len() != spec.contracted.len() {
                return Err(Error::Instance(format!("{name} lists a contracted class twice")));
            }
        }
        let listed = file
            .boundary
            .iter()
            .map(|b| BoundaryComponent { class: b.class.clone(), coefficient: b.coefficient.clone() })
            .collect();
        let boundary = Arc::new(Boundary::assemble(r, listed, file.epsilon.clone(), &cx, &cy)?);
        let x = make_surface(forest.clone(), cx, boundary.clone())?;
        let y = make_surface(forest.clone(), cy, boundary.clone())?;
        if mode != Mode::Genuine {
            let report = sarkisov_related_check(&[&x, &y]);
            if let Some((i, c, v)) = report.failures.first() {
                return Err(Error::Instance(format!(
                    "{} model is not Sarkisov related to W: ramification {} along {c}",
                    if *i == 0 { "source" } else { "target" },
                    crate::rational::show_q(v)
                )));
            }
        }
        let source = make_mfs(x, file.source.base, file.source.fiber.clone(), &pool, mode)?;
        let target = make_mfs(y, file.target.base, file.target.fiber.clone(), &pool, mode)?;
        let h = HSystem::derive(&target, file.h_system.mu_prime.clone(), file.h_system.ample_degree.clone(), &pool)?;
        if mode == Mode::Genuine && source.base == Base::Point && target.base == Base::Point {
            check_homaloidal(h.class(), h.mu_prime())?;
        }
        let config = file.engine.clone();
        Ok(Problem { file, forest, boundary, pool, mode, h, source, target, config })
    }
}

/// `d^2 - sum m^2 = 1` and `3d - sum m = 3` for `H_W / (3 mu')`.
pub fn check_homaloidal(h: &DivisorClass, mu_prime: &Q) -> Result<()> {
    let s = h.scale(&(q(3) * mu_prime).recip());
    let k = DivisorClass::canonical(h.rank());
    if s.square() != q(1) || -s.dot_unchecked(&k) != q(3) {
        return Err(Error::Instance(format!("{s} is not a homaloidal class")));
    }
    Ok(())
}

fn records(forest: &ProximityForest) -> Vec<PointRecord> {
    forest
        .points()
        .iter()
        .map(|p| PointRecord {
            parent: p.parent.map(|j| j + 1),
            satellites: p.satellites.iter().map(|j| j + 1).collect(),
        })
        .collect()
}

fn genuine_file(forest: &ProximityForest, source: MfsSpec, target: MfsSpec, ample_degree: i64) -> InstanceFile {
    InstanceFile {
        schema: INSTANCE_SCHEMA.into(),
        forest: records(forest),
        curves: Vec::new(),
        source,
        target,
        boundary: Vec::new(),
        epsilon: Q::zero(),
        mode: Mode::Genuine,
        h_system: HSpec { mu_prime: q(1), ample_degree: q(ample_degree) },
        engine: EngineConfig::default(),
    }
    .normalized()
}

fn plane_spec(forest: &ProximityForest) -> MfsSpec {
    MfsSpec {
        contracted: ContractionSet::all_exceptional(forest).classes().cloned().collect(),
        base: Base::Point,
        fiber: None,
    }
}

/// The standard quadratic transformation.
pub fn gen_cremona() -> InstanceFile {
    let f = ProximityForest::free(3);
    let target = MfsSpec {
        contracted: vec![
            DivisorClass::plane_curve(1, &[0, 1, 1]),
            DivisorClass::plane_curve(1, &[1, 0, 1]),
            DivisorClass::plane_curve(1, &[1, 1, 0]),
        ],
        base: Base::Point,
        fiber: None,
    };
    genuine_file(&f, plane_spec(&f), target, 0)
}

/// The plane map of degree `d` with one point of multiplicity `d - 1` and `2d - 2` simple points.
pub fn gen_dejonquieres(d: i64) -> Result<InstanceFile> {
    if !(2..=12).contains(&d) {
        return Err(Error::Instance(format!("de Jonquieres degree {d} is outside 2..=12")));
    }
    let r = (2 * d - 1) as usize;
    let f = ProximityForest::free(r);
    let mut contracted: Vec<DivisorClass> = (1..r)
        .map(|i| {
            let mut m = vec![0; r];
            m[0] = 1;
            m[i] = 1;
            DivisorClass::plane_curve(1, &m)
        })
        .collect();
    let mut m = vec![1; r];
    m[0] = d - 2;
    contracted.push(DivisorClass::plane_curve(d - 1, &m));
    let target = MfsSpec { contracted, base: Base::Point, fiber: None };
    let mut file = genuine_file(&f, plane_spec(&f), target, 0);
    file.engine.search_bound = file.engine.search_bound.max(d as u32);
    Ok(file)
}

/// The identity of the plane blown up nowhere.
pub fn gen_identity() -> InstanceFile {
    let f = ProximityForest::free(0);
    genuine_file(&f, plane_spec(&f), plane_spec(&f), 0)
}

fn random_forest(rng: &mut ChaCha8Rng, n: usize) -> ProximityForest {
    let mut f = ProximityForest::default();
    while f.len() < n {
        let i = f.len();
        let roll: f64 = rng.gen();
        let spec = if i == 0 || roll < 0.6 {
            PointSpec::proper()
        } else if roll < 0.9 {
            PointSpec::near(rng.gen_range(0..i))
        } else {
            let p = rng.gen_range(0..i);
            match f.proximate_to(p).first() {
                Some(&s) => PointSpec::satellite(p, s),
                None => PointSpec::near(p),
            }
        };
        f = f.extend(spec).or_else(|_| f.extend(PointSpec::proper())).expect("a proper point is always valid");
    }
    f
}

fn spec_of(state: &MfsState) -> MfsSpec {
    MfsSpec {
        contracted: state.surface.contracted().classes().cloned().collect(),
        base: state.base,
        fiber: state.fiber.clone(),
    }
}

/// One random elementary link from `state`, or `None` if the chosen move is unavailable.
fn random_link(rng: &mut ChaCha8Rng, state: &MfsState, pool: &CurvePool) -> Option<MfsState> {
    let mode = Mode::Genuine;
    let surface = &state.surface;
    let kx = surface.log_canonical().clone();
    let moves: &[u8] = match (state.base, &state.second_ray) {
        (Base::Point, _) => &[0],
        (Base::Curve, Some(s)) if s.square().is_zero() => &[0, 0, 2],
        (Base::Curve, _) => &[0, 0, 1],
    };
    match *moves.choose(rng)? {
        0 => {
            let mut exc: Vec<&Curve> = surface.contracted().curves().iter().collect();
            exc.shuffle(rng);
            for c in exc {
                let z = surface.with_contracted(surface.contracted().without(&c.class)).ok()?;
                if z.check_mode(mode).is_err() {
                    continue;
                }
                let k = z.image(&c.class);
                let cone = RelativeCone { contracted: z.contracted(), fiber: state.fiber.as_ref() };
                let Ok(ray) = cone.other_ray(&k, &(-&kx), pool) else { continue };
                if !z.log_canonical().dot_unchecked(ray.class()).is_negative() {
                    continue;
                }
                let next = match (&ray, state.base) {
                    (Ray::Fibering { class }, Base::Point) => make_mfs(z, Base::Curve, Some(class.clone()), pool, mode),
                    (Ray::Divisorial { curve, .. }, base) => z
                        .with_contracted(z.contracted().with(curve.clone()))
                        .and_then(|y| make_mfs(y, base, state.fiber.clone(), pool, mode)),
                    _ => continue,
                };
                if let Ok(next) = next {
                    return Some(next);
                }
            }
            None
        }
        1 => {
            let s = state.second_ray.as_ref()?;
            let curve = pool.curves().iter().find(|c| {
                !surface.contracted().contains(&c.class) && surface.image(&c.class) == *s
            })?;
            if !kx.dot_unchecked(s).is_negative() {
                return None;
            }
            let y = surface.with_contracted(surface.contracted().with(curve.clone())).ok()?;
            make_mfs(y, Base::Point, None, pool, mode).ok()
        }
        _ => {
            let s = state.second_ray.clone()?;
            make_mfs(surface.clone(), Base::Curve, Some(s), pool, mode).ok()
        }
    }
}

/// A reproducible genuine instance: the plane blown up at `points` random points as the
/// source, and the end of a random chain of links as the target.
pub fn gen_random(points: usize, seed: u64) -> Result<InstanceFile> {
    if !(1..=8).contains(&points) {
        return Err(Error::Instance(format!("random instances take 1..=8 points, got {points}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..64 {
        let forest = Arc::new(random_forest(&mut rng, points));
        let pool = CurvePool::build(&forest, &[], DEFAULT_SEARCH_BOUND)?;
        let boundary = Arc::new(Boundary::empty(points));
        let plane = make_surface(forest.clone(), ContractionSet::all_exceptional(&forest), boundary)?;
        let source = make_mfs(plane, Base::Point, None, &pool, Mode::Genuine)?;
        let steps = rng.gen_range(1..=2 * points + 1);
        let mut state = source.clone();
        for _ in 0..steps {
            for _try in 0..4 {
                if let Some(next) = random_link(&mut rng, &state, &pool) {
                    state = next;
                    break;
                }
            }
        }
        let ample = match (state.base, &state.second_ray) {
            (Base::Point, _) => 0,
            (Base::Curve, Some(s)) => {
                let n = -s.square();
                let n = n.to_integer().try_into().unwrap_or(1i64);
                (n - 1).max(1)
            }
            (Base::Curve, None) => continue,
        };
        let file = genuine_file(&forest, spec_of(&source), spec_of(&state), ample);
        if Problem::new(file.clone()).is_ok() {
            return Ok(file);
        }
    }
    Err(Error::Instance(format!("no valid random instance for {points} points and seed {seed}")))
}

/// An instance in klt mode: a random genuine instance with `epsilon` on the curves
/// contracted at both ends.
pub fn gen_random_klt(points: usize, seed: u64, epsilon: Q) -> Result<InstanceFile> {
    let mut file = gen_random(points, seed)?;
    file.mode = Mode::Klt;
    file.epsilon = epsilon;
    Ok(file)
}

/// Two rulings of the quadric surface blown up at two points.
pub fn gen_product_switch() -> InstanceFile {
    let f = ProximityForest::free(2);
    let contracted = vec![DivisorClass::plane_curve(1, &[1, 1])];
    let source = MfsSpec { contracted: contracted.clone(), base: Base::Curve, fiber: Some(DivisorClass::plane_curve(1, &[1, 0])) };
    let target = MfsSpec { contracted, base: Base::Curve, fiber: Some(DivisorClass::plane_curve(1, &[0, 1])) };
    genuine_file(&f, source, target, 1)
}

/// An elementary transformation between Hirzebruch surfaces with a reduced fiber in the
/// boundary.
pub fn gen_wklt_fiber() -> InstanceFile {
    let f = ProximityForest::free(2);
    let fiber = DivisorClass::plane_curve(1, &[1, 0]);
    let source = MfsSpec {
        contracted: vec![DivisorClass::from_ints(0, &[0, 1])],
        base: Base::Curve,
        fiber: Some(fiber.clone()),
    };
    let target = MfsSpec {
        contracted: vec![DivisorClass::plane_curve(1, &[1, 1])],
        base: Base::Curve,
        fiber: Some(fiber.clone()),
    };
    let mut file = genuine_file(&f, source, target, 1);
    file.mode = Mode::Wklt;
    file.epsilon = q(1);
    file.boundary = vec![BoundarySpec { class: fiber, coefficient: q(1) }];
    file
}
