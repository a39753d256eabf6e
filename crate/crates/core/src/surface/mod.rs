//! Marked models of `W`, boundaries, singularity classes and (log) Mori fiber spaces.

mod cone;
mod pool;

use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

pub use cone::{rational_sqrt, Ray, RelativeCone};
pub use pool::{minus_one_multiplicities, CurvePool, DEFAULT_SEARCH_BOUND};

use crate::error::{Error, Result};
use crate::lattice::{ContractionSet, Curve, DivisorClass, Projector, ProximityForest, Pullback};
use crate::rational::{show_q, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Genuine,
    Klt,
    Wklt,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Genuine => "genuine",
            Mode::Klt => "klt",
            Mode::Wklt => "wklt",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryComponent {
    pub class: DivisorClass,
    pub coefficient: Q,
}

/// The boundary `B_W` on `W` together with the parameter `epsilon`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Boundary {
    rank: usize,
    components: Vec<BoundaryComponent>,
    epsilon: Q,
}

impl Boundary {
    pub fn empty(rank: usize) -> Self {
        Boundary { rank, components: Vec::new(), epsilon: Q::zero() }
    }

    pub fn new(rank: usize, components: Vec<BoundaryComponent>, epsilon: Q) -> Result<Self> {
        let unit = |x: &Q| !x.is_negative() && *x <= Q::one();
        if !unit(&epsilon) {
            return Err(Error::Instance(format!("epsilon {} is outside [0, 1]", show_q(&epsilon))));
        }
        let mut kept: Vec<BoundaryComponent> = Vec::new();
        for c in components {
            if c.class.rank() != rank {
                return Err(Error::Instance(format!("boundary component {} has the wrong rank", c.class)));
            }
            if !unit(&c.coefficient) {
                return Err(Error::Instance(format!(
                    "boundary coefficient {} is outside [0, 1]",
                    show_q(&c.coefficient)
                )));
            }
            if kept.iter().any(|k| k.class == c.class) {
                return Err(Error::Instance(format!("boundary component {} is listed twice", c.class)));
            }
            if !c.coefficient.is_zero() {
                kept.push(c);
            }
        }
        Ok(Boundary { rank, components: kept, epsilon })
    }

    /// `B_W`: the listed components plus `epsilon` times every curve contracted on both ends.
    pub fn assemble(
        rank: usize,
        listed: Vec<BoundaryComponent>,
        epsilon: Q,
        source: &ContractionSet,
        target: &ContractionSet,
    ) -> Result<Self> {
        let mut all = listed;
        for c in source.classes().filter(|c| target.contains(c)) {
            if all.iter().any(|x| x.class == *c) {
                return Err(Error::Instance(format!(
                    "boundary component {c} is contracted on both ends and cannot be listed"
                )));
            }
            all.push(BoundaryComponent { class: c.clone(), coefficient: epsilon.clone() });
        }
        Boundary::new(rank, all, epsilon)
    }

    pub fn components(&self) -> &[BoundaryComponent] {
        &self.components
    }

    pub fn epsilon(&self) -> &Q {
        &self.epsilon
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn divisor(&self) -> DivisorClass {
        self.components
            .iter()
            .fold(DivisorClass::zero(self.rank), |acc, c| &acc + &c.class.scale(&c.coefficient))
    }

    pub fn coefficient_of(&self, class: &DivisorClass) -> Q {
        self.components
            .iter()
            .find(|c| c.class == *class)
            .map_or_else(Q::zero, |c| c.coefficient.clone())
    }

    /// The components surviving on a model: `B_X = p_* B_W`.
    pub fn pushforward<'a>(&'a self, contracted: &'a ContractionSet) -> impl Iterator<Item = &'a BoundaryComponent> {
        self.components.iter().filter(move |c| !contracted.contains(&c.class))
    }
}

/// Log data of one exceptional curve of `W -> X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discrepancy {
    pub curve: Curve,
    /// Coefficient of the curve in `K_W + B_W - p^*(K_X + B_X)`.
    pub ramification: Q,
    /// Discrepancy of the pair `(X, B_X)`: the ramification minus the coefficient in `B_W`.
    pub discrepancy: Q,
    /// Discrepancy of `X` without boundary.
    pub plain: Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SingularityClass {
    Terminal,
    Canonical,
    Klt,
    Wklt,
    Lc,
    Bad,
}

/// A contraction `p: W -> X` of a fixed list of curves, with the boundary of `W`.
#[derive(Clone, Debug)]
pub struct MarkedSurface {
    forest: Arc<ProximityForest>,
    contracted: ContractionSet,
    boundary: Arc<Boundary>,
    projector: Projector,
    log_pullback: DivisorClass,
    log_data: Vec<Discrepancy>,
}

impl PartialEq for MarkedSurface {
    fn eq(&self, other: &Self) -> bool {
        self.forest == other.forest && self.contracted == other.contracted && self.boundary == other.boundary
    }
}

impl Eq for MarkedSurface {}

pub fn make_surface(
    forest: Arc<ProximityForest>,
    contracted: ContractionSet,
    boundary: Arc<Boundary>,
) -> Result<MarkedSurface> {
    let r = forest.len();
    for c in contracted.classes() {
        if c.rank() != r {
            return Err(Error::Instance(format!("contracted class {c} has the wrong rank")));
        }
    }
    contracted.check()?;
    let projector = contracted.projector()?;
    let kw = DivisorClass::canonical(r);
    let log = projector.pullback(&(&kw + &boundary.divisor()));
    let plain = projector.pullback(&kw);
    let log_data = contracted
        .curves()
        .iter()
        .zip(log.coefficients.iter().zip(&plain.coefficients))
        .map(|(curve, (x, y))| {
            let ramification = -x;
            Discrepancy {
                curve: curve.clone(),
                discrepancy: &ramification - boundary.coefficient_of(&curve.class),
                ramification,
                plain: -y,
            }
        })
        .collect();
    Ok(MarkedSurface { forest, contracted, boundary, projector, log_pullback: log.class, log_data })
}

impl MarkedSurface {
    pub fn forest(&self) -> &Arc<ProximityForest> {
        &self.forest
    }

    pub fn contracted(&self) -> &ContractionSet {
        &self.contracted
    }

    pub fn boundary(&self) -> &Arc<Boundary> {
        &self.boundary
    }

    pub fn rank(&self) -> usize {
        self.forest.len()
    }

    /// Picard number of `X`.
    pub fn rho(&self) -> usize {
        1 + self.rank() - self.contracted.len()
    }

    pub fn pullback(&self, d: &DivisorClass) -> Pullback {
        self.projector.pullback(d)
    }

    /// `p^* p_* D`.
    pub fn image(&self, d: &DivisorClass) -> DivisorClass {
        self.projector.apply(d)
    }

    /// `p^*(K_X + B_X)`.
    pub fn log_canonical(&self) -> &DivisorClass {
        &self.log_pullback
    }

    pub fn discrepancies(&self) -> &[Discrepancy] {
        &self.log_data
    }

    pub fn boundary_coefficients(&self) -> impl Iterator<Item = &Q> {
        self.boundary.pushforward(&self.contracted).map(|c| &c.coefficient)
    }

    pub fn classify(&self) -> SingularityClass {
        classify(self)
    }

    /// The same model with one more or one fewer contracted curve.
    pub fn with_contracted(&self, contracted: ContractionSet) -> Result<MarkedSurface> {
        make_surface(self.forest.clone(), contracted, self.boundary.clone())
    }

    /// Checks the singularity condition of `mode` on this model.
    pub fn check_mode(&self, mode: Mode) -> Result<()> {
        let class = self.classify();
        let eps = self.boundary.epsilon();
        let ok = match mode {
            Mode::Genuine => class == SingularityClass::Terminal,
            Mode::Klt => {
                class <= SingularityClass::Klt
                    && self.boundary_coefficients().all(|c| c <= eps)
                    && self.log_data.iter().all(|d| d.discrepancy > -eps)
            }
            Mode::Wklt => class <= SingularityClass::Wklt,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::SingularityClass(format!(
                "model contracting [{}] is {class:?}, not admissible in {mode} mode",
                self.contracted.classes().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
            )))
        }
    }
}

pub fn discrepancies(x: &MarkedSurface) -> &[Discrepancy] {
    x.discrepancies()
}

pub fn classify(x: &MarkedSurface) -> SingularityClass {
    let coeffs: Vec<&Q> = x.boundary_coefficients().collect();
    let a: Vec<&Q> = x.log_data.iter().map(|d| &d.discrepancy).collect();
    let one = Q::one();
    let minus_one = -Q::one();
    if coeffs.is_empty() && a.iter().all(|v| v.is_positive()) {
        SingularityClass::Terminal
    } else if coeffs.iter().all(|c| **c < one) && a.iter().all(|v| !v.is_negative()) {
        SingularityClass::Canonical
    } else if coeffs.iter().all(|c| **c < one) && a.iter().all(|v| **v > minus_one) {
        SingularityClass::Klt
    } else if coeffs.iter().all(|c| **c <= one) && a.iter().all(|v| **v > minus_one) {
        SingularityClass::Wklt
    } else if coeffs.iter().all(|c| **c <= one) && a.iter().all(|v| **v >= minus_one) {
        SingularityClass::Lc
    } else {
        SingularityClass::Bad
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Base {
    Point,
    Curve,
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Base::Point => "point",
            Base::Curve => "curve",
        })
    }
}

/// A model with a Mori fiber structure: over a point (`rho = 1`) or over a rational curve
/// (`rho = 2`) with the fiber class and the second extremal ray recorded as pullbacks to `W`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MfsState {
    pub surface: MarkedSurface,
    pub base: Base,
    pub fiber: Option<DivisorClass>,
    pub second_ray: Option<DivisorClass>,
}

pub fn make_mfs(
    surface: MarkedSurface,
    base: Base,
    fiber: Option<DivisorClass>,
    pool: &CurvePool,
    mode: Mode,
) -> Result<MfsState> {
    surface.check_mode(mode)?;
    let rho = surface.rho();
    let kb = surface.log_canonical().clone();
    match base {
        Base::Point => {
            if rho != 1 {
                return Err(Error::RhoMismatch(format!("a model over a point needs rho = 1, got {rho}")));
            }
            if fiber.is_some() {
                return Err(Error::Instance("a model over a point has no fiber class".into()));
            }
            for curve in pool.curves() {
                if surface.contracted().contains(&curve.class) {
                    continue;
                }
                let g = surface.image(&curve.class);
                if !kb.dot_unchecked(&g).is_negative() {
                    return Err(Error::NotRelativelyAmple(format!(
                        "-(K + B) is not positive on the curve {curve}"
                    )));
                }
            }
            Ok(MfsState { surface, base, fiber: None, second_ray: None })
        }
        Base::Curve => {
            if rho != 2 {
                return Err(Error::RhoMismatch(format!("a model over a curve needs rho = 2, got {rho}")));
            }
            let f = fiber.ok_or_else(|| Error::Instance("a model over a curve needs a fiber class".into()))?;
            let f = surface.image(&f);
            if f.is_zero() || !f.square().is_zero() {
                return Err(Error::Instance(format!("fiber class {f} is not isotropic on the model")));
            }
            for curve in pool.curves() {
                if surface.contracted().contains(&curve.class) {
                    continue;
                }
                if surface.image(&curve.class).dot_unchecked(&f).is_negative() {
                    return Err(Error::Instance(format!("fiber class {f} is negative on the curve {curve}")));
                }
            }
            if !kb.dot_unchecked(&f).is_negative() {
                return Err(Error::NotRelativelyAmple(format!("-(K + B) is not positive on the fiber {f}")));
            }
            let cone = RelativeCone { contracted: surface.contracted(), fiber: None };
            let second = cone.other_ray(&f, &f, pool)?;
            Ok(MfsState { surface, base, fiber: Some(f), second_ray: Some(second.class().clone()) })
        }
    }
}

/// Outcome of a nef test; `witness` is a violating curve class when not nef.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NefOutcome {
    pub nef: bool,
    pub witness: Option<DivisorClass>,
}

pub fn nef_test(d: &DivisorClass, x: &MfsState) -> Result<NefOutcome> {
    let dx = x.surface.image(d);
    let rays: Vec<DivisorClass> = match x.base {
        Base::Point => vec![x.surface.image(&DivisorClass::line(x.surface.rank()))],
        Base::Curve => {
            let second = x
                .second_ray
                .clone()
                .ok_or_else(|| Error::MissingRay("model over a curve without a second ray".into()))?;
            let fiber = x.fiber.clone().ok_or_else(|| Error::MissingRay("model over a curve without a fiber".into()))?;
            vec![fiber, second]
        }
    };
    let witness = rays.into_iter().find(|r| dx.dot_unchecked(r).is_negative());
    Ok(NefOutcome { nef: witness.is_none(), witness })
}

/// Models failing the support criterion: an exceptional curve with nonpositive ramification.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RelatedReport {
    pub failures: Vec<(usize, DivisorClass, Q)>,
}

impl RelatedReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn sarkisov_related_check(models: &[&MarkedSurface]) -> RelatedReport {
    let mut report = RelatedReport::default();
    for (i, m) in models.iter().enumerate() {
        for d in m.discrepancies() {
            if !d.ramification.is_positive() {
                report.failures.push((i, d.curve.class.clone(), d.ramification.clone()));
            }
        }
    }
    report
}
