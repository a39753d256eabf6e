//! The Sarkisov degree `(mu, lambda, e)` and the Noether-Fano test.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Curve, DivisorClass};
use crate::rational::{serde_q, show_q, Q};
use crate::surface::{nef_test, Base, CurvePool, MfsState, NefOutcome};

/// The mobile system `H_W = q^* H_{X'}` with `H_{X'} = -mu' (K_{X'} + B_{X'}) + phi'^* A'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HSystem {
    class: DivisorClass,
    mu_prime: Q,
    ample_degree: Q,
}

impl HSystem {
    /// Derives `H_W` from the target model; `ample_degree` is the degree of `A'` on the
    /// base curve and must be zero over a point.
    pub fn derive(target: &MfsState, mu_prime: Q, ample_degree: Q, pool: &CurvePool) -> Result<Self> {
        if !mu_prime.is_positive() || !mu_prime.is_integer() {
            return Err(Error::Instance(format!("mu' = {} is not a positive integer", show_q(&mu_prime))));
        }
        if ample_degree.is_negative() || !ample_degree.is_integer() {
            return Err(Error::Instance(format!(
                "degree of A' = {} is not a nonnegative integer",
                show_q(&ample_degree)
            )));
        }
        let anti = -target.surface.log_canonical();
        let mut class = anti.scale(&mu_prime);
        match (target.base, &target.fiber) {
            (Base::Point, _) => {
                if !ample_degree.is_zero() {
                    return Err(Error::Instance("A' must vanish over a point".into()));
                }
            }
            (Base::Curve, Some(f)) => {
                if !ample_degree.is_positive() {
                    return Err(Error::Instance("A' must be ample on the base curve".into()));
                }
                class = &class + &f.scale(&ample_degree);
            }
            (Base::Curve, None) => return Err(Error::MissingRay("target model without a fiber".into())),
        }
        if !class.is_integral() {
            return Err(Error::Instance(format!("H_W = {class} is not an integral class")));
        }
        for curve in pool.curves() {
            let v = class.dot_unchecked(&curve.class);
            if v.is_negative() {
                return Err(Error::Instance(format!("H_W = {class} is negative on the curve {curve}")));
            }
            if v.is_zero() && !target.surface.contracted().contains(&curve.class) {
                return Err(Error::Instance(format!("H_{{X'}} is not ample: it vanishes on {curve}")));
            }
        }
        Ok(HSystem { class, mu_prime, ample_degree })
    }

    /// A system given directly by its class on `W`, with `mu' = 1` and no check against a
    /// target model.
    pub fn from_class(class: DivisorClass) -> Self {
        HSystem { class, mu_prime: Q::one(), ample_degree: Q::zero() }
    }

    pub fn class(&self) -> &DivisorClass {
        &self.class
    }

    pub fn mu_prime(&self) -> &Q {
        &self.mu_prime
    }

    pub fn ample_degree(&self) -> &Q {
        &self.ample_degree
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SarkisovDegree {
    #[serde(with = "serde_q")]
    pub mu: Q,
    #[serde(with = "serde_q")]
    pub lambda: Q,
    pub e: u64,
}

impl SarkisovDegree {
    pub fn new(mu: Q, lambda: Q, e: u64) -> Self {
        SarkisovDegree { mu, lambda, e }
    }
}

impl Ord for SarkisovDegree {
    fn cmp(&self, other: &Self) -> Ordering {
        degree_compare(self, other)
    }
}

impl PartialOrd for SarkisovDegree {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SarkisovDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", show_q(&self.mu), show_q(&self.lambda), self.e)
    }
}

pub fn degree_compare(a: &SarkisovDegree, b: &SarkisovDegree) -> Ordering {
    a.mu.cmp(&b.mu).then_with(|| a.lambda.cmp(&b.lambda)).then_with(|| a.e.cmp(&b.e))
}

/// `mu` with `mu (K_X + B_X) + H_X` trivial over the base.
pub fn quasi_effective_threshold(x: &MfsState, h: &HSystem) -> Result<Q> {
    let hx = x.surface.image(h.class());
    let anti = -x.surface.log_canonical();
    match x.base {
        Base::Curve => {
            let f = x.fiber.as_ref().ok_or_else(|| Error::MissingRay("model over a curve without a fiber".into()))?;
            let den = anti.dot_unchecked(f);
            if !den.is_positive() {
                return Err(Error::NonpositiveDenominator(format!(
                    "-(K + B) . f = {} on the fiber {f}",
                    show_q(&den)
                )));
            }
            Ok(hx.dot_unchecked(f) / den)
        }
        Base::Point => {
            if anti.is_zero() {
                return Err(Error::NonpositiveDenominator("K + B is numerically trivial".into()));
            }
            let mu = hx.proportionality(&anti).ok_or_else(|| {
                Error::NotProportional(format!("H_X = {hx} is not proportional to -(K + B) = {anti}"))
            })?;
            if !mu.is_positive() {
                return Err(Error::NonpositiveDenominator(format!("mu = {} is not positive", show_q(&mu))));
            }
            Ok(mu)
        }
    }
}

/// Ramification `r` of `K + B` and drop `b` of `H` along one exceptional curve of `W -> X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExceptionalData {
    pub curve: Curve,
    pub a: Q,
    pub b: Q,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaData {
    pub lambda: Q,
    pub e: u64,
    /// The exceptional curves achieving `lambda`, in key order.
    pub crepant: Vec<Curve>,
    pub exceptionals: Vec<ExceptionalData>,
}

pub fn exceptional_data(x: &MfsState, h: &HSystem) -> Vec<ExceptionalData> {
    let drops = x.surface.pullback(h.class()).coefficients;
    x.surface
        .discrepancies()
        .iter()
        .zip(drops)
        .map(|(d, b)| ExceptionalData { curve: d.curve.clone(), a: d.ramification.clone(), b })
        .collect()
}

pub fn lambda_and_e(x: &MfsState, h: &HSystem) -> Result<LambdaData> {
    let exceptionals = exceptional_data(x, h);
    let mut lambda = Q::zero();
    for d in exceptionals.iter().filter(|d| d.b.is_positive()) {
        if !d.a.is_positive() {
            return Err(Error::NonpositiveDiscrepancyDenominator(format!(
                "{} has ramification {} and H-drop {}",
                d.curve,
                show_q(&d.a),
                show_q(&d.b)
            )));
        }
        lambda = lambda.max(&d.b / &d.a);
    }
    let crepant: Vec<Curve> = if lambda.is_zero() {
        Vec::new()
    } else {
        exceptionals
            .iter()
            .filter(|d| d.b.is_positive() && &d.b / &d.a == lambda)
            .map(|d| d.curve.clone())
            .collect()
    };
    Ok(LambdaData { lambda, e: crepant.len() as u64, crepant, exceptionals })
}

pub fn sarkisov_degree(x: &MfsState, h: &HSystem) -> Result<SarkisovDegree> {
    let mu = quasi_effective_threshold(x, h)?;
    let l = lambda_and_e(x, h)?;
    Ok(SarkisovDegree::new(mu, l.lambda, l.e))
}

/// `K + B + (1/mu) H` as a class on `W`.
pub fn adjoint_class(x: &MfsState, h: &HSystem, c: &Q) -> DivisorClass {
    x.surface.log_canonical() + &x.surface.image(h.class()).scale(c)
}

pub fn noether_fano(x: &MfsState, h: &HSystem, deg: &SarkisovDegree) -> Result<NefOutcome> {
    if deg.lambda > deg.mu {
        return Ok(NefOutcome { nef: false, witness: None });
    }
    let d = adjoint_class(x, h, &deg.mu.recip());
    nef_test(&d, x)
}
