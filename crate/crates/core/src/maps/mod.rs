//! Area-preserving planar maps: catalog, evaluation, orbits and derivative growth.

mod domain;
mod kinds;
mod orbit;

pub use domain::Domain;
pub use kinds::TrigTable;
pub use orbit::{derivative_growth, growth_rate, iterate, GridSpec, GrowthRow, Orbit};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use kinds::{shear_norm, MapKind};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::TAU;

/// Serializable description of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<TrigTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det_tol: Option<f64>,
    /// Iterate `f^power` instead of `f`.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub power: u64,
}

fn one() -> u64 {
    1
}

fn is_one(p: &u64) -> bool {
    *p == 1
}

impl MapSpec {
    pub fn new(name: &str, params: &[(&str, f64)]) -> Self {
        MapSpec {
            name: name.to_string(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            coefficients: None,
            det_tol: None,
            power: 1,
        }
    }

    pub fn build(&self) -> Result<PlanarMap> {
        let mut m = builtin(&self.name, &self.params, self.coefficients.as_ref())?;
        if let Some(t) = self.det_tol {
            m.det_tol = t;
        }
        if self.power > 1 {
            m = m.power(self.power)?;
        }
        Ok(m)
    }
}

/// How `d1_bound` / `d2_bound` were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum BoundMode {
    Analytic,
    /// Sampled supremum times a safety factor.
    Sampled { safety: f64, grid: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Body {
    Closed(MapKind),
    Power { base: Box<PlanarMap>, m: u64 },
}

/// An area-preserving map of a planar domain with derivative bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarMap {
    pub label: String,
    pub params: BTreeMap<String, f64>,
    pub domain: Domain,
    /// Upper bound for `‖Df‖` on the domain.
    pub d1_bound: f64,
    /// Upper bound for the second-derivative tensor norm on the domain.
    pub d2_bound: f64,
    pub bound_mode: BoundMode,
    pub det_tol: f64,
    spec: MapSpec,
    body: Body,
}

const KNOWN: &[&str] = &["rigid-rotation", "polar-twist", "standard-map", "linear-saddle", "perturbed-twist", "trig-twist"];

/// Catalog names.
pub fn catalog() -> &'static [&'static str] {
    KNOWN
}

struct Params<'a> {
    map: &'a str,
    given: &'a BTreeMap<String, f64>,
    used: Vec<&'static str>,
}

impl Params<'_> {
    fn get(&mut self, key: &'static str, default: Option<f64>) -> Result<f64> {
        self.used.push(key);
        match (self.given.get(key), default) {
            (Some(v), _) if v.is_finite() => Ok(*v),
            (Some(v), _) => Err(Error::InvalidParameter(format!("{}: {key} = {v} is not finite", self.map))),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::InvalidParameter(format!("{}: missing parameter {key}", self.map))),
        }
    }

    fn opt(&mut self, key: &'static str) -> Option<f64> {
        self.used.push(key);
        self.given.get(key).copied()
    }

    fn finish(self) -> Result<()> {
        for k in self.given.keys() {
            if !self.used.contains(&k.as_str()) {
                return Err(Error::InvalidParameter(format!("{}: unknown parameter {k}", self.map)));
            }
        }
        Ok(())
    }
}

/// Build a catalog map.
///
/// | name | parameters | domain |
/// |---|---|---|
/// | `rigid-rotation` | `eps`, `radius` = 1, `inner` | disk or annulus |
/// | `polar-twist` | `rho0`, `rho1`, `radius` = 1, `inner` | disk or annulus |
/// | `standard-map` | `k` | torus `[0,1)²` |
/// | `linear-saddle` | `mu`, `box` = 16 | plane chart `[-box, box]²` |
/// | `perturbed-twist` | `eps`, `amp` = 0.25, `radius` = 1 | sheared disk |
/// | `trig-twist` | coefficient table | torus `[0,1)²` |
pub fn builtin(name: &str, params: &BTreeMap<String, f64>, table: Option<&TrigTable>) -> Result<PlanarMap> {
    let mut p = Params { map: name, given: params, used: Vec::new() };
    let rot_domain = |p: &mut Params| -> Result<Domain> {
        let radius = p.get("radius", Some(1.0))?;
        let d = match p.opt("inner") {
            Some(inner) => Domain::Annulus { inner, outer: radius },
            None => Domain::Disk { radius },
        };
        d.validate()?;
        Ok(d)
    };
    let (kind, domain, d1, d2) = match name {
        "rigid-rotation" => {
            let eps = p.get("eps", None)?;
            (MapKind::RigidRotation { eps }, rot_domain(&mut p)?, 1.0, 0.0)
        }
        "polar-twist" => {
            let rho0 = p.get("rho0", None)?;
            let rho1 = p.get("rho1", None)?;
            let dom = rot_domain(&mut p)?;
            let (_, r, _, _) = dom.bounding_box();
            let r = r.abs();
            let c = 2.0 * TAU * rho1.abs();
            (MapKind::PolarTwist { rho0, rho1 }, dom, shear_norm(c * r * r), c * c * r * r * r + 3.0 * c * r)
        }
        "standard-map" => {
            let k = p.get("k", None)?;
            let d1 = Mat2::new(1.0 + k.abs(), 1.0, k.abs(), 1.0).norm();
            (MapKind::StandardMap { k }, Domain::Torus, d1, TAU * k.abs() * std::f64::consts::SQRT_2)
        }
        "linear-saddle" => {
            let mu = p.get("mu", None)?;
            if !(mu > 0.0) {
                return Err(Error::InvalidParameter(format!("linear-saddle: mu must be positive, got {mu}")));
            }
            let b = p.get("box", Some(16.0))?;
            let dom = Domain::PlaneChart { xmin: -b, xmax: b, ymin: -b, ymax: b };
            dom.validate()?;
            (MapKind::LinearSaddle { mu }, dom, mu.max(1.0 / mu), 0.0)
        }
        "perturbed-twist" => {
            let eps = p.get("eps", None)?;
            let amp = p.get("amp", Some(0.25))?;
            let radius = p.get("radius", Some(1.0))?;
            let dom = Domain::ShearedDisk { radius, amp };
            dom.validate()?;
            let s = shear_norm(2.0 * amp * radius);
            (MapKind::PerturbedTwist { eps, amp }, dom, s * s, 2.0 * amp.abs() * (s * s + s))
        }
        "trig-twist" => {
            let table = table.cloned().ok_or_else(|| Error::InvalidParameter("trig-twist needs a coefficient table".into()))?;
            if table.sin.iter().chain(&table.cos).any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter("trig-twist coefficients must be finite".into()));
            }
            (MapKind::TrigTwist { table }, Domain::Torus, f64::NAN, f64::NAN)
        }
        other => return Err(Error::UnknownMap(other.to_string())),
    };
    p.finish()?;
    let spec = MapSpec {
        name: name.to_string(),
        params: params.clone(),
        coefficients: table.cloned(),
        det_tol: None,
        power: 1,
    };
    let mut map = PlanarMap {
        label: kind.name().to_string(),
        params: params.clone(),
        domain,
        d1_bound: d1,
        d2_bound: d2,
        bound_mode: BoundMode::Analytic,
        det_tol: 1e-10,
        spec,
        body: Body::Closed(kind),
    };
    if let Body::Closed(MapKind::TrigTwist { table }) = &map.body {
        // user coefficient tables get sampled bounds with a safety factor
        const GRID: usize = 4096;
        const SAFETY: f64 = 1.5;
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for i in 0..GRID {
            let x = i as f64 / GRID as f64;
            s1 = s1.max(map.jacobian(Vec2::new(x, 0.0)).norm());
            s2 = s2.max(table.kick_second(x).abs() * std::f64::consts::SQRT_2);
        }
        map.d1_bound = SAFETY * s1;
        map.d2_bound = SAFETY * s2;
        map.bound_mode = BoundMode::Sampled { safety: SAFETY, grid: GRID };
    }
    Ok(map)
}

impl PlanarMap {
    /// Convenience constructor for catalog maps.
    pub fn from_name(name: &str, params: &[(&str, f64)]) -> Result<Self> {
        MapSpec::new(name, params).build()
    }

    pub fn spec(&self) -> &MapSpec {
        &self.spec
    }

    /// The iterate `f^m` as a map in its own right.
    pub fn power(&self, m: u64) -> Result<PlanarMap> {
        if m == 0 {
            return Err(Error::InvalidParameter("power must be at least 1".into()));
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let a = self.d1_bound;
        let mf = m as f64;
        // ‖D²f^m‖ ≤ D A^{m−1} Σ_{k<m} A^k
        let geom = if (a - 1.0).abs() < 1e-15 { mf } else { (a.powf(mf) - 1.0) / (a - 1.0) };
        let mut spec = self.spec.clone();
        spec.power *= m;
        Ok(PlanarMap {
            label: format!("{}^{}", self.label, m),
            params: self.params.clone(),
            domain: self.domain,
            d1_bound: a.powf(mf),
            d2_bound: self.d2_bound * a.powf(mf - 1.0) * geom,
            bound_mode: self.bound_mode,
            det_tol: self.det_tol * mf,
            spec,
            body: Body::Power { base: Box::new(self.clone()), m },
        })
    }

    /// Unreduced image in the lifted chart.
    fn eval_lifted(&self, p: Vec2) -> Vec2 {
        match &self.body {
            Body::Closed(k) => k.eval(p),
            Body::Power { base, m } => {
                let mut x = p;
                for _ in 0..*m {
                    x = base.eval(x);
                }
                x
            }
        }
    }

    pub fn eval(&self, p: Vec2) -> Vec2 {
        self.domain.reduce(self.eval_lifted(p))
    }

    pub fn jacobian(&self, p: Vec2) -> Mat2 {
        match &self.body {
            Body::Closed(k) => k.jacobian(p),
            Body::Power { base, m } => {
                let mut x = p;
                let mut j = Mat2::IDENTITY;
                for _ in 0..*m {
                    j = base.jacobian(x) * j;
                    x = base.eval(x);
                }
                j
            }
        }
    }

    /// `f(p + d) − f(p)` in the lifted chart, accurate when `d` is tiny.
    pub fn eval_offset(&self, p: Vec2, d: Vec2) -> Vec2 {
        match &self.body {
            Body::Closed(k) => k.eval_offset(p, d),
            Body::Power { base, m } => {
                let (mut x, mut dx) = (p, d);
                for _ in 0..*m {
                    dx = base.eval_offset(x, dx);
                    x = base.eval(x);
                }
                dx
            }
        }
    }

    /// Lifted angular increment about the origin, in turns.
    ///
    /// Closed forms are used where available; otherwise the increment is the
    /// principal angle difference in `[-1/2, 1/2)`.
    pub fn lift_increment(&self, p: Vec2) -> Option<f64> {
        if !self.domain.is_rotational() {
            return None;
        }
        match &self.body {
            Body::Closed(k) => Some(k.exact_lift_increment(p).unwrap_or_else(|| {
                let q = k.eval(p);
                let d = (q.y.atan2(q.x) - p.y.atan2(p.x)) / TAU;
                d - (d + 0.5).floor()
            })),
            Body::Power { base, m } => {
                let mut x = p;
                let mut acc = 0.0;
                for _ in 0..*m {
                    acc += base.lift_increment(x)?;
                    x = base.eval(x);
                }
                Some(acc)
            }
        }
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.domain.contains(p)
    }

    /// Whether the map is a closed-form linear map (zero nonlinearity).
    pub fn is_linear(&self) -> bool {
        self.d2_bound == 0.0
    }
}
