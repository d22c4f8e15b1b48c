use super::trace::{stable_trace, CocycleTrace};
use super::windows::{check_good_triple, cot_recursion_bound, good_in_orbit_trace, Direction, GoodCheck};
use crate::error::{Error, Result};
use crate::linalg::{angle_between, Vec2};
use crate::maps::{Domain, MapSpec, PlanarMap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchOptions {
    /// Frame-matching radius; `None` means `min(q^{-1/100}, 10⁻³)`.
    pub match_radius: Option<f64>,
    /// Smallest return time `L` considered.
    pub min_return: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { match_radius: None, min_return: 1 }
    }
}

pub fn default_match_radius(q: usize) -> f64 {
    (q as f64).powf(-0.01).min(1e-3)
}

/// A `(q, a)`-good point with everything needed to re-check it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodPointCertificate {
    pub schema: u32,
    pub map: MapSpec,
    pub domain: Domain,
    pub q: usize,
    pub a: f64,
    pub match_radius: f64,
    pub seed: Vec2,
    pub seed_index: usize,
    /// Index of the base point along the seed orbit.
    pub orbit_index: usize,
    pub base: Vec2,
    #[serde(rename = "L")]
    pub l: usize,
    /// Trace on `x_0, …, x_L` starting at the base point.
    pub trace: CocycleTrace,
    /// `(d_{T¹S}(v_s, v^s_L), d_{T¹S}(v_u, v^u_L))`.
    pub distances: (f64, f64),
    /// `(log|cot∠| at 0, at L)`.
    #[serde(with = "ext_pair")]
    pub angle_logs: (f64, f64),
    pub forward: GoodCheck,
    pub backward: GoodCheck,
    /// Number of indices good in the seed orbit.
    pub good_in_orbit: usize,
}

mod ext_pair {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct W(#[serde(with = "crate::format::ext_f64")] f64);

    pub fn serialize<S: Serializer>(v: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
        (W(v.0), W(v.1)).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(f64, f64), D::Error> {
        let (a, b) = <(W, W)>::deserialize(d)?;
        Ok((a.0, b.0))
    }
}

/// `d_{T¹S}` between unit vectors at two points: angle plus chart distance.
pub fn unit_tangent_distance(domain: &Domain, x1: Vec2, v1: Vec2, x2: Vec2, v2: Vec2) -> f64 {
    angle_between(v1, v2) + domain.distance(x1, x2)
}

impl GoodPointCertificate {
    /// Re-check the four defining conditions from the stored fields only.
    pub fn verify(&self) -> Result<()> {
        let t = &self.trace;
        let l = self.l;
        if t.len() != l {
            return Err(Error::PreconditionViolated(format!("stored trace has {} steps, L = {l}", t.len())));
        }
        let fail = |m: String| Err(Error::PreconditionViolated(m));
        let fwd = check_good_triple(t, l, self.a, Direction::Forward);
        if !fwd.ok {
            return fail(format!("forward goodness fails: {:?}", fwd.violation));
        }
        let bwd = check_good_triple(t, l, self.a, Direction::Backward);
        if !bwd.ok {
            return fail(format!("backward goodness fails: {:?}", bwd.violation));
        }
        let (c0, cl) = (t.cot[0].abs().ln(), t.cot[l].abs().ln());
        if !(c0 <= 3.0 * self.a && cl <= 3.0 * self.a) {
            return fail(format!("angle condition fails: log|cot| = {c0}, {cl}, 3a = {}", 3.0 * self.a));
        }
        let ds = unit_tangent_distance(&self.domain, t.points[0], t.v_s[0], t.points[l], t.v_s[l]);
        let du = unit_tangent_distance(&self.domain, t.points[0], t.v_u[0], t.points[l], t.v_u[l]);
        if !(ds < self.match_radius && du < self.match_radius) {
            return fail(format!("frames do not return: d_s = {ds}, d_u = {du}, radius {}", self.match_radius));
        }
        if ds.to_bits() != self.distances.0.to_bits() || du.to_bits() != self.distances.1.to_bits() {
            return fail("stored distances differ from recomputed ones".into());
        }
        if t.points[0] != self.base {
            return fail("base point differs from trace start".into());
        }
        Ok(())
    }

    /// Additionally recompute every exponent from the map at the stored points.
    pub fn verify_against_map(&self, map: &PlanarMap) -> Result<()> {
        self.verify()?;
        let disc = self.trace.recompute_discrepancy(map);
        if disc > 1e-9 {
            return Err(Error::PreconditionViolated(format!("exponents differ from the map by {disc}")));
        }
        for i in 0..self.l {
            let next = map.eval(self.trace.points[i]);
            if self.domain.distance(next, self.trace.points[i + 1]) > 1e-12 {
                return Err(Error::PreconditionViolated(format!("stored orbit is not an orbit at step {i}")));
            }
        }
        cot_recursion_bound(&self.trace, map.d1_bound)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStats {
    pub seeds: usize,
    pub escaped: usize,
    pub good_indices: usize,
    pub angle_ok: usize,
    /// Occupied buckets by occupancy class: `"1"`, `"2"`, `"3-4"`, `"5-8"`, …
    pub bucket_histogram: BTreeMap<String, usize>,
    pub match_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum GoodPointSearch {
    Found { certificate: Box<GoodPointCertificate>, stats: SearchStats },
    NotFound { stats: SearchStats },
}

impl GoodPointSearch {
    pub fn certificate(&self) -> Option<&GoodPointCertificate> {
        match self {
            GoodPointSearch::Found { certificate, .. } => Some(certificate),
            GoodPointSearch::NotFound { .. } => None,
        }
    }

    pub fn stats(&self) -> &SearchStats {
        match self {
            GoodPointSearch::Found { stats, .. } | GoodPointSearch::NotFound { stats } => stats,
        }
    }
}

struct SeedResult {
    escaped: bool,
    good: usize,
    angle_ok: usize,
    buckets: Vec<usize>,
    best: Option<Candidate>,
}

#[derive(Clone)]
struct Candidate {
    l: usize,
    dsum: f64,
    n: usize,
    trace: CocycleTrace,
    distances: (f64, f64),
    good: usize,
}

type Key = (i64, i64, i64, i64);

fn bucket_key(p: Vec2, vs: Vec2, vu: Vec2, cell: f64) -> Key {
    let f = |v: f64| (v / cell).floor() as i64;
    let ang = |v: Vec2| v.y.atan2(v.x).rem_euclid(std::f64::consts::TAU);
    (f(p.x), f(p.y), f(ang(vs)), f(ang(vu)))
}

fn search_seed(map: &PlanarMap, seed: Vec2, q: usize, a: f64, radius: f64, min_return: usize) -> Result<SeedResult> {
    let (_, trace) = match stable_trace(map, seed, q) {
        Ok(t) => t,
        Err(Error::DomainEscape { .. }) => {
            return Ok(SeedResult { escaped: true, good: 0, angle_ok: 0, buckets: vec![], best: None });
        }
        Err(e) => return Err(e),
    };
    let good = good_in_orbit_trace(&trace, a);
    // prefix count of steps with |λ^{s,u}| > a
    let mut viol = vec![0usize; q + 1];
    for i in 0..q {
        let bad = trace.lambda_s[i].abs() > a || trace.lambda_u[i].abs() > a;
        viol[i + 1] = viol[i] + bad as usize;
    }
    let angle_ok = |i: usize| trace.cot[i].abs().ln() <= 3.0 * a;
    // cell side so that a shared bucket forces d_{T¹S} < radius for both frames
    let cell = radius / (1.0 + std::f64::consts::SQRT_2) * (1.0 - 1e-12);
    let mut buckets: HashMap<Key, Vec<usize>> = HashMap::new();
    let mut best: Option<(usize, f64, usize, usize)> = None;
    let mut n_angle = 0;
    for &m in &good {
        if !angle_ok(m) {
            continue;
        }
        n_angle += 1;
        let key = bucket_key(trace.points[m], trace.v_s[m], trace.v_u[m], cell);
        let list = buckets.entry(key).or_default();
        if m >= min_return {
            // latest earlier index with L = m − n ≥ min_return
            let pos = list.partition_point(|&n| n + min_return <= m);
            if pos > 0 {
                let n = list[pos - 1];
                if viol[m] == viol[n] {
                    let l = m - n;
                    let ds = unit_tangent_distance(&map.domain, trace.points[n], trace.v_s[n], trace.points[m], trace.v_s[m]);
                    let du = unit_tangent_distance(&map.domain, trace.points[n], trace.v_u[n], trace.points[m], trace.v_u[m]);
                    if ds < radius && du < radius {
                        let better = match best {
                            None => true,
                            Some((bl, bd, _, _)) => l < bl || (l == bl && ds + du < bd),
                        };
                        if better {
                            best = Some((l, ds + du, n, m));
                        }
                    }
                }
            }
        }
        list.push(m);
    }
    let best = best.map(|(l, dsum, n, m)| {
        let seg = trace.segment(n, m);
        let ds = unit_tangent_distance(&map.domain, seg.points[0], seg.v_s[0], seg.points[l], seg.v_s[l]);
        let du = unit_tangent_distance(&map.domain, seg.points[0], seg.v_u[0], seg.points[l], seg.v_u[l]);
        Candidate { l, dsum, n, trace: seg, distances: (ds, du), good: good.len() }
    });
    let mut sizes: Vec<usize> = buckets.values().map(Vec::len).collect();
    sizes.sort_unstable();
    Ok(SeedResult { escaped: false, good: good.len(), angle_ok: n_angle, buckets: sizes, best })
}

fn occupancy_class(n: usize) -> String {
    match n {
        0 => "0".into(),
        1 => "1".into(),
        2 => "2".into(),
        _ => {
            let hi = n.next_power_of_two();
            format!("{}-{}", hi / 2 + 1, hi)
        }
    }
}

/// Search the seed orbits for a `(q, a)`-good point.
///
/// Seeds run in parallel; the winning pair is the one with the smallest `L`,
/// then the smallest `d_s + d_u`, then the smallest seed index.
pub fn find_good_point(
    map: &PlanarMap,
    seeds: &[Vec2],
    q: usize,
    a: f64,
    opts: &SearchOptions,
) -> Result<GoodPointSearch> {
    if q < 2 {
        return Err(Error::InvalidParameter("q must be at least 2".into()));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    let radius = opts.match_radius.unwrap_or_else(|| default_match_radius(q));
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("match_radius must be positive".into()));
    }
    let results: Vec<Result<SeedResult>> =
        seeds.par_iter().map(|&s| search_seed(map, s, q, a, radius, opts.min_return.max(1))).collect();
    let mut stats = SearchStats {
        seeds: seeds.len(),
        escaped: 0,
        good_indices: 0,
        angle_ok: 0,
        bucket_histogram: BTreeMap::new(),
        match_radius: radius,
    };
    let mut winner: Option<(usize, Candidate)> = None;
    for (i, r) in results.into_iter().enumerate() {
        let r = r?;
        stats.escaped += r.escaped as usize;
        stats.good_indices += r.good;
        stats.angle_ok += r.angle_ok;
        for b in r.buckets {
            *stats.bucket_histogram.entry(occupancy_class(b)).or_default() += 1;
        }
        if let Some(c) = r.best {
            let better = match &winner {
                None => true,
                Some((_, w)) => c.l < w.l || (c.l == w.l && c.dsum < w.dsum),
            };
            if better {
                winner = Some((i, c));
            }
        }
    }
    let Some((seed_index, c)) = winner else {
        return Ok(GoodPointSearch::NotFound { stats });
    };
    let forward = check_good_triple(&c.trace, c.l, a, Direction::Forward);
    let backward = check_good_triple(&c.trace, c.l, a, Direction::Backward);
    let angle_logs = (c.trace.cot[0].abs().ln(), c.trace.cot[c.l].abs().ln());
    let cert = GoodPointCertificate {
        schema: crate::SCHEMA_VERSION,
        map: map.spec().clone(),
        domain: map.domain,
        q,
        a,
        match_radius: radius,
        seed: seeds[seed_index],
        seed_index,
        orbit_index: c.n,
        base: c.trace.points[0],
        l: c.l,
        distances: c.distances,
        angle_logs,
        forward,
        backward,
        good_in_orbit: c.good,
        trace: c.trace,
    };
    cert.verify()?;
    Ok(GoodPointSearch::Found { certificate: Box::new(cert), stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_fixed_point_is_good() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let a = 2f64.ln();
        let r = find_good_point(&f, &[Vec2::new(0.0, 0.0)], 50, a, &SearchOptions::default()).unwrap();
        let c = r.certificate().expect("found");
        assert_eq!(c.l, 1);
        assert_eq!(c.distances, (0.0, 0.0));
        c.verify_against_map(&f).unwrap();
    }

    #[test]
    fn rotation_has_no_good_point() {
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.1)]).unwrap();
        let seeds = crate::seeds::halton(&f.domain, 8);
        let r = find_good_point(&f, &seeds, 200, 0.5, &SearchOptions::default()).unwrap();
        assert!(matches!(r, GoodPointSearch::NotFound { .. }));
        assert_eq!(r.stats().good_indices, 0);
    }

    #[test]
    fn certificate_json_round_trip() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let r = find_good_point(&f, &[Vec2::new(0.0, 0.0)], 20, 2f64.ln(), &SearchOptions { match_radius: None, min_return: 3 }).unwrap();
        let c = r.certificate().unwrap();
        assert_eq!(c.l, 3);
        let s = crate::format::to_json_string(c).unwrap();
        let back: GoodPointCertificate = serde_json::from_str(&s).unwrap();
        assert_eq!(&back, c);
        back.verify().unwrap();
    }
}
