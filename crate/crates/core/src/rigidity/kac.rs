use super::freedisc::{trial_rng, Disc};
use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, Vec2};
use crate::maps::PlanarMap;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KacReport {
    pub disc: Disc,
    pub samples: u64,
    pub horizon: u64,
    pub rng_seed: u64,
    /// Samples that returned before the horizon.
    pub returned: u64,
    pub capped_fraction: f64,
    /// Mean first-return time over returned samples.
    #[serde(with = "crate::format::ext_f64")]
    pub mean_return: f64,
    pub min_return: Option<u64>,
    pub max_return: Option<u64>,
    /// Disc area normalized by the domain area.
    pub disc_measure: f64,
    /// `mean_return · disc_measure`; at most 1 by Kac's lemma.
    #[serde(with = "crate::format::ext_f64")]
    pub kac_product: f64,
    /// `Σ l_D` over returned samples (integer windings), when angles make sense.
    pub winding_sum: Option<i64>,
    /// `Σ n_D` over returned samples.
    pub return_sum: u64,
    /// `Σl / Σn`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    n: Option<u64>,
    lift: Option<f64>,
}

fn first_return(map: &PlanarMap, disc: &Disc, x: Vec2, horizon: u64) -> Result<Sample> {
    let rotational = map.domain.is_rotational();
    let mut p = x;
    let mut lift = CompensatedSum::default();
    for n in 1..=horizon {
        if rotational {
            lift.add(map.lift_increment(p).unwrap_or(f64::NAN));
        }
        p = map.eval(p);
        if !map.contains(p) {
            return Err(Error::DomainEscape { index: n as usize, point: p.to_array() });
        }
        if disc.contains(&map.domain, p) {
            return Ok(Sample { n: Some(n), lift: rotational.then(|| lift.value()) });
        }
    }
    Ok(Sample { n: None, lift: None })
}

/// First-return statistics of uniformly sampled points of `disc`.
pub fn kac_return_stats(map: &PlanarMap, disc: Disc, samples: u64, horizon: u64, rng_seed: u64) -> Result<KacReport> {
    if samples == 0 || horizon == 0 || !(disc.radius > 0.0) {
        return Err(Error::InvalidParameter("samples, horizon and radius must be positive".into()));
    }
    if !disc.inside(&map.domain) {
        return Err(Error::PreconditionViolated("disc is not inside the domain".into()));
    }
    let c = disc.center();
    let rows = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(rng_seed, i);
            let r = disc.radius * rng.gen::<f64>().sqrt();
            let a = TAU * rng.gen::<f64>();
            first_return(map, &disc, c + Vec2::new(r * a.cos(), r * a.sin()), horizon)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut returned, mut sum_n, mut lo, mut hi) = (0u64, 0u64, u64::MAX, 0u64);
    let mut winding: Option<i64> = map.domain.is_rotational().then_some(0);
    for s in &rows {
        if let Some(n) = s.n {
            returned += 1;
            sum_n += n;
            lo = lo.min(n);
            hi = hi.max(n);
            if let (Some(w), Some(l)) = (winding.as_mut(), s.lift) {
                *w += l.round() as i64;
            }
        }
    }
    let mean_return = if returned > 0 { sum_n as f64 / returned as f64 } else { f64::NAN };
    let disc_measure = disc.area() / map.domain.area();
    Ok(KacReport {
        disc,
        samples,
        horizon,
        rng_seed,
        returned,
        capped_fraction: (samples - returned) as f64 / samples as f64,
        mean_return,
        min_return: (returned > 0).then_some(lo),
        max_return: (returned > 0).then_some(hi),
        disc_measure,
        kac_product: mean_return * disc_measure,
        winding_sum: winding,
        return_sum: sum_n,
        ratio: winding.filter(|_| sum_n > 0).map(|w| w as f64 / sum_n as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_rotation_returns_at_q() {
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.4)]).unwrap();
        let d = Disc { center: [0.5, 0.1], radius: 0.05 };
        let r = kac_return_stats(&f, d, 2000, 100, 5).unwrap();
        assert_eq!(r.min_return, Some(5));
        assert_eq!(r.max_return, Some(5));
        assert_eq!(r.ratio, Some(0.4));
        assert_eq!(r.capped_fraction, 0.0);
    }

    #[test]
    fn golden_rotation_ratio() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", g)]).unwrap();
        let d = Disc { center: [0.0, 0.6], radius: 0.1 };
        let r = kac_return_stats(&f, d, 2000, 100_000, 9).unwrap();
        assert!((r.ratio.unwrap() - g).abs() < 1e-3);
        assert!(r.kac_product <= 1.0 + super::super::freedisc::SLACK);
    }

    #[test]
    fn disc_outside_domain_rejected() {
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.1)]).unwrap();
        let d = Disc { center: [0.95, 0.0], radius: 0.1 };
        assert!(matches!(kac_return_stats(&f, d, 10, 10, 0), Err(Error::PreconditionViolated(_))));
    }
}
