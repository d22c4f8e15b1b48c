use crate::cocycle::CocycleTrace;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::ops::{Add, Neg, Sub};

/// Logarithm stored as a whole number of `2⁻³²` nat units.
///
/// Sums and differences are exact, so the schedule identities hold bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogFixed(pub i64);

const UNITS: f64 = 4_294_967_296.0;

impl LogFixed {
    pub const ZERO: LogFixed = LogFixed(0);

    pub fn round_ln(x: f64) -> Self {
        LogFixed((x * UNITS).round() as i64)
    }

    pub fn floor_ln(x: f64) -> Self {
        LogFixed((x * UNITS).floor() as i64)
    }

    pub fn ln(self) -> f64 {
        self.0 as f64 / UNITS
    }

    pub fn exp(self) -> f64 {
        self.ln().exp()
    }

    pub fn times(self, k: i64) -> Self {
        LogFixed(self.0.checked_mul(k).expect("log-domain overflow"))
    }
}

impl Add for LogFixed {
    type Output = LogFixed;
    fn add(self, o: LogFixed) -> LogFixed {
        LogFixed(self.0 + o.0)
    }
}

impl Sub for LogFixed {
    type Output = LogFixed;
    fn sub(self, o: LogFixed) -> LogFixed {
        LogFixed(self.0 - o.0)
    }
}

impl Neg for LogFixed {
    type Output = LogFixed;
    fn neg(self) -> LogFixed {
        LogFixed(-self.0)
    }
}

/// Cap of `c_n`, i.e. `ln 100` rounded down to the grid.
pub fn c_cap() -> LogFixed {
    LogFixed::floor_ln(100f64.ln())
}

/// Smallest `ln r̄` for which boxes are instantiated in linear space.
pub const GEOMETRIC_LN_FLOOR: f64 = -667.74; // ln 1e-290

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleParams {
    pub a: f64,
    /// `D` entering `r̄ = D^{-3M}`, `κ̄ = D^{-M}`, `β̄ = D^M`.
    pub d: f64,
    /// Second-derivative bound entering `ε_n`.
    pub d_nonlin: f64,
    pub m: u32,
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCheck {
    pub name: String,
    /// Index of the worst case.
    pub index: Option<usize>,
    /// Worst `ln(rhs) − ln(lhs)`; the check passes when this is `≥ 0`.
    #[serde(with = "crate::format::ext_f64")]
    pub margin: f64,
    pub passed: bool,
}

/// Box and cone parameters along a trace, in log domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSchedule {
    pub params: ScheduleParams,
    pub delta: f64,
    pub ln_d: LogFixed,
    pub r_bar: LogFixed,
    pub kappa_bar: LogFixed,
    pub beta_bar: LogFixed,
    pub c: Vec<LogFixed>,
    pub r: Vec<LogFixed>,
    pub tau: Vec<LogFixed>,
    pub kappa: Vec<LogFixed>,
    pub kappa_tilde: Vec<LogFixed>,
    pub beta: Vec<LogFixed>,
    /// `ln ε_n`; `-inf` for maps without nonlinearity.
    #[serde(with = "crate::format::ext_f64_vec")]
    pub ln_eps: Vec<f64>,
    pub checks: Vec<ScheduleCheck>,
}

/// Dimensions of `U(r, τ, κ) = {|v| ≤ r, |w| ≤ τ + κ|v|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDims {
    pub r: f64,
    pub tau: f64,
    pub kappa: f64,
}

impl BoxDims {
    pub fn half_height(&self, v: f64) -> f64 {
        self.tau + self.kappa * v.abs()
    }

    pub fn contains(&self, v: f64, w: f64) -> bool {
        v.abs() <= self.r && w.abs() <= self.half_height(v)
    }
}

fn worst(name: &str, items: impl Iterator<Item = f64>) -> ScheduleCheck {
    let mut best = (None, f64::INFINITY);
    for (i, m) in items.enumerate() {
        if m < best.1 || best.0.is_none() {
            best = (Some(i), m);
        }
    }
    ScheduleCheck { name: name.into(), index: best.0, margin: best.1, passed: best.1 >= 0.0 }
}

pub fn build_schedule(trace: &CocycleTrace, p: &ScheduleParams) -> Result<BoxSchedule> {
    if trace.is_empty() {
        return Err(Error::InvalidParameter("empty trace".into()));
    }
    if !(p.a > 0.0) || !(p.d > 1.0) || p.m == 0 || !(p.c0 > 0.0) || !(p.d_nonlin >= 0.0) {
        return Err(Error::InvalidParameter(format!("bad schedule parameters {p:?}")));
    }
    let l = trace.len();
    let delta = p.a / 100.0;
    let ln_d = LogFixed::round_ln(p.d.ln());
    let m = p.m as i64;
    let r_bar = -ln_d.times(3 * m);
    let kappa_bar = -ln_d.times(m);
    let beta_bar = ln_d.times(m);
    let cap = c_cap();

    let mut c = vec![LogFixed::ZERO];
    let mut tau = vec![r_bar];
    for n in 0..l {
        let step = LogFixed::floor_ln(trace.lambda_e[n] - delta);
        c.push((c[n] + step).min(cap));
        tau.push(tau[n] + LogFixed::round_ln(trace.lambda_s[n] + delta));
    }
    let r: Vec<_> = c.iter().map(|&c| r_bar + c.times(3)).collect();
    let kappa: Vec<_> = c.iter().map(|&c| kappa_bar - c).collect();
    let kappa_tilde: Vec<_> = c.iter().map(|&c| kappa_bar + c).collect();
    let beta: Vec<_> = c.iter().map(|&c| beta_bar - c).collect();
    let ln_eps: Vec<f64> = (0..l)
        .map(|n| {
            if p.d_nonlin == 0.0 {
                f64::NEG_INFINITY
            } else {
                2f64.ln() + p.c0.ln() + p.d_nonlin.ln() + beta[n + 1].ln() + r[n].ln() + kappa[n].exp().ln_1p()
            }
        })
        .collect();

    let ln_dd = ln_d.ln();
    let mf = p.m as f64;
    let checks = vec![
        worst("beta >= max(|cot|, 1)", (0..=l).map(|n| beta[n].ln() - trace.cot[n].abs().ln().max(0.0))),
        ScheduleCheck {
            name: "c_L = 100".into(),
            index: Some(l),
            margin: (c[l] - cap).ln(),
            passed: c[l] == cap,
        },
        {
            let margin = r_bar.ln() - 10f64.ln() - tau[l].ln();
            ScheduleCheck { name: "tau_L <= r_bar/10".into(), index: Some(l), margin, passed: margin >= 0.0 }
        },
        worst("r_n >= tau_n", (0..=l).map(|n| (r[n] - tau[n]).ln())),
        worst("eps_n <= D^(-M/2) kappa_bar", (0..l).map(|n| -0.5 * mf * ln_dd + kappa_bar.ln() - ln_eps[n])),
        worst("eps_n kappa_n <= D^(-M) kappa_bar", (0..l).map(|n| -mf * ln_dd + kappa_bar.ln() - ln_eps[n] - kappa[n].ln())),
        worst(
            "eps_n kappa_tilde_n <= D^(-M) kappa_bar",
            (0..l).map(|n| -mf * ln_dd + kappa_bar.ln() - ln_eps[n] - kappa_tilde[n].ln()),
        ),
    ];
    Ok(BoxSchedule {
        params: *p,
        delta,
        ln_d,
        r_bar,
        kappa_bar,
        beta_bar,
        c,
        r,
        tau,
        kappa,
        kappa_tilde,
        beta,
        ln_eps,
        checks,
    })
}

impl BoxSchedule {
    /// Return time `L`.
    pub fn len(&self) -> usize {
        self.c.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} at index {:?} (margin {:e})", c.name, c.index, c.margin))
            .collect()
    }

    pub fn check(&self) -> Result<()> {
        let f = self.failures();
        if f.is_empty() {
            Ok(())
        } else {
            Err(Error::ScheduleCheckFailed(f))
        }
    }

    /// `κ_nκ̃_n = κ̄²`, `β_nc_n = β̄` and `r_n = r̄c_n³` at every index.
    pub fn identities_hold(&self) -> bool {
        (0..self.c.len()).all(|n| {
            self.kappa[n] + self.kappa_tilde[n] == self.kappa_bar.times(2)
                && self.beta[n] + self.c[n] == self.beta_bar
                && self.r[n] == self.r_bar + self.c[n].times(3)
                && self.c[n] <= c_cap()
        })
    }

    /// `c_L = 100`, `r_L = 10⁶r̄`, `κ_L = κ̄/100`, `κ̃_L = 100κ̄`.
    pub fn terminal_identities_hold(&self) -> bool {
        let l = self.len();
        let cap = c_cap();
        self.c[l] == cap
            && self.r[l] == self.r_bar + cap.times(3)
            && self.kappa[l] == self.kappa_bar - cap
            && self.kappa_tilde[l] == self.kappa_bar + cap
    }

    /// Whether boxes are representable in binary64.
    pub fn geometric(&self) -> bool {
        self.r_bar.ln() > GEOMETRIC_LN_FLOOR
    }

    pub fn box_at(&self, n: usize) -> BoxDims {
        BoxDims { r: self.r[n].exp(), tau: self.tau[n].exp(), kappa: self.kappa[n].exp() }
    }

    /// `U_0 = U(r̄, r̄, κ̄)`.
    pub fn base_box(&self) -> BoxDims {
        self.box_at(0)
    }
}
