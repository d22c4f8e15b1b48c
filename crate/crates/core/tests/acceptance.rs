//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p growthgap-core --test acceptance`; the lines are
//! written straight to stdout so they are visible without `--nocapture`.

use growthgap::arithmetic::{brjuno_partial_sum, cf_expand, cf_expand_available, classify, distance_to_integers, Classification};
use growthgap::certifier::{c_cap, BoxSchedule, HyperbolicityCertificate};
use growthgap::cocycle::{good_in_orbit, pliss_indices, stable_trace};
use growthgap::linalg::{LogScaledProduct, Spectrum};
use growthgap::maps::{iterate, GridSpec};
use growthgap::pipeline::{run_pipeline, PipelineOptions, PipelineOutcome};
use growthgap::rigidity::{displacement_bound, free_disc_search, kac_return_stats, rigid_rotation_free_measure, sample_domain, Disc};
use growthgap::{IrrationalSpec, PlanarMap, Vec2};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::time::Instant;

struct Line {
    id: u32,
    pass: bool,
    detail: String,
}

fn emit(line: &Line) {
    let tag = if line.pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "{tag} [{}] {}", line.id, line.detail).unwrap();
    out.flush().unwrap();
}

fn random_surd(rng: &mut ChaCha8Rng) -> IrrationalSpec {
    loop {
        let r: u64 = rng.gen_range(2..2000);
        let s = (r as f64).sqrt() as u64;
        if s * s == r || (s + 1) * (s + 1) == r {
            continue;
        }
        let q: i64 = rng.gen_range(1..6) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let den: i64 = rng.gen_range(1..40);
        let v = q as f64 * (r as f64).sqrt() / den as f64;
        let p = -(v.floor() as i64) * den;
        let a = IrrationalSpec::QuadraticSurd { p, q, r, den };
        if a.validate().is_ok() {
            return a;
        }
    }
}

fn arithmetic() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut bad = Vec::new();
    for _ in 0..1000 {
        let alpha = random_surd(&mut rng);
        let cf = cf_expand(&alpha, 30).unwrap();
        let x = alpha.to_f64();
        let (mut pm, mut qm) = (BigInt::one(), BigInt::zero());
        let (mut p, mut q) = (BigInt::zero(), BigInt::one());
        for n in 1..=30 {
            let a = &cf.partial_quotients[n - 1];
            let (pn, qn) = (a * &p + &pm, a * &q + &qm);
            let det = &pn * &q - &p * &qn;
            let want = if n % 2 == 0 { -BigInt::one() } else { BigInt::one() };
            if (pn.clone(), qn.clone()) != cf.convergents[n] || det != want || !a.is_positive() {
                bad.push(format!("{alpha}: recurrence at n = {n}"));
            }
            (pm, qm, p, q) = (p, q, pn, qn);
        }
        for n in 0..30 {
            let d = distance_to_integers(&alpha, cf.q(n)).unwrap();
            if d.ln.is_nan() || d.ln >= -cf.ln_q(n + 1) {
                bad.push(format!("{alpha}: |q_{n} a| = {:e}", d.value));
            }
            if let Some(qf) = cf.q(n).to_f64().filter(|v| *v < 1e6) {
                let direct = (qf * x - (qf * x).round()).abs();
                if (direct - d.value).abs() > 1e-8 {
                    bad.push(format!("{alpha}: distance oracle at n = {n}"));
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Line {
        id: 1,
        pass: bad.is_empty() && secs < 5.0,
        detail: format!("arithmetic: 1000 surds, depth 30, {} violations, {secs:.2} s (< 5 s) {:?}", bad.len(), bad.first()),
    }
}

/// `Σ_{n>30} ln(q_{n+1})/q_n` for the golden mean, from Fibonacci numbers in
/// floating point.
fn golden_tail_oracle() -> f64 {
    let mut f = vec![1.0f64, 1.0];
    while f.len() < 120 {
        let k = f.len();
        f.push(f[k - 1] + f[k - 2]);
    }
    (31..119).map(|n| f[n + 1].ln() / f[n]).sum()
}

/// The second flag says whether every part except the tail bound holds.
fn classification() -> (Line, bool) {
    let thresholds = Default::default();
    let golden = IrrationalSpec::golden_mean();
    let run = || {
        let g = cf_expand(&golden, 100).unwrap();
        let lv = cf_expand_available(&IrrationalSpec::liouville(6).unwrap(), 200).unwrap();
        let tail = brjuno_partial_sum(&g, 98).unwrap() - brjuno_partial_sum(&g, 30).unwrap();
        let gc = classify(&cf_expand(&golden, 30).unwrap(), &thresholds).unwrap();
        let lc = classify(&lv, &thresholds).unwrap();
        (tail, serde_json::to_string(&(gc, lc)).unwrap())
    };
    let (tail, first) = run();
    let (_, second) = run();
    let (gc, lc): (growthgap::arithmetic::ClassificationReport, growthgap::arithmetic::ClassificationReport) =
        serde_json::from_str(&first).unwrap();
    let oracle = golden_tail_oracle();
    let attainable = gc.class == Classification::BrjunoConsistent
        && lc.class == Classification::SuperLiouvilleEvidence
        && first == second
        && (tail - oracle).abs() < 1e-9 * oracle;
    let line = Line {
        id: 2,
        pass: attainable && tail < 1e-6,
        detail: format!(
            "classification: golden {:?}, tail beyond 30 = {tail:.3e} (oracle {oracle:.3e}, target < 1e-6), liouville {:?}, deterministic {}",
            gc.class,
            lc.class,
            first == second
        ),
    };
    (line, attainable)
}

fn brute_pliss(seq: &[f64], l2: f64) -> Vec<usize> {
    (0..seq.len())
        .filter(|&i| {
            let mut s = 0.0;
            (i..seq.len()).all(|j| {
                s += seq[j];
                s / (j + 1 - i) as f64 > l2
            })
        })
        .collect()
}

fn pliss() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut done, mut bad) = (0, Vec::new());
    while done < 500 {
        let n = rng.gen_range(1..=20);
        let l = 1.0;
        let seq: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..=l)).collect();
        let mean = seq.iter().sum::<f64>() / n as f64;
        let l1 = mean - rng.gen_range(0.01..0.5);
        let l2 = l1 - rng.gen_range(0.01..1.0);
        if l1 >= l {
            continue;
        }
        done += 1;
        let sel = pliss_indices(&seq, l, l1, l2).unwrap();
        let guaranteed = (l1 - l2) / (l - l2) * n as f64;
        if sel.indices != brute_pliss(&seq, l2) || (sel.indices.len() as f64) < guaranteed {
            bad.push(seq);
        }
    }
    Line { id: 3, pass: bad.is_empty(), detail: format!("pliss: 500 sequences vs brute force, {} mismatches", bad.len()) }
}

fn random_map(rng: &mut ChaCha8Rng) -> PlanarMap {
    match rng.gen_range(0..3) {
        0 => PlanarMap::from_name("standard-map", &[("k", rng.gen_range(0.5..8.0))]).unwrap(),
        1 => PlanarMap::from_name("polar-twist", &[("rho0", rng.gen_range(0.05..0.3)), ("rho1", rng.gen_range(0.1..0.6))]).unwrap(),
        _ => PlanarMap::from_name("perturbed-twist", &[("eps", rng.gen_range(0.05..0.45)), ("amp", rng.gen_range(0.1..0.5))]).unwrap(),
    }
}

fn random_seed(map: &PlanarMap, rng: &mut ChaCha8Rng) -> Vec2 {
    loop {
        let p = sample_domain(&map.domain, rng).unwrap();
        if map.contains(p) {
            return p;
        }
    }
}

fn cocycle_identities() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut stable, mut product, mut cot) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..100 {
        let map = random_map(&mut rng);
        let x = random_seed(&map, &mut rng);
        let q = rng.gen_range(1..=500);
        let (_, tr) = stable_trace(&map, x, q).unwrap();
        let orbit = iterate(&map, x, q).unwrap();
        let (mut fwd, mut inv) = (LogScaledProduct::default(), LogScaledProduct::default());
        for j in &orbit.jacobians {
            fwd.push_left(j);
            inv.push_right(&j.inverse());
        }
        let log_norm = fwd.log_norm();
        let sum_s: f64 = tr.lambda_s.iter().sum();
        stable = stable.max((sum_s + log_norm).abs() / log_norm.abs().max(1.0));
        // σ_max·σ_min = ‖P‖ / ‖P⁻¹‖
        product = product.max((log_norm - inv.log_norm()).exp_m1().abs());
        let a2 = map.d1_bound * map.d1_bound;
        for i in 0..q {
            let rhs = (2.0 * tr.lambda_s[i]).exp() * tr.cot[i].abs() + a2;
            cot = cot.max((tr.cot[i + 1].abs() - rhs) / rhs.max(1.0));
        }
    }
    Line {
        id: 4,
        pass: stable < 1e-6 && product < 1e-8 && cot <= 1e-8,
        detail: format!(
            "cocycle: 100 configurations, stable-sum rel err {stable:.2e} (< 1e-6), |σ_max σ_min - 1| {product:.2e} (< 1e-8), worst cot excess {cot:.2e} (<= 1e-8)"
        ),
    }
}

/// Good-in-orbit by direct `O(q²)` running sums.
fn brute_good(e: &[f64], c: f64) -> Vec<usize> {
    let q = e.len();
    (1..q)
        .filter(|&n| {
            let mut s = 0.0;
            let fwd = (n..q).all(|j| {
                s += e[j];
                s > c * (j + 1 - n) as f64
            });
            let mut s = 0.0;
            fwd && (0..n).rev().all(|j| {
                s += e[j];
                s > c * (n - j) as f64
            })
        })
        .collect()
}

fn good_scan() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let map = PlanarMap::from_name("standard-map", &[("k", 6.0)]).unwrap();
    let (mut bad, mut sizes) = (0, Vec::new());
    for _ in 0..20 {
        let x = random_seed(&map, &mut rng);
        let q = rng.gen_range(100..=2000);
        let (_, tr) = stable_trace(&map, x, q).unwrap();
        let mean = tr.lambda_bar_e.iter().sum::<f64>() / q as f64;
        let a = mean * rng.gen_range(0.5..1.05);
        let fast = good_in_orbit(&map, x, q, a).unwrap();
        let c = growthgap::cocycle::GOOD_FACTOR * a;
        if fast != brute_good(&tr.lambda_bar_e, c) {
            bad += 1;
        }
        sizes.push(fast.len());
    }
    Line { id: 5, pass: bad == 0, detail: format!("good_in_orbit: 20 orbits, q <= 2000, {bad} mismatches, set sizes {sizes:?}") }
}

fn schedule_identities(s: &BoxSchedule) -> bool {
    let l = s.len();
    let kb2 = s.kappa_bar.times(2);
    let per_step = (0..=l).all(|n| s.kappa[n] + s.kappa_tilde[n] == kb2 && s.beta[n] + s.c[n] == s.beta_bar);
    let cl = s.c[l];
    per_step
        && s.params.m == 1000
        && cl == c_cap()
        && s.r[l] == s.r_bar + cl.times(3)
        && s.kappa[l] == s.kappa_bar - cl
        && s.kappa_tilde[l] == s.kappa_bar + cl
}

fn end_to_end(certified: &mut Vec<HyperbolicityCertificate>) -> Line {
    let saddle = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
    let rs = run_pipeline(&saddle, &PipelineOptions { q: 200, ..Default::default() }).unwrap();
    let saddle_ok = rs.certificate().is_some_and(|c| {
        let eig = matches!(c.eigenvalues, Spectrum::Real { large, small } if (large - 2.0).abs() < 1e-8 && (small - 0.5).abs() < 1e-8);
        c.fixed_point.norm() < 1e-10 && eig && c.degree.abs() == 1 && c.verify().is_ok()
    });

    let std_map = PlanarMap::from_name("standard-map", &[("k", 6.0)]).unwrap();
    let start = Instant::now();
    let rm = run_pipeline(&std_map, &PipelineOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let std_detail = rm.certificate().map(|c| (c.residual, c.eigenvalues.product(), c.return_time));
    let std_ok = secs < 60.0
        && rm.certificate().is_some_and(|c| c.residual < 1e-9 && (c.eigenvalues.product() - 1.0).abs() < 1e-6 && c.verify().is_ok());

    let rot = PlanarMap::from_name("rigid-rotation", &[("eps", 0.1)]).unwrap();
    let rr = run_pipeline(&rot, &PipelineOptions { q: 10_000, ..Default::default() }).unwrap();
    let rot_ok = matches!(rr.outcome, PipelineOutcome::NotFound { .. });

    certified.extend(rs.certificate().cloned());
    certified.extend(rm.certificate().cloned());
    Line {
        id: 6,
        pass: saddle_ok && std_ok && rot_ok,
        detail: format!(
            "end-to-end: linear-saddle(2) {saddle_ok}, standard-map(6) {std_ok} in {secs:.1} s (residual, eigen product, L) = {std_detail:?}, rigid-rotation not found {rot_ok}"
        ),
    }
}

fn schedules(certified: &[HyperbolicityCertificate]) -> Line {
    let ok = certified.iter().map(|c| schedule_identities(&c.paper_schedule)).collect::<Vec<_>>();
    Line {
        id: 7,
        pass: !ok.is_empty() && ok.iter().all(|b| *b),
        detail: format!("schedule constants at M = 1000 on {} certified runs: {ok:?}", ok.len()),
    }
}

fn rigidity() -> Line {
    let mut parts = Vec::new();
    let mut pass = true;
    for eps in [0.01, 0.02, 0.05] {
        let map = PlanarMap::from_name("rigid-rotation", &[("eps", eps)]).unwrap();
        let d = displacement_bound(&map, eps, GridSpec::square(33)).unwrap();
        let fd = free_disc_search(&map, eps, 100_000, 64, 11).unwrap();
        let closed = rigid_rotation_free_measure(eps);
        let within = (fd.sup_measure - closed).abs() <= 0.05 * closed;
        let below = closed > eps || fd.sup_measure <= eps;
        let kac = kac_return_stats(&map, Disc { center: [0.5, 0.0], radius: 0.05 }, 2000, 100_000, 13).unwrap();
        let kac_ok = kac.returned > 0 && kac.kac_product <= 1.05;
        pass &= d.holds && d.margin > 0.0 && within && below && kac_ok;
        parts.push(format!(
            "eps {eps}: margin {:.3}, free {:.5} vs {closed:.5}, kac {:.4}",
            d.margin, fd.sup_measure, kac.kac_product
        ));
    }
    Line { id: 8, pass, detail: format!("rigidity: {}", parts.join("; ")) }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn determinism() -> Line {
    let rot = PlanarMap::from_name("rigid-rotation", &[("eps", 0.3)]).unwrap();
    let saddle = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
    let run = || {
        let fd = free_disc_search(&rot, 0.3, 20_000, 32, 21).unwrap();
        let kac = kac_return_stats(&rot, Disc { center: [0.0, 0.5], radius: 0.1 }, 500, 1000, 22).unwrap();
        let pipe = run_pipeline(&saddle, &PipelineOptions { q: 200, ..Default::default() }).unwrap();
        serde_json::to_string(&(fd, kac, pipe)).unwrap()
    };
    let outs: Vec<String> = [1, 4, 1].into_iter().map(|t| in_pool(t, run)).collect();
    let same = outs.windows(2).all(|w| w[0] == w[1]);
    Line { id: 9, pass: same, detail: format!("determinism: free-disc, kac and pipeline summaries byte-identical across 1/4/1 threads: {same}") }
}

#[test]
fn acceptance() {
    let mut certified = Vec::new();
    let (classified, attainable) = classification();
    let lines = [
        arithmetic(),
        classified,
        pliss(),
        cocycle_identities(),
        good_scan(),
        end_to_end(&mut certified),
        schedules(&certified),
        rigidity(),
        determinism(),
    ];
    for l in &lines {
        emit(l);
    }
    // The golden-mean tail beyond index 30 is about 1.9e-5 (it drops below
    // 1e-6 only past index 37). That line reports FAIL; every other part of
    // it is still required.
    assert!(attainable, "classification");
    let failed: Vec<u32> = lines.iter().filter(|l| !l.pass && l.id != 2).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria {failed:?}");
}
