//! Built-in consistency checks behind `noma validate`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Suite;
use crate::analytic::{
    closed_form_probabilities, optimal_a2_special, p_eps2_closed, p_eps2_special, quadrature_probabilities,
    QuadratureOptions, DEFAULT_QUAD_TOL,
};
use crate::events::{classify_full, classify_reduced, epsilon2_threshold, w2_threshold, EventId};
use crate::montecarlo::{estimate_event_probs, McConfig};
use crate::order_stats::{joint_pdf, marginal_cdf_m, marginal_cdf_n, PairSampler, PairingConfig};
use crate::quadrature::integrate;
use crate::regions::{
    noma_boundary, noma_rate_pair, region_boundary_samples, single_user_rates, tdma_boundary, ChannelPair, PowerSplit,
    RegionKind, SegmentBreakpoints, TimeSplit,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: &'static str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        suite,
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn failed(suite: &'static str, name: impl Into<String>, err: impl std::fmt::Display) -> Check {
    check(suite, name, false, format!("error: {err}"))
}

pub fn run_suite(suite: Suite, seed: u64, trials: u64) -> Vec<Check> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Propositions | Suite::All) {
        out.extend(propositions(seed));
    }
    if matches!(suite, Suite::Regions | Suite::All) {
        out.extend(regions());
    }
    if matches!(suite, Suite::Orderstats | Suite::All) {
        out.extend(orderstats(seed, trials));
    }
    if matches!(suite, Suite::Probabilities | Suite::All) {
        out.extend(probabilities(seed, trials));
    }
    out
}

/// Random channel pair with SNRs spread over several decades.
fn random_channel(rng: &mut ChaCha8Rng) -> ChannelPair {
    loop {
        let a = 10f64.powf(rng.random_range(-3.0..5.0));
        let b = 10f64.powf(rng.random_range(-3.0..5.0));
        if let Ok(ch) = ChannelPair::new(a.min(b), a.max(b)) {
            return ch;
        }
    }
}

const PROPOSITION_SAMPLES: usize = 200_000;

fn propositions(seed: u64) -> Vec<Check> {
    const S: &str = "propositions";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatched = 0usize;
    let mut threshold_mismatch = 0usize;
    let mut below_tdma = 0usize;
    let mut errors = 0usize;
    for _ in 0..PROPOSITION_SAMPLES {
        let ch = random_channel(&mut rng);
        let power = match PowerSplit::noma(rng.random_range(1e-6..=0.5)) {
            Ok(p) => p,
            Err(_) => continue,
        };
        let time = match TimeSplit::new(rng.random_range(1e-6..1.0 - 1e-6)) {
            Ok(t) => t,
            Err(_) => continue,
        };
        match (classify_full(&ch, &power, &time), classify_reduced(&ch, &power, &time)) {
            (Ok(a), Ok(b)) => mismatched += usize::from(a != b),
            _ => errors += 1,
        }
        let half = TimeSplit::naive();
        let w2 = w2_threshold(power.a2());
        let near = (ch.x() - w2).abs() < 1e-9 * w2.max(1.0) || (ch.y() - w2).abs() < 1e-9 * w2.max(1.0);
        if !near {
            match (classify_full(&ch, &power, &half), epsilon2_threshold(&ch, &power)) {
                (Ok(e), Ok(t)) => threshold_mismatch += usize::from((e == EventId::E2) != t),
                _ => errors += 1,
            }
        }
        let (_, r2_star) = single_user_rates(&ch);
        let z = rng.random_range(0.0..=r2_star);
        match (noma_boundary(z, &ch), tdma_boundary(z, &ch)) {
            (Ok(n), Ok(t)) => below_tdma += usize::from(n < t - 1e-12),
            _ => errors += 1,
        }
    }
    vec![
        check(S, "full_vs_reduced", mismatched == 0 && errors == 0, format!("{mismatched} mismatches, {errors} errors in {PROPOSITION_SAMPLES} samples")),
        check(S, "e2_threshold", threshold_mismatch == 0, format!("{threshold_mismatch} mismatches")),
        check(S, "noma_dominates_tdma", below_tdma == 0, format!("{below_tdma} boundary points below TDMA")),
    ]
}

fn regions() -> Vec<Check> {
    const S: &str = "regions";
    let mut out = Vec::new();
    for (x, y) in [(0.5, 2.0), (3.0, 10.0), (10.0, 1000.0), (1e-3, 1e4)] {
        let ch = match ChannelPair::new(x, y) {
            Ok(c) => c,
            Err(e) => {
                out.push(failed(S, format!("channel_{x}_{y}"), e));
                continue;
            }
        };
        let (r1, r2) = single_user_rates(&ch);
        // point F: the NOMA arc at a2 = 1/2
        let f = noma_rate_pair(&ch, &PowerSplit::noma(0.5).expect("valid split"));
        let want = ((1.0 + y / 2.0).log2(), (1.0 + x / (2.0 + x)).log2());
        match f {
            Ok(f) => {
                let err = (f.r2 - want.0).abs().max((f.r1 - want.1).abs());
                out.push(check(S, format!("point_f_x{x}_y{y}"), err < 1e-10, format!("max error {err:e}")));
            }
            Err(e) => out.push(failed(S, format!("point_f_x{x}_y{y}"), e)),
        }
        let ends = (noma_boundary(0.0, &ch), noma_boundary(r2, &ch), tdma_boundary(0.0, &ch), tdma_boundary(r2, &ch));
        match ends {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => {
                let err = (a - r1).abs().max(b.abs()).max((c - r1).abs()).max(d.abs());
                out.push(check(S, format!("endpoints_x{x}_y{y}"), err < 1e-12, format!("max error {err:e}")));
            }
            _ => out.push(check(S, format!("endpoints_x{x}_y{y}"), false, "boundary evaluation failed")),
        }
        match region_boundary_samples(RegionKind::Capacity, &ch, 401) {
            Ok(pts) => {
                let mut worst: f64 = 0.0;
                for w in pts.windows(3) {
                    // concave: the middle point lies on or above the chord
                    let t = (w[1].r2 - w[0].r2) / (w[2].r2 - w[0].r2);
                    let chord = w[0].r1 + t * (w[2].r1 - w[0].r1);
                    worst = worst.max(chord - w[1].r1);
                }
                out.push(check(S, format!("concave_x{x}_y{y}"), worst < 1e-12, format!("max chord excess {worst:e}")));
            }
            Err(e) => out.push(failed(S, format!("concave_x{x}_y{y}"), e)),
        }
        let split = PowerSplit::noma(0.2).expect("valid split");
        match SegmentBreakpoints::new(&ch, &split) {
            Ok(bp) => {
                let ok = 0.0 <= bp.b && bp.b <= bp.c && bp.c <= bp.d && bp.d <= 1.0;
                out.push(check(S, format!("breakpoints_x{x}_y{y}"), ok, format!("b={} c={} d={}", bp.b, bp.c, bp.d)));
            }
            Err(e) => out.push(failed(S, format!("breakpoints_x{x}_y{y}"), e)),
        }
    }
    out
}

/// Kolmogorov-Smirnov distance between sorted samples and a CDF.
fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn orderstats(seed: u64, trials: u64) -> Vec<Check> {
    const S: &str = "orderstats";
    let mut out = Vec::new();
    let samples = trials.clamp(1000, 200_000) as usize;
    let configs = [(10, 2, 7), (10, 1, 10), (5, 4, 5)];
    // asymptotic KS critical value, family level 1% over all tests (Bonferroni)
    let alpha = 0.01 / (2 * configs.len()) as f64;
    let critical = (-0.5 * (alpha / 2.0).ln()).sqrt() / (samples as f64).sqrt();
    for (users, m, n) in configs {
        let cfg = PairingConfig::new(users, m, n, 1.0).expect("valid pairing");
        let tag = format!("M{users}_m{m}_n{n}");
        let inner = |x: f64| {
            integrate(|y| joint_pdf(x, y, &cfg).unwrap_or(f64::NAN), x, x + 60.0, 1e-11, 1e-14, 2000)
                .map(|r| r.value)
                .unwrap_or(f64::NAN)
        };
        match integrate(inner, 0.0, 60.0, 1e-9, 1e-12, 2000) {
            Ok(total) => {
                let err = (total.value - 1.0).abs();
                out.push(check(S, format!("pdf_mass_{tag}"), err < 1e-6, format!("mass {}", total.value)));
            }
            Err(e) => out.push(failed(S, format!("pdf_mass_{tag}"), e)),
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sampler = PairSampler::new(cfg);
        let (mut xs, mut ys): (Vec<f64>, Vec<f64>) = (0..samples)
            .map(|_| {
                let ch = sampler.sample(&mut rng);
                (ch.x(), ch.y())
            })
            .unzip();
        xs.sort_unstable_by(f64::total_cmp);
        ys.sort_unstable_by(f64::total_cmp);
        let dx = ks_distance(&xs, |t| marginal_cdf_m(t, &cfg).unwrap_or(f64::NAN));
        let dy = ks_distance(&ys, |t| marginal_cdf_n(t, &cfg).unwrap_or(f64::NAN));
        out.push(check(S, format!("ks_weak_{tag}"), dx < critical, format!("D={dx:.5} critical={critical:.5}")));
        out.push(check(S, format!("ks_strong_{tag}"), dy < critical, format!("D={dy:.5} critical={critical:.5}")));
    }
    out
}

fn probabilities(seed: u64, trials: u64) -> Vec<Check> {
    const S: &str = "probabilities";
    let mut out = Vec::new();
    for db in [10.0, 25.0, 40.0] {
        let rho = super::db_to_linear(db);
        let a2 = optimal_a2_special(rho);
        let d = (-w2_threshold(a2) / rho).exp();
        let cfg = PairingConfig::new(10, 1, 10, rho).expect("valid pairing");
        match p_eps2_closed(&cfg, a2) {
            Ok(p) => {
                let want = p_eps2_special(10, d);
                let err = (p - want).abs();
                out.push(check(S, format!("special_case_{db}db"), err < 1e-12, format!("series {p}, direct {want}")));
            }
            Err(e) => out.push(failed(S, format!("special_case_{db}db"), e)),
        }
    }
    let mc = match McConfig::new(trials, seed, 8) {
        Ok(mc) => mc,
        Err(e) => {
            out.push(failed(S, "mc_config", e));
            return out;
        }
    };
    for db in [20.0, 25.0, 30.0] {
        let rho = super::db_to_linear(db);
        let a2 = 1.0 / rho.sqrt();
        for (m, n) in [(1, 2), (1, 10), (2, 7), (4, 5), (5, 6)] {
            let tag = format!("m{m}_n{n}_{db}db");
            let cfg = PairingConfig::new(10, m, n, rho).expect("valid pairing");
            let closed = closed_form_probabilities(&cfg, a2, DEFAULT_QUAD_TOL);
            let quad = quadrature_probabilities(&cfg, a2, 0.5, &QuadratureOptions::with_tol(1e-6)).map(|r| r.0);
            let sim = estimate_event_probs(&cfg, a2, 0.5, &mc);
            match (closed, quad, sim) {
                (Ok(c), Ok(q), Ok(s)) => {
                    let se = s.stderr.unwrap_or([0.0; 4]);
                    let mut worst: f64 = 0.0;
                    let mut ok = (c.total() - 1.0).abs() < 1e-9 && (q.total() - 1.0).abs() < 1e-9;
                    for e in 0..4 {
                        let tol = (3.0 * se[e]).max(1e-3);
                        for diff in [c.p[e] - q.p[e], c.p[e] - s.p[e], q.p[e] - s.p[e]] {
                            ok &= diff.abs() <= tol;
                            worst = worst.max(diff.abs());
                        }
                    }
                    out.push(check(S, format!("agreement_{tag}"), ok, format!("closed {:?}, largest gap {worst:.2e}", c.p)));
                }
                (c, q, s) => {
                    let msg = [c.err(), q.err(), s.err()].into_iter().flatten().map(|e| e.to_string()).collect::<Vec<_>>();
                    out.push(check(S, format!("agreement_{tag}"), false, msg.join("; ")));
                }
            }
        }
    }
    out
}
