//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `KNOWN_FAILING` are reported but do not fail the run;
//! one of them passing does, so the list cannot go stale.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use noma_core::analytic::{
    closed_form_probabilities, optimal_a2_special, p_eps2_closed, p_eps4_closed, quadrature_probabilities,
    QuadratureOptions, DEFAULT_QUAD_TOL,
};
use noma_core::cli::db_to_linear;
use noma_core::events::{classify_full, classify_reduced, ComparisonOutcome};
use noma_core::montecarlo::{estimate_average_rates, estimate_event_probs, McConfig};
use noma_core::order_stats::{joint_pdf, marginal_cdf_m, marginal_cdf_n, PairSampler, PairingConfig};
use noma_core::quadrature::integrate;
use noma_core::regions::{
    noma_boundary, noma_rate_pair, single_user_rates, tdma_boundary, ChannelPair, PowerSplit, TimeSplit,
};

const SEED: u64 = 42;
const TRIALS: u64 = 1_000_000;
const GRID_DB: [f64; 3] = [20.0, 25.0, 30.0];
const GRID_PAIRS: [(usize, usize); 5] = [(1, 2), (1, 10), (2, 7), (4, 5), (5, 6)];

/// Fig. 5 per-user gap ranges cannot be met; see the project notes.
const KNOWN_FAILING: &[u32] = &[7];

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn mc() -> McConfig {
    McConfig::new(TRIALS, SEED, 8).unwrap()
}

fn random_channel(rng: &mut ChaCha8Rng) -> ChannelPair {
    loop {
        let a = 10f64.powf(rng.random_range(-3.0..5.0));
        let b = 10f64.powf(rng.random_range(-3.0..5.0));
        if let Ok(ch) = ChannelPair::new(a.min(b), a.max(b)) {
            return ch;
        }
    }
}

fn special_case() -> Outcome {
    let want = 1.0 - 2f64.powi(-9);
    let mut worst: f64 = 0.0;
    for db in [0.0, 10.0, 25.0, 40.0, 55.0] {
        let rho = db_to_linear(db);
        let cfg = PairingConfig::new(10, 1, 10, rho).unwrap();
        worst = worst.max((p_eps2_closed(&cfg, optimal_a2_special(rho)).unwrap() - want).abs());
    }
    let rho = db_to_linear(25.0);
    let cfg = PairingConfig::new(10, 1, 10, rho).unwrap();
    let sim = estimate_event_probs(&cfg, optimal_a2_special(rho), 0.5, &mc()).unwrap();
    let se = sim.stderr.unwrap()[1];
    let gap = (sim.p[1] - want).abs();
    outcome(
        worst <= 1e-12 && gap <= 3.0 * se,
        format!("closed max error {worst:.1e}; mc {:.6} +- {se:.1e} at 25 dB", sim.p[1]),
    )
}

fn three_way_agreement() -> Outcome {
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    for db in GRID_DB {
        let rho = db_to_linear(db);
        let a2 = 1.0 / rho.sqrt();
        for (m, n) in GRID_PAIRS {
            let cfg = PairingConfig::new(10, m, n, rho).unwrap();
            let c = closed_form_probabilities(&cfg, a2, DEFAULT_QUAD_TOL).unwrap();
            let (q, _) = quadrature_probabilities(&cfg, a2, 0.5, &QuadratureOptions::with_tol(1e-6)).unwrap();
            let s = estimate_event_probs(&cfg, a2, 0.5, &mc()).unwrap();
            let se = s.stderr.unwrap();
            for e in 0..4 {
                let tol = (3.0 * se[e]).max(1e-3);
                for diff in [c.p[e] - q.p[e], c.p[e] - s.p[e], q.p[e] - s.p[e]] {
                    ok &= diff.abs() <= tol;
                    worst_ratio = worst_ratio.max(diff.abs() / tol);
                }
            }
            let sum_err = (c.total() - 1.0).abs().max((q.total() - 1.0).abs());
            ok &= sum_err <= 1e-9;
            worst_sum = worst_sum.max(sum_err);
        }
    }
    outcome(ok, format!("largest gap / tolerance {worst_ratio:.3}; largest |sum - 1| {worst_sum:.1e}"))
}

fn propositions() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut p1, mut p2, mut disagree, mut ties) = (0u64, 0u64, 0u64, 0u64);
    for _ in 0..1_000_000 {
        let ch = random_channel(&mut rng);
        let (_, r2) = single_user_rates(&ch);
        let (a, b) = (rng.random_range(0.0..r2), rng.random_range(0.0..r2));
        if a != b {
            let (lo, hi) = (a.min(b), a.max(b));
            // Proposition 1 with z = hi > z0 = lo, Proposition 2 with z = lo < z0 = hi
            let sum_noma = noma_boundary(hi, &ch).unwrap() + hi;
            p1 += u64::from(sum_noma <= tdma_boundary(lo, &ch).unwrap() + lo);
            p2 += u64::from(noma_boundary(lo, &ch).unwrap() <= tdma_boundary(hi, &ch).unwrap());
        }
        let power = PowerSplit::noma(rng.random_range(1e-6..=0.5)).unwrap();
        let time = TimeSplit::new(rng.random_range(1e-6..1.0 - 1e-6)).unwrap();
        if ComparisonOutcome::evaluate(&ch, &power, &time).unwrap().has_tie() {
            ties += 1;
            continue;
        }
        disagree += u64::from(classify_full(&ch, &power, &time).unwrap() != classify_reduced(&ch, &power, &time).unwrap());
    }
    outcome(
        p1 == 0 && p2 == 0 && disagree == 0,
        format!("violations: prop1 {p1}, prop2 {p2}; classifier disagreements {disagree} ({ties} ties skipped)"),
    )
}

fn region_geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut endpoint, mut point_f): (f64, f64) = (0.0, 0.0);
    let (mut below, mut convex, mut nonmonotone) = (0u64, 0u64, 0u64);
    let half = PowerSplit::noma(0.5).unwrap();
    for _ in 0..20_000 {
        let ch = random_channel(&mut rng);
        let (x, y) = (ch.x(), ch.y());
        let (r1, r2) = single_user_rates(&ch);
        let f = |z: f64| noma_boundary(z, &ch).unwrap();
        let t = |z: f64| tdma_boundary(z, &ch).unwrap();
        endpoint = endpoint.max((f(0.0) - r1).abs()).max(f(r2).abs()).max((t(0.0) - r1).abs()).max(t(r2).abs());

        let pf = noma_rate_pair(&ch, &half).unwrap();
        let (want_r2, want_r1) = ((1.0 + y / 2.0).log2(), (1.0 + x / (2.0 + x)).log2());
        point_f = point_f.max((pf.r2 - want_r2).abs()).max((pf.r1 - want_r1).abs());

        let z = rng.random_range(0.05..0.95) * r2;
        below += u64::from(f(z) < t(z) - 1e-12);
        let h = 1e-3 * r2;
        convex += u64::from(f(z + h) - 2.0 * f(z) + f(z - h) > 1e-8 * f(z).abs().max(1.0));
        nonmonotone += u64::from(f(z + h) + z + h <= f(z) + z);
    }
    outcome(
        endpoint < 1e-12 && point_f < 1e-10 && below == 0 && convex == 0 && nonmonotone == 0,
        format!(
            "endpoint error {endpoint:.1e}, point F error {point_f:.1e}; below TDMA {below}, convex {convex}, non-monotone sum {nonmonotone}"
        ),
    )
}

/// Joint density of `(u, v) = (e^(-x/rho), e^(-y/rho))` on `0 < v < u < 1`.
fn unit_density(u: f64, v: f64, users: usize, m: usize, n: usize) -> f64 {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let w1 = fact(users) / (fact(m - 1) * fact(n - 1 - m) * fact(users - n));
    w1 * (1.0 - u).powi((m - 1) as i32) * v.powi((users - n) as i32) * (u - v).powi((n - 1 - m) as i32)
}

/// Chi-square p-value of sampled pairs against the density, binned on a
/// grid over the unit triangle; sparse cells are pooled.
fn chi_square_p(cfg: &PairingConfig, samples: usize) -> f64 {
    const K: usize = 20;
    let (users, m, n) = (cfg.users(), cfg.weak(), cfg.strong());
    let w = 1.0 / K as f64;
    let mut expected = vec![0.0; K * K];
    for a in 0..K {
        for b in 0..=a {
            let (u0, v0) = (a as f64 * w, b as f64 * w);
            let inner = |u: f64| {
                let top = (v0 + w).min(u);
                if top <= v0 {
                    return 0.0;
                }
                integrate(|v| unit_density(u, v, users, m, n), v0, top, 1e-10, 1e-14, 500).unwrap().value
            };
            expected[a * K + b] = integrate(inner, u0, u0 + w, 1e-10, 1e-14, 500).unwrap().value * samples as f64;
        }
    }
    let mut observed = vec![0u64; K * K];
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sampler = PairSampler::new(*cfg);
    for _ in 0..samples {
        let ch = sampler.sample(&mut rng);
        let (u, v) = ((-ch.x() / cfg.rho()).exp(), (-ch.y() / cfg.rho()).exp());
        let (a, b) = (((u / w) as usize).min(K - 1), ((v / w) as usize).min(K - 1));
        observed[a * K + b] += 1;
    }
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut pooled_e, mut pooled_o) = (0.0, 0u64);
    for (e, o) in expected.iter().zip(&observed) {
        if *e >= 5.0 {
            stat += (*o as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            pooled_e += e;
            pooled_o += o;
        }
    }
    if pooled_e > 0.0 {
        stat += (pooled_o as f64 - pooled_e).powi(2) / pooled_e;
        bins += 1;
    }
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

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

fn order_statistics() -> Outcome {
    let samples = TRIALS as usize;
    // asymptotic two-sided KS critical value at the 1% level
    let critical = (-0.5 * (0.01f64 / 2.0).ln()).sqrt() / (samples as f64).sqrt();
    let mut ok = true;
    let mut parts = Vec::new();
    for (users, m, n) in [(10, 2, 7), (10, 1, 10), (5, 4, 5)] {
        let cfg = PairingConfig::new(users, m, n, 1.0).unwrap();
        let inner = |x: f64| integrate(|y| joint_pdf(x, y, &cfg).unwrap(), x, x + 60.0, 1e-11, 1e-14, 2000).unwrap().value;
        let mass = integrate(inner, 0.0, 60.0, 1e-9, 1e-12, 2000).unwrap().value;
        let p = chi_square_p(&cfg, samples);

        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
        let mut sampler = PairSampler::new(cfg);
        let (mut xs, mut ys): (Vec<f64>, Vec<f64>) = (0..samples)
            .map(|_| {
                let ch = sampler.sample(&mut rng);
                (ch.x(), ch.y())
            })
            .unzip();
        xs.sort_unstable_by(f64::total_cmp);
        ys.sort_unstable_by(f64::total_cmp);
        let dx = ks_distance(&xs, |t| marginal_cdf_m(t, &cfg).unwrap());
        let dy = ks_distance(&ys, |t| marginal_cdf_n(t, &cfg).unwrap());

        ok &= (mass - 1.0).abs() <= 1e-6 && p > 1e-3 && dx < critical && dy < critical;
        parts.push(format!("({users},{m},{n}) mass-1 {:.1e} chi2 p {p:.3} KS {dx:.5}/{dy:.5}", mass - 1.0));
    }
    outcome(ok, format!("{}; KS critical {critical:.5}", parts.join(", ")))
}

fn figure4_trend() -> Outcome {
    let rho = db_to_linear(25.0);
    let a2 = 1.0 / rho.sqrt();
    let values: Vec<f64> = (2..=10)
        .map(|n| p_eps2_closed(&PairingConfig::new(10, 1, n, rho).unwrap(), a2).unwrap())
        .collect();
    let monotone = values.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        monotone && values[8] > values[0],
        format!("P(E2) for n = 2..10: {}", values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ")),
    )
}

fn figure5_gaps() -> Outcome {
    let gaps = |db: f64| {
        let rho = db_to_linear(db);
        let cfg = PairingConfig::new(10, 1, 10, rho).unwrap();
        let r = estimate_average_rates(&cfg, optimal_a2_special(rho), 0.5, &mc()).unwrap();
        (r.r1_noma - r.r1_tdma, r.r2_noma - r.r2_tdma)
    };
    let (g1, g2) = gaps(55.0);
    let (h1, h2) = gaps(50.0);
    let ranges = (0.5..=1.5).contains(&g1) && (1.5..=2.5).contains(&g2);
    let stable = (g1 - h1).abs() < 0.3 && (g2 - h2).abs() < 0.3;
    outcome(
        ranges && stable,
        format!(
            "55 dB gaps: weak {g1:.3} (want 0.5..1.5), strong {g2:.3} (want 1.5..2.5); 50 dB: {h1:.3}, {h2:.3}; stable {stable}"
        ),
    )
}

fn eps4_adjudication() -> Outcome {
    let mut worst: f64 = 0.0;
    for db in GRID_DB {
        let rho = db_to_linear(db);
        let a2 = 1.0 / rho.sqrt();
        for (m, n) in GRID_PAIRS {
            let cfg = PairingConfig::new(10, m, n, rho).unwrap();
            let closed = p_eps4_closed(&cfg, a2, DEFAULT_QUAD_TOL).unwrap();
            let (q, _) = quadrature_probabilities(&cfg, a2, 0.5, &QuadratureOptions::with_tol(1e-6)).unwrap();
            worst = worst.max((closed - q.p[3]).abs());
        }
    }
    outcome(worst <= 1e-3, format!("largest |closed - quadrature| for P(E4): {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "special-case probability", Duration::from_secs(10), special_case),
        (2, "three-way agreement", Duration::from_secs(300), three_way_agreement),
        (3, "proposition suite", Duration::from_secs(60), propositions),
        (4, "region geometry", Duration::MAX, region_geometry),
        (5, "order-statistics fidelity", Duration::MAX, order_statistics),
        (6, "Fig. 4 trend", Duration::MAX, figure4_trend),
        (7, "Fig. 5 gaps", Duration::from_secs(60), figure5_gaps),
        (8, "P(E4) closed form vs quadrature", Duration::MAX, eps4_adjudication),
    ];
    let mut unexpected = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let passed = result.passed && elapsed <= budget;
        let status = if passed { "PASS" } else { "FAIL" };
        let timing = if budget == Duration::MAX {
            format!("{:.1}s", elapsed.as_secs_f64())
        } else {
            format!("{:.1}s of {}s", elapsed.as_secs_f64(), budget.as_secs())
        };
        let known = KNOWN_FAILING.contains(&id);
        let note = if known { " [known failure]" } else { "" };
        println!("[{status}] criterion {id} {name}: {} ({timing}){note}", result.detail);
        if passed == known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criteria did not match their expected outcome");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
