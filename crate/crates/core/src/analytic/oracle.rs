//! Event probabilities by direct two-dimensional integration of the joint
//! density against the classifier.
//!
//! With `u = e^(-x/rho)`, `v = e^(-y/rho)` the support `0 < x < y` becomes the
//! triangle `0 < v < u < 1` and the density becomes the polynomial
//! `w1 (1-u)^(m-1) v^(M-n) (u-v)^(n-1-m)`. Writing `v = u s` maps the triangle
//! onto the unit square, where the density factors as
//! `w1 (1-u)^(m-1) u^(M-m) * s^(M-n) (1-s)^(n-1-m)`.
//!
//! A tensor Gauss-Legendre rule integrates that polynomial exactly on any
//! rectangle, so cells lying inside one event contribute no quadrature
//! error. Cells whose nodes, corners or centre disagree on the event are
//! split in four until their mass falls below the tolerance, then shared out
//! node by node.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use super::{EventProbabilities, Method};
use crate::error::{Error, Result};
use crate::events::{classify_full, EventId};
use crate::order_stats::PairingConfig;
use crate::quadrature::gauss_legendre_unit;
use crate::regions::{ChannelPair, PowerSplit, TimeSplit};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Mixed cells are refined until their probability mass is below this.
    pub tol: f64,
    /// Cells per side of the initial grid.
    pub base_grid: usize,
    pub max_depth: u32,
    pub cell_budget: u64,
}

impl QuadratureOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            base_grid: 32,
            max_depth: 40,
            cell_budget: 200_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct QuadratureDiagnostics {
    pub cells: u64,
    pub boundary_cells: u64,
    /// Total mass of the cells that were shared out between events; an upper
    /// bound on the misassigned probability.
    pub boundary_mass: f64,
    pub deepest: u32,
}

impl QuadratureDiagnostics {
    fn merge(&mut self, other: &Self) {
        self.cells += other.cells;
        self.boundary_cells += other.boundary_cells;
        self.boundary_mass += other.boundary_mass;
        self.deepest = self.deepest.max(other.deepest);
    }

    pub fn boundary_fraction(&self) -> f64 {
        if self.cells == 0 {
            0.0
        } else {
            self.boundary_cells as f64 / self.cells as f64
        }
    }
}

struct Integrator<'a> {
    rho: f64,
    w1: f64,
    // exponents of (1-u), u, s, (1-s)
    powers: [i32; 4],
    u_rule: (Vec<f64>, Vec<f64>),
    s_rule: (Vec<f64>, Vec<f64>),
    power: PowerSplit,
    time: TimeSplit,
    opts: &'a QuadratureOptions,
    cells: &'a AtomicU64,
}

#[derive(Default)]
struct Tally {
    mass: [f64; 4],
    diag: QuadratureDiagnostics,
}

impl Integrator<'_> {
    fn density(&self, u: f64, s: f64) -> f64 {
        let [a, b, c, d] = self.powers;
        self.w1 * (1.0 - u).powi(a) * u.powi(b) * s.powi(c) * (1.0 - s).powi(d)
    }

    fn classify(&self, u: f64, s: f64) -> Result<EventId> {
        let x = -self.rho * u.ln();
        let y = x - self.rho * s.ln();
        let ch = ChannelPair::new(x, y)?;
        classify_full(&ch, &self.power, &self.time)
    }

    fn cell(&self, u0: f64, u1: f64, s0: f64, s1: f64, depth: u32, tally: &mut Tally) -> Result<()> {
        let seen = self.cells.fetch_add(1, Ordering::Relaxed) + 1;
        if seen > self.opts.cell_budget {
            return Err(Error::NonConvergence(format!(
                "2-D event quadrature exceeded {} cells (deepest level {}, {} boundary cells so far, boundary fraction {:.3})",
                self.opts.cell_budget,
                tally.diag.deepest,
                tally.diag.boundary_cells,
                tally.diag.boundary_fraction()
            )));
        }
        tally.diag.cells += 1;
        tally.diag.deepest = tally.diag.deepest.max(depth);

        let (du, ds) = (u1 - u0, s1 - s0);
        let mut masses = [0.0f64; 4];
        let mut first: Option<EventId> = None;
        let mut mixed = false;
        for (tu, wu) in self.u_rule.0.iter().zip(&self.u_rule.1) {
            let u = u0 + du * tu;
            for (ts, ws) in self.s_rule.0.iter().zip(&self.s_rule.1) {
                let s = s0 + ds * ts;
                let event = self.classify(u, s)?;
                masses[event.index()] += wu * ws * self.density(u, s);
                match first {
                    None => first = Some(event),
                    Some(e) if e != event => mixed = true,
                    _ => {}
                }
            }
        }
        // corners and centre catch boundaries that slip between the nodes
        if !mixed {
            let e0 = first.expect("rule has nodes");
            // edges of the square are pulled just inside; s -> 0 is y -> infinity,
            // where thin event regions can hide
            let inside = |t: f64| t.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            for (tu, ts) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.5, 0.5)] {
                let (u, s) = (inside(u0 + du * tu), inside(s0 + ds * ts));
                // a probe too close to x = y to form a channel pair carries no mass
                if matches!(self.classify(u, s), Ok(e) if e != e0) {
                    mixed = true;
                    break;
                }
            }
        }
        let area = du * ds;
        masses.iter_mut().for_each(|m| *m *= area);
        let cell_mass: f64 = masses.iter().sum();

        if mixed && cell_mass >= self.opts.tol && depth < self.opts.max_depth {
            let (um, sm) = (u0 + 0.5 * du, s0 + 0.5 * ds);
            self.cell(u0, um, s0, sm, depth + 1, tally)?;
            self.cell(um, u1, s0, sm, depth + 1, tally)?;
            self.cell(u0, um, sm, s1, depth + 1, tally)?;
            self.cell(um, u1, sm, s1, depth + 1, tally)?;
            return Ok(());
        }
        if mixed {
            tally.diag.boundary_cells += 1;
            tally.diag.boundary_mass += cell_mass;
        }
        for (acc, m) in tally.mass.iter_mut().zip(masses) {
            *acc += m;
        }
        Ok(())
    }
}

/// All four event probabilities by 2-D quadrature. Any `b2` in `(0, 1)` is
/// supported. The result is deterministic for fixed inputs.
pub fn quadrature_probabilities(
    cfg: &PairingConfig,
    a2: f64,
    b2: f64,
    opts: &QuadratureOptions,
) -> Result<(EventProbabilities, QuadratureDiagnostics)> {
    if !(opts.tol >= 1e-10 && opts.tol < 1.0) {
        return Err(Error::InvalidArgument(format!("quadrature tolerance must lie in [1e-10, 1), got {}", opts.tol)));
    }
    if opts.base_grid == 0 {
        return Err(Error::InvalidArgument("base grid must have at least one cell".into()));
    }
    let power = PowerSplit::noma(a2)?;
    let time = TimeSplit::new(b2)?;
    // surfaces degenerate splits before any work is done
    classify_full(&ChannelPair::new(1.0, 2.0)?, &power, &time)?;

    let (big_m, m, n) = (cfg.users(), cfg.weak(), cfg.strong());
    let u_degree = big_m - 1;
    let s_degree = big_m - 1 - m;
    let cells = AtomicU64::new(0);
    let integrator = Integrator {
        rho: cfg.rho(),
        w1: cfg.ln_w1().exp(),
        powers: [(m - 1) as i32, (big_m - m) as i32, (big_m - n) as i32, (n - 1 - m) as i32],
        u_rule: gauss_legendre_unit(u_degree / 2 + 1),
        s_rule: gauss_legendre_unit(s_degree / 2 + 1),
        power,
        time,
        opts,
        cells: &cells,
    };

    let g = opts.base_grid;
    let h = 1.0 / g as f64;
    let tallies: Vec<Result<Tally>> = (0..g * g)
        .into_par_iter()
        .map(|idx| {
            let (iu, is) = (idx / g, idx % g);
            let mut tally = Tally::default();
            let u1 = if iu + 1 == g { 1.0 } else { (iu + 1) as f64 * h };
            let s1 = if is + 1 == g { 1.0 } else { (is + 1) as f64 * h };
            integrator.cell(iu as f64 * h, u1, is as f64 * h, s1, 0, &mut tally)?;
            Ok(tally)
        })
        .collect();

    let mut p = [0.0f64; 4];
    let mut diag = QuadratureDiagnostics::default();
    for tally in tallies {
        let tally = tally?;
        for (acc, m) in p.iter_mut().zip(tally.mass) {
            *acc += m;
        }
        diag.merge(&tally.diag);
    }
    Ok((
        EventProbabilities {
            p,
            method: Method::Quadrature,
            stderr: None,
            interval: None,
            trials: None,
        },
        diag,
    ))
}

/// Probability of one event by 2-D quadrature with mass tolerance `tol`.
pub fn p_event_quadrature(event: EventId, cfg: &PairingConfig, a2: f64, b2: f64, tol: f64) -> Result<f64> {
    let (probs, _) = quadrature_probabilities(cfg, a2, b2, &QuadratureOptions::with_tol(tol))?;
    Ok(probs.get(event))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::order_stats::joint_pdf;
    use approx::assert_relative_eq;

    #[test]
    fn square_density_is_joint_pdf_times_jacobian() {
        let cfg = PairingConfig::new(10, 2, 7, 50.0).unwrap();
        let opts = QuadratureOptions::with_tol(1e-6);
        let cells = AtomicU64::new(0);
        let integ = Integrator {
            rho: cfg.rho(),
            w1: cfg.ln_w1().exp(),
            powers: [1, 8, 3, 4],
            u_rule: gauss_legendre_unit(2),
            s_rule: gauss_legendre_unit(2),
            power: PowerSplit::noma(0.1).unwrap(),
            time: TimeSplit::naive(),
            opts: &opts,
            cells: &cells,
        };
        for (u, s) in [(0.3, 0.5), (0.9, 0.1), (0.55, 0.95)] {
            let x = -cfg.rho() * f64::ln(u);
            let y = -cfg.rho() * f64::ln(u * s);
            let jac = cfg.rho() * cfg.rho() / (u * s);
            assert_relative_eq!(integ.density(u, s), joint_pdf(x, y, &cfg).unwrap() * jac, max_relative = 1e-10);
        }
    }

    #[test]
    fn threshold_event_matches_marginals() {
        // For b2 = 1/2, E2 = {x < w2 < y}; its mass is
        // P(x < w2) - P(y < w2) by the order of x and y.
        use crate::order_stats::{marginal_cdf_m, marginal_cdf_n};
        let rho = 10f64.powf(2.5);
        let a2 = 1.0 / rho.sqrt();
        let w2 = (1.0 - 2.0 * a2) / (a2 * a2);
        let cfg = PairingConfig::new(10, 2, 7, rho).unwrap();
        let expected = marginal_cdf_m(w2, &cfg).unwrap() - marginal_cdf_n(w2, &cfg).unwrap();
        let (probs, diag) = quadrature_probabilities(&cfg, a2, 0.5, &QuadratureOptions::with_tol(1e-7)).unwrap();
        assert!((probs.p[1] - expected).abs() < 1e-5, "{} vs {expected}, {diag:?}", probs.p[1]);
        assert!((probs.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn finds_event_region_at_large_y() {
        // for n = M the E4 mass sits at y of several thousand, s < 1e-4
        let rho = 10f64.powf(2.5);
        let a2 = 1.0 / rho.sqrt();
        let cfg = PairingConfig::new(10, 1, 10, rho).unwrap();
        let closed = super::super::closed_form_probabilities(&cfg, a2, 1e-10).unwrap();
        let (probs, _) = quadrature_probabilities(&cfg, a2, 0.5, &QuadratureOptions::with_tol(1e-7)).unwrap();
        for e in 0..4 {
            assert!((probs.p[e] - closed.p[e]).abs() < 2e-6, "E{}: {} vs {}", e + 1, probs.p[e], closed.p[e]);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = PairingConfig::new(4, 1, 3, 10.0).unwrap();
        let opts = QuadratureOptions::with_tol(1e-6);
        assert!(matches!(quadrature_probabilities(&cfg, 0.2, 1.0, &opts), Err(Error::DegenerateSplit(_))));
        assert!(quadrature_probabilities(&cfg, 0.0, 0.5, &opts).is_err());
        assert!(quadrature_probabilities(&cfg, 0.2, 0.5, &QuadratureOptions::with_tol(1e-12)).is_err());
    }

    #[test]
    fn budget_exhaustion_reports_diagnostics() {
        let cfg = PairingConfig::new(4, 1, 3, 10.0).unwrap();
        let opts = QuadratureOptions {
            cell_budget: 100,
            ..QuadratureOptions::with_tol(1e-9)
        };
        match quadrature_probabilities(&cfg, 0.2, 0.5, &opts) {
            Err(Error::NonConvergence(msg)) => assert!(msg.contains("boundary"), "{msg}"),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn deterministic() {
        let cfg = PairingConfig::new(6, 2, 5, 100.0).unwrap();
        let opts = QuadratureOptions::with_tol(1e-6);
        let a = quadrature_probabilities(&cfg, 0.1, 0.4, &opts).unwrap();
        let b = quadrature_probabilities(&cfg, 0.1, 0.4, &opts).unwrap();
        assert_eq!(a, b);
    }
}
