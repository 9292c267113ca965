//! Randomized suites over the pointwise cone lemmas:
//!
//! - useful: `H ≻ 0`, `A ≻ 0`, `det(H) > tr(A·H)` imply `adj(H) − A ≻ 0`;
//! - convexity of `A ↦ tr(A)/(6 det A)` and `A ↦ 1/det(A)` on `A ≻ 0`;
//! - convexity of the cone `{H ≻ 0, det(H) > tr(A·H)}`.
//!
//! Every suite is deterministic in its seed.

use web_time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::forms::{cone_convexity_probe, cone_margins, convexity_probe, lemma_useful_check, trace_over_det};
use crate::herm::HermForm;
use crate::random::{log_uniform, random_pd};

pub type AdjugateFn = fn(&HermForm) -> HermForm;

/// Spectrum range of `H` in the useful-lemma suite.
pub const USEFUL_SPECTRUM: (f64, f64) = (1e-3, 1e3);
/// Relative slack allowed in the convexity suite.
pub const EK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub samples: usize,
    pub counterexamples: usize,
    /// Useful: smallest `λ_min(adj(H) − A)/‖adj(H)‖`. Convexity: largest
    /// relative slack. Cone: smallest margin over all draws.
    pub worst_margin: f64,
    /// Draws discarded because the hypothesis failed.
    pub rejected: usize,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.counterexamples == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteCounts {
    pub useful: usize,
    pub ek: usize,
    pub rem1: usize,
}

impl Default for SuiteCounts {
    fn default() -> Self {
        Self { useful: 100_000, ek: 10_000, rem1: 10_000 }
    }
}

/// An adjugate that is off by a factor of two, for checking that the
/// harness notices.
pub fn corrupted_adjugate(h: &HermForm) -> HermForm {
    h.adjugate().scale(0.5)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `A ≻ 0` scaled so that `tr(A·H) = u·det(H)` with `u` log-uniform in
/// `[1e−6, 1.5]`; draws with `u ≥ 1` fail the hypothesis.
fn draw_useful<R: Rng>(rng: &mut R) -> (HermForm, HermForm) {
    let (lo, hi) = USEFUL_SPECTRUM;
    let h = random_pd(rng, 3, lo, hi);
    let a0 = random_pd(rng, 3, 1e-2, 1e2);
    let u = log_uniform(rng, 1e-6, 1.5);
    let a = a0.scale(u * h.det() / a0.trace_product(&h));
    (h, a)
}

pub fn useful_suite(samples: usize, seed: u64) -> SuiteReport {
    useful_suite_with(samples, seed, HermForm::adjugate)
}

/// Draws until `samples` instances satisfy the hypothesis.
pub fn useful_suite_with(samples: usize, seed: u64, adj: AdjugateFn) -> SuiteReport {
    let start = Instant::now();
    let mut rng = rng_for(seed, 1);
    let mut counter = 0;
    let mut rejected = 0;
    let mut worst = f64::INFINITY;
    let mut accepted = 0;
    while accepted < samples {
        let (h, a) = draw_useful(&mut rng);
        if !(h.det() - a.trace_product(&h) > 0.0 && h.lambda_min() > 0.0) {
            rejected += 1;
            continue;
        }
        accepted += 1;
        let adj_h = adj(&h);
        worst = worst.min((adj_h - a).lambda_min() / adj_h.norm());
        if !lemma_useful_check(&h, &a, adj) {
            counter += 1;
        }
    }
    SuiteReport {
        name: "useful".into(),
        samples,
        counterexamples: counter,
        worst_margin: worst,
        rejected,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Midpoint convexity of `tr(A)/(6 det A)` and `1/det(A)`.
pub fn ek_suite(samples: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut rng = rng_for(seed, 2);
    let mut counter = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let a1 = random_pd(&mut rng, 3, 1e-2, 1e2);
        let a2 = random_pd(&mut rng, 3, 1e-2, 1e2);
        let (sf, sg) = convexity_probe(&a1, &a2, 0.5).expect("positive definite draws");
        let rf = sf / (0.5 * (trace_over_det(&a1) + trace_over_det(&a2)));
        let rg = sg / (0.5 * (1.0 / a1.det() + 1.0 / a2.det()));
        let r = rf.max(rg);
        worst = worst.max(r);
        if r > EK_TOL {
            counter += 1;
        }
    }
    SuiteReport {
        name: "ek".into(),
        samples,
        counterexamples: counter,
        worst_margin: if samples == 0 { 0.0 } else { worst },
        rejected: 0,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// `H ≻ 0` scaled so that `det(H) − tr(A·H) > 0` with a random, sometimes
/// thin, margin.
fn draw_cone_member<R: Rng>(rng: &mut R, a: &HermForm) -> HermForm {
    let h0 = random_pd(rng, 3, 1e-2, 1e2);
    let excess = 1.0 + log_uniform(rng, 1e-6, 10.0);
    let s = (excess * a.trace_product(&h0) / h0.det()).sqrt();
    h0.scale(s)
}

/// Convex combinations of cone members stay in the cone.
pub fn rem1_suite(samples: usize, seed: u64) -> SuiteReport {
    let start = Instant::now();
    let mut rng = rng_for(seed, 3);
    let mut counter = 0;
    let mut rejected = 0;
    let mut worst = f64::INFINITY;
    let mut accepted = 0;
    while accepted < samples {
        let a = random_pd(&mut rng, 3, 1e-2, 1e2);
        let h1 = draw_cone_member(&mut rng, &a);
        let h2 = draw_cone_member(&mut rng, &a);
        let t: f64 = rng.gen();
        if !cone_margins(&h1, &a).all_positive() || !cone_margins(&h2, &a).all_positive() {
            rejected += 1;
            continue;
        }
        accepted += 1;
        let m = cone_convexity_probe(&h1, &h2, &a, t).expect("endpoints checked");
        worst = worst.min(m.min());
        if !m.all_positive() {
            counter += 1;
        }
    }
    SuiteReport {
        name: "rem1".into(),
        samples,
        counterexamples: counter,
        worst_margin: worst,
        rejected,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(counts: &SuiteCounts, seed: u64, adj: AdjugateFn) -> Vec<SuiteReport> {
    vec![useful_suite_with(counts.useful, seed, adj), ek_suite(counts.ek, seed), rem1_suite(counts.rem1, seed)]
}
