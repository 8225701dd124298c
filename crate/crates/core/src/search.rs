//! Falsification search for the sharper squared constants `α²` and `dm²`,
//! and sweeps of the gap between them and the proven `β` and `K²`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bounds::{alpha_polya_szego, beta_squared, dm_constant, dm_squared_constant, golden_section_max, SpectralBounds};
use crate::error::{Error, Result};
use crate::hermitian::{optimal_constant_default, CMatrix, HermitianMatrix};
use crate::instances::{from_spectrum, random_spectrum, Instance, SeedTrace, MAX_DIM};
use crate::maps::{random_map, MapKindWeights, PositiveMap};
use crate::means::geometric_mean;
use crate::random::{haar_isometry, haar_unitary, stream, unitary_from_qr};

pub const CHAINS: usize = 8;
/// Relative slack on the conjectured and proven constants.
pub const SEARCH_REL_TOL: f64 = 1e-8;

const INITIAL_STEP: f64 = 0.5;
const MIN_STEP: f64 = 0.05;
const COOLING: f64 = 0.9;
const COOLING_PATIENCE: usize = 50;
const WARMUP_DRAWS: usize = 8;
const REDRAW_MAP_PROB: f64 = 0.05;

const SCALAR_GRID: usize = 40;
const SCALAR_EDGE_GRID: usize = 256;
const SCALAR_GOLDEN_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    ConjecturePs2,
    ConjectureDm2,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::ConjecturePs2, Target::ConjectureDm2];

    pub fn name(self) -> &'static str {
        match self {
            Target::ConjecturePs2 => "conjecture_ps2",
            Target::ConjectureDm2 => "conjecture_dm2",
        }
    }

    /// `α²` or `dm²`.
    pub fn conjectured_constant(self, b: &SpectralBounds) -> f64 {
        match self {
            Target::ConjecturePs2 => alpha_polya_szego(b).powi(2),
            Target::ConjectureDm2 => dm_constant(b).powi(2),
        }
    }

    /// `β` or `K²`.
    pub fn proven_constant(self, b: &SpectralBounds) -> f64 {
        match self {
            Target::ConjecturePs2 => beta_squared(b),
            Target::ConjectureDm2 => dm_squared_constant(b).powi(2),
        }
    }

    /// Least `c` with `L ⪯ c Φ(A♯B)²`, where `L` is `(Φ(A)♯Φ(B))²` or
    /// `((M2m2/M1m1)Φ(A) + Φ(B))²`.
    pub fn ratio(self, inst: &Instance) -> Result<f64> {
        let phi_a = inst.map.apply(&inst.a)?;
        let phi_b = inst.map.apply(&inst.b)?;
        let c = inst.map.apply(&geometric_mean(&inst.a, &inst.b)?)?;
        let l = match self {
            Target::ConjecturePs2 => geometric_mean(&phi_a, &phi_b)?,
            Target::ConjectureDm2 => {
                let b = &inst.bounds;
                phi_a.scale((b.big_m2 * b.m2) / (b.big_m1 * b.m1)).add(&phi_b)?
            }
        };
        optimal_constant_default(&l.square(), &c.square())
    }

    /// The same ratio for a probability vector `w` over scalar atoms `(a_i, b_i)`.
    fn scalar_ratio(self, b: &SpectralBounds, atoms: &[(f64, f64)], w: &[f64]) -> f64 {
        let mean = |g: &dyn Fn(f64, f64) -> f64| atoms.iter().zip(w).map(|(&(x, y), &p)| p * g(x, y)).sum::<f64>();
        let ea = mean(&|x, _| x);
        let eb = mean(&|_, y| y);
        let eab = mean(&|x, y| (x * y).sqrt());
        let l = match self {
            Target::ConjecturePs2 => (ea * eb).sqrt(),
            Target::ConjectureDm2 => (b.big_m2 * b.m2) / (b.big_m1 * b.m1) * ea + eb,
        };
        (l / eab).powi(2)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown target {s:?}, expected conjecture_ps2 or conjecture_dm2")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport {
    pub target: Target,
    pub bounds: SpectralBounds,
    pub dim: usize,
    pub seed: u64,
    pub budget_used: usize,
    /// Largest ratio seen over every visited instance.
    pub best_ratio: f64,
    pub conjectured_constant: f64,
    pub proven_constant: f64,
    pub best_instance: Instance,
    /// `best_ratio` exceeds the conjectured constant.
    pub violated: bool,
    /// `best_ratio` exceeds the proven constant, which signals a numerical bug.
    pub backstop_tripped: bool,
}

impl SearchReport {
    fn new(target: Target, b: &SpectralBounds, dim: usize, seed: u64, budget_used: usize, best: Best) -> Self {
        let conjectured = target.conjectured_constant(b);
        let proven = target.proven_constant(b);
        SearchReport {
            target,
            bounds: *b,
            dim,
            seed,
            budget_used,
            best_ratio: best.ratio,
            conjectured_constant: conjectured,
            proven_constant: proven,
            best_instance: best.instance,
            violated: best.ratio > conjectured * (1.0 + SEARCH_REL_TOL),
            backstop_tripped: best.ratio > proven * (1.0 + SEARCH_REL_TOL),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "target": self.target.name(),
            "bounds": self.bounds,
            "dim": self.dim,
            "seed": self.seed,
            "budget_used": self.budget_used,
            "best_ratio": self.best_ratio,
            "conjectured_constant": self.conjectured_constant,
            "proven_constant": self.proven_constant,
            "ratio_to_conjectured": self.best_ratio / self.conjectured_constant,
            "violated": self.violated,
            "backstop_tripped": self.backstop_tripped,
            "best_instance": self.best_instance.to_json(),
        })
    }
}

#[derive(Clone, Debug)]
struct Best {
    ratio: f64,
    instance: Instance,
}

/// Spectral factors of a search point; every point is feasible by construction.
#[derive(Clone, Debug)]
struct Point {
    a_ev: Vec<f64>,
    ua: CMatrix,
    b_ev: Vec<f64>,
    ub: CMatrix,
    map: PositiveMap,
}

impl Point {
    fn random(n: usize, b: &SpectralBounds, rng: &mut ChaCha8Rng) -> Self {
        let (lo_a, hi_a, lo_b, hi_b) = endpoints(b);
        let a_ev = random_spectrum(n, lo_a, hi_a, rng);
        let ua = haar_unitary(n, rng);
        let b_ev = random_spectrum(n, lo_b, hi_b, rng);
        let ub = haar_unitary(n, rng);
        let map = random_map(n, rng, &MapKindWeights::default());
        Point { a_ev, ua, b_ev, ub, map }
    }

    fn instance(&self, b: &SpectralBounds, trace: SeedTrace) -> Instance {
        Instance {
            a: from_spectrum(&self.a_ev, &self.ua),
            b: from_spectrum(&self.b_ev, &self.ub),
            bounds: *b,
            map: self.map.clone(),
            seed_trace: trace,
        }
    }

    /// Moves one factor: a spectrum, a unitary or the map.
    fn perturb(&self, b: &SpectralBounds, step: f64, rng: &mut ChaCha8Rng) -> Self {
        let (lo_a, hi_a, lo_b, hi_b) = endpoints(b);
        let mut p = self.clone();
        match rng.random_range(0..5) {
            0 => perturb_spectrum(&mut p.a_ev, lo_a, hi_a, step, rng),
            1 => p.ua = blend_unitary(&p.ua, step, rng),
            2 => perturb_spectrum(&mut p.b_ev, lo_b, hi_b, step, rng),
            3 => p.ub = blend_unitary(&p.ub, step, rng),
            _ => p.map = perturb_map(&p.map, self.a_ev.len(), step, rng),
        }
        p
    }
}

fn endpoints(b: &SpectralBounds) -> (f64, f64, f64, f64) {
    (b.m1 * b.m1, b.big_m1 * b.big_m1, b.m2 * b.m2, b.big_m2 * b.big_m2)
}

fn perturb_spectrum(ev: &mut [f64], lo: f64, hi: f64, step: f64, rng: &mut ChaCha8Rng) {
    let i = rng.random_range(0..ev.len());
    let end = if rng.random_bool(0.5) { lo } else { hi };
    let x = match rng.random_range(0..3) {
        0 => end,
        1 => ev[i] + step * (end - ev[i]),
        _ => ev[i] + step * (hi - lo) * rng.sample::<f64, _>(StandardNormal),
    };
    ev[i] = x.clamp(lo, hi);
}

/// `qr((1 − t)U + tW)` for a fresh Haar `W` of the same shape.
fn blend_unitary(u: &CMatrix, step: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let w = haar_isometry(u.nrows(), u.ncols(), rng);
    let t = Complex64::new(step, 0.0);
    let mixed = u * (Complex64::new(1.0, 0.0) - t) + w * t;
    unitary_from_qr(mixed)
}

fn perturb_map(map: &PositiveMap, n: usize, step: f64, rng: &mut ChaCha8Rng) -> PositiveMap {
    if rng.random_bool(REDRAW_MAP_PROB) {
        return random_map(n, rng, &MapKindWeights::default());
    }
    match map {
        PositiveMap::Compression { v } => PositiveMap::Compression { v: blend_unitary(v, step, rng) },
        PositiveMap::Pinching { n, blocks } => {
            let mut labels = vec![0; *n];
            for (p, block) in blocks.iter().enumerate() {
                for &i in block {
                    labels[i] = p;
                }
            }
            labels[rng.random_range(0..*n)] = rng.random_range(0..=blocks.len().min(*n - 1));
            let blocks = (0..*n)
                .map(|p| (0..*n).filter(|&i| labels[i] == p).collect::<Vec<_>>())
                .filter(|b| !b.is_empty())
                .collect();
            PositiveMap::Pinching { n: *n, blocks }
        }
        PositiveMap::UnitaryMixture { weights, unitaries } => {
            let raw: Vec<f64> = weights
                .iter()
                .map(|w| (w * (step * rng.sample::<f64, _>(StandardNormal)).exp()).max(1e-6))
                .collect();
            let total: f64 = raw.iter().sum();
            let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let last = weights.len() - 1;
            weights[last] = 1.0 - weights[..last].iter().sum::<f64>();
            let unitaries = unitaries.iter().map(|u| blend_unitary(u, step, rng)).collect();
            PositiveMap::UnitaryMixture { weights, unitaries }
        }
        other => other.clone(),
    }
}

/// Evaluations assigned to chain `i` of `budget`.
pub fn chain_budget(budget: usize, i: usize) -> usize {
    budget / CHAINS + usize::from(i < budget % CHAINS)
}

/// One hill-climbing chain on its own stream: warm-up draws, then local
/// moves with the step cooled by 0.9 after every 50 non-improving moves and
/// a random restart once the step falls below 0.05. Returns the best
/// instance and its ratio, or `None` for an empty budget.
fn run_chain(target: Target, b: &SpectralBounds, n: usize, budget: usize, seed: u64, chain: usize) -> Option<Best> {
    let trace = SeedTrace { seed, stream: chain as u64 };
    let mut rng = stream(seed, chain as u64);
    let mut best: Option<Best> = None;
    let mut used = 0;
    let evaluate = |p: &Point, best: &mut Option<Best>| -> f64 {
        let inst = p.instance(b, trace);
        let r = target.ratio(&inst).unwrap_or(f64::NEG_INFINITY);
        if best.as_ref().is_none_or(|x| r > x.ratio) {
            *best = Some(Best { ratio: r, instance: inst });
        }
        r
    };

    while used < budget {
        let mut current = Point::random(n, b, &mut rng);
        let mut current_ratio = evaluate(&current, &mut best);
        used += 1;
        for _ in 1..WARMUP_DRAWS {
            if used >= budget {
                break;
            }
            let p = Point::random(n, b, &mut rng);
            let r = evaluate(&p, &mut best);
            used += 1;
            if r > current_ratio {
                current = p;
                current_ratio = r;
            }
        }
        let mut step = INITIAL_STEP;
        let mut stale = 0;
        while used < budget && step >= MIN_STEP {
            let p = current.perturb(b, step, &mut rng);
            let r = evaluate(&p, &mut best);
            used += 1;
            if r > current_ratio {
                current = p;
                current_ratio = r;
                stale = 0;
            } else {
                stale += 1;
                if stale % COOLING_PATIENCE == 0 {
                    step *= COOLING;
                }
            }
        }
    }
    best
}

/// Searches for an instance whose ratio for `target` exceeds the conjectured
/// constant. Chains run in parallel; the best is the maximum ratio with ties
/// going to the lower chain, so the report does not depend on the pool size.
///
/// For `n = 1` the map output is scalar and the search becomes the exhaustive
/// commutative problem of [`scalar_extremal`].
pub fn falsify(target: Target, b: &SpectralBounds, n: usize, budget: usize, seed: u64) -> Result<SearchReport> {
    b.validate()?;
    if budget == 0 {
        return Err(Error::Parse("budget must be at least 1".into()));
    }
    if n == 0 || n > MAX_DIM {
        return Err(Error::Parse(format!("dim must be in 1..={MAX_DIM}, got {n}")));
    }
    if n == 1 {
        let s = scalar_extremal(target, b);
        let best = Best { ratio: s.ratio, instance: s.instance(b, seed) };
        return Ok(SearchReport::new(target, b, 1, seed, s.evaluations, best));
    }
    let chains: Vec<Option<Best>> = (0..CHAINS)
        .into_par_iter()
        .map(|i| run_chain(target, b, n, chain_budget(budget, i), seed, i))
        .collect();
    let best = chains
        .into_iter()
        .flatten()
        .reduce(|acc, x| if x.ratio > acc.ratio { x } else { acc })
        .expect("budget ≥ 1 gives chain 0 at least one evaluation");
    Ok(SearchReport::new(target, b, n, seed, budget, best))
}

/// Best ratio over probability mixtures of the four corner atoms
/// `(a, b) ∈ {m1², M1²} × {m2², M2²}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarExtremum {
    pub ratio: f64,
    pub atoms: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
    pub evaluations: usize,
}

impl ScalarExtremum {
    /// Realizes the mixture as diagonal `A`, `B` and a vector state.
    pub fn instance(&self, b: &SpectralBounds, seed: u64) -> Instance {
        let a: Vec<f64> = self.atoms.iter().map(|x| x.0).collect();
        let bm: Vec<f64> = self.atoms.iter().map(|x| x.1).collect();
        let total: f64 = self.weights.iter().sum();
        let v = CMatrix::from_fn(self.weights.len(), 1, |i, _| Complex64::new((self.weights[i] / total).sqrt(), 0.0));
        let norm = v.norm();
        Instance {
            a: HermitianMatrix::diag(&a),
            b: HermitianMatrix::diag(&bm),
            bounds: *b,
            map: PositiveMap::Compression { v: v / Complex64::new(norm, 0.0) },
            seed_trace: SeedTrace { seed, stream: 0 },
        }
    }
}

/// Exhaustive search over a grid of the weight simplex on the four corners,
/// then golden-section refinement along each of its six edges.
pub fn scalar_extremal(target: Target, b: &SpectralBounds) -> ScalarExtremum {
    let (lo_a, hi_a, lo_b, hi_b) = endpoints(b);
    let atoms = vec![(lo_a, lo_b), (lo_a, hi_b), (hi_a, lo_b), (hi_a, hi_b)];
    let mut evaluations = 0;
    let mut best = (f64::NEG_INFINITY, vec![1.0, 0.0, 0.0, 0.0]);
    let consider = |w: Vec<f64>, best: &mut (f64, Vec<f64>), evaluations: &mut usize| {
        let r = target.scalar_ratio(b, &atoms, &w);
        *evaluations += 1;
        if r > best.0 {
            *best = (r, w);
        }
    };

    let g = SCALAR_GRID;
    for i in 0..=g {
        for j in 0..=g - i {
            for k in 0..=g - i - j {
                let l = g - i - j - k;
                let w = [i, j, k, l].map(|x| x as f64 / g as f64).to_vec();
                consider(w, &mut best, &mut evaluations);
            }
        }
    }

    for p in 0..4 {
        for q in p + 1..4 {
            let edge = |t: f64| {
                let mut w = vec![0.0; 4];
                w[p] = 1.0 - t;
                w[q] = t;
                w
            };
            let ratio = |t: f64| target.scalar_ratio(b, &atoms, &edge(t));
            let mut k_best = 0;
            let mut r_best = f64::NEG_INFINITY;
            for k in 0..=SCALAR_EDGE_GRID {
                let r = ratio(k as f64 / SCALAR_EDGE_GRID as f64);
                evaluations += 1;
                if r > r_best {
                    r_best = r;
                    k_best = k;
                }
            }
            let lo = k_best.saturating_sub(1) as f64 / SCALAR_EDGE_GRID as f64;
            let hi = (k_best + 1).min(SCALAR_EDGE_GRID) as f64 / SCALAR_EDGE_GRID as f64;
            let (t, _) = golden_section_max(ratio, lo, hi, SCALAR_GOLDEN_TOL);
            consider(edge(t), &mut best, &mut evaluations);
        }
    }

    let (ratio, weights) = best;
    ScalarExtremum { ratio, atoms, weights, evaluations }
}

/// One row of the sweep table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub ratio1: f64,
    pub ratio2: f64,
    pub alpha_sq: f64,
    pub beta: f64,
    pub best_ps2: f64,
    pub dm_sq: f64,
    pub k_sq: f64,
    pub best_dm2: f64,
    pub backstop_tripped: bool,
}

pub const SWEEP_HEADER: &str = "ratio1,ratio2,alpha_sq,beta,best_ps2,dm_sq,K_sq,best_dm2";

/// Bounds `(1, √r1, 1, √r2)`, so that `r1 = M1²/m1²` and `r2 = M2²/m2²` are
/// the spectral condition numbers of `A` and `B`.
pub fn bounds_for_ratios(r1: f64, r2: f64) -> Result<SpectralBounds> {
    for r in [r1, r2] {
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::InvalidBounds(format!("sweep ratios must be finite and at least 1, got {r}")));
        }
    }
    SpectralBounds::new(1.0, r1.sqrt(), 1.0, r2.sqrt())
}

/// Every ordered pair of values.
pub fn ratio_grid(values: &[f64]) -> Vec<(f64, f64)> {
    values.iter().flat_map(|&r1| values.iter().map(move |&r2| (r1, r2))).collect()
}

/// Seed of cell `cell` for `target`, derived from the run seed.
fn cell_seed(seed: u64, cell: usize, target: Target) -> u64 {
    let t = match target {
        Target::ConjecturePs2 => 0,
        Target::ConjectureDm2 => 1,
    };
    stream(seed, (2 * cell + t) as u64).random()
}

/// Runs [`falsify`] for both targets on every cell.
pub fn sweep(grid: &[(f64, f64)], n: usize, budget: usize, seed: u64) -> Result<Vec<SweepRow>> {
    grid.iter()
        .enumerate()
        .map(|(cell, &(r1, r2))| {
            let b = bounds_for_ratios(r1, r2)?;
            let ps = falsify(Target::ConjecturePs2, &b, n, budget, cell_seed(seed, cell, Target::ConjecturePs2))?;
            let dm = falsify(Target::ConjectureDm2, &b, n, budget, cell_seed(seed, cell, Target::ConjectureDm2))?;
            Ok(SweepRow {
                ratio1: r1,
                ratio2: r2,
                alpha_sq: ps.conjectured_constant,
                beta: ps.proven_constant,
                best_ps2: ps.best_ratio,
                dm_sq: dm.conjectured_constant,
                k_sq: dm.proven_constant,
                best_dm2: dm.best_ratio,
                backstop_tripped: ps.backstop_tripped || dm.backstop_tripped,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.ratio1, r.ratio2, r.alpha_sq, r.beta, r.best_ps2, r.dm_sq, r.k_sq, r.best_dm2
        );
    }
    out
}
