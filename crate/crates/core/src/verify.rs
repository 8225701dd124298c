//! One checker per inequality. Each produces an [`InequalityReport`] carrying
//! the Loewner margin of `cR − L`, the theorem constant `c` and the least
//! constant the instance actually needs.

use std::cell::{OnceCell, RefCell};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    alpha_general, alpha_polya_szego, beta_general, beta_squared, dm_constant, dm_squared_constant, gruss_bound,
    kantorovich_factor, SpectralBounds,
};
use crate::error::{Error, Result};
use crate::hermitian::{
    operator_norm, optimal_constant_default, optimal_constant_eig, positivity_floor, HermitianMatrix, DEFAULT_ORDER_TOL,
};
use crate::instances::{random_bounds, random_instance, random_ordered_pair, Instance, OrderedPair, SeedTrace};
use crate::maps::MapKindWeights;
use crate::means::{geometric_mean, MeanSpec};
use crate::random::stream;

/// Relative residual allowed by the `(A♯B)⁻¹ = A⁻¹♯B⁻¹` equality check.
pub const INVERSE_SHARP_REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InstanceId {
    pub seed: u64,
    pub stream: u64,
    pub dim: usize,
}

impl InstanceId {
    pub fn of(inst: &Instance) -> Self {
        InstanceId { seed: inst.seed_trace.seed, stream: inst.seed_trace.stream, dim: inst.dim() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityReport {
    pub check_name: String,
    pub holds: bool,
    /// `λ_min(cR − L)`.
    pub margin: f64,
    pub tolerance: f64,
    pub theorem_constant: f64,
    /// Least `c'` with `L ⪯ c'R`.
    pub optimal_constant: f64,
    pub slack: f64,
    pub instance_id: InstanceId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sub_reports: Vec<InequalityReport>,
}

impl InequalityReport {
    /// The main inequality and every sub-report hold.
    pub fn passed(&self) -> bool {
        self.holds && self.sub_reports.iter().all(InequalityReport::passed)
    }

    /// This report followed by its sub-reports, depth first.
    pub fn flatten(&self) -> Vec<&InequalityReport> {
        let mut out = vec![self];
        for s in &self.sub_reports {
            out.extend(s.flatten());
        }
        out
    }
}

fn order_report(
    name: impl Into<String>,
    l: &HermitianMatrix,
    r: &HermitianMatrix,
    c: f64,
    tol_rel: f64,
    id: InstanceId,
) -> Result<InequalityReport> {
    let r_eig = r.eigh()?;
    let margin = r.scale(c).sub(l)?.lambda_min()?;
    let tolerance = tol_rel * (l.norm()? + c.abs() * r_eig.norm()).max(1.0);
    let optimal = optimal_constant_eig(l, &r_eig, positivity_floor(r_eig.lambda_max()))?;
    Ok(InequalityReport {
        check_name: name.into(),
        holds: margin >= -tolerance,
        margin,
        tolerance,
        theorem_constant: c,
        optimal_constant: optimal,
        slack: c - optimal,
        instance_id: id,
        diagnostic: None,
        sub_reports: Vec::new(),
    })
}

/// `L ⪯ cI` for a possibly indefinite `L`; the optimal constant is `λ_max(L)`.
fn upper_bound_report(
    name: impl Into<String>,
    l: &HermitianMatrix,
    c: f64,
    tol_rel: f64,
    id: InstanceId,
) -> Result<InequalityReport> {
    let ev = l.eigenvalues()?;
    let (bottom, top) = (ev[0], ev[ev.len() - 1]);
    let margin = HermitianMatrix::scalar(l.dim(), c).sub(l)?.lambda_min()?;
    let tolerance = tol_rel * (bottom.abs().max(top.abs()) + c.abs()).max(1.0);
    Ok(InequalityReport {
        check_name: name.into(),
        holds: margin >= -tolerance,
        margin,
        tolerance,
        theorem_constant: c,
        optimal_constant: top,
        slack: c - top,
        instance_id: id,
        diagnostic: None,
        sub_reports: Vec::new(),
    })
}

/// `(M2m2)/(M1m1)`, the weight on `Φ(A)` in the Diaz–Metcalf inequalities.
fn dm_weight(b: &SpectralBounds) -> f64 {
    (b.big_m2 * b.m2) / (b.big_m1 * b.m1)
}

fn cached<'s>(cell: &'s OnceCell<HermitianMatrix>, f: impl FnOnce() -> Result<HermitianMatrix>) -> Result<&'s HermitianMatrix> {
    if let Some(v) = cell.get() {
        return Ok(v);
    }
    let v = f()?;
    Ok(cell.get_or_init(|| v))
}

/// `Φ(AσB)`, `Φ(A)σΦ(B)` and the constant `α_f` for one mean.
struct MeanImages {
    phi_of_mean: HermitianMatrix,
    mean_of_phi: HermitianMatrix,
    alpha: f64,
}

/// Lazily computed images of one instance, shared by the checks run on it.
struct Workspace<'a> {
    inst: &'a Instance,
    phi_a: OnceCell<HermitianMatrix>,
    phi_b: OnceCell<HermitianMatrix>,
    sharp: OnceCell<HermitianMatrix>,
    c: OnceCell<HermitianMatrix>,
    d: OnceCell<HermitianMatrix>,
    means: RefCell<HashMap<String, Rc<MeanImages>>>,
}

impl<'a> Workspace<'a> {
    fn new(inst: &'a Instance) -> Self {
        Workspace {
            inst,
            phi_a: OnceCell::new(),
            phi_b: OnceCell::new(),
            sharp: OnceCell::new(),
            c: OnceCell::new(),
            d: OnceCell::new(),
            means: RefCell::new(HashMap::new()),
        }
    }

    fn id(&self) -> InstanceId {
        InstanceId::of(self.inst)
    }

    fn phi_a(&self) -> Result<&HermitianMatrix> {
        cached(&self.phi_a, || self.inst.map.apply(&self.inst.a))
    }

    fn phi_b(&self) -> Result<&HermitianMatrix> {
        cached(&self.phi_b, || self.inst.map.apply(&self.inst.b))
    }

    /// `A♯B`
    fn sharp(&self) -> Result<&HermitianMatrix> {
        cached(&self.sharp, || geometric_mean(&self.inst.a, &self.inst.b))
    }

    /// `Φ(A♯B)`
    fn c(&self) -> Result<&HermitianMatrix> {
        cached(&self.c, || self.inst.map.apply(self.sharp()?))
    }

    /// `Φ(A)♯Φ(B)`
    fn d(&self) -> Result<&HermitianMatrix> {
        cached(&self.d, || geometric_mean(self.phi_a()?, self.phi_b()?))
    }

    fn mean(&self, mean: &MeanSpec) -> Result<Rc<MeanImages>> {
        let key = mean.label();
        if let Some(m) = self.means.borrow().get(&key) {
            return Ok(Rc::clone(m));
        }
        let images = Rc::new(MeanImages {
            phi_of_mean: self.inst.map.apply(&mean.apply(&self.inst.a, &self.inst.b)?)?,
            mean_of_phi: mean.apply(self.phi_a()?, self.phi_b()?)?,
            alpha: alpha_general(&mean.representing_function(), &self.inst.bounds)?,
        });
        self.means.borrow_mut().insert(key, Rc::clone(&images));
        Ok(images)
    }
}

/// `Φ(AσB) ⪯ Φ(A)σΦ(B)`.
pub fn check_ando(inst: &Instance, mean: &MeanSpec, tol_rel: f64) -> Result<InequalityReport> {
    ando_in(&Workspace::new(inst), mean, tol_rel)
}

fn ando_in(ws: &Workspace, mean: &MeanSpec, tol_rel: f64) -> Result<InequalityReport> {
    let m = ws.mean(mean)?;
    order_report(format!("ando[{}]", mean.label()), &m.phi_of_mean, &m.mean_of_phi, 1.0, tol_rel, ws.id())
}

/// `Φ(A)♯Φ(B) ⪯ α Φ(A♯B)`.
pub fn check_polya_szego(inst: &Instance, tol_rel: f64) -> Result<InequalityReport> {
    polya_szego_in(&Workspace::new(inst), tol_rel)
}

fn polya_szego_in(ws: &Workspace, tol_rel: f64) -> Result<InequalityReport> {
    order_report("polya_szego", ws.d()?, ws.c()?, alpha_polya_szego(&ws.inst.bounds), tol_rel, ws.id())
}

/// `(Φ(A)♯Φ(B))² ⪯ β Φ(A♯B)²`, with the weaker `α⁴` bound as a sub-report and
/// `‖DC⁻¹‖²` recorded as a diagnostic.
pub fn check_squared_ps(inst: &Instance, tol_rel: f64) -> Result<InequalityReport> {
    squared_ps_in(&Workspace::new(inst), tol_rel)
}

fn squared_ps_in(ws: &Workspace, tol_rel: f64) -> Result<InequalityReport> {
    let id = ws.id();
    let (d, c) = (ws.d()?, ws.c()?);
    let (l, r) = (d.square(), c.square());
    let b = &ws.inst.bounds;
    let mut report = order_report("squared_ps", &l, &r, beta_squared(b), tol_rel, id)?;
    let alpha = alpha_polya_szego(b);
    report
        .sub_reports
        .push(order_report("squared_ps.alpha4", &l, &r, alpha.powi(4), tol_rel, id)?);
    let dc_inv = d.as_matrix() * c.inverse()?.as_matrix();
    let norm = operator_norm(&dc_inv)?;
    report.diagnostic = Some(Diagnostic { name: "norm_dc_inv_sq".into(), value: norm * norm });
    Ok(report)
}

/// `Φ(A)σΦ(B) ⪯ α_f Φ(AσB)` with `α_f` from the chord maximization.
pub fn check_general_mean(inst: &Instance, mean: &MeanSpec, tol_rel: f64) -> Result<InequalityReport> {
    general_mean_in(&Workspace::new(inst), mean, tol_rel)
}

fn general_mean_in(ws: &Workspace, mean: &MeanSpec, tol_rel: f64) -> Result<InequalityReport> {
    let m = ws.mean(mean)?;
    order_report(format!("general_mean[{}]", mean.label()), &m.mean_of_phi, &m.phi_of_mean, m.alpha, tol_rel, ws.id())
}

/// `(Φ(A)σΦ(B))² ⪯ β_f Φ(AσB)²`.
pub fn check_general_squared(inst: &Instance, mean: &MeanSpec, tol_rel: f64) -> Result<InequalityReport> {
    general_squared_in(&Workspace::new(inst), mean, tol_rel)
}

fn general_squared_in(ws: &Workspace, mean: &MeanSpec, tol_rel: f64) -> Result<InequalityReport> {
    let m = ws.mean(mean)?;
    let beta = beta_general(&mean.representing_function(), &ws.inst.bounds, m.alpha)?;
    let (l, r) = (m.mean_of_phi.square(), m.phi_of_mean.square());
    order_report(format!("general_squared[{}]", mean.label()), &l, &r, beta, tol_rel, ws.id())
}

/// `(Φ(A)♯Φ(B))² − Φ(A♯B)² ⪯ (β − 1)M1²M2²`.
pub fn check_gruss(inst: &Instance, tol_rel: f64) -> Result<InequalityReport> {
    gruss_in(&Workspace::new(inst), tol_rel)
}

fn gruss_in(ws: &Workspace, tol_rel: f64) -> Result<InequalityReport> {
    let l = ws.d()?.square().sub(&ws.c()?.square())?;
    upper_bound_report("gruss", &l, gruss_bound(&ws.inst.bounds), tol_rel, ws.id())
}

/// `(M2m2/M1m1)Φ(A) + Φ(B) ⪯ (M2/m1 + m2/M1) Φ(A♯B)`.
pub fn check_dm(inst: &Instance, tol_rel: f64) -> Result<InequalityReport> {
    dm_in(&Workspace::new(inst), tol_rel)
}

fn dm_in(ws: &Workspace, tol_rel: f64) -> Result<InequalityReport> {
    let b = &ws.inst.bounds;
    let l = ws.phi_a()?.scale(dm_weight(b)).add(ws.phi_b()?)?;
    order_report("dm", &l, ws.c()?, dm_constant(b), tol_rel, ws.id())
}

/// `((M2m2/M1m1)Φ(A) + Φ(B))² ⪯ K² Φ(A♯B)²`, with the three intermediate
/// inequalities of its derivation as sub-reports:
///
/// * `dm_squared.ff`: `M2m2m1M1 Φ(A⁻¹) + kΦ(A) ⪯ k(M1² + m1²)`
/// * `dm_squared.gg`: `m2²M2² Φ(B⁻¹) + Φ(B) ⪯ M2² + m2²`
/// * `dm_squared.acc`: `2√(M2M1m1m2) M2m2 Φ(A♯B)⁻¹ + Φ(B) + kΦ(A) ⪯ k(M1² + m1²) + M2² + m2²`
///
/// where `k = M2m2/(M1m1)`.
pub fn check_dm_squared(inst: &Instance, tol_rel: f64) -> Result<InequalityReport> {
    dm_squared_in(&Workspace::new(inst), tol_rel)
}

fn dm_squared_in(ws: &Workspace, tol_rel: f64) -> Result<InequalityReport> {
    let id = ws.id();
    let inst = ws.inst;
    let b = &inst.bounds;
    let (phi_a, phi_b, c) = (ws.phi_a()?, ws.phi_b()?, ws.c()?);
    let k = dm_weight(b);
    let lin = phi_a.scale(k).add(phi_b)?;
    let big_k = dm_squared_constant(b);
    let mut report = order_report("dm_squared", &lin.square(), &c.square(), big_k * big_k, tol_rel, id)?;

    let (m1, big1, m2, big2) = (b.m1, b.big_m1, b.m2, b.big_m2);
    let phi_a_inv = inst.map.apply(&inst.a.inverse()?)?;
    let ff_l = phi_a_inv.scale(big2 * m2 * m1 * big1).add(&phi_a.scale(k))?;
    let ff_c = k * (big1 * big1 + m1 * m1);
    report.sub_reports.push(upper_bound_report("dm_squared.ff", &ff_l, ff_c, tol_rel, id)?);

    let phi_b_inv = inst.map.apply(&inst.b.inverse()?)?;
    let gg_l = phi_b_inv.scale(m2 * m2 * big2 * big2).add(phi_b)?;
    let gg_c = big2 * big2 + m2 * m2;
    report.sub_reports.push(upper_bound_report("dm_squared.gg", &gg_l, gg_c, tol_rel, id)?);

    let weight = 2.0 * (big2 * big1 * m1 * m2).sqrt() * big2 * m2;
    let acc_l = c.inverse()?.scale(weight).add(&lin)?;
    report.sub_reports.push(upper_bound_report("dm_squared.acc", &acc_l, ff_c + gg_c, tol_rel, id)?);
    Ok(report)
}

/// `A² ⪯ ((M + m)²/4Mm) B²` for `m ≤ A ≤ M`, `A ⪯ B`.
pub fn check_fujii_squaring(pair: &OrderedPair, tol_rel: f64, id: InstanceId) -> Result<InequalityReport> {
    order_report("fujii_squaring", &pair.a.square(), &pair.b.square(), kantorovich_factor(pair.m, pair.big_m), tol_rel, id)
}

/// `Φ(A)⁻¹ ⪯ Φ(A⁻¹)`; the same for `B` as a sub-report.
pub fn check_choi(inst: &Instance, tol_rel: f64) -> Result<InequalityReport> {
    choi_in(&Workspace::new(inst), tol_rel)
}

fn choi_in(ws: &Workspace, tol_rel: f64) -> Result<InequalityReport> {
    let inst = ws.inst;
    let one = |x: &HermitianMatrix, phi_x: &HermitianMatrix, name: &str| -> Result<InequalityReport> {
        let l = phi_x.inverse()?;
        let r = inst.map.apply(&x.inverse()?)?;
        order_report(name, &l, &r, 1.0, tol_rel, ws.id())
    };
    let mut report = one(&inst.a, ws.phi_a()?, "choi")?;
    report.sub_reports.push(one(&inst.b, ws.phi_b()?, "choi.b")?);
    Ok(report)
}

/// `A♯B ⪯ (A + B)/2`.
pub fn check_amgm(a: &HermitianMatrix, b: &HermitianMatrix, tol_rel: f64, id: InstanceId) -> Result<InequalityReport> {
    amgm_of(&geometric_mean(a, b)?, a, b, tol_rel, id)
}

fn amgm_of(sharp: &HermitianMatrix, a: &HermitianMatrix, b: &HermitianMatrix, tol_rel: f64, id: InstanceId) -> Result<InequalityReport> {
    let r = a.add(b)?.scale(0.5);
    order_report("amgm", sharp, &r, 1.0, tol_rel, id)
}

/// `(A♯B)⁻¹ = A⁻¹♯B⁻¹`; holds when the operator-norm residual is at most
/// `1e-9·‖(A♯B)⁻¹‖`. The margin is minus the residual.
pub fn check_inverse_sharp(a: &HermitianMatrix, b: &HermitianMatrix, id: InstanceId) -> Result<InequalityReport> {
    inverse_sharp_of(&geometric_mean(a, b)?, a, b, id)
}

fn inverse_sharp_of(sharp: &HermitianMatrix, a: &HermitianMatrix, b: &HermitianMatrix, id: InstanceId) -> Result<InequalityReport> {
    let l = sharp.inverse()?;
    let r = geometric_mean(&a.inverse()?, &b.inverse()?)?;
    let residual = l.sub(&r)?.norm()?;
    let tolerance = INVERSE_SHARP_REL_TOL * l.norm()?;
    let optimal = optimal_constant_default(&l, &r)?;
    Ok(InequalityReport {
        check_name: "inverse_sharp".into(),
        holds: residual <= tolerance,
        margin: -residual,
        tolerance,
        theorem_constant: 1.0,
        optimal_constant: optimal,
        slack: 1.0 - optimal,
        instance_id: id,
        diagnostic: None,
        sub_reports: Vec::new(),
    })
}

/// `‖AB‖ ≤ ¼‖A + B‖²` for `A, B ⪰ 0`.
pub fn check_bk_norm(a: &HermitianMatrix, b: &HermitianMatrix, tol_rel: f64, id: InstanceId) -> Result<InequalityReport> {
    let lhs = operator_norm(&(a.as_matrix() * b.as_matrix()))?;
    let sum = a.add(b)?.norm()?;
    let rhs = sum * sum;
    let c = 0.25;
    let tolerance = tol_rel * (lhs + c * rhs).max(1.0);
    let margin = c * rhs - lhs;
    let optimal = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(InequalityReport {
        check_name: "bk_norm".into(),
        holds: margin >= -tolerance,
        margin,
        tolerance,
        theorem_constant: c,
        optimal_constant: optimal,
        slack: c - optimal,
        instance_id: id,
        diagnostic: None,
        sub_reports: Vec::new(),
    })
}

/// `m ⪯ A♯B ⪯ M`, `m ⪯ Φ(A)♯Φ(B) ⪯ M` and `m² ⪯ Φ(A♯B)² ⪯ M²` with
/// `m = m1m2`, `M = M1M2`. The main report repeats the sub-report closest to failing.
pub fn check_sandwich(inst: &Instance, tol_rel: f64) -> Result<InequalityReport> {
    sandwich_in(&Workspace::new(inst), tol_rel)
}

fn sandwich_in(ws: &Workspace, tol_rel: f64) -> Result<InequalityReport> {
    let id = ws.id();
    let inst = ws.inst;
    let n = inst.dim();
    let k = inst.map.codomain_dim();
    let (m, big) = (inst.bounds.small(), inst.bounds.big());
    let (sharp, d) = (ws.sharp()?, ws.d()?);
    let c_sq = ws.c()?.square();
    let one = |dim: usize| HermitianMatrix::identity(dim);
    let subs = vec![
        order_report("sandwich.sharp_lower", &one(n), sharp, 1.0 / m, tol_rel, id)?,
        order_report("sandwich.sharp_upper", sharp, &one(n), big, tol_rel, id)?,
        order_report("sandwich.phi_sharp_lower", &one(k), d, 1.0 / m, tol_rel, id)?,
        order_report("sandwich.phi_sharp_upper", d, &one(k), big, tol_rel, id)?,
        order_report("sandwich.squared_lower", &one(k), &c_sq, 1.0 / (m * m), tol_rel, id)?,
        order_report("sandwich.squared_upper", &c_sq, &one(k), big * big, tol_rel, id)?,
    ];
    let worst = subs
        .iter()
        .min_by(|x, y| (x.margin + x.tolerance).total_cmp(&(y.margin + y.tolerance)))
        .expect("non-empty");
    let mut report = worst.clone();
    report.check_name = "sandwich".into();
    report.holds = subs.iter().all(|s| s.holds);
    report.sub_reports = subs;
    Ok(report)
}

/// Names accepted by `--checks`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckKind {
    Ando,
    PolyaSzego,
    SquaredPs,
    GeneralMean,
    GeneralSquared,
    Gruss,
    Sandwich,
    Dm,
    DmSquared,
    FujiiSquaring,
    Choi,
    Amgm,
    InverseSharp,
    BkNorm,
}

impl CheckKind {
    pub const ALL: [CheckKind; 14] = [
        CheckKind::Ando,
        CheckKind::PolyaSzego,
        CheckKind::SquaredPs,
        CheckKind::GeneralMean,
        CheckKind::GeneralSquared,
        CheckKind::Gruss,
        CheckKind::Sandwich,
        CheckKind::Dm,
        CheckKind::DmSquared,
        CheckKind::FujiiSquaring,
        CheckKind::Choi,
        CheckKind::Amgm,
        CheckKind::InverseSharp,
        CheckKind::BkNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Ando => "ando",
            CheckKind::PolyaSzego => "polya_szego",
            CheckKind::SquaredPs => "squared_ps",
            CheckKind::GeneralMean => "general_mean",
            CheckKind::GeneralSquared => "general_squared",
            CheckKind::Gruss => "gruss",
            CheckKind::Sandwich => "sandwich",
            CheckKind::Dm => "dm",
            CheckKind::DmSquared => "dm_squared",
            CheckKind::FujiiSquaring => "fujii_squaring",
            CheckKind::Choi => "choi",
            CheckKind::Amgm => "amgm",
            CheckKind::InverseSharp => "inverse_sharp",
            CheckKind::BkNorm => "bk_norm",
        }
    }

    /// Parses a comma-separated list; `all` expands to every check.
    pub fn parse_list(s: &str) -> Result<Vec<CheckKind>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(CheckKind::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Parse("no checks requested".into()));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown check {s:?}")))
    }
}

/// One generated sample: a theorem instance plus an ordered pair for the
/// squaring check, both from the same stream.
#[derive(Clone, Debug)]
pub struct Sample {
    pub instance: Instance,
    pub pair: OrderedPair,
}

/// Draws sample `stream` of `seed`. With `bounds = None` the enclosures are random.
pub fn sample(n: usize, bounds: Option<&SpectralBounds>, seed: u64, stream_id: u64) -> Sample {
    let mut rng = stream(seed, stream_id);
    let b = match bounds {
        Some(b) => *b,
        None => random_bounds(&mut rng),
    };
    let mut instance = random_instance(n, &b, &mut rng, &MapKindWeights::default());
    instance.seed_trace = SeedTrace { seed, stream: stream_id };
    let pair = random_ordered_pair(n, b.m1 * b.m1, b.big_m1 * b.big_m1, &mut rng);
    Sample { instance, pair }
}

/// Runs `checks` on one sample, in the order given, expanding the
/// mean-dependent checks over `means`.
pub fn run_checks(sample: &Sample, checks: &[CheckKind], means: &[MeanSpec], tol_rel: f64) -> Result<Vec<InequalityReport>> {
    let inst = &sample.instance;
    let ws = Workspace::new(inst);
    let id = ws.id();
    let mut out = Vec::new();
    for &check in checks {
        match check {
            CheckKind::Ando => {
                out.push(ando_in(&ws, &MeanSpec::Geometric, tol_rel)?);
                for m in means {
                    out.push(ando_in(&ws, m, tol_rel)?);
                }
            }
            CheckKind::PolyaSzego => out.push(polya_szego_in(&ws, tol_rel)?),
            CheckKind::SquaredPs => out.push(squared_ps_in(&ws, tol_rel)?),
            CheckKind::GeneralMean => {
                for m in means {
                    out.push(general_mean_in(&ws, m, tol_rel)?);
                }
            }
            CheckKind::GeneralSquared => {
                for m in means {
                    out.push(general_squared_in(&ws, m, tol_rel)?);
                }
            }
            CheckKind::Gruss => out.push(gruss_in(&ws, tol_rel)?),
            CheckKind::Sandwich => out.push(sandwich_in(&ws, tol_rel)?),
            CheckKind::Dm => out.push(dm_in(&ws, tol_rel)?),
            CheckKind::DmSquared => out.push(dm_squared_in(&ws, tol_rel)?),
            CheckKind::FujiiSquaring => out.push(check_fujii_squaring(&sample.pair, tol_rel, id)?),
            CheckKind::Choi => out.push(choi_in(&ws, tol_rel)?),
            CheckKind::Amgm => out.push(amgm_of(ws.sharp()?, &inst.a, &inst.b, tol_rel, id)?),
            CheckKind::InverseSharp => out.push(inverse_sharp_of(ws.sharp()?, &inst.a, &inst.b, id)?),
            CheckKind::BkNorm => out.push(check_bk_norm(&inst.a, &inst.b, tol_rel, id)?),
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub dims: Vec<usize>,
    pub count: usize,
    pub seed: u64,
    pub checks: Vec<CheckKind>,
    pub means: Vec<MeanSpec>,
    pub bounds: Option<SpectralBounds>,
    pub tol_rel: f64,
}

impl VerifyConfig {
    pub fn new(seed: u64) -> Self {
        VerifyConfig {
            dims: crate::instances::DEFAULT_DIMS.to_vec(),
            count: 500,
            seed,
            checks: CheckKind::ALL.to_vec(),
            means: default_means(),
            bounds: None,
            tol_rel: DEFAULT_ORDER_TOL,
        }
    }
}

/// `♯_{1/4}`, `♯_{1/2}`, `♯_{3/4}`.
pub fn default_means() -> Vec<MeanSpec> {
    vec![
        MeanSpec::WeightedGeometric(0.25),
        MeanSpec::WeightedGeometric(0.5),
        MeanSpec::WeightedGeometric(0.75),
    ]
}

/// Aggregate over all reports of one check name.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub check_name: String,
    pub count: usize,
    pub failures: usize,
    pub min_margin: f64,
    pub max_optimal_constant: f64,
    pub mean_slack: f64,
}

/// Summaries in order of first appearance; sub-reports get their own rows.
pub fn summarize(reports: &[InequalityReport]) -> Vec<Summary> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, (Summary, f64)> = BTreeMap::new();
    for r in reports.iter().flat_map(InequalityReport::flatten) {
        let entry = acc.entry(r.check_name.clone()).or_insert_with(|| {
            order.push(r.check_name.clone());
            (
                Summary {
                    check_name: r.check_name.clone(),
                    count: 0,
                    failures: 0,
                    min_margin: f64::INFINITY,
                    max_optimal_constant: f64::NEG_INFINITY,
                    mean_slack: 0.0,
                },
                0.0,
            )
        });
        entry.0.count += 1;
        entry.0.failures += usize::from(!r.holds);
        entry.0.min_margin = entry.0.min_margin.min(r.margin);
        entry.0.max_optimal_constant = entry.0.max_optimal_constant.max(r.optimal_constant);
        entry.1 += r.slack;
    }
    order
        .into_iter()
        .map(|name| {
            let (mut s, total) = acc.remove(&name).expect("present");
            s.mean_slack = total / s.count as f64;
            s
        })
        .collect()
}

/// Runs every check on `count` samples per dimension. Stream ids are
/// `dim_index · count + i`, and results come back in stream order whatever
/// the size of the current rayon pool.
pub fn run_verify(cfg: &VerifyConfig) -> Result<Vec<InequalityReport>> {
    let jobs: Vec<(usize, u64)> = cfg
        .dims
        .iter()
        .enumerate()
        .flat_map(|(d, &n)| (0..cfg.count).map(move |i| (n, (d * cfg.count + i) as u64)))
        .collect();
    let per_sample: Vec<Result<Vec<InequalityReport>>> = jobs
        .par_iter()
        .map(|&(n, sid)| {
            let s = sample(n, cfg.bounds.as_ref(), cfg.seed, sid);
            run_checks(&s, &cfg.checks, &cfg.means, cfg.tol_rel)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_sample {
        out.extend(r?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::equality_witness;
    use crate::maps::PositiveMap;
    use crate::means::RepresentingFunction;

    const TOL: f64 = DEFAULT_ORDER_TOL;

    fn b(m1: f64, big1: f64, m2: f64, big2: f64) -> SpectralBounds {
        SpectralBounds::new(m1, big1, m2, big2).unwrap()
    }

    fn with_identity(mut inst: Instance) -> Instance {
        inst.map = PositiveMap::Identity { n: inst.dim() };
        inst
    }

    fn close(a: f64, e: f64, tol: f64) -> bool {
        (a - e).abs() <= tol
    }

    #[test]
    fn ando_examples() {
        let s = sample(3, None, 1, 0);
        let r = check_ando(&with_identity(s.instance.clone()), &MeanSpec::Geometric, TOL).unwrap();
        assert!(r.holds && r.margin.abs() < 1e-12);

        let s1 = sample(1, None, 1, 1);
        let r = check_ando(&s1.instance, &MeanSpec::Geometric, TOL).unwrap();
        assert!(r.holds && close(r.optimal_constant, 1.0, 1e-12));

        let w = equality_witness(&b(1.0, 2.0, 1.0, 2.0));
        let r = check_ando(&w, &MeanSpec::Geometric, TOL).unwrap();
        assert!(r.holds);
        assert!(close(r.optimal_constant, 2.0 / 2.5, 1e-12));
        assert!(close(r.margin, 0.5, 1e-12));
    }

    #[test]
    fn polya_szego_examples() {
        let flat = b(1.5, 1.5, 0.5, 0.5);
        let inst = with_identity(sample(3, Some(&flat), 2, 0).instance);
        let r = check_polya_szego(&inst, TOL).unwrap();
        assert_eq!(r.theorem_constant, 1.0);
        assert!(r.holds && close(r.optimal_constant, 1.0, 1e-12));

        let r = check_polya_szego(&equality_witness(&b(1.0, 2.0, 1.0, 2.0)), TOL).unwrap();
        assert!(close(r.optimal_constant, 1.25, 1e-12));
        assert!(r.slack.abs() <= 1e-12);
    }

    #[test]
    fn squared_ps_examples() {
        let r = check_squared_ps(&equality_witness(&b(1.0, 2.0, 1.0, 2.0)), TOL).unwrap();
        assert!(r.passed());
        assert!(close(r.optimal_constant, 6.25 / 4.0, 1e-12));
        assert!(close(r.theorem_constant, 2.44140625, 1e-14));
        let diag = r.diagnostic.unwrap();
        assert!(close(diag.value, 1.5625, 1e-12));

        let flat = b(2.0, 2.0, 1.0, 1.0);
        let r = check_squared_ps(&with_identity(sample(2, Some(&flat), 3, 0).instance), TOL).unwrap();
        assert_eq!(r.theorem_constant, 1.0);
        assert!(r.holds);
    }

    #[test]
    fn general_mean_reductions() {
        for i in 0..10 {
            let inst = sample(4, None, 4, i).instance;
            let ps = check_polya_szego(&inst, TOL).unwrap();
            let gm = check_general_mean(&inst, &MeanSpec::Geometric, TOL).unwrap();
            assert!(close(gm.theorem_constant, ps.theorem_constant, 1e-10 * ps.theorem_constant));
            assert!(close(gm.optimal_constant, ps.optimal_constant, 1e-10));
            assert!(close(gm.margin, ps.margin, 1e-10 * (1.0 + ps.margin.abs())));

            let sq = check_squared_ps(&inst, TOL).unwrap();
            let gs = check_general_squared(&inst, &MeanSpec::Geometric, TOL).unwrap();
            assert!(close(gs.theorem_constant, sq.theorem_constant, 1e-8 * sq.theorem_constant));

            let arith = MeanSpec::Generic(RepresentingFunction::arithmetic());
            let r = check_general_mean(&inst, &arith, TOL).unwrap();
            assert!(close(r.theorem_constant, 1.0, 1e-12));
            assert!(r.holds && r.margin.abs() < 1e-10);
        }
    }

    #[test]
    fn gruss_examples() {
        let r = check_gruss(&equality_witness(&b(1.0, 2.0, 1.0, 2.0)), TOL).unwrap();
        assert!(r.holds);
        assert!(close(r.optimal_constant, 2.25, 1e-12));
        assert!(close(r.theorem_constant, 23.0625, 1e-12));

        let flat = b(1.0, 1.0, 3.0, 3.0);
        let r = check_gruss(&with_identity(sample(2, Some(&flat), 5, 0).instance), TOL).unwrap();
        assert_eq!(r.theorem_constant, 0.0);
        assert!(r.holds && r.optimal_constant.abs() < 1e-12);
    }

    #[test]
    fn dm_examples() {
        let ones = b(1.0, 1.0, 1.0, 1.0);
        let inst = sample(3, Some(&ones), 6, 0).instance;
        let r = check_dm(&inst, TOL).unwrap();
        assert_eq!(r.theorem_constant, 2.0);
        assert!(r.holds && close(r.optimal_constant, 2.0, 1e-12));

        let r = check_dm(&equality_witness(&b(1.0, 2.0, 1.0, 2.0)), TOL).unwrap();
        assert!(close(r.optimal_constant, 2.5, 1e-12));
        assert!(r.slack.abs() < 1e-12);
    }

    #[test]
    fn dm_squared_examples() {
        let ones = b(1.0, 1.0, 1.0, 1.0);
        let r = check_dm_squared(&sample(2, Some(&ones), 7, 0).instance, TOL).unwrap();
        assert!(r.passed());
        assert_eq!(r.theorem_constant, 4.0);
        assert!(close(r.optimal_constant, 4.0, 1e-12));
        assert_eq!(r.sub_reports.len(), 3);

        let r = check_dm_squared(&equality_witness(&b(1.0, 2.0, 1.0, 2.0)), TOL).unwrap();
        assert!(r.passed());
        assert!(close(r.optimal_constant, 6.25, 1e-12));
        assert!(close(r.theorem_constant, 9.765625, 1e-12));
    }

    #[test]
    fn fujii_examples() {
        let a = HermitianMatrix::diag(&[1.0, 1.5]);
        let pair = OrderedPair { a: a.clone(), b: a, m: 1.0, big_m: 2.0 };
        let r = check_fujii_squaring(&pair, TOL, InstanceId::default()).unwrap();
        assert!(r.holds && close(r.optimal_constant, 1.0, 1e-14));

        let pair = OrderedPair {
            a: HermitianMatrix::diag(&[1.0]),
            b: HermitianMatrix::diag(&[1.0]),
            m: 1.0,
            big_m: 2.0,
        };
        let r = check_fujii_squaring(&pair, TOL, InstanceId::default()).unwrap();
        assert_eq!(r.theorem_constant, 9.0 / 8.0);
        assert!(r.holds);
    }

    #[test]
    fn lemma_examples() {
        let inst = with_identity(sample(3, None, 8, 0).instance);
        let r = check_choi(&inst, TOL).unwrap();
        assert!(r.passed() && r.margin.abs() < 1e-10);

        let a = inst.a.clone();
        let r = check_amgm(&a, &a, TOL, InstanceId::default()).unwrap();
        assert!(r.holds && r.margin.abs() < 1e-12);

        let r = check_bk_norm(&HermitianMatrix::diag(&[1.0, 0.0]), &HermitianMatrix::diag(&[0.0, 1.0]), TOL, InstanceId::default())
            .unwrap();
        assert!(r.holds && r.optimal_constant == 0.0 && close(r.margin, 0.25, 1e-15));

        let r = check_inverse_sharp(&inst.a, &inst.b, InstanceId::default()).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn sandwich_examples() {
        let r = check_sandwich(&equality_witness(&b(1.0, 2.0, 1.0, 2.0)), TOL).unwrap();
        assert!(r.passed());
        // A♯B = 2I here, against m = 1 and M = 4.
        assert!(close(r.sub_reports[0].margin, 1.0, 1e-12));
        assert!(close(r.sub_reports[1].margin, 2.0, 1e-12));

        let flat = b(2.0, 2.0, 0.5, 0.5);
        let r = check_sandwich(&sample(3, Some(&flat), 9, 0).instance, TOL).unwrap();
        assert!(r.passed());
        assert!(r.sub_reports.iter().all(|s| close(s.optimal_constant, s.theorem_constant, 1e-10 * s.theorem_constant)));
    }

    #[test]
    fn check_names_parse() {
        assert_eq!(CheckKind::parse_list("all").unwrap().len(), 14);
        assert_eq!(CheckKind::parse_list("dm, gruss,dm").unwrap(), vec![CheckKind::Gruss, CheckKind::Dm]);
        assert!(CheckKind::parse_list("no_such_check").is_err());
    }

    #[test]
    fn bulk_run_is_deterministic_and_passes() {
        let mut cfg = VerifyConfig::new(11);
        cfg.dims = vec![1, 3];
        cfg.count = 6;
        let a = run_verify(&cfg).unwrap();
        let b = run_verify(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(InequalityReport::passed));
        let summaries = summarize(&a);
        assert!(summaries.iter().any(|s| s.check_name == "dm_squared.acc"));
        assert!(summaries.iter().all(|s| s.failures == 0));
    }
}
