use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::point;
use super::{point_violation, worst_direction, LabConfig, LemmaId, LemmaReport, PointParams, SearchConfig, Verdict, Witness};
use crate::cones::{
    adversarial_refine, box_point, huge_threshold, in_cone, stream, structured_directions, trial_rng, unit_direction,
    Objective, RefineConfig, SampleSpec, Sampler, Stratum,
};
use crate::error::{Error, Result};
use crate::symfun::{CurvatureVector, DirectionVector};
use crate::tolerances::DOUBLING_STABILITY;

const POLISH_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const SCALED_RETRY_CAP: u64 = 100_000;

type Admit<'a> = &'a (dyn Fn(&CurvatureVector) -> bool + Sync);
type Value<'a> = &'a (dyn Fn(&CurvatureVector, &DirectionVector) -> Result<f64> + Sync);
type Worst<'a> = &'a (dyn Fn(&CurvatureVector) -> Result<Option<DirectionVector>> + Sync);

/// A functional to maximize over an admissible set.
struct Functional<'a> {
    admit: Admit<'a>,
    value: Value<'a>,
    worst: Worst<'a>,
    directional: bool,
}

impl Objective for Functional<'_> {
    fn admissible(&self, kappa: &CurvatureVector) -> bool {
        (self.admit)(kappa)
    }

    fn violation(&self, kappa: &CurvatureVector, xi: &DirectionVector) -> Result<f64> {
        (self.value)(kappa, xi)
    }

    fn worst_direction(&self, kappa: &CurvatureVector) -> Result<Option<DirectionVector>> {
        (self.worst)(kappa)
    }

    fn uses_direction(&self) -> bool {
        self.directional
    }
}

fn no_worst(_: &CurvatureVector) -> Result<Option<DirectionVector>> {
    Ok(None)
}

#[derive(Debug, Clone)]
struct Candidate {
    index: u64,
    kappa: CurvatureVector,
    xi: DirectionVector,
    value: f64,
}

struct Search {
    candidates: Vec<Candidate>,
    skipped: usize,
    first_error: Option<String>,
}

impl Search {
    fn best(&self) -> Option<&Candidate> {
        let mut best: Option<&Candidate> = None;
        for c in &self.candidates {
            if best.is_none_or(|b| c.value > b.value) {
                best = Some(c);
            }
        }
        best
    }

    fn exceeding(&self, tol: f64) -> usize {
        self.candidates.iter().filter(|c| c.value > tol).count()
    }
}

/// Start value at a sample: the exact worst direction if known, else the best
/// of the structured and random directions.
fn start(f: &Functional, seed: u64, index: u64, kappa: &CurvatureVector, order: usize, extra: usize) -> Result<(DirectionVector, f64)> {
    let n = kappa.n();
    if let Some(d) = (f.worst)(kappa)? {
        let v = (f.value)(kappa, &d)?;
        return Ok((d, v));
    }
    if !f.directional {
        let d = DirectionVector::coordinate(n, 0);
        let v = (f.value)(kappa, &d)?;
        return Ok((d, v));
    }
    let mut rng = trial_rng(seed, index, stream::DIRECTION);
    let mut dirs = structured_directions(&mut rng, kappa, order);
    dirs.extend((0..extra).map(|_| unit_direction(&mut rng, n)));
    let mut best: Option<(DirectionVector, f64)> = None;
    for d in dirs {
        let v = (f.value)(kappa, &d)?;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((d, v));
        }
    }
    Ok(best.expect("at least one direction"))
}

/// Evaluates and locally refines every sample; parallel, merged in index order.
fn stage1(
    f: &Functional,
    samples: &[(u64, CurvatureVector)],
    seed: u64,
    order: usize,
    extra: usize,
    sc: &SearchConfig,
) -> Vec<std::result::Result<Candidate, String>> {
    samples
        .par_iter()
        .map(|(index, kappa)| {
            let (xi, value) = start(f, seed, *index, kappa, order, extra).map_err(|e| e.to_string())?;
            let mut c = Candidate {
                index: *index,
                kappa: kappa.clone(),
                xi,
                value,
            };
            if sc.rounds > 0 {
                let rc = RefineConfig {
                    rounds: sc.rounds,
                    step: sc.step,
                    seed: seed ^ index,
                };
                let r = adversarial_refine(&c.kappa, &c.xi, f, &rc).map_err(|e| e.to_string())?;
                if r.value > c.value {
                    c.kappa = r.kappa;
                    c.xi = r.xi;
                    c.value = r.value;
                }
            }
            Ok(c)
        })
        .collect()
}

/// Longer refinement of the `sc.top` worst candidates.
fn stage2(f: &Functional, results: &[std::result::Result<Candidate, String>], seed: u64, sc: &SearchConfig) -> Search {
    let mut candidates = Vec::with_capacity(results.len());
    let mut skipped = 0;
    let mut first_error = None;
    for r in results {
        match r {
            Ok(c) => candidates.push(c.clone()),
            Err(e) => {
                skipped += 1;
                first_error.get_or_insert_with(|| e.clone());
            }
        }
    }
    if sc.top > 0 && sc.polish_rounds > 0 {
        let mut order: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].value.is_finite()).collect();
        order.sort_by(|&a, &b| {
            candidates[b]
                .value
                .total_cmp(&candidates[a].value)
                .then(candidates[a].index.cmp(&candidates[b].index))
        });
        order.truncate(sc.top);
        let polished: Vec<(usize, Option<Candidate>)> = order
            .par_iter()
            .map(|&i| {
                let c = &candidates[i];
                let rc = RefineConfig {
                    rounds: sc.polish_rounds,
                    step: sc.step,
                    seed: seed ^ c.index ^ POLISH_SALT,
                };
                let better = adversarial_refine(&c.kappa, &c.xi, f, &rc).ok().filter(|r| r.value > c.value).map(|r| Candidate {
                    index: c.index,
                    kappa: r.kappa,
                    xi: r.xi,
                    value: r.value,
                });
                (i, better)
            })
            .collect();
        for (i, better) in polished {
            if let Some(c) = better {
                candidates[i] = c;
            }
        }
    }
    Search {
        candidates,
        skipped,
        first_error,
    }
}

fn full_search(f: &Functional, samples: &[(u64, CurvatureVector)], cfg: &LabConfig, order: usize, sc: &SearchConfig) -> Search {
    let r = stage1(f, samples, cfg.seed, order, cfg.directions, sc);
    stage2(f, &r, cfg.seed, sc)
}

fn no_search() -> SearchConfig {
    SearchConfig {
        rounds: 0,
        top: 0,
        polish_rounds: 0,
        step: 0.05,
    }
}

fn interior_spec(cfg: &LabConfig, order: usize, count: usize) -> SampleSpec {
    SampleSpec::new(cfg.n, order, cfg.a, cfg.b, Stratum::Interior, cfg.seed, count)
}

/// Every fourth index near ∂Γ_order, the rest from the interior.
fn cone_samples(cfg: &LabConfig, order: usize, count: usize) -> Result<(Vec<(u64, CurvatureVector)>, serde_json::Value)> {
    let interior = Sampler::new(interior_spec(cfg, order, count))?;
    let mut near_spec = interior_spec(cfg, order, count);
    near_spec.stratum = Stratum::NearBoundary;
    let near = Sampler::new(near_spec)?;
    let draws: Vec<(bool, Result<(CurvatureVector, u64)>)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let is_near = i % 4 == 3;
            let s = if is_near { &near } else { &interior };
            (is_near, s.draw(i))
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    let mut stats = [(0usize, 0u64); 2];
    for (i, (is_near, d)) in draws.into_iter().enumerate() {
        let (kappa, attempts) = d?;
        let s = &mut stats[is_near as usize];
        s.0 += 1;
        s.1 += attempts;
        out.push((i as u64, kappa));
    }
    let stat = |s: (usize, u64)| {
        json!({
            "accepted": s.0,
            "attempts": s.1,
            "acceptance_rate": if s.1 > 0 { s.0 as f64 / s.1 as f64 } else { 0.0 },
        })
    };
    let stats = json!({ "interior": stat(stats[0]), "near_boundary": stat(stats[1]) });
    Ok((out, stats))
}

/// Points of R^n: uniform on [-s, s]^n with s log-uniform in [1e-2, 1e2].
fn box_samples(cfg: &LabConfig, count: usize) -> Vec<(u64, CurvatureVector)> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(cfg.seed, i, stream::SAMPLE);
            let s = 10f64.powf(rng.random_range(-2.0..2.0));
            let v = box_point(&mut rng, cfg.n, -s, s);
            (i, CurvatureVector::new(v).expect("finite"))
        })
        .collect()
}

fn witness(id: LemmaId, c: &Candidate, p: &PointParams) -> Witness {
    Witness {
        kappa: c.kappa.values().to_vec(),
        xi: if id.uses_direction() {
            c.xi.values().to_vec()
        } else {
            Vec::new()
        },
        params: p.to_map(),
    }
}

struct Outcome {
    search: Search,
    params: PointParams,
    trials: usize,
    empirical_constant: Option<f64>,
    /// Reasons the verdict cannot be `holds` even without a violation.
    doubts: Vec<String>,
    details: serde_json::Map<String, serde_json::Value>,
    /// A search that ran out of levels: inconclusive whatever the worst value.
    exhausted: bool,
}

fn report(id: LemmaId, cfg: &LabConfig, o: Outcome) -> Result<LemmaReport> {
    let best = o.search.best().ok_or_else(|| {
        Error::InsufficientData(format!(
            "{id}: every sample was skipped ({})",
            o.search.first_error.clone().unwrap_or_default()
        ))
    })?;
    let tol = id.tolerance();
    let verdict = if o.exhausted {
        Verdict::Inconclusive
    } else if best.value > tol {
        Verdict::Violated
    } else if o.doubts.is_empty() {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    let mut details = o.details;
    details.insert("violations".into(), json!(o.search.exceeding(tol)));
    if let Some(e) = &o.search.first_error {
        details.insert("first_skip_reason".into(), json!(e));
    }
    if !o.doubts.is_empty() {
        details.insert("doubts".into(), json!(o.doubts));
    }
    details.insert("config".into(), serde_json::to_value(cfg).expect("serializable"));
    Ok(LemmaReport {
        lemma: id,
        n: cfg.n,
        k: cfg.k,
        a: cfg.a,
        seed: cfg.seed,
        trials: o.trials,
        verdict,
        worst_violation: best.value,
        tolerance: tol,
        witness: witness(id, best, &o.params),
        empirical_constant: o.empirical_constant,
        wall_ms: 0,
        skipped: o.search.skipped,
        details: serde_json::Value::Object(details),
    })
}

pub(super) fn run(id: LemmaId, cfg: &LabConfig) -> Result<LemmaReport> {
    let o = match id {
        LemmaId::F11k12 => identity_f11k12(cfg)?,
        LemmaId::HsQ2 => identity_hs_q2(cfg)?,
        LemmaId::PartialOrdering
        | LemmaId::Fk1
        | LemmaId::QuotientConcavity
        | LemmaId::K1ProductBound
        | LemmaId::Lemn
        | LemmaId::Maclaurin => cone_inequality(id, cfg, cfg.k)?,
        LemmaId::HsRecursion => cone_inequality(id, cfg, cfg.k.min(cfg.n - 1))?,
        LemmaId::SemiconvexFromSigma => bounded_tail(id, cfg, EscalationKind::Semiconvex)?,
        LemmaId::UpperKappak => bounded_tail(id, cfg, EscalationKind::UpperKappak)?,
        LemmaId::Lu => lu(cfg)?,
        LemmaId::PropLN => prop_ln(cfg)?,
        LemmaId::LemHG => lem_hg(cfg)?,
    };
    report(id, cfg, o)
}

fn lemma_value(id: LemmaId, p: PointParams) -> impl Fn(&CurvatureVector, &DirectionVector) -> Result<f64> + Sync {
    move |k, xi| point_violation(id, k, xi, &p)
}

fn lemma_worst(id: LemmaId, p: PointParams) -> impl Fn(&CurvatureVector) -> Result<Option<DirectionVector>> + Sync {
    move |k| worst_direction(id, k, &p)
}

fn identity_f11k12(cfg: &LabConfig) -> Result<Outcome> {
    let p = cfg.params(cfg.k, cfg.big_n);
    let samples = box_samples(cfg, cfg.trials);
    let value = lemma_value(LemmaId::F11k12, p);
    let f = Functional {
        admit: &|_| true,
        value: &value,
        worst: &no_worst,
        directional: false,
    };
    let search = full_search(&f, &samples, cfg, cfg.k, &no_search());
    Ok(Outcome {
        search,
        params: p,
        trials: samples.len(),
        empirical_constant: None,
        doubts: Vec::new(),
        details: serde_json::Map::new(),
        exhausted: false,
    })
}

fn identity_hs_q2(cfg: &LabConfig) -> Result<Outcome> {
    let p = cfg.params(2, cfg.big_n);
    let (samples, stats) = cone_samples(cfg, 2, cfg.trials)?;
    let value = lemma_value(LemmaId::HsQ2, p);
    let f = Functional {
        admit: &|_| true,
        value: &value,
        worst: &no_worst,
        directional: true,
    };
    let search = full_search(&f, &samples, cfg, 2, &no_search());
    let mut details = serde_json::Map::new();
    details.insert("sampling".into(), stats);
    Ok(Outcome {
        search,
        params: p,
        trials: samples.len(),
        empirical_constant: None,
        doubts: Vec::new(),
        details,
        exhausted: false,
    })
}

fn cone_inequality(id: LemmaId, cfg: &LabConfig, order: usize) -> Result<Outcome> {
    let p = cfg.params(order, cfg.big_n);
    // The recursion from q_m to q_{m+1} lives on Γ_{m+1}.
    let cone = if id == LemmaId::HsRecursion { order + 1 } else { order };
    let (samples, stats) = cone_samples(cfg, cone, cfg.trials)?;
    let spec = interior_spec(cfg, cone, 1);
    let admit = move |k: &CurvatureVector| spec.admits(k);
    let value = lemma_value(id, p);
    let worst = lemma_worst(id, p);
    let f = Functional {
        admit: &admit,
        value: &value,
        worst: &worst,
        directional: id.uses_direction(),
    };
    let search = full_search(&f, &samples, cfg, order, &cfg.search);
    let mut details = serde_json::Map::new();
    details.insert("sampling".into(), stats);
    details.insert("order".into(), json!(order));
    if id == LemmaId::Lemn {
        let negative = samples.iter().filter(|(_, k)| k.values()[cfg.n - 1] < 0.0).count();
        details.insert("samples_with_negative_tail".into(), json!(negative));
    }
    if id == LemmaId::HsRecursion {
        let worst_identity = search
            .candidates
            .iter()
            .filter_map(|c| point::denominator_identity_residual(&c.kappa, order).ok())
            .fold(0.0f64, f64::max);
        details.insert("denominator_identity_max_residual".into(), json!(worst_identity));
    }
    Ok(Outcome {
        search,
        params: p,
        trials: samples.len(),
        empirical_constant: None,
        doubts: Vec::new(),
        details,
        exhausted: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EscalationKind {
    /// Sup of -κ_n over Γ_k with σ_{k+1} > -A.
    Semiconvex,
    /// Sup of κ_k over Γ_k with κ_n > -A.
    UpperKappak,
}

impl EscalationKind {
    fn box_floor(self, cfg: &LabConfig) -> f64 {
        match self {
            EscalationKind::Semiconvex => -cfg.b,
            EscalationKind::UpperKappak => -cfg.a,
        }
    }

    fn side_condition(self, cfg: &LabConfig, kappa: &CurvatureVector) -> bool {
        match self {
            EscalationKind::Semiconvex => kappa.bundle().sigma(cfg.k as isize + 1) > -cfg.a,
            EscalationKind::UpperKappak => kappa.values()[cfg.n - 1] > -cfg.a,
        }
    }

    fn admits(self, cfg: &LabConfig, kappa: &CurvatureVector) -> bool {
        let (lo, hi) = cfg.sigma_range;
        if !kappa.is_sorted() || !in_cone(kappa.values(), cfg.k) {
            return false;
        }
        let s = kappa.bundle().sigma(cfg.k as isize);
        s >= lo && s <= hi && self.side_condition(cfg, kappa)
    }

    fn value(self, cfg: &LabConfig, kappa: &CurvatureVector) -> f64 {
        match self {
            EscalationKind::Semiconvex => -kappa.values()[cfg.n - 1],
            EscalationKind::UpperKappak => kappa.values()[cfg.k - 1],
        }
    }

    /// Largest admissible scale factor on the ray through `kappa`. Both
    /// bounded quantities are 1-homogeneous, so their sup over a ray sits
    /// where the σ_k window or the side condition binds; searching over
    /// shapes removes the radial direction from the hill climb.
    fn ray_scale(self, cfg: &LabConfig, kappa: &CurvatureVector) -> Option<f64> {
        if !kappa.is_sorted() || !in_cone(kappa.values(), cfg.k) {
            return None;
        }
        let b = kappa.bundle();
        let k = cfg.k as f64;
        let (lo, hi) = cfg.sigma_range;
        let sk = b.sigma(cfg.k as isize);
        let mut s_max = (hi / sk).powf(1.0 / k);
        let side = match self {
            EscalationKind::Semiconvex => {
                let s1 = b.sigma(cfg.k as isize + 1);
                (s1 < 0.0).then(|| (cfg.a / -s1).powf(1.0 / (k + 1.0)))
            }
            EscalationKind::UpperKappak => {
                let last = kappa.values()[cfg.n - 1];
                (last < 0.0).then(|| cfg.a / -last)
            }
        };
        if let Some(s) = side {
            s_max = s_max.min(s);
        }
        (s_max.is_finite() && s_max >= (lo / sk).powf(1.0 / k)).then_some(s_max)
    }

    fn ray_value(self, cfg: &LabConfig, kappa: &CurvatureVector) -> f64 {
        let s = self.ray_scale(cfg, kappa).expect("admitted on the ray");
        self.value(cfg, kappa) * s
    }
}

/// Box point with at most three distinct values. Extremal configurations of
/// symmetric constraints tend to have tied entries, which independent
/// uniform draws almost never produce.
fn clustered_point<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let levels = box_point(rng, 3, lo, hi);
    let mut cuts = [rng.random_range(0..=n), rng.random_range(0..=n)];
    cuts.sort_unstable();
    (0..n)
        .map(|i| if i < cuts[0] { levels[0] } else if i < cuts[1] { levels[1] } else { levels[2] })
        .collect()
}

/// Box point in Γ_k rescaled so that σ_k is uniform in the configured range.
fn scaled_sample(cfg: &LabConfig, kind: EscalationKind, index: u64) -> Result<CurvatureVector> {
    let mut rng = trial_rng(cfg.seed, index, stream::SAMPLE);
    let (lo, hi) = cfg.sigma_range;
    let k = cfg.k;
    for _ in 0..SCALED_RETRY_CAP {
        let v = if index % 2 == 1 {
            clustered_point(&mut rng, cfg.n, kind.box_floor(cfg), cfg.b)
        } else {
            box_point(&mut rng, cfg.n, kind.box_floor(cfg), cfg.b)
        };
        if !in_cone(&v, k) {
            continue;
        }
        let target = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let s = CurvatureVector::new(v.clone())?.bundle().sigma(k as isize);
        let t = (target / s).powf(1.0 / k as f64);
        let kappa = CurvatureVector::new(v.iter().map(|x| x * t).collect())?;
        if kind.admits(cfg, &kappa) {
            return Ok(kappa);
        }
    }
    Err(Error::SamplerExhausted {
        stratum: format!("{kind:?} sigma_k in [{lo}, {hi}]"),
        attempts: SCALED_RETRY_CAP,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscalationRow {
    pub kappa1: f64,
    pub samples: usize,
    pub sup: f64,
}

/// `κ_1 = T` fixed, the tail `τ r` with `r ∈ Γ_{k-1}` from the box and τ chosen
/// so that σ_k hits a target in the configured range; reports the sup of the
/// stratum's bounded quantity for each T.
pub fn escalation_sup(cfg: &LabConfig, kind: EscalationKind, count: usize) -> Result<Vec<EscalationRow>> {
    cfg.validate()?;
    let (n, k) = (cfg.n, cfg.k);
    if k < 2 {
        return Err(Error::invalid("escalation needs k >= 2"));
    }
    let (lo, hi) = cfg.sigma_range;
    let mut rows = Vec::new();
    for (j, &t_big) in cfg.escalation.iter().enumerate() {
        let values: Vec<Option<f64>> = (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(cfg.seed.wrapping_add(j as u64), i, stream::ESCALATION);
                for _ in 0..10_000 {
                    let r = box_point(&mut rng, n - 1, kind.box_floor(cfg), cfg.b);
                    if k > 1 && !in_cone(&r, k - 1) {
                        continue;
                    }
                    let rb = CurvatureVector::new(r.clone()).ok()?.bundle();
                    let (a1, a0) = (rb.sigma(k as isize - 1), rb.sigma(k as isize));
                    let target = if hi > lo { rng.random_range(lo..hi) } else { lo };
                    let f = |tau: f64| t_big * tau.powi(k as i32 - 1) * a1 + tau.powi(k as i32) * a0 - target;
                    // κ_1 = T must stay the largest entry.
                    let tau_max = t_big / r[0].max(f64::MIN_POSITIVE);
                    if f(tau_max) <= 0.0 {
                        continue;
                    }
                    let (mut a, mut b) = (0.0, tau_max);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        if f(m) > 0.0 {
                            b = m;
                        } else {
                            a = m;
                        }
                    }
                    let mut v = vec![t_big];
                    v.extend(r.iter().map(|x| x * b));
                    let kappa = CurvatureVector::new(v).ok()?;
                    if !kappa.is_sorted() || !in_cone(kappa.values(), k) || !kind.side_condition(cfg, &kappa) {
                        continue;
                    }
                    return Some(kind.value(cfg, &kappa));
                }
                None
            })
            .collect();
        let got: Vec<f64> = values.into_iter().flatten().collect();
        rows.push(EscalationRow {
            kappa1: t_big,
            samples: got.len(),
            sup: got.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        });
    }
    Ok(rows)
}

fn doubling_doubt(name: &str, single: f64, double: f64) -> Option<String> {
    let scale = single.abs().max(double.abs());
    if !single.is_finite() || !double.is_finite() {
        return Some(format!("{name}: non-finite empirical value"));
    }
    if (double - single).abs() > DOUBLING_STABILITY * scale {
        return Some(format!("{name}: {single} vs {double} under sample doubling"));
    }
    None
}

/// Semi-convexity and κ_k bounds: pointwise inequality chain plus an empirical
/// sup that must be stable under doubling and must not grow with κ_1.
fn bounded_tail(id: LemmaId, cfg: &LabConfig, kind: EscalationKind) -> Result<Outcome> {
    let p = cfg.params(cfg.k, cfg.big_n);
    let t = cfg.trials;
    let samples: Vec<(u64, CurvatureVector)> = (0..2 * t as u64)
        .into_par_iter()
        .map(|i| scaled_sample(cfg, kind, i).map(|k| (i, k)))
        .collect::<Result<_>>()?;
    let admit = move |k: &CurvatureVector| kind.admits(cfg, k);

    let value = lemma_value(id, p);
    let f = Functional {
        admit: &admit,
        value: &value,
        worst: &no_worst,
        directional: false,
    };
    let search = full_search(&f, &samples[..t], cfg, cfg.k, &cfg.search);

    let ray_admit = move |k: &CurvatureVector| kind.ray_scale(cfg, k).is_some();
    let sup_value = move |k: &CurvatureVector, _: &DirectionVector| Ok(kind.ray_value(cfg, k));
    let g = Functional {
        admit: &ray_admit,
        value: &sup_value,
        worst: &no_worst,
        directional: false,
    };
    let refined = stage1(&g, &samples, cfg.seed, cfg.k, 0, &cfg.search);
    let sup_of = |s: &Search| {
        s.best().map(|c| {
            let t = kind.ray_scale(cfg, &c.kappa).expect("admitted on the ray");
            (c.value, c.kappa.values().iter().map(|x| x * t).collect::<Vec<f64>>())
        })
    };
    let single = sup_of(&stage2(&g, &refined[..t], cfg.seed, &cfg.search));
    let double = sup_of(&stage2(&g, &refined, cfg.seed, &cfg.search));

    let mut doubts = Vec::new();
    let (s1, s2, arg) = match (single, double) {
        (Some((a, _)), Some((b, arg))) => (a.max(0.0), b.max(0.0), arg),
        _ => return Err(Error::InsufficientData(format!("{id}: no admissible sample"))),
    };
    doubts.extend(doubling_doubt("empirical sup", s1, s2));

    let esc = escalation_sup(cfg, kind, t.min(2000))?;
    let first = esc.first().expect("validated").sup.max(0.0);
    let last = esc.last().expect("validated").sup.max(0.0);
    if esc.iter().any(|r| r.samples == 0) {
        doubts.push("escalation: some kappa_1 level produced no samples".into());
    } else if last > first * (1.0 + DOUBLING_STABILITY) + 1e-12 {
        doubts.push(format!("escalation: sup grows from {first} to {last} with kappa_1"));
    }

    let mut details = serde_json::Map::new();
    let label = match kind {
        EscalationKind::Semiconvex => "sup_neg_kappa_n",
        EscalationKind::UpperKappak => "sup_kappa_k",
    };
    details.insert(label.into(), json!({ "trials": s1, "doubled": s2, "argmax": arg }));
    details.insert("escalation".into(), serde_json::to_value(&esc).expect("serializable"));
    details.insert("sigma_k_range".into(), json!([cfg.sigma_range.0, cfg.sigma_range.1]));
    Ok(Outcome {
        search,
        params: p,
        trials: t,
        empirical_constant: Some(s2),
        doubts,
        details,
        exhausted: false,
    })
}

/// Empirical κ_k bound over the σ_k range, used as the floor of N.
fn kappa_k_floor(cfg: &LabConfig) -> Result<f64> {
    let kind = EscalationKind::UpperKappak;
    let count = cfg.trials.min(2000) as u64;
    let samples: Vec<(u64, CurvatureVector)> = (0..count)
        .into_par_iter()
        .map(|i| scaled_sample(cfg, kind, i).map(|k| (i, k)))
        .collect::<Result<_>>()?;
    let admit = move |k: &CurvatureVector| kind.ray_scale(cfg, k).is_some();
    let value = move |k: &CurvatureVector, _: &DirectionVector| Ok(kind.ray_value(cfg, k));
    let g = Functional {
        admit: &admit,
        value: &value,
        worst: &no_worst,
        directional: false,
    };
    let s = full_search(&g, &samples, cfg, cfg.k, &cfg.search);
    Ok(s.best().map_or(1.0, |c| c.value).max(1.0))
}

/// Huge-κ_1 samples at level N: the tail box is capped at N so that κ_k < N,
/// and up to k-2 further entries are log-uniform in [1, κ_1].
fn huge_samples(cfg: &LabConfig, big_n: f64, count: usize) -> Result<Vec<(u64, CurvatureVector)>> {
    let k = cfg.k;
    let b = cfg.b.min(big_n);
    let samplers: Vec<Sampler> = (0..k - 1)
        .map(|spread| {
            Sampler::new(SampleSpec::new(
                cfg.n,
                k,
                cfg.a,
                b,
                Stratum::HugeKappa1 { big_n, spread },
                cfg.seed,
                count,
            ))
        })
        .collect::<Result<_>>()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let s = &samplers[i as usize % samplers.len()];
            s.draw(i).map(|(kappa, _)| (i, kappa))
        })
        .collect()
}

fn huge_admit(cfg: &LabConfig, big_n: f64) -> impl Fn(&CurvatureVector) -> bool + Sync + '_ {
    let spec = SampleSpec::new(cfg.n, cfg.k, cfg.a, cfg.b, Stratum::HugeKappa1 { big_n, spread: 0 }, cfg.seed, 1);
    move |kappa: &CurvatureVector| spec.admits(kappa) && kappa.values()[cfg.k - 1] < big_n
}

fn lu(cfg: &LabConfig) -> Result<Outcome> {
    let floor = kappa_k_floor(cfg)?;
    let mut levels = Vec::new();
    let mut last: Option<(Search, PointParams)> = None;
    let mut found = None;
    for &big_n in cfg.ladder.iter().filter(|&&x| x > floor) {
        if !huge_threshold(big_n, cfg.k).is_finite() {
            break;
        }
        let p = cfg.params(cfg.k, big_n);
        let samples = huge_samples(cfg, big_n, cfg.trials)?;
        let admit = huge_admit(cfg, big_n);
        let value = lemma_value(LemmaId::Lu, p);
        let worst = lemma_worst(LemmaId::Lu, p);
        let f = Functional {
            admit: &admit,
            value: &value,
            worst: &worst,
            directional: true,
        };
        let search = full_search(&f, &samples, cfg, cfg.k, &cfg.search);
        let violations = search.exceeding(LemmaId::Lu.tolerance());
        let worst_value = search.best().map(|c| c.value);
        levels.push(json!({
            "N": big_n,
            "violations": violations,
            "worst_violation": worst_value,
            "skipped": search.skipped,
        }));
        let clean = violations == 0 && worst_value.is_some();
        last = Some((search, p));
        if clean {
            found = Some(big_n);
            break;
        }
    }
    let (search, params) = last.ok_or_else(|| Error::invalid(format!("ladder has no level above the floor {floor}")))?;
    let mut doubts = Vec::new();
    if found.is_none() {
        doubts.push("ladder exhausted without a violation-free level".into());
    }
    let mut details = serde_json::Map::new();
    details.insert("floor".into(), json!(floor));
    details.insert("levels".into(), json!(levels));
    details.insert("epsilon".into(), json!(cfg.epsilon));
    Ok(Outcome {
        search,
        params,
        trials: cfg.trials,
        empirical_constant: found,
        doubts,
        details,
        exhausted: found.is_none(),
    })
}

fn prop_ln(cfg: &LabConfig) -> Result<Outcome> {
    let big_n = cfg.big_n;
    let p = cfg.params(cfg.k, big_n);
    let samples = huge_samples(cfg, big_n, cfg.trials)?;
    let value = lemma_value(LemmaId::PropLN, p);
    let admit = huge_admit(cfg, big_n);
    let f = Functional {
        admit: &admit,
        value: &value,
        worst: &no_worst,
        directional: false,
    };
    let search = full_search(&f, &samples, cfg, cfg.k, &no_search());
    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut max_kk = f64::NEG_INFINITY;
    for (_, kappa) in &samples {
        let key = match point::prop_ln_index(kappa, cfg.k, big_n) {
            Some(l) => l.to_string(),
            None => "none".into(),
        };
        *histogram.entry(key).or_default() += 1;
        max_kk = max_kk.max(kappa.values()[cfg.k - 1]);
    }
    // The role of N > C(σ_k, n, A) is to force κ_k < N; the samples enforce
    // that pointwise, so a global floor above N is reported but not held
    // against the verdict.
    let floor = kappa_k_floor(cfg)?;
    let mut details = serde_json::Map::new();
    details.insert("gap_index_counts".into(), json!(histogram));
    details.insert("thresholds".into(), json!(point::gap_thresholds(big_n, cfg.k)));
    details.insert("max_kappa_k".into(), json!(max_kk));
    details.insert("kappa_k_floor".into(), json!(floor));
    details.insert("n_exceeds_floor".into(), json!(big_n > floor));
    Ok(Outcome {
        search,
        params: p,
        trials: samples.len(),
        empirical_constant: Some(big_n),
        doubts: Vec::new(),
        details,
        exhausted: false,
    })
}

fn lem_hg(cfg: &LabConfig) -> Result<Outcome> {
    let k = cfg.k;
    let t = cfg.trials;
    let p = cfg.params(k, cfg.big_n);
    let (samples, stats) = cone_samples(cfg, k, 2 * t)?;
    let spec = interior_spec(cfg, k, 1);
    let admit = move |kv: &CurvatureVector| spec.admits(kv);

    let value = lemma_value(LemmaId::LemHG, p);
    let worst = lemma_worst(LemmaId::LemHG, p);
    let f = Functional {
        admit: &admit,
        value: &value,
        worst: &worst,
        directional: true,
    };
    let search = full_search(&f, &samples[..t], cfg, k, &cfg.search);

    let neg_ratio = move |kv: &CurvatureVector, _: &DirectionVector| {
        point::lem_hg_min_ratio(kv, k)?
            .map(|r| -r)
            .ok_or_else(|| Error::Degenerate("right-hand sum vanishes on a direction".into()))
    };
    let g = Functional {
        admit: &admit,
        value: &neg_ratio,
        worst: &no_worst,
        directional: false,
    };
    let refined = stage1(&g, &samples, cfg.seed, k, 0, &cfg.search);
    let s1 = stage2(&g, &refined[..t], cfg.seed, &cfg.search);
    let s2 = stage2(&g, &refined, cfg.seed, &cfg.search);
    let mut doubts = Vec::new();
    let (inf1, inf2, arg, ratio_skipped) = match (s1.best(), s2.best()) {
        (Some(a), Some(b)) => (-a.value, -b.value, b.kappa.values().to_vec(), s2.skipped),
        _ => return Err(Error::InsufficientData("lemHG: no sample with a finite ratio".into())),
    };
    if inf2 <= 1e-9 {
        doubts.push(format!("ratio infimum {inf2} is not bounded away from zero"));
    }
    doubts.extend(doubling_doubt("ratio infimum", inf1, inf2));

    let mut details = serde_json::Map::new();
    details.insert("sampling".into(), stats);
    details.insert(
        "ratio".into(),
        json!({ "trials": inf1, "doubled": inf2, "argmin": arg, "skipped": ratio_skipped }),
    );
    details.insert("orthogonal".into(), lem_hg_orthogonal(cfg, &mut doubts));
    Ok(Outcome {
        search,
        params: p,
        trials: t,
        empirical_constant: Some(inf2),
        doubts,
        details,
        exhausted: false,
    })
}

/// Orthogonal-stratum constant on gap samples with a negative tail.
fn lem_hg_orthogonal(cfg: &LabConfig, doubts: &mut Vec<String>) -> serde_json::Value {
    let k = cfg.k;
    if k < 3 {
        return json!({ "status": "not applicable for k < 3" });
    }
    let l = cfg.gap_l.unwrap_or(k - 2);
    let spec = SampleSpec::new(cfg.n, k, cfg.a, cfg.b, Stratum::Gap { l, m: cfg.gap_m }, cfg.seed, cfg.trials)
        .with_negative_tail()
        .with_retry_cap(100_000);
    let batch = match Sampler::new(spec).and_then(|s| s.sample()) {
        Ok(b) => b,
        Err(e) => return json!({ "status": e.to_string() }),
    };
    let values: Vec<std::result::Result<Option<f64>, String>> = batch
        .samples
        .par_iter()
        .map(|kv| point::lem_hg_orthogonal_constant(kv, k, l).map_err(|e| e.to_string()))
        .collect();
    let mut min = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut skipped = 0;
    for (v, kv) in values.iter().zip(&batch.samples) {
        match v {
            Ok(Some(c)) if *c < min => {
                min = *c;
                argmin = kv.values().to_vec();
            }
            Ok(Some(_)) => {}
            _ => skipped += 1,
        }
    }
    if min.is_finite() && min <= 0.0 {
        doubts.push(format!("orthogonal variant constant {min} is not positive"));
    }
    json!({
        "l": l,
        "M": cfg.gap_m,
        "samples": batch.samples.len(),
        "skipped": skipped,
        "min_constant": if min.is_finite() { Some(min) } else { None },
        "argmin": argmin,
        "acceptance_rate": batch.stats.acceptance_rate,
    })
}
