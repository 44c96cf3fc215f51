//! Seeded samplers for strata of the Garding cone Γ_k and a local
//! falsification search used by the inequality checkers.
//!
//! Every draw is a deterministic function of `(seed, index, stream)`: the
//! trial generator is ChaCha8 seeded with `seed ^ index`, and `stream`
//! separates independent uses of the same trial index.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symfun::{CurvatureVector, DirectionVector, SymBundle};

pub const DEFAULT_RETRY_CAP: u64 = 1_000_000;

/// Cap on pattern moves after one accepted proposal.
const EXTRAPOLATION_STEPS: usize = 16;

/// Stream ids for [`trial_rng`].
pub mod stream {
    pub const SAMPLE: u64 = 0;
    pub const DIRECTION: u64 = 1;
    pub const REFINE: u64 = 2;
    pub const ESCALATION: u64 = 3;
}

/// Generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Stratum {
    /// Uniform on the box, sorted, rejected outside Γ_k.
    Interior,
    /// Within a relative distance in [1e-6, 1e-2] of ∂Γ_k along a box chord.
    NearBoundary,
    /// κ_l ≥ M² and κ_{l+1} ≤ M.
    Gap { l: usize, m: f64 },
    /// κ_1 = N^{2^{k-1}}(1 + U[0,1]); `spread` further entries log-uniform in [1, κ_1].
    HugeKappa1 { big_n: f64, spread: usize },
}

impl Stratum {
    pub fn name(&self) -> String {
        match self {
            Stratum::Interior => "interior".into(),
            Stratum::NearBoundary => "near_boundary".into(),
            Stratum::Gap { l, m } => format!("gap(l={l}, M={m})"),
            Stratum::HugeKappa1 { big_n, spread } => {
                format!("huge_kappa1(N={big_n}, spread={spread})")
            }
        }
    }
}

/// κ_1 threshold N^{2^{k-1}} of the huge-κ_1 stratum.
pub fn huge_threshold(big_n: f64, k: usize) -> f64 {
    big_n.powf(2f64.powi(k as i32 - 1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub n: usize,
    pub k: usize,
    /// Semi-convexity bound: κ_i ≥ -A.
    #[serde(rename = "A")]
    pub a: f64,
    /// Upper end of the component box [-A, B].
    #[serde(rename = "B")]
    pub b: f64,
    pub stratum: Stratum,
    pub seed: u64,
    pub count: usize,
    pub retry_cap: u64,
    /// Additionally require κ_n < 0.
    pub negative_tail: bool,
}

impl SampleSpec {
    pub fn new(n: usize, k: usize, a: f64, b: f64, stratum: Stratum, seed: u64, count: usize) -> Self {
        SampleSpec {
            n,
            k,
            a,
            b,
            stratum,
            seed,
            count,
            retry_cap: DEFAULT_RETRY_CAP,
            negative_tail: false,
        }
    }

    pub fn with_negative_tail(mut self) -> Self {
        self.negative_tail = true;
        self
    }

    pub fn with_retry_cap(mut self, cap: u64) -> Self {
        self.retry_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("n = {} < 2", self.n)));
        }
        if self.k < 1 || self.k > self.n {
            return Err(Error::invalid(format!("k = {} outside 1..={}", self.k, self.n)));
        }
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::invalid("box bounds A and B must be positive and finite"));
        }
        if self.count < 1 || self.retry_cap < 1 {
            return Err(Error::invalid("count and retry cap must be at least 1"));
        }
        match self.stratum {
            Stratum::Gap { l, m } => {
                if l < 1 || l + 1 > self.k || l >= self.n {
                    return Err(Error::invalid(format!(
                        "gap stratum needs 1 <= l <= k-1, got l = {l}, k = {}",
                        self.k
                    )));
                }
                if !(m > 1.0 && m.is_finite()) {
                    return Err(Error::invalid(format!("gap stratum needs M > 1, got {m}")));
                }
            }
            Stratum::HugeKappa1 { big_n, spread } => {
                if !(big_n > 1.0) || !huge_threshold(big_n, self.k).is_finite() {
                    return Err(Error::invalid(format!("huge_kappa1 needs finite N > 1, got {big_n}")));
                }
                if spread + 1 >= self.n {
                    return Err(Error::invalid("huge_kappa1 spread must leave a tail"));
                }
            }
            Stratum::Interior | Stratum::NearBoundary => {}
        }
        Ok(())
    }

    /// Stratum predicate, including Γ_k membership and the box floor.
    pub fn admits(&self, kappa: &CurvatureVector) -> bool {
        let v = kappa.values();
        if v.len() != self.n || !kappa.is_sorted() {
            return false;
        }
        let last = v[self.n - 1];
        if last < -self.a || (self.negative_tail && last >= 0.0) {
            return false;
        }
        if !in_cone(v, self.k) {
            return false;
        }
        match self.stratum {
            Stratum::Interior | Stratum::NearBoundary => true,
            Stratum::Gap { l, m } => v[l - 1] >= m * m && v[l] <= m,
            Stratum::HugeKappa1 { big_n, .. } => v[0] >= huge_threshold(big_n, self.k),
        }
    }
}

pub(crate) fn in_cone(values: &[f64], k: usize) -> bool {
    SymBundle::from_kappa(&CurvatureVector::new(values.to_vec()).expect("validated"))
        .in_gamma_k(k)
        .unwrap_or(false)
}

/// One uniform box point in [lo, hi]^n, sorted descending.
pub fn box_point<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Uniform direction on the unit sphere.
pub fn unit_direction<R: Rng>(rng: &mut R, n: usize) -> DirectionVector {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return DirectionVector::new(v.into_iter().map(|x| x / norm).collect())
                .expect("finite");
        }
    }
}

/// Random direction whose trailing block `l..n` is orthogonal to `κ_{l+1..n}`.
pub fn orthogonal_tail_direction<R: Rng>(rng: &mut R, kappa: &[f64], l: usize) -> DirectionVector {
    let n = kappa.len();
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let tail = &kappa[l..];
    let tt: f64 = tail.iter().map(|x| x * x).sum();
    if tt > 0.0 {
        let c = v[l..].iter().zip(tail).map(|(a, b)| a * b).sum::<f64>() / tt;
        for (x, t) in v[l..].iter_mut().zip(tail) {
            *x -= c * t;
        }
    }
    DirectionVector::new(v).expect("finite")
}

/// Coordinate directions, κ itself, and one tail-orthogonal vector per `l < k`.
pub fn structured_directions<R: Rng>(rng: &mut R, kappa: &CurvatureVector, k: usize) -> Vec<DirectionVector> {
    let n = kappa.n();
    let mut out: Vec<DirectionVector> = (0..n).map(|i| DirectionVector::coordinate(n, i)).collect();
    out.push(DirectionVector::new(kappa.values().to_vec()).expect("finite"));
    for l in 1..k.min(n) {
        out.push(orthogonal_tail_direction(rng, kappa.values(), l));
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub accepted: usize,
    pub attempts: u64,
    pub max_attempts: u64,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub samples: Vec<CurvatureVector>,
    pub stats: SampleStats,
}

#[derive(Debug, Clone)]
pub struct Sampler {
    spec: SampleSpec,
}

impl Sampler {
    pub fn new(spec: SampleSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Sampler { spec })
    }

    pub fn spec(&self) -> &SampleSpec {
        &self.spec
    }

    fn exhausted(&self, attempts: u64) -> Error {
        Error::SamplerExhausted {
            stratum: self.spec.stratum.name(),
            attempts,
        }
    }

    /// Draw sample `index`; returns the vector and the number of attempts used.
    pub fn draw(&self, index: u64) -> Result<(CurvatureVector, u64)> {
        let s = &self.spec;
        let mut rng = trial_rng(s.seed, index, stream::SAMPLE);
        for attempt in 1..=s.retry_cap {
            if let Some(v) = self.propose(&mut rng) {
                let kappa = CurvatureVector::new(v)?;
                if s.admits(&kappa) {
                    return Ok((kappa, attempt));
                }
            }
        }
        Err(self.exhausted(s.retry_cap))
    }

    fn propose(&self, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let s = &self.spec;
        let (n, k) = (s.n, s.k);
        match s.stratum {
            Stratum::Interior => Some(box_point(rng, n, -s.a, s.b)),
            Stratum::NearBoundary => {
                let inside = box_point(rng, n, -s.a, s.b);
                if !in_cone(&inside, k) {
                    return None;
                }
                let outside = box_point(rng, n, -s.a, s.b);
                if in_cone(&outside, k) {
                    return None;
                }
                let at = |t: f64| -> Vec<f64> {
                    inside
                        .iter()
                        .zip(&outside)
                        .map(|(x, y)| x + t * (y - x))
                        .collect()
                };
                // Γ_k is convex, so the chord leaves it exactly once.
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if in_cone(&at(mid), k) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let delta = 10f64.powf(rng.random_range(-6.0..-2.0));
                Some(at(lo * (1.0 - delta)))
            }
            Stratum::Gap { l, m } => {
                let mut v: Vec<f64> = (0..l).map(|_| m * m * (1.0 + rng.random::<f64>())).collect();
                let hi = s.b.min(m);
                v.extend((l..n).map(|_| rng.random_range(-s.a..hi)));
                v.sort_by(|a, b| b.total_cmp(a));
                Some(v)
            }
            Stratum::HugeKappa1 { big_n, spread } => {
                let k1 = huge_threshold(big_n, k) * (1.0 + rng.random::<f64>());
                let mut v = vec![k1];
                let log_top = k1.ln();
                v.extend((0..spread).map(|_| rng.random_range(0.0..log_top).exp()));
                v.extend((spread + 1..n).map(|_| rng.random_range(-s.a..s.b)));
                v.sort_by(|a, b| b.total_cmp(a));
                Some(v)
            }
        }
    }

    /// Lazily draws samples `0..count` in order.
    pub fn iter(&self) -> impl Iterator<Item = Result<CurvatureVector>> + '_ {
        (0..self.spec.count as u64).map(move |i| self.draw(i).map(|(k, _)| k))
    }

    /// Draws all samples; parallel over indices, merged in index order.
    pub fn sample(&self) -> Result<SampleBatch> {
        let draws: Vec<Result<(CurvatureVector, u64)>> = (0..self.spec.count as u64)
            .into_par_iter()
            .map(|i| self.draw(i))
            .collect();
        let mut samples = Vec::with_capacity(draws.len());
        let mut stats = SampleStats::default();
        for d in draws {
            let (kappa, attempts) = d?;
            stats.attempts += attempts;
            stats.max_attempts = stats.max_attempts.max(attempts);
            samples.push(kappa);
        }
        stats.accepted = samples.len();
        stats.acceptance_rate = stats.accepted as f64 / stats.attempts as f64;
        Ok(SampleBatch { samples, stats })
    }
}

pub fn sample(spec: &SampleSpec) -> Result<SampleBatch> {
    Sampler::new(spec.clone())?.sample()
}

/// A violation functional: positive values are counterexamples.
pub trait Objective: Sync {
    fn admissible(&self, kappa: &CurvatureVector) -> bool;

    fn violation(&self, kappa: &CurvatureVector, xi: &DirectionVector) -> Result<f64>;

    /// Exact maximizing direction at `kappa`, when the functional is a quadratic form in ξ.
    fn worst_direction(&self, _kappa: &CurvatureVector) -> Result<Option<DirectionVector>> {
        Ok(None)
    }

    /// Whether ξ should be perturbed by the search.
    fn uses_direction(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub rounds: usize,
    /// Initial relative step.
    pub step: f64,
    pub seed: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            rounds: 200,
            step: 0.05,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Refined {
    pub kappa: CurvatureVector,
    pub xi: DirectionVector,
    pub value: f64,
    pub evaluations: usize,
}

fn evaluate<O: Objective + ?Sized>(
    objective: &O,
    kappa: &CurvatureVector,
    xi: &DirectionVector,
) -> Result<(DirectionVector, f64)> {
    let wrap = |e: Error| Error::Objective {
        kappa: kappa.values().to_vec(),
        xi: xi.values().to_vec(),
        source: Box::new(e),
    };
    let xi = match objective.worst_direction(kappa).map_err(wrap)? {
        Some(d) => d,
        None => xi.clone(),
    };
    let v = objective.violation(kappa, &xi).map_err(wrap)?;
    Ok((xi, v))
}

/// Moves an inadmissible start inward along the positive diagonal.
fn project_inward<O: Objective + ?Sized>(objective: &O, kappa: &CurvatureVector) -> Result<CurvatureVector> {
    if objective.admissible(kappa) {
        return Ok(kappa.clone());
    }
    let scale = kappa.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut t = 1e-12 * scale;
    for _ in 0..100 {
        let shifted: Vec<f64> = kappa.values().iter().map(|v| v + t).collect();
        let cand = CurvatureVector::sorted(shifted)?;
        if objective.admissible(&cand) {
            return Ok(cand);
        }
        t *= 2.0;
    }
    Err(Error::SamplerExhausted {
        stratum: "adversarial start".into(),
        attempts: 100,
    })
}

/// Repeats an accepted κ move with doubling length while it keeps improving.
fn extrapolate<O: Objective + ?Sized>(objective: &O, best: &mut Refined, delta: &[f64]) -> Result<()> {
    let mut factor = 1.0;
    for _ in 0..EXTRAPOLATION_STEPS {
        let kv: Vec<f64> = best.kappa.values().iter().zip(delta).map(|(x, d)| x + factor * d).collect();
        if kv.iter().any(|v| !v.is_finite()) {
            break;
        }
        let cand = CurvatureVector::sorted(kv)?;
        if !objective.admissible(&cand) {
            break;
        }
        best.evaluations += 1;
        match evaluate(objective, &cand, &best.xi) {
            Ok((xi, v)) if v > best.value => {
                best.kappa = cand;
                best.xi = xi;
                best.value = v;
                factor *= 2.0;
            }
            _ => break,
        }
    }
    Ok(())
}

/// Local maximization of a violation functional from `(kappa0, xi0)`,
/// alternating coordinate moves, full moves of κ and moves of ξ, with
/// proposals outside the admissible stratum rejected.
pub fn adversarial_refine<O: Objective + ?Sized>(
    kappa0: &CurvatureVector,
    xi0: &DirectionVector,
    objective: &O,
    cfg: &RefineConfig,
) -> Result<Refined> {
    let start = project_inward(objective, kappa0)?;
    let (xi, value) = evaluate(objective, &start, xi0)?;
    let mut best = Refined {
        kappa: start,
        xi,
        value,
        evaluations: 1,
    };
    let n = best.kappa.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream::REFINE);
    let mut step = cfg.step;
    for round in 0..cfg.rounds {
        let mode = round % 3;
        let mut kv = best.kappa.values().to_vec();
        let mut xv = best.xi.values().to_vec();
        match mode {
            0 => {
                // A block of neighbours moves together so that tied entries
                // can travel as a group.
                let i = (round / 3) % n;
                let len = rng.random_range(1..=n - i);
                let g: f64 = rng.sample(StandardNormal);
                for x in &mut kv[i..i + len] {
                    *x += step * x.abs().max(1.0) * g;
                }
            }
            1 => {
                for x in kv.iter_mut() {
                    let g: f64 = rng.sample(StandardNormal);
                    *x += step * x.abs().max(1.0) * g;
                }
            }
            _ => {
                if objective.uses_direction() {
                    for x in xv.iter_mut() {
                        let g: f64 = rng.sample(StandardNormal);
                        *x += step * g;
                    }
                    let norm = xv.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        xv.iter_mut().for_each(|x| *x /= norm);
                    }
                } else {
                    let i = rng.random_range(0..n);
                    let g: f64 = rng.sample(StandardNormal);
                    kv[i] += step * kv[i].abs().max(1.0) * g;
                }
            }
        }
        if kv.iter().chain(&xv).any(|v| !v.is_finite()) {
            step *= 0.5;
            continue;
        }
        let cand = CurvatureVector::sorted(kv)?;
        if !objective.admissible(&cand) {
            step *= 0.5;
        } else {
            let xi = DirectionVector::new(xv)?;
            best.evaluations += 1;
            // A degenerate proposal is treated like an inadmissible one.
            let Ok((xi, v)) = evaluate(objective, &cand, &xi) else {
                step *= 0.5;
                if step < 1e-10 {
                    step = cfg.step;
                }
                continue;
            };
            if v > best.value {
                let delta: Vec<f64> = cand.values().iter().zip(best.kappa.values()).map(|(a, b)| a - b).collect();
                best.kappa = cand;
                best.xi = xi;
                best.value = v;
                extrapolate(objective, &mut best, &delta)?;
                step = (step * 1.5).min(0.5);
            } else {
                step *= 0.7;
            }
        }
        if step < 1e-10 {
            step = cfg.step;
        }
    }
    Ok(best)
}
