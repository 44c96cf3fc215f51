//! Radial σ_k Plateau problem: u(r) on [0, R] with P_k(κ[u]) = σ, u'(0) = 0
//! and u(R) = ε, solved by damped Newton on a tridiagonal collocation
//! system and continued along a decreasing schedule of ε.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::binomial;
use crate::error::{Error, Result};
use crate::hygeo::{cap_height, cap_parameters, csv_io, fmt_f64, line_derivatives, pk_two_value};

/// Smallest damping factor tried by the line search.
pub const MIN_STEP: f64 = 1.0 / (1u64 << 20) as f64;
/// Exponent L of the test function Q = ln κ_1 - L ln ν.
pub const Q_EXPONENT: f64 = 4.0;
/// Allowed last-to-first growth of the a priori quantities.
pub const APRIORI_RATIO: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Convergence threshold on max |residual|. At M = 2048 the residual
    /// stalls near 1e-10 from cancellation in the second difference, so the
    /// default sits one decade above that floor.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial step length in (0, 1].
    pub damping: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol: 1e-9,
            max_iters: 50,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// Exact cap through the current boundary height, at every ε.
    Cap,
    /// Cap at the first ε, then the previous solution shifted to the new height.
    Previous,
    /// Horosphere u ≡ ε_1 at the first ε, then as `Previous`.
    Flat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    pub k: usize,
    pub sigma: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub epsilons: Vec<f64>,
    /// Number of intervals M; nodes are r_i = i R / M.
    pub nodes: usize,
    pub newton: NewtonConfig,
    pub init: Init,
}

impl SolverConfig {
    pub fn new(n: usize, k: usize, sigma: f64, radius: f64, epsilons: Vec<f64>) -> Self {
        SolverConfig {
            n,
            k,
            sigma,
            radius,
            epsilons,
            nodes: 2048,
            newton: NewtonConfig::default(),
            init: Init::Previous,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::invalid(format!("sigma = {} outside (0, 1)", self.sigma)));
        }
        if self.k < 2 || self.k > self.n {
            return Err(Error::invalid(format!("need 2 <= k <= n, got k = {}, n = {}", self.k, self.n)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!("R = {} must be positive", self.radius)));
        }
        if self.epsilons.is_empty()
            || self.epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite()))
            || self.epsilons.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::invalid("epsilon schedule must be positive and strictly decreasing"));
        }
        if self.nodes < 4 {
            return Err(Error::invalid("need at least 4 grid intervals"));
        }
        let nw = &self.newton;
        if !(nw.tol > 0.0) || nw.max_iters < 1 || !(nw.damping > 0.0 && nw.damping <= 1.0) {
            return Err(Error::invalid("newton needs tol > 0, max_iters >= 1, damping in (0, 1]"));
        }
        Ok(())
    }

    /// Whether k lies in the range 2 ≤ k ≤ n-2 of the curvature estimate.
    pub fn in_theorem_range(&self) -> bool {
        self.k >= 2 && self.k + 2 <= self.n
    }

    pub fn h(&self) -> f64 {
        self.radius / self.nodes as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.h();
        (0..=self.nodes).map(|i| i as f64 * h).collect()
    }

    /// Umbilic curvature σ^{1/k} of the cap solutions.
    pub fn cap_curvature(&self) -> f64 {
        self.sigma.powf(1.0 / self.k as f64)
    }
}

/// Curvatures of the rotation hypersurface at a node from (r, u, u', u'').
fn curvatures(r: f64, u: f64, p: f64, q: f64) -> (f64, f64) {
    let w2 = 1.0 + p * p;
    let w = w2.sqrt();
    let nu = 1.0 / w;
    let k_rad = u * q / (w2 * w) + nu;
    let k_ang = if r == 0.0 { k_rad } else { u * p / (r * w) + nu };
    (k_rad, k_ang)
}

/// σ_j of the two-value spectrum for j = 1..=k, all positive.
fn two_value_in_cone(n: usize, k: usize, k_rad: f64, k_ang: f64) -> bool {
    (1..=k).all(|j| {
        let s = binomial(n - 1, j) * k_ang.powi(j as i32) + binomial(n - 1, j - 1) * k_rad * k_ang.powi(j as i32 - 1);
        s > 0.0
    })
}

/// ∂P_k/∂κ_rad and the total ∂P_k/∂κ_ang over the n-1 angular copies.
fn pk_partials(n: usize, k: usize, k_rad: f64, k_ang: f64) -> (f64, f64) {
    let c = binomial(n, k);
    let d_rad = binomial(n - 1, k - 1) * k_ang.powi(k as i32 - 1) / c;
    let minor_ang = binomial(n - 2, k - 1) * k_ang.powi(k as i32 - 1)
        + binomial(n - 2, k - 2) * k_rad * k_ang.powi(k as i32 - 2);
    (d_rad, (n - 1) as f64 * minor_ang / c)
}

/// Stencil derivatives used by the solver: reflection at the axis, central
/// elsewhere, one-sided at the rim.
pub fn derivatives(u: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    line_derivatives(u, h, true)
}

/// Collocation residual: rows 0..M are P_k(κ(r_i)) - σ (the axis row uses the
/// reflection u_{-1} = u_1, which encodes u'(0) = 0); row M is u_M - ε.
/// The flag is set when some collocation node leaves Γ_k.
pub fn residual(u: &[f64], cfg: &SolverConfig, eps: f64) -> (Vec<f64>, bool) {
    let h = cfg.h();
    let m = u.len() - 1;
    let (d1, d2) = derivatives(u, h);
    let mut out = Vec::with_capacity(m + 1);
    let mut lost = false;
    for i in 0..m {
        let (kr, ka) = curvatures(i as f64 * h, u[i], d1[i], d2[i]);
        lost |= !two_value_in_cone(cfg.n, cfg.k, kr, ka);
        out.push(pk_two_value(cfg.n, cfg.k, kr, ka) - cfg.sigma);
    }
    out.push(u[m] - eps);
    (out, lost)
}

/// Tridiagonal Jacobian of [`residual`]: (sub, diag, sup).
pub fn jacobian(u: &[f64], cfg: &SolverConfig) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let h = cfg.h();
    let m = u.len() - 1;
    let (d1, d2) = derivatives(u, h);
    let mut sub = vec![0.0; m + 1];
    let mut diag = vec![0.0; m + 1];
    let mut sup = vec![0.0; m + 1];
    for i in 0..m {
        let r = i as f64 * h;
        let (uu, p, q) = (u[i], d1[i], d2[i]);
        let (kr, ka) = curvatures(r, uu, p, q);
        let (d_rad, d_ang) = pk_partials(cfg.n, cfg.k, kr, ka);
        let w2 = 1.0 + p * p;
        let w = w2.sqrt();
        let w3 = w2 * w;
        // ∂κ/∂(u, p, q).
        let (kr_u, kr_p, kr_q, ka_u, ka_p, ka_q) = if r == 0.0 {
            (q, 0.0, uu, q, 0.0, uu)
        } else {
            (
                q / w3,
                -3.0 * uu * q * p / (w3 * w2) - p / w3,
                uu / w3,
                p / (r * w),
                uu / (r * w3) - p / w3,
                0.0,
            )
        };
        let f_u = d_rad * kr_u + d_ang * ka_u;
        let f_p = d_rad * kr_p + d_ang * ka_p;
        let f_q = d_rad * kr_q + d_ang * ka_q;
        let hh = h * h;
        if i == 0 {
            diag[0] = f_u - 2.0 * f_q / hh;
            sup[0] = 2.0 * f_q / hh;
        } else {
            sub[i] = -f_p / (2.0 * h) + f_q / hh;
            diag[i] = f_u - 2.0 * f_q / hh;
            sup[i] = f_p / (2.0 * h) + f_q / hh;
        }
    }
    diag[m] = 1.0;
    (sub, diag, sup)
}

/// Thomas algorithm for `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`.
pub fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::Degenerate("zero pivot in tridiagonal solve".into()));
    }
    c[0] = sup[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - sub[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::Degenerate("zero pivot in tridiagonal solve".into()));
        }
        c[i] = if i + 1 < n { sup[i] / beta } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / beta;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Converged (or last) profile at one boundary height with derived fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub epsilon: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    pub d2u: Vec<f64>,
    pub kappa_rad: Vec<f64>,
    pub kappa_ang: Vec<f64>,
    pub nu: Vec<f64>,
    pub q: Vec<f64>,
    pub iters: usize,
    pub max_residual: f64,
    pub converged: bool,
    pub elliptic: bool,
}

impl RadialProfile {
    pub fn from_values(cfg: &SolverConfig, epsilon: f64, u: Vec<f64>) -> Self {
        let h = cfg.h();
        let r = cfg.grid();
        let (du, d2u) = derivatives(&u, h);
        let mut kappa_rad = Vec::with_capacity(u.len());
        let mut kappa_ang = Vec::with_capacity(u.len());
        let mut nu = Vec::with_capacity(u.len());
        let mut q = Vec::with_capacity(u.len());
        let mut elliptic = true;
        for i in 0..u.len() {
            let (kr, ka) = curvatures(r[i], u[i], du[i], d2u[i]);
            let n_i = 1.0 / (1.0 + du[i] * du[i]).sqrt();
            elliptic &= two_value_in_cone(cfg.n, cfg.k, kr, ka);
            kappa_rad.push(kr);
            kappa_ang.push(ka);
            nu.push(n_i);
            q.push(kr.max(ka).ln() - Q_EXPONENT * n_i.ln());
        }
        let (res, lost) = residual(&u, cfg, epsilon);
        RadialProfile {
            epsilon,
            r,
            u,
            du,
            d2u,
            kappa_rad,
            kappa_ang,
            nu,
            q,
            iters: 0,
            max_residual: max_abs(&res),
            converged: false,
            elliptic: elliptic && !lost,
        }
    }

    pub fn max_abs_kappa(&self) -> f64 {
        max_abs(&self.kappa_rad).max(max_abs(&self.kappa_ang))
    }

    pub fn min_kappa(&self) -> f64 {
        self.kappa_rad
            .iter()
            .chain(&self.kappa_ang)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_nu(&self) -> f64 {
        self.nu.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_q(&self) -> f64 {
        self.q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Writes `r, u, kappa_rad, kappa_ang, nu, Q`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["r", "u", "kappa_rad", "kappa_ang", "nu", "Q"]).map_err(csv_io)?;
        for i in 0..self.r.len() {
            let rec = [self.r[i], self.u[i], self.kappa_rad[i], self.kappa_ang[i], self.nu[i], self.q[i]];
            w.write_record(rec.iter().map(|v| fmt_f64(*v))).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples of the exact cap through u(R) = ε with κ ≡ σ^{1/k}.
pub fn cap_profile(cfg: &SolverConfig, eps: f64) -> Result<Vec<f64>> {
    let (rho, d) = cap_parameters(cfg.cap_curvature(), cfg.radius, eps)?;
    Ok(cfg.grid().iter().map(|&r| cap_height(rho, d, r)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveFailure {
    pub epsilon: f64,
    pub iters: usize,
    pub max_residual: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Continuation {
    /// Converged profiles in schedule order.
    pub profiles: Vec<RadialProfile>,
    /// Set when the schedule halted.
    pub failure: Option<SolveFailure>,
}

/// Damped Newton at one boundary height from `u0`.
pub fn newton(cfg: &SolverConfig, eps: f64, u0: Vec<f64>) -> std::result::Result<RadialProfile, (RadialProfile, String)> {
    let nw = cfg.newton;
    let mut u = u0;
    let (mut res, mut lost) = residual(&u, cfg, eps);
    let mut norm = max_abs(&res);
    let mut iters = 0;
    let finish = |u: Vec<f64>, iters: usize, converged: bool| {
        let mut p = RadialProfile::from_values(cfg, eps, u);
        p.iters = iters;
        p.converged = converged;
        p
    };
    while !(norm <= nw.tol && !lost) {
        if iters == nw.max_iters {
            return Err((finish(u, iters, false), format!("no convergence in {} iterations", nw.max_iters)));
        }
        iters += 1;
        let (sub, diag, sup) = jacobian(&u, cfg);
        let rhs: Vec<f64> = res.iter().map(|x| -x).collect();
        let delta = match solve_tridiagonal(&sub, &diag, &sup, &rhs) {
            Ok(d) => d,
            Err(e) => return Err((finish(u, iters, false), e.to_string())),
        };
        let mut t = nw.damping;
        let mut accepted = false;
        while t >= MIN_STEP {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + t * d).collect();
            let positive = trial[..trial.len() - 1].iter().all(|&v| v > 0.0);
            if positive {
                let (r2, lost2) = residual(&trial, cfg, eps);
                let n2 = max_abs(&r2);
                if !lost2 && n2 < norm {
                    u = trial;
                    res = r2;
                    lost = lost2;
                    norm = n2;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            let reason = if lost {
                "ellipticity lost".to_string()
            } else {
                format!("line search stalled at max residual {norm:e}")
            };
            return Err((finish(u, iters, false), reason));
        }
    }
    Ok(finish(u, iters, true))
}

/// ε-continuation along the schedule; stops at the first failure.
pub fn solve(cfg: &SolverConfig) -> Result<Continuation> {
    cfg.validate()?;
    let mut profiles: Vec<RadialProfile> = Vec::new();
    for (j, &eps) in cfg.epsilons.iter().enumerate() {
        let u0 = match (cfg.init, profiles.last()) {
            (Init::Cap, _) | (Init::Previous, None) => cap_profile(cfg, eps)?,
            (Init::Flat, None) => vec![cfg.epsilons[0]; cfg.nodes + 1],
            (_, Some(prev)) => {
                let shift = cfg.epsilons[j - 1] - eps;
                prev.u.iter().map(|v| v - shift).collect()
            }
        };
        match newton(cfg, eps, u0) {
            Ok(p) => profiles.push(p),
            Err((p, reason)) => {
                return Ok(Continuation {
                    profiles,
                    failure: Some(SolveFailure {
                        epsilon: eps,
                        iters: p.iters,
                        max_residual: p.max_residual,
                        reason,
                    }),
                })
            }
        }
    }
    Ok(Continuation { profiles, failure: None })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriRow {
    pub epsilon: f64,
    pub max_abs_kappa: f64,
    pub min_nu: f64,
    pub min_kappa: f64,
    /// min κ + A; negative means semi-convexity with this A fails.
    pub semiconvex_margin: f64,
    #[serde(rename = "max_Q")]
    pub max_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub rows: Vec<AprioriRow>,
    /// Last-to-first ratio of max |κ|.
    pub kappa_ratio: f64,
    /// Last-to-first ratio of 1/min ν.
    pub inv_nu_ratio: f64,
    pub holds: bool,
}

/// Checks that max |κ| and 1/ν do not blow up along the schedule.
pub fn verify_apriori(profiles: &[RadialProfile], a: f64) -> Result<AprioriReport> {
    if profiles.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least two profiles, got {}",
            profiles.len()
        )));
    }
    let rows: Vec<AprioriRow> = profiles
        .iter()
        .map(|p| AprioriRow {
            epsilon: p.epsilon,
            max_abs_kappa: p.max_abs_kappa(),
            min_nu: p.min_nu(),
            min_kappa: p.min_kappa(),
            semiconvex_margin: p.min_kappa() + a,
            max_q: p.max_q(),
        })
        .collect();
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let kappa_ratio = last.max_abs_kappa / first.max_abs_kappa;
    let inv_nu_ratio = first.min_nu / last.min_nu;
    let holds = kappa_ratio.is_finite()
        && inv_nu_ratio.is_finite()
        && kappa_ratio <= APRIORI_RATIO
        && inv_nu_ratio <= APRIORI_RATIO
        && last.min_nu > 0.0;
    Ok(AprioriReport {
        rows,
        kappa_ratio,
        inv_nu_ratio,
        holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub epsilon: f64,
    pub iters: usize,
    pub max_residual: f64,
    pub max_abs_kappa: f64,
    pub min_nu: f64,
    pub min_kappa: f64,
    #[serde(rename = "max_Q")]
    pub max_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: SolverConfig,
    pub per_epsilon: Vec<EpsilonSummary>,
    pub failure: Option<SolveFailure>,
    pub apriori: Option<AprioriReport>,
    pub theorem_range: bool,
    /// `holds` iff every ε converged and the a priori check holds.
    pub verdict: String,
}

pub fn summarize(cfg: &SolverConfig, run: &Continuation, a: f64) -> RunSummary {
    let per_epsilon = run
        .profiles
        .iter()
        .map(|p| EpsilonSummary {
            epsilon: p.epsilon,
            iters: p.iters,
            max_residual: p.max_residual,
            max_abs_kappa: p.max_abs_kappa(),
            min_nu: p.min_nu(),
            min_kappa: p.min_kappa(),
            max_q: p.max_q(),
        })
        .collect();
    let apriori = verify_apriori(&run.profiles, a).ok();
    let ok = run.failure.is_none() && apriori.as_ref().is_some_and(|r| r.holds);
    RunSummary {
        config: cfg.clone(),
        per_epsilon,
        failure: run.failure.clone(),
        apriori,
        theorem_range: cfg.in_theorem_range(),
        verdict: if ok { "holds" } else { "fails" }.into(),
    }
}
