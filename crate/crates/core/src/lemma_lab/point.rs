//! Pointwise violation functionals, one per checked statement.
//!
//! Inequalities return `(RHS - LHS) / max(|LHS|, |RHS|)`, so negative values
//! are margins. Identities return a relative residual.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::binomial;
use crate::error::{Error, Result};
use crate::symfun::{CurvatureVector, DirectionVector, Form, SymBundle};
use crate::tolerances::{rel_residual, IDENTITY_REL, INEQUALITY_REL};

fn ratio(excess: f64, scale: f64) -> f64 {
    excess / scale.max(f64::MIN_POSITIVE)
}

/// `(rhs - lhs)` normalized by the larger side.
pub fn ineq(lhs: f64, rhs: f64) -> f64 {
    ratio(rhs - lhs, lhs.abs().max(rhs.abs()))
}

fn require_sorted(kappa: &CurvatureVector) -> Result<()> {
    if kappa.is_sorted() {
        Ok(())
    } else {
        Err(Error::invalid("kappa must be sorted in descending order"))
    }
}

fn require_order(kappa: &CurvatureVector, k: usize, lo: usize) -> Result<()> {
    if k < lo || k > kappa.n() {
        Err(Error::invalid(format!("order k = {k} outside {lo}..={}", kappa.n())))
    } else {
        Ok(())
    }
}

fn require_cone(b: &SymBundle, k: usize) -> Result<()> {
    if b.in_gamma_k(k)? {
        Ok(())
    } else {
        Err(Error::ConeViolation(format!("kappa not in Gamma_{k}")))
    }
}

/// Relative residuals of `Σ_p σ_{k-1}(κ|p) κ_p² = σ_1 σ_k - (k+1) σ_{k+1}` and
/// `Σ_p σ_{k-1}(κ|p) = (n-k+1) σ_{k-1}`.
pub fn f11k12_residuals(b: &SymBundle, k: usize) -> (f64, f64) {
    let n = b.n();
    let k = k as isize;
    let kappa = b.kappa();
    let lhs1: f64 = (0..n).map(|p| b.minor1(p, k - 1) * kappa[p] * kappa[p]).sum();
    let rhs1 = b.sigma(1) * b.sigma(k) - (k + 1) as f64 * b.sigma(k + 1);
    let lhs2: f64 = (0..n).map(|p| b.minor1(p, k - 1)).sum();
    let rhs2 = (n as isize - k + 1) as f64 * b.sigma(k - 1);
    (rel_residual(lhs1, rhs1), rel_residual(lhs2, rhs2))
}

pub fn f11k12_violation(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    require_order(kappa, k, 1)?;
    let (a, b) = f11k12_residuals(&kappa.bundle(), k);
    Ok(a.max(b))
}

/// Worst breach of `∂σ_k/∂κ_n ≥ ... ≥ ∂σ_k/∂κ_1 ≥ 0`, relative to the largest partial.
pub fn partial_ordering_violation(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    require_sorted(kappa)?;
    require_order(kappa, k, 1)?;
    let b = kappa.bundle();
    let d = b.sigma_gradient(k as isize);
    let scale = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst = -d[0];
    for w in d.windows(2) {
        worst = worst.max(w[0] - w[1]);
    }
    Ok(ratio(worst, scale))
}

/// `σ_{k-1}(κ|1) κ_1 ≥ (k/n) σ_k`.
pub fn fk1_violation(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    require_sorted(kappa)?;
    require_order(kappa, k, 1)?;
    let b = kappa.bundle();
    let lhs = b.minor1(0, k as isize - 1) * kappa.values()[0];
    let rhs = k as f64 / kappa.n() as f64 * b.sigma(k as isize);
    Ok(ineq(lhs, rhs))
}

fn sym_eigen(m: DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(m)
}

fn top_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>, f64) {
    let eig = sym_eigen(m.clone());
    let mut imax = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    let radius = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    (eig.eigenvalues[imax], eig.eigenvectors.column(imax).into_owned(), radius)
}

fn direction(v: &DVector<f64>) -> DirectionVector {
    DirectionVector::new(v.iter().copied().collect()).expect("finite eigenvector")
}

/// Largest eigenvalue of the Hessian of q_k relative to its spectral radius,
/// with the maximizing eigenvector.
pub fn concavity_violation(kappa: &CurvatureVector, k: usize) -> Result<(f64, DirectionVector)> {
    require_order(kappa, k, 1)?;
    let h = kappa.bundle().hessian(Form::Quotient(k))?;
    let (top, v, radius) = top_eigenpair(&h);
    Ok((ratio(top, radius), direction(&v)))
}

/// Directional form of the concavity check: `∂²_ξ q_k` relative to `ρ(H)|ξ|²`.
pub fn concavity_directional(kappa: &CurvatureVector, k: usize, xi: &DirectionVector) -> Result<f64> {
    require_order(kappa, k, 1)?;
    let b = kappa.bundle();
    let h = b.hessian(Form::Quotient(k))?;
    let radius = sym_eigen(h).eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let norm2: f64 = xi.values().iter().map(|x| x * x).sum();
    Ok(ratio(b.dir_hess(Form::Quotient(k), xi)?, radius * norm2))
}

/// `σ_s > κ_1 ⋯ κ_s` for every `1 ≤ s < k`.
pub fn k1_violation(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    require_sorted(kappa)?;
    require_order(kappa, k, 2)?;
    let b = kappa.bundle();
    let mut prod = 1.0;
    let mut worst = f64::NEG_INFINITY;
    for s in 1..k {
        prod *= kappa.values()[s - 1];
        worst = worst.max(ineq(b.sigma(s as isize), prod));
    }
    Ok(worst)
}

/// `κ_k > 0`, and `|κ_n| < (n-k) κ_k` whenever `κ_n < 0`.
pub fn lemn_violation(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    require_sorted(kappa)?;
    require_order(kappa, k, 1)?;
    let v = kappa.values();
    let n = v.len();
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst = ratio(-v[k - 1], scale);
    if v[n - 1] < 0.0 {
        worst = worst.max(ineq((n - k) as f64 * v[k - 1], v[n - 1].abs()));
    }
    Ok(worst)
}

/// `P_1 ≥ P_2^{1/2} ≥ ... ≥ P_k^{1/k}`.
pub fn maclaurin_violation(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    require_order(kappa, k, 1)?;
    let b = kappa.bundle();
    require_cone(&b, k)?;
    let roots: Vec<f64> = (1..=k)
        .map(|j| b.normalized_pk(j).map(|p| p.powf(1.0 / j as f64)))
        .collect::<Result<_>>()?;
    let mut worst = f64::NEG_INFINITY;
    for w in roots.windows(2) {
        worst = worst.max(ineq(w[0], w[1]));
    }
    if k == 1 {
        worst = ratio(-roots[0], roots[0].abs());
    }
    Ok(worst)
}

/// Relative residual of the q_2 Hessian identity.
pub fn hs_q2_violation(kappa: &CurvatureVector, xi: &DirectionVector) -> Result<f64> {
    let (l, r) = crate::symfun::hs_q2_sides(kappa, xi)?;
    Ok(rel_residual(l, r))
}

/// First step of the semi-convexity argument:
/// `σ_{k-1}(κ|n) κ_n² ≤ σ_1 σ_k - (k+1) σ_{k+1}`.
pub fn semiconvex_chain_violation(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    require_sorted(kappa)?;
    require_order(kappa, k, 1)?;
    let b = kappa.bundle();
    let n = kappa.n();
    let kk = k as isize;
    let last = kappa.values()[n - 1];
    let lhs = b.minor1(n - 1, kk - 1) * last * last;
    let rhs = b.sigma(1) * b.sigma(kk) - (k + 1) as f64 * b.sigma(kk + 1);
    Ok(ineq(rhs, lhs))
}

/// Right-hand sides of the three-clause bound on κ_k, in order.
pub fn upper_kappak_bounds(kappa: &CurvatureVector, k: usize, a: f64) -> Result<[f64; 3]> {
    require_sorted(kappa)?;
    require_order(kappa, k, 2)?;
    let b = kappa.bundle();
    let n = kappa.n();
    let v = kappa.values();
    let sk = b.sigma(k as isize);
    let e = 1.0 / (k as f64 - 1.0);
    // Number of degree-k monomials that contain κ_n.
    let c = binomial(n - 1, k - 1);
    let neg = (-v[n - 1]).max(0.0);
    let c1 = 2.0 * (sk / v[0]).powf(e) + 2.0 * c * neg;
    let c2 = 2.0 * (n as f64 * sk / b.sigma(1)).powf(e) + 2.0 * c * a;
    let cnk = 2.0 * binomial(n, k).powf(1.0 / (k as f64 * (k as f64 - 1.0)));
    let c3 = cnk * sk.powf(1.0 / k as f64) + 2.0 * c * a;
    Ok([c1, c2, c3])
}

pub fn upper_kappak_violation(kappa: &CurvatureVector, k: usize, a: f64) -> Result<f64> {
    let bounds = upper_kappak_bounds(kappa, k, a)?;
    let kk = kappa.values()[k - 1];
    Ok(bounds.iter().fold(f64::NEG_INFINITY, |m, &r| m.max(ineq(r, kk))))
}

/// Quadratic form `G` with `ξᵀ G ξ` the left side of the huge-κ_1 inequality.
pub fn lu_matrix(kappa: &CurvatureVector, k: usize) -> Result<DMatrix<f64>> {
    require_sorted(kappa)?;
    require_order(kappa, k, 1)?;
    let b = kappa.bundle();
    let kk = k as isize;
    let s = b.sigma(kk);
    if s <= 0.0 {
        return Err(Error::ConeViolation(format!("sigma_{k} = {s} <= 0")));
    }
    let n = kappa.n();
    let g = b.sigma_gradient(kk);
    let k1 = kappa.values()[0];
    Ok(DMatrix::from_fn(n, n, |p, q| {
        let mut v = g[p] * g[q] / (s * s);
        if p != q {
            v -= b.minor2(p, q, kk - 2) / s;
        } else if p > 0 {
            v += g[p] / (k1 * s);
        }
        v
    }))
}

/// Both sides `(LHS, (1-ε) ξ_1² / κ_1²)`.
pub fn lu_sides(kappa: &CurvatureVector, k: usize, xi: &DirectionVector, epsilon: f64) -> Result<(f64, f64)> {
    let g = lu_matrix(kappa, k)?;
    let x = DVector::from_column_slice(xi.values());
    let lhs = (x.transpose() * &g * &x)[(0, 0)];
    let k1 = kappa.values()[0];
    let rhs = (1.0 - epsilon) * xi.values()[0].powi(2) / (k1 * k1);
    Ok((lhs, rhs))
}

pub fn lu_violation(kappa: &CurvatureVector, k: usize, xi: &DirectionVector, epsilon: f64) -> Result<f64> {
    let (l, r) = lu_sides(kappa, k, xi, epsilon)?;
    Ok(ineq(l, r))
}

/// Most violating ξ: bottom eigenvector of `G - (1-ε) e_1 e_1ᵀ / κ_1²`.
pub fn lu_worst_direction(kappa: &CurvatureVector, k: usize, epsilon: f64) -> Result<DirectionVector> {
    let mut g = lu_matrix(kappa, k)?;
    let k1 = kappa.values()[0];
    g[(0, 0)] -= (1.0 - epsilon) / (k1 * k1);
    let (_, v, _) = top_eigenpair(&(-g));
    Ok(direction(&v))
}

/// Gap thresholds `M_l = N^{2^{k-l-1}}` for `l = 1..k-1`.
pub fn gap_thresholds(big_n: f64, k: usize) -> Vec<f64> {
    (1..k).map(|l| big_n.powf(2f64.powi((k - l - 1) as i32))).collect()
}

/// Smallest `l` with `κ_l ≥ M_l²` and `κ_{l+1} ≤ M_l`, if any.
pub fn prop_ln_index(kappa: &CurvatureVector, k: usize, big_n: f64) -> Option<usize> {
    let v = kappa.values();
    gap_thresholds(big_n, k)
        .iter()
        .enumerate()
        .find(|&(i, &m)| v[i] >= m * m && v[i + 1] <= m)
        .map(|(i, _)| i + 1)
}

/// `min_l max((M² - κ_l)/M², (κ_{l+1} - M)/M)`; nonpositive iff a gap index exists.
pub fn prop_ln_margin(kappa: &CurvatureVector, k: usize, big_n: f64) -> Result<f64> {
    require_sorted(kappa)?;
    require_order(kappa, k, 2)?;
    let v = kappa.values();
    Ok(gap_thresholds(big_n, k)
        .iter()
        .enumerate()
        .map(|(i, &m)| ((m * m - v[i]) / (m * m)).max((v[i + 1] - m) / m))
        .fold(f64::INFINITY, f64::min))
}

/// `Σ_i c_i D_i H_{q_k}([κ]_i) D_i` with `c_i = -κ_i² / ((k+1)(q_{k;i}+κ_i)²)`:
/// the quadratic form on the right of the q_{k+1} recursion.
fn hs_rhs_matrix(kappa: &CurvatureVector, k: usize) -> Result<DMatrix<f64>> {
    let n = kappa.n();
    let b = kappa.bundle();
    let kk = k as isize;
    let mut acc = DMatrix::zeros(n, n);
    for i in 0..n {
        let den = b.minor1(i, kk - 1);
        if den == 0.0 {
            return Err(Error::Degenerate(format!("sigma_{}(kappa|{}) = 0", k - 1, i + 1)));
        }
        let q_ki = b.minor1(i, kk) / den;
        let ki = kappa.values()[i];
        let d = q_ki + ki;
        if d == 0.0 {
            return Err(Error::Degenerate(format!("q_k;{} + kappa_{} = 0", i + 1, i + 1)));
        }
        let c = -ki * ki / ((k + 1) as f64 * d * d);
        let mut h = kappa.zeroed(i).bundle().hessian(Form::Quotient(k))?;
        h.row_mut(i).fill(0.0);
        h.column_mut(i).fill(0.0);
        acc += h * c;
    }
    Ok(acc)
}

/// Both sides of the recursion `-∂²_ξ q_{k+1} ≥ RHS`.
pub fn hs_recursion_sides(kappa: &CurvatureVector, k: usize, xi: &DirectionVector) -> Result<(f64, f64)> {
    require_order(kappa, k + 1, 2)?;
    let lhs = -kappa.bundle().dir_hess(Form::Quotient(k + 1), xi)?;
    let m = hs_rhs_matrix(kappa, k)?;
    let x = DVector::from_column_slice(xi.values());
    Ok((lhs, (x.transpose() * m * &x)[(0, 0)]))
}

/// Direction maximizing `RHS - LHS`.
pub fn hs_recursion_worst_direction(kappa: &CurvatureVector, k: usize) -> Result<DirectionVector> {
    let h = kappa.bundle().hessian(Form::Quotient(k + 1))?;
    let m = hs_rhs_matrix(kappa, k)? + h;
    let (_, v, _) = top_eigenpair(&m);
    Ok(direction(&v))
}

/// Max over i of the relative residual of `q_{k;i} + κ_i = σ_k / σ_{k-1}(κ|i)`.
pub fn denominator_identity_residual(kappa: &CurvatureVector, k: usize) -> Result<f64> {
    require_order(kappa, k, 1)?;
    let b = kappa.bundle();
    let kk = k as isize;
    let mut worst = 0.0f64;
    for i in 0..kappa.n() {
        let den = b.minor1(i, kk - 1);
        if den == 0.0 {
            return Err(Error::Degenerate(format!("sigma_{}(kappa|{}) = 0", k - 1, i + 1)));
        }
        let lhs = b.minor1(i, kk) / den + kappa.values()[i];
        let rhs = b.sigma(kk) / den;
        worst = worst.max(rel_residual(lhs, rhs));
    }
    Ok(worst)
}

/// Recursion inequality and the denominator identity folded into one number;
/// the identity residual is rescaled so that its own tolerance maps onto the
/// inequality tolerance. Both sides vanish along ξ ∝ κ, so the gap is measured
/// against the spectral radii of the two forms rather than the sides alone.
pub fn hs_recursion_violation(kappa: &CurvatureVector, k: usize, xi: &DirectionVector) -> Result<f64> {
    require_order(kappa, k + 1, 2)?;
    let h = kappa.bundle().hessian(Form::Quotient(k + 1))?;
    let m = hs_rhs_matrix(kappa, k)?;
    let x = DVector::from_column_slice(xi.values());
    let l = -(x.transpose() * &h * &x)[(0, 0)];
    let r = (x.transpose() * &m * &x)[(0, 0)];
    let radius = |a: &DMatrix<f64>| sym_eigen(a.clone()).eigenvalues.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let scale = (radius(&h) + radius(&m)) * x.norm_squared();
    let gap = ratio(r - l, l.abs().max(r.abs()).max(scale));
    let id = denominator_identity_residual(kappa, k)?;
    Ok(gap.max(id * (INEQUALITY_REL / IDENTITY_REL)))
}

/// `-σ_{k-1} ∂²_λ q_k`.
pub fn lem_hg_lhs(kappa: &CurvatureVector, k: usize, lambda: &DirectionVector) -> Result<f64> {
    let b = kappa.bundle();
    Ok(-b.sigma(k as isize - 1) * b.dir_hess(Form::Quotient(k), lambda)?)
}

/// `-LHS / (σ_{k-1} ρ(H) |λ|²)`; positive means the concavity sign fails.
pub fn lem_hg_sign_violation(kappa: &CurvatureVector, k: usize, lambda: &DirectionVector) -> Result<f64> {
    require_order(kappa, k, 2)?;
    let b = kappa.bundle();
    let h = b.hessian(Form::Quotient(k))?;
    let radius = sym_eigen(h).eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let norm2: f64 = lambda.values().iter().map(|x| x * x).sum();
    let lhs = lem_hg_lhs(kappa, k, lambda)?;
    Ok(ratio(-lhs, b.sigma(k as isize - 1).abs() * radius * norm2))
}

pub fn lem_hg_worst_direction(kappa: &CurvatureVector, k: usize) -> Result<DirectionVector> {
    let h = kappa.bundle().hessian(Form::Quotient(k))?;
    let (_, v, _) = top_eigenpair(&h);
    Ok(direction(&v))
}

/// Matrix of `-σ_{k-1} ∂²_λ q_k`.
fn lem_hg_lhs_matrix(kappa: &CurvatureVector, k: usize) -> Result<DMatrix<f64>> {
    let b = kappa.bundle();
    Ok(b.hessian(Form::Quotient(k))? * (-b.sigma(k as isize - 1)))
}

/// Matrix of `Σ_{j<k} κ_1⋯κ̂_j⋯κ_{k-1} |[λ]^⊥_{1..ĵ..k-1}|²`.
pub fn lem_hg_rhs_matrix(kappa: &CurvatureVector, k: usize) -> DMatrix<f64> {
    let n = kappa.n();
    let v = kappa.values();
    let mut acc = DMatrix::zeros(n, n);
    for j in 0..k - 1 {
        let zeroed: Vec<usize> = (0..k - 1).filter(|&i| i != j).collect();
        let coef: f64 = zeroed.iter().map(|&i| v[i]).product();
        let mut d = DMatrix::identity(n, n);
        let mut reduced = DVector::from_column_slice(v);
        for &i in &zeroed {
            d[(i, i)] = 0.0;
            reduced[i] = 0.0;
        }
        let rr = reduced.norm_squared();
        let proj = if rr > 0.0 {
            DMatrix::identity(n, n) - &reduced * reduced.transpose() / rr
        } else {
            DMatrix::identity(n, n)
        };
        acc += (&d * proj * &d) * coef;
    }
    acc
}

pub fn lem_hg_rhs_sum(kappa: &CurvatureVector, k: usize, lambda: &DirectionVector) -> f64 {
    let x = DVector::from_column_slice(lambda.values());
    (x.transpose() * lem_hg_rhs_matrix(kappa, k) * &x)[(0, 0)]
}

/// Orthonormal basis of the complement of `u` (columns).
fn complement_basis(u: &DVector<f64>) -> DMatrix<f64> {
    let n = u.len();
    let uu = u.normalize();
    let p = DMatrix::identity(n, n) - &uu * uu.transpose();
    let eig = sym_eigen(p);
    let cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    DMatrix::from_columns(&cols)
}

/// Smallest generalized eigenvalue of `(P, Q)` on the subspace spanned by the columns of `basis`.
fn min_generalized(p: &DMatrix<f64>, q: &DMatrix<f64>, basis: &DMatrix<f64>) -> Option<f64> {
    let p2 = basis.transpose() * p * basis;
    let q2 = basis.transpose() * q * basis;
    let chol = q2.cholesky()?;
    let l = chol.l();
    let linv = l.clone().try_inverse()?;
    let m = &linv * p2 * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = sym_eigen(m);
    Some(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// `min_{λ ⊥ κ} LHS(λ) / RHS-sum(λ)` (the lem,HG ratio with C(n,k) factored out).
pub fn lem_hg_min_ratio(kappa: &CurvatureVector, k: usize) -> Result<Option<f64>> {
    require_sorted(kappa)?;
    require_order(kappa, k, 2)?;
    let p = lem_hg_lhs_matrix(kappa, k)?;
    let q = lem_hg_rhs_matrix(kappa, k);
    let basis = complement_basis(&DVector::from_column_slice(kappa.values()));
    Ok(min_generalized(&p, &q, &basis))
}

/// `min LHS · N_2² / (δ_0 κ_1⋯κ_{k-1} |λ^l|²)` over λ with `λ^l ⊥ κ^l`,
/// taking δ_0 = |κ_n| and N_2 = κ_{l+1}. Requires κ_n < 0 and `l ≤ k-2`.
pub fn lem_hg_orthogonal_constant(kappa: &CurvatureVector, k: usize, l: usize) -> Result<Option<f64>> {
    require_sorted(kappa)?;
    require_order(kappa, k, 3)?;
    let n = kappa.n();
    let v = kappa.values();
    if l < 1 || l + 2 > k {
        return Err(Error::invalid(format!("need 1 <= l <= k-2, got l = {l}")));
    }
    if v[n - 1] >= 0.0 {
        return Ok(None);
    }
    let p = lem_hg_lhs_matrix(kappa, k)?;
    // Minimize over the free head λ_1..λ_l: Schur complement with a pseudo-inverse.
    let p11 = p.view((0, 0), (l, l)).into_owned();
    let p12 = p.view((0, l), (l, n - l)).into_owned();
    let p22 = p.view((l, l), (n - l, n - l)).into_owned();
    let eig = sym_eigen(p11);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut pinv = DMatrix::zeros(l, l);
    for i in 0..l {
        let e = eig.eigenvalues[i];
        if e.abs() > 1e-13 * top {
            let c = eig.eigenvectors.column(i);
            pinv += c * c.transpose() / e;
        }
    }
    let schur = &p22 - p12.transpose() * pinv * &p12;
    let tail = DVector::from_column_slice(&v[l..]);
    let basis = complement_basis(&tail);
    let id = DMatrix::identity(n - l, n - l);
    let Some(min) = min_generalized(&schur, &id, &basis) else {
        return Ok(None);
    };
    let head: f64 = v[..k - 1].iter().product();
    let delta0 = v[n - 1].abs();
    let n2 = v[l];
    Ok(Some(min * n2 * n2 / (delta0 * head)))
}
