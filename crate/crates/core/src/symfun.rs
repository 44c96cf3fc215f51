//! Elementary symmetric functions σ_j of a curvature vector, their first and
//! second minors, the quotients q_m = σ_m / σ_{m-1}, and directional second
//! derivatives of σ_m, q_m and log σ_m.
//!
//! All σ_j are evaluated with the coefficient recurrence of Π_i (1 + κ_i t).
//! Minors are re-expanded over the reduced index set rather than obtained by
//! dividing out a linear factor.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point κ ∈ R^n of principal curvatures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureVector {
    values: Vec<f64>,
    sorted: bool,
}

impl CurvatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "curvature vector needs n >= 2 entries, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("kappa[{i}] is not finite")));
        }
        let sorted = values.windows(2).all(|w| w[0] >= w[1]);
        Ok(CurvatureVector { values, sorted })
    }

    /// Builds the vector and sorts it in descending order.
    pub fn sorted(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(|a, b| b.total_cmp(a));
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Whether κ_1 ≥ κ_2 ≥ ... ≥ κ_n.
    pub fn is_sorted(&self) -> bool {
        self.sorted
    }

    pub fn bundle(&self) -> SymBundle {
        SymBundle::from_kappa(self)
    }

    /// Copy with entry `i` set to zero (the vector `[κ]_i`).
    pub fn zeroed(&self, i: usize) -> CurvatureVector {
        let mut values = self.values.clone();
        values[i] = 0.0;
        CurvatureVector::new(values).expect("zeroing keeps the vector valid")
    }
}

/// A direction ξ (or λ) in R^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionVector {
    values: Vec<f64>,
}

impl DirectionVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty direction"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("xi[{i}] is not finite")));
        }
        Ok(DirectionVector { values })
    }

    pub fn coordinate(n: usize, i: usize) -> Self {
        let mut values = vec![0.0; n];
        values[i] = 1.0;
        DirectionVector { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn zeroed(&self, i: usize) -> DirectionVector {
        let mut values = self.values.clone();
        values[i] = 0.0;
        DirectionVector { values }
    }
}

/// Scalar function of κ whose directional Hessian is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Form {
    Sigma(usize),
    Quotient(usize),
    LogSigma(usize),
}

/// Coefficients e_0..e_len of Π (1 + v t).
fn elementary<I: IntoIterator<Item = f64>>(values: I, len: usize) -> Vec<f64> {
    let mut c = vec![0.0; len + 1];
    c[0] = 1.0;
    let mut used = 0;
    for v in values {
        used += 1;
        for j in (1..=used.min(len)).rev() {
            c[j] += v * c[j - 1];
        }
    }
    c
}

/// σ_j(κ), all single minors σ_j(κ|i) and all pair minors σ_j(κ|i,p).
#[derive(Debug, Clone)]
pub struct SymBundle {
    kappa: Vec<f64>,
    sigmas: Vec<f64>,
    minor1: Vec<Vec<f64>>,
    minor2: Vec<Vec<f64>>,
}

/// Evaluates σ_j, σ_j(κ|i) and σ_j(κ|i,p) for a raw slice.
pub fn build_bundle(values: &[f64]) -> Result<SymBundle> {
    CurvatureVector::new(values.to_vec()).map(|k| SymBundle::from_kappa(&k))
}

impl SymBundle {
    pub fn from_kappa(kappa: &CurvatureVector) -> Self {
        let v = kappa.values();
        let n = v.len();
        let sigmas = elementary(v.iter().copied(), n);
        let minor1 = (0..n)
            .map(|i| {
                elementary(
                    v.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &x)| x),
                    n - 1,
                )
            })
            .collect();
        let mut minor2 = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for p in (i + 1)..n {
                minor2.push(elementary(
                    v.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i && j != p)
                        .map(|(_, &x)| x),
                    n - 2,
                ));
            }
        }
        SymBundle {
            kappa: v.to_vec(),
            sigmas,
            minor1,
            minor2,
        }
    }

    pub fn n(&self) -> usize {
        self.kappa.len()
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// σ_j(κ); zero outside `0..=n`.
    pub fn sigma(&self, j: isize) -> f64 {
        if j < 0 {
            0.0
        } else {
            self.sigmas.get(j as usize).copied().unwrap_or(0.0)
        }
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// σ_j(κ|i), the j-th elementary function with entry `i` removed.
    pub fn minor1(&self, i: usize, j: isize) -> f64 {
        if j < 0 {
            0.0
        } else {
            self.minor1[i].get(j as usize).copied().unwrap_or(0.0)
        }
    }

    fn pair_index(&self, i: usize, p: usize) -> usize {
        let (a, b) = if i < p { (i, p) } else { (p, i) };
        let n = self.n();
        a * (2 * n - a - 1) / 2 + (b - a - 1)
    }

    /// σ_j(κ|i,p) for `i != p`.
    pub fn minor2(&self, i: usize, p: usize, j: isize) -> f64 {
        assert_ne!(i, p, "pair minor needs distinct indices");
        if j < 0 {
            return 0.0;
        }
        self.minor2[self.pair_index(i, p)]
            .get(j as usize)
            .copied()
            .unwrap_or(0.0)
    }

    fn check_order(&self, k: usize, lo: usize) -> Result<()> {
        if k < lo || k > self.n() {
            Err(Error::invalid(format!(
                "order {k} outside {lo}..={}",
                self.n()
            )))
        } else {
            Ok(())
        }
    }

    /// P_k = σ_k / C(n, k).
    pub fn normalized_pk(&self, k: usize) -> Result<f64> {
        self.check_order(k, 1)?;
        Ok(self.sigma(k as isize) / crate::binomial(self.n(), k))
    }

    /// Membership in the open cone Γ_k: σ_j > 0 for every 1 ≤ j ≤ k.
    pub fn in_gamma_k(&self, k: usize) -> Result<bool> {
        self.check_order(k, 1)?;
        Ok(self.sigmas[1..=k].iter().all(|&s| s > 0.0))
    }

    /// q_m = σ_m / σ_{m-1}.
    pub fn quotient_q(&self, m: usize) -> Result<f64> {
        self.check_order(m, 1)?;
        let den = self.sigma(m as isize - 1);
        if den == 0.0 {
            return Err(Error::Degenerate(format!("sigma_{} = 0", m - 1)));
        }
        Ok(self.sigma(m as isize) / den)
    }

    /// ∂_ξ σ_j = Σ_i σ_{j-1}(κ|i) ξ_i.
    pub fn sigma_d1(&self, j: isize, xi: &[f64]) -> f64 {
        xi.iter()
            .enumerate()
            .map(|(i, &x)| self.minor1(i, j - 1) * x)
            .sum()
    }

    /// ∂²_ξ σ_j = Σ_{p≠q} σ_{j-2}(κ|p,q) ξ_p ξ_q. Diagonal entries are exactly zero.
    pub fn sigma_d2(&self, j: isize, xi: &[f64]) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                acc += self.minor2(p, q, j - 2) * xi[p] * xi[q];
            }
        }
        2.0 * acc
    }

    /// Gradient of σ_j: (σ_{j-1}(κ|i))_i.
    pub fn sigma_gradient(&self, j: isize) -> Vec<f64> {
        (0..self.n()).map(|i| self.minor1(i, j - 1)).collect()
    }

    /// Hessian of σ_j: σ_{j-2}(κ|p,q) off the diagonal, zero on it.
    pub fn sigma_hessian(&self, j: isize) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |p, q| {
            if p == q {
                0.0
            } else {
                self.minor2(p, q, j - 2)
            }
        })
    }

    fn check_form(&self, form: Form) -> Result<()> {
        match form {
            Form::Sigma(m) => self.check_order(m, 0),
            Form::Quotient(m) | Form::LogSigma(m) => self.check_order(m, 1),
        }
    }

    /// Directional second derivative ∂²_ξ f(κ).
    pub fn dir_hess(&self, form: Form, xi: &DirectionVector) -> Result<f64> {
        self.check_form(form)?;
        let xi = self.check_direction(xi)?;
        match form {
            Form::Sigma(m) => Ok(self.sigma_d2(m as isize, xi)),
            Form::Quotient(m) => {
                let m = m as isize;
                let (a, b) = (self.sigma(m), self.sigma(m - 1));
                if b == 0.0 {
                    return Err(Error::Degenerate(format!("sigma_{} = 0", m - 1)));
                }
                let (da, db) = (self.sigma_d1(m, xi), self.sigma_d1(m - 1, xi));
                let (dda, ddb) = (self.sigma_d2(m, xi), self.sigma_d2(m - 1, xi));
                Ok(dda / b - 2.0 * da * db / (b * b) - a * ddb / (b * b)
                    + 2.0 * a * db * db / (b * b * b))
            }
            Form::LogSigma(m) => {
                let m = m as isize;
                let a = self.sigma(m);
                if a == 0.0 {
                    return Err(Error::Degenerate(format!("sigma_{m} = 0")));
                }
                let da = self.sigma_d1(m, xi) / a;
                Ok(self.sigma_d2(m, xi) / a - da * da)
            }
        }
    }

    /// Full Hessian matrix of the form.
    pub fn hessian(&self, form: Form) -> Result<DMatrix<f64>> {
        self.check_form(form)?;
        let n = self.n();
        match form {
            Form::Sigma(m) => Ok(self.sigma_hessian(m as isize)),
            Form::Quotient(m) => {
                let m = m as isize;
                let (a, b) = (self.sigma(m), self.sigma(m - 1));
                if b == 0.0 {
                    return Err(Error::Degenerate(format!("sigma_{} = 0", m - 1)));
                }
                let ga = self.sigma_gradient(m);
                let gb = self.sigma_gradient(m - 1);
                let ha = self.sigma_hessian(m);
                let hb = self.sigma_hessian(m - 1);
                Ok(DMatrix::from_fn(n, n, |p, q| {
                    ha[(p, q)] / b
                        - (ga[p] * gb[q] + gb[p] * ga[q]) / (b * b)
                        - a * hb[(p, q)] / (b * b)
                        + 2.0 * a * gb[p] * gb[q] / (b * b * b)
                }))
            }
            Form::LogSigma(m) => {
                let m = m as isize;
                let a = self.sigma(m);
                if a == 0.0 {
                    return Err(Error::Degenerate(format!("sigma_{m} = 0")));
                }
                let g = self.sigma_gradient(m);
                let h = self.sigma_hessian(m);
                Ok(DMatrix::from_fn(n, n, |p, q| {
                    h[(p, q)] / a - g[p] * g[q] / (a * a)
                }))
            }
        }
    }

    fn check_direction<'a>(&self, xi: &'a DirectionVector) -> Result<&'a [f64]> {
        if xi.n() != self.n() {
            return Err(Error::invalid(format!(
                "direction has {} components, kappa has {}",
                xi.n(),
                self.n()
            )));
        }
        Ok(xi.values())
    }
}

pub fn normalized_pk(bundle: &SymBundle, k: usize) -> Result<f64> {
    bundle.normalized_pk(k)
}

pub fn in_gamma_k(bundle: &SymBundle, k: usize) -> Result<bool> {
    bundle.in_gamma_k(k)
}

pub fn quotient_q(bundle: &SymBundle, m: usize) -> Result<f64> {
    bundle.quotient_q(m)
}

pub fn dir_hess(form: Form, kappa: &CurvatureVector, xi: &DirectionVector) -> Result<f64> {
    kappa.bundle().dir_hess(form, xi)
}

/// Both sides of the q_2 identity: `-∂²_ξ q_2` and `Σ_i (ξ_i - κ_i σ_1(ξ)/σ_1)² / σ_1`.
pub fn hs_q2_sides(kappa: &CurvatureVector, xi: &DirectionVector) -> Result<(f64, f64)> {
    let bundle = kappa.bundle();
    let s1 = bundle.sigma(1);
    if s1 <= 0.0 {
        return Err(Error::ConeViolation(format!("sigma_1 = {s1} <= 0")));
    }
    let lhs = -bundle.dir_hess(Form::Quotient(2), xi)?;
    let s1_xi: f64 = xi.values().iter().sum();
    let rhs = kappa
        .values()
        .iter()
        .zip(xi.values())
        .map(|(&k, &x)| {
            let d = x - k / s1 * s1_xi;
            d * d
        })
        .sum::<f64>()
        / s1;
    Ok((lhs, rhs))
}

/// `|LHS - RHS|` of the q_2 identity.
pub fn hs_q2_residual(kappa: &CurvatureVector, xi: &DirectionVector) -> Result<f64> {
    let (lhs, rhs) = hs_q2_sides(kappa, xi)?;
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kv(v: &[f64]) -> CurvatureVector {
        CurvatureVector::new(v.to_vec()).unwrap()
    }

    fn dv(v: &[f64]) -> DirectionVector {
        DirectionVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn all_ones_n3() {
        let b = kv(&[1.0, 1.0, 1.0]).bundle();
        assert_eq!(b.sigmas(), &[1.0, 3.0, 3.0, 1.0]);
    }

    #[test]
    fn three_two_one() {
        let b = kv(&[3.0, 2.0, 1.0]).bundle();
        assert_eq!(b.sigma(2), 11.0);
        assert_eq!(b.minor1(1, 1), 4.0);
        assert_eq!(b.minor2(0, 2, 1), 2.0);
        assert_eq!(b.minor2(2, 0, 1), 2.0);
        assert_relative_eq!(b.normalized_pk(2).unwrap(), 11.0 / 3.0);
        assert_relative_eq!(b.quotient_q(3).unwrap(), 6.0 / 11.0);
    }

    #[test]
    fn rejects_short_or_nonfinite() {
        assert!(matches!(build_bundle(&[1.0]), Err(Error::InvalidInput(_))));
        assert!(CurvatureVector::new(vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn pk_diagonal_and_single_entry() {
        let b = kv(&[1.7; 5]).bundle();
        for k in 1..=5 {
            assert_relative_eq!(b.normalized_pk(k).unwrap(), 1.7f64.powi(k as i32), max_relative = 1e-14);
        }
        let b = kv(&[1.0, 0.0, 0.0, 0.0]).bundle();
        assert_eq!(b.normalized_pk(2).unwrap(), 0.0);
        assert!(b.normalized_pk(0).is_err());
        assert!(b.normalized_pk(5).is_err());
    }

    #[test]
    fn cone_membership() {
        assert!(kv(&[1.0, 1.0, 1.0]).bundle().in_gamma_k(3).unwrap());
        assert!(!kv(&[1.0, 1.0, -1.0]).bundle().in_gamma_k(2).unwrap());
        // σ_2 = 0 exactly: boundary counts as outside.
        assert!(!kv(&[2.0, 2.0, -1.0]).bundle().in_gamma_k(2).unwrap());
        assert!(kv(&[2.0, 2.0, -1.0]).bundle().in_gamma_k(1).unwrap());
    }

    #[test]
    fn quotient_examples() {
        assert_relative_eq!(kv(&[1.0, 1.0, 1.0]).bundle().quotient_q(2).unwrap(), 1.0);
        let c = 0.7;
        let b = kv(&[c; 4]).bundle();
        assert_relative_eq!(b.quotient_q(1).unwrap(), 4.0 * c, max_relative = 1e-15);
        // q_m on the diagonal: C(n,m)/C(n,m-1) c = (n-m+1)/m c
        for m in 1..=4 {
            assert_relative_eq!(
                b.quotient_q(m).unwrap(),
                (4 - m + 1) as f64 / m as f64 * c,
                max_relative = 1e-14
            );
        }
        assert!(matches!(
            kv(&[1.0, -1.0]).bundle().quotient_q(2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn dir_hess_examples() {
        let k = kv(&[3.0, -2.0, 0.5, 4.0]);
        for i in 0..4 {
            let e = DirectionVector::coordinate(4, i);
            assert_eq!(dir_hess(Form::Sigma(3), &k, &e).unwrap(), 0.0);
        }
        let v = dir_hess(Form::Quotient(2), &kv(&[2.0, 1.0]), &dv(&[1.0, 0.0])).unwrap();
        assert_relative_eq!(v, -2.0 / 27.0, max_relative = 1e-14);
        let v = dir_hess(Form::LogSigma(1), &kv(&[1.0, 1.0]), &dv(&[1.0, -1.0])).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn dir_hess_matches_matrix_form() {
        let k = kv(&[5.0, 3.0, 2.0, -0.5, 1.0]);
        let xi = dv(&[0.3, -1.1, 0.7, 2.0, -0.4]);
        let b = k.bundle();
        for form in [Form::Sigma(3), Form::Quotient(3), Form::LogSigma(2)] {
            let h = b.hessian(form).unwrap();
            let x = nalgebra::DVector::from_column_slice(xi.values());
            let quad = (x.transpose() * &h * &x)[(0, 0)];
            assert_relative_eq!(b.dir_hess(form, &xi).unwrap(), quad, max_relative = 1e-12);
        }
    }

    #[test]
    fn q2_identity_examples() {
        let (l, r) = hs_q2_sides(&kv(&[2.0, 1.0]), &dv(&[1.0, 0.0])).unwrap();
        assert_relative_eq!(l, 2.0 / 27.0, max_relative = 1e-13);
        assert_relative_eq!(r, 2.0 / 27.0, max_relative = 1e-13);
        let k = kv(&[0.8; 5]);
        let xi = dv(&[0.8; 5]);
        let (l, r) = hs_q2_sides(&k, &xi).unwrap();
        assert_eq!(r, 0.0);
        assert!(l.abs() < 1e-14);
        assert!(matches!(
            hs_q2_residual(&kv(&[-1.0, -2.0]), &dv(&[1.0, 0.0])),
            Err(Error::ConeViolation(_))
        ));
    }

    #[test]
    fn direction_length_mismatch() {
        let k = kv(&[1.0, 2.0, 3.0]);
        assert!(dir_hess(Form::Sigma(2), &k, &dv(&[1.0, 0.0])).is_err());
    }
}
