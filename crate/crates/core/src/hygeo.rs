//! Graphs in the upper half-space model: Euclidean shape data of a height
//! field u and the hyperbolic principal curvatures κ_i = u κ̃_i + ν^{n+1}.
//!
//! Orientation: the Euclidean normal points upward, so ν^{n+1} = 1/√(1+|Du|²)
//! and h̃ = D²u / √(1+|Du|²). With this sign the equidistant cap
//! u = √(ρ²-|x|²) - d has κ ≡ d/ρ.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::binomial;
use crate::error::{Error, Result};
use crate::symfun::CurvatureVector;
use crate::tolerances::rel_residual;

/// Tolerance on |u'(0)| for radial profiles.
pub const AXIS_SLOPE_TOL: f64 = 1e-10;
/// Gap below which κ_1 counts as repeated.
pub const MULTIPLICITY_GAP: f64 = 1e-9;

/// Height field on a regular lattice: a radial cross-section `r_i = r0 + i h`
/// (m = 1) or a planar grid `(x0 + i h, y0 + j h)` stored x-fastest (m = 2).
#[derive(Debug, Clone, PartialEq)]
pub struct GraphField {
    dims: Vec<usize>,
    origin: Vec<f64>,
    h: f64,
    u: Vec<f64>,
}

impl GraphField {
    pub fn radial(r0: f64, h: f64, u: Vec<f64>) -> Result<Self> {
        if !(r0 >= 0.0) {
            return Err(Error::invalid(format!("radial grid must start at r >= 0, got {r0}")));
        }
        Self::build(vec![u.len()], vec![r0], h, u)
    }

    pub fn planar(x0: f64, y0: f64, h: f64, nx: usize, ny: usize, u: Vec<f64>) -> Result<Self> {
        if u.len() != nx * ny {
            return Err(Error::invalid(format!("{} values for a {nx}x{ny} grid", u.len())));
        }
        Self::build(vec![nx, ny], vec![x0, y0], h, u)
    }

    fn build(dims: Vec<usize>, origin: Vec<f64>, h: f64, u: Vec<f64>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("grid spacing h = {h} must be positive")));
        }
        if dims.iter().any(|&d| d < 3) {
            return Err(Error::invalid("need at least 3 nodes per axis"));
        }
        if u.iter().chain(&origin).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite grid data"));
        }
        Ok(GraphField { dims, origin, h, u })
    }

    /// Samples `f(r)` at `r_i = i R / M`, i = 0..=M.
    pub fn radial_from_fn(radius: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = radius / m as f64;
        Self::radial(0.0, h, (0..=m).map(|i| f(i as f64 * h)).collect())
    }

    /// Samples `f(x, y)` on `[x0, x0 + (nx-1) h] × [y0, y0 + (ny-1) h]`.
    pub fn planar_from_fn(x0: f64, y0: f64, h: f64, nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut u = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                u.push(f(x0 + i as f64 * h, y0 + j as f64 * h));
            }
        }
        Self::planar(x0, y0, h, nx, ny, u)
    }

    /// Dimension of the parameter domain.
    pub fn m(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    fn axis_index(&self, node: usize) -> Vec<usize> {
        match self.m() {
            1 => vec![node],
            _ => vec![node % self.dims[0], node / self.dims[0]],
        }
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.axis_index(node)
            .iter()
            .zip(&self.origin)
            .map(|(&i, &o)| o + i as f64 * self.h)
            .collect()
    }

    /// Whether the node lies on the boundary of Ω. The axis r = 0 of a
    /// radial section is interior.
    pub fn is_boundary(&self, node: usize) -> bool {
        let idx = self.axis_index(node);
        idx.iter().enumerate().any(|(a, &i)| {
            let first = i == 0 && !(self.m() == 1 && self.origin[0] == 0.0);
            first || i + 1 == self.dims[a]
        })
    }

    /// Nodes where u leaves the half-space: u ≤ 0 inside, u < 0 on the boundary.
    pub fn domain_violations(&self) -> Vec<usize> {
        (0..self.u.len())
            .filter(|&node| {
                let v = self.u[node];
                if self.is_boundary(node) { v < 0.0 } else { v <= 0.0 }
            })
            .collect()
    }

    fn check_domain(&self) -> Result<()> {
        match self.domain_violations().first() {
            Some(&node) => Err(Error::DomainViolation { node, value: self.u[node] }),
            None => Ok(()),
        }
    }

    /// Reads `r,u` or `x,y,u` rows with a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        let cols = headers.len();
        if !(cols == 2 || cols == 3) || headers.get(cols - 1) != Some("u") {
            return Err(Error::Parse(format!(
                "expected header `r,u` or `x,y,u`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != cols {
                return Err(Error::Parse(format!("row {}: expected {cols} fields", line + 1)));
            }
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| Error::Parse(format!("row {}: non-numeric field", line + 1)))?;
            rows.push(row);
        }
        if cols == 2 {
            rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
            let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
            let h = uniform_spacing(&xs)?;
            Self::radial(xs[0], h, rows.iter().map(|r| r[1]).collect()).map_err(as_parse)
        } else {
            let xs = distinct(rows.iter().map(|r| r[0]));
            let ys = distinct(rows.iter().map(|r| r[1]));
            let hx = uniform_spacing(&xs)?;
            let hy = uniform_spacing(&ys)?;
            if rel_residual(hx, hy) > 1e-9 {
                return Err(Error::Parse(format!("unequal spacings {hx} and {hy}")));
            }
            let (nx, ny) = (xs.len(), ys.len());
            if rows.len() != nx * ny {
                return Err(Error::Parse(format!("{} rows do not fill a {nx}x{ny} grid", rows.len())));
            }
            let mut u = vec![f64::NAN; nx * ny];
            for r in &rows {
                let i = ((r[0] - xs[0]) / hx).round() as usize;
                let j = ((r[1] - ys[0]) / hx).round() as usize;
                u[j * nx + i] = r[2];
            }
            if u.iter().any(|v| v.is_nan()) {
                return Err(Error::Parse("grid has missing or duplicate nodes".into()));
            }
            Self::planar(xs[0], ys[0], hx, nx, ny, u).map_err(as_parse)
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: &[&str] = if self.m() == 1 { &["r", "u"] } else { &["x", "y", "u"] };
        w.write_record(header).map_err(csv_io)?;
        for node in 0..self.len() {
            let mut rec: Vec<String> = self.coords(node).iter().map(|c| fmt_f64(*c)).collect();
            rec.push(fmt_f64(self.u[node]));
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn as_parse(e: Error) -> Error {
    Error::Parse(e.to_string())
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Shortest representation that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn distinct(vals: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = vals.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| rel_residual(*a, *b) < 1e-12);
    v
}

fn uniform_spacing(xs: &[f64]) -> Result<f64> {
    if xs.len() < 3 {
        return Err(Error::Parse("need at least 3 nodes per axis".into()));
    }
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    for (i, &x) in xs.iter().enumerate() {
        if (x - (xs[0] + i as f64 * h)).abs() > 1e-9 * h.max(x.abs()) {
            return Err(Error::Parse(format!("non-uniform spacing near coordinate {x}")));
        }
    }
    if !(h > 0.0) {
        return Err(Error::Parse("repeated coordinates".into()));
    }
    Ok(h)
}

/// First and second derivatives of a uniformly sampled line: central in the
/// interior, one-sided second order at the ends. With `mirror_start`, the
/// first node is a symmetry axis (reflection u_{-1} = u_1).
pub fn line_derivatives(u: &[f64], h: f64, mirror_start: bool) -> (Vec<f64>, Vec<f64>) {
    let n = u.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for i in 1..n - 1 {
        d1[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
        d2[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
    }
    let one_sided = |a: f64, b: f64, c: f64, d: Option<f64>| {
        let first = (-3.0 * a + 4.0 * b - c) / (2.0 * h);
        let second = match d {
            Some(d) => (2.0 * a - 5.0 * b + 4.0 * c - d) / (h * h),
            None => (a - 2.0 * b + c) / (h * h),
        };
        (first, second)
    };
    if mirror_start {
        d1[0] = 0.0;
        d2[0] = 2.0 * (u[1] - u[0]) / (h * h);
    } else {
        (d1[0], d2[0]) = one_sided(u[0], u[1], u[2], u.get(3).copied());
    }
    let last = n - 1;
    let (f, s) = one_sided(u[last], u[last - 1], u[last - 2], (n >= 4).then(|| u[last - 3]));
    d1[last] = -f;
    d2[last] = s;
    (d1, d2)
}

/// Hyperbolic radial and angular principal curvatures of a radial graph.
pub fn radial_curvatures(r: f64, u: f64, up: f64, upp: f64) -> Result<(f64, f64)> {
    if !(u > 0.0) {
        return Err(Error::DomainViolation { node: 0, value: u });
    }
    if !(r >= 0.0) {
        return Err(Error::invalid(format!("radius r = {r} < 0")));
    }
    let w = (1.0 + up * up).sqrt();
    let nu = 1.0 / w;
    let kt_rad = upp / (w * w * w);
    let kt_ang = if r == 0.0 {
        if up.abs() > AXIS_SLOPE_TOL {
            return Err(Error::SymmetryViolation(up));
        }
        kt_rad
    } else {
        up / (r * w)
    };
    Ok((u * kt_rad + nu, u * kt_ang + nu))
}

/// Euclidean and hyperbolic data at one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeShape {
    pub coords: Vec<f64>,
    pub u: f64,
    pub du: Vec<f64>,
    /// D²u, row-major m×m.
    pub d2u: Vec<f64>,
    /// δ_ij + u_i u_j, row-major.
    pub g_tilde: Vec<f64>,
    /// u_ij / √(1+|Du|²), row-major.
    pub h_tilde: Vec<f64>,
    pub nu: f64,
    /// Euclidean principal curvatures (n values).
    pub kappa_tilde: Vec<f64>,
    /// Hyperbolic principal curvatures, descending (n values).
    pub kappa: Vec<f64>,
    /// |1 - |∇̃u|²_g̃ - ν²|.
    pub gradient_identity_residual: f64,
    /// Imaginary part of the eigenvalues of g̃⁻¹h̃ (0 unless roundoff).
    pub imaginary: f64,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeData {
    /// Domain dimension (1 radial, 2 planar).
    pub m: usize,
    /// Hypersurface dimension.
    pub n: usize,
    pub h: f64,
    pub dims: Vec<usize>,
    pub nodes: Vec<NodeShape>,
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Shape data of the graph of `field` as a hypersurface of H^{n+1}. A radial
/// field (m = 1) describes a rotation hypersurface and takes any n ≥ 2; a
/// planar field needs n = 2.
pub fn shape_from_graph(field: &GraphField, n: usize) -> Result<ShapeData> {
    field.check_domain()?;
    match field.m() {
        1 => {
            if n < 2 {
                return Err(Error::invalid(format!("n = {n} < 2")));
            }
        }
        _ => {
            if n != 2 {
                return Err(Error::invalid(format!("a planar field describes a surface; n = {n} != 2")));
            }
        }
    }
    let h = field.h;
    let nodes = if field.m() == 1 {
        let axis = field.origin[0] == 0.0;
        let (d1, d2) = line_derivatives(&field.u, h, axis);
        (0..field.len())
            .map(|i| {
                let r = field.coords(i)[0];
                let (u, p, q) = (field.u[i], d1[i], d2[i]);
                let w2 = 1.0 + p * p;
                let w = w2.sqrt();
                let nu = 1.0 / w;
                let kt_rad = q / (w2 * w);
                let kt_ang = if r == 0.0 { kt_rad } else { p / (r * w) };
                let mut kt = vec![kt_rad];
                kt.extend(std::iter::repeat_n(kt_ang, n - 1));
                let kappa = sorted_desc(kt.iter().map(|k| u * k + nu).collect());
                let grad2 = p * p / w2;
                NodeShape {
                    coords: vec![r],
                    u,
                    du: vec![p],
                    d2u: vec![q],
                    g_tilde: vec![w2],
                    h_tilde: vec![q / w],
                    nu,
                    kappa_tilde: kt,
                    kappa,
                    gradient_identity_residual: (1.0 - grad2 - nu * nu).abs(),
                    imaginary: 0.0,
                    boundary: field.is_boundary(i),
                }
            })
            .collect()
    } else {
        let (nx, ny) = (field.dims[0], field.dims[1]);
        let along_x = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut d1 = vec![0.0; nx * ny];
            let mut d2 = vec![0.0; nx * ny];
            for j in 0..ny {
                let (a, b) = line_derivatives(&v[j * nx..(j + 1) * nx], h, false);
                d1[j * nx..(j + 1) * nx].copy_from_slice(&a);
                d2[j * nx..(j + 1) * nx].copy_from_slice(&b);
            }
            (d1, d2)
        };
        let along_y = |v: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut d1 = vec![0.0; nx * ny];
            let mut d2 = vec![0.0; nx * ny];
            for i in 0..nx {
                let col: Vec<f64> = (0..ny).map(|j| v[j * nx + i]).collect();
                let (a, b) = line_derivatives(&col, h, false);
                for j in 0..ny {
                    d1[j * nx + i] = a[j];
                    d2[j * nx + i] = b[j];
                }
            }
            (d1, d2)
        };
        let (ux, uxx) = along_x(&field.u);
        let (uy, uyy) = along_y(&field.u);
        let (uxy, _) = along_y(&ux);
        (0..field.len())
            .map(|i| {
                let (p, q) = (ux[i], uy[i]);
                let d2 = [uxx[i], uxy[i], uxy[i], uyy[i]];
                let w2 = 1.0 + p * p + q * q;
                let w = w2.sqrt();
                let nu = 1.0 / w;
                let g = [1.0 + p * p, p * q, p * q, 1.0 + q * q];
                let ht: Vec<f64> = d2.iter().map(|x| x / w).collect();
                // g̃⁻¹ = (I - Du Duᵀ / W²).
                let gi = [1.0 - p * p / w2, -p * q / w2, -p * q / w2, 1.0 - q * q / w2];
                let s = [
                    gi[0] * ht[0] + gi[1] * ht[2],
                    gi[0] * ht[1] + gi[1] * ht[3],
                    gi[2] * ht[0] + gi[3] * ht[2],
                    gi[2] * ht[1] + gi[3] * ht[3],
                ];
                let half_tr = 0.5 * (s[0] + s[3]);
                let det = s[0] * s[3] - s[1] * s[2];
                let disc = half_tr * half_tr - det;
                let (root, imaginary) = if disc >= 0.0 { (disc.sqrt(), 0.0) } else { (0.0, (-disc).sqrt()) };
                let kt = vec![half_tr + root, half_tr - root];
                let u = field.u[i];
                let kappa = sorted_desc(kt.iter().map(|k| u * k + nu).collect());
                let grad2 = p * (gi[0] * p + gi[1] * q) + q * (gi[2] * p + gi[3] * q);
                NodeShape {
                    coords: field.coords(i),
                    u,
                    du: vec![p, q],
                    d2u: d2.to_vec(),
                    g_tilde: g.to_vec(),
                    h_tilde: ht,
                    nu,
                    kappa_tilde: kt,
                    kappa,
                    gradient_identity_residual: (1.0 - grad2 - nu * nu).abs(),
                    imaginary,
                    boundary: field.is_boundary(i),
                }
            })
            .collect()
    };
    Ok(ShapeData {
        m: field.m(),
        n,
        h,
        dims: field.dims.clone(),
        nodes,
    })
}

/// Residuals of the elliptic identity for ν^{n+1} with F = σ_k, against
/// both readings of the final term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuIdentityResidual {
    /// Max relative residual with `kF(1 + ν²)`.
    pub plus: f64,
    /// Max relative residual with `kF(1 - ν²)`.
    pub minus: f64,
    /// Which reading fits better.
    pub better: NuSign,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuSign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub k: usize,
    pub l: f64,
    /// ln κ_1 - L ln ν per node; `None` where κ_1 ≤ 0.
    pub q: Vec<Option<f64>>,
    pub max_q: Option<f64>,
    pub max_q_node: Option<usize>,
    pub nu_min: f64,
    pub nu_max: f64,
    pub max_abs_kappa: f64,
    pub min_kappa: f64,
    pub in_gamma_k: Vec<bool>,
    pub gamma_coverage: f64,
    pub pk: Vec<f64>,
    /// Nodes where κ_1 is repeated.
    pub multiplicity: Vec<bool>,
    /// Nodes with κ_1 ≤ 0.
    pub nonpositive_kappa1: Vec<usize>,
    pub max_gradient_identity_residual: f64,
    pub max_imaginary: f64,
    /// Only for radial fields with at least 5 nodes.
    pub nu_identity: Option<NuIdentityResidual>,
}

/// Field diagnostics with the test function Q = ln κ_1 - L ln ν^{n+1}.
pub fn diagnostics(shape: &ShapeData, k: usize, l: f64) -> Result<Diagnostics> {
    if k < 1 || k > shape.n {
        return Err(Error::invalid(format!("k = {k} outside 1..={}", shape.n)));
    }
    let mut q = Vec::with_capacity(shape.nodes.len());
    let mut in_gamma = Vec::with_capacity(shape.nodes.len());
    let mut pk = Vec::with_capacity(shape.nodes.len());
    let mut multiplicity = Vec::with_capacity(shape.nodes.len());
    let mut nonpositive = Vec::new();
    let (mut nu_min, mut nu_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut max_abs, mut min_kappa) = (0.0f64, f64::INFINITY);
    let (mut max_q, mut max_q_node) = (None::<f64>, None);
    let (mut max_id, mut max_im) = (0.0f64, 0.0f64);
    for (i, node) in shape.nodes.iter().enumerate() {
        let b = CurvatureVector::new(node.kappa.clone())?.bundle();
        in_gamma.push(b.in_gamma_k(k)?);
        pk.push(b.normalized_pk(k)?);
        let k1 = node.kappa[0];
        multiplicity.push(node.kappa.len() > 1 && (k1 - node.kappa[1]).abs() < MULTIPLICITY_GAP);
        let qi = if k1 > 0.0 && node.nu > 0.0 {
            Some(k1.ln() - l * node.nu.ln())
        } else {
            nonpositive.push(i);
            None
        };
        if let Some(v) = qi {
            if max_q.is_none_or(|m| v > m) {
                max_q = Some(v);
                max_q_node = Some(i);
            }
        }
        q.push(qi);
        nu_min = nu_min.min(node.nu);
        nu_max = nu_max.max(node.nu);
        for &kv in &node.kappa {
            max_abs = max_abs.max(kv.abs());
            min_kappa = min_kappa.min(kv);
        }
        max_id = max_id.max(node.gradient_identity_residual);
        max_im = max_im.max(node.imaginary);
    }
    let coverage = in_gamma.iter().filter(|&&b| b).count() as f64 / in_gamma.len() as f64;
    let nu_identity = if shape.m == 1 && shape.nodes.len() >= 5 && k >= 1 {
        Some(nu_identity_residual(shape, k)?)
    } else {
        None
    };
    Ok(Diagnostics {
        k,
        l,
        q,
        max_q,
        max_q_node,
        nu_min,
        nu_max,
        max_abs_kappa: max_abs,
        min_kappa,
        in_gamma_k: in_gamma,
        gamma_coverage: coverage,
        pk,
        multiplicity,
        nonpositive_kappa1: nonpositive,
        max_gradient_identity_residual: max_id,
        max_imaginary: max_im,
        nu_identity,
    })
}

/// Evaluates `Ḟ^{ij}∇_{ij}ν = -(Ḟ^{ij}h_{kj}h_i^k + ΣḞ^{ii})ν + 2Ḟ^{ij}u_iν_j/u + kF(1 ± ν²)`
/// on a rotation hypersurface by finite differences, at nodes away from the
/// axis and the rim. The induced metric is A dr² + B² dΩ² with
/// A = (1+u'²)/u², B = r/u.
fn nu_identity_residual(shape: &ShapeData, k: usize) -> Result<NuIdentityResidual> {
    let n = shape.n;
    let h = shape.h;
    let nu: Vec<f64> = shape.nodes.iter().map(|s| s.nu).collect();
    let axis = shape.nodes[0].coords[0] == 0.0;
    let (nu1, nu2) = line_derivatives(&nu, h, axis);
    let (mut plus, mut minus) = (0.0f64, 0.0f64);
    let mut count = 0;
    let kk = k as isize;
    // ν at the rim comes from a one-sided slope; differencing it again would
    // turn its O(h²) error into O(1), so the stencil stays one node inside.
    for i in 1..shape.nodes.len() - 2 {
        let s = &shape.nodes[i];
        let r = s.coords[0];
        if r == 0.0 || s.u <= 0.0 {
            continue;
        }
        let (u, p, q) = (s.u, s.du[0], s.d2u[0]);
        let w2 = 1.0 + p * p;
        let a = w2 / (u * u);
        let a_prime = 2.0 * p * (q * u - w2) / (u * u * u);
        let b_over = 1.0 / r - p / u;
        let hess_rad = (nu2[i] - a_prime / (2.0 * a) * nu1[i]) / a;
        let hess_ang = b_over * nu1[i] / a;
        let kt_rad = q / (w2 * w2.sqrt());
        let kt_ang = p / (r * w2.sqrt());
        let k_rad = u * kt_rad + s.nu;
        let k_ang = u * kt_ang + s.nu;
        let mut full = vec![k_rad];
        full.extend(std::iter::repeat_n(k_ang, n - 1));
        let bundle = CurvatureVector::new(full)?.bundle();
        let f = bundle.sigma(kk);
        let f_rad = bundle.minor1(0, kk - 1);
        let f_ang = if n > 1 { bundle.minor1(1, kk - 1) } else { 0.0 };
        let lhs = f_rad * hess_rad + (n - 1) as f64 * f_ang * hess_ang;
        let trace_h2 = f_rad * k_rad * k_rad + (n - 1) as f64 * f_ang * k_ang * k_ang;
        let trace = f_rad + (n - 1) as f64 * f_ang;
        let cross = 2.0 * f_rad * p * nu1[i] / (a * u);
        let base = -(trace_h2 + trace) * s.nu + cross;
        let kf = k as f64 * f;
        let nu2v = s.nu * s.nu;
        plus = plus.max(rel_residual(lhs, base + kf * (1.0 + nu2v)));
        minus = minus.max(rel_residual(lhs, base + kf * (1.0 - nu2v)));
        count += 1;
    }
    Ok(NuIdentityResidual {
        plus,
        minus,
        better: if plus <= minus { NuSign::Plus } else { NuSign::Minus },
        nodes: count,
    })
}

impl ShapeData {
    /// Writes `coords..., u, nu, kappa_1..kappa_n, Q`.
    pub fn write_csv<W: Write>(&self, writer: W, diag: &Diagnostics) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = if self.m == 1 {
            vec!["r".into()]
        } else {
            vec!["x".into(), "y".into()]
        };
        header.extend(["u".to_string(), "nu".to_string()]);
        header.extend((1..=self.n).map(|i| format!("kappa_{i}")));
        header.push("Q".into());
        w.write_record(&header).map_err(csv_io)?;
        for (node, q) in self.nodes.iter().zip(&diag.q) {
            let mut rec: Vec<String> = node.coords.iter().map(|c| fmt_f64(*c)).collect();
            rec.push(fmt_f64(node.u));
            rec.push(fmt_f64(node.nu));
            rec.extend(node.kappa.iter().map(|k| fmt_f64(*k)));
            rec.push(q.map(fmt_f64).unwrap_or_default());
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Equidistant cap over the ball of radius `radius` with umbilic curvature
/// `c ∈ (0,1)` and boundary height `eps`: returns (ρ, d) with
/// u(r) = √(ρ² - r²) - d and u(radius) = eps.
pub fn cap_parameters(c: f64, radius: f64, eps: f64) -> Result<(f64, f64)> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("cap curvature {c} outside (0, 1)")));
    }
    if !(radius > 0.0 && eps >= 0.0) {
        return Err(Error::invalid("cap needs R > 0 and eps >= 0"));
    }
    let s = 1.0 - c * c;
    let rho = (eps * c + (eps * eps + s * radius * radius).sqrt()) / s;
    Ok((rho, c * rho))
}

pub fn cap_height(rho: f64, d: f64, r: f64) -> f64 {
    (rho * rho - r * r).sqrt() - d
}

/// P_k of the spectrum (κ_rad, κ_ang × (n-1)).
pub fn pk_two_value(n: usize, k: usize, k_rad: f64, k_ang: f64) -> f64 {
    let ang_k = k_ang.powi(k as i32);
    let ang_k1 = k_ang.powi(k as i32 - 1);
    (binomial(n - 1, k) * ang_k + binomial(n - 1, k - 1) * k_rad * ang_k1) / binomial(n, k)
}
