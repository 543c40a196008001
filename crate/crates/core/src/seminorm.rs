//! Gagliardo seminorm [u]^{N/s}_{s,N/s} of radial piecewise-linear fields via
//! the one-dimensional radial reduction with kernel
//! r^{N-1} t^{N-1} (r^2+t^2) / |r^2-t^2|^{N+1}.
//!
//! Quadrature points are precomputed once per grid, so the functional, its
//! gradient and its Hessian are exact derivatives of one discrete sum.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::radial::{RadialField, RadialGrid};
use crate::special::sphere_measure;
use rayon::prelude::*;
use std::sync::Arc;

/// Off-diagonal point: D = (1-a) u_i + a u_{i+1} - (1-b) u_j - b u_{j+1}.
#[derive(Debug, Clone, Copy)]
struct PairPoint {
    i: u32,
    j: u32,
    a: f64,
    b: f64,
    w: f64,
}

/// Single-variable point: contributes w |(1-a) u_j + a u_{j+1}|^p.
#[derive(Debug, Clone, Copy)]
struct TailPoint {
    j: u32,
    a: f64,
    w: f64,
}

const CHUNK: usize = 8192;

/// Precomputed quadrature for the seminorm on one grid.
#[derive(Debug, Clone)]
pub struct SeminormOperator {
    grid: Arc<RadialGrid>,
    dim: usize,
    s: f64,
    p: f64,
    int_p: Option<i32>,
    pairs: Vec<PairPoint>,
    /// Per-cell weight of |u_{i+1} - u_i|^p from the diagonal cells.
    diag: Vec<f64>,
    tail: Vec<TailPoint>,
}

fn kernel(n: i32, r: f64, t: f64) -> f64 {
    let d = (r - t).abs();
    let sum = r + t;
    (r * t).powi(n - 1) * (r * r + t * t) / (d * sum).powi(n + 1)
}

#[inline]
fn abs_pow(x: f64, p: f64, ip: Option<i32>) -> f64 {
    match ip {
        Some(k) => x.abs().powi(k),
        None => x.abs().powf(p),
    }
}

impl SeminormOperator {
    pub fn new(grid: Arc<RadialGrid>, dim: usize, s: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let nf = dim as f64;
        let p = nf / s;
        let e = p - nf - 1.0;
        if !(e + 2.0 > 0.0) || !(s > 0.0) {
            return Err(Error::SingularExponent(e + 2.0));
        }
        let ni = dim as i32;
        let sm = sphere_measure(dim);
        let pref = 2.0 * sm * sm;
        let x = grid.nodes();
        let m = grid.segments();

        // Diagonal cells: t = r - d with d = (r - lo) v^k.
        let k_diag = (3.0 / (e + 1.0)).max(1.0);
        let rr = gauss_legendre(10);
        let rv = gauss_legendre(14);
        let diag: Vec<f64> = (0..m)
            .map(|i| {
                let (lo, h) = (x[i], grid.h(i));
                let mut acc = 0.0;
                for (xr, wr) in rr.nodes.iter().zip(&rr.weights) {
                    let r = lo + h * xr;
                    let span = r - lo;
                    for (v, wv) in rv.nodes.iter().zip(&rv.weights) {
                        let vk1 = v.powf(k_diag - 1.0);
                        let d = span * vk1 * v;
                        let jac = span * k_diag * vk1;
                        let t = r - d;
                        let g = (r * t).powi(ni - 1) * (r * r + t * t) / (r + t).powi(ni + 1);
                        // (d/h)^p d^{-N-1} written to avoid overflow for tiny d
                        let dp = (d / h).powf(p) * d.powi(-(ni + 1));
                        acc += wr * wv * h * jac * dp * g;
                    }
                }
                pref * acc
            })
            .collect();

        let mut pairs = Vec::new();
        // Adjacent cells (j = i-1) sharing the node c = x_i: Duffy split.
        let k_duffy = 2.0;
        let dr = gauss_legendre(12);
        let ds = gauss_legendre(10);
        for i in 1..m {
            let j = i - 1;
            let (c, hi, hj) = (x[i], grid.h(i), grid.h(j));
            for (v, wv) in dr.nodes.iter().zip(&dr.weights) {
                let vk1 = v.powf(k_duffy - 1.0);
                let rho = vk1 * v;
                let jr = k_duffy * vk1;
                for (sg, ws) in ds.nodes.iter().zip(&ds.weights) {
                    for tri in 0..2 {
                        let (a, b) = if tri == 0 { (hj * rho, hi * rho * sg) } else { (hj * rho * sg, hi * rho) };
                        let (r, t) = (c + b, c - a);
                        let w = pref * wv * ws * jr * hi * hj * rho * kernel(ni, r, t);
                        pairs.push(PairPoint { i: i as u32, j: j as u32, a: b / hi, b: 1.0 - a / hj, w });
                    }
                }
            }
        }
        // Separated cells: tensor Gauss with order chosen by separation.
        for i in 2..m {
            for j in 0..i - 1 {
                let gap = x[i] - x[j + 1];
                let sep = gap / grid.h(i).max(grid.h(j));
                let n = if sep >= 20.0 {
                    2
                } else if sep >= 6.0 {
                    3
                } else if sep >= 2.0 {
                    5
                } else {
                    8
                };
                let g = gauss_legendre(n);
                let (hi, hj) = (grid.h(i), grid.h(j));
                for (xa, wa) in g.nodes.iter().zip(&g.weights) {
                    let r = x[i] + hi * xa;
                    for (xb, wb) in g.nodes.iter().zip(&g.weights) {
                        let t = x[j] + hj * xb;
                        let w = pref * wa * wb * hi * hj * kernel(ni, r, t);
                        pairs.push(PairPoint { i: i as u32, j: j as u32, a: *xa, b: *xb, w });
                    }
                }
            }
        }

        // Region beyond R_max where the field vanishes:
        // int_R^inf r^{N-1}(r^2+t^2)/(r^2-t^2)^{N+1} dr = R^N / (N (R^2-t^2)^N).
        let big_r = grid.r_max();
        let tail_w = |t: f64| pref * t.powi(ni - 1) * big_r.powi(ni) / (nf * (big_r * big_r - t * t).powi(ni));
        let mut tail = Vec::new();
        let gt = gauss_legendre(8);
        for j in 0..m - 1 {
            for (xa, wa) in gt.nodes.iter().zip(&gt.weights) {
                let t = x[j] + grid.h(j) * xa;
                tail.push(TailPoint { j: j as u32, a: *xa, w: wa * grid.h(j) * tail_w(t) });
            }
        }
        let gl = gauss_legendre(12);
        let j = m - 1;
        for (v, wv) in gl.nodes.iter().zip(&gl.weights) {
            // t = R - h v^2, graded toward the outer radius
            let dist = grid.h(j) * v * v;
            let t = big_r - dist;
            let a = 1.0 - v * v;
            tail.push(TailPoint { j: j as u32, a, w: wv * 2.0 * v * grid.h(j) * tail_w(t) });
        }

        let int_p = if (p - p.round()).abs() < 1e-12 && p.round() < 60.0 { Some(p.round() as i32) } else { None };
        Ok(SeminormOperator { grid, dim, s, p, int_p, pairs, diag, tail })
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn point_count(&self) -> usize {
        self.pairs.len() + self.tail.len() + self.diag.len()
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        assert_eq!(u.len(), self.grid.len(), "field/grid size mismatch");
        let last = *u.last().unwrap();
        if last != 0.0 {
            return Err(Error::NonVanishingBoundary(last));
        }
        Ok(())
    }

    #[inline]
    fn pair_d(pt: &PairPoint, u: &[f64]) -> f64 {
        let (i, j) = (pt.i as usize, pt.j as usize);
        (1.0 - pt.a) * u[i] + pt.a * u[i + 1] - (1.0 - pt.b) * u[j] - pt.b * u[j + 1]
    }

    #[inline]
    fn tail_v(pt: &TailPoint, u: &[f64]) -> f64 {
        let j = pt.j as usize;
        (1.0 - pt.a) * u[j] + pt.a * u[j + 1]
    }

    /// [u]^{N/s} for nodal values `u` (last value must be 0).
    pub fn value_nodal(&self, u: &[f64]) -> Result<f64> {
        self.check(u)?;
        let (p, ip) = (self.p, self.int_p);
        let partial: Vec<f64> = self
            .pairs
            .par_chunks(CHUNK)
            .map(|ch| ch.iter().map(|pt| pt.w * abs_pow(Self::pair_d(pt, u), p, ip)).sum::<f64>())
            .collect();
        let mut total: f64 = partial.iter().sum();
        total += self.diag.iter().enumerate().map(|(i, w)| w * abs_pow(u[i + 1] - u[i], p, ip)).sum::<f64>();
        total += self.tail.iter().map(|pt| pt.w * abs_pow(Self::tail_v(pt, u), p, ip)).sum::<f64>();
        Ok(total)
    }

    pub fn value(&self, u: &RadialField) -> Result<f64> {
        assert!(Arc::ptr_eq(u.grid(), &self.grid) || **u.grid() == *self.grid, "grid mismatch");
        self.value_nodal(u.values())
    }

    /// Gradient of [u]^{N/s} with respect to the nodal values.
    pub fn gradient_nodal(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check(u)?;
        let (p, ip) = (self.p, self.int_p);
        let n = u.len();
        let dpow = |d: f64| -> f64 {
            match ip {
                Some(k) => p * d.abs().powi(k - 2) * d,
                None => p * d.abs().powf(p - 2.0) * d,
            }
        };
        let partial: Vec<Vec<f64>> = self
            .pairs
            .par_chunks(CHUNK)
            .map(|ch| {
                let mut g = vec![0.0; n];
                for pt in ch {
                    let d = Self::pair_d(pt, u);
                    if d == 0.0 {
                        continue;
                    }
                    let c = pt.w * dpow(d);
                    let (i, j) = (pt.i as usize, pt.j as usize);
                    g[i] += c * (1.0 - pt.a);
                    g[i + 1] += c * pt.a;
                    g[j] -= c * (1.0 - pt.b);
                    g[j + 1] -= c * pt.b;
                }
                g
            })
            .collect();
        let mut g = vec![0.0; n];
        for part in &partial {
            for (a, b) in g.iter_mut().zip(part) {
                *a += b;
            }
        }
        for (i, w) in self.diag.iter().enumerate() {
            let d = u[i + 1] - u[i];
            if d != 0.0 {
                let c = w * dpow(d);
                g[i + 1] += c;
                g[i] -= c;
            }
        }
        for pt in &self.tail {
            let v = Self::tail_v(pt, u);
            if v != 0.0 {
                let c = pt.w * dpow(v);
                let j = pt.j as usize;
                g[j] += c * (1.0 - pt.a);
                g[j + 1] += c * pt.a;
            }
        }
        Ok(g)
    }

    /// Hessian of [u]^{N/s}, dense row-major n x n, plus `shift` times the
    /// Hessian of [.]^2 (a fixed quadratic form keeping the matrix definite).
    pub fn hessian_nodal(&self, u: &[f64], shift: f64) -> Result<Vec<f64>> {
        self.check(u)?;
        let p = self.p;
        let n = u.len();
        let curv = |d: f64| p * (p - 1.0) * d.abs().powf(p - 2.0) + shift * 2.0;
        let mut h = vec![0.0; n * n];
        for pt in &self.pairs {
            let d = Self::pair_d(pt, u);
            let c = pt.w * curv(d);
            let (i, j) = (pt.i as usize, pt.j as usize);
            let idx = [i, i + 1, j, j + 1];
            let coef = [1.0 - pt.a, pt.a, -(1.0 - pt.b), -pt.b];
            for a in 0..4 {
                let row = idx[a] * n;
                let ca = c * coef[a];
                for b in 0..4 {
                    h[row + idx[b]] += ca * coef[b];
                }
            }
        }
        for (i, w) in self.diag.iter().enumerate() {
            let c = w * curv(u[i + 1] - u[i]);
            h[i * n + i] += c;
            h[(i + 1) * n + i + 1] += c;
            h[i * n + i + 1] -= c;
            h[(i + 1) * n + i] -= c;
        }
        for pt in &self.tail {
            let c = pt.w * curv(Self::tail_v(pt, u));
            let j = pt.j as usize;
            let (c0, c1) = (1.0 - pt.a, pt.a);
            h[j * n + j] += c * c0 * c0;
            h[j * n + j + 1] += c * c0 * c1;
            h[(j + 1) * n + j] += c * c0 * c1;
            h[(j + 1) * n + j + 1] += c * c1 * c1;
        }
        Ok(h)
    }
}

/// [u]^{N/s}_{s,N/s} of a radial field (builds a one-off operator).
pub fn gagliardo_seminorm(u: &RadialField, s: f64, n: usize) -> Result<f64> {
    SeminormOperator::new(u.grid().clone(), n, s)?.value(u)
}

/// ||w_R||_V^{N/s} of the plateau test function against the bound J(R) + K.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TestFunctionBound {
    pub dim: usize,
    pub s: f64,
    pub r: f64,
    pub seminorm: f64,
    pub v_term: f64,
    pub norm_pow: f64,
    pub bound: f64,
    /// 1 - norm_pow / bound.
    pub rel_margin: f64,
}

pub fn test_function_bound(grid: Arc<RadialGrid>, n: usize, s: f64, r: f64, v: &crate::radial::Potential, v_upper: f64) -> Result<TestFunctionBound> {
    use crate::constants::{j_frak, k_frak};
    let w = crate::radial::plateau_test_function(r, grid)?;
    let seminorm = gagliardo_seminorm(&w, s, n)?;
    let v_term = crate::radial::weighted_power_integral(&w, n as f64 / s, v, n);
    let norm_pow = seminorm + v_term;
    let bound = j_frak(n, s, r, v_upper) + k_frak(n, s);
    Ok(TestFunctionBound { dim: n, s, r, seminorm, v_term, norm_pow, bound, rel_margin: 1.0 - norm_pow / bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::k_frak;
    use crate::radial::plateau_test_function;

    fn small_grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::uniform_geometric(48, 8.0, 1.15, 8).unwrap())
    }

    fn hat(grid: Arc<RadialGrid>, r0: f64) -> RadialField {
        RadialField::from_fn(grid, |r| (1.0 - r / r0).max(0.0))
    }

    #[test]
    fn constant_differences_vanish() {
        let g = small_grid();
        let op = SeminormOperator::new(g.clone(), 2, 0.5).unwrap();
        assert_eq!(op.value(&RadialField::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn nonvanishing_boundary_rejected() {
        let g = small_grid();
        let op = SeminormOperator::new(g.clone(), 2, 0.5).unwrap();
        let u = RadialField::from_fn(g, |_| 1.0);
        assert!(matches!(op.value(&u), Err(Error::NonVanishingBoundary(_))));
    }

    #[test]
    fn plateau_below_k_frak() {
        let g = Arc::new(RadialGrid::default_grid());
        let w = plateau_test_function(1.0 / 3.0, g).unwrap();
        let v = gagliardo_seminorm(&w, 0.5, 2).unwrap();
        assert!(v > 0.0 && v < k_frak(2, 0.5), "{v}");
        let b = test_function_bound(Arc::new(RadialGrid::default_grid()), 3, 0.7, 1.0 / 3.0, &Default::default(), 1.0).unwrap();
        assert!(b.rel_margin > 0.01, "{b:?}");
    }

    #[test]
    fn homogeneity() {
        let g = small_grid();
        let op = SeminormOperator::new(g.clone(), 2, 0.7).unwrap();
        let u = hat(g, 0.5);
        let v0 = op.value(&u).unwrap();
        let v1 = op.value(&u.scaled(-2.5)).unwrap();
        assert!((v1 / v0 - 2.5f64.powf(2.0 / 0.7)).abs() < 1e-10 * v1 / v0);
    }

    #[test]
    fn gradient_matches_differences() {
        let g = small_grid();
        for s in [0.5, 0.7, 0.35] {
            let op = SeminormOperator::new(g.clone(), 2, s).unwrap();
            let u = RadialField::from_fn(g.clone(), |r| if r < 2.0 { (1.0 - r / 2.0).powi(2) * (1.0 + r) } else { 0.0 });
            let grad = op.gradient_nodal(u.values()).unwrap();
            for k in [0usize, 5, 20, 40, 50] {
                let eps = 1e-6;
                let mut up = u.values().to_vec();
                let mut dn = up.clone();
                up[k] += eps;
                dn[k] -= eps;
                let fd = (op.value_nodal(&up).unwrap() - op.value_nodal(&dn).unwrap()) / (2.0 * eps);
                assert!((fd - grad[k]).abs() <= 1e-6 * grad[k].abs().max(1e-3), "s={s} k={k} fd={fd} g={}", grad[k]);
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let g = Arc::new(RadialGrid::uniform_geometric(16, 3.0, 1.2, 8).unwrap());
        let op = SeminormOperator::new(g.clone(), 2, 0.5).unwrap();
        let u = RadialField::from_fn(g.clone(), |r| (1.0 - r / 3.0) * (1.0 + r * r).recip());
        let n = g.len();
        let h = op.hessian_nodal(u.values(), 0.0).unwrap();
        for k in [0usize, 7, 15] {
            let eps = 1e-6;
            let mut up = u.values().to_vec();
            let mut dn = up.clone();
            up[k] += eps;
            dn[k] -= eps;
            let gp = op.gradient_nodal(&up).unwrap();
            let gm = op.gradient_nodal(&dn).unwrap();
            for l in 0..n - 1 {
                let fd = (gp[l] - gm[l]) / (2.0 * eps);
                assert!((fd - h[l * n + k]).abs() < 1e-5 * h[k * n + k].abs(), "k={k} l={l}");
            }
        }
    }

    #[test]
    fn refinement_converges() {
        let g = Arc::new(RadialGrid::uniform_geometric(24, 4.0, 1.2, 8).unwrap());
        let f = |r: f64| if r < 1.0 { (1.0 - r * r).powi(2) } else { 0.0 };
        let v0 = gagliardo_seminorm(&RadialField::from_fn(g.clone(), f), 0.5, 2).unwrap();
        let g1 = Arc::new(g.refined());
        let v1 = gagliardo_seminorm(&RadialField::from_fn(g1.clone(), f), 0.5, 2).unwrap();
        let g2 = Arc::new(g1.refined());
        let v2 = gagliardo_seminorm(&RadialField::from_fn(g2, f), 0.5, 2).unwrap();
        let order = ((v1 - v0).abs() / (v2 - v1).abs()).log2();
        assert!(order > 0.9, "order {order}: {v0} {v1} {v2}");
    }
}
