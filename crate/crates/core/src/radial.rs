//! Radial grids, piecewise-linear radial fields, Lebesgue-type norms and the
//! Moser-Trudinger functional.

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::special::{mt_phi, sphere_measure};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Strictly increasing nodes 0 = r_0 < ... < r_M = R_max.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    quad_order: usize,
}

/// Parameters of the default uniform-then-geometric grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Number of uniform segments on [0,1].
    pub uniform_segments: usize,
    pub r_max: f64,
    /// Maximal growth ratio of consecutive segments on [1, R_max].
    pub ratio: f64,
    /// Gauss order per segment for single integrals.
    pub quad_order: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        // 264 = 24 * 11 keeps 1/8, 1/6, 1/4 and 1/3 on the grid.
        GridSpec { uniform_segments: 264, r_max: 50.0, ratio: 1.1, quad_order: 8 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<RadialGrid> {
        RadialGrid::uniform_geometric(self.uniform_segments, self.r_max, self.ratio, self.quad_order)
    }
}

impl RadialGrid {
    pub fn new(nodes: Vec<f64>, quad_order: usize) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("need at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid("first node must be 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidGrid("nodes must be finite and strictly increasing".into()));
        }
        if !(1..=64).contains(&quad_order) {
            return Err(Error::InvalidGrid(format!("quadrature order {quad_order} outside 1..=64")));
        }
        Ok(RadialGrid { nodes, quad_order })
    }

    /// `uniform_segments` equal segments on [0,1], then segments growing
    /// geometrically (ratio at most `ratio`) up to `r_max`.
    pub fn uniform_geometric(uniform_segments: usize, r_max: f64, ratio: f64, quad_order: usize) -> Result<Self> {
        if uniform_segments == 0 || !(r_max >= 1.0) || !(ratio >= 1.0 && ratio <= 1.2) {
            return Err(Error::InvalidGrid(format!(
                "need uniform_segments > 0, r_max >= 1, ratio in [1, 1.2]; got ({uniform_segments}, {r_max}, {ratio})"
            )));
        }
        let h0 = 1.0 / uniform_segments as f64;
        let mut nodes: Vec<f64> = (0..=uniform_segments).map(|i| i as f64 * h0).collect();
        let len = r_max - 1.0;
        if len > 1e-14 {
            let total = |q: f64, k: usize| {
                if (q - 1.0).abs() < 1e-14 {
                    h0 * k as f64
                } else {
                    h0 * q * (q.powi(k as i32) - 1.0) / (q - 1.0)
                }
            };
            let mut k = 1usize;
            while total(ratio, k) < len {
                k += 1;
            }
            // Shrink the ratio so that k segments end exactly at r_max.
            let (mut lo, mut hi) = (1.0f64, ratio);
            if total(1.0, k) >= len {
                hi = 1.0;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total(mid, k) < len {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let q = hi;
            let mut h = h0;
            let mut r = 1.0;
            for _ in 0..k - 1 {
                h *= q;
                r += h;
                nodes.push(r);
            }
            nodes.push(r_max);
        }
        RadialGrid::new(nodes, quad_order)
    }

    pub fn default_grid() -> Self {
        GridSpec::default().build().expect("default grid")
    }

    /// Every segment split in half.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len());
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.r_max());
        RadialGrid { nodes, quad_order: self.quad_order }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn h(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    pub fn max_h(&self) -> f64 {
        (0..self.segments()).map(|i| self.h(i)).fold(0.0, f64::max)
    }

    /// Index of the node equal to `r` (relative tolerance 1e-10).
    pub fn node_index(&self, r: f64) -> Option<usize> {
        let i = self.nodes.partition_point(|x| *x < r - 1e-10 * r.abs().max(1e-300));
        (i < self.nodes.len() && (self.nodes[i] - r).abs() <= 1e-10 * r.abs().max(1.0)).then_some(i)
    }

    /// Segment containing `r` (clamped to the grid).
    pub fn locate(&self, r: f64) -> usize {
        let i = self.nodes.partition_point(|x| *x <= r);
        i.saturating_sub(1).min(self.segments() - 1)
    }
}

/// Radial potential V(|x|) bounded between V_lower and V_upper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Potential {
    Constant { value: f64 },
    /// V(r) = upper - (upper - lower) exp(-(r/width)^2).
    Well { lower: f64, upper: f64, width: f64 },
}

impl Default for Potential {
    fn default() -> Self {
        Potential::Constant { value: 1.0 }
    }
}

impl Potential {
    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Potential::Constant { value } => value,
            Potential::Well { lower, upper, width } => upper - (upper - lower) * (-(r / width).powi(2)).exp(),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            Potential::Constant { value } => (value, value),
            Potential::Well { lower, upper, .. } => (lower, upper),
        }
    }
}

/// Piecewise-linear radial function on a grid, zero beyond R_max.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("field values must be finite".into()));
        }
        Ok(RadialField { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        RadialField { grid, values: vec![0.0; n] }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        RadialField { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        RadialField { grid: self.grid.clone(), values }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        if r > self.grid.r_max() {
            return 0.0;
        }
        let i = self.grid.locate(r);
        let a = self.grid.nodes()[i];
        let xi = (r - a) / self.grid.h(i);
        (1.0 - xi) * self.values[i] + xi * self.values[i + 1]
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.with_values(self.values.iter().map(|v| c * v).collect())
    }

    pub fn positive_part(&self) -> Self {
        self.with_values(self.values.iter().map(|v| v.max(0.0)).collect())
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Write `r,value` rows with 17 significant digits.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(["r", "value"]).map_err(|e| Error::Io(e.to_string()))?;
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            w.write_record([format!("{r:.16e}"), format!("{v:.16e}")]).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a field written by [`RadialField::write_csv`]; the grid is rebuilt from the `r` column.
    pub fn read_csv(path: &Path, quad_order: usize) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
        let headers = rdr.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["r", "value"] {
            return Err(Error::Io(format!("unexpected CSV header {headers:?}")));
        }
        let (mut rs, mut vs) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Io("short CSV row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Io(e.to_string()))
            };
            rs.push(parse(0)?);
            vs.push(parse(1)?);
        }
        let grid = Arc::new(RadialGrid::new(rs, quad_order)?);
        RadialField::new(grid, vs)
    }
}

/// Sum over segments of Gauss quadrature of `g(r, u(r))` against N omega_N r^{N-1} dr.
pub fn radial_integral(u: &RadialField, n: usize, order: usize, g: impl Fn(f64, f64) -> f64) -> f64 {
    let grid = u.grid();
    let rule = gauss_legendre(order);
    let sm = sphere_measure(n);
    let vals = u.values();
    let mut total = 0.0;
    for i in 0..grid.segments() {
        let a = grid.nodes()[i];
        let h = grid.h(i);
        let mut acc = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let r = a + h * x;
            let val = (1.0 - x) * vals[i] + x * vals[i + 1];
            acc += w * g(r, val) * r.powi(n as i32 - 1);
        }
        total += acc * h;
    }
    sm * total
}

/// Gauss order used for |u|^p integrands on one segment.
pub fn power_order(grid: &RadialGrid, p: f64, n: usize) -> usize {
    let exact = ((p + n as f64) / 2.0).ceil() as usize + 1;
    exact.max(grid.quad_order()).min(64)
}

/// Integral of V |u|^p over R^N.
pub fn weighted_power_integral(u: &RadialField, p: f64, v: &Potential, n: usize) -> f64 {
    let order = power_order(u.grid(), p, n);
    radial_integral(u, n, order, |r, x| v.eval(r) * x.abs().powf(p))
}

/// (N omega_N int V |u|^p r^{N-1} dr)^{1/p}.
pub fn lp_norm(u: &RadialField, p: f64, v: &Potential, n: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be >= 1")));
    }
    Ok(weighted_power_integral(u, p, v, n).powf(1.0 / p))
}

/// N omega_N int Phi_{N,s}(alpha |u|^{N/(N-s)}) r^{N-1} dr.
pub fn mt_functional(u: &RadialField, alpha: f64, n: usize, s: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    let nf = n as f64;
    let g = nf / (nf - s);
    let peak = alpha * u.sup_abs().powf(g);
    if peak > 700.0 {
        return Err(Error::Overflow(peak));
    }
    let order = u.grid().quad_order().max(8);
    Ok(radial_integral(u, n, order, |_, x| mt_phi(n, s, alpha * x.abs().powf(g)).unwrap_or(f64::INFINITY)))
}

/// Least-squares slope of ln|v| against ln r over nodes with r in [lo, hi] and
/// v != 0, with the number of nodes used; None when fewer than two qualify.
pub fn log_log_slope(r: &[f64], v: &[f64], lo: f64, hi: f64) -> Option<(f64, usize)> {
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(v)
        .filter(|(r, v)| **r >= lo && **r <= hi && **r > 0.0 && **v != 0.0 && v.is_finite())
        .map(|(r, v)| (r.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
    Some((sxy / sxx, pts.len()))
}

/// The plateau test function: 1 on [0,R/2], 2 - 2r/R on (R/2,R), 0 beyond.
pub fn plateau_test_function(radius: f64, grid: Arc<RadialGrid>) -> Result<RadialField> {
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::InvalidParameter(format!("R = {radius} must lie in (0,1]")));
    }
    for r in [radius / 2.0, radius] {
        if grid.node_index(r).is_none() {
            return Err(Error::GridMisaligned(r));
        }
    }
    let half = grid.node_index(radius / 2.0).unwrap();
    let end = grid.node_index(radius).unwrap();
    let values = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if i <= half {
                1.0
            } else if i >= end {
                0.0
            } else {
                2.0 - 2.0 * r / radius
            }
        })
        .collect();
    RadialField::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::j_frak_sphere;
    use proptest::prelude::*;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::default_grid())
    }

    #[test]
    fn default_grid_shape() {
        let g = RadialGrid::default_grid();
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.r_max(), 50.0);
        for r in [0.125, 1.0 / 6.0, 0.25, 1.0 / 3.0, 1.0] {
            assert!(g.node_index(r).is_some(), "{r}");
        }
        for i in 264..g.segments() - 1 {
            let q = g.h(i + 1) / g.h(i);
            assert!(q > 1.0 && q <= 1.1 + 1e-12);
        }
        assert!(g.len() > 300 && g.len() < 360, "{}", g.len());
    }

    #[test]
    fn plateau_values() {
        let r = 1.0 / 3.0;
        let w = plateau_test_function(r, grid()).unwrap();
        assert_eq!(w.eval(0.0), 1.0);
        assert!(w.eval(r).abs() < 1e-12);
        assert!((w.eval(0.75 * r) - 0.5).abs() < 1e-12);
        assert!(matches!(plateau_test_function(0.3, grid()), Err(Error::GridMisaligned(_))));
    }

    #[test]
    fn plateau_power_integral_matches_exact_shell() {
        // exact int |w|^4 for N=2: pi (R/2)^2 + 2 pi int_{R/2}^R (2-2r/R)^4 r dr
        let r = 1.0 / 3.0;
        let w = plateau_test_function(r, grid()).unwrap();
        let v = Potential::Constant { value: 1.0 };
        let got = weighted_power_integral(&w, 4.0, &v, 2);
        // int_0^{R/2} y^4 (R-y) dy (2/R)^4 with y = R - r
        let shell = (2.0 / r).powi(4) * (r * (r / 2.0).powi(5) / 5.0 - (r / 2.0).powi(6) / 6.0);
        let exact = std::f64::consts::PI * (r / 2.0).powi(2) + 2.0 * std::f64::consts::PI * shell;
        assert!((got - exact).abs() < 1e-13, "{got} {exact}");
        assert!(got <= j_frak_sphere(2, 0.5, r, 1.0));
    }

    #[test]
    fn mt_zero_and_overflow() {
        let g = grid();
        assert_eq!(mt_functional(&RadialField::zeros(g.clone()), 1.0, 2, 0.5).unwrap(), 0.0);
        let big = RadialField::from_fn(g, |r| if r < 1.0 { 200.0 } else { 0.0 });
        assert!(matches!(mt_functional(&big, 1.0, 2, 0.5), Err(Error::Overflow(_))));
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = grid();
        let u = RadialField::from_fn(g, |r| (-(r * 1.37)).exp() / 3.0 + 1e-300 * r);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        u.write_csv(&path).unwrap();
        let back = RadialField::read_csv(&path, 8).unwrap();
        assert_eq!(back.values(), u.values());
        assert_eq!(back.grid().nodes(), u.grid().nodes());
    }

    #[test]
    fn refined_grid_halves_segments() {
        let g = RadialGrid::uniform_geometric(8, 4.0, 1.2, 4).unwrap();
        let f = g.refined();
        assert_eq!(f.segments(), 2 * g.segments());
        assert!((f.max_h() - 0.5 * g.max_h()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn lp_norm_homogeneous(c in -5.0f64..5.0, a in 0.5f64..3.0) {
            let g = Arc::new(RadialGrid::uniform_geometric(32, 10.0, 1.15, 8).unwrap());
            let v = Potential::Constant { value: 1.0 };
            let u = RadialField::from_fn(g, |r| (-a * r * r).exp());
            let n1 = lp_norm(&u.scaled(c), 4.0, &v, 2).unwrap();
            let n0 = lp_norm(&u, 4.0, &v, 2).unwrap();
            prop_assert!((n1 - c.abs() * n0).abs() <= 1e-12 * n0.max(1e-300) * 10.0);
        }

        #[test]
        fn phi_monotone_convex(t in 0.0f64..50.0) {
            let h = 1e-3;
            let f = |x: f64| mt_phi(2, 0.5, x).unwrap();
            prop_assert!(f(t + h) >= f(t));
            prop_assert!(f(t + 2.0 * h) - 2.0 * f(t + h) + f(t) >= -1e-12 * f(t + 2.0 * h).max(1.0));
        }
    }
}
