//! Diffeomorphism families `Psi(x, .)` from the reference ball to the
//! physical cells, with the induced Riemannian metric.
//!
//! The catalog is closed-form: the identity, a scaled ball `Psi = c(x) y`,
//! and a general 1D map `Psi = alpha(x) y + beta(x) y^2`. Derivatives in `y`
//! are exact; hypotheses on the map (bi-Lipschitz bounds, derivative sups,
//! ellipticity constants) are checked by sampling on the mesh and reported
//! rather than silently assumed.

use crate::error::{Error, Result};
use crate::geometry::{CellMesh, MacroMesh};

/// Scalar coefficient depending on the first macro coordinate.
#[derive(Debug, Clone, Copy)]
pub enum Coefficient {
    Constant(f64),
    /// `offset + slope * x`
    Affine { offset: f64, slope: f64 },
    /// `offset + amp * sin(x)`
    Sinusoid { offset: f64, amp: f64 },
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Coefficient::Constant(c) => c,
            Coefficient::Affine { offset, slope } => offset + slope * x,
            Coefficient::Sinusoid { offset, amp } => offset + amp * x.sin(),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            Coefficient::Constant(_) => 0.0,
            Coefficient::Affine { slope, .. } => slope,
            Coefficient::Sinusoid { amp, .. } => amp * x.cos(),
        }
    }
}

/// Supported map families.
#[derive(Debug, Clone)]
pub enum MapFamily {
    Identity,
    /// `Psi(x, z) = c(x) z` on the n-ball.
    ScaledBall { c: Coefficient },
    /// `Psi(x, y) = alpha(x) y + beta(x) y^2`, 1D cells only.
    General1d { alpha: Coefficient, beta: Coefficient },
}

/// Coefficients of `Psi(x_i, y) = lin y + quad y^2` at one macro node.
#[derive(Debug, Clone, Copy)]
pub struct NodeMap {
    pub lin: f64,
    pub quad: f64,
}

impl NodeMap {
    #[inline]
    pub fn psi(&self, y: f64) -> f64 {
        self.lin * y + self.quad * y * y
    }

    /// `d Psi / d y`.
    #[inline]
    pub fn dpsi(&self, y: f64) -> f64 {
        self.lin + 2.0 * self.quad * y
    }
}

/// Metric data `g`, `sqrt(det g)`, `g^{-1}` at a sample point. The catalog
/// maps are conformal, so scalars suffice.
#[derive(Debug, Clone, Copy)]
pub struct MetricData {
    pub g: f64,
    pub sqrt_det: f64,
    pub g_inv: f64,
}

/// Family `x -> Psi(x, .)` sampled at the nodes of a macro mesh.
#[derive(Debug, Clone)]
pub struct CellMap {
    pub family: MapFamily,
    /// Micro dimension the metric determinant refers to.
    pub dim: usize,
    /// Per-macro-node map coefficients.
    pub node_maps: Vec<NodeMap>,
}

const DEGENERACY_THRESHOLD: f64 = 1e-12;

impl CellMap {
    /// Samples the family at the macro nodes. Degenerate parameter values are
    /// allowed here so that [`validate_map`] can report them; evaluation of
    /// the metric fails on them instead.
    pub fn build(family: MapFamily, dim: usize, mesh: &MacroMesh) -> Result<CellMap> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidMap(format!(
                "micro dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        if dim > 1 && matches!(family, MapFamily::General1d { .. }) {
            return Err(Error::InvalidMap(
                "general-1d maps require micro dimension 1".into(),
            ));
        }
        let node_maps = (0..mesh.n_nodes())
            .map(|idx| {
                let (x, _) = mesh.coords(idx);
                match &family {
                    MapFamily::Identity => NodeMap { lin: 1.0, quad: 0.0 },
                    MapFamily::ScaledBall { c } => NodeMap {
                        lin: c.eval(x),
                        quad: 0.0,
                    },
                    MapFamily::General1d { alpha, beta } => NodeMap {
                        lin: alpha.eval(x),
                        quad: beta.eval(x),
                    },
                }
            })
            .collect();
        Ok(CellMap {
            family,
            dim,
            node_maps,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_maps.len()
    }
}

/// Evaluates the induced metric of the map at macro node `node` and cell
/// coordinate `y`. In 1D, `g = (dPsi/dy)^2`; for the scaled ball the metric
/// is `c^2` times the identity, so `sqrt(det g) = c^n`.
pub fn eval_metric(map: &CellMap, node: usize, y: f64) -> Result<MetricData> {
    let nm = map
        .node_maps
        .get(node)
        .ok_or_else(|| Error::InvalidMap(format!("map not defined at macro node {node}")))?;
    let j = nm.dpsi(y);
    if j.abs() < DEGENERACY_THRESHOLD || !j.is_finite() {
        return Err(Error::DegenerateMetric {
            node,
            y,
            value: j.abs(),
        });
    }
    Ok(MetricData {
        g: j * j,
        sqrt_det: j.abs().powi(map.dim as i32),
        g_inv: 1.0 / (j * j),
    })
}

/// Sampled verification of the map hypotheses.
#[derive(Debug, Clone)]
pub struct MapValidationReport {
    pub min_dpsi: f64,
    pub max_dpsi: f64,
    /// Discrete Lipschitz constant of `Phi(x,y) = (x, Psi(x,y))`.
    pub lip_phi: f64,
    /// Discrete Lipschitz constant of `Phi^{-1}` (inverse difference quotients).
    pub lip_phi_inv: f64,
    /// Sup of sampled first derivatives of `Psi` (in `x` and `y`).
    pub sup_first: f64,
    /// Sup of sampled second derivatives of `Psi`.
    pub sup_second: f64,
    /// Lower ellipticity constant of `g^{ij}`.
    pub c1: f64,
    /// Upper ellipticity constant of `g^{ij}`.
    pub c2: f64,
    pub pass: bool,
}

/// Samples `Phi` and `Phi^{-1}` on grid pairs and reports discrete Lipschitz
/// quotients, derivative sups (finite differences in `x`, exact in `y`) and
/// the ellipticity constants of the induced metric. Failures are carried in
/// the report, not raised.
pub fn validate_map(map: &CellMap, mesh: &MacroMesh, cell: &CellMesh) -> MapValidationReport {
    let sample_ys: Vec<f64> = cell.nodes.clone();

    let mut min_dpsi = f64::INFINITY;
    let mut max_dpsi = f64::NEG_INFINITY;
    let mut sup_first = 0.0f64;
    let mut sup_second = 0.0f64;
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;

    for (idx, nm) in map.node_maps.iter().enumerate() {
        for &y in &sample_ys {
            let j = nm.dpsi(y);
            min_dpsi = min_dpsi.min(j);
            max_dpsi = max_dpsi.max(j);
            sup_first = sup_first.max(j.abs());
            sup_second = sup_second.max(2.0 * nm.quad.abs());
            if j.abs() >= DEGENERACY_THRESHOLD {
                let ginv = 1.0 / (j * j);
                c1 = c1.min(ginv);
                c2 = c2.max(ginv);
            } else {
                c1 = 0.0;
            }
        }
        // x-derivatives of Psi by finite differences over the macro grid
        let left = if idx % mesh.nx == 0 {
            if mesh.periodic_axis == Some(0) {
                Some(idx + mesh.nx - 1)
            } else {
                None
            }
        } else {
            Some(idx - 1)
        };
        let right = if idx % mesh.nx == mesh.nx - 1 {
            if mesh.periodic_axis == Some(0) {
                Some(idx + 1 - mesh.nx)
            } else {
                None
            }
        } else {
            Some(idx + 1)
        };
        if let (Some(l), Some(r)) = (left, right) {
            let (nl, nr) = (map.node_maps[l], map.node_maps[r]);
            for &y in &sample_ys {
                let dx = (nr.psi(y) - nl.psi(y)) / (2.0 * mesh.hx);
                let dxx = (nr.psi(y) - 2.0 * nm.psi(y) + nl.psi(y)) / (mesh.hx * mesh.hx);
                let dxy = (nr.dpsi(y) - nl.dpsi(y)) / (2.0 * mesh.hx);
                sup_first = sup_first.max(dx.abs());
                sup_second = sup_second.max(dxx.abs()).max(dxy.abs());
            }
        }
    }

    // Bi-Lipschitz quotients of Phi(x,y) = (x, Psi(x,y)) over sampled pairs.
    // Subsample the grid so the pair loop stays quadratic in a small count.
    let xi_stride = (map.n_nodes() / 24).max(1);
    let yi_stride = (sample_ys.len() / 12).max(1);
    let mut pts: Vec<(f64, f64, f64)> = Vec::new(); // (x, y, Psi)
    for idx in (0..map.n_nodes()).step_by(xi_stride) {
        let (x, _) = mesh.coords(idx);
        let nm = map.node_maps[idx];
        for yk in (0..sample_ys.len()).step_by(yi_stride) {
            let y = sample_ys[yk];
            pts.push((x, y, nm.psi(y)));
        }
    }
    let mut lip_phi = 0.0f64;
    let mut inv_quot = 0.0f64;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let (xa, ya, pa) = pts[a];
            let (xb, yb, pb) = pts[b];
            let d_ref = ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt();
            let d_img = ((xa - xb).powi(2) + (pa - pb).powi(2)).sqrt();
            if d_ref > 0.0 {
                lip_phi = lip_phi.max(d_img / d_ref);
                if d_img > 0.0 {
                    inv_quot = inv_quot.max(d_ref / d_img);
                } else {
                    inv_quot = f64::INFINITY;
                }
            }
        }
    }

    let pass = min_dpsi > DEGENERACY_THRESHOLD
        && lip_phi.is_finite()
        && inv_quot.is_finite()
        && sup_first.is_finite()
        && sup_second.is_finite()
        && c1 > 0.0
        && c2.is_finite()
        && c1 <= c2;

    MapValidationReport {
        min_dpsi,
        max_dpsi,
        lip_phi,
        lip_phi_inv: inv_quot,
        sup_first,
        sup_second,
        c1,
        c2,
        pass,
    }
}
