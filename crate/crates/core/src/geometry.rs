//! Discrete macro domains and reference cells.
//!
//! Two macro domains are supported: a 1D interval and a 2D periodic strip
//! `{(x,y) : x in S^1, 0 < y < f(x)}` discretized in terrain-following
//! coordinates `(x, eta)` with `eta = y/f(x)`. The reference cell is the unit
//! ball, either as the interval `[-1,1]` or as a radial mesh on `[0,1]` for
//! radially symmetric functions in dimension `n <= 3`.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};

/// Tag attached to a boundary node of a macro mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    /// Bottom boundary of the strip (y = 0).
    Gamma0,
    /// Top graph boundary of the strip (y = f(x)).
    GammaF,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
            BoundaryTag::Gamma0 => "gamma0",
            BoundaryTag::GammaF => "gammaf",
        }
    }
}

/// Kind of macro mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Interval,
    PeriodicStrip,
}

/// Height profile of the periodic strip, period `2*pi`.
#[derive(Debug, Clone)]
pub enum StripProfile {
    Constant(f64),
    /// `f(x) = mean + amp * sin(x)`.
    Sinusoid { mean: f64, amp: f64 },
    /// Uniform samples on `[0, 2*pi)`; evaluated by periodic linear
    /// interpolation, differentiated by centered differences.
    Table(Vec<f64>),
}

impl StripProfile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            StripProfile::Constant(c) => *c,
            StripProfile::Sinusoid { mean, amp } => mean + amp * x.sin(),
            StripProfile::Table(samples) => {
                let n = samples.len();
                let s = (x.rem_euclid(2.0 * PI)) / (2.0 * PI) * n as f64;
                let k = (s.floor() as usize) % n;
                let frac = s - s.floor();
                samples[k] * (1.0 - frac) + samples[(k + 1) % n] * frac
            }
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            StripProfile::Constant(_) => 0.0,
            StripProfile::Sinusoid { amp, .. } => amp * x.cos(),
            StripProfile::Table(samples) => {
                let n = samples.len();
                let h = 2.0 * PI / n as f64;
                let s = (x.rem_euclid(2.0 * PI)) / (2.0 * PI) * n as f64;
                let k = (s.round() as usize) % n;
                (samples[(k + 1) % n] - samples[(k + n - 1) % n]) / (2.0 * h)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            StripProfile::Constant(c) => *c > 0.0 && c.is_finite(),
            StripProfile::Sinusoid { mean, amp } => {
                mean.is_finite() && amp.is_finite() && mean - amp.abs() > 0.0
            }
            StripProfile::Table(samples) => {
                samples.len() >= 4 && samples.iter().all(|s| s.is_finite() && *s > 0.0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidMesh(
                "strip profile must be strictly positive".into(),
            ))
        }
    }
}

/// Discretization of the macro domain.
///
/// Nodes are stored in a tensor layout, index `j * nx + i` with `i` along the
/// (possibly periodic) first axis and `j` along the second. An interval mesh
/// uses `ny = 1`.
#[derive(Debug, Clone)]
pub struct MacroMesh {
    pub kind: MeshKind,
    pub nx: usize,
    pub ny: usize,
    /// First-axis coordinates (interval positions or strip angles).
    pub xs: Vec<f64>,
    /// Second-axis reference coordinates `eta` in [0,1] (strip only).
    pub etas: Vec<f64>,
    /// First-axis spacing.
    pub hx: f64,
    /// Second-axis spacing in `eta` (strip only, 0 for intervals).
    pub heta: f64,
    /// Profile values `f(x_i)` (strip; 1.0 for intervals).
    pub fvals: Vec<f64>,
    /// Profile derivatives `f'(x_i)` (strip; 0.0 for intervals).
    pub fders: Vec<f64>,
    /// Per-node boundary tag; interior nodes carry `None`.
    pub tags: Vec<Option<BoundaryTag>>,
    /// Trapezoidal volume weights per node (include the area element).
    pub weights: Vec<f64>,
    /// Index of the periodic axis, if any.
    pub periodic_axis: Option<usize>,
}

impl MacroMesh {
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Physical coordinates of a node.
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let i = idx % self.nx;
        let j = idx / self.nx;
        match self.kind {
            MeshKind::Interval => (self.xs[i], 0.0),
            MeshKind::PeriodicStrip => (self.xs[i], self.etas[j] * self.fvals[i]),
        }
    }

    pub fn tag(&self, idx: usize) -> Option<BoundaryTag> {
        self.tags[idx]
    }

    pub fn is_dirichlet(&self, idx: usize) -> bool {
        matches!(
            self.tags[idx],
            Some(BoundaryTag::Dirichlet) | Some(BoundaryTag::GammaF)
        )
    }

    pub fn domain_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Plain-text node/tag table for debugging.
    pub fn dump_table(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "# idx x y tag weight")?;
        for idx in 0..self.n_nodes() {
            let (x, y) = self.coords(idx);
            let tag = self.tags[idx].map_or("-", |t| t.name());
            writeln!(out, "{idx} {x:.17e} {y:.17e} {tag} {:.17e}", self.weights[idx])?;
        }
        Ok(())
    }
}

/// Uniform interval mesh on `[0, length]` with one tag per endpoint.
pub fn build_interval_mesh(
    length: f64,
    n_nodes: usize,
    bc: (BoundaryTag, BoundaryTag),
) -> Result<MacroMesh> {
    if !(length.is_finite() && length > 0.0) {
        return Err(Error::InvalidMesh(format!(
            "interval length must be positive, got {length}"
        )));
    }
    if n_nodes < 3 {
        return Err(Error::InvalidMesh(format!(
            "interval needs at least 3 nodes, got {n_nodes}"
        )));
    }
    for tag in [bc.0, bc.1] {
        if !matches!(tag, BoundaryTag::Dirichlet | BoundaryTag::Neumann) {
            return Err(Error::InvalidMesh(format!(
                "interval endpoints accept dirichlet or neumann tags, got {}",
                tag.name()
            )));
        }
    }
    let h = length / (n_nodes - 1) as f64;
    let xs: Vec<f64> = (0..n_nodes).map(|i| i as f64 * h).collect();
    let mut tags = vec![None; n_nodes];
    tags[0] = Some(bc.0);
    tags[n_nodes - 1] = Some(bc.1);
    let mut weights = vec![h; n_nodes];
    weights[0] = 0.5 * h;
    weights[n_nodes - 1] = 0.5 * h;
    Ok(MacroMesh {
        kind: MeshKind::Interval,
        nx: n_nodes,
        ny: 1,
        xs,
        etas: vec![0.0],
        hx: h,
        heta: 0.0,
        fvals: vec![1.0; n_nodes],
        fders: vec![0.0; n_nodes],
        tags,
        weights,
        periodic_axis: None,
    })
}

/// Tensor mesh of the periodic strip under `profile` in terrain-following
/// coordinates. The bottom row is tagged `Gamma0`, the top row `GammaF`;
/// the first axis is periodic with period `2*pi`.
pub fn build_strip_mesh(profile: &StripProfile, nx: usize, ny: usize) -> Result<MacroMesh> {
    profile.validate()?;
    if nx < 4 {
        return Err(Error::InvalidMesh(format!("strip needs nx >= 4, got {nx}")));
    }
    if ny < 3 {
        return Err(Error::InvalidMesh(format!("strip needs ny >= 3, got {ny}")));
    }
    let hx = 2.0 * PI / nx as f64;
    let heta = 1.0 / (ny - 1) as f64;
    let xs: Vec<f64> = (0..nx).map(|i| i as f64 * hx).collect();
    let etas: Vec<f64> = (0..ny).map(|j| j as f64 * heta).collect();
    let fvals: Vec<f64> = xs.iter().map(|&x| profile.eval(x)).collect();
    let fders: Vec<f64> = xs.iter().map(|&x| profile.deriv(x)).collect();
    if fvals.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(Error::InvalidMesh(
            "strip profile must be strictly positive at all mesh samples".into(),
        ));
    }
    let mut tags = vec![None; nx * ny];
    let mut weights = vec![0.0; nx * ny];
    for j in 0..ny {
        let tau = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
        for i in 0..nx {
            let idx = j * nx + i;
            if j == 0 {
                tags[idx] = Some(BoundaryTag::Gamma0);
            } else if j == ny - 1 {
                tags[idx] = Some(BoundaryTag::GammaF);
            }
            // area element of (x, eta) -> (x, eta f(x)) is f(x)
            weights[idx] = hx * heta * tau * fvals[i];
        }
    }
    Ok(MacroMesh {
        kind: MeshKind::PeriodicStrip,
        nx,
        ny,
        xs,
        etas,
        hx,
        heta,
        fvals,
        fders,
        tags,
        weights,
        periodic_axis: Some(0),
    })
}

/// Mode of the reference cell mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellMode {
    /// 1D cell, nodes on `[-1, 1]`.
    Interval,
    /// Radially symmetric n-ball, nodes on `[0, 1]`.
    Radial,
}

/// Discretization of the reference unit ball.
#[derive(Debug, Clone)]
pub struct CellMesh {
    pub dim: usize,
    pub mode: CellMode,
    /// Node coordinates: `y` in `[-1,1]` (interval) or `r` in `[0,1]` (radial).
    pub nodes: Vec<f64>,
    pub h: f64,
    /// Reference volume weights (metric-free); sum to `|B|` exactly.
    pub vol_weights: Vec<f64>,
    /// Node ids on the sphere `S`.
    pub boundary_node_ids: Vec<usize>,
    /// Surface quadrature weights matching `boundary_node_ids`; sum to `|S|`.
    pub surface_weights: Vec<f64>,
}

impl CellMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary_node_ids.contains(&k)
    }

    pub fn interior_ids(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|k| !self.is_boundary(*k)).collect()
    }

    /// Volume of the unit ball in this dimension.
    pub fn ball_volume(&self) -> f64 {
        match self.dim {
            1 => 2.0,
            2 => PI,
            3 => 4.0 * PI / 3.0,
            _ => unreachable!(),
        }
    }

    /// Surface measure of the unit sphere in this dimension.
    pub fn sphere_area(&self) -> f64 {
        match self.dim {
            1 => 2.0,
            2 => 2.0 * PI,
            3 => 4.0 * PI,
            _ => unreachable!(),
        }
    }

    /// Angular factor `omega_n r^(n-1)` of the radial measure at radius `r`
    /// (1 for interval mode).
    pub fn radial_measure(&self, r: f64) -> f64 {
        match self.mode {
            CellMode::Interval => 1.0,
            CellMode::Radial => self.sphere_area() * r.powi(self.dim as i32 - 1),
        }
    }
}

/// Exact integral of the hat function at node `k` against `omega_n r^(n-1) dr`.
fn radial_hat_weight(k: usize, m: usize, h: f64, dim: usize, omega: f64) -> f64 {
    // integral of r^(n-1) times a linear function over [a, b]
    let poly = |a: f64, b: f64, at_a: f64, at_b: f64| -> f64 {
        // linear interpolant l(r) with l(a) = at_a, l(b) = at_b
        let n = dim as f64;
        let slope = (at_b - at_a) / (b - a);
        let c0 = at_a - slope * a;
        // integral of (c0 + slope r) r^(n-1) = c0 r^n / n + slope r^(n+1)/(n+1)
        let anti = |r: f64| c0 * r.powf(n) / n + slope * r.powf(n + 1.0) / (n + 1.0);
        anti(b) - anti(a)
    };
    let r = |i: usize| i as f64 * h;
    let mut w = 0.0;
    if k > 0 {
        w += poly(r(k - 1), r(k), 0.0, 1.0);
    }
    if k + 1 < m {
        w += poly(r(k), r(k + 1), 1.0, 0.0);
    }
    omega * w
}

/// Uniform mesh of the reference cell.
pub fn build_cell_mesh(dim: usize, mode: CellMode, m_nodes: usize) -> Result<CellMesh> {
    if m_nodes < 3 {
        return Err(Error::UnsupportedCell(format!(
            "cell needs at least 3 nodes, got {m_nodes}"
        )));
    }
    match (dim, mode) {
        (1, CellMode::Interval) => {
            let h = 2.0 / (m_nodes - 1) as f64;
            let nodes: Vec<f64> = (0..m_nodes).map(|k| -1.0 + k as f64 * h).collect();
            let mut vol = vec![h; m_nodes];
            vol[0] = 0.5 * h;
            vol[m_nodes - 1] = 0.5 * h;
            Ok(CellMesh {
                dim,
                mode,
                nodes,
                h,
                vol_weights: vol,
                boundary_node_ids: vec![0, m_nodes - 1],
                surface_weights: vec![1.0, 1.0],
            })
        }
        (n @ 1..=3, CellMode::Radial) => {
            let h = 1.0 / (m_nodes - 1) as f64;
            let nodes: Vec<f64> = (0..m_nodes).map(|k| k as f64 * h).collect();
            let omega = match n {
                1 => 2.0,
                2 => 2.0 * PI,
                _ => 4.0 * PI,
            };
            let vol: Vec<f64> = (0..m_nodes)
                .map(|k| radial_hat_weight(k, m_nodes, h, n, omega))
                .collect();
            Ok(CellMesh {
                dim,
                mode,
                nodes,
                h,
                vol_weights: vol,
                boundary_node_ids: vec![m_nodes - 1],
                surface_weights: vec![omega],
            })
        }
        _ => Err(Error::UnsupportedCell(format!(
            "unsupported cell dimension/mode combination: dim = {dim}, mode = {mode:?}"
        ))),
    }
}
