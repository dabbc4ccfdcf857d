//! Macro-scale negative Laplacian with the configured boundary condition.
//!
//! The operator is kept in stiffness form `K` together with the lumped
//! volume weights `W` of the mesh, so that the action of `-Delta` is
//! `W^{-1} K` and symmetry in the volume-weighted inner product is a
//! property of the assembled matrix itself. On the strip the stiffness is
//! assembled from the terrain-following bilinear form with corner
//! quadrature, which reduces to the standard 5-point scheme for a flat
//! profile and keeps the metric cross-terms symmetric otherwise.
//! Dirichlet rows are eliminated; couplings to eliminated nodes are kept
//! separately so inhomogeneous boundary data enters as a load.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, MacroMesh, MeshKind};

/// Boundary-condition kind folded into the macro operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacroBcKind {
    /// Homogeneous value condition on the whole boundary.
    Dirichlet,
    /// No-flux condition on the whole boundary.
    Neumann,
    /// Strip only: natural (flux) condition on `Gamma0`, value on `GammaF`.
    MixedGamma,
}

/// Assembled macro operator.
#[derive(Debug, Clone)]
pub struct MacroOperator {
    pub kind: MacroBcKind,
    pub mesh: Arc<MacroMesh>,
    /// Mesh node ids carrying unknowns, in mesh order.
    pub unknowns: Vec<usize>,
    /// Mesh node id -> unknown slot.
    pub unk_index: Vec<Option<usize>>,
    /// Stiffness rows over unknown slots (column = unknown slot).
    rows: Vec<Vec<(usize, f64)>>,
    /// Couplings from unknown rows to eliminated boundary nodes
    /// (column = mesh node id).
    lift_rows: Vec<Vec<(usize, f64)>>,
    /// Volume weight per unknown slot.
    pub weights: Vec<f64>,
}

impl MacroOperator {
    pub fn n_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    /// `K u` over unknown slots.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n_unknowns());
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * u[c]).sum())
            .collect()
    }

    /// Load vector `-K_ub g` induced by Dirichlet data `g` given per mesh node.
    pub fn dirichlet_lift(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.mesh.n_nodes());
        self.lift_rows
            .iter()
            .map(|row| -row.iter().map(|&(node, v)| v * g[node]).sum::<f64>())
            .collect()
    }

    /// Stiffness entry sum `K_ub` applied to data, without negation.
    pub fn lift_apply(&self, g: &[f64]) -> Vec<f64> {
        assert_eq!(g.len(), self.mesh.n_nodes());
        self.lift_rows
            .iter()
            .map(|row| row.iter().map(|&(node, v)| v * g[node]).sum::<f64>())
            .collect()
    }

    pub fn row(&self, slot: usize) -> &[(usize, f64)] {
        &self.rows[slot]
    }

    /// Couplings of one unknown row to eliminated boundary nodes
    /// (column = mesh node id).
    pub fn lift_row(&self, slot: usize) -> &[(usize, f64)] {
        &self.lift_rows[slot]
    }

    /// Bottom-boundary nodes with their boundary quadrature weights
    /// (strip meshes only).
    pub fn gamma0_quadrature(&self) -> Vec<(usize, f64)> {
        match self.mesh.kind {
            MeshKind::PeriodicStrip => (0..self.mesh.nx)
                .map(|i| (self.mesh.node(i, 0), self.mesh.hx))
                .collect(),
            MeshKind::Interval => Vec::new(),
        }
    }

    /// Coordinate-format text export of the stiffness matrix.
    pub fn write_coo(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "# macro stiffness: {0} x {0}", self.n_unknowns())?;
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                writeln!(out, "{r} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }
}

struct StiffnessBuilder {
    entries: Vec<BTreeMap<usize, f64>>,
}

impl StiffnessBuilder {
    fn new(n: usize) -> Self {
        StiffnessBuilder {
            entries: vec![BTreeMap::new(); n],
        }
    }

    fn add(&mut self, r: usize, c: usize, v: f64) {
        *self.entries[r].entry(c).or_insert(0.0) += v;
    }
}

fn assemble_interval_stiffness(mesh: &MacroMesh) -> StiffnessBuilder {
    let n = mesh.n_nodes();
    let mut b = StiffnessBuilder::new(n);
    let e = 1.0 / mesh.hx;
    for k in 0..n - 1 {
        b.add(k, k, e);
        b.add(k + 1, k + 1, e);
        b.add(k, k + 1, -e);
        b.add(k + 1, k, -e);
    }
    b
}

fn assemble_strip_stiffness(mesh: &MacroMesh) -> StiffnessBuilder {
    let (nx, ny) = (mesh.nx, mesh.ny);
    let mut b = StiffnessBuilder::new(nx * ny);
    let w = mesh.hx * mesh.heta / 4.0;
    for j in 0..ny - 1 {
        for i in 0..nx {
            let ip = (i + 1) % nx;
            // four corners of the cell [x_i, x_{i+1}] x [eta_j, eta_{j+1}]
            for (ci, cj) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
                let col = if ci == 0 { i } else { ip };
                let row_j = j + cj;
                let eta = mesh.etas[row_j];
                let f = mesh.fvals[col];
                let fp = mesh.fders[col];
                let axx = f;
                let axy = -eta * fp;
                let aee = (1.0 + eta * eta * fp * fp) / f;
                // one-sided differences attached to this corner
                let dx = [
                    (mesh.node(i, row_j), -1.0 / mesh.hx),
                    (mesh.node(ip, row_j), 1.0 / mesh.hx),
                ];
                let de = [
                    (mesh.node(col, j), -1.0 / mesh.heta),
                    (mesh.node(col, j + 1), 1.0 / mesh.heta),
                ];
                for &(p, cp) in &dx {
                    for &(q, cq) in &dx {
                        b.add(p, q, w * axx * cp * cq);
                    }
                }
                for &(p, cp) in &de {
                    for &(q, cq) in &de {
                        b.add(p, q, w * aee * cp * cq);
                    }
                }
                for &(p, cp) in &dx {
                    for &(q, cq) in &de {
                        b.add(p, q, w * axy * cp * cq);
                        b.add(q, p, w * axy * cp * cq);
                    }
                }
            }
        }
    }
    b
}

fn check_tags(mesh: &MacroMesh, kind: MacroBcKind) -> Result<()> {
    match (mesh.kind, kind) {
        (MeshKind::Interval, MacroBcKind::Dirichlet) => {
            let ok = mesh
                .tags
                .iter()
                .flatten()
                .all(|t| *t == BoundaryTag::Dirichlet);
            if ok {
                Ok(())
            } else {
                Err(Error::BcMismatch(
                    "dirichlet operator requires dirichlet tags at both interval ends".into(),
                ))
            }
        }
        (MeshKind::Interval, MacroBcKind::Neumann) => {
            let ok = mesh
                .tags
                .iter()
                .flatten()
                .all(|t| *t == BoundaryTag::Neumann);
            if ok {
                Ok(())
            } else {
                Err(Error::BcMismatch(
                    "neumann operator requires neumann tags at both interval ends".into(),
                ))
            }
        }
        (MeshKind::Interval, MacroBcKind::MixedGamma) => Err(Error::BcMismatch(
            "mixed gamma0/gammaf condition needs a periodic strip mesh".into(),
        )),
        (MeshKind::PeriodicStrip, _) => Ok(()),
    }
}

/// Assembles the macro operator for the given boundary-condition kind.
pub fn assemble_macro(mesh: &Arc<MacroMesh>, kind: MacroBcKind) -> Result<MacroOperator> {
    check_tags(mesh, kind)?;
    let builder = match mesh.kind {
        MeshKind::Interval => assemble_interval_stiffness(mesh),
        MeshKind::PeriodicStrip => assemble_strip_stiffness(mesh),
    };
    let eliminated: Vec<bool> = (0..mesh.n_nodes())
        .map(|idx| match (kind, mesh.tags[idx]) {
            (MacroBcKind::Dirichlet, Some(_)) => true,
            (MacroBcKind::Neumann, _) => false,
            (MacroBcKind::MixedGamma, Some(BoundaryTag::GammaF)) => true,
            _ => false,
        })
        .collect();
    let mut unknowns = Vec::new();
    let mut unk_index = vec![None; mesh.n_nodes()];
    for idx in 0..mesh.n_nodes() {
        if !eliminated[idx] {
            unk_index[idx] = Some(unknowns.len());
            unknowns.push(idx);
        }
    }
    let mut rows = Vec::with_capacity(unknowns.len());
    let mut lift_rows = Vec::with_capacity(unknowns.len());
    for &node in &unknowns {
        let mut row = Vec::new();
        let mut lift = Vec::new();
        for (&col, &v) in &builder.entries[node] {
            if v == 0.0 {
                continue;
            }
            match unk_index[col] {
                Some(slot) => row.push((slot, v)),
                None => lift.push((col, v)),
            }
        }
        rows.push(row);
        lift_rows.push(lift);
    }
    let weights = unknowns.iter().map(|&n| mesh.weights[n]).collect();
    Ok(MacroOperator {
        kind,
        mesh: Arc::clone(mesh),
        unknowns,
        unk_index,
        rows,
        lift_rows,
        weights,
    })
}
