//! Per-cell Laplace–Beltrami operator on the reference ball.
//!
//! The operator is assembled in conservative stiffness form: edge
//! coefficients carry `sqrt(det g) g^{11}` (times the angular measure in
//! radial mode) at edge midpoints, the lumped mass carries
//! `sqrt(det g)` times the reference volume weights. The PDE action is
//! `M^{-1} K`; constants are annihilated exactly, and the exchange flux is
//! the interior sum of `K v`, which is the discrete Green identity for the
//! net boundary flux.

use crate::cellmap::{eval_metric, CellMap};
use crate::error::{Error, Result};
use crate::geometry::{CellMesh, CellMode};
use crate::linalg::Tridiag;

/// Assembled operator for the cell attached to one macro node.
#[derive(Debug, Clone)]
pub struct CellOperator {
    /// Macro node this cell belongs to.
    pub node: usize,
    /// Number of cell nodes.
    pub m: usize,
    /// Interior node range (contiguous by construction).
    pub int_start: usize,
    pub int_end: usize,
    /// Full stiffness over all cell nodes.
    pub stiff: Tridiag<f64>,
    /// Weighted lumped mass `sqrt(det g) * reference volume weight` per node.
    pub mass: Vec<f64>,
}

impl CellOperator {
    pub fn n_interior(&self) -> usize {
        self.int_end - self.int_start
    }

    pub fn boundary_ids(&self) -> Vec<usize> {
        let mut ids = Vec::new();
        if self.int_start > 0 {
            ids.push(0);
        }
        if self.int_end < self.m {
            ids.push(self.m - 1);
        }
        ids
    }

    /// Total weighted boundary mass (the matching-strip weight).
    pub fn boundary_mass(&self) -> f64 {
        self.boundary_ids().iter().map(|&b| self.mass[b]).sum()
    }

    /// Weighted interior mass of a full cell vector.
    pub fn interior_mass_of(&self, v: &[f64]) -> f64 {
        (self.int_start..self.int_end)
            .map(|k| self.mass[k] * v[k])
            .sum()
    }

    /// Weighted total mass of a full cell vector.
    pub fn total_mass_of(&self, v: &[f64]) -> f64 {
        v.iter().zip(self.mass.iter()).map(|(a, b)| a * b).sum()
    }

    /// `K v` over all cell nodes.
    pub fn apply_stiff(&self, v: &[f64]) -> Vec<f64> {
        self.stiff.mul_vec(v)
    }

    /// Action of the Laplace–Beltrami operator `M^{-1} K v`. Valid as the
    /// PDE operator at interior nodes; boundary entries hold the scaled
    /// one-sided flux closure.
    pub fn laplace_beltrami(&self, v: &[f64]) -> Vec<f64> {
        self.apply_stiff(v)
            .iter()
            .zip(self.mass.iter())
            .map(|(kv, m)| kv / m)
            .collect()
    }

    /// Interior block of the stiffness, tridiagonal because interior nodes
    /// are contiguous.
    pub fn interior_stiff(&self) -> Tridiag<f64> {
        let (s, e) = (self.int_start, self.int_end);
        Tridiag {
            sub: self.stiff.sub[s..e - 1].to_vec(),
            diag: self.stiff.diag[s..e].to_vec(),
            sup: self.stiff.sup[s..e - 1].to_vec(),
        }
    }

    /// Interior mass diagonal.
    pub fn interior_mass(&self) -> Vec<f64> {
        self.mass[self.int_start..self.int_end].to_vec()
    }

    /// `K_{int,bdy} 1` — coupling of interior rows to the (constant) boundary
    /// value, indexed by interior slot.
    pub fn boundary_coupling(&self) -> Vec<f64> {
        let n = self.n_interior();
        let mut b = vec![0.0; n];
        if self.int_start > 0 {
            // interior slot 0 is cell node int_start, adjacent to node 0
            b[0] += self.stiff.sub[self.int_start - 1];
        }
        if self.int_end < self.m {
            b[n - 1] += self.stiff.sup[self.int_end - 1];
        }
        b
    }

    /// `sum_{b,b'} K[b][b']` over boundary rows and columns.
    pub fn boundary_block_sum(&self) -> f64 {
        let mut s = 0.0;
        for &b in &self.boundary_ids() {
            s += self.stiff.diag[b];
            // boundary nodes are never adjacent to each other (m >= 3),
            // so only couplings into the interior remain off-diagonal.
        }
        s
    }

    /// Full-vector quadratic form `w^T K v`.
    pub fn stiff_form(&self, w: &[f64], v: &[f64]) -> f64 {
        self.apply_stiff(v)
            .iter()
            .zip(w.iter())
            .map(|(kv, wi)| kv * wi)
            .sum()
    }
}

/// Constant lift of boundary data into the cell; the cell operator
/// annihilates it exactly.
pub fn lift_boundary(cell: &CellMesh, value: f64) -> Vec<f64> {
    vec![value; cell.n_nodes()]
}

/// Exchange flux of a full cell vector: the discrete Green identity
/// `q(V) = sum over interior rows of (K V)`, which equals the net boundary
/// flux of the conservative stencil and the negative rate of change of the
/// weighted interior cell mass under the discrete cell dynamics.
pub fn exchange_flux(op: &CellOperator, v: &[f64]) -> f64 {
    let kv = op.apply_stiff(v);
    kv[op.int_start..op.int_end].iter().sum()
}

/// Assembles the cell operator at macro node `node`.
pub fn assemble_cell(cell: &CellMesh, map: &CellMap, node: usize) -> Result<CellOperator> {
    if map.dim != cell.dim {
        return Err(Error::MeshMismatch(format!(
            "map dimension {} does not match cell dimension {}",
            map.dim, cell.dim
        )));
    }
    let nm = map
        .node_maps
        .get(node)
        .ok_or_else(|| Error::InvalidMap(format!("map not defined at macro node {node}")))?;
    if cell.mode == CellMode::Radial && nm.quad != 0.0 {
        return Err(Error::UnsupportedCell(
            "radial cells require maps that are linear in the radius".into(),
        ));
    }
    let m = cell.n_nodes();
    let h = cell.h;
    let mut sub = vec![0.0; m - 1];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m - 1];
    for k in 0..m - 1 {
        let y_mid = 0.5 * (cell.nodes[k] + cell.nodes[k + 1]);
        let metric = eval_metric(map, node, y_mid)?;
        let e = cell.radial_measure(y_mid) * metric.sqrt_det * metric.g_inv / h;
        diag[k] += e;
        diag[k + 1] += e;
        sub[k] -= e;
        sup[k] -= e;
    }
    let mut mass = Vec::with_capacity(m);
    for k in 0..m {
        let metric = eval_metric(map, node, cell.nodes[k])?;
        mass.push(metric.sqrt_det * cell.vol_weights[k]);
    }
    let (int_start, int_end) = match cell.mode {
        CellMode::Interval => (1, m - 1),
        CellMode::Radial => (0, m - 1),
    };
    Ok(CellOperator {
        node,
        m,
        int_start,
        int_end,
        stiff: Tridiag { sub, diag, sup },
        mass,
    })
}
