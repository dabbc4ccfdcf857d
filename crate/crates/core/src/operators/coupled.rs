//! Coupled two-scale block operator and the matched state it acts on.
//!
//! The matching condition is eliminated structurally: cell boundary slots
//! are identified with the macro value at the owning node, so a state
//! carries `u` over all macro nodes plus interior cell values per node.
//! In exchange mode the reduced stiffness is the Galerkin form of the
//! coupled operator in the weighted space: the macro row then contains
//! `-Delta u - q(U)` automatically and the matrix is symmetric against the
//! weighted mass, which is what the self-adjointness, coercivity and
//! conservation diagnostics rest on.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::cellmap::CellMap;
use crate::error::{Error, Result};
use crate::geometry::{CellMesh, MacroMesh};
use crate::linalg::Scalar;
use crate::operators::cell_op::{assemble_cell, exchange_flux, CellOperator};
use crate::operators::macro_op::{MacroBcKind, MacroOperator};

/// Coupling mode of the block operator.
///
/// `Plain` applies the matching condition but keeps the macro row free of
/// the exchange term (block-triangular structure, used by the two-stage
/// resolvent). `WithExchange` folds the exchange flux into the macro row;
/// combined with a Dirichlet macro operator this is the self-adjoint
/// coupled operator, with a Neumann one the conservative variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    Plain,
    WithExchange,
}

/// Matched two-scale state: macro values at every mesh node plus interior
/// cell values per node. Cell boundary values are the macro value of the
/// owning node by construction, so the matching condition cannot be
/// violated by representable states.
#[derive(Debug, Clone)]
pub struct TwoScaleState {
    pub u: Vec<f64>,
    pub cells: Vec<Vec<f64>>,
}

impl TwoScaleState {
    pub fn scale(&mut self, s: f64) {
        for v in self.u.iter_mut() {
            *v *= s;
        }
        for c in self.cells.iter_mut() {
            for v in c.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn axpy(&mut self, a: f64, other: &TwoScaleState) {
        for (x, y) in self.u.iter_mut().zip(other.u.iter()) {
            *x += a * y;
        }
        for (c, d) in self.cells.iter_mut().zip(other.cells.iter()) {
            for (x, y) in c.iter_mut().zip(d.iter()) {
                *x += a * y;
            }
        }
    }

    pub fn max_abs_u(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite())
            && self.cells.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }
}

/// Reduced coefficient vector: macro unknown slots plus interior cell values
/// per mesh node. Generic over the scalar so the complex resolvent reuses
/// the same plumbing.
#[derive(Debug, Clone)]
pub struct ReducedVec<S = f64> {
    pub mac: Vec<S>,
    pub cells: Vec<Vec<S>>,
}

impl<S: Scalar> ReducedVec<S> {
    pub fn zeros(n_mac: usize, n_nodes: usize, n_int: usize) -> Self {
        ReducedVec {
            mac: vec![S::ZERO; n_mac],
            cells: vec![vec![S::ZERO; n_int]; n_nodes],
        }
    }

    pub fn axpy(&mut self, a: S, other: &Self) {
        for (x, y) in self.mac.iter_mut().zip(other.mac.iter()) {
            *x += a * *y;
        }
        for (c, d) in self.cells.iter_mut().zip(other.cells.iter()) {
            for (x, y) in c.iter_mut().zip(d.iter()) {
                *x += a * *y;
            }
        }
    }

    pub fn scale(&mut self, a: S) {
        for x in self.mac.iter_mut() {
            *x = *x * a;
        }
        for c in self.cells.iter_mut() {
            for x in c.iter_mut() {
                *x = *x * a;
            }
        }
    }
}

/// Unmatched source pair `(f, g)`: a macro function and a full cell function
/// per node (the right-hand-side space of the abstract problem).
#[derive(Debug, Clone)]
pub struct SourcePair<S = f64> {
    /// Macro component, one value per mesh node.
    pub f: Vec<S>,
    /// Cell component, one full cell vector (all cell nodes) per mesh node.
    pub g: Vec<Vec<S>>,
}

impl<S: Scalar> SourcePair<S> {
    pub fn zeros(n_nodes: usize, m_cell: usize) -> Self {
        SourcePair {
            f: vec![S::ZERO; n_nodes],
            g: vec![vec![S::ZERO; m_cell]; n_nodes],
        }
    }
}

/// Assembled coupled operator with its weighted mass data.
#[derive(Debug)]
pub struct CoupledOperator {
    pub mode: CouplingMode,
    pub macro_op: MacroOperator,
    pub cell_mesh: Arc<CellMesh>,
    /// One cell operator per macro mesh node.
    pub cells: Vec<CellOperator>,
    /// Evolution mass diagonal on macro unknown slots. In exchange mode this
    /// carries the matching-strip weight `W (1 + boundary cell mass)`; in
    /// plain mode it is the bare volume weight.
    pub mass_macro: Vec<f64>,
}

/// Assembles the coupled operator from prebuilt per-cell operators
/// (one per macro mesh node, in node order).
pub fn assemble_coupled(
    macro_op: MacroOperator,
    cells: Vec<CellOperator>,
    cell_mesh: Arc<CellMesh>,
    mode: CouplingMode,
) -> Result<CoupledOperator> {
    let n_nodes = macro_op.mesh.n_nodes();
    if cells.len() != n_nodes {
        return Err(Error::MeshMismatch(format!(
            "need one cell operator per macro node ({n_nodes}), got {}",
            cells.len()
        )));
    }
    for (i, c) in cells.iter().enumerate() {
        if c.node != i {
            return Err(Error::MeshMismatch(format!(
                "cell operator at position {i} belongs to node {}",
                c.node
            )));
        }
        if c.m != cell_mesh.n_nodes() {
            return Err(Error::MeshMismatch(
                "cell operator size does not match the cell mesh".into(),
            ));
        }
    }
    let mass_macro = macro_op
        .unknowns
        .iter()
        .enumerate()
        .map(|(slot, &node)| {
            let w = macro_op.weights[slot];
            match mode {
                CouplingMode::Plain => w,
                CouplingMode::WithExchange => w * (1.0 + cells[node].boundary_mass()),
            }
        })
        .collect();
    Ok(CoupledOperator {
        mode,
        macro_op,
        cell_mesh,
        cells,
        mass_macro,
    })
}

impl CoupledOperator {
    /// Convenience assembly straight from a mesh, map and boundary kind.
    pub fn build(
        mesh: &Arc<MacroMesh>,
        cell_mesh: &Arc<CellMesh>,
        map: &CellMap,
        bc: MacroBcKind,
        mode: CouplingMode,
    ) -> Result<CoupledOperator> {
        let macro_op = crate::operators::macro_op::assemble_macro(mesh, bc)?;
        let cells: Vec<CellOperator> = (0..mesh.n_nodes())
            .into_par_iter()
            .map(|node| assemble_cell(cell_mesh, map, node))
            .collect::<Result<Vec<_>>>()?;
        assemble_coupled(macro_op, cells, Arc::clone(cell_mesh), mode)
    }

    pub fn mesh(&self) -> &Arc<MacroMesh> {
        &self.macro_op.mesh
    }

    pub fn n_nodes(&self) -> usize {
        self.macro_op.mesh.n_nodes()
    }

    pub fn n_macro_unknowns(&self) -> usize {
        self.macro_op.n_unknowns()
    }

    pub fn n_cell_interior(&self) -> usize {
        self.cells[0].n_interior()
    }

    /// Total reduced dimension.
    pub fn reduced_dim(&self) -> usize {
        self.n_macro_unknowns() + self.n_nodes() * self.n_cell_interior()
    }

    pub fn zero_state(&self) -> TwoScaleState {
        TwoScaleState {
            u: vec![0.0; self.n_nodes()],
            cells: vec![vec![0.0; self.n_cell_interior()]; self.n_nodes()],
        }
    }

    /// State with the given macro values and cells lifted to the matching
    /// constant.
    pub fn matched_state(&self, u: Vec<f64>) -> TwoScaleState {
        assert_eq!(u.len(), self.n_nodes());
        let cells = u
            .iter()
            .map(|&v| vec![v; self.n_cell_interior()])
            .collect();
        TwoScaleState { u, cells }
    }

    pub fn constant_state(&self, c: f64) -> TwoScaleState {
        self.matched_state(vec![c; self.n_nodes()])
    }

    /// Full cell vector at a node, boundary slots filled by matching.
    pub fn cell_full(&self, w: &TwoScaleState, node: usize) -> Vec<f64> {
        let cop = &self.cells[node];
        let mut v = vec![w.u[node]; cop.m];
        v[cop.int_start..cop.int_end].copy_from_slice(&w.cells[node]);
        v
    }

    /// Exchange flux at a node for the given state.
    pub fn node_exchange_flux(&self, w: &TwoScaleState, node: usize) -> f64 {
        exchange_flux(&self.cells[node], &self.cell_full(w, node))
    }

    pub fn reduce(&self, w: &TwoScaleState) -> ReducedVec<f64> {
        ReducedVec {
            mac: self
                .macro_op
                .unknowns
                .iter()
                .map(|&node| w.u[node])
                .collect(),
            cells: w.cells.clone(),
        }
    }

    /// Reconstructs a state from a reduced vector; eliminated macro nodes
    /// take their values from `dirichlet_data` (zero when absent).
    pub fn unreduce(&self, z: &ReducedVec<f64>, dirichlet_data: Option<&[f64]>) -> TwoScaleState {
        let mut u = vec![0.0; self.n_nodes()];
        if let Some(data) = dirichlet_data {
            u.copy_from_slice(data);
        }
        for (slot, &node) in self.macro_op.unknowns.iter().enumerate() {
            u[node] = z.mac[slot];
        }
        TwoScaleState {
            u,
            cells: z.cells.clone(),
        }
    }

    /// Macro value per node implied by a reduced vector and boundary data.
    fn macro_values<S: Scalar>(&self, z: &ReducedVec<S>, data: Option<&[S]>) -> Vec<S> {
        let mut u = vec![S::ZERO; self.n_nodes()];
        if let Some(d) = data {
            u.copy_from_slice(d);
        }
        for (slot, &node) in self.macro_op.unknowns.iter().enumerate() {
            u[node] = z.mac[slot];
        }
        u
    }

    /// Stiffness application `K z` (plus boundary-data lift when given).
    /// The macro row of the exchange mode is
    /// `K_mac u + W (boundary-block coupling)`, which realizes
    /// `-Delta u - q(U)` against the volume weights; cell rows are the
    /// weighted interior stiffness with the matching value substituted.
    pub fn apply_stiff<S: Scalar>(
        &self,
        z: &ReducedVec<S>,
        dirichlet_data: Option<&[S]>,
    ) -> ReducedVec<S> {
        let u = self.macro_values(z, dirichlet_data);
        let n_int = self.n_cell_interior();
        // macro rows
        let mut mac: Vec<S> = self
            .macro_op
            .unknowns
            .iter()
            .enumerate()
            .map(|(slot, &node)| {
                let mut acc = S::ZERO;
                for &(c, v) in self.macro_op.row(slot) {
                    acc += z.mac[c].scale(v);
                }
                if let Some(d) = dirichlet_data {
                    for &(bnode, v) in self.macro_op.lift_row(slot) {
                        acc += d[bnode].scale(v);
                    }
                }
                if self.mode == CouplingMode::WithExchange {
                    let cop = &self.cells[node];
                    let w = self.macro_op.weights[slot];
                    let mut coupling = u[node].scale(cop.boundary_block_sum());
                    let b = cop.boundary_coupling();
                    for (k, bk) in b.iter().enumerate() {
                        coupling += z.cells[node][k].scale(*bk);
                    }
                    acc += coupling.scale(w);
                }
                acc
            })
            .collect();
        if mac.is_empty() {
            mac = Vec::new();
        }
        // cell rows
        let cells: Vec<Vec<S>> = (0..self.n_nodes())
            .map(|node| {
                let cop = &self.cells[node];
                let w = self.macro_op.mesh.weights[node];
                let b = cop.boundary_coupling();
                let int = cop.interior_stiff();
                let mut row = tridiag_mul_generic(&int, &z.cells[node]);
                for (k, bk) in b.iter().enumerate() {
                    row[k] += u[node].scale(*bk);
                }
                for v in row.iter_mut() {
                    *v = v.scale(w);
                }
                debug_assert_eq!(row.len(), n_int);
                row
            })
            .collect();
        ReducedVec { mac, cells }
    }

    /// Evolution mass application `M z`.
    pub fn apply_mass<S: Scalar>(&self, z: &ReducedVec<S>) -> ReducedVec<S> {
        let mac = z
            .mac
            .iter()
            .zip(self.mass_macro.iter())
            .map(|(v, m)| v.scale(*m))
            .collect();
        let cells = (0..self.n_nodes())
            .map(|node| {
                let w = self.macro_op.mesh.weights[node];
                let cop = &self.cells[node];
                z.cells[node]
                    .iter()
                    .zip(cop.mass[cop.int_start..cop.int_end].iter())
                    .map(|(v, m)| v.scale(m * w))
                    .collect()
            })
            .collect();
        ReducedVec { mac, cells }
    }

    /// Reduced inner product against the evolution mass.
    pub fn mass_inner(&self, a: &ReducedVec<f64>, b: &ReducedVec<f64>) -> f64 {
        let mb = self.apply_mass(b);
        dot_reduced(a, &mb)
    }

    /// Weighted two-scale inner product of full states (the weighted-space
    /// pairing: macro volume quadrature plus metric-weighted cell
    /// quadrature, boundary slots included through matching).
    pub fn weighted_inner_states(&self, w1: &TwoScaleState, w2: &TwoScaleState) -> f64 {
        let mesh = &self.macro_op.mesh;
        let mut acc = 0.0;
        for node in 0..self.n_nodes() {
            acc += mesh.weights[node] * w1.u[node] * w2.u[node];
        }
        for node in 0..self.n_nodes() {
            let cop = &self.cells[node];
            let v1 = self.cell_full(w1, node);
            let v2 = self.cell_full(w2, node);
            let mut cell_acc = 0.0;
            for k in 0..cop.m {
                cell_acc += cop.mass[k] * v1[k] * v2[k];
            }
            acc += mesh.weights[node] * cell_acc;
        }
        acc
    }

    /// Same pairing with the metric weight replaced by 1 (used for the
    /// norm-equivalence diagnostic).
    pub fn unweighted_inner_states(&self, w1: &TwoScaleState, w2: &TwoScaleState) -> f64 {
        let mesh = &self.macro_op.mesh;
        let mut acc = 0.0;
        for node in 0..self.n_nodes() {
            acc += mesh.weights[node] * w1.u[node] * w2.u[node];
        }
        for node in 0..self.n_nodes() {
            let cop = &self.cells[node];
            let v1 = self.cell_full(w1, node);
            let v2 = self.cell_full(w2, node);
            let mut cell_acc = 0.0;
            for k in 0..cop.m {
                cell_acc += self.cell_mesh.vol_weights[k] * v1[k] * v2[k];
            }
            acc += mesh.weights[node] * cell_acc;
        }
        acc
    }

    pub fn yg_norm(&self, w: &TwoScaleState) -> f64 {
        self.weighted_inner_states(w, w).max(0.0).sqrt()
    }

    /// Macro volume-weighted L2 norm of the macro component.
    pub fn macro_l2(&self, w: &TwoScaleState) -> f64 {
        let mesh = &self.macro_op.mesh;
        (0..self.n_nodes())
            .map(|n| mesh.weights[n] * w.u[n] * w.u[n])
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }

    /// Total material: macro integral of `u` plus weighted cell integrals.
    pub fn mass_s(&self, w: &TwoScaleState) -> f64 {
        let mesh = &self.macro_op.mesh;
        let mut acc = 0.0;
        for node in 0..self.n_nodes() {
            acc += mesh.weights[node] * w.u[node];
            acc += mesh.weights[node] * self.cells[node].total_mass_of(&self.cell_full(w, node));
        }
        acc
    }

    /// Galerkin load of a source pair: the macro row receives the volume
    /// quadrature of `f` plus the boundary-slot quadrature of `g`, cell rows
    /// the weighted interior quadrature of `g`.
    pub fn load_from_pair<S: Scalar>(&self, src: &SourcePair<S>) -> ReducedVec<S> {
        let mac = self
            .macro_op
            .unknowns
            .iter()
            .enumerate()
            .map(|(slot, &node)| {
                let w = self.macro_op.weights[slot];
                let mut acc = src.f[node];
                if self.mode == CouplingMode::WithExchange {
                    let cop = &self.cells[node];
                    for &b in &cop.boundary_ids() {
                        acc += src.g[node][b].scale(cop.mass[b]);
                    }
                }
                acc.scale(w)
            })
            .collect();
        let cells = (0..self.n_nodes())
            .map(|node| {
                let cop = &self.cells[node];
                let w = self.macro_op.mesh.weights[node];
                (cop.int_start..cop.int_end)
                    .map(|k| src.g[node][k].scale(cop.mass[k] * w))
                    .collect()
            })
            .collect();
        ReducedVec { mac, cells }
    }

    /// Coordinate-format export of the reduced stiffness (dense probing).
    pub fn write_coo(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let dim = self.reduced_dim();
        writeln!(out, "# coupled stiffness: {dim} x {dim}")?;
        for j in 0..dim {
            let mut e = ReducedVec::zeros(
                self.n_macro_unknowns(),
                self.n_nodes(),
                self.n_cell_interior(),
            );
            self.set_flat(&mut e, j, 1.0);
            let col = self.apply_stiff(&e, None);
            for i in 0..dim {
                let v = self.get_flat(&col, i);
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v:.17e}")?;
                }
            }
        }
        Ok(())
    }

    /// Flat indexing over the reduced vector (macro slots first, then cell
    /// interiors node by node).
    pub fn get_flat(&self, z: &ReducedVec<f64>, i: usize) -> f64 {
        let nm = self.n_macro_unknowns();
        if i < nm {
            z.mac[i]
        } else {
            let k = i - nm;
            let n_int = self.n_cell_interior();
            z.cells[k / n_int][k % n_int]
        }
    }

    pub fn set_flat(&self, z: &mut ReducedVec<f64>, i: usize, v: f64) {
        let nm = self.n_macro_unknowns();
        if i < nm {
            z.mac[i] = v;
        } else {
            let k = i - nm;
            let n_int = self.n_cell_interior();
            z.cells[k / n_int][k % n_int] = v;
        }
    }
}

/// Shape-checked wrapper around the weighted inner product.
pub fn weighted_inner(
    op: &CoupledOperator,
    w1: &TwoScaleState,
    w2: &TwoScaleState,
) -> Result<f64> {
    for w in [w1, w2] {
        if w.u.len() != op.n_nodes()
            || w.cells.len() != op.n_nodes()
            || w.cells.iter().any(|c| c.len() != op.n_cell_interior())
        {
            return Err(Error::ShapeMismatch(
                "state does not conform to the operator's meshes".into(),
            ));
        }
    }
    Ok(op.weighted_inner_states(w1, w2))
}

pub fn dot_reduced(a: &ReducedVec<f64>, b: &ReducedVec<f64>) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.mac.iter().zip(b.mac.iter()) {
        acc += x * y;
    }
    for (c, d) in a.cells.iter().zip(b.cells.iter()) {
        for (x, y) in c.iter().zip(d.iter()) {
            acc += x * y;
        }
    }
    acc
}

fn tridiag_mul_generic<S: Scalar>(t: &crate::linalg::Tridiag<f64>, x: &[S]) -> Vec<S> {
    let n = t.n();
    assert_eq!(x.len(), n);
    let mut y = vec![S::ZERO; n];
    for i in 0..n {
        let mut acc = x[i].scale(t.diag[i]);
        if i > 0 {
            acc += x[i - 1].scale(t.sub[i - 1]);
        }
        if i + 1 < n {
            acc += x[i + 1].scale(t.sup[i]);
        }
        y[i] = acc;
    }
    y
}
