//! Independent dense oracles for the integration tests.
//!
//! Everything here is assembled and solved by straight loops over the
//! defining formulas, separate from the crate's operator-application and
//! Schur-elimination paths, so agreement between the two is meaningful.

#![allow(dead_code)]

use twoscale::cellmap::{eval_metric, CellMap};
use twoscale::geometry::{CellMesh, MacroMesh};

/// Dense reduced matrices of the coupled problem, in the same flat layout
/// as the crate (macro unknown slots first, then interior cells node by
/// node).
pub struct DenseCoupled {
    pub n_mac: usize,
    pub n_nodes: usize,
    pub n_int: usize,
    pub dim: usize,
    /// Reduced stiffness.
    pub k: Vec<Vec<f64>>,
    /// Evolution mass diagonal.
    pub mass: Vec<f64>,
    /// Macro unknown node ids.
    pub unknowns: Vec<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Plain,
    Exchange,
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum OracleBc {
    Dirichlet,
    Neumann,
}

/// Assembles dense coupled matrices for an interval macro mesh with 1D
/// interval cells from first principles.
pub fn dense_coupled(
    mesh: &MacroMesh,
    cell: &CellMesh,
    map: &CellMap,
    bc: OracleBc,
    mode: OracleMode,
) -> DenseCoupled {
    let n = mesh.nx;
    let h = mesh.hx;
    let m = cell.n_nodes();
    let hc = cell.h;

    // macro volume weights, trapezoid
    let wmac: Vec<f64> = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect();

    // full macro stiffness
    let mut kmac = vec![vec![0.0; n]; n];
    for e in 0..n - 1 {
        kmac[e][e] += 1.0 / h;
        kmac[e + 1][e + 1] += 1.0 / h;
        kmac[e][e + 1] -= 1.0 / h;
        kmac[e + 1][e] -= 1.0 / h;
    }
    let unknowns: Vec<usize> = match bc {
        OracleBc::Dirichlet => (1..n - 1).collect(),
        OracleBc::Neumann => (0..n).collect(),
    };
    let n_mac = unknowns.len();

    // full cell stiffness and weighted mass per macro node
    let cell_volw: Vec<f64> = (0..m)
        .map(|k| if k == 0 || k == m - 1 { 0.5 * hc } else { hc })
        .collect();
    let mut kcell = Vec::with_capacity(n);
    let mut mcell = Vec::with_capacity(n);
    for node in 0..n {
        let mut kc = vec![vec![0.0; m]; m];
        for e in 0..m - 1 {
            let ymid = 0.5 * (cell.nodes[e] + cell.nodes[e + 1]);
            let md = eval_metric(map, node, ymid).unwrap();
            let a = md.sqrt_det * md.g_inv / hc;
            kc[e][e] += a;
            kc[e + 1][e + 1] += a;
            kc[e][e + 1] -= a;
            kc[e + 1][e] -= a;
        }
        let mc: Vec<f64> = (0..m)
            .map(|k| eval_metric(map, node, cell.nodes[k]).unwrap().sqrt_det * cell_volw[k])
            .collect();
        kcell.push(kc);
        mcell.push(mc);
    }

    let n_int = m - 2;
    let dim = n_mac + n * n_int;
    let mut k = vec![vec![0.0; dim]; dim];
    let mut mass = vec![0.0; dim];

    let slot_of_node: Vec<Option<usize>> = (0..n)
        .map(|i| unknowns.iter().position(|&u| u == i))
        .collect();
    let cell_flat = |node: usize, loc: usize| n_mac + node * n_int + loc;

    // macro-macro block
    for (s, &i) in unknowns.iter().enumerate() {
        for (t, &j) in unknowns.iter().enumerate() {
            k[s][t] += kmac[i][j];
        }
        let beta = mcell[i][0] + mcell[i][m - 1];
        mass[s] = match mode {
            OracleMode::Plain => wmac[i],
            OracleMode::Exchange => wmac[i] * (1.0 + beta),
        };
        if mode == OracleMode::Exchange {
            // boundary block of the cell, rows and columns both on the
            // boundary nodes {0, m-1}
            let kb =
                kcell[i][0][0] + kcell[i][0][m - 1] + kcell[i][m - 1][0] + kcell[i][m - 1][m - 1];
            k[s][s] += wmac[i] * kb;
        }
    }

    // cell blocks and couplings
    for node in 0..n {
        let w = wmac[node];
        for a in 0..n_int {
            let ka = a + 1; // interior cell node id
            mass[cell_flat(node, a)] = w * mcell[node][ka];
            for b in 0..n_int {
                k[cell_flat(node, a)][cell_flat(node, b)] += w * kcell[node][ka][b + 1];
            }
            // coupling to the macro value of this node (boundary columns)
            let col_coup = kcell[node][ka][0] + kcell[node][ka][m - 1];
            if let Some(s) = slot_of_node[node] {
                k[cell_flat(node, a)][s] += w * col_coup;
                if mode == OracleMode::Exchange {
                    // boundary rows against the interior column
                    let row_coup = kcell[node][0][ka] + kcell[node][m - 1][ka];
                    k[s][cell_flat(node, a)] += w * row_coup;
                }
            }
        }
    }

    DenseCoupled {
        n_mac,
        n_nodes: n,
        n_int,
        dim,
        k,
        mass,
        unknowns,
    }
}

impl DenseCoupled {
    pub fn mul_k(&self, x: &[f64]) -> Vec<f64> {
        self.k
            .iter()
            .map(|row| row.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Gauss elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let mut p = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[p][col].abs() {
                p = r;
            }
        }
        a.swap(col, p);
        b.swap(col, p);
        let pivot = a[col][col];
        assert!(pivot.abs() > 1e-300, "singular oracle system");
        for r in col + 1..n {
            let f = a[r][col] / pivot;
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r][c] * b[c];
        }
        b[r] = acc / a[r][r];
    }
    b
}

/// Cyclic Jacobi eigen-decomposition for the oracle (independent of the
/// crate kernel). Returns ascending eigenvalues and eigenvector columns.
pub fn sym_eig(a_in: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a_in.len();
    let mut a: Vec<Vec<f64>> = a_in.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..200 {
        let mut off: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(a[i][j].abs());
            }
        }
        let scale: f64 = (0..n).map(|i| a[i][i].abs()).fold(1e-300, f64::max);
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() <= 1e-18 * scale {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| a[i][i]).collect();
    let mut cols = vec![vec![0.0; n]; n];
    for (newc, &src) in order.iter().enumerate() {
        for r in 0..n {
            cols[newc][r] = v[r][src];
        }
    }
    (vals, cols)
}

/// Generalized symmetric eigenvalues of `(K, diag(mass))` for the oracle:
/// eigenvalues of `D^{-1/2} K D^{-1/2}` with back-scaled eigenvectors.
pub fn gen_eig(k: &[Vec<f64>], mass: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = mass.len();
    let mut b = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            b[i][j] = k[i][j] / (mass[i].sqrt() * mass[j].sqrt());
        }
    }
    let (vals, cols) = sym_eig(&b);
    let vecs = cols
        .into_iter()
        .map(|col| {
            col.iter()
                .zip(mass.iter())
                .map(|(v, m)| v / m.sqrt())
                .collect()
        })
        .collect();
    (vals, vecs)
}
