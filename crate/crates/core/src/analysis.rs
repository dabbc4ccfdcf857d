//! Quantitative diagnostics: spectral bound of the coupled operator, decay
//! rate fitting, the conserved material functional, resolvent sector probes
//! and manufactured-solution convergence studies.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::cellmap::{CellMap, Coefficient, MapFamily};
use crate::error::{Error, Result};
use crate::geometry::{build_cell_mesh, build_interval_mesh, BoundaryTag, CellMode};
use crate::linalg::{jacobi_symmetric_eig, DenseMat, DetRng};
use crate::operators::{
    dot_reduced, CoupledOperator, CouplingMode, MacroBcKind, ReducedVec, SourcePair,
    TwoScaleState,
};
use crate::solver::{CoupledFactor, Trajectory};

/// Result of the generalized eigenvalue probe.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Smallest generalized eigenvalue of the stiffness against the mass.
    pub sigma: f64,
    /// The next few eigenvalues in ascending order.
    pub others: Vec<f64>,
    /// Relative asymmetry of the mass-weighted stiffness.
    pub symmetry_defect: f64,
    pub iterations: usize,
    pub tolerance: f64,
}

fn require_self_adjoint_setup(op: &CoupledOperator) -> Result<()> {
    if op.mode != CouplingMode::WithExchange {
        return Err(Error::InvalidScenario(
            "spectral probes need the exchange coupling mode".into(),
        ));
    }
    if op.macro_op.kind != MacroBcKind::Dirichlet {
        return Err(Error::InvalidScenario(
            "spectral probes need the Dirichlet macro operator".into(),
        ));
    }
    Ok(())
}

fn random_reduced(op: &CoupledOperator, rng: &mut DetRng) -> ReducedVec<f64> {
    let mut z = ReducedVec::zeros(op.n_macro_unknowns(), op.n_nodes(), op.n_cell_interior());
    for v in z.mac.iter_mut() {
        *v = rng.next_f64();
    }
    for c in z.cells.iter_mut() {
        for v in c.iter_mut() {
            *v = rng.next_f64();
        }
    }
    z
}

fn mass_orthonormalize(op: &CoupledOperator, xs: &mut [ReducedVec<f64>]) -> Result<()> {
    for i in 0..xs.len() {
        for j in 0..i {
            let c = op.mass_inner(&xs[i], &xs[j]);
            let (left, right) = xs.split_at_mut(i);
            right[0].axpy(-c, &left[j]);
        }
        let n = op.mass_inner(&xs[i], &xs[i]).max(0.0).sqrt();
        if n < 1e-250 {
            return Err(Error::IterationStagnation { iterations: 0 });
        }
        xs[i].scale(1.0 / n);
    }
    Ok(())
}

/// Relative asymmetry of the reduced stiffness: dense Frobenius measure at
/// desk scale, a sampled pair measure for larger systems.
pub fn symmetry_defect(op: &CoupledOperator) -> f64 {
    let dim = op.reduced_dim();
    if dim <= 1500 {
        let mut k = DenseMat::<f64>::zeros(dim, dim);
        for j in 0..dim {
            let mut e = ReducedVec::zeros(op.n_macro_unknowns(), op.n_nodes(), op.n_cell_interior());
            op.set_flat(&mut e, j, 1.0);
            let col = op.apply_stiff(&e, None);
            for i in 0..dim {
                k.set(i, j, op.get_flat(&col, i));
            }
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let d = k.get(i, j) - k.get(j, i);
                num += d * d;
                den += k.get(i, j) * k.get(i, j);
            }
        }
        (num / den.max(1e-300)).sqrt()
    } else {
        let mut rng = DetRng::new(0x00de_fec7);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let a = random_reduced(op, &mut rng);
            let b = random_reduced(op, &mut rng);
            let ka = op.apply_stiff(&a, None);
            let kb = op.apply_stiff(&b, None);
            let left = dot_reduced(&ka, &b);
            let right = dot_reduced(&kb, &a);
            let scale = left.abs().max(right.abs()).max(1e-300);
            worst = worst.max((left - right).abs() / scale);
        }
        worst
    }
}

/// Smallest generalized eigenvalues by block inverse iteration with
/// mass-orthogonal Rayleigh–Ritz extraction.
pub fn spectral_bound(op: &Arc<CoupledOperator>) -> Result<SpectralReport> {
    require_self_adjoint_setup(op)?;
    let dim = op.reduced_dim();
    let block = 4.min(dim);
    let factor = CoupledFactor::new(op, 0.0, 1.0, None)?;
    let mut rng = DetRng::new(0x0005_eed5);
    let mut xs: Vec<ReducedVec<f64>> = (0..block).map(|_| random_reduced(op, &mut rng)).collect();
    mass_orthonormalize(op, &mut xs)?;

    let tol = 1e-12;
    let max_iter = 2000;
    let mut sigma_prev = f64::INFINITY;
    let mut hits = 0;
    let mut vals = vec![0.0; block];
    for it in 1..=max_iter {
        let mut ys: Vec<ReducedVec<f64>> = xs
            .iter()
            .map(|x| factor.solve(&op.apply_mass(x), None))
            .collect();
        mass_orthonormalize(op, &mut ys)?;
        // Rayleigh-Ritz on the mass-orthonormal block
        let mut a_hat = DenseMat::<f64>::zeros(block, block);
        let kys: Vec<ReducedVec<f64>> = ys.iter().map(|y| op.apply_stiff(y, None)).collect();
        for i in 0..block {
            for j in 0..block {
                a_hat.set(i, j, dot_reduced(&ys[i], &kys[j]));
            }
        }
        // symmetrize roundoff
        for i in 0..block {
            for j in i + 1..block {
                let s = 0.5 * (a_hat.get(i, j) + a_hat.get(j, i));
                a_hat.set(i, j, s);
                a_hat.set(j, i, s);
            }
        }
        let (ritz, vecs) = jacobi_symmetric_eig(&a_hat)?;
        let mut rotated: Vec<ReducedVec<f64>> = Vec::with_capacity(block);
        for col in 0..block {
            let mut acc =
                ReducedVec::zeros(op.n_macro_unknowns(), op.n_nodes(), op.n_cell_interior());
            for (row, y) in ys.iter().enumerate() {
                acc.axpy(vecs.get(row, col), y);
            }
            rotated.push(acc);
        }
        xs = rotated;
        vals = ritz;
        let sigma = vals[0];
        if (sigma - sigma_prev).abs() <= tol * sigma.abs().max(1e-300) {
            hits += 1;
            if hits >= 2 {
                return Ok(SpectralReport {
                    sigma,
                    others: vals[1..].to_vec(),
                    symmetry_defect: symmetry_defect(op),
                    iterations: it,
                    tolerance: 1e-10,
                });
            }
        } else {
            hits = 0;
        }
        sigma_prev = sigma;
    }
    Err(Error::IterationStagnation {
        iterations: max_iter,
    })
}

/// Log-linear decay fit of the weighted norm over a time window.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
    /// Root-mean-square residual of the log-linear fit.
    pub residual: f64,
}

/// Fits `log ||w||` over `window` (defaults to the trajectory span with the
/// first 10% dropped, where multi-mode transients pollute the rate).
pub fn decay_fit(traj: &Trajectory, window: Option<(f64, f64)>) -> Result<DecayFit> {
    if traj.is_empty() {
        return Err(Error::InvalidWindow("empty trajectory".into()));
    }
    let t_first = traj.times[0];
    let t_last = *traj.times.last().unwrap();
    let window = window.unwrap_or((t_first + 0.1 * (t_last - t_first), t_last));
    let mut ts = Vec::new();
    let mut logs = Vec::new();
    for (t, norm) in traj.times.iter().zip(traj.w_yg.iter()) {
        if *t >= window.0 - 1e-14 && *t <= window.1 + 1e-14 {
            if *norm <= 0.0 {
                return Err(Error::InvalidWindow(format!(
                    "non-positive norm {norm} at t = {t} in the fit window"
                )));
            }
            ts.push(*t);
            logs.push(norm.ln());
        }
    }
    if ts.len() < 2 {
        return Err(Error::InvalidWindow(format!(
            "fit window [{}, {}] contains {} samples",
            window.0,
            window.1,
            ts.len()
        )));
    }
    let n = ts.len() as f64;
    let mean_t = ts.iter().sum::<f64>() / n;
    let mean_l = logs.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stl = 0.0;
    for (t, l) in ts.iter().zip(logs.iter()) {
        stt += (t - mean_t) * (t - mean_t);
        stl += (t - mean_t) * (l - mean_l);
    }
    let slope = if stt > 0.0 { stl / stt } else { 0.0 };
    let intercept = mean_l - slope * mean_t;
    let mut ss = 0.0;
    for (t, l) in ts.iter().zip(logs.iter()) {
        let r = l - (intercept + slope * t);
        ss += r * r;
    }
    Ok(DecayFit {
        rate: -slope,
        amplitude: intercept.exp(),
        window,
        residual: (ss / n).sqrt(),
    })
}

/// Total material functional (macro integral plus weighted cell integrals).
pub fn mass_s(op: &CoupledOperator, w: &TwoScaleState) -> f64 {
    op.mass_s(w)
}

/// One resolvent-norm sample.
#[derive(Debug, Clone, Copy)]
pub struct SectorSample {
    pub re: f64,
    pub im: f64,
    /// Measured operator norm of the resolvent in the weighted metric.
    pub norm: f64,
    pub iterations: usize,
    /// Set when the shift was too close to the spectrum to factor reliably.
    pub warned: bool,
}

/// Sampled resolvent bound over rays of shifts.
#[derive(Debug, Clone)]
pub struct SectorProbe {
    pub samples: Vec<SectorSample>,
    /// Fitted constant `M` with `norm <= M / |lambda - omega|`.
    pub m_bound: f64,
    pub omega: f64,
}

fn conj_reduced(z: &ReducedVec<Complex64>) -> ReducedVec<Complex64> {
    ReducedVec {
        mac: z.mac.iter().map(|v| v.conj()).collect(),
        cells: z
            .cells
            .iter()
            .map(|c| c.iter().map(|v| v.conj()).collect())
            .collect(),
    }
}

fn mass_inner_c(
    op: &CoupledOperator,
    a: &ReducedVec<Complex64>,
    b: &ReducedVec<Complex64>,
) -> Complex64 {
    let mb = op.apply_mass(b);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.mac.iter().zip(mb.mac.iter()) {
        acc += x * y.conj();
    }
    for (c, d) in a.cells.iter().zip(mb.cells.iter()) {
        for (x, y) in c.iter().zip(d.iter()) {
            acc += x * y.conj();
        }
    }
    acc
}

/// Measures `||(lambda + A)^{-1}||` in the weighted metric by power
/// iteration on the normal-operator square.
fn resolvent_norm(
    op: &Arc<CoupledOperator>,
    factor: &CoupledFactor<Complex64>,
    rng: &mut DetRng,
) -> (f64, usize) {
    let mut v = ReducedVec::<Complex64>::zeros(
        op.n_macro_unknowns(),
        op.n_nodes(),
        op.n_cell_interior(),
    );
    for x in v.mac.iter_mut() {
        *x = Complex64::new(rng.next_f64(), rng.next_f64());
    }
    for c in v.cells.iter_mut() {
        for x in c.iter_mut() {
            *x = Complex64::new(rng.next_f64(), rng.next_f64());
        }
    }
    let nv = mass_inner_c(op, &v, &v).re.max(1e-300).sqrt();
    v.scale(Complex64::new(1.0 / nv, 0.0));
    let mut rho_prev = 0.0;
    let mut iterations = 0;
    let mut hits = 0;
    for it in 1..=2000 {
        iterations = it;
        // y = R v, z = R* y = conj(R conj(M y))
        let y = factor.solve(&op.apply_mass(&v), None);
        let my = op.apply_mass(&y);
        let z = conj_reduced(&factor.solve(&conj_reduced(&my), None));
        let rho = mass_inner_c(op, &z, &v).re;
        let nz = mass_inner_c(op, &z, &z).re.max(1e-300).sqrt();
        let mut vn = z;
        vn.scale(Complex64::new(1.0 / nz, 0.0));
        v = vn;
        if (rho - rho_prev).abs() <= 1e-12 * rho.abs().max(1e-300) {
            hits += 1;
            if hits >= 2 {
                return (rho.max(0.0).sqrt(), it);
            }
        } else {
            hits = 0;
        }
        rho_prev = rho;
    }
    (rho_prev.max(0.0).sqrt(), iterations)
}

/// Probes the resolvent norm at shifts `r e^{i theta}` for every angle in
/// `angles` (radians) and radius in `radii`, and fits the sector constant.
pub fn sector_probe(
    op: &Arc<CoupledOperator>,
    angles: &[f64],
    radii: &[f64],
) -> Result<SectorProbe> {
    require_self_adjoint_setup(op)?;
    let mut samples = Vec::new();
    let mut m_bound = 0.0f64;
    for &ang in angles {
        for &r in radii {
            if r <= 0.0 {
                return Err(Error::InvalidScenario("radii must be positive".into()));
            }
            let lambda = Complex64::new(r * ang.cos(), r * ang.sin());
            let mut rng = DetRng::new(0x77);
            match CoupledFactor::<Complex64>::new(op, lambda, Complex64::new(1.0, 0.0), None) {
                Ok(factor) => {
                    let (norm, iterations) = resolvent_norm(op, &factor, &mut rng);
                    let warned = !norm.is_finite() || norm > 1e12;
                    if !warned {
                        m_bound = m_bound.max(norm * lambda.norm());
                    }
                    samples.push(SectorSample {
                        re: lambda.re,
                        im: lambda.im,
                        norm,
                        iterations,
                        warned,
                    });
                }
                Err(_) => samples.push(SectorSample {
                    re: lambda.re,
                    im: lambda.im,
                    norm: f64::INFINITY,
                    iterations: 0,
                    warned: true,
                }),
            }
        }
    }
    Ok(SectorProbe {
        samples,
        m_bound,
        omega: 0.0,
    })
}

/// Manufactured-solution cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManufacturedCase {
    /// Identity map, `V = 1 - y^2`: the stencil is exact, errors sit at
    /// rounding level on every mesh.
    CellQuadratic,
    /// Map `y + 0.1 y^2`, `V = cos(pi y / 2)`: second-order cell operator.
    CellCosine,
    /// Coupled steady solve with manufactured macro and cell fields.
    CoupledSteady,
}

impl ManufacturedCase {
    pub fn name(&self) -> &'static str {
        match self {
            ManufacturedCase::CellQuadratic => "cell-quadratic",
            ManufacturedCase::CellCosine => "cell-cosine",
            ManufacturedCase::CoupledSteady => "coupled-steady",
        }
    }
}

/// Errors and observed orders over a mesh ladder.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub case: ManufacturedCase,
    pub hs: Vec<f64>,
    pub errors: Vec<f64>,
    /// Observed order per refinement pair (length one less than `hs`).
    pub orders: Vec<f64>,
}

fn quad_map(mesh: &Arc<crate::geometry::MacroMesh>) -> CellMap {
    CellMap::build(
        MapFamily::General1d {
            alpha: Coefficient::Constant(1.0),
            beta: Coefficient::Constant(0.1),
        },
        1,
        mesh,
    )
    .expect("catalog map")
}

fn cell_case_error(case: ManufacturedCase, m: usize) -> Result<(f64, f64)> {
    let mesh = Arc::new(build_interval_mesh(
        1.0,
        3,
        (BoundaryTag::Dirichlet, BoundaryTag::Dirichlet),
    )?);
    let cell = build_cell_mesh(1, CellMode::Interval, m)?;
    match case {
        ManufacturedCase::CellQuadratic => {
            let map = CellMap::build(MapFamily::Identity, 1, &mesh)?;
            let op = crate::operators::assemble_cell(&cell, &map, 0)?;
            let v: Vec<f64> = cell.nodes.iter().map(|y| 1.0 - y * y).collect();
            let av = op.laplace_beltrami(&v);
            let err = (op.int_start..op.int_end)
                .map(|k| (av[k] - 2.0).abs())
                .fold(0.0, f64::max);
            Ok((cell.h, err))
        }
        ManufacturedCase::CellCosine => {
            let map = quad_map(&mesh);
            let op = crate::operators::assemble_cell(&cell, &map, 0)?;
            let v: Vec<f64> = cell.nodes.iter().map(|y| (PI * y / 2.0).cos()).collect();
            let av = op.laplace_beltrami(&v);
            let mut acc = 0.0;
            for k in op.int_start..op.int_end {
                let y = cell.nodes[k];
                let j = 1.0 + 0.2 * y;
                let vp = -(PI / 2.0) * (PI * y / 2.0).sin();
                let vpp = -(PI * PI / 4.0) * (PI * y / 2.0).cos();
                let exact = -(vpp * j - vp * 0.2) / (j * j * j);
                acc += op.mass[k] * (av[k] - exact) * (av[k] - exact);
            }
            Ok((cell.h, acc.sqrt()))
        }
        ManufacturedCase::CoupledSteady => unreachable!(),
    }
}

fn coupled_steady_error(n: usize) -> Result<(f64, f64)> {
    let mesh = Arc::new(build_interval_mesh(
        1.0,
        n,
        (BoundaryTag::Dirichlet, BoundaryTag::Dirichlet),
    )?);
    let cell = Arc::new(build_cell_mesh(1, CellMode::Interval, n)?);
    let map = quad_map(&mesh);
    let op = Arc::new(CoupledOperator::build(
        &mesh,
        &cell,
        &map,
        MacroBcKind::Dirichlet,
        CouplingMode::WithExchange,
    )?);
    // u*(x) = sin(pi x), phi(y) = 1 + 0.3 (1 - y^2), V* = u* phi,
    // J = 1 + 0.2 y. Exchange flux of V* is 1.25 u*.
    let u_star = |x: f64| (PI * x).sin();
    let phi = |y: f64| 1.0 + 0.3 * (1.0 - y * y);
    let s_phi = |y: f64| {
        let j = 1.0 + 0.2 * y;
        let pp = -0.6;
        let p1 = -0.6 * y;
        -(pp * j - p1 * 0.2) / (j * j * j)
    };
    let q_star_coeff = -(-0.6 / 1.2 - 0.6 / 0.8); // 1.25
    let src = SourcePair {
        f: (0..op.n_nodes())
            .map(|i| {
                let x = op.mesh().xs[i];
                (PI * PI - q_star_coeff) * u_star(x)
            })
            .collect(),
        g: (0..op.n_nodes())
            .map(|i| {
                let x = op.mesh().xs[i];
                cell.nodes.iter().map(|&y| u_star(x) * s_phi(y)).collect()
            })
            .collect(),
    };
    let load = op.load_from_pair(&src);
    let factor = CoupledFactor::new(&op, 0.0, 1.0, None)?;
    let z = factor.solve(&load, None);
    let w_h = op.unreduce(&z, None);
    let mut w_exact = op.zero_state();
    for i in 0..op.n_nodes() {
        let x = op.mesh().xs[i];
        w_exact.u[i] = u_star(x);
        for (slot, k) in (op.cells[i].int_start..op.cells[i].int_end).enumerate() {
            w_exact.cells[i][slot] = u_star(x) * phi(cell.nodes[k]);
        }
    }
    let mut diff = w_h;
    diff.axpy(-1.0, &w_exact);
    Ok((mesh.hx, op.yg_norm(&diff)))
}

/// Runs the manufactured case over a ladder of mesh sizes (node counts,
/// strictly increasing, at least three levels).
pub fn mms_convergence(case: ManufacturedCase, levels: &[usize]) -> Result<ConvergenceReport> {
    if levels.len() < 3 {
        return Err(Error::LadderTooShort {
            need: 3,
            got: levels.len(),
        });
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidScenario(
            "mesh ladder must be strictly increasing".into(),
        ));
    }
    let mut hs = Vec::new();
    let mut errors = Vec::new();
    for &n in levels {
        let (h, e) = match case {
            ManufacturedCase::CoupledSteady => coupled_steady_error(n)?,
            other => cell_case_error(other, n)?,
        };
        hs.push(h);
        errors.push(e);
    }
    let orders = (1..hs.len())
        .map(|i| {
            let num = (errors[i - 1].max(1e-300) / errors[i].max(1e-300)).ln();
            let den = (hs[i - 1] / hs[i]).ln();
            num / den
        })
        .collect();
    Ok(ConvergenceReport {
        case,
        hs,
        errors,
        orders,
    })
}
