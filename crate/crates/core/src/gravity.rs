//! Periodic-strip variant with a quadratic outflow condition on the bottom
//! boundary and a fixed density on the top graph boundary.
//!
//! The linear part is the mixed-condition coupled operator (natural flux on
//! `Gamma0`, value on `GammaF`); the boundary nonlinearity enters as a
//! boundary-quadrature load. Time steps linearize that load (one Newton
//! correction per step by default); the steady solver runs full Newton on
//! the macro unknowns, where the cells reduce exactly to constants.
//!
//! Sign convention: the bottom condition as written is `d2 u = -u^2` with
//! `d2` the coordinate derivative in +y. At `Gamma0` the outward normal
//! points in -y, so the outward flux datum is `+u^2` under this (default)
//! convention. The `OutwardNormal` convention reads the same condition as
//! `dnu u = -u^2` instead; a scenario switch selects between the two.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, MeshKind};
use crate::linalg::DenseMat;
use crate::operators::{
    CoupledOperator, CouplingMode, MacroBcKind, SourcePair, TwoScaleState,
};
use crate::solver::{CoupledFactor, MacroSource, Trajectory};

/// Reading of the bottom boundary condition `d2 u = -u^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivConvention {
    /// `d2` is the coordinate derivative in +y (literal reading, default).
    Coordinate,
    /// `d2` is the outward normal derivative.
    OutwardNormal,
}

/// Which formulation runs: the original densities or the shifted ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GravityVariant {
    /// Unknown is `u`; `u = rho0` on `GammaF`, bottom datum from `u` itself.
    Unshifted,
    /// Unknown is `v = u - rho0`; `v = 0` on `GammaF`, bottom datum from
    /// `v + rho0`.
    Shifted,
}

/// The boundary map `G(v) = -(v + rho0)^2` with its derivative.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryNonlinearity {
    pub rho0: f64,
}

impl BoundaryNonlinearity {
    pub fn new(rho0: f64) -> Self {
        BoundaryNonlinearity { rho0 }
    }

    pub fn eval(&self, v: f64) -> f64 {
        -(v + self.rho0) * (v + self.rho0)
    }

    /// Directional derivative `dG(v) delta = -2 (v + rho0) delta`.
    pub fn deriv(&self, v: f64) -> f64 {
        -2.0 * (v + self.rho0)
    }
}

/// Scenario for the gravity problem.
#[derive(Debug, Clone)]
pub struct GravityScenario {
    pub op: Arc<CoupledOperator>,
    pub rho0: f64,
    pub variant: GravityVariant,
    pub convention: DerivConvention,
    pub source: Option<MacroSource>,
    pub theta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub w0: TwoScaleState,
    /// Newton corrections per time step (>= 1).
    pub newton_corrections: usize,
    pub guard: f64,
    pub snapshot_cadence: usize,
}

impl GravityScenario {
    pub fn new(
        op: Arc<CoupledOperator>,
        rho0: f64,
        theta: f64,
        dt: f64,
        t_end: f64,
        w0: TwoScaleState,
    ) -> Self {
        GravityScenario {
            op,
            rho0,
            variant: GravityVariant::Unshifted,
            convention: DerivConvention::Coordinate,
            source: None,
            theta,
            dt,
            t_end,
            w0,
            newton_corrections: 1,
            guard: 1e6,
            snapshot_cadence: 0,
        }
    }

    /// Shift added to the trace before squaring: 0 for the unshifted
    /// formulation (the unknown already is the density), `rho0` for the
    /// shifted one.
    pub fn trace_shift(&self) -> f64 {
        match self.variant {
            GravityVariant::Unshifted => 0.0,
            GravityVariant::Shifted => self.rho0,
        }
    }

    /// Value pinned on `GammaF`.
    pub fn gamma_f_value(&self) -> f64 {
        match self.variant {
            GravityVariant::Unshifted => self.rho0,
            GravityVariant::Shifted => 0.0,
        }
    }

    pub fn nonlinearity(&self) -> BoundaryNonlinearity {
        BoundaryNonlinearity::new(self.trace_shift())
    }

    /// Outward flux datum at the bottom boundary for trace value `v`.
    pub fn flux(&self, v: f64) -> f64 {
        let g = self.nonlinearity();
        match self.convention {
            DerivConvention::Coordinate => -g.eval(v),
            DerivConvention::OutwardNormal => g.eval(v),
        }
    }

    pub fn flux_deriv(&self, v: f64) -> f64 {
        let g = self.nonlinearity();
        match self.convention {
            DerivConvention::Coordinate => -g.deriv(v),
            DerivConvention::OutwardNormal => g.deriv(v),
        }
    }

    pub fn dirichlet_data(&self) -> Vec<f64> {
        let mesh = self.op.mesh();
        (0..mesh.n_nodes())
            .map(|n| {
                if mesh.tag(n) == Some(BoundaryTag::GammaF) {
                    self.gamma_f_value()
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.op.mesh().kind != MeshKind::PeriodicStrip {
            return Err(Error::InvalidScenario(
                "gravity scenarios need a periodic strip mesh".into(),
            ));
        }
        if self.op.macro_op.kind != MacroBcKind::MixedGamma {
            return Err(Error::InvalidScenario(
                "gravity scenarios need the mixed gamma0/gammaf operator".into(),
            ));
        }
        if self.op.mode != CouplingMode::WithExchange {
            return Err(Error::InvalidScenario(
                "gravity scenarios need the exchange coupling mode".into(),
            ));
        }
        if self.rho0 < 0.0 {
            return Err(Error::InvalidScenario("rho0 must be nonnegative".into()));
        }
        if !(0.5..=1.0).contains(&self.theta) || self.dt <= 0.0 {
            return Err(Error::InvalidScenario(
                "need theta in [1/2, 1] and dt > 0".into(),
            ));
        }
        if self.newton_corrections == 0 {
            return Err(Error::InvalidScenario(
                "at least one Newton correction per step".into(),
            ));
        }
        let gf = self.gamma_f_value();
        let mesh = self.op.mesh();
        for n in 0..mesh.n_nodes() {
            if mesh.tag(n) == Some(BoundaryTag::GammaF) && (self.w0.u[n] - gf).abs() > 1e-12 {
                return Err(Error::InvalidScenario(format!(
                    "initial state violates the gammaf value at node {n}"
                )));
            }
        }
        Ok(())
    }

    fn source_values(&self, t: f64) -> Vec<f64> {
        let mesh = self.op.mesh();
        (0..mesh.n_nodes())
            .map(|n| {
                let (x, y) = mesh.coords(n);
                self.source.map_or(0.0, |s| s.eval(t, x, y))
            })
            .collect()
    }

    /// Boundary-load vector over macro unknown slots for trace values `u`.
    fn gamma0_load(&self, u: &[f64]) -> Vec<f64> {
        let op = &self.op;
        let mut load = vec![0.0; op.n_macro_unknowns()];
        for (node, bw) in op.macro_op.gamma0_quadrature() {
            if let Some(slot) = op.macro_op.unk_index[node] {
                load[slot] = bw * self.flux(u[node]);
            }
        }
        load
    }
}

/// Weak residual of the gravity problem against a test state:
/// `<test, wdot> + a(w, test) - <test, (h,0)> - boundary flux term`.
/// The test state must vanish on `GammaF`.
pub fn residual_weak(
    scn: &GravityScenario,
    w: &TwoScaleState,
    wdot: &TwoScaleState,
    test: &TwoScaleState,
) -> Result<f64> {
    let op = &scn.op;
    for s in [w, wdot, test] {
        if s.u.len() != op.n_nodes() || s.cells.len() != op.n_nodes() {
            return Err(Error::ShapeMismatch("state size mismatch".into()));
        }
    }
    let mesh = op.mesh();
    for n in 0..op.n_nodes() {
        if mesh.tag(n) == Some(BoundaryTag::GammaF) && test.u[n].abs() > 1e-13 {
            return Err(Error::ShapeMismatch(
                "test state must vanish on gammaf".into(),
            ));
        }
    }
    let z_test = op.reduce(test);
    let z_dot = op.reduce(wdot);
    let z_w = op.reduce(w);

    // <test, wdot> against the evolution mass
    let m_dot = op.apply_mass(&z_dot);
    let mut acc = crate::operators::dot_reduced(&z_test, &m_dot);
    // a(w, test), boundary data of w taken from its own trace values
    let kw = op.apply_stiff(&z_w, Some(&w.u));
    acc += crate::operators::dot_reduced(&z_test, &kw);
    // source pairing
    let h = scn.source_values(0.0);
    let src = SourcePair {
        f: h,
        g: vec![vec![0.0; op.cell_mesh.n_nodes()]; op.n_nodes()],
    };
    let lh = op.load_from_pair(&src);
    acc -= crate::operators::dot_reduced(&z_test, &lh);
    // bottom boundary quadrature of the flux datum
    for (node, bw) in op.macro_op.gamma0_quadrature() {
        acc -= bw * test.u[node] * scn.flux(w.u[node]);
    }
    Ok(acc)
}

/// One theta-step of the gravity problem with Newton linearization of the
/// boundary load.
pub fn step_gravity(scn: &GravityScenario, w: &TwoScaleState, t: f64) -> Result<TwoScaleState> {
    let op = &scn.op;
    let data = scn.dirichlet_data();
    let z_old = op.reduce(w);
    let theta = scn.theta;
    let dt = scn.dt;

    // constant part of the step residual
    let m_old = op.apply_mass(&z_old);
    let k_old = op.apply_stiff(&z_old, Some(&data));
    let h_old = scn.source_values(t);
    let h_new = scn.source_values(t + dt);
    let h_mix: Vec<f64> = h_old
        .iter()
        .zip(h_new.iter())
        .map(|(a, b)| (1.0 - theta) * a + theta * b)
        .collect();
    let src = SourcePair {
        f: h_mix,
        g: vec![vec![0.0; op.cell_mesh.n_nodes()]; op.n_nodes()],
    };
    let l_h = op.load_from_pair(&src);

    let mut z = z_old.clone();
    let mut w_cur = w.clone();
    let mut last_delta = f64::INFINITY;
    for iter in 0..scn.newton_corrections {
        // theta-average trace used for the boundary term
        let u_theta: Vec<f64> = w
            .u
            .iter()
            .zip(w_cur.u.iter())
            .map(|(old, new)| (1.0 - theta) * old + theta * new)
            .collect();
        // residual G(z) = M (z - z_old) + dt K z^theta - dt l_h - dt gamma0(u^theta)
        let mut res = op.apply_mass(&z);
        res.axpy(-1.0, &m_old);
        let k_new = op.apply_stiff(&z, Some(&data));
        let mut k_theta = k_old.clone();
        k_theta.scale(1.0 - theta);
        k_theta.axpy(theta, &k_new);
        res.axpy(dt, &k_theta);
        res.axpy(-dt, &l_h);
        let gl = scn.gamma0_load(&u_theta);
        for (slot, g) in gl.iter().enumerate() {
            res.mac[slot] -= dt * g;
        }
        // Jacobian: M + theta dt K - theta dt diag(bw flux'(u^theta))
        let mut extra = vec![0.0; op.n_macro_unknowns()];
        for (node, bw) in op.macro_op.gamma0_quadrature() {
            if let Some(slot) = op.macro_op.unk_index[node] {
                extra[slot] = -theta * dt * bw * scn.flux_deriv(u_theta[node]);
            }
        }
        let factor = CoupledFactor::new(op, 1.0, theta * dt, Some(&extra))?;
        res.scale(-1.0);
        let delta = factor.solve(&res, None);
        let delta_norm = delta
            .mac
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(delta.cells.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())));
        if !delta_norm.is_finite() || (iter > 0 && delta_norm > 10.0 * last_delta.max(1e-13)) {
            return Err(Error::NewtonDiverged {
                t: t + dt,
                detail: format!("correction norm {delta_norm:e} after {} iterations", iter + 1),
            });
        }
        last_delta = delta_norm;
        z.axpy(1.0, &delta);
        w_cur = op.unreduce(&z, Some(&data));
        if delta_norm <= 1e-14 * w_cur.max_abs_u().max(1.0) {
            break;
        }
    }
    if !w_cur.is_finite() {
        return Err(Error::NonFinite { t: t + dt });
    }
    Ok(w_cur)
}

/// Trajectory of a gravity run plus the bottom-boundary trace series.
#[derive(Debug, Clone)]
pub struct GravityRun {
    pub trajectory: Trajectory,
    /// Times and `u` values along `Gamma0` (node order along the bottom row).
    pub gamma0_trace: Vec<(f64, Vec<f64>)>,
}

/// Runs a gravity scenario to `t_end`.
pub fn run_gravity(scn: &GravityScenario) -> Result<GravityRun> {
    scn.validate()?;
    let op = &scn.op;
    let n_steps = (scn.t_end / scn.dt - 1e-9).ceil().max(1.0) as usize;
    let mut traj = Trajectory::default();
    let mut gamma0 = Vec::new();
    let bottom: Vec<usize> = (0..op.mesh().nx).map(|i| op.mesh().node(i, 0)).collect();
    let mut w = scn.w0.clone();
    traj.record(op, 0.0, &w);
    gamma0.push((0.0, bottom.iter().map(|&n| w.u[n]).collect()));
    if scn.snapshot_cadence > 0 {
        traj.snapshots.push((0, 0.0, w.clone()));
    }
    for step in 0..n_steps {
        let t = step as f64 * scn.dt;
        w = step_gravity(scn, &w, t)?;
        let t_next = (step + 1) as f64 * scn.dt;
        let sup = w.max_abs_u();
        if sup > scn.guard {
            return Err(Error::BlowUpGuard {
                t: t_next,
                value: sup,
                bound: scn.guard,
            });
        }
        traj.record(op, t_next, &w);
        gamma0.push((t_next, bottom.iter().map(|&n| w.u[n]).collect()));
        if scn.snapshot_cadence > 0 && (step + 1) % scn.snapshot_cadence == 0 {
            traj.snapshots.push((step + 1, t_next, w.clone()));
        }
    }
    Ok(GravityRun {
        trajectory: traj,
        gamma0_trace: gamma0,
    })
}

/// Steady-state report.
#[derive(Debug, Clone, Copy)]
pub struct SteadyReport {
    pub iterations: usize,
    pub residual: f64,
}

/// Full Newton on the steady problem. At a steady state the cells are
/// constant per node (harmonic with constant boundary data), so the exchange
/// flux vanishes and the iteration runs on the macro unknowns alone.
pub fn steady_newton(scn: &GravityScenario) -> Result<(TwoScaleState, SteadyReport)> {
    scn.validate_steady()?;
    let op = &scn.op;
    let n = op.n_macro_unknowns();
    let data = scn.dirichlet_data();
    let h = scn.source_values(0.0);
    let mesh = op.mesh();

    // start from the gammaf value everywhere
    let mut u_full: Vec<f64> = vec![scn.gamma_f_value(); mesh.n_nodes()];

    let residual = |u_full: &[f64]| -> Vec<f64> {
        let u_slots: Vec<f64> = op.macro_op.unknowns.iter().map(|&n| u_full[n]).collect();
        let mut r = op.macro_op.apply(&u_slots);
        let lift = op.macro_op.lift_apply(&data);
        for (slot, l) in lift.iter().enumerate() {
            r[slot] += l;
        }
        for (slot, &node) in op.macro_op.unknowns.iter().enumerate() {
            r[slot] -= op.macro_op.weights[slot] * h[node];
        }
        for (node, bw) in op.macro_op.gamma0_quadrature() {
            if let Some(slot) = op.macro_op.unk_index[node] {
                r[slot] -= bw * scn.flux(u_full[node]);
            }
        }
        r
    };

    let max_iter = 50;
    for iter in 0..max_iter {
        let r = residual(&u_full);
        let rnorm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if rnorm <= 1e-11 {
            let state = op.matched_state(u_full);
            return Ok((state, SteadyReport {
                iterations: iter,
                residual: rnorm,
            }));
        }
        // Jacobian: K_uu - diag(bw flux'(u)) on gamma0 slots
        let mut jac = DenseMat::<f64>::zeros(n, n);
        for slot in 0..n {
            for &(c, v) in op.macro_op.row(slot) {
                jac.add_at(slot, c, v);
            }
        }
        for (node, bw) in op.macro_op.gamma0_quadrature() {
            if let Some(slot) = op.macro_op.unk_index[node] {
                jac.add_at(slot, slot, -bw * scn.flux_deriv(u_full[node]));
            }
        }
        let lu = jac.lu()?;
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        lu.solve_in_place(&mut delta);
        if delta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NewtonDiverged {
                t: 0.0,
                detail: "non-finite Newton correction in steady solve".into(),
            });
        }
        for (slot, &node) in op.macro_op.unknowns.iter().enumerate() {
            u_full[node] += delta[slot];
        }
    }
    let r = residual(&u_full);
    let rnorm = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Err(Error::NewtonStalled {
        iterations: max_iter,
        residual: rnorm,
    })
}

impl GravityScenario {
    /// Steady solves do not use theta/dt/w0; validate only the structure.
    fn validate_steady(&self) -> Result<()> {
        if self.op.mesh().kind != MeshKind::PeriodicStrip
            || self.op.macro_op.kind != MacroBcKind::MixedGamma
            || self.op.mode != CouplingMode::WithExchange
        {
            return Err(Error::InvalidScenario(
                "steady gravity solve needs a strip mesh with the mixed-condition exchange operator"
                    .into(),
            ));
        }
        if self.rho0 < 0.0 {
            return Err(Error::InvalidScenario("rho0 must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Writes the bottom-boundary trace series as CSV.
pub fn write_gamma0_csv(run: &GravityRun, out: &mut dyn std::io::Write) -> std::io::Result<()> {
    if let Some((_, first)) = run.gamma0_trace.first() {
        let header: Vec<String> = (0..first.len()).map(|i| format!("u_{i}")).collect();
        writeln!(out, "t,{}", header.join(","))?;
    }
    for (t, vals) in &run.gamma0_trace {
        let cols: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{t:.16e},{}", cols.join(","))?;
    }
    Ok(())
}
