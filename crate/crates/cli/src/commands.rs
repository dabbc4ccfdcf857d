//! Command dispatch: builds the scenario described by a configuration and
//! writes the artifacts of the requested subcommand.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use twoscale::analysis::{
    mms_convergence, sector_probe, spectral_bound, ManufacturedCase,
};
use twoscale::cellmap::{CellMap, Coefficient, MapFamily};
use twoscale::geometry::{
    build_cell_mesh, build_interval_mesh, build_strip_mesh, BoundaryTag, CellMesh, CellMode,
    MacroMesh, StripProfile,
};
use twoscale::gravity::{
    run_gravity, steady_newton, write_gamma0_csv, DerivConvention, GravityScenario,
    GravityVariant,
};
use twoscale::operators::{CoupledOperator, CouplingMode, MacroBcKind, TwoScaleState};
use twoscale::solver::{run, Forcing, MacroSource, Reaction, Scenario};

use crate::config::{
    BcKind, CaseKind, CellModeKind, CoefficientConfig, CoefficientKind, Config, ConventionKind,
    CouplingKind, FamilyKind, ForcingKind, InitialKind, MeshConfig, ProfileConfig, VariantKind,
};
use crate::{resolved_text, CliError};

/// Available subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Spectrum,
    Sector,
    Converge,
    Steady,
}

impl Command {
    pub fn parse(name: &str) -> Option<Command> {
        match name {
            "run" => Some(Command::Run),
            "spectrum" => Some(Command::Spectrum),
            "sector" => Some(Command::Sector),
            "converge" => Some(Command::Converge),
            "steady" => Some(Command::Steady),
            _ => None,
        }
    }
}

fn coefficient(c: &CoefficientConfig) -> Coefficient {
    match c.kind {
        CoefficientKind::Constant => Coefficient::Constant(c.a),
        CoefficientKind::Affine => Coefficient::Affine {
            offset: c.a,
            slope: c.b,
        },
        CoefficientKind::Sinusoid => Coefficient::Sinusoid {
            offset: c.a,
            amp: c.b,
        },
    }
}

pub fn build_macro_mesh(cfg: &Config) -> Result<Arc<MacroMesh>, CliError> {
    let mesh = match &cfg.mesh {
        MeshConfig::Interval { length, nodes } => {
            let tag = match cfg.bc {
                BcKind::Dirichlet => BoundaryTag::Dirichlet,
                BcKind::Neumann => BoundaryTag::Neumann,
                BcKind::Mixed => {
                    return Err(CliError::Config(
                        "physics.bc: mixed conditions need a strip mesh".into(),
                    ))
                }
            };
            build_interval_mesh(*length, *nodes, (tag, tag))?
        }
        MeshConfig::Strip { nx, ny, profile } => {
            let profile = match profile {
                ProfileConfig::Constant { height } => StripProfile::Constant(*height),
                ProfileConfig::Sinusoid { mean, amp } => StripProfile::Sinusoid {
                    mean: *mean,
                    amp: *amp,
                },
            };
            build_strip_mesh(&profile, *nx, *ny)?
        }
    };
    Ok(Arc::new(mesh))
}

pub fn build_cellmesh(cfg: &Config) -> Result<Arc<CellMesh>, CliError> {
    let mode = match cfg.cellmap.mode {
        CellModeKind::Interval => CellMode::Interval,
        CellModeKind::Radial => CellMode::Radial,
    };
    Ok(Arc::new(build_cell_mesh(
        cfg.cellmap.dim,
        mode,
        cfg.cellmap.nodes,
    )?))
}

pub fn build_map(cfg: &Config, mesh: &Arc<MacroMesh>) -> Result<CellMap, CliError> {
    let family = match cfg.cellmap.family {
        FamilyKind::Identity => MapFamily::Identity,
        FamilyKind::ScaledBall => MapFamily::ScaledBall {
            c: coefficient(&cfg.cellmap.c),
        },
        FamilyKind::General1d => MapFamily::General1d {
            alpha: coefficient(&cfg.cellmap.alpha),
            beta: coefficient(&cfg.cellmap.beta),
        },
    };
    Ok(CellMap::build(family, cfg.cellmap.dim, mesh)?)
}

pub fn build_operator(cfg: &Config) -> Result<Arc<CoupledOperator>, CliError> {
    let mesh = build_macro_mesh(cfg)?;
    let cellmesh = build_cellmesh(cfg)?;
    let map = build_map(cfg, &mesh)?;
    let bc = match cfg.bc {
        BcKind::Dirichlet => MacroBcKind::Dirichlet,
        BcKind::Neumann => MacroBcKind::Neumann,
        BcKind::Mixed => MacroBcKind::MixedGamma,
    };
    let mode = match cfg.coupling {
        CouplingKind::Plain => CouplingMode::Plain,
        CouplingKind::Exchange => CouplingMode::WithExchange,
    };
    Ok(Arc::new(CoupledOperator::build(
        &mesh, &cellmesh, &map, bc, mode,
    )?))
}

/// Initial state catalog. Profiles vanish on value-pinned boundaries; on the
/// strip they sit on top of the `GammaF` datum.
pub fn build_initial_state(cfg: &Config, op: &Arc<CoupledOperator>) -> TwoScaleState {
    let mesh = op.mesh();
    let base = match (cfg.bc, cfg.variant) {
        (BcKind::Mixed, VariantKind::Unshifted) => cfg.rho0,
        _ => 0.0,
    };
    let value = cfg.initial_value;
    let u: Vec<f64> = (0..op.n_nodes())
        .map(|n| {
            let (x, y) = mesh.coords(n);
            let shape = match &cfg.mesh {
                MeshConfig::Interval { length, .. } => match cfg.initial {
                    InitialKind::Zero => 0.0,
                    InitialKind::Constant => 1.0,
                    InitialKind::Bump => 4.0 * x * (length - x) / (length * length),
                    InitialKind::Sine => (std::f64::consts::PI * x / length).sin(),
                },
                MeshConfig::Strip { .. } => {
                    let eta = y / mesh.fvals[n % mesh.nx];
                    match cfg.initial {
                        InitialKind::Zero => 0.0,
                        InitialKind::Constant => 1.0 - eta,
                        InitialKind::Bump => (1.0 - eta) * (1.0 + 0.5 * x.cos()),
                        InitialKind::Sine => (1.0 - eta) * (1.0 + x.sin()),
                    }
                }
            };
            let boundary_pinned = match cfg.bc {
                BcKind::Dirichlet => mesh.tag(n).is_some(),
                BcKind::Neumann => false,
                BcKind::Mixed => mesh.tag(n) == Some(BoundaryTag::GammaF),
            };
            if boundary_pinned {
                base
            } else {
                base + value * shape
            }
        })
        .collect();
    op.matched_state(u)
}

fn forcing_of(cfg: &Config) -> Forcing {
    match cfg.forcing {
        ForcingKind::Zero => Forcing::Zero,
        ForcingKind::Logistic => Forcing::Reaction(Reaction::Logistic),
        ForcingKind::Sine => Forcing::Reaction(Reaction::Sine),
        ForcingKind::Quadratic => Forcing::Reaction(Reaction::Quadratic),
        ForcingKind::ConstantSource => Forcing::Source(MacroSource::Constant(cfg.source_value)),
    }
}

pub fn build_gravity_scenario(
    cfg: &Config,
    op: &Arc<CoupledOperator>,
    w0: TwoScaleState,
) -> GravityScenario {
    let mut scn = GravityScenario::new(Arc::clone(op), cfg.rho0, cfg.theta, cfg.dt, cfg.t_end, w0);
    scn.variant = match cfg.variant {
        VariantKind::Unshifted => GravityVariant::Unshifted,
        VariantKind::Shifted => GravityVariant::Shifted,
    };
    scn.convention = match cfg.convention {
        ConventionKind::Coordinate => DerivConvention::Coordinate,
        ConventionKind::Normal => DerivConvention::OutwardNormal,
    };
    scn.source = match cfg.forcing {
        ForcingKind::ConstantSource => Some(MacroSource::Constant(cfg.source_value)),
        _ => None,
    };
    scn.newton_corrections = cfg.newton;
    scn.guard = cfg.guard;
    scn.snapshot_cadence = cfg.cadence;
    scn
}

fn cmd_run(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let op = build_operator(cfg)?;
    let w0 = build_initial_state(cfg, &op);
    if cfg.bc == BcKind::Mixed {
        let scn = build_gravity_scenario(cfg, &op, w0);
        let result = run_gravity(&scn)?;
        let mut file = fs::File::create(out.join("trajectory.csv"))?;
        result.trajectory.write_csv(&mut file)?;
        let mut trace = fs::File::create(out.join("gamma0_trace.csv"))?;
        write_gamma0_csv(&result, &mut trace)?;
        if cfg.cadence > 0 {
            result.trajectory.write_snapshots(&out.join("snapshots"))?;
        }
    } else {
        let mut scn = Scenario::new(op, cfg.theta, cfg.dt, cfg.t_end, w0);
        scn.forcing = forcing_of(cfg);
        scn.guard = cfg.guard;
        scn.snapshot_cadence = cfg.cadence;
        let traj = run(&scn)?;
        let mut file = fs::File::create(out.join("trajectory.csv"))?;
        traj.write_csv(&mut file)?;
        if cfg.cadence > 0 {
            traj.write_snapshots(&out.join("snapshots"))?;
        }
    }
    Ok(())
}

fn cmd_spectrum(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let op = build_operator(cfg)?;
    let report = spectral_bound(&op)?;
    let mut file = fs::File::create(out.join("spectrum.txt"))?;
    writeln!(file, "sigma = {:.17e}", report.sigma)?;
    for (k, v) in report.others.iter().enumerate() {
        writeln!(file, "eig_{} = {:.17e}", k + 2, v)?;
    }
    writeln!(file, "symmetry_defect = {:.17e}", report.symmetry_defect)?;
    writeln!(file, "iterations = {}", report.iterations)?;
    writeln!(file, "tolerance = {:.1e}", report.tolerance)?;
    if report.sigma <= 0.0 {
        return Err(CliError::InvariantViolated(format!(
            "spectral bound is not positive: sigma = {}",
            report.sigma
        )));
    }
    if report.symmetry_defect > 1e-10 {
        return Err(CliError::InvariantViolated(format!(
            "symmetry defect {} exceeds 1e-10",
            report.symmetry_defect
        )));
    }
    Ok(())
}

fn cmd_sector(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let op = build_operator(cfg)?;
    let report = spectral_bound(&op)?;
    let probe = sector_probe(&op, &cfg.angles, &cfg.radii)?;
    let mut file = fs::File::create(out.join("sector.csv"))?;
    writeln!(file, "re,im,norm,norm_times_radius,warned")?;
    for s in &probe.samples {
        let radius = (s.re * s.re + s.im * s.im).sqrt();
        writeln!(
            file,
            "{:.16e},{:.16e},{:.16e},{:.16e},{}",
            s.re,
            s.im,
            s.norm,
            s.norm * radius,
            s.warned
        )?;
    }
    // self-adjoint identity on the real axis
    for s in &probe.samples {
        if s.im == 0.0 && s.re > 0.0 && !s.warned {
            let expected = 1.0 / (s.re + report.sigma);
            if (s.norm - expected).abs() > 1e-8 * s.norm.abs().max(1e-300) {
                return Err(CliError::InvariantViolated(format!(
                    "resolvent norm at lambda = {} is {}, expected {}",
                    s.re, s.norm, expected
                )));
            }
        }
    }
    println!("sector bound M = {:.6} (omega = {})", probe.m_bound, probe.omega);
    Ok(())
}

fn cmd_converge(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let case = match cfg.case {
        CaseKind::CellQuadratic => ManufacturedCase::CellQuadratic,
        CaseKind::CellCosine => ManufacturedCase::CellCosine,
        CaseKind::CoupledSteady => ManufacturedCase::CoupledSteady,
    };
    let report = mms_convergence(case, &cfg.levels)?;
    let mut file = fs::File::create(out.join("convergence.csv"))?;
    writeln!(file, "h,error,order")?;
    for i in 0..report.hs.len() {
        let order = if i == 0 {
            String::new()
        } else {
            format!("{:.16e}", report.orders[i - 1])
        };
        writeln!(file, "{:.16e},{:.16e},{order}", report.hs[i], report.errors[i])?;
    }
    Ok(())
}

fn cmd_steady(cfg: &Config, out: &Path) -> Result<(), CliError> {
    if cfg.bc != BcKind::Mixed {
        return Err(CliError::Config(
            "steady solves need physics.bc = mixed".into(),
        ));
    }
    let op = build_operator(cfg)?;
    let w0 = build_initial_state(cfg, &op);
    let scn = build_gravity_scenario(cfg, &op, w0);
    let (state, info) = steady_newton(&scn)?;
    let mut file = fs::File::create(out.join("steady.txt"))?;
    writeln!(file, "# residual = {:.17e}", info.residual)?;
    writeln!(file, "# iterations = {}", info.iterations)?;
    writeln!(file, "# macro {}", state.u.len())?;
    for v in &state.u {
        writeln!(file, "{v:.17e}")?;
    }
    writeln!(file, "# cells {} {}", state.cells.len(), state.cells[0].len())?;
    for c in &state.cells {
        let line: Vec<String> = c.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(file, "{}", line.join(" "))?;
    }
    println!(
        "steady solve: {} Newton iterations, residual {:.3e}",
        info.iterations, info.residual
    );
    Ok(())
}

/// Parses the configuration file, writes the resolved-config record, and
/// runs the subcommand. The optional thread count bounds the worker pool
/// (0 or absent: library default).
pub fn run_command(
    cmd: Command,
    config_path: &Path,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = crate::parse_config(&text)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("resolved-config"), resolved_text(&cfg))?;
    let dispatch = || -> Result<(), CliError> {
        match cmd {
            Command::Run => cmd_run(&cfg, out_dir),
            Command::Spectrum => cmd_spectrum(&cfg, out_dir),
            Command::Sector => cmd_sector(&cfg, out_dir),
            Command::Converge => cmd_converge(&cfg, out_dir),
            Command::Steady => cmd_steady(&cfg, out_dir),
        }
    };
    match threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
            pool.install(dispatch)
        }
        _ => dispatch(),
    }
}
