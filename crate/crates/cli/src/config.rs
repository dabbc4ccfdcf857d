//! Sectioned key-value configuration with strict parsing.
//!
//! Unknown sections or keys are hard errors, every field has an explicit
//! default, and the fully resolved configuration can be re-serialized as the
//! experiment record.

use std::collections::BTreeMap;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshConfig {
    Interval { length: f64, nodes: usize },
    Strip { nx: usize, ny: usize, profile: ProfileConfig },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileConfig {
    Constant { height: f64 },
    Sinusoid { mean: f64, amp: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientConfig {
    pub kind: CoefficientKind,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    Constant,
    Affine,
    Sinusoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMapConfig {
    pub family: FamilyKind,
    pub dim: usize,
    pub mode: CellModeKind,
    pub nodes: usize,
    pub c: CoefficientConfig,
    pub alpha: CoefficientConfig,
    pub beta: CoefficientConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Identity,
    ScaledBall,
    General1d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellModeKind {
    Interval,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Neumann,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    Plain,
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingKind {
    Zero,
    Logistic,
    Sine,
    Quadratic,
    ConstantSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantKind {
    Unshifted,
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConventionKind {
    Coordinate,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialKind {
    Zero,
    Constant,
    Bump,
    Sine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    CellQuadratic,
    CellCosine,
    CoupledSteady,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub name: String,
    pub mesh: MeshConfig,
    pub cellmap: CellMapConfig,
    pub coupling: CouplingKind,
    pub bc: BcKind,
    pub rho0: f64,
    pub variant: VariantKind,
    pub convention: ConventionKind,
    pub forcing: ForcingKind,
    pub source_value: f64,
    pub theta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub newton: usize,
    pub guard: f64,
    pub initial: InitialKind,
    pub initial_value: f64,
    pub cadence: usize,
    pub case: CaseKind,
    pub levels: Vec<usize>,
    pub angles: Vec<f64>,
    pub radii: Vec<f64>,
}

struct RawConfig {
    values: BTreeMap<(String, String), String>,
}

impl RawConfig {
    fn take(&mut self, section: &str, key: &str) -> Option<String> {
        self.values.remove(&(section.to_string(), key.to_string()))
    }
}

fn bad(path: &str, msg: &str) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

fn parse_f64(raw: Option<String>, path: &str, default: f64) -> Result<f64, CliError> {
    match raw {
        None => Ok(default),
        Some(s) => s
            .parse::<f64>()
            .map_err(|_| bad(path, &format!("expected a number, got `{s}`"))),
    }
}

fn parse_usize(raw: Option<String>, path: &str, default: usize) -> Result<usize, CliError> {
    match raw {
        None => Ok(default),
        Some(s) => s
            .parse::<usize>()
            .map_err(|_| bad(path, &format!("expected a nonnegative integer, got `{s}`"))),
    }
}

fn parse_list_usize(raw: Option<String>, path: &str, default: &[usize]) -> Result<Vec<usize>, CliError> {
    match raw {
        None => Ok(default.to_vec()),
        Some(s) => s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|_| bad(path, &format!("bad list entry `{part}`")))
            })
            .collect(),
    }
}

fn parse_list_f64(raw: Option<String>, path: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
    match raw {
        None => Ok(default.to_vec()),
        Some(s) => s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(path, &format!("bad list entry `{part}`")))
            })
            .collect(),
    }
}

fn parse_choice<T: Copy>(
    raw: Option<String>,
    path: &str,
    table: &[(&str, T)],
    default: T,
) -> Result<T, CliError> {
    match raw {
        None => Ok(default),
        Some(s) => table
            .iter()
            .find(|(name, _)| *name == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let options: Vec<&str> = table.iter().map(|(n, _)| *n).collect();
                bad(path, &format!("unknown value `{s}` (options: {})", options.join(", ")))
            }),
    }
}

fn coefficient(
    raw: &mut RawConfig,
    section: &str,
    prefix: &str,
    default_a: f64,
) -> Result<CoefficientConfig, CliError> {
    let kind = parse_choice(
        raw.take(section, prefix),
        &format!("{section}.{prefix}"),
        &[
            ("constant", CoefficientKind::Constant),
            ("affine", CoefficientKind::Affine),
            ("sinusoid", CoefficientKind::Sinusoid),
        ],
        CoefficientKind::Constant,
    )?;
    let a = parse_f64(
        raw.take(section, &format!("{prefix}_a")),
        &format!("{section}.{prefix}_a"),
        default_a,
    )?;
    let b = parse_f64(
        raw.take(section, &format!("{prefix}_b")),
        &format!("{section}.{prefix}_b"),
        0.0,
    )?;
    Ok(CoefficientConfig { kind, a, b })
}

const SECTIONS: &[&str] = &[
    "scenario", "mesh", "cellmap", "physics", "time", "initial", "output", "analysis",
];

/// Parses the sectioned key-value text into a validated configuration with
/// all defaults injected.
pub fn parse_config(text: &str) -> Result<Config, CliError> {
    let mut values = BTreeMap::new();
    let mut section = String::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| CliError::Config(format!("line {}: malformed section header", lineno + 1)))?
                .trim()
                .to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return Err(CliError::Config(format!("unknown section `{name}`")));
            }
            section = name;
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        if section.is_empty() {
            return Err(CliError::Config(format!(
                "line {}: key outside of any section",
                lineno + 1
            )));
        }
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if values
            .insert((section.clone(), key.clone()), value)
            .is_some()
        {
            return Err(CliError::Config(format!("duplicate key `{section}.{key}`")));
        }
    }
    let mut raw = RawConfig { values };

    let name = raw
        .take("scenario", "name")
        .unwrap_or_else(|| "unnamed".to_string());

    // mesh
    let mesh_kind = parse_choice(
        raw.take("mesh", "kind"),
        "mesh.kind",
        &[("interval", 0usize), ("strip", 1)],
        0,
    )?;
    let mesh = if mesh_kind == 0 {
        let length = parse_f64(raw.take("mesh", "length"), "mesh.length", 1.0)?;
        let nodes = parse_usize(raw.take("mesh", "nodes"), "mesh.nodes", 33)?;
        if length <= 0.0 || !length.is_finite() {
            return Err(bad("mesh.length", "must be positive"));
        }
        if nodes < 3 {
            return Err(bad("mesh.nodes", "must be at least 3"));
        }
        MeshConfig::Interval { length, nodes }
    } else {
        let nx = parse_usize(raw.take("mesh", "nx"), "mesh.nx", 16)?;
        let ny = parse_usize(raw.take("mesh", "ny"), "mesh.ny", 9)?;
        if nx < 4 {
            return Err(bad("mesh.nx", "must be at least 4"));
        }
        if ny < 3 {
            return Err(bad("mesh.ny", "must be at least 3"));
        }
        let pk = parse_choice(
            raw.take("mesh", "profile"),
            "mesh.profile",
            &[("constant", 0usize), ("sinusoid", 1)],
            0,
        )?;
        let profile = if pk == 0 {
            let height = parse_f64(raw.take("mesh", "profile_height"), "mesh.profile_height", 1.0)?;
            if height <= 0.0 {
                return Err(bad("mesh.profile_height", "must be positive"));
            }
            ProfileConfig::Constant { height }
        } else {
            let mean = parse_f64(raw.take("mesh", "profile_mean"), "mesh.profile_mean", 1.0)?;
            let amp = parse_f64(raw.take("mesh", "profile_amp"), "mesh.profile_amp", 0.1)?;
            if mean - amp.abs() <= 0.0 {
                return Err(bad("mesh.profile_amp", "profile must stay positive"));
            }
            ProfileConfig::Sinusoid { mean, amp }
        };
        MeshConfig::Strip { nx, ny, profile }
    };

    // cellmap
    let family = parse_choice(
        raw.take("cellmap", "family"),
        "cellmap.family",
        &[
            ("identity", FamilyKind::Identity),
            ("scaled-ball", FamilyKind::ScaledBall),
            ("general-1d", FamilyKind::General1d),
        ],
        FamilyKind::Identity,
    )?;
    let dim = parse_usize(raw.take("cellmap", "dim"), "cellmap.dim", 1)?;
    if !(1..=3).contains(&dim) {
        return Err(bad("cellmap.dim", "must be 1, 2 or 3"));
    }
    let mode = parse_choice(
        raw.take("cellmap", "mode"),
        "cellmap.mode",
        &[
            ("interval", CellModeKind::Interval),
            ("radial", CellModeKind::Radial),
        ],
        CellModeKind::Interval,
    )?;
    let cell_nodes = parse_usize(raw.take("cellmap", "nodes"), "cellmap.nodes", 17)?;
    if cell_nodes < 3 {
        return Err(bad("cellmap.nodes", "must be at least 3"));
    }
    if mode == CellModeKind::Interval && dim != 1 {
        return Err(bad("cellmap.mode", "interval cells require dim = 1"));
    }
    let c = coefficient(&mut raw, "cellmap", "c", 1.0)?;
    let alpha = coefficient(&mut raw, "cellmap", "alpha", 1.0)?;
    let beta = coefficient(&mut raw, "cellmap", "beta", 0.0)?;

    // physics
    let coupling = parse_choice(
        raw.take("physics", "coupling"),
        "physics.coupling",
        &[("plain", CouplingKind::Plain), ("exchange", CouplingKind::Exchange)],
        CouplingKind::Exchange,
    )?;
    let bc = parse_choice(
        raw.take("physics", "bc"),
        "physics.bc",
        &[
            ("dirichlet", BcKind::Dirichlet),
            ("neumann", BcKind::Neumann),
            ("mixed", BcKind::Mixed),
        ],
        BcKind::Dirichlet,
    )?;
    let rho0 = parse_f64(raw.take("physics", "rho0"), "physics.rho0", 0.0)?;
    if rho0 < 0.0 {
        return Err(bad("physics.rho0", "must be nonnegative"));
    }
    let variant = parse_choice(
        raw.take("physics", "variant"),
        "physics.variant",
        &[
            ("unshifted", VariantKind::Unshifted),
            ("shifted", VariantKind::Shifted),
        ],
        VariantKind::Unshifted,
    )?;
    let convention = parse_choice(
        raw.take("physics", "convention"),
        "physics.convention",
        &[
            ("coordinate", ConventionKind::Coordinate),
            ("normal", ConventionKind::Normal),
        ],
        ConventionKind::Coordinate,
    )?;
    let forcing = parse_choice(
        raw.take("physics", "forcing"),
        "physics.forcing",
        &[
            ("zero", ForcingKind::Zero),
            ("logistic", ForcingKind::Logistic),
            ("sine", ForcingKind::Sine),
            ("quadratic", ForcingKind::Quadratic),
            ("constant-source", ForcingKind::ConstantSource),
        ],
        ForcingKind::Zero,
    )?;
    let source_value = parse_f64(raw.take("physics", "source_value"), "physics.source_value", 0.0)?;
    if bc == BcKind::Mixed
        && matches!(
            forcing,
            ForcingKind::Logistic | ForcingKind::Sine | ForcingKind::Quadratic
        )
    {
        return Err(bad(
            "physics.forcing",
            "reaction terms are not available with the mixed boundary condition",
        ));
    }

    // time
    let theta = parse_f64(raw.take("time", "theta"), "time.theta", 0.5)?;
    if !(0.5..=1.0).contains(&theta) {
        return Err(bad("time.theta", "must lie in [0.5, 1]"));
    }
    let dt = parse_f64(raw.take("time", "dt"), "time.dt", 0.01)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(bad("time.dt", "must be positive"));
    }
    let t_end = parse_f64(raw.take("time", "t_end"), "time.t_end", 1.0)?;
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(bad("time.t_end", "must be positive"));
    }
    let newton = parse_usize(raw.take("time", "newton"), "time.newton", 1)?;
    if newton == 0 {
        return Err(bad("time.newton", "must be at least 1"));
    }
    let guard = parse_f64(raw.take("time", "guard"), "time.guard", 1e6)?;
    if guard <= 0.0 {
        return Err(bad("time.guard", "must be positive"));
    }

    // initial
    let initial = parse_choice(
        raw.take("initial", "profile"),
        "initial.profile",
        &[
            ("zero", InitialKind::Zero),
            ("constant", InitialKind::Constant),
            ("bump", InitialKind::Bump),
            ("sine", InitialKind::Sine),
        ],
        InitialKind::Bump,
    )?;
    let initial_value = parse_f64(raw.take("initial", "value"), "initial.value", 1.0)?;

    // output
    let cadence = parse_usize(raw.take("output", "cadence"), "output.cadence", 0)?;

    // analysis
    let case = parse_choice(
        raw.take("analysis", "case"),
        "analysis.case",
        &[
            ("cell-quadratic", CaseKind::CellQuadratic),
            ("cell-cosine", CaseKind::CellCosine),
            ("coupled-steady", CaseKind::CoupledSteady),
        ],
        CaseKind::CellCosine,
    )?;
    let levels = parse_list_usize(
        raw.take("analysis", "levels"),
        "analysis.levels",
        &[17, 33, 65, 129],
    )?;
    let angles = parse_list_f64(raw.take("analysis", "angles"), "analysis.angles", &[0.0])?;
    let radii = parse_list_f64(
        raw.take("analysis", "radii"),
        "analysis.radii",
        &[1.0, 10.0, 100.0],
    )?;
    if radii.iter().any(|r| *r <= 0.0) {
        return Err(bad("analysis.radii", "must be positive"));
    }

    if let Some(((section, key), _)) = raw.values.iter().next() {
        return Err(CliError::Config(format!("unknown key `{section}.{key}`")));
    }

    Ok(Config {
        name,
        mesh,
        cellmap: CellMapConfig {
            family,
            dim,
            mode,
            nodes: cell_nodes,
            c,
            alpha,
            beta,
        },
        coupling,
        bc,
        rho0,
        variant,
        convention,
        forcing,
        source_value,
        theta,
        dt,
        t_end,
        newton,
        guard,
        initial,
        initial_value,
        cadence,
        case,
        levels,
        angles,
        radii,
    })
}

fn coeff_lines(out: &mut String, prefix: &str, c: &CoefficientConfig) {
    let kind = match c.kind {
        CoefficientKind::Constant => "constant",
        CoefficientKind::Affine => "affine",
        CoefficientKind::Sinusoid => "sinusoid",
    };
    out.push_str(&format!("{prefix} = {kind}\n"));
    out.push_str(&format!("{prefix}_a = {}\n", c.a));
    out.push_str(&format!("{prefix}_b = {}\n", c.b));
}

/// Canonical serialization of the resolved configuration: every key appears
/// with its final value.
pub fn resolved_text(cfg: &Config) -> String {
    let mut s = String::new();
    s.push_str("[scenario]\n");
    s.push_str(&format!("name = {}\n\n", cfg.name));

    s.push_str("[mesh]\n");
    match &cfg.mesh {
        MeshConfig::Interval { length, nodes } => {
            s.push_str("kind = interval\n");
            s.push_str(&format!("length = {length}\n"));
            s.push_str(&format!("nodes = {nodes}\n"));
        }
        MeshConfig::Strip { nx, ny, profile } => {
            s.push_str("kind = strip\n");
            s.push_str(&format!("nx = {nx}\n"));
            s.push_str(&format!("ny = {ny}\n"));
            match profile {
                ProfileConfig::Constant { height } => {
                    s.push_str("profile = constant\n");
                    s.push_str(&format!("profile_height = {height}\n"));
                }
                ProfileConfig::Sinusoid { mean, amp } => {
                    s.push_str("profile = sinusoid\n");
                    s.push_str(&format!("profile_mean = {mean}\n"));
                    s.push_str(&format!("profile_amp = {amp}\n"));
                }
            }
        }
    }
    s.push('\n');

    s.push_str("[cellmap]\n");
    let fam = match cfg.cellmap.family {
        FamilyKind::Identity => "identity",
        FamilyKind::ScaledBall => "scaled-ball",
        FamilyKind::General1d => "general-1d",
    };
    s.push_str(&format!("family = {fam}\n"));
    s.push_str(&format!("dim = {}\n", cfg.cellmap.dim));
    let mode = match cfg.cellmap.mode {
        CellModeKind::Interval => "interval",
        CellModeKind::Radial => "radial",
    };
    s.push_str(&format!("mode = {mode}\n"));
    s.push_str(&format!("nodes = {}\n", cfg.cellmap.nodes));
    coeff_lines(&mut s, "c", &cfg.cellmap.c);
    coeff_lines(&mut s, "alpha", &cfg.cellmap.alpha);
    coeff_lines(&mut s, "beta", &cfg.cellmap.beta);
    s.push('\n');

    s.push_str("[physics]\n");
    s.push_str(&format!(
        "coupling = {}\n",
        match cfg.coupling {
            CouplingKind::Plain => "plain",
            CouplingKind::Exchange => "exchange",
        }
    ));
    s.push_str(&format!(
        "bc = {}\n",
        match cfg.bc {
            BcKind::Dirichlet => "dirichlet",
            BcKind::Neumann => "neumann",
            BcKind::Mixed => "mixed",
        }
    ));
    s.push_str(&format!("rho0 = {}\n", cfg.rho0));
    s.push_str(&format!(
        "variant = {}\n",
        match cfg.variant {
            VariantKind::Unshifted => "unshifted",
            VariantKind::Shifted => "shifted",
        }
    ));
    s.push_str(&format!(
        "convention = {}\n",
        match cfg.convention {
            ConventionKind::Coordinate => "coordinate",
            ConventionKind::Normal => "normal",
        }
    ));
    s.push_str(&format!(
        "forcing = {}\n",
        match cfg.forcing {
            ForcingKind::Zero => "zero",
            ForcingKind::Logistic => "logistic",
            ForcingKind::Sine => "sine",
            ForcingKind::Quadratic => "quadratic",
            ForcingKind::ConstantSource => "constant-source",
        }
    ));
    s.push_str(&format!("source_value = {}\n\n", cfg.source_value));

    s.push_str("[time]\n");
    s.push_str(&format!("theta = {}\n", cfg.theta));
    s.push_str(&format!("dt = {}\n", cfg.dt));
    s.push_str(&format!("t_end = {}\n", cfg.t_end));
    s.push_str(&format!("newton = {}\n", cfg.newton));
    s.push_str(&format!("guard = {}\n\n", cfg.guard));

    s.push_str("[initial]\n");
    s.push_str(&format!(
        "profile = {}\n",
        match cfg.initial {
            InitialKind::Zero => "zero",
            InitialKind::Constant => "constant",
            InitialKind::Bump => "bump",
            InitialKind::Sine => "sine",
        }
    ));
    s.push_str(&format!("value = {}\n\n", cfg.initial_value));

    s.push_str("[output]\n");
    s.push_str(&format!("cadence = {}\n\n", cfg.cadence));

    s.push_str("[analysis]\n");
    s.push_str(&format!(
        "case = {}\n",
        match cfg.case {
            CaseKind::CellQuadratic => "cell-quadratic",
            CaseKind::CellCosine => "cell-cosine",
            CaseKind::CoupledSteady => "coupled-steady",
        }
    ));
    let levels: Vec<String> = cfg.levels.iter().map(|l| l.to_string()).collect();
    s.push_str(&format!("levels = {}\n", levels.join(",")));
    let angles: Vec<String> = cfg.angles.iter().map(|a| a.to_string()).collect();
    s.push_str(&format!("angles = {}\n", angles.join(",")));
    let radii: Vec<String> = cfg.radii.iter().map(|r| r.to_string()).collect();
    s.push_str(&format!("radii = {}\n", radii.join(",")));
    s
}
