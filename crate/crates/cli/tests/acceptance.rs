//! Acceptance suite: one test per verification criterion, each printing a
//! pass/fail line. Tolerances are pinned in the assertions.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use twoscale::analysis::{decay_fit, symmetry_defect};
use twoscale::cellmap::{eval_metric, CellMap, Coefficient, MapFamily};
use twoscale::geometry::{
    build_cell_mesh, build_interval_mesh, build_strip_mesh, BoundaryTag, CellMode, StripProfile,
};
use twoscale::gravity::{step_gravity, GravityScenario, GravityVariant};
use twoscale::operators::{
    CoupledOperator, CouplingMode, MacroBcKind, SourcePair, TwoScaleState,
};
use twoscale::solver::{apply_resolvent, run, Forcing, Reaction, Scenario, ThetaStepper};
use twoscale_cli::{build_operator, parse_config, run_command, Command};

fn report(number: usize, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {number:2} ({name}): {verdict} — {detail}");
    assert!(ok, "criterion {number} ({name}) failed: {detail}");
}

fn work_dir(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn read_csv_columns(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for line in lines {
        for (k, field) in line.split(',').enumerate() {
            let v = if field.is_empty() {
                f64::NAN
            } else {
                field.parse::<f64>().unwrap()
            };
            cols[k].push(v);
        }
    }
    (header, cols)
}

/// Criterion 1: the mass-weighted coupled operator is symmetric to 1e-10
/// for the three catalog map families on a 17 x 17 mesh.
#[test]
fn criterion_01_self_adjointness() {
    let mesh = Arc::new(
        build_interval_mesh(
            std::f64::consts::PI,
            17,
            (BoundaryTag::Dirichlet, BoundaryTag::Dirichlet),
        )
        .unwrap(),
    );
    let cell = Arc::new(build_cell_mesh(1, CellMode::Interval, 17).unwrap());
    let families: Vec<(&str, MapFamily)> = vec![
        ("identity", MapFamily::Identity),
        (
            "scaled-ball 1+0.5 sin x",
            MapFamily::ScaledBall {
                c: Coefficient::Sinusoid {
                    offset: 1.0,
                    amp: 0.5,
                },
            },
        ),
        (
            "general-1d y + 0.1 x y",
            MapFamily::General1d {
                alpha: Coefficient::Affine {
                    offset: 1.0,
                    slope: 0.1,
                },
                beta: Coefficient::Constant(0.0),
            },
        ),
    ];
    let mut worst = 0.0f64;
    for (label, family) in families {
        let map = CellMap::build(family, 1, &mesh).unwrap();
        let op = CoupledOperator::build(
            &mesh,
            &cell,
            &map,
            MacroBcKind::Dirichlet,
            CouplingMode::WithExchange,
        )
        .unwrap();
        let defect = symmetry_defect(&op);
        assert!(defect <= 1e-10, "family {label}: defect {defect:e}");
        worst = worst.max(defect);
    }
    report(
        1,
        "self-adjointness",
        worst <= 1e-10,
        &format!("max symmetry defect {worst:.3e} over three map families"),
    );
}

/// Criterion 2: positive spectral bound from the spectrum command; a
/// source-free Dirichlet run decays at that rate to within 5%.
#[test]
fn criterion_02_coercivity_and_decay() {
    let dir = work_dir("criterion2");
    let config_text = "\
[scenario]
name = decay

[mesh]
kind = interval
length = 1.0
nodes = 33

[cellmap]
family = scaled-ball
nodes = 17
c = sinusoid
c_a = 1.0
c_b = 0.4

[physics]
bc = dirichlet
coupling = exchange
";
    let cfg_path = dir.join("decay.cfg");
    fs::write(&cfg_path, config_text).unwrap();
    run_command(Command::Spectrum, &cfg_path, &dir, Some(1)).unwrap();
    let spectrum = fs::read_to_string(dir.join("spectrum.txt")).unwrap();
    let sigma: f64 = spectrum
        .lines()
        .find_map(|l| l.strip_prefix("sigma = "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(sigma > 0.0);

    let cfg = parse_config(config_text).unwrap();
    let op = build_operator(&cfg).unwrap();
    let u0: Vec<f64> = (0..op.n_nodes())
        .map(|i| {
            let x = op.mesh().xs[i];
            if op.mesh().is_dirichlet(i) {
                0.0
            } else {
                4.0 * x * (1.0 - x)
            }
        })
        .collect();
    let w0 = op.matched_state(u0);
    let scn = Scenario::new(Arc::clone(&op), 0.5, 0.01 / sigma, 5.0 / sigma, w0);
    let traj = run(&scn).unwrap();
    let fit = decay_fit(&traj, None).unwrap();
    let rel = (fit.rate - sigma).abs() / sigma;
    report(
        2,
        "coercivity and decay",
        sigma > 0.0 && rel <= 0.05,
        &format!("sigma = {sigma:.6}, fitted rate = {:.6} ({:.2}% off)", fit.rate, 100.0 * rel),
    );
}

/// Criterion 3: a 1000-step trapezoidal no-flux run with a nontrivial metric
/// keeps the total material within 1e-10 relative.
#[test]
fn criterion_03_mass_conservation() {
    let dir = work_dir("criterion3");
    let config_text = "\
[scenario]
name = conservation

[mesh]
kind = interval
length = 6.283185307179586
nodes = 33

[cellmap]
family = scaled-ball
nodes = 17
c = sinusoid
c_a = 1.0
c_b = 0.5

[physics]
bc = neumann
coupling = exchange

[time]
theta = 0.5
dt = 0.005
t_end = 5.0

[initial]
profile = bump
value = 1.0
";
    let cfg_path = dir.join("conservation.cfg");
    fs::write(&cfg_path, config_text).unwrap();
    run_command(Command::Run, &cfg_path, &dir, Some(1)).unwrap();
    let (header, cols) = read_csv_columns(&dir.join("trajectory.csv"));
    let mass_idx = header.iter().position(|h| h == "mass_s").unwrap();
    let mass = &cols[mass_idx];
    assert_eq!(mass.len(), 1001, "expected 1000 steps plus the initial row");
    let s0 = mass[0];
    let drift = mass
        .iter()
        .map(|s| (s - s0).abs() / s0.abs())
        .fold(0.0, f64::max);
    report(
        3,
        "mass conservation",
        drift <= 1e-10,
        &format!("relative drift {drift:.3e} over 1000 steps"),
    );
}

/// Criterion 4: per node and per backward-Euler step, dt times the exchange
/// flux equals the weighted interior cell-mass decrement to 1e-11.
#[test]
fn criterion_04_exchange_flux_identity() {
    let mesh = Arc::new(
        build_interval_mesh(1.0, 17, (BoundaryTag::Dirichlet, BoundaryTag::Dirichlet)).unwrap(),
    );
    let cell = Arc::new(build_cell_mesh(1, CellMode::Interval, 17).unwrap());
    let map = CellMap::build(
        MapFamily::ScaledBall {
            c: Coefficient::Sinusoid {
                offset: 1.0,
                amp: 0.5,
            },
        },
        1,
        &mesh,
    )
    .unwrap();
    let op = Arc::new(
        CoupledOperator::build(&mesh, &cell, &map, MacroBcKind::Dirichlet, CouplingMode::WithExchange)
            .unwrap(),
    );
    let u0: Vec<f64> = (0..op.n_nodes())
        .map(|i| {
            let x = op.mesh().xs[i];
            if op.mesh().is_dirichlet(i) {
                0.0
            } else {
                4.0 * x * (1.0 - x)
            }
        })
        .collect();
    let mut w = op.matched_state(u0);
    for (node, c) in w.cells.iter_mut().enumerate() {
        for (k, v) in c.iter_mut().enumerate() {
            *v += 0.2 * ((node + k) as f64 * 0.37).sin();
        }
    }
    let dt = 0.02;
    let stepper = ThetaStepper::new(&op, 1.0, dt, None).unwrap();
    let mut worst = 0.0f64;
    for step in 0..5 {
        let w_next = stepper.step(&w, step as f64 * dt, &Forcing::Zero).unwrap();
        for node in 0..op.n_nodes() {
            let cop = &op.cells[node];
            let lhs = dt * op.node_exchange_flux(&w_next, node);
            let rhs = cop.interior_mass_of(&op.cell_full(&w, node))
                - cop.interior_mass_of(&op.cell_full(&w_next, node));
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
        }
        w = w_next;
    }
    report(
        4,
        "exchange-flux identity",
        worst <= 1e-11,
        &format!("max deviation {worst:.3e} per node per step"),
    );
}

/// Criterion 5: the two-stage resolvent equals a monolithic dense solve of
/// the same block system to 1e-11 for shifts 0, 1 and 10.
#[test]
fn criterion_05_resolvent_structure() {
    let n = 5;
    let m = 5;
    let mesh = Arc::new(
        build_interval_mesh(1.0, n, (BoundaryTag::Dirichlet, BoundaryTag::Dirichlet)).unwrap(),
    );
    let cell = Arc::new(build_cell_mesh(1, CellMode::Interval, m).unwrap());
    let map = CellMap::build(
        MapFamily::General1d {
            alpha: Coefficient::Affine {
                offset: 1.0,
                slope: 0.2,
            },
            beta: Coefficient::Constant(0.1),
        },
        1,
        &mesh,
    )
    .unwrap();
    let op = Arc::new(
        CoupledOperator::build(&mesh, &cell, &map, MacroBcKind::Dirichlet, CouplingMode::Plain)
            .unwrap(),
    );

    // independent dense assembly of the pointwise block system
    let h = mesh.hx;
    let hc = cell.h;
    let wmac: Vec<f64> = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect();
    let unknowns: Vec<usize> = (1..n - 1).collect();
    let n_mac = unknowns.len();
    let n_int = m - 2;
    let dim = n_mac + n * n_int;
    let cell_flat = |node: usize, loc: usize| n_mac + node * n_int + loc;

    let mut worst = 0.0f64;
    for lambda in [0.0, 1.0, 10.0] {
        let mut a = vec![vec![0.0; dim]; dim];
        let mut rhs_dense = vec![0.0; dim];
        // macro rows: lambda W u + K_mac u = W f
        for (s, &i) in unknowns.iter().enumerate() {
            a[s][s] += lambda * wmac[i] + 2.0 / h;
            for (t, &j) in unknowns.iter().enumerate() {
                if j + 1 == i || j == i + 1 {
                    a[s][t] -= 1.0 / h;
                }
            }
        }
        // cell rows: W [(lambda M + K_int) V + b u] = W M g
        for node in 0..n {
            let volw = |k: usize| if k == 0 || k == m - 1 { 0.5 * hc } else { hc };
            let edge = |k: usize| {
                let ymid = 0.5 * (cell.nodes[k] + cell.nodes[k + 1]);
                let md = eval_metric(&map, node, ymid).unwrap();
                md.sqrt_det * md.g_inv / hc
            };
            for loc in 0..n_int {
                let kcell = loc + 1;
                let mk = eval_metric(&map, node, cell.nodes[kcell]).unwrap().sqrt_det
                    * volw(kcell);
                let w = wmac[node];
                let r = cell_flat(node, loc);
                a[r][r] += w * (lambda * mk + edge(kcell - 1) + edge(kcell));
                if loc > 0 {
                    a[r][cell_flat(node, loc - 1)] -= w * edge(kcell - 1);
                }
                if loc + 1 < n_int {
                    a[r][cell_flat(node, loc + 1)] -= w * edge(kcell);
                }
                if let Some(s) = unknowns.iter().position(|&u| u == node) {
                    if kcell == 1 {
                        a[r][s] -= w * edge(0);
                    }
                    if kcell == m - 2 {
                        a[r][s] -= w * edge(m - 2);
                    }
                }
            }
        }
        // right-hand side (f, g)
        let f: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.3).collect();
        let g: Vec<Vec<f64>> = (0..n)
            .map(|node| {
                (0..m)
                    .map(|k| ((node + 1) as f64 * 0.2 + k as f64 * 0.11).cos())
                    .collect()
            })
            .collect();
        for (s, &i) in unknowns.iter().enumerate() {
            rhs_dense[s] = wmac[i] * f[i];
        }
        for node in 0..n {
            let volw = |k: usize| if k == 0 || k == m - 1 { 0.5 * hc } else { hc };
            for loc in 0..n_int {
                let kcell = loc + 1;
                let mk = eval_metric(&map, node, cell.nodes[kcell]).unwrap().sqrt_det
                    * volw(kcell);
                rhs_dense[cell_flat(node, loc)] = wmac[node] * mk * g[node][kcell];
            }
        }
        // dense Gauss solve
        let x = {
            let mut aa = a;
            let mut bb = rhs_dense;
            for col in 0..dim {
                let mut p = col;
                for r in col + 1..dim {
                    if aa[r][col].abs() > aa[p][col].abs() {
                        p = r;
                    }
                }
                aa.swap(col, p);
                bb.swap(col, p);
                let piv = aa[col][col];
                for r in col + 1..dim {
                    let fr = aa[r][col] / piv;
                    if fr != 0.0 {
                        for c in col..dim {
                            aa[r][c] -= fr * aa[col][c];
                        }
                        bb[r] -= fr * bb[col];
                    }
                }
            }
            for r in (0..dim).rev() {
                let mut acc = bb[r];
                for c in r + 1..dim {
                    acc -= aa[r][c] * bb[c];
                }
                bb[r] = acc / aa[r][r];
            }
            bb
        };

        let rhs = SourcePair { f, g };
        let w = apply_resolvent(&op, lambda, &rhs).unwrap();
        let z = op.reduce(&w);
        for i in 0..dim {
            let got = op.get_flat(&z, i);
            worst = worst.max((got - x[i]).abs() / x[i].abs().max(1.0));
        }
    }
    report(
        5,
        "resolvent structure",
        worst <= 1e-11,
        &format!("max deviation {worst:.3e} across shifts 0, 1, 10"),
    );
}

/// Criterion 6: second-order spatial convergence of the cell operator with
/// a non-constant metric and of the coupled steady solve.
#[test]
fn criterion_06_mms_convergence() {
    let dir = work_dir("criterion6");
    let mut all_orders = Vec::new();
    for (name, case, levels) in [
        ("cell", "cell-cosine", "17,33,65,129"),
        ("coupled", "coupled-steady", "9,17,33,65"),
    ] {
        let cfg_path = dir.join(format!("{name}.cfg"));
        fs::write(
            &cfg_path,
            format!("[analysis]\ncase = {case}\nlevels = {levels}\n"),
        )
        .unwrap();
        let out = dir.join(name);
        run_command(Command::Converge, &cfg_path, &out, Some(1)).unwrap();
        let (header, cols) = read_csv_columns(&out.join("convergence.csv"));
        let order_idx = header.iter().position(|h| h == "order").unwrap();
        for o in cols[order_idx].iter().skip(1) {
            assert!(
                (1.9..=2.1).contains(o),
                "{name}: observed order {o} outside 2.0 +- 0.1"
            );
            all_orders.push(*o);
        }
    }
    let detail: Vec<String> = all_orders.iter().map(|o| format!("{o:.3}")).collect();
    report(
        6,
        "manufactured-solution convergence",
        true,
        &format!("observed orders {}", detail.join(", ")),
    );
}

/// Criterion 7: the steady gravity solve on the flat strip converges in at
/// most 10 Newton iterations to the closed-form bottom value.
#[test]
fn criterion_07_gravity_steady_state() {
    let dir = work_dir("criterion7");
    let config_text = "\
[mesh]
kind = strip
nx = 8
ny = 9
profile = constant
profile_height = 1.0

[cellmap]
family = identity
nodes = 9

[physics]
bc = mixed
rho0 = 0.2
";
    let cfg_path = dir.join("steady.cfg");
    fs::write(&cfg_path, config_text).unwrap();
    run_command(Command::Steady, &cfg_path, &dir, Some(1)).unwrap();
    let text = fs::read_to_string(dir.join("steady.txt")).unwrap();
    let iterations: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("# iterations = "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    let values: Vec<f64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .take(8) // bottom row of the 8 x 9 strip comes first in node order
        .map(|l| l.trim().parse().unwrap())
        .collect();
    let b = (1.0 - 0.2f64.sqrt()) / 2.0;
    assert!((b - 0.2763932).abs() < 1e-7);
    let worst = values.iter().map(|v| (v - b).abs()).fold(0.0, f64::max);
    report(
        7,
        "gravity steady state",
        iterations <= 10 && worst <= 1e-8,
        &format!("{iterations} Newton iterations, bottom-value error {worst:.3e}"),
    );
}

/// Criterion 8: the original and shifted formulations agree as
/// `u = v + rho0` to 1e-12 at every one of 200 steps.
#[test]
fn criterion_08_shift_equivalence() {
    let profile = StripProfile::Sinusoid {
        mean: 1.0,
        amp: 0.15,
    };
    let mesh = Arc::new(build_strip_mesh(&profile, 8, 6).unwrap());
    let cell = Arc::new(build_cell_mesh(1, CellMode::Interval, 7).unwrap());
    let map = CellMap::build(MapFamily::Identity, 1, &mesh).unwrap();
    let op = Arc::new(
        CoupledOperator::build(&mesh, &cell, &map, MacroBcKind::MixedGamma, CouplingMode::WithExchange)
            .unwrap(),
    );
    let rho0 = 0.2;
    let u0: Vec<f64> = (0..op.n_nodes())
        .map(|n| {
            let (x, y) = mesh.coords(n);
            if mesh.tag(n) == Some(BoundaryTag::GammaF) {
                rho0
            } else {
                rho0 + 0.1 * (x.sin() + 1.5) * (1.0 - y / mesh.fvals[n % mesh.nx])
            }
        })
        .collect();
    let w0_u = op.matched_state(u0.clone());
    let w0_v = op.matched_state(u0.iter().map(|u| u - rho0).collect());

    let mk = |variant: GravityVariant, w0: TwoScaleState| {
        let mut scn = GravityScenario::new(Arc::clone(&op), rho0, 1.0, 0.01, 2.0, w0);
        scn.variant = variant;
        scn
    };
    let scn_u = mk(GravityVariant::Unshifted, w0_u.clone());
    let scn_v = mk(GravityVariant::Shifted, w0_v.clone());
    let mut wu = w0_u;
    let mut wv = w0_v;
    let mut worst = 0.0f64;
    for step in 0..200 {
        let t = step as f64 * 0.01;
        wu = step_gravity(&scn_u, &wu, t).unwrap();
        wv = step_gravity(&scn_v, &wv, t).unwrap();
        for n in 0..op.n_nodes() {
            worst = worst.max((wu.u[n] - (wv.u[n] + rho0)).abs());
        }
        for (cu, cv) in wu.cells.iter().zip(wv.cells.iter()) {
            for (a, b) in cu.iter().zip(cv.iter()) {
                worst = worst.max((a - (b + rho0)).abs());
            }
        }
    }
    report(
        8,
        "shift equivalence",
        worst <= 1e-12,
        &format!("max |u - (v + rho0)| = {worst:.3e} over 200 steps"),
    );
}

/// Criterion 9: trajectories from initial states 1e-3 apart stay inside the
/// Gronwall envelope of the declared reaction Lipschitz constant on [0, 1].
#[test]
fn criterion_09_continuous_dependence() {
    let mesh = Arc::new(
        build_interval_mesh(1.0, 17, (BoundaryTag::Dirichlet, BoundaryTag::Dirichlet)).unwrap(),
    );
    let cell = Arc::new(build_cell_mesh(1, CellMode::Interval, 9).unwrap());
    let map = CellMap::build(
        MapFamily::ScaledBall {
            c: Coefficient::Sinusoid {
                offset: 1.0,
                amp: 0.3,
            },
        },
        1,
        &mesh,
    )
    .unwrap();
    let op = Arc::new(
        CoupledOperator::build(&mesh, &cell, &map, MacroBcKind::Dirichlet, CouplingMode::WithExchange)
            .unwrap(),
    );
    let base: Vec<f64> = (0..op.n_nodes())
        .map(|i| {
            let x = op.mesh().xs[i];
            if op.mesh().is_dirichlet(i) {
                0.0
            } else {
                (std::f64::consts::PI * x).sin()
            }
        })
        .collect();
    let w0 = op.matched_state(base.clone());
    let mut w0b = op.matched_state(
        base.iter()
            .enumerate()
            .map(|(i, v)| {
                let x = op.mesh().xs[i];
                if op.mesh().is_dirichlet(i) {
                    0.0
                } else {
                    v + 1e-3 * 4.0 * x * (1.0 - x)
                }
            })
            .collect(),
    );
    for c in w0b.cells.iter_mut() {
        for v in c.iter_mut() {
            *v += 1e-4;
        }
    }
    let mut d0 = w0b.clone();
    d0.axpy(-1.0, &w0);
    let delta0 = op.yg_norm(&d0);
    assert!(delta0 > 1e-4 && delta0 < 3e-3);
    let lip = Reaction::Sine.lipschitz_on(5.0); // 1.0

    let mk = |w: TwoScaleState| {
        let mut s = Scenario::new(Arc::clone(&op), 0.5, 0.01, 1.0, w);
        s.forcing = Forcing::Reaction(Reaction::Sine);
        s.snapshot_cadence = 1;
        s
    };
    let ta = run(&mk(w0)).unwrap();
    let tb = run(&mk(w0b)).unwrap();
    let mut worst_ratio = 0.0f64;
    for ((_, t, wa), (_, _, wb)) in ta.snapshots.iter().zip(tb.snapshots.iter()) {
        let mut d = wb.clone();
        d.axpy(-1.0, wa);
        let dist = op.yg_norm(&d);
        let envelope = (lip * t).exp() * delta0;
        worst_ratio = worst_ratio.max(dist / envelope);
    }
    report(
        9,
        "continuous dependence",
        worst_ratio <= 1.0 + 1e-9,
        &format!("max distance/envelope ratio {worst_ratio:.6}"),
    );
}

/// Criterion 10: repeated runs of the same configuration produce
/// bit-identical trajectories, also with 4 worker threads.
#[test]
fn criterion_10_determinism() {
    let dir = work_dir("criterion10");
    let config_text = "\
[scenario]
name = determinism

[mesh]
kind = interval
length = 6.283185307179586
nodes = 33

[cellmap]
family = general-1d
nodes = 17
alpha = sinusoid
alpha_a = 1.1
alpha_b = 0.2
beta = constant
beta_a = 0.05

[physics]
bc = neumann
coupling = exchange
forcing = logistic

[time]
theta = 0.5
dt = 0.01
t_end = 1.0

[initial]
profile = bump
value = 0.5

[output]
cadence = 25
";
    let cfg_path = dir.join("determinism.cfg");
    fs::write(&cfg_path, config_text).unwrap();
    let outs = [dir.join("a"), dir.join("b"), dir.join("c")];
    for (out, threads) in outs.iter().zip([1usize, 1, 4]) {
        run_command(Command::Run, &cfg_path, out, Some(threads)).unwrap();
    }
    let bytes: Vec<Vec<u8>> = outs
        .iter()
        .map(|o| fs::read(o.join("trajectory.csv")).unwrap())
        .collect();
    let identical_repeat = bytes[0] == bytes[1];
    let identical_threads = bytes[0] == bytes[2];
    let resolved: Vec<Vec<u8>> = outs
        .iter()
        .map(|o| fs::read(o.join("resolved-config")).unwrap())
        .collect();
    let snapshots_equal = {
        let sa = fs::read(outs[0].join("snapshots/step_100.txt")).unwrap();
        let sc = fs::read(outs[2].join("snapshots/step_100.txt")).unwrap();
        sa == sc
    };
    report(
        10,
        "determinism",
        identical_repeat
            && identical_threads
            && resolved[0] == resolved[1]
            && resolved[1] == resolved[2]
            && snapshots_equal,
        &format!(
            "repeat identical: {identical_repeat}, 4-thread identical: {identical_threads}"
        ),
    );
}
