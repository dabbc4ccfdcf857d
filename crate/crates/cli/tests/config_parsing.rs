//! Strict-parser behavior and resolved-config round trips.

use twoscale_cli::{parse_config, resolved_text, BcKind, CliError, MeshConfig};

#[test]
fn minimal_config_gets_defaults() {
    let cfg = parse_config(
        "[mesh]\nkind = interval\nnodes = 33\n\n[physics]\nbc = dirichlet\n",
    )
    .unwrap();
    assert_eq!(cfg.theta, 0.5);
    assert_eq!(cfg.dt, 0.01);
    assert_eq!(cfg.bc, BcKind::Dirichlet);
    assert!(matches!(cfg.mesh, MeshConfig::Interval { nodes: 33, .. }));
    assert_eq!(cfg.guard, 1e6);
    assert_eq!(cfg.newton, 1);
}

#[test]
fn empty_config_is_all_defaults() {
    let cfg = parse_config("").unwrap();
    assert_eq!(cfg.name, "unnamed");
    assert!(matches!(cfg.mesh, MeshConfig::Interval { .. }));
}

#[test]
fn negative_dt_names_the_key() {
    let err = parse_config("[time]\ndt = -1\n").unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("time.dt"), "message was: {msg}");
}

#[test]
fn unknown_key_is_a_hard_error() {
    let err = parse_config("[physics]\nviscosity = 3\n").unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("physics.viscosity"), "message was: {msg}");
}

#[test]
fn unknown_section_rejected() {
    let err = parse_config("[plumbing]\nkey = 1\n").unwrap_err();
    assert!(format!("{err}").contains("plumbing"));
}

#[test]
fn duplicate_key_rejected() {
    let err = parse_config("[time]\ndt = 0.1\ndt = 0.2\n").unwrap_err();
    assert!(format!("{err}").contains("duplicate"));
}

#[test]
fn bad_enum_value_lists_options() {
    let err = parse_config("[physics]\nbc = slip\n").unwrap_err();
    let msg = format!("{err}");
    assert!(msg.contains("physics.bc") && msg.contains("dirichlet"));
}

#[test]
fn theta_range_enforced() {
    assert!(matches!(
        parse_config("[time]\ntheta = 0.25\n"),
        Err(CliError::Config(_))
    ));
}

#[test]
fn mixed_bc_rejects_reactions() {
    let err = parse_config(
        "[mesh]\nkind = strip\n\n[physics]\nbc = mixed\nforcing = quadratic\n",
    )
    .unwrap_err();
    assert!(format!("{err}").contains("physics.forcing"));
}

#[test]
fn resolved_text_round_trips() {
    let cfg = parse_config(
        "[scenario]\nname = demo\n\n[mesh]\nkind = strip\nnx = 12\nny = 7\nprofile = sinusoid\nprofile_mean = 1.0\nprofile_amp = 0.2\n\n[cellmap]\nfamily = scaled-ball\nc = sinusoid\nc_a = 1.0\nc_b = 0.5\n\n[physics]\nbc = mixed\nrho0 = 0.2\n\n[time]\ntheta = 1\ndt = 0.02\n",
    )
    .unwrap();
    let text = resolved_text(&cfg);
    let cfg2 = parse_config(&text).unwrap();
    assert_eq!(cfg, cfg2);
    let text2 = resolved_text(&cfg2);
    assert_eq!(text, text2);
}

#[test]
fn strip_profile_positivity_checked() {
    let err = parse_config(
        "[mesh]\nkind = strip\nprofile = sinusoid\nprofile_mean = 0.5\nprofile_amp = 0.7\n",
    )
    .unwrap_err();
    assert!(format!("{err}").contains("profile"));
}

#[test]
fn comment_lines_are_skipped() {
    let cfg = parse_config("# a comment\n[time]\n# another\ndt = 0.5\n").unwrap();
    assert_eq!(cfg.dt, 0.5);
}
