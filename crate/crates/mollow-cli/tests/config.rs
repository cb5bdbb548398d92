use mollow_cli::config::{AxisKind, Protocol, RunConfig};
use mollow_cli::CliError;

const BASE: &str = r#"
protocol = "linewidth_sweep"
seed = 11

[params]
delta_c = 42.0
delta_x = 0.0
g = 15.3
kappa = 36.0
gamma = 0.16
gamma_d = 1.0
gamma_ph_ads = 0.19
gamma_ph_asp = 0.28
drive_j = 0.0
drive_target = "cavity"
fock_dim = 16

[sweep]
axis = "drive"
values = [2.0, 4.0, 6.0]
"#;

fn expect_config_err(text: &str) -> String {
    match RunConfig::from_toml_str(text) {
        Err(CliError::Config(msg)) => msg,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn parses_a_complete_config() {
    let cfg = RunConfig::from_toml_str(BASE).unwrap();
    assert_eq!(cfg.protocol, Protocol::LinewidthSweep);
    assert_eq!(cfg.seed, Some(11));
    assert_eq!(cfg.sweep.axis, AxisKind::Drive);
    assert_eq!(cfg.sweep.resolve().unwrap(), vec![2.0, 4.0, 6.0]);
    let p = cfg.params.to_system().unwrap();
    assert_eq!(p.delta_cx(), 42.0);
    assert_eq!(p.fock_dim, 16);
}

#[test]
fn toml_roundtrip_preserves_the_config() {
    let cfg = RunConfig::from_toml_str(BASE).unwrap();
    let again = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
    assert_eq!(again.protocol, cfg.protocol);
    assert_eq!(again.sweep.resolve().unwrap(), cfg.sweep.resolve().unwrap());
    assert_eq!(again.params.g, cfg.params.g);
    assert_eq!(again.seed, cfg.seed);
}

#[test]
fn unknown_param_key_is_rejected() {
    let text = BASE.replace("gamma_d = 1.0", "gamma_d = 1.0\ngamme = 0.2");
    let msg = expect_config_err(&text);
    assert!(msg.contains("gamme"), "error should name the bad key: {msg}");
}

#[test]
fn unknown_top_level_key_is_rejected() {
    let text = format!("paralellism = 4\n{BASE}");
    let msg = expect_config_err(&text);
    assert!(msg.contains("paralellism"), "error should name the bad key: {msg}");
}

#[test]
fn sweep_rejects_values_and_range_together() {
    let text = BASE.replace(
        "values = [2.0, 4.0, 6.0]",
        "values = [2.0, 4.0]\nstart = 1.0\nstop = 5.0\npoints = 4",
    );
    let msg = expect_config_err(&text);
    assert!(msg.contains("pick one"), "{msg}");
}

#[test]
fn sweep_range_requires_all_three_fields() {
    let text = BASE.replace("values = [2.0, 4.0, 6.0]", "start = 1.0\nstop = 5.0");
    let msg = expect_config_err(&text);
    assert!(msg.contains("start, stop, points"), "{msg}");
}

#[test]
fn sweep_range_resolves_an_inclusive_grid() {
    let text =
        BASE.replace("values = [2.0, 4.0, 6.0]", "start = 1.0\nstop = 4.0\npoints = 4");
    let cfg = RunConfig::from_toml_str(&text).unwrap();
    assert_eq!(cfg.sweep.resolve().unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
}

#[test]
fn rabi_axis_rejects_nonpositive_targets() {
    let text = BASE
        .replace("axis = \"drive\"", "axis = \"rabi\"")
        .replace("values = [2.0, 4.0, 6.0]", "values = [15.0, 0.0]");
    let msg = expect_config_err(&text);
    assert!(msg.contains("positive"), "{msg}");
}

#[test]
fn negative_rate_fails_validation() {
    let text = BASE.replace("gamma = 0.16", "gamma = -0.16");
    expect_config_err(&text);
}

#[test]
fn inverted_frequency_window_is_rejected() {
    let text = format!("{BASE}\n[grid]\nomega_min = 10.0\nomega_max = -10.0\n");
    let msg = expect_config_err(&text);
    assert!(msg.contains("omega_min"), "{msg}");
}

#[test]
fn nonpositive_grid_step_is_rejected() {
    let text = format!("{BASE}\n[grid]\nomega_step = 0.0\n");
    let msg = expect_config_err(&text);
    assert!(msg.contains("omega_step"), "{msg}");
}

#[test]
fn grid_overrides_flow_into_options() {
    let text = format!("{BASE}\n[grid]\nt_max = 3.4\nomega_step = 0.15\n");
    let cfg = RunConfig::from_toml_str(&text).unwrap();
    let g = cfg.grid_options();
    assert_eq!(g.t_max, Some(3.4));
    assert_eq!(g.omega_step, Some(0.15));
    assert_eq!(g.omega_min, None);
}
