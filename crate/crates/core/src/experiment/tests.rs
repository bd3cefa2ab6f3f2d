use super::*;
use crate::error::Error;

const RATIO: &str = r#"
name = "ratio"
mode = "ratio-curve"
[chain]
k = 2
[allocation]
kind = "reserved"
levels = [1, 1]
[grid]
q = [0.5, 0.1, 0.01]
"#;

#[test]
fn ratio_curve_rows() {
    let exp = Experiment::from_toml_str(RATIO).unwrap();
    let table = run_experiment(&exp).unwrap();
    assert_eq!(table.header, "k,p,alloc,policy,q,exact_rate,lower_bound,ratio");
    assert_eq!(table.rows.len(), 3);
    for row in &table.rows {
        let cells: Vec<&str> = row.split(',').collect();
        let exact: f64 = cells[5].parse().unwrap();
        let bound: f64 = cells[6].parse().unwrap();
        let ratio: f64 = cells[7].parse().unwrap();
        assert!((ratio - bound / exact).abs() < 1e-15);
    }
}

#[test]
fn select_i0_row() {
    let text = r#"
name = "i0"
mode = "analytic"
[chain]
[analytic]
quantity = "select-i0"
[grid]
gamma = [1.5]
delta = [0.5]
"#;
    let table = run_experiment(&Experiment::from_toml_str(text).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].split(',').nth(2), Some("2"));
}

#[test]
fn analytic_quantities_run() {
    let base = |quantity: &str, alloc: &str, extra: &str| {
        format!(
            "name = \"a\"\nmode = \"analytic\"\n[chain]\nk = 3\nq = 0.3\n[allocation]\n{alloc}\n[analytic]\nquantity = \"{quantity}\"\n[grid]\n{extra}\n"
        )
    };
    let cases = [
        base("rate-bound", "kind = \"constant\"\nb = 2", ""),
        base("rate-bound", "kind = \"cognitive\"\nb = 2", ""),
        base("cognitive-f", "kind = \"cognitive\"\nb = 2", "i = [1, 2]"),
        base("avg-memory", "kind = \"exponential\"\ngamma = 1.5\ndelta = 0.1", ""),
        base("max-memory", "kind = \"exponential\"\ngamma = 1.5\ni0 = 2", ""),
        base("comm-delay-memory", "kind = \"reserved\"\nlevels = [1, 2, 1]", ""),
        base("end-to-end-delay", "kind = \"constant\"\nb = 1", ""),
        base("queuing-delay", "kind = \"constant\"\nb = 1", "i = [1, 2, 3]"),
    ];
    for text in cases {
        let exp = Experiment::from_toml_str(&text).unwrap();
        let table = run_experiment(&exp).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert!(!table.rows.is_empty());
        let width = table.header.split(',').count();
        assert!(table.rows.iter().all(|r| r.split(',').count() == width));
    }
}

#[test]
fn malformed_config_names_field() {
    let text = RATIO.replace("k = 2", "k = \"two\"");
    match Experiment::from_toml_str(&text) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "chain.k"),
        other => panic!("{other:?}"),
    }
    let text = RATIO.replace("[grid]", "[grid]\nbogus = 1");
    match Experiment::from_toml_str(&text) {
        Err(Error::Config { message, .. }) => assert!(message.contains("bogus")),
        other => panic!("{other:?}"),
    }
    let text = RATIO.replace("levels = [1, 1]", "levels = [1]");
    let exp = Experiment::from_toml_str(&text).unwrap();
    match run_experiment(&exp) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "allocation.levels"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn simulate_needs_single_configuration() {
    let text = r#"
name = "s"
mode = "simulate"
[chain]
k = 1
[allocation]
kind = "reserved"
levels = [1]
[grid]
q = [0.1, 0.2]
[simulation]
horizon_time = 10.0
"#;
    match Experiment::from_toml_str(text) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "grid.q"),
        other => panic!("{other:?}"),
    }
    let sweep = text.replace("\"simulate\"", "\"sweep\"");
    let table = run_experiment(&Experiment::from_toml_str(&sweep).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 2);
}

#[test]
fn sweep_is_reproducible_and_ordered() {
    let text = r#"
name = "sweep"
mode = "sweep"
seed = 5
[chain]
k = 2
[allocation]
kind = "constant"
b = 1
[grid]
q = [0.3, 0.6]
b = [1, 2]
[simulation]
horizon_time = 2000.0
replications = 2
"#;
    let exp = Experiment::from_toml_str(text).unwrap();
    let a = run_experiment(&exp).unwrap();
    let b = run_experiment(&exp).unwrap();
    assert_eq!(a.body(), b.body());
    assert_eq!(a.rows.len(), 8);
    let seeds: Vec<&str> = a.rows.iter().map(|r| r.split(',').nth(7).unwrap()).collect();
    assert_eq!(seeds, ["5:0", "5:1", "5:2", "5:3", "5:4", "5:5", "5:6", "5:7"]);
}

#[test]
fn config_round_trips() {
    let exp = Experiment::from_toml_str(RATIO).unwrap();
    let again = Experiment::from_toml_str(&exp.to_toml()).unwrap();
    assert_eq!(exp, again);
}

#[test]
fn tolerance_parsing() {
    assert_eq!("ci:3".parse::<Tolerance>().unwrap(), Tolerance::Ci(3.0));
    assert_eq!("rel:1e-3".parse::<Tolerance>().unwrap(), Tolerance::Relative(1e-3));
    assert_eq!("abs:0".parse::<Tolerance>().unwrap(), Tolerance::Absolute(0.0));
    assert!("ci".parse::<Tolerance>().is_err());
    assert!("pct:3".parse::<Tolerance>().is_err());
    assert!("rel:-1".parse::<Tolerance>().is_err());
}

#[test]
fn compare_matches_on_shared_keys() {
    let sim = "# meta\nk,p,q,alloc,seed,rate,rate_ci\n1,1,0.2,R:1,0:0,0.134,0.001\n1,1,0.2,R:1,0:1,0.1325,0.001\n";
    let exact = "k,p,q,alloc,rate\n1,1.0000000000000000e0,2.0000000000000001e-1,R:1,1.3333333333333333e-1\n";
    let report = compare_tables(sim, exact, Tolerance::Ci(3.0)).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert!(report.passed());
    let report = compare_tables(sim, exact, Tolerance::Relative(1e-3)).unwrap();
    assert!(!report.passed());
    assert!(matches!(compare_tables("a,b\n1,2\n", exact, Tolerance::Ci(3.0)), Err(Error::Schema(_))));
}
