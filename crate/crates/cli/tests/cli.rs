use std::path::Path;
use std::process::{Command, Output};

fn cac(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cac"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A 24-state configuration that solves instantly.
const TINY: &str = "\
mode = cac
C = 2
C_tr = 3
L = 3
A = 2
S = 1
rho = 20
mean_holding = 0.05
frame_ms = 1000
q01 = 0.3
q10 = 0.2
lambda0 = 0.5
lambda1 = 1.5
mean_snr_db = 8
fading = nakagami
nakagami_m = 1
amc_thresholds_db = 3, 9, 14
amc_packets = 1, 2, 3
";

fn tiny(dir: &Path) -> String {
    let path = dir.join("tiny.cfg");
    std::fs::write(&path, TINY).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_rows(text: &str) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(text.as_bytes())
        .records()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn init_writes_a_parseable_reference_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = cac(&["init", "--out", "ref.cfg"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("ref.cfg")).unwrap();
    assert_eq!(cac_core::parse_config(&text).unwrap(), cac_core::SystemConfig::reference_defaults());

    let o = cac(&["init"], dir.path());
    assert_eq!(stdout(&o), text);
}

#[test]
fn analyze_prints_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let o = cac(&["analyze", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("scenario,parameter,value,mode,source,metric_mode,p_block"), "{text}");
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][3], "cac");
    assert_eq!(&rows[0][4], "analytic");
    let p_block: f64 = rows[0][6].parse().unwrap();
    assert!(p_block > 0.0 && p_block < 1.0);
}

#[test]
fn metric_mode_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let o = cac(&["analyze", "--config", &cfg, "--metric-mode", "paper_literal"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(&csv_rows(&stdout(&o))[0][5], "paper_literal");
}

#[test]
fn both_emits_analysis_and_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let args = ["both", "--config", &cfg, "--frames", "20000", "--warmup", "1000", "--batches", "10", "--seed", "3"];
    let o = cac(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[1][4], "sim");
    // Same seed, same bytes (wall time aside).
    let again = csv_rows(&stdout(&cac(&args, dir.path())));
    assert_eq!(rows[1].iter().take(22).collect::<Vec<_>>(), again[1].iter().take(22).collect::<Vec<_>>());
}

#[test]
fn sweep_writes_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let o = cac(&["sweep", "--config", &cfg, "--sweep", "rho=10:10:40", "--out", "rho.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&std::fs::read_to_string(dir.path().join("rho.csv")).unwrap());
    assert_eq!(rows.len(), 8);
    let values: Vec<&str> = rows.iter().map(|r| &r[2]).collect();
    assert_eq!(values, ["10.0", "10.0", "20.0", "20.0", "30.0", "30.0", "40.0", "40.0"]);
    let script = std::fs::read_to_string(dir.path().join("rho.gp")).unwrap();
    assert!(script.contains("rho.csv"));
}

#[test]
fn dump_chain_writes_matrix_and_distribution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let o = cac(&["analyze", "--config", &cfg, "--dump-chain", "p.txt", "--out", "m.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("p.txt")).unwrap();
    let triplets = cac_core::chain::read_triplets(text.as_bytes()).unwrap();
    let mut sums = [0.0f64; 24];
    for (r, _, v) in triplets {
        sums[r] += v;
    }
    assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-12));
    let pi = std::fs::read_to_string(dir.path().join("p.txt.pi")).unwrap();
    assert_eq!(pi.lines().filter(|l| !l.starts_with('#')).count(), 24);
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    std::fs::write(dir.path().join("empty.cfg"), "").unwrap();
    std::fs::write(dir.path().join("neg.cfg"), TINY.replace("L = 3", "L = -1")).unwrap();
    let cases: [&[&str]; 6] = [
        &["analyze", "--config", "empty.cfg"],
        &["analyze", "--config", "neg.cfg"],
        &["analyze", "--config", "missing.cfg"],
        &["sweep", "--config", &cfg, "--sweep", "rho=0:0:1"],
        &["analyze", "--config", &cfg, "--metric-mode", "bogus"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = cac(args, dir.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    let o = cac(&["analyze", "--config", "neg.cfg"], dir.path());
    assert!(stderr(&o).contains("L"), "{}", stderr(&o));
}

#[test]
fn numeric_failures_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{TINY}solver = power\nmax_iterations = 3\n");
    std::fs::write(dir.path().join("slow.cfg"), text).unwrap();
    let o = cac(&["analyze", "--config", "slow.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
