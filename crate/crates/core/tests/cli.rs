use std::fs;
use std::process::{Command, Output};

fn aoi_sched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoi-sched"))
        .args(args)
        .output()
        .unwrap()
}

const SMALL: [&str; 8] = [
    "--frame-K",
    "2",
    "--bound-N",
    "40",
    "--horizon",
    "4000",
    "--warmup",
    "200",
];

fn with_small<'a>(sub: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![sub];
    v.extend(SMALL);
    v.extend(extra);
    v
}

#[test]
fn malformed_input_exits_with_two() {
    for args in [
        vec!["tradeoff", "--emax", "abc"],
        vec!["tradeoff", "--emax", "1.5"],
        vec!["solve", "--frame-K", "0"],
        vec!["solve", "--p11", "0.2", "--p01", "0.5"],
        vec!["solve", "--case", "sideways"],
        vec!["solve", "--no-such-flag"],
        vec!["frobnicate"],
    ] {
        let out = aoi_sched(&args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let args = with_small("tradeoff", &["--emax", "0.2,0.4", "--seed", "7"]);
    let a = aoi_sched(&args);
    let b = aoi_sched(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let other = aoi_sched(&with_small(
        "tradeoff",
        &["--emax", "0.2,0.4", "--seed", "8"],
    ));
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn csv_has_header_lf_and_provenance_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    let mut args = with_small(
        "greedy-compare",
        &["--emax", "0.3", "--seed", "11", "--out"],
    );
    let p = path.to_str().unwrap();
    args.push(p);
    let out = aoi_sched(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in [
        "frame_k",
        "p11",
        "p01",
        "emax",
        "bound_n",
        "seed",
        "generator",
    ] {
        assert!(header.contains(&col), "missing {col} in {header:?}");
    }
    let seed = header.iter().position(|c| *c == "seed").unwrap();
    let generator = header.iter().position(|c| *c == "generator").unwrap();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty());
    for r in &rows {
        assert_eq!(r.len(), header.len());
        assert_eq!(r[seed], "11");
        assert_eq!(r[generator], "ChaCha8Rng");
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(
        &cfg,
        "# small solve\nframe_k = 2\nbound_n = 40\nemax = 0.4\nseed = 5\ncase = delayed_sensing\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();

    let from_file = aoi_sched(&["solve", "--config", c]);
    assert!(
        from_file.status.success(),
        "{}",
        String::from_utf8_lossy(&from_file.stderr)
    );
    let text = String::from_utf8(from_file.stdout).unwrap();
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.starts_with("delayed_sensing,2,") && l.contains(",0.4,40,")));

    let overridden = aoi_sched(&["solve", "--config", c, "--emax", "0.25"]);
    let text = String::from_utf8(overridden.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",0.25,40,")));

    fs::write(&cfg, "frame_k 2\n").unwrap();
    assert_eq!(aoi_sched(&["solve", "--config", c]).status.code(), Some(2));
    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(aoi_sched(&["solve", "--config", c]).status.code(), Some(2));
}

#[test]
fn every_subcommand_runs() {
    for (sub, extra) in [
        ("tradeoff", vec!["--emax", "0.3"]),
        ("framelength", vec!["--frame-K", "2,3", "--emax", "0.3"]),
        ("solve", vec!["--emax", "0.3", "--case", "both"]),
    ] {
        let mut args = vec![
            sub,
            "--bound-N",
            "40",
            "--horizon",
            "3000",
            "--warmup",
            "100",
        ];
        args.extend(extra);
        let out = aoi_sched(&args);
        assert!(
            out.status.success(),
            "{sub}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8(out.stdout).unwrap().lines().count() > 1);
    }
}

#[test]
fn property_suite_reports_through_the_exit_code() {
    let base = [
        "properties",
        "--bound-N",
        "20",
        "--horizon",
        "5000",
        "--seed",
        "3",
    ];
    let ok = aoi_sched(&base);
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")));

    let mut args = base.to_vec();
    args.push("--inject-bug");
    let bad = aoi_sched(&args);
    assert_eq!(bad.status.code(), Some(4));
    let text = String::from_utf8(bad.stdout).unwrap();
    assert!(text
        .lines()
        .any(|l| l.starts_with("threshold_equivalence") && l.contains(",false,")));
}
