use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nmor_cli::config::RunConfig;
use nmor_cli::sweep::{run_sweep, summary_csv};
use tempfile::TempDir;

const AEROFOIL: &str = r#"
model = "aerofoil3dof"

[basis]
modes_complex = 2

[simulate]
t_end = 200.0
perturbation = [[1, 0.01]]
"#;

fn nmor(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    if !cfg.exists() {
        fs::write(&cfg, AEROFOIL).unwrap();
    }
    Command::new(env!("CARGO_BIN_EXE_nmor"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn every_verb_writes_its_files() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    for (verb, files) in [
        ("trim", vec!["trim.csv", "trim_summary.txt"]),
        ("eig", vec!["spectrum.csv"]),
        ("build-rom", vec!["rom.nrom"]),
        ("simulate", vec!["fom.csv", "rom.csv", "comparison.csv"]),
    ] {
        let out = nmor(d, &[verb, "--output-dir", "out"]);
        assert_eq!(code(&out), 0, "{verb}: {}", stderr(&out));
        for f in files {
            assert!(d.join("out").join(f).is_file(), "{verb} did not write {f}");
        }
    }
    let out = Command::new(env!("CARGO_BIN_EXE_nmor")).arg("models").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("aerofoil3dof") && text.contains("flexwing"), "{text}");
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let cases: [(&[&str], i32, &str); 5] = [
        (&["trim", "--set", "bogus=1"], 2, "bogus"),
        (&["trim", "--set", "model=\"glider\""], 2, "glider"),
        (&["trim", "--set", "model=\"flexwing\"", "--set", "trim.max_iterations=0"], 3, "converge"),
        (&["eig", "--modes-complex", "40"], 4, "complex"),
        (
            &["simulate", "--order", "1", "--set", "params.U_star=8.0", "--set", "simulate.t_end=4000.0", "--set", "simulate.run=\"rom\""],
            5,
            "diverged",
        ),
    ];
    for (args, expected, needle) in cases {
        let out = nmor(d, &[args, &["--output-dir", "out"]].concat());
        assert_eq!(code(&out), expected, "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{args:?}: {}", stderr(&out));
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_nmor"))
        .args(["trim", "--config", "/nonexistent/run.toml"])
        .output()
        .unwrap();
    assert_eq!(code(&missing), 2);
}

#[test]
fn reruns_produce_identical_csv() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let gust = ["--set", "gust.kind=\"von-karman\"", "--set", "gust.wg_max=0.01", "--set", "gust.length_scale=10.0", "--seed", "7"];
    for dir in ["a", "b"] {
        let out = nmor(d, &[&["simulate", "--output-dir", dir][..], &gust].concat());
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for f in ["fom.csv", "rom.csv", "comparison.csv"] {
        let a = fs::read(d.join("a").join(f)).unwrap();
        let b = fs::read(d.join("b").join(f)).unwrap();
        assert!(a == b, "{f} differs between runs");
    }
    let out = nmor(d, &[&["simulate", "--output-dir", "c"][..], &gust[..6], &["--seed", "8"]].concat());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_ne!(fs::read(d.join("a/fom.csv")).unwrap(), fs::read(d.join("c/fom.csv")).unwrap());
}

#[test]
fn archives_are_reused_and_checked() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let out = nmor(d, &["build-rom", "--output-dir", "built"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let archive = d.join("built/rom.nrom");

    let from_archive = format!("rom.archive=\"{}\"", archive.display());
    let out = nmor(d, &["simulate", "--output-dir", "reuse", "--set", &from_archive]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = nmor(d, &["simulate", "--output-dir", "fresh"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read(d.join("reuse/rom.csv")).unwrap(), fs::read(d.join("fresh/rom.csv")).unwrap());

    // A different flight condition must not silently use the stored model.
    let out = nmor(d, &["simulate", "--output-dir", "wrong", "--set", &from_archive, "--set", "params.U_star=3.0"]);
    assert_ne!(code(&out), 0);
    assert!(stderr(&out).contains("does not match"), "{}", stderr(&out));
}

#[test]
fn command_line_flags_override_the_file() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let out = nmor(d, &["build-rom", "--output-dir", "o", "--order", "3", "--modes-real", "1", "--modes-complex", "3"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("order: 3"), "{text}");
    assert!(text.contains("modes: 4 (7 extended)"), "{text}");

    let cfg = RunConfig::from_sources(AEROFOIL, &["basis.modes_complex=3".into(), "basis.modes_complex=1".into()]).unwrap();
    assert_eq!(cfg.basis.modes_complex, Some(1));
}

#[test]
fn sweep_results_do_not_depend_on_worker_count() {
    let text = format!(
        "{AEROFOIL}\n[gust]\nkind = \"one-minus-cosine\"\nwg_max = 0.02\nt_g = 10.0\n\n[sweep]\nparameter = \"gust.t_g\"\nvalues = [5.0, 10.0, 20.0]\n"
    );
    let cfg = RunConfig::from_sources(&text, &["simulate.perturbation=[]".into()]).unwrap();
    let serial = run_sweep(&cfg, 1).unwrap();
    let parallel = run_sweep(&cfg, 2).unwrap();
    assert_eq!(serial.failures(), 0);
    assert_eq!(serial.rom_builds, 1);
    assert_eq!(summary_csv(&serial), summary_csv(&parallel));
    assert_eq!(summary_csv(&serial).lines().count(), 4);

    // A case that cannot be built is reported, the others still run.
    let bad = RunConfig::from_sources(
        &text.replace("parameter = \"gust.t_g\"\nvalues = [5.0, 10.0, 20.0]", "parameter = \"params.U_star\"\nvalues = [2.0, -1.0]"),
        &["simulate.perturbation=[]".into()],
    )
    .unwrap();
    let r = run_sweep(&bad, 1).unwrap();
    assert_eq!(r.failures(), 1);
    assert!(r.cases[0].outcome.is_ok());
    assert!(summary_csv(&r).contains("failed"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let registry = nmor_cli::registry::Registry::default();
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        registry.build(&cfg.model, &cfg.params).unwrap();
        if let Some(s) = &cfg.sweep {
            s.grid().unwrap();
        }
        seen += 1;
    }
    assert!(seen >= 3);
}
