use std::path::Path;
use std::process::{Command, Output};

use lgtweezer_cli::manifest::MANIFEST_FILE;
use lgtweezer_cli::Manifest;

fn lgtweezer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgtweezer"))
        .args(args)
        .env_remove(lgtweezer_cli::OUT_ENV)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const REFERENCE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/reference.toml");

#[test]
fn preset_is_byte_identical_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(
        code(&lgtweezer(&["preset", "fig1", "--out", p(&a), "--threads", "1"])),
        0
    );
    assert_eq!(
        code(&lgtweezer(&["preset", "fig1", "--out", p(&b), "--threads", "3"])),
        0
    );
    let ma = std::fs::read(a.join(MANIFEST_FILE)).unwrap();
    let mb = std::fs::read(b.join(MANIFEST_FILE)).unwrap();
    assert_eq!(ma, mb);
    let m = Manifest::load(&a.join(MANIFEST_FILE)).unwrap();
    assert!(m.outputs.len() > 5);
    for o in &m.outputs {
        assert_eq!(
            std::fs::read(a.join(&o.path)).unwrap(),
            std::fs::read(b.join(&o.path)).unwrap()
        );
    }
}

#[test]
fn verify_passes_then_flags_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fig1");
    assert_eq!(code(&lgtweezer(&["preset", "fig1", "--out", p(&out)])), 0);
    let manifest = out.join(MANIFEST_FILE);
    let ok = lgtweezer(&["verify", p(&manifest), REFERENCE]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));

    let csv = out.join("E0_xcut.csv");
    let mut bytes = std::fs::read(&csv).unwrap();
    bytes.push(b'\n');
    std::fs::write(&csv, bytes).unwrap();
    let bad = lgtweezer(&["verify", p(&manifest), REFERENCE]);
    assert_eq!(code(&bad), 2);
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.contains("hash") && text.contains("E0_xcut.csv"), "{text}");
}

#[test]
fn manifest_config_reruns_to_the_same_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&lgtweezer(&["preset", "fig1", "--out", p(&a)])), 0);
    let manifest = a.join(MANIFEST_FILE);
    assert_eq!(code(&lgtweezer(&["run", p(&manifest), "--out", p(&b)])), 0);
    let (ma, mb) = (
        Manifest::load(&manifest).unwrap(),
        Manifest::load(&b.join(MANIFEST_FILE)).unwrap(),
    );
    assert_eq!(ma.outputs, mb.outputs);
    assert_eq!(mb.label, "fig1");
}

#[test]
fn printed_preset_config_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lgtweezer(&["preset", "sm-s5", "--print-config", "--seed", "9"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(
        text.contains("seed = 9") && text.contains("kind = \"transport-1d\""),
        "{text}"
    );
    let cfg = tmp.path().join("sm-s5.toml");
    std::fs::write(&cfg, text).unwrap();
    let out = tmp.path().join("out");
    assert_eq!(code(&lgtweezer(&["run", p(&cfg), "--out", p(&out)])), 0);
    let v = lgtweezer(&["verify", p(&out.join(MANIFEST_FILE)), REFERENCE]);
    assert_eq!(code(&v), 0);
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_lgtweezer"))
        .args(["preset", "sm-s5"])
        .env(lgtweezer_cli::OUT_ENV, tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(tmp.path().join("sm-s5").join(MANIFEST_FILE).exists());
}

#[test]
fn config_errors_exit_one_with_a_path() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (
            "unit.toml",
            "seed = 1\n[scene]\nkind = \"paraxial-field\"\nwaist = \"1 furlong\"\n",
            "scene.waist",
        ),
        (
            "bare.toml",
            "seed = 1\n[scene]\nkind = \"paraxial-field\"\nwaist = 1e-6\n",
            "scene.waist",
        ),
        ("kind.toml", "seed = 1\n[scene]\nkind = \"hologram\"\n", "hologram"),
        (
            "field.toml",
            "seed = 1\n[scene]\nkind = \"transport-1d\"\nn_atom = 5\n",
            "n_atom",
        ),
        ("empty.toml", "", "seed"),
    ];
    for (name, body, needle) in cases {
        let path = tmp.path().join(name);
        std::fs::write(&path, body).unwrap();
        let o = lgtweezer(&["run", p(&path), "--out", p(&tmp.path().join("x"))]);
        assert_eq!(code(&o), 1, "{name}: {}", stderr(&o));
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&lgtweezer(&["frobnicate"])), 1);
    assert_eq!(code(&lgtweezer(&["preset", "fig99"])), 1);
    assert_eq!(code(&lgtweezer(&["preset", "sm-s5", "--threads", "0"])), 1);
    assert_eq!(code(&lgtweezer(&["run", "/nonexistent/scene.toml"])), 1);
    assert_eq!(code(&lgtweezer(&["--help"])), 0);
}

#[test]
fn presets_lists_every_figure() {
    let o = lgtweezer(&["presets"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in [
        "fig1", "fig2", "fig3", "fig4", "fig5a", "fig6", "fig7", "fig9b", "sm-s3", "sm-s5",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
    assert!(text.contains("fig11-r08-1d"));
}
