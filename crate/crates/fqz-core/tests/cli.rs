//! End-to-end checks of the `fqz` binary: exit codes, report formats, and
//! container round-trips through real files.

use std::path::Path;
use std::process::{Command, Output};

fn fqz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fqz"))
        .args(args)
        .output()
        .expect("spawn fqz")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr utf-8")
}

fn assert_code(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "stdout:\n{}\nstderr:\n{}",
        stdout(out),
        stderr(out)
    );
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Writes an untrained float checkpoint; fast enough for every test that
/// only needs valid input data.
fn sample_floats(dir: &Path) -> std::path::PathBuf {
    let file = dir.join("floats.fqz");
    let out = fqz(&["sample", "--out", path(&file), "--seed", "9", "--train-steps", "0"]);
    assert_code(&out, 0);
    file
}

fn line_value<'a>(text: &'a str, key: &str) -> &'a str {
    let prefix = format!("{key}=");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no {key}= line in:\n{text}"))
}

#[test]
fn missing_input_exits_two() {
    let out = fqz(&["stats", "--in", "/nonexistent/input.fqz"]);
    assert_code(&out, 2);
    assert!(stderr(&out).starts_with("error:"));
}

#[test]
fn unknown_flag_exits_two() {
    let out = fqz(&["quantize", "--bogus"]);
    assert_code(&out, 2);
}

#[test]
fn bad_tau_exits_two() {
    let out = fqz(&["inq-demo", "--tau", "-0.5"]);
    assert_code(&out, 2);
}

#[test]
fn quantize_rejects_already_quantized_input() {
    let dir = tempfile::tempdir().unwrap();
    let floats = sample_floats(dir.path());
    let q = dir.path().join("q.fqz");
    let out = fqz(&["quantize", "--in", path(&floats), "--out", path(&q), "--scheme", "fcq8"]);
    assert_code(&out, 0);
    let again = dir.path().join("qq.fqz");
    let out = fqz(&["quantize", "--in", path(&q), "--out", path(&again), "--scheme", "fcq8"]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("expected float input"));
}

#[test]
fn compress_rejects_non_fibbinary_codes() {
    let dir = tempfile::tempdir().unwrap();
    let floats = sample_floats(dir.path());
    let q = dir.path().join("u8.fqz");
    let out = fqz(&["quantize", "--in", path(&floats), "--out", path(&q), "--scheme", "uniform8"]);
    assert_code(&out, 0);
    let c = dir.path().join("c.fqz");
    let out = fqz(&["compress", "--in", path(&q), "--out", path(&c)]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("layer0.weight"));
}

#[test]
fn quantize_compress_decompress_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let floats = sample_floats(dir.path());
    let q = dir.path().join("q.fqz");
    assert_code(
        &fqz(&["quantize", "--in", path(&floats), "--out", path(&q), "--scheme", "fcq8"]),
        0,
    );
    let c = dir.path().join("c.fqz");
    let out = fqz(&["compress", "--in", path(&q), "--out", path(&c), "--group", "2"]);
    assert_code(&out, 0);
    let text = stdout(&out);
    assert_eq!(line_value(&text, "compressed"), "7 passthrough=7");

    // Stats on the compressed file must report both plain and
    // header-inclusive ratios.
    let out = fqz(&["stats", "--in", path(&c)]);
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(text.lines().any(|l| l.starts_with("cr=")));
    assert!(text.lines().any(|l| l.starts_with("effective_cr=")));
    assert!(text.lines().any(|l| l.starts_with("saving_vs_16b_pct=")));

    let d = dir.path().join("d.fqz");
    assert_code(&fqz(&["decompress", "--in", path(&c), "--out", path(&d)]), 0);
    let before = std::fs::read(&q).unwrap();
    let after = std::fs::read(&d).unwrap();
    assert_eq!(before, after, "decompression must restore the exact container");
}

#[test]
fn grouped_symbols_beat_per_tensor_on_the_bundled_net() {
    let dir = tempfile::tempdir().unwrap();
    let floats = dir.path().join("trained.fqz");
    // The bundled demo checkpoint: defaults are seed 4, 5000 steps.
    let out = fqz(&["sample", "--out", path(&floats)]);
    assert_code(&out, 0);
    let q = dir.path().join("q.fqz");
    assert_code(
        &fqz(&["quantize", "--in", path(&floats), "--out", path(&q), "--scheme", "fcq8"]),
        0,
    );

    let mut lengths = Vec::new();
    for group in ["1", "3"] {
        let c = dir.path().join(format!("c{group}.fqz"));
        assert_code(
            &fqz(&["compress", "--in", path(&q), "--out", path(&c), "--group", group]),
            0,
        );
        let out = fqz(&["stats", "--in", path(&c)]);
        assert_code(&out, 0);
        let text = stdout(&out);
        assert_eq!(line_value(&text, "ul"), "3240");
        lengths.push(line_value(&text, "cl").parse::<u64>().unwrap());
    }
    assert_eq!(lengths, [2408, 2400]);
    assert!(lengths[1] <= lengths[0], "sharing symbols across the group must not lose");
}

#[test]
fn inq_demo_with_infinite_threshold_never_rolls_back() {
    let out = fqz(&[
        "inq-demo", "--seed", "7", "--tau", "inf", "--steps", "30", "--widths", "2,8,8,1",
    ]);
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(!text.contains("event=rollback"));
    assert_eq!(line_value(&text, "events"), "2");
    assert_eq!(line_value(&text, "all_frozen"), "true");
}

#[test]
fn inq_demo_mixed_split_freezes_everything() {
    let out = fqz(&[
        "inq-demo", "--seed", "7", "--tau", "inf", "--steps", "30", "--widths", "2,8,8,1",
        "--mixed-split", "1",
    ]);
    assert_code(&out, 0);
    let text = stdout(&out);
    assert_eq!(line_value(&text, "events"), "3");
    assert_eq!(line_value(&text, "all_frozen"), "true");
    // The tensor frozen without retraining keeps its quantized metric.
    let last = text.lines().filter(|l| l.starts_with("event=")).last().unwrap();
    let quantized = last.split("quantized=").nth(1).unwrap().split(' ').next().unwrap();
    let after = last.split("after=").nth(1).unwrap().split(' ').next().unwrap();
    assert_eq!(quantized, after);
}

#[test]
fn stats_on_float_containers_reports_memory_only() {
    let dir = tempfile::tempdir().unwrap();
    let floats = sample_floats(dir.path());
    let out = fqz(&["stats", "--in", path(&floats)]);
    assert_code(&out, 0);
    let text = stdout(&out);
    assert!(!text.lines().any(|l| l.starts_with("cr=")));
    assert!(text.lines().any(|l| l.starts_with("total_elements=")));
}

#[test]
fn hw_report_prints_quoted_costs_and_discovery() {
    let out = fqz(&["hw-report", "--bits", "8", "--discover"]);
    assert_code(&out, 0);
    let text = stdout(&out);
    assert_eq!(line_value(&text, "fa_replaced"), "28");
    assert_eq!(line_value(&text, "replaced_pct"), "58");
    assert_eq!(line_value(&text, "area_saving_pct"), "44");
    assert_eq!(line_value(&text, "power_saving_pct"), "45");
    assert_eq!(line_value(&text, "discovered_replaceable"), "12");
}

#[test]
fn hw_report_discovery_guard_refuses_wide_arrays() {
    let out = fqz(&["hw-report", "--bits", "13", "--discover"]);
    assert_code(&out, 1);
    assert!(stderr(&out).contains("12 bits"));
}
