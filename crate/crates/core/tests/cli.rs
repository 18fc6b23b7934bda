use std::path::Path;
use std::process::{Command, Output};

use posd::fec::{make_regular_code, write_alist};
use posd::harness::{parse_csv, parse_json};

fn posd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_posd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn codebook_dump() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cb.csv");
    let run = posd(&["codebook", "--format", "PB-6B8D", "--out", path_str(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("min squared distance 4"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 65);
    assert!(text.starts_with("info_bits,codeword,s1,"));
}

#[test]
fn user_format_file() {
    let dir = tempfile::tempdir().unwrap();
    let fmt = dir.path().join("toy.fmt");
    std::fs::write(&fmt, "format toy\nbits 2\ninfo 1\nparity b2 = b1\n").unwrap();
    let out = dir.path().join("cb.csv");
    let run = posd(&[
        "codebook",
        "--format",
        path_str(&fmt),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&run), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().nth(2).unwrap().split(',').nth(1), Some("11"));

    std::fs::write(&fmt, "format bad\nbits 2\ninfo 1\nparity b2 = b2\n").unwrap();
    let run = posd(&[
        "codebook",
        "--format",
        path_str(&fmt),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&run), 1);
}

#[test]
fn gmi_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("g.csv");
    let base = [
        "gmi",
        "--format",
        "PB-5B8D",
        "--demapper",
        "posd",
        "--snr",
        "3:5:1",
        "--frames",
        "2000",
    ];
    let run = posd(&[&base[..], &["--out", path_str(&csv)]].concat());
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let rows = parse_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows
        .iter()
        .all(|r| r.frames == 2000 && r.gmi_bits.unwrap() <= 5.0));
    assert!(rows.iter().all(|r| r.postfec_ber.is_none()));

    let json = dir.path().join("g.json");
    let run = posd(&[&base[..], &["--out", path_str(&json), "--json"]].concat());
    assert_eq!(code(&run), 0);
    assert_eq!(
        parse_json(&std::fs::read_to_string(&json).unwrap()).unwrap(),
        rows
    );
}

#[test]
fn sim_with_alist_code() {
    let dir = tempfile::tempdir().unwrap();
    let alist = dir.path().join("h.alist");
    std::fs::write(&alist, write_alist(&make_regular_code(96, 0.5, 7).unwrap())).unwrap();
    let out = dir.path().join("s.csv");
    let ldpc = format!("alist:{}", alist.display());
    let run = posd(&[
        "sim",
        "--format",
        "PA-7B8D",
        "--demapper",
        "mlm",
        "--snr",
        "12",
        "--ldpc",
        &ldpc,
        "--target-errors",
        "100",
        "--max-frames",
        "30",
        "--seed",
        "5",
        "--workers",
        "2",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows[0].frames, 30);
    assert_eq!(rows[0].postfec_ber, Some(0.0));
    assert_eq!(rows[0].ops_add, Some(5382));
}

#[test]
fn complexity_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let run = posd(&[
        "complexity",
        "--formats",
        "all",
        "--demappers",
        "all",
        "--frames",
        "500",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&run), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("PB-6B8D,ms,×,×,×,×"));
    assert!(text.contains("PA-7B8D,posd(p=3),"));
    assert!(String::from_utf8_lossy(&run.stdout).contains("Comparisons"));

    let run = posd(&[
        "complexity",
        "--formats",
        "PB-4B8D",
        "--demappers",
        "posd:2,1d",
        "--frames",
        "50",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&run), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 3);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = path_str(&out);
    let gmi = |fmt: &str, dm: &str, snr: &str, out: &str| {
        code(&posd(&[
            "gmi",
            "--format",
            fmt,
            "--demapper",
            dm,
            "--snr",
            snr,
            "--frames",
            "10",
            "--out",
            out,
        ]))
    };
    assert_eq!(gmi("PB-6B8D", "ms", "4", out), 2);
    assert_eq!(gmi("PA-7B8D", "ms", "4", out), 2);
    assert_eq!(gmi("PB-4B8D", "ms", "4", out), 0);
    assert_eq!(gmi("nope", "mlm", "4", out), 1);
    assert_eq!(gmi("PB-6B8D", "viterbi", "4", out), 1);
    assert_eq!(gmi("PB-6B8D", "mlm", "5:4:1", out), 1);
    assert_eq!(gmi("PB-6B8D", "mlm", "4:5:0", out), 1);
    assert_eq!(gmi("PB-6B8D", "mlm", "4", "/nonexistent/dir/x.csv"), 3);
    assert_eq!(
        code(&posd(&[
            "gmi",
            "--format",
            "PB-6B8D",
            "--demapper",
            "posd",
            "--p",
            "7",
            "--snr",
            "4",
            "--out",
            out
        ])),
        1
    );
    assert_eq!(
        code(&posd(&[
            "gmi",
            "--format",
            "PB-6B8D",
            "--demapper",
            "mlm",
            "--p",
            "2",
            "--snr",
            "4",
            "--out",
            out
        ])),
        1
    );
    assert_eq!(code(&posd(&["sim", "--bogus"])), 1);
    assert_eq!(
        code(&posd(&[
            "sim",
            "--format",
            "PB-6B8D",
            "--demapper",
            "mlm",
            "--snr",
            "4",
            "--ldpc",
            "alist:/nonexistent.alist",
            "--out",
            out
        ])),
        3
    );
    assert_eq!(code(&posd(&["--help"])), 0);
}
