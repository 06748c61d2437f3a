use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn xtern(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xtern"))
        .args(args)
        .output()
        .expect("spawn xtern")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn testdata(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("testdata")
        .join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn selftest_passes() {
    let o = xtern(&["selftest"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("codec: 243/243"), "{out}");
    assert!(out.contains("encoding: 196608/196608"), "{out}");
}

#[test]
fn bench_csv() {
    let o = xtern(&[
        "bench",
        "--sweep",
        "nb=2..4",
        "--paths",
        "ternary,2bit",
        "--size",
        "8x8",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], xtern::perf::bench::CSV_HEADER);
    assert_eq!(lines.len(), 1 + 3 * 2);
    assert!(lines[1].starts_with("ternary,2,8,8,false,"));
    assert!(lines[6].starts_with("2bit,4,8,8,true,"));
}

#[test]
fn bench_errors() {
    assert_eq!(xtern(&["bench", "--sweep", "nb=x"]).status.code(), Some(2));
    assert_eq!(xtern(&["bench", "--paths", "8bit"]).status.code(), Some(2));
    let o = xtern(&["bench", "--sweep", "nb=12", "--size", "96x96"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("L1"));
}

#[test]
fn asm_disasm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let programs = [
        "smlsdotsp.t x10, x0, 0\nsmlsdotsp.t x11, x0, 31\n",
        "thrc x3, x1, x2\nmax.t a0, a1, a2\nmin.t t0, t1, t2\n",
        "sdotsp.t x5, x6, x7 # dot\ndotsp.t x31, x30, x29\n",
    ];
    for (i, src) in programs.iter().enumerate() {
        let (asm, hex, back) = (
            dir.path().join(format!("{i}.s")),
            dir.path().join(format!("{i}.hex")),
            dir.path().join(format!("{i}.out.s")),
        );
        std::fs::write(&asm, src).unwrap();
        assert!(xtern(&["asm", s(&asm), "-o", s(&hex)]).status.success());
        assert!(xtern(&["disasm", s(&hex), "-o", s(&back)]).status.success());
        let want = xtern::isa::assemble(src).unwrap();
        let got = xtern::isa::assemble(&std::fs::read_to_string(&back).unwrap()).unwrap();
        assert_eq!(got, want);
        assert_eq!(
            std::fs::read_to_string(&hex).unwrap(),
            xtern::isa::to_hex(&want)
        );
    }
    let bad = dir.path().join("bad.s");
    std::fs::write(&bad, "thrc x3, x1\n").unwrap();
    let o = xtern(&["asm", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn run_golden_model() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.csv");
    let o = xtern(&[
        "run",
        s(&testdata("vgg40.xtnm")),
        s(&testdata("vgg40_input.trit")),
        "--cores",
        "4",
        "--report",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let want = std::fs::read_to_string(testdata("vgg40_scores.txt"))
        .unwrap()
        .trim()
        .replace(' ', ", ");
    assert!(
        stdout(&o).contains(&format!("scores [{want}]")),
        "{}",
        stdout(&o)
    );
    let csv = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("frame,layer,kind,"));
    // ten layers plus the total row
    assert_eq!(lines.len(), 1 + 11);
    assert!(lines[11].starts_with("0,total,"));
}

#[test]
fn zoo_input_run_stream() {
    let dir = tempfile::tempdir().unwrap();
    let (model, input) = (dir.path().join("d.xtnm"), dir.path().join("d.in"));
    assert!(xtern(&[
        "zoo",
        "dvs",
        "--precision",
        "2bit",
        "--seed",
        "3",
        "-o",
        s(&model)
    ])
    .status
    .success());
    assert!(
        xtern(&["input", s(&model), "--frames", "3", "-o", s(&input)])
            .status
            .success()
    );
    let o = xtern(&["run", s(&model), s(&input)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.contains("frame 2: class"));
    assert_eq!(
        xtern(&["zoo", "vgg", "--channels", "33", "-o", s(&model)])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let model = testdata("vgg40.xtnm");
    let missing = dir.path().join("missing");
    assert_eq!(
        xtern(&["run", s(&missing), s(&missing)]).status.code(),
        Some(1)
    );
    let truncated = dir.path().join("t.xtnm");
    let bytes = std::fs::read(&model).unwrap();
    std::fs::write(&truncated, &bytes[..bytes.len() / 3]).unwrap();
    let o = xtern(&["run", s(&truncated), s(&testdata("vgg40_input.trit"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse error at byte"));
    // input shape mismatch: feed the model file's own dims wrong
    let small = dir.path().join("small.trit");
    std::fs::write(
        &small,
        xtern::codec::TernaryTensor::zeros(5, 4, 4)
            .unwrap()
            .to_blob(),
    )
    .unwrap();
    let o = xtern(&["run", s(&model), s(&small)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("shape"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(xtern(&[]).status.code(), Some(2));
    assert_eq!(xtern(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(xtern(&["run", "only-one-arg"]).status.code(), Some(2));
    assert_eq!(
        xtern(&["run", "a", "b", "--cores", "0"]).status.code(),
        Some(2)
    );
}
