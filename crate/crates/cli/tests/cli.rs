use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rpnjoin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpnjoin"))
        .args(args)
        .output()
        .expect("failed to run rpnjoin")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sorted_lines(text: &str) -> Vec<String> {
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    lines[1..].sort();
    lines
}

#[test]
fn gen_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("R1.csv");
    let status = rpnjoin(&[
        "gen",
        "--name",
        "R1",
        "--count",
        "100",
        "--key-lo",
        "0",
        "--key-hi",
        "50",
        "--seed",
        "42",
        "--out",
        path_str(&out),
    ]);
    assert!(status.status.success(), "{}", stderr(&status));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "key,p0");
    assert_eq!(lines.len(), 101);
    for line in &lines[1..] {
        let key: i64 = line.split(',').next().unwrap().parse().unwrap();
        assert!((0..50).contains(&key));
    }

    // Same flags, same bytes.
    let again = dir.path().join("again.csv");
    rpnjoin(&[
        "gen",
        "--name",
        "R1",
        "--count",
        "100",
        "--key-lo",
        "0",
        "--key-hi",
        "50",
        "--seed",
        "42",
        "--out",
        path_str(&again),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn gen_empty_and_invalid_range() {
    let out = rpnjoin(&[
        "gen", "--name", "R1", "--count", "0", "--key-lo", "0", "--key-hi", "10",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "key,p0\n");

    let out = rpnjoin(&[
        "gen", "--name", "R1", "--count", "3", "--key-lo", "5", "--key-hi", "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("invalid key range"));
}

#[test]
fn plan_prints_golden_rpn() {
    let out = rpnjoin(&[
        "plan",
        "--relations",
        "R1,R2,R3,R4,R5,R6",
        "--shape",
        "bushy",
    ]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out),
        "(((R1 JOIN R2) JOIN (R3 JOIN R4)) JOIN (R5 JOIN R6))\nR1 R2 JOIN R3 R4 JOIN JOIN R5 R6 JOIN JOIN\n"
    );

    let out = rpnjoin(&[
        "plan",
        "--relations",
        "R1,R2,R3,R4,R5,R6",
        "--shape",
        "linear",
    ]);
    assert!(out.status.success());
    assert_eq!(
        stdout(&out).lines().nth(1),
        Some("R1 R2 JOIN R3 JOIN R4 JOIN R5 JOIN R6 JOIN")
    );

    let out = rpnjoin(&["plan", "--expr", "(R1 ⋈ R2) JOIN R3"]);
    assert_eq!(stdout(&out), "((R1 JOIN R2) JOIN R3)\nR1 R2 JOIN R3 JOIN\n");
}

#[test]
fn plan_rejects_bad_input() {
    let out = rpnjoin(&["plan", "--expr", "R1 JOIN"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("syntax error at column 8"),
        "{}",
        stderr(&out)
    );

    // exactly one of --shape / --expr
    assert!(!rpnjoin(&["plan"]).status.success());
    assert!(!rpnjoin(&[
        "plan",
        "--relations",
        "R1,R2",
        "--shape",
        "linear",
        "--expr",
        "R1"
    ])
    .status
    .success());
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_single_match() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "key,p0\n7,100\n");
    let b = write(dir.path(), "b.csv", "key,p0\n7,200\n");
    let out = rpnjoin(&[
        "run",
        "--expr",
        "A JOIN B",
        "--input",
        &format!("A={a}"),
        "--input",
        &format!("B={b}"),
        "--stats",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "key,p0,p1\n7,100,200\n");
    let err = stderr(&out);
    assert!(err.contains("cardinality=1"), "{err}");
    assert!(
        err.contains("tuple_comparisons=") && err.contains("page_reads="),
        "{err}"
    );
}

#[test]
fn run_is_algorithm_independent() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for (i, seed) in [(1, "3"), (2, "4"), (3, "5"), (4, "6")] {
        let path = dir.path().join(format!("R{i}.csv"));
        let out = rpnjoin(&[
            "gen",
            "--name",
            &format!("R{i}"),
            "--count",
            "40",
            "--key-lo",
            "0",
            "--key-hi",
            "8",
            "--seed",
            seed,
            "--out",
            path_str(&path),
        ]);
        assert!(out.status.success());
        inputs.push(format!("R{i}={}", path_str(&path)));
    }

    let mut results = Vec::new();
    for algorithm in ["sortmerge", "nested", "block", "rocking", "hash"] {
        for mode in ["sequential", "concurrent"] {
            let result = dir.path().join(format!("{algorithm}-{mode}.csv"));
            let mut args = vec![
                "run",
                "--relations",
                "R1,R2,R3,R4",
                "--shape",
                "bushy",
                "--algorithm",
                algorithm,
                "--mode",
                mode,
                "--out",
                path_str(&result),
            ];
            for input in &inputs {
                args.push("--input");
                args.push(input);
            }
            let out = rpnjoin(&args);
            assert!(out.status.success(), "{algorithm}: {}", stderr(&out));
            results.push(sorted_lines(&fs::read_to_string(&result).unwrap()));
        }
    }
    assert_eq!(results[0][0], "key,p0,p1,p2,p3");
    assert!(results.iter().all(|r| r == &results[0]));
}

#[test]
fn run_error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "key,p0\n1,1\n1,2\n1,3\n");

    let out = rpnjoin(&["run", "--expr", "A JOIN B", "--input", &format!("A={a}")]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("unknown relation 'B'"));

    let out = rpnjoin(&[
        "run",
        "--expr",
        "A JOIN A2",
        "--input",
        &format!("A={a}"),
        "--input",
        &format!("A2={a}"),
        "--max-output",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));

    let missing = dir.path().join("missing.csv");
    let out = rpnjoin(&[
        "run",
        "--expr",
        "A",
        "--input",
        &format!("A={}", path_str(&missing)),
    ]);
    assert_eq!(out.status.code(), Some(5));

    let bad = write(dir.path(), "bad.csv", "key,p0\n3,x\n");
    let out = rpnjoin(&["run", "--expr", "A", "--input", &format!("A={bad}")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines().skip(1).collect()
}

#[test]
fn bench_paired_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.csv");
    let out = rpnjoin(&[
        "bench",
        "--tuples",
        "300,500",
        "--relations",
        "4,6",
        "--paired",
        "--shapes",
        "linear,bushy",
        "--seed",
        "1",
        "--reps",
        "1",
        "--warmup",
        "0",
        "--out",
        path_str(&out_path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("shape,algorithm,tuples,relations,key_lo,key_hi,seed,median_ms,result_cardinality,status")
    );
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("linear,sortmerge,300,4,0,30,1,"));
    assert!(rows[1].starts_with("bushy,sortmerge,300,4,0,30,1,"));
    assert!(rows[2].starts_with("linear,sortmerge,500,6,0,50,1,"));
}

#[test]
fn bench_single_cell_and_cross() {
    let out = rpnjoin(&[
        "bench",
        "--tuples",
        "100",
        "--relations",
        "2",
        "--shapes",
        "linear",
        "--reps",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(data_rows(&stdout(&out)).len(), 1);

    let out = rpnjoin(&[
        "bench",
        "--tuples",
        "50,60",
        "--relations",
        "2,3",
        "--cross",
        "--reps",
        "1",
        "--key-lo",
        "0",
        "--key-hi",
        "20",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.contains(",0,20,")));

    let out = rpnjoin(&["bench", "--tuples", "100,200", "--relations", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_non_timing_fields_are_deterministic() {
    let args = [
        "bench",
        "--tuples",
        "120,200",
        "--relations",
        "3,4",
        "--seed",
        "9",
        "--reps",
        "1",
    ];
    let strip = |text: String| -> Vec<String> {
        data_rows(&text)
            .iter()
            .map(|row| {
                let mut fields: Vec<&str> = row.split(',').collect();
                fields.remove(7);
                fields.join(",")
            })
            .collect()
    };
    let a = strip(stdout(&rpnjoin(&args)));
    let b = strip(stdout(&rpnjoin(&args)));
    assert_eq!(a.len(), 4);
    assert_eq!(a, b);
}
