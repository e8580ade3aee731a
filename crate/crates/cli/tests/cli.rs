use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mask3pc"))
}

fn code(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap(), text)
}

#[test]
fn run_reports_ok() {
    let (c, out) = code(bin().args(["run", "--mode", "mal", "--bucket", "2"]));
    assert_eq!(c, 0, "{out}");
    assert!(out.contains("correct=true"), "{out}");
}

#[test]
fn fault_script_gives_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.txt");
    fs::write(&f, "point=mul.chi party=1 op=add-delta value=1\n").unwrap();
    let (c, out) = code(
        bin()
            .args(["run", "--mode", "mal", "--bucket", "2", "--faults"])
            .arg(&f),
    );
    assert_eq!(c, 2, "{out}");
    assert!(out.contains("status=abort"), "{out}");
}

#[test]
fn config_errors_give_exit_three() {
    let (c, _) = code(bin().args(["run", "--faults", "x.txt"]));
    assert_eq!(c, 3);
    let (c, _) = code(bin().args(["run", "--no-such-flag"]));
    assert_eq!(c, 3);
    let (c, _) = code(bin().args(["run", "--predict", "--kind", "tree"]));
    assert_eq!(c, 3);
    let (c, _) = code(bin().args(["verify", "--only", "40"]));
    assert_eq!(c, 3);
}

#[test]
fn generated_circuit_runs_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("sbox.txt");
    let (c, out) = code(bin().args(["gen-circuit", "sbox", "-o"]).arg(&f));
    assert_eq!(c, 0, "{out}");
    let (c, out) = code(bin().args(["run", "--circuit"]).arg(&f));
    assert_eq!(c, 0, "{out}");
    assert!(out.contains("correct=true"), "{out}");
}

#[test]
fn dealt_shares_run() {
    let dir = tempfile::tempdir().unwrap();
    let (c, out) = code(
        bin()
            .args(["deal-shares", "--kind", "linreg", "--dim", "16", "-o"])
            .arg(dir.path()),
    );
    assert_eq!(c, 0, "{out}");
    let (c, out) = code(bin().args(["run", "--shares"]).arg(dir.path()));
    assert_eq!(c, 0, "{out}");
    assert!(out.contains("output.P0="), "{out}");
}

#[test]
fn verify_single_criterion() {
    let (c, out) = code(bin().args(["verify", "--quick", "--only", "6"]));
    assert_eq!(c, 0, "{out}");
    assert!(out.contains("criterion  6 PASS"), "{out}");
}
