//! Binary-level tests: exit codes, file round-trips, output shape.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lcc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lcc"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn fixture_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/msr_gf3.txt")
}

#[test]
fn generate_verify_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcc(
        &["generate", "theorem3", "--q", "2", "--m", "2", "--z", "1", "-o", "s.txt"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = lcc(&["verify", "s.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verdict: PASS"));
}

#[test]
fn invalid_parameters_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcc(
        &["generate", "theorem3", "--q", "1", "--m", "2", "--z", "0", "-o", "s.txt"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupted_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("junk.txt"), "1 2 three\n").unwrap();
    let out = lcc(&["verify", "junk.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = lcc(&["verify", "missing.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mutated_scheme_exits_one_with_pair_list() {
    let dir = tempfile::tempdir().unwrap();
    lcc(
        &["generate", "theorem3", "--q", "2", "--m", "2", "--z", "1", "-o", "s.txt"],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("s.txt")).unwrap();
    let scheme = lcc_core::LinearScheme::from_text(&text).unwrap();
    let mut broken_user = scheme.user(2).clone();
    broken_user.decoding = lcc_core::FieldMatrix::zeros(2, 2, 4).unwrap();
    let broken = scheme.with_user(2, broken_user);
    std::fs::write(dir.path().join("broken.txt"), broken.to_text()).unwrap();

    let out = lcc(&["verify", "broken.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("pair (2, 2)"));
    assert!(stdout(&out).contains("verdict: FAIL"));
}

#[test]
fn invalid_array_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // two equal symbols in one row violate the sub-array condition
    std::fs::write(dir.path().join("bad.txt"), "2 2 1 1\n0 0\n* *\n").unwrap();
    let out = lcc(&["verify", "bad.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn written_files_reparse_to_equal_values() {
    let dir = tempfile::tempdir().unwrap();
    lcc(
        &["generate", "theorem3", "--q", "3", "--m", "2", "--z", "2", "-o", "s.txt"],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("s.txt")).unwrap();
    let scheme = lcc_core::LinearScheme::from_text(&text).unwrap();
    assert_eq!(scheme.to_text(), text);

    lcc(
        &["generate", "mn-pda", "--K", "4", "--t", "2", "-o", "p.txt"],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("p.txt")).unwrap();
    let pda = lcc_core::Pda::from_text(&text).unwrap();
    assert_eq!(pda.to_text(), text);
    assert_eq!(
        (pda.users(), pda.packet_rows(), pda.stars_per_column(), pda.symbols()),
        (4, 6, 3, 4)
    );
}

#[test]
fn convert_pda_to_linear_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    lcc(
        &["generate", "mn-pda", "--K", "4", "--t", "2", "-o", "p.txt"],
        dir.path(),
    );
    let out = lcc(
        &["convert", "p.txt", "lin.txt", "--pda-to-linear"],
        dir.path(),
    );
    assert!(out.status.success());
    let out = lcc(&["verify", "lin.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn convert_extend_to_nine_users() {
    let dir = tempfile::tempdir().unwrap();
    lcc(
        &["generate", "theorem3", "--q", "2", "--m", "2", "--z", "1", "-o", "s.txt"],
        dir.path(),
    );
    let out = lcc(
        &["convert", "s.txt", "s9.txt", "--extend-to", "9"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("s9.txt")).unwrap();
    let scheme = lcc_core::LinearScheme::from_text(&text).unwrap();
    assert_eq!(scheme.users(), 9);
    assert_eq!(scheme.packet_count(), 8);
    assert_eq!(
        scheme.nominal_rate(),
        num_rational::Ratio::new(3u64, 2u64)
    );
}

#[test]
fn convert_from_msr_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixture_path();
    let out = lcc(
        &["convert", fixture.to_str().unwrap(), "msr.txt", "--from-msr"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = lcc(&["verify", "msr.txt"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn verify_msr_fixture_directly() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = fixture_path();
    let out = lcc(&["verify", fixture.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("repair condition: PASS"));
    assert!(text.contains("erasure (MDS) check: PASS"));
}

#[test]
fn simulate_uniform_demand_still_decodes() {
    let dir = tempfile::tempdir().unwrap();
    lcc(
        &["generate", "theorem3", "--q", "2", "--m", "2", "--z", "1", "-o", "s.txt"],
        dir.path(),
    );
    // every user asks for file 0; the rate supremum covers this demand too
    let out = lcc(
        &[
            "simulate",
            "s.txt",
            "--demands",
            "explicit:0,0,0,0,0,0",
            "--seed",
            "11",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("all 6 decodes succeeded"));
}

#[test]
fn simulate_accepts_array_files() {
    let dir = tempfile::tempdir().unwrap();
    lcc(
        &["generate", "mn-pda", "--K", "4", "--t", "2", "-o", "p.txt"],
        dir.path(),
    );
    let out = lcc(
        &["simulate", "p.txt", "--demands", "random:5", "--seed", "2"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("all 20 decodes succeeded"));
}

#[test]
fn simulate_is_deterministic_under_seed() {
    let dir = tempfile::tempdir().unwrap();
    lcc(
        &["generate", "theorem3", "--q", "3", "--m", "1", "--z", "1", "-o", "s.txt"],
        dir.path(),
    );
    let a = lcc(
        &["simulate", "s.txt", "--demands", "random:5", "--seed", "42"],
        dir.path(),
    );
    let b = lcc(
        &["simulate", "s.txt", "--demands", "random:5", "--seed", "42"],
        dir.path(),
    );
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn bench_csv_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = lcc(
        &["bench", "--mn-ratio", "1/2", "--K", "12,36", "--csv", "t.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let expect = "\
label,K,q,z,MN_num,MN_den,R_num,R_den,F
mn,12,,,1,2,6,7,924
yan,12,2,,1,2,1,1,32
theorem3,12,2,1,1,2,1,1,16
composed,12,2,1,1,2,,,
mn,36,,,1,2,18,19,9075135300
yan,36,2,,1,2,1,1,131072
theorem3,36,2,1,1,2,1,1,4096
composed,36,2,1,1,2,,,
";
    assert_eq!(csv, expect);
}

#[test]
fn info_reports_parameters() {
    let dir = tempfile::tempdir().unwrap();
    lcc(
        &["generate", "theorem3", "--q", "2", "--m", "2", "--z", "1", "-o", "s.txt"],
        dir.path(),
    );
    let out = lcc(&["info", "s.txt"], dir.path());
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("users (K): 6"));
    assert!(text.contains("memory ratio (M/N): 1/2"));
}

#[test]
fn thread_cap_env_var_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    lcc(
        &["generate", "theorem3", "--q", "2", "--m", "1", "--z", "1", "-o", "s.txt"],
        dir.path(),
    );
    let out = Command::new(env!("CARGO_BIN_EXE_lcc"))
        .args(["verify", "s.txt"])
        .env("LCC_THREADS", "1")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
