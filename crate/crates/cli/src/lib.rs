//! Command implementations behind the `lcc` binary.
//!
//! Exit-code contract: 0 on success, 1 when a mathematical check fails
//! (scheme or array verification, decode failure), 2 on input problems
//! (unreadable files, parse errors, bad parameters).

pub mod bench;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_rational::Ratio;

use lcc_core::error::Error as CoreError;
use lcc_core::msr;
use lcc_core::pda::{mn_pda, Pda};
use lcc_core::qary::{build_scheme, ConstructionParams};
use lcc_core::scheme::{random_demands, LinearScheme, PacketLibrary};
use lcc_core::{concat, VerifyReport};

/// Failure modes with their exit codes.
#[derive(Debug)]
pub enum CmdError {
    /// Exit 2: the input could not be used at all.
    Input(String),
    /// Exit 1: the input parsed but failed a mathematical check.
    Verification(String),
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Input(_) => 2,
            CmdError::Verification(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CmdError::Input(m) | CmdError::Verification(m) => m,
        }
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        CmdError::Input(e.to_string())
    }
}

pub type CmdResult<T> = Result<T, CmdError>;

fn read_file(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CmdError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> CmdResult<()> {
    fs::write(path, content)
        .map_err(|e| CmdError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Any of the three top-level file kinds, detected by header shape: seven
/// integers open a scheme, four open an array or (when an `ENC` section
/// follows) a storage code.
pub enum LoadedFile {
    Scheme(LinearScheme),
    Pda(Pda),
    Msr(msr::MsrCode, msr::RepairSubspaces),
}

impl LoadedFile {
    pub fn kind(&self) -> &'static str {
        match self {
            LoadedFile::Scheme(_) => "scheme",
            LoadedFile::Pda(_) => "pda",
            LoadedFile::Msr(..) => "msr-code",
        }
    }
}

pub fn detect_and_parse(text: &str) -> CmdResult<LoadedFile> {
    let mut nonempty = text.lines().filter(|l| !l.trim().is_empty());
    let header = nonempty
        .next()
        .ok_or_else(|| CmdError::Input("empty file".into()))?;
    let fields = header.split_whitespace().count();
    match fields {
        7 => Ok(LoadedFile::Scheme(LinearScheme::from_text(text)?)),
        4 => {
            let second = nonempty.next().unwrap_or("");
            if second.trim_start().starts_with("ENC") {
                let (code, subs) = msr::from_text(text)?;
                Ok(LoadedFile::Msr(code, subs))
            } else {
                Ok(LoadedFile::Pda(Pda::from_text(text)?))
            }
        }
        n => Err(CmdError::Input(format!(
            "unrecognized header with {n} fields (expected 4 for an array or code, 7 for a scheme)"
        ))),
    }
}

pub fn load_file(path: &Path) -> CmdResult<LoadedFile> {
    detect_and_parse(&read_file(path)?)
}

pub fn cmd_generate_theorem3(q: usize, m: usize, z: usize, output: &Path) -> CmdResult<()> {
    let params = ConstructionParams::new(q, m, z)
        .map_err(|e| CmdError::Input(e.to_string()))?;
    let scheme = build_scheme(params);
    write_file(output, &scheme.to_text())?;
    println!(
        "wrote scheme: K={} F={} M/N={} R={} -> {}",
        scheme.users(),
        scheme.packet_count(),
        scheme.cache_fraction(),
        scheme.nominal_rate(),
        output.display()
    );
    Ok(())
}

pub fn cmd_generate_mn_pda(users: usize, t: usize, output: &Path) -> CmdResult<()> {
    let pda = mn_pda(users, t).map_err(|e| CmdError::Input(e.to_string()))?;
    write_file(output, &pda.to_text())?;
    println!(
        "wrote array: K={} F={} Z={} S={} -> {}",
        pda.users(),
        pda.packet_rows(),
        pda.stars_per_column(),
        pda.symbols(),
        output.display()
    );
    Ok(())
}

fn render_verify_report(report: &VerifyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "pairs checked: {} (expected rank {} on the diagonal, {} off it)",
        report.pairs.len(),
        report.expected_self_rank,
        report.expected_cross_rank
    );
    for defect in &report.rank_defects {
        let _ = writeln!(
            out,
            "  user {} {:?} matrix has rank {} < {} rows",
            defect.user, defect.role, defect.rank, defect.rows
        );
    }
    for pair in report.failed_pairs() {
        let _ = writeln!(
            out,
            "  pair ({}, {}): rank {} != expected {}",
            pair.user, pair.other, pair.observed_rank, pair.expected_rank
        );
    }
    let _ = writeln!(out, "verdict: {}", if report.pass { "PASS" } else { "FAIL" });
    out
}

pub fn cmd_verify(path: &Path) -> CmdResult<()> {
    match load_file(path)? {
        LoadedFile::Scheme(scheme) => {
            println!(
                "scheme: K={} F={} p={} M/N={} R={}",
                scheme.users(),
                scheme.packet_count(),
                scheme.modulus(),
                scheme.cache_fraction(),
                scheme.nominal_rate()
            );
            let report = scheme.verify();
            print!("{}", render_verify_report(&report));
            if report.pass {
                Ok(())
            } else {
                Err(CmdError::Verification(format!(
                    "{} pair(s) failed the rank condition",
                    report.failed_pairs().count()
                )))
            }
        }
        LoadedFile::Pda(pda) => {
            println!(
                "array: K={} F={} Z={} S={}",
                pda.users(),
                pda.packet_rows(),
                pda.stars_per_column(),
                pda.symbols()
            );
            let report = pda.validate();
            for v in &report.violations {
                println!("  {}: {} {:?}", v.condition, v.detail, v.coordinates);
            }
            println!("verdict: {}", if report.valid { "PASS" } else { "FAIL" });
            if report.valid {
                Ok(())
            } else {
                Err(CmdError::Verification(format!(
                    "{} violation(s)",
                    report.violations.len()
                )))
            }
        }
        LoadedFile::Msr(code, subs) => {
            println!(
                "code: p={} K={} r={} F={}",
                code.modulus(),
                code.systematic(),
                code.parity(),
                code.node_size()
            );
            let report = msr::verify_repair(&code, &subs);
            for pair in report.pairs.iter().filter(|p| !p.pass) {
                println!(
                    "  pair ({}, {}): rank {} != expected {}",
                    pair.user, pair.other, pair.observed_rank, pair.expected_rank
                );
            }
            let mds = msr::verify_mds(&code).map_err(|e| CmdError::Input(e.to_string()))?;
            println!("repair condition: {}", if report.pass { "PASS" } else { "FAIL" });
            println!("erasure (MDS) check: {}", if mds { "PASS" } else { "FAIL" });
            if report.pass && mds {
                Ok(())
            } else {
                Err(CmdError::Verification("code checks failed".into()))
            }
        }
    }
}

/// Demand selection for `simulate`.
pub enum DemandSpec {
    All,
    Random(usize),
    Explicit(Vec<usize>),
}

impl DemandSpec {
    pub fn parse(text: &str) -> CmdResult<Self> {
        if text == "all" {
            return Ok(DemandSpec::All);
        }
        if let Some(n) = text.strip_prefix("random:") {
            let n: usize = n
                .parse()
                .map_err(|_| CmdError::Input(format!("invalid demand count in `{text}`")))?;
            return Ok(DemandSpec::Random(n));
        }
        if let Some(list) = text.strip_prefix("explicit:") {
            let demand = list
                .split(',')
                .map(|tok| {
                    tok.trim()
                        .parse::<usize>()
                        .map_err(|_| CmdError::Input(format!("invalid demand entry `{tok}`")))
                })
                .collect::<CmdResult<Vec<usize>>>()?;
            return Ok(DemandSpec::Explicit(demand));
        }
        Err(CmdError::Input(format!(
            "unrecognized demand spec `{text}` (use all, random:N or explicit:d0,d1,...)"
        )))
    }

    fn demands(&self, users: usize, files: usize, seed: u64) -> CmdResult<Vec<Vec<usize>>> {
        match self {
            DemandSpec::All => {
                let total = (files as u64).checked_pow(users as u32);
                match total {
                    Some(t) if t <= 4096 => Ok((0..t)
                        .map(|code| {
                            let mut d = Vec::with_capacity(users);
                            let mut c = code;
                            for _ in 0..users {
                                d.push((c % files as u64) as usize);
                                c /= files as u64;
                            }
                            d
                        })
                        .collect()),
                    _ => Err(CmdError::Input(format!(
                        "demand space {files}^{users} too large to enumerate; use random:N"
                    ))),
                }
            }
            DemandSpec::Random(n) => Ok(random_demands(users, files, *n, seed ^ 0x9E3779B97F4A7C15)),
            DemandSpec::Explicit(d) => {
                if d.len() != users {
                    return Err(CmdError::Input(format!(
                        "explicit demand has {} entries for {users} users",
                        d.len()
                    )));
                }
                Ok(vec![d.clone()])
            }
        }
    }
}

pub struct SimulateOpts {
    pub demands: DemandSpec,
    pub seed: u64,
    pub block_size: usize,
    pub files: Option<usize>,
}

pub fn cmd_simulate(path: &Path, opts: &SimulateOpts) -> CmdResult<()> {
    let loaded = load_file(path)?;
    let scheme = match loaded {
        LoadedFile::Scheme(s) => s,
        LoadedFile::Pda(pda) => {
            println!("array input: running the matrix pipeline on its linear form");
            pda.to_linear(2)?
        }
        LoadedFile::Msr(..) => {
            return Err(CmdError::Input(
                "simulate expects a scheme or array file; convert the code first".into(),
            ))
        }
    };
    let users = scheme.users();
    let files = opts.files.unwrap_or(users);
    let library = PacketLibrary::random(
        scheme.modulus(),
        files,
        scheme.packet_count(),
        opts.block_size,
        opts.seed,
    )?;
    let demands = opts.demands.demands(users, files, opts.seed)?;
    if demands.is_empty() {
        return Err(CmdError::Input("no demands to simulate".into()));
    }

    println!(
        "scheme: K={users} F={} p={} | library: N={files} blocks of {} symbols, seed {}",
        scheme.packet_count(),
        scheme.modulus(),
        opts.block_size,
        opts.seed
    );
    let caches = scheme.place(&library)?;
    let mut decode_ok = vec![0usize; users];
    let mut decoders = Vec::with_capacity(users);
    for k in 0..users {
        decoders.push(scheme.decoder_for(k).map_err(|e| {
            CmdError::Verification(format!("decoder construction failed for user {k}: {e}"))
        })?);
    }
    let mut failures = 0usize;
    for demand in &demands {
        let broadcast = scheme.encode_broadcast(&library, demand)?;
        for (k, decoder) in decoders.iter().enumerate() {
            let got = decoder.decode(&scheme, &caches[k], &broadcast, demand);
            if got.is_ok_and(|f| f == library.file(demand[k])) {
                decode_ok[k] += 1;
            } else {
                failures += 1;
            }
        }
    }
    for (k, ok) in decode_ok.iter().enumerate() {
        println!("user {k}: {ok}/{} demands decoded", demands.len());
    }
    let structural = scheme.structural_rows().len();
    println!(
        "transmitted rows: {structural}/{} (signal length {})",
        scheme.packet_count(),
        scheme.signal_rows()
    );
    let rate = scheme.measured_rate(files, opts.seed);
    println!(
        "rate: nominal {} | worst observed {} over {} demands",
        rate.nominal, rate.worst_observed, rate.demands_checked
    );
    if failures == 0 {
        println!("all {} decodes succeeded", demands.len() * users);
        Ok(())
    } else {
        Err(CmdError::Verification(format!("{failures} decode(s) failed")))
    }
}

pub fn parse_ratio(text: &str) -> CmdResult<Ratio<u64>> {
    let (num, den) = text
        .split_once('/')
        .ok_or_else(|| CmdError::Input(format!("memory ratio `{text}` must look like z/q")))?;
    let num: u64 = num
        .trim()
        .parse()
        .map_err(|_| CmdError::Input(format!("invalid ratio numerator `{num}`")))?;
    let den: u64 = den
        .trim()
        .parse()
        .map_err(|_| CmdError::Input(format!("invalid ratio denominator `{den}`")))?;
    if num == 0 || den == 0 || num >= den {
        return Err(CmdError::Input(format!(
            "memory ratio must satisfy 0 < z/q < 1, got {num}/{den}"
        )));
    }
    Ok(Ratio::new(num, den))
}

pub fn cmd_bench(ratio: Ratio<u64>, user_counts: &[u64], csv: Option<&Path>) -> CmdResult<()> {
    if user_counts.is_empty() {
        return Err(CmdError::Input("bench needs at least one user count".into()));
    }
    let rows = bench::bench_rows(ratio, user_counts);
    print!("{}", bench::render_table(&rows));
    if let Some(path) = csv {
        write_file(path, &bench::to_csv(&rows))?;
        println!("csv written to {}", path.display());
    }
    Ok(())
}

pub enum ConvertMode {
    PdaToLinear,
    FromMsr,
    ExtendTo(usize),
}

pub fn cmd_convert(input: &Path, output: &Path, mode: &ConvertMode) -> CmdResult<()> {
    let loaded = load_file(input)?;
    let scheme = match (mode, loaded) {
        (ConvertMode::PdaToLinear, LoadedFile::Pda(pda)) => {
            let report = pda.validate();
            if !report.valid {
                return Err(CmdError::Verification(format!(
                    "array fails validation with {} violation(s)",
                    report.violations.len()
                )));
            }
            pda.to_linear(2)?
        }
        (ConvertMode::PdaToLinear, other) => {
            return Err(CmdError::Input(format!(
                "--pda-to-linear expects an array file, found a {}",
                other.kind()
            )))
        }
        (ConvertMode::FromMsr, LoadedFile::Msr(code, subs)) => {
            let report = msr::verify_repair(&code, &subs);
            if !report.pass {
                return Err(CmdError::Verification(
                    "code fails the repair rank condition".into(),
                ));
            }
            msr::to_scheme(&code, &subs)?
        }
        (ConvertMode::FromMsr, other) => {
            return Err(CmdError::Input(format!(
                "--from-msr expects a code file, found a {}",
                other.kind()
            )))
        }
        (ConvertMode::ExtendTo(k), LoadedFile::Scheme(scheme)) => {
            if !scheme.verify().pass {
                return Err(CmdError::Verification(
                    "source scheme fails verification; refusing to extend".into(),
                ));
            }
            concat::compose_for_users(&scheme, *k).map_err(|e| CmdError::Input(e.to_string()))?
        }
        (ConvertMode::ExtendTo(_), other) => {
            return Err(CmdError::Input(format!(
                "--extend-to expects a scheme file, found a {}",
                other.kind()
            )))
        }
    };
    let report = scheme.verify();
    if !report.pass {
        return Err(CmdError::Verification(
            "converted scheme fails verification; nothing written".into(),
        ));
    }
    write_file(output, &scheme.to_text())?;
    println!(
        "wrote verified scheme: K={} F={} p={} M/N={} R={} -> {}",
        scheme.users(),
        scheme.packet_count(),
        scheme.modulus(),
        scheme.cache_fraction(),
        scheme.nominal_rate(),
        output.display()
    );
    Ok(())
}

pub fn cmd_info(path: &Path) -> CmdResult<()> {
    match load_file(path)? {
        LoadedFile::Scheme(s) => {
            println!("kind: scheme");
            println!("users (K): {}", s.users());
            println!("packets per file (F): {}", s.packet_count());
            println!("field modulus (p): {}", s.modulus());
            println!("memory ratio (M/N): {}", s.cache_fraction());
            println!("nominal rate (R): {}", s.nominal_rate());
            println!("signal rows (RF): {}", s.signal_rows());
        }
        LoadedFile::Pda(pda) => {
            println!("kind: array");
            println!("users (K): {}", pda.users());
            println!("rows (F): {}", pda.packet_rows());
            println!("stars per column (Z): {}", pda.stars_per_column());
            println!("delivery rounds (S): {}", pda.symbols());
        }
        LoadedFile::Msr(code, _) => {
            println!("kind: storage code");
            println!("systematic nodes (K): {}", code.systematic());
            println!("parity nodes (r): {}", code.parity());
            println!("node size (F): {}", code.node_size());
            println!("field modulus (p): {}", code.modulus());
        }
    }
    Ok(())
}
