//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`).
//!
//! Every tolerance here is pinned in code; all comparisons are exact integer
//! or rational arithmetic.

use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::path::Path;
use std::time::Instant;

use num_bigint::BigUint;
use num_rational::{BigRational, Ratio};

use lcc_cli::bench::{bench_rows, SchemeFamily};
use lcc_core::concat;
use lcc_core::field::{FieldMatrix, PacketBlock};
use lcc_core::msr;
use lcc_core::pda::{mn_pda, Pda};
use lcc_core::qary;
use lcc_core::scheme::{random_demands, round_trip, PacketLibrary};

fn criterion<F: FnOnce() + UnwindSafe>(number: u32, name: &str, body: F) {
    let result = catch_unwind(body);
    let verdict = if result.is_ok() { "PASS" } else { "FAIL" };
    println!("[acceptance] criterion {number} ({name}): {verdict}");
    if let Err(cause) = result {
        resume_unwind(cause);
    }
}

const SAMPLE_PDA: &str = "\
6 4 2 4
* 1 * 2 * 0
0 * * 3 1 *
* 3 0 * 2 *
2 * 1 * * 3
";

fn unit(len: usize, s: usize) -> Vec<u32> {
    let mut v = vec![0; len];
    v[s] = 1;
    v
}

fn rows(r: Vec<Vec<u32>>) -> FieldMatrix {
    FieldMatrix::from_rows(2, r).unwrap()
}

#[test]
fn criterion_1_bench_table_reproduction() {
    criterion(1, "comparison table at M/N = 1/2", || {
        let started = Instant::now();
        let rows = bench_rows(Ratio::new(1, 2), &[12, 18, 24, 30, 36]);
        let find = |family: SchemeFamily, k: u64| {
            rows.iter()
                .find(|r| r.family == family && r.users == k)
                .unwrap()
        };
        let rational = |n: u64, d: u64| {
            BigRational::new(num_bigint::BigInt::from(n), num_bigint::BigInt::from(d))
        };

        let mn_expect: [(u64, (u64, u64), u64); 5] = [
            (12, (6, 7), 924),
            (18, (9, 10), 48620),
            (24, (12, 13), 2704156),
            (30, (15, 16), 155117520),
            (36, (18, 19), 9075135300),
        ];
        for (k, (rn, rd), f) in mn_expect {
            let row = find(SchemeFamily::Mn, k);
            assert_eq!(row.rate.clone().unwrap(), rational(rn, rd), "mn rate at K={k}");
            assert_eq!(row.packets.clone().unwrap(), BigUint::from(f), "mn F at K={k}");
        }
        let yan_expect: [(u64, u64); 5] =
            [(12, 32), (18, 256), (24, 2048), (30, 16384), (36, 131072)];
        for (k, f) in yan_expect {
            let row = find(SchemeFamily::Yan, k);
            assert_eq!(row.rate.clone().unwrap(), rational(1, 1), "yan rate at K={k}");
            assert_eq!(row.packets.clone().unwrap(), BigUint::from(f), "yan F at K={k}");
        }
        let digit_expect: [(u64, u64); 5] =
            [(12, 16), (18, 64), (24, 256), (30, 1024), (36, 4096)];
        for (k, f) in digit_expect {
            let row = find(SchemeFamily::Theorem3, k);
            assert_eq!(row.rate.clone().unwrap(), rational(1, 1), "theorem3 rate at K={k}");
            assert_eq!(row.packets.clone().unwrap(), BigUint::from(f), "theorem3 F at K={k}");
        }
        let elapsed = started.elapsed();
        assert!(elapsed.as_secs_f64() < 1.0, "table took {elapsed:?}, budget 1 s");
    });
}

#[test]
fn criterion_2_golden_examples() {
    criterion(2, "golden example reproduction", || {
        // the 4x6 sample array is a valid (6,4,2,4) PDA
        let pda = Pda::from_text(SAMPLE_PDA).unwrap();
        assert_eq!(
            (pda.users(), pda.packet_rows(), pda.stars_per_column(), pda.symbols()),
            (6, 4, 2, 4)
        );
        assert!(pda.validate().valid);

        // direct delivery at d = (0..5) sends exactly the four known sums
        let library = PacketLibrary::random(2, 6, 4, 16, 2024).unwrap();
        let demand: Vec<usize> = (0..6).collect();
        let run = pda.delivery(&library, &demand).unwrap();
        let slots: [&[(usize, usize)]; 4] = [
            &[(0, 1), (2, 2), (5, 0)], // W_{0,1} + W_{2,2} + W_{5,0}
            &[(1, 0), (2, 3), (4, 1)],
            &[(0, 3), (3, 0), (4, 2)],
            &[(1, 2), (3, 1), (5, 3)],
        ];
        assert_eq!(run.transmissions.len(), 4);
        for (slot, expect) in slots.iter().enumerate() {
            let mut got = run.transmissions[slot].terms.clone();
            got.sort_unstable();
            let mut want = expect.to_vec();
            want.sort_unstable();
            assert_eq!(got, want, "slot {slot}");
            let mut sum = PacketBlock::zeros(16);
            for &(k, j) in expect.iter() {
                sum.add_scaled(&library.file(demand[k])[j], 1, 2);
            }
            assert_eq!(run.transmissions[slot].block, sum, "slot {slot} payload");
        }
        for (k, file) in run.decoded.iter().enumerate() {
            assert_eq!(file, library.file(k), "user {k} decode");
        }

        // conversion to matrices: caching rows select the stars, coding row s
        // marks this user's packet in slot s, decoding selects the nonzero
        // coding rows
        let scheme = pda.to_linear(2).unwrap();
        let z = || vec![0u32; 4];
        let expect_caching = [
            rows(vec![unit(4, 0), unit(4, 2)]),
            rows(vec![unit(4, 1), unit(4, 3)]),
            rows(vec![unit(4, 0), unit(4, 1)]),
            rows(vec![unit(4, 2), unit(4, 3)]),
            rows(vec![unit(4, 0), unit(4, 3)]),
            rows(vec![unit(4, 1), unit(4, 2)]),
        ];
        let expect_coding = [
            rows(vec![unit(4, 1), z(), unit(4, 3), z()]),
            rows(vec![z(), unit(4, 0), z(), unit(4, 2)]),
            rows(vec![unit(4, 2), unit(4, 3), z(), z()]),
            rows(vec![z(), z(), unit(4, 0), unit(4, 1)]),
            rows(vec![z(), unit(4, 1), unit(4, 2), z()]),
            rows(vec![unit(4, 0), z(), z(), unit(4, 3)]),
        ];
        let expect_decoding = [
            rows(vec![unit(4, 0), unit(4, 2)]),
            rows(vec![unit(4, 1), unit(4, 3)]),
            rows(vec![unit(4, 0), unit(4, 1)]),
            rows(vec![unit(4, 2), unit(4, 3)]),
            rows(vec![unit(4, 1), unit(4, 2)]),
            rows(vec![unit(4, 0), unit(4, 3)]),
        ];
        for k in 0..6 {
            assert_eq!(scheme.user(k).caching, expect_caching[k], "caching {k}");
            assert_eq!(scheme.user(k).coding, expect_coding[k], "coding {k}");
            assert_eq!(scheme.user(k).decoding, expect_decoding[k], "decoding {k}");
        }
        assert!(scheme.verify().pass);

        // the (q=2, m=2, z=1) construction reproduces the reference six-user
        // scheme; its flat order lists the digit-sum users at v = q, the
        // reference lists them last
        let built = qary::build_scheme(qary::ConstructionParams::new(2, 2, 1).unwrap());
        let ref_caching = [
            rows(vec![unit(4, 0), unit(4, 2)]),
            rows(vec![unit(4, 1), unit(4, 3)]),
            rows(vec![unit(4, 0), unit(4, 1)]),
            rows(vec![unit(4, 2), unit(4, 3)]),
            rows(vec![vec![1, 1, 0, 0], vec![0, 0, 1, 1]]),
            rows(vec![vec![1, 0, 1, 0], vec![0, 1, 0, 1]]),
        ];
        let ref_coding = [
            rows(vec![unit(4, 1), unit(4, 1), unit(4, 3), unit(4, 3)]),
            rows(vec![unit(4, 0), unit(4, 0), unit(4, 2), unit(4, 2)]),
            rows(vec![unit(4, 2), unit(4, 3), unit(4, 2), unit(4, 3)]),
            rows(vec![unit(4, 0), unit(4, 1), unit(4, 0), unit(4, 1)]),
            rows(vec![unit(4, 0), z(), unit(4, 2), z()]),
            rows(vec![unit(4, 0), unit(4, 1), z(), z()]),
        ];
        let map = [0usize, 1, 4, 2, 3, 5]; // built index -> reference index
        for k in 0..6 {
            let got = built.user(k);
            assert_eq!(got.caching, ref_caching[map[k]], "built caching {k}");
            assert_eq!(got.coding, ref_coding[map[k]], "built coding {k}");
            // the reference decodes with its own caching matrix
            assert_eq!(got.decoding, ref_caching[map[k]], "built decoding {k}");
        }
        assert!(built.verify().pass);
    });
}

#[test]
fn criterion_3_construction_sweep() {
    criterion(3, "construction verifies and round-trips across the sweep", || {
        let started = Instant::now();
        for q in 2..=5usize {
            for z in 1..q {
                for m in 1..=3usize {
                    let params = qary::ConstructionParams::new(q, m, z).unwrap();
                    if params.packet_count() > 4096 {
                        continue;
                    }
                    let scheme = qary::build_scheme(params);
                    assert_eq!(scheme.users(), params.user_count());
                    assert_eq!(scheme.packet_count(), params.packet_count());
                    assert_eq!(scheme.cache_fraction(), params.cache_fraction());
                    assert_eq!(
                        scheme.nominal_rate(),
                        Ratio::new(params.rate() as u64, 1)
                    );
                    let report = scheme.verify();
                    assert!(
                        report.pass,
                        "(q,m,z)=({q},{m},{z}): {} failing pairs",
                        report.failed_pairs().count()
                    );
                    // N = K library, 20 seeded demands, bit-exact decode
                    let library = PacketLibrary::random(
                        2,
                        scheme.users(),
                        scheme.packet_count(),
                        8,
                        (q * 100 + m * 10 + z) as u64,
                    )
                    .unwrap();
                    let demands =
                        random_demands(scheme.users(), scheme.users(), 20, 0xACCE55 + q as u64);
                    let decodes = round_trip(&scheme, &library, &demands).unwrap();
                    assert_eq!(decodes, 20 * scheme.users(), "(q,m,z)=({q},{m},{z})");
                }
            }
        }
        let elapsed = started.elapsed();
        assert!(
            elapsed.as_secs_f64() < 120.0,
            "sweep took {elapsed:?}, budget 2 min"
        );
    });
}

#[test]
fn criterion_4_subspace_identity_suite() {
    criterion(4, "subspace identities exhaustive + mutation", || {
        for q in 2..=5usize {
            for m in 1..=3usize {
                let report = qary::check_subspace_identities(q, m);
                assert!(
                    report.pass,
                    "(q,m)=({q},{m}): {} failures of {} checks",
                    report.failures.len(),
                    report.checks
                );
            }
        }
        // mutated transfer matrices must be caught
        let (q, m) = (3usize, 2usize);
        let transposed = qary::transfer_matrix(q, m, 0, 0, 1).transpose();
        let e00 = qary::basis_matrix(q, m, 0, 0);
        let product = e00.matmul(&transposed).unwrap();
        assert!(!qary::basis_matrix(q, m, 0, 1).row_space_equals(&product));

        let wrong_target = qary::transfer_matrix(q, m, 0, 0, 2);
        let product = e00.matmul(&wrong_target).unwrap();
        assert!(!qary::basis_matrix(q, m, 0, 1).row_space_equals(&product));
    });
}

#[test]
fn criterion_5_concatenation() {
    criterion(5, "concatenation rates, selectors and verification", || {
        let base = qary::build_scheme(qary::ConstructionParams::new(2, 2, 1).unwrap());
        assert_eq!(base.users(), 6);
        for k2 in 1..=6usize {
            let extended = concat::extend_scheme(&base, k2).unwrap();
            let h1 = 6 / num_integer::gcd(6, k2);
            assert_eq!(extended.packet_count(), h1 * 4, "K2={k2}");
            assert_eq!(
                extended.nominal_rate(),
                Ratio::new((6 + k2) as u64, 6),
                "K2={k2}"
            );
            assert!(extended.verify().pass, "K2={k2}");
        }

        // selector transpose-product identity across the label sweep
        for k1 in 1..=12usize {
            for k2 in 1..=k1 {
                let labels = concat::label_matrices(k1, k2).unwrap();
                let id = FieldMatrix::identity(2, labels.h1).unwrap();
                for k in 0..k1 + k2 {
                    let g = concat::gamma(&labels, k, 2).unwrap();
                    assert_eq!(
                        g.transpose().matmul(&g).unwrap(),
                        id,
                        "K1={k1} K2={k2} k={k}"
                    );
                }
            }
        }

        // composition reaches every K in 7..=18 at exactly rate K/6
        for k in 7..=18usize {
            let composed = concat::compose_for_users(&base, k).unwrap();
            assert_eq!(composed.users(), k);
            assert_eq!(composed.nominal_rate(), Ratio::new(k as u64, 6), "K={k}");
        }
        // spot-verify the two composition paths end to end
        for k in [9usize, 13] {
            let composed = concat::compose_for_users(&base, k).unwrap();
            assert!(composed.verify().pass, "K={k}");
        }
    });
}

#[test]
fn criterion_6_storage_code_bridge() {
    criterion(6, "storage-code bridge on the committed fixture", || {
        let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/msr_gf3.txt");
        let text = std::fs::read_to_string(fixture).unwrap();
        let (code, subs) = msr::from_text(&text).unwrap();
        assert!(msr::verify_repair(&code, &subs).pass);
        assert!(msr::verify_mds(&code).unwrap());

        let scheme = msr::to_scheme(&code, &subs).unwrap();
        assert_eq!(scheme.cache_fraction(), Ratio::new(1, 2));
        assert_eq!(scheme.nominal_rate(), Ratio::new(1, 1));
        assert!(scheme.verify().pass);
        let library = PacketLibrary::random(3, 2, 2, 16, 606).unwrap();
        round_trip(&scheme, &library, &random_demands(2, 2, 10, 607)).unwrap();

        // zeroing any single subspace row must flip verification to fail
        for x in 0..code.parity() {
            for k in 0..code.systematic() {
                let mut mutated = subs.clone();
                *mutated.subspace_mut(&code, x, k) = FieldMatrix::zeros(3, 1, 2).unwrap();
                assert!(
                    !msr::verify_repair(&code, &mutated).pass,
                    "zeroed subspace ({x},{k}) went undetected"
                );
            }
        }
    });
}

#[test]
fn criterion_7_pipeline_equivalence() {
    criterion(7, "direct delivery equals the matrix pipeline", || {
        let mut corpus = vec![Pda::from_text(SAMPLE_PDA).unwrap()];
        for k in 2..=8usize {
            for t in 1..k {
                let pda = mn_pda(k, t).unwrap();
                if pda.packet_rows() * pda.users() <= 200 {
                    corpus.push(pda);
                }
            }
        }
        assert!(corpus.len() >= 20, "corpus unexpectedly small");
        for pda in &corpus {
            let users = pda.users();
            let scheme = pda.to_linear(2).unwrap();
            let library =
                PacketLibrary::random(2, users, pda.packet_rows(), 8, 0x04AC1E).unwrap();
            let caches = scheme.place(&library).unwrap();
            let decoders: Vec<_> = (0..users)
                .map(|k| scheme.decoder_for(k).unwrap())
                .collect();
            for demand in random_demands(users, users, 10, 4242) {
                let direct = pda.delivery(&library, &demand).unwrap();
                let broadcast = scheme.encode_broadcast(&library, &demand).unwrap();
                for k in 0..users {
                    let linear = decoders[k]
                        .decode(&scheme, &caches[k], &broadcast, &demand)
                        .unwrap();
                    assert_eq!(linear, direct.decoded[k], "user {k} demand {demand:?}");
                }
            }
        }
    });
}
