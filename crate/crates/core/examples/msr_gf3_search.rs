//! Exhaustive search for the smallest repair-optimal code fixture: K = 2
//! systematic nodes, r = 2 parity nodes, node size F = 2 over GF(3), with
//! parity row 0 fixed to identity encoders.
//!
//! Scans all invertible second-row encoder pairs (A_{1,0}, A_{1,1}) that
//! keep the code MDS, and all nonzero repair rows, printing the first
//! combination that passes both the repair and erasure checks in the code
//! file format. The committed fixture at tests/data/msr_gf3.txt is the
//! output of this program.
//!
//! Run with: cargo run -p lcc-core --example msr_gf3_search

use lcc_core::field::FieldMatrix;
use lcc_core::msr::{self, MsrCode, RepairSubspaces};

fn all_2x2_gf3() -> Vec<FieldMatrix> {
    let mut out = Vec::new();
    for a in 0..3u32 {
        for b in 0..3u32 {
            for c in 0..3u32 {
                for d in 0..3u32 {
                    out.push(FieldMatrix::from_entries(3, 2, 2, vec![a, b, c, d]).unwrap());
                }
            }
        }
    }
    out
}

fn nonzero_rows_gf3() -> Vec<FieldMatrix> {
    let mut out = Vec::new();
    for a in 0..3u32 {
        for b in 0..3u32 {
            if (a, b) != (0, 0) {
                out.push(FieldMatrix::from_entries(3, 1, 2, vec![a, b]).unwrap());
            }
        }
    }
    out
}

fn main() {
    let id = FieldMatrix::identity(3, 2).unwrap();
    let invertible: Vec<FieldMatrix> = all_2x2_gf3()
        .into_iter()
        .filter(|m| m.rank() == 2)
        .collect();
    let rows = nonzero_rows_gf3();
    let mut tried = 0u64;

    for a10 in &invertible {
        for a11 in &invertible {
            let code = MsrCode::new(
                3,
                2,
                2,
                2,
                vec![id.clone(), id.clone(), a10.clone(), a11.clone()],
            )
            .unwrap();
            if !msr::verify_mds(&code).unwrap() {
                continue;
            }
            for s00 in &rows {
                for s01 in &rows {
                    for s10 in &rows {
                        for s11 in &rows {
                            tried += 1;
                            let subs = RepairSubspaces::new(
                                &code,
                                vec![s00.clone(), s01.clone(), s10.clone(), s11.clone()],
                            )
                            .unwrap();
                            if msr::verify_repair(&code, &subs).pass {
                                eprintln!("found after {tried} candidates");
                                print!("{}", msr::to_text(&code, &subs));
                                return;
                            }
                        }
                    }
                }
            }
        }
    }
    eprintln!("no solution found after {tried} candidates");
    std::process::exit(1);
}
