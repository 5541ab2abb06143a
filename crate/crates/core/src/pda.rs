//! Placement delivery arrays: validation, the classic binomial construction,
//! direct delivery execution, and conversion to the linear representation.
//!
//! A (K, F, Z, S) array over {*, 0..S-1} encodes an uncoded placement (a star
//! at (j, k) means user k caches packet j of every file) and S broadcast
//! rounds (all cells holding the integer s are served by one coded sum).

use num_integer::binomial;

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, PacketBlock};
use crate::io::{parse_exact, LineReader};
use crate::scheme::{LinearScheme, PacketLibrary, UserMatrices};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PdaCell {
    Star,
    Int(usize),
}

/// F x K placement delivery array with parameters (K, F, Z, S).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Pda {
    k: usize,
    f: usize,
    z: usize,
    s: usize,
    cells: Vec<PdaCell>, // row-major, F rows of K cells
}

/// One structural violation found by [`Pda::validate`]. `condition` names the
/// defining property that failed: C1 (star count), C2 (integer coverage) or
/// C3 (the 2x2 sub-array rule).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PdaViolation {
    pub condition: &'static str,
    pub detail: String,
    pub coordinates: Vec<(usize, usize)>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PdaReport {
    pub valid: bool,
    pub violations: Vec<PdaViolation>,
}

/// One broadcast slot of the direct delivery: the coded block plus the
/// (user, packet-row) terms it sums.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Transmission {
    pub symbol: usize,
    pub terms: Vec<(usize, usize)>,
    pub block: PacketBlock,
}

/// Per-user cache contents under the star placement: `rows` lists the packet
/// indices cached, `per_file[n]` holds those packets of file n in row order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StarCache {
    pub rows: Vec<usize>,
    pub per_file: Vec<Vec<PacketBlock>>,
}

/// Full record of one delivery round-trip.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PdaDelivery {
    pub caches: Vec<StarCache>,
    pub transmissions: Vec<Transmission>,
    pub decoded: Vec<Vec<PacketBlock>>,
}

impl Pda {
    pub fn new(k: usize, f: usize, z: usize, s: usize, cells: Vec<PdaCell>) -> Result<Self> {
        if k == 0 || f == 0 {
            return Err(Error::InvalidParameter("PDA needs K >= 1 and F >= 1".into()));
        }
        if cells.len() != f * k {
            return Err(Error::dims(format!(
                "PDA body has {} cells, expected {}",
                cells.len(),
                f * k
            )));
        }
        for (idx, cell) in cells.iter().enumerate() {
            if let PdaCell::Int(v) = cell {
                if *v >= s {
                    return Err(Error::InvalidParameter(format!(
                        "cell ({}, {}) holds {} but S = {}",
                        idx / k,
                        idx % k,
                        v,
                        s
                    )));
                }
            }
        }
        Ok(Pda { k, f, z, s, cells })
    }

    pub fn users(&self) -> usize {
        self.k
    }

    pub fn packet_rows(&self) -> usize {
        self.f
    }

    pub fn stars_per_column(&self) -> usize {
        self.z
    }

    pub fn symbols(&self) -> usize {
        self.s
    }

    pub fn cell(&self, j: usize, k: usize) -> PdaCell {
        assert!(j < self.f && k < self.k, "cell ({j},{k}) out of bounds");
        self.cells[j * self.k + k]
    }

    /// Checks the three defining conditions and reports every violation.
    pub fn validate(&self) -> PdaReport {
        let mut violations = Vec::new();

        // C1: exactly Z stars per column
        for k in 0..self.k {
            let stars = (0..self.f)
                .filter(|&j| self.cell(j, k) == PdaCell::Star)
                .count();
            if stars != self.z {
                violations.push(PdaViolation {
                    condition: "C1",
                    detail: format!("column {k} holds {stars} stars, expected {}", self.z),
                    coordinates: vec![],
                });
            }
        }

        // group integer occurrences by symbol
        let mut occurrences: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.s];
        for j in 0..self.f {
            for k in 0..self.k {
                if let PdaCell::Int(v) = self.cell(j, k) {
                    occurrences[v].push((j, k));
                }
            }
        }

        // C2: every integer occurs at least once
        for (sym, occ) in occurrences.iter().enumerate() {
            if occ.is_empty() {
                violations.push(PdaViolation {
                    condition: "C2",
                    detail: format!("integer {sym} never occurs"),
                    coordinates: vec![],
                });
            }
        }

        // C3: repeated integers sit in distinct rows and columns, with stars
        // at the opposite corners of the 2x2 sub-array
        for (sym, occ) in occurrences.iter().enumerate() {
            for a in 0..occ.len() {
                for b in a + 1..occ.len() {
                    let (j1, k1) = occ[a];
                    let (j2, k2) = occ[b];
                    if j1 == j2 || k1 == k2 {
                        violations.push(PdaViolation {
                            condition: "C3",
                            detail: format!("integer {sym} repeats in one row or column"),
                            coordinates: vec![(j1, k1), (j2, k2)],
                        });
                        continue;
                    }
                    if self.cell(j1, k2) != PdaCell::Star || self.cell(j2, k1) != PdaCell::Star {
                        violations.push(PdaViolation {
                            condition: "C3",
                            detail: format!(
                                "integer {sym} at ({j1},{k1}) and ({j2},{k2}) lacks opposite stars"
                            ),
                            coordinates: vec![(j1, k1), (j2, k2)],
                        });
                    }
                }
            }
        }

        PdaReport {
            valid: violations.is_empty(),
            violations,
        }
    }

    /// Runs placement and delivery directly on the array: caches hold every
    /// starred packet of every file, one coded transmission is sent per
    /// integer, and every user reconstructs its requested file.
    pub fn delivery(&self, library: &PacketLibrary, demand: &[usize]) -> Result<PdaDelivery> {
        if demand.len() != self.k {
            return Err(Error::dims(format!(
                "demand has {} entries for {} users",
                demand.len(),
                self.k
            )));
        }
        for &d in demand {
            if d >= library.file_count() {
                return Err(Error::DemandOutOfRange {
                    demand: d,
                    files: library.file_count(),
                });
            }
        }
        if library.packets_per_file() != self.f {
            return Err(Error::dims(format!(
                "library files have {} packets, PDA has {} rows",
                library.packets_per_file(),
                self.f
            )));
        }
        let report = self.validate();
        if !report.valid {
            return Err(Error::InvalidParameter(format!(
                "cannot run delivery on an invalid PDA ({} violations)",
                report.violations.len()
            )));
        }
        let p = library.modulus();

        let caches: Vec<StarCache> = (0..self.k)
            .map(|k| {
                let rows: Vec<usize> = (0..self.f)
                    .filter(|&j| self.cell(j, k) == PdaCell::Star)
                    .collect();
                let per_file = (0..library.file_count())
                    .map(|n| rows.iter().map(|&j| library.file(n)[j].clone()).collect())
                    .collect();
                StarCache { rows, per_file }
            })
            .collect();

        let mut transmissions = Vec::with_capacity(self.s);
        for sym in 0..self.s {
            let mut terms = Vec::new();
            let mut block = PacketBlock::zeros(library.block_len());
            for j in 0..self.f {
                for k in 0..self.k {
                    if self.cell(j, k) == PdaCell::Int(sym) {
                        terms.push((k, j));
                        block.add_scaled(&library.file(demand[k])[j], 1, p);
                    }
                }
            }
            transmissions.push(Transmission {
                symbol: sym,
                terms,
                block,
            });
        }

        let mut decoded = Vec::with_capacity(self.k);
        for k in 0..self.k {
            let cache = &caches[k];
            let mut file = Vec::with_capacity(self.f);
            for j in 0..self.f {
                match self.cell(j, k) {
                    PdaCell::Star => {
                        let idx = cache.rows.iter().position(|&r| r == j).expect("starred row");
                        file.push(cache.per_file[demand[k]][idx].clone());
                    }
                    PdaCell::Int(sym) => {
                        // peel every cached term off the coded slot
                        let tx = &transmissions[sym];
                        let mut block = tx.block.clone();
                        for &(k2, j2) in &tx.terms {
                            if (k2, j2) == (k, j) {
                                continue;
                            }
                            let idx = cache
                                .rows
                                .iter()
                                .position(|&r| r == j2)
                                .expect("C3 guarantees the peer packet is cached");
                            block.sub_assign(&cache.per_file[demand[k2]][idx], p);
                        }
                        file.push(block);
                    }
                }
            }
            decoded.push(file);
        }

        Ok(PdaDelivery {
            caches,
            transmissions,
            decoded,
        })
    }

    /// Converts the array to caching/coding/decoding matrices over GF(p).
    ///
    /// Caching rows select the starred packets; coding row s of user k sums
    /// the packets this user contributes to slot s; decoding rows select the
    /// slots user k actually appears in (the nonzero coding rows), of which
    /// there are exactly F - Z.
    pub fn to_linear(&self, modulus: u32) -> Result<LinearScheme> {
        let report = self.validate();
        if !report.valid {
            return Err(Error::InvalidParameter(format!(
                "cannot convert an invalid PDA ({} violations)",
                report.violations.len()
            )));
        }
        let mut users = Vec::with_capacity(self.k);
        for k in 0..self.k {
            let mut caching = FieldMatrix::zeros(modulus, self.z, self.f)?;
            let mut row = 0;
            for j in 0..self.f {
                if self.cell(j, k) == PdaCell::Star {
                    caching.set(row, j, 1);
                    row += 1;
                }
            }

            let mut coding = FieldMatrix::zeros(modulus, self.s, self.f)?;
            for j in 0..self.f {
                if let PdaCell::Int(sym) = self.cell(j, k) {
                    coding.set(sym, j, 1);
                }
            }

            let nonzero_rows: Vec<usize> =
                (0..self.s).filter(|&r| !coding.row_is_zero(r)).collect();
            let mut decoding = FieldMatrix::zeros(modulus, nonzero_rows.len(), self.s)?;
            for (i, &r) in nonzero_rows.iter().enumerate() {
                decoding.set(i, r, 1);
            }

            users.push(UserMatrices {
                caching,
                coding,
                decoding,
            });
        }
        LinearScheme::new(
            modulus,
            self.f,
            num_rational::Ratio::new(self.z as u64, self.f as u64),
            num_rational::Ratio::new(self.s as u64, self.f as u64),
            users,
        )
    }

    /// Text form: `K F Z S` header, then F rows of K tokens (`*` or integer).
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {} {} {}\n", self.k, self.f, self.z, self.s);
        for j in 0..self.f {
            for k in 0..self.k {
                if k > 0 {
                    out.push(' ');
                }
                match self.cell(j, k) {
                    PdaCell::Star => out.push('*'),
                    PdaCell::Int(v) => out.push_str(&v.to_string()),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Pda> {
        let mut reader = LineReader::new(text);
        let header = reader.expect_nonempty("PDA header `K F Z S`")?;
        let h: Vec<usize> = parse_exact(header, 4, reader.line_no(), "PDA header `K F Z S`")?;
        let (k, f, z, s) = (h[0], h[1], h[2], h[3]);
        let mut cells = Vec::with_capacity(f * k);
        for _ in 0..f {
            let line = reader.expect_nonempty("PDA row")?;
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != k {
                return Err(reader.error(format!("expected {k} cells, found {}", tokens.len())));
            }
            for tok in tokens {
                if tok == "*" {
                    cells.push(PdaCell::Star);
                } else {
                    let v: usize = tok
                        .parse()
                        .map_err(|_| reader.error(format!("invalid cell `{tok}`")))?;
                    cells.push(PdaCell::Int(v));
                }
            }
        }
        if let Some(extra) = reader.next_nonempty() {
            return Err(reader.error(format!("trailing content `{extra}` after PDA")));
        }
        Pda::new(k, f, z, s, cells)
    }
}

/// All t-subsets of [0, n) in colexicographic order.
fn subsets_colex(n: usize, t: usize) -> Vec<Vec<usize>> {
    if t == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for top in t - 1..n {
        for mut s in subsets_colex(top, t - 1) {
            s.push(top);
            out.push(s);
        }
    }
    out
}

/// Colex rank of a sorted subset: sum of C(a_i, i + 1).
fn colex_rank(subset: &[usize]) -> usize {
    subset
        .iter()
        .enumerate()
        .map(|(i, &a)| binomial(a, i + 1))
        .sum()
}

/// The binomial-coefficient PDA underlying the classic caching scheme:
/// rows are the t-subsets of users, a star marks membership, and each
/// (t+1)-subset labels one delivery round.
///
/// Parameters: F = C(K, t), Z = C(K-1, t-1), S = C(K, t+1).
pub fn mn_pda(k: usize, t: usize) -> Result<Pda> {
    if t == 0 || t >= k {
        return Err(Error::InvalidParameter(format!(
            "mn_pda requires 0 < t < K, got t = {t}, K = {k}"
        )));
    }
    let f = binomial(k, t);
    let z = binomial(k - 1, t - 1);
    let s = binomial(k, t + 1);
    let rows = subsets_colex(k, t);
    debug_assert_eq!(rows.len(), f);
    let mut cells = Vec::with_capacity(f * k);
    for row in &rows {
        for col in 0..k {
            if row.binary_search(&col).is_ok() {
                cells.push(PdaCell::Star);
            } else {
                let mut with = row.clone();
                let pos = with.binary_search(&col).unwrap_err();
                with.insert(pos, col);
                cells.push(PdaCell::Int(colex_rank(&with)));
            }
        }
    }
    Pda::new(k, f, z, s, cells)
}
