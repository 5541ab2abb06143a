//! Exact dense linear algebra over prime fields GF(p).
//!
//! [`FieldMatrix`] is the carrier for every caching, coding and decoding
//! matrix in this crate. All arithmetic is exact residue arithmetic; there is
//! no floating point anywhere. Matrices are immutable in normal use and all
//! operations are pure functions, so values can be shared freely across
//! threads.
//!
//! For the dominant p = 2 case, rank computations run on a bit-packed
//! representation; the packed and plain eliminations are checked against each
//! other in the test suite and must agree bit for bit.

use crate::error::{Error, Result};
use crate::io::{parse_exact, LineReader};

/// Moduli are restricted to primes that fit a symbol table, p <= 2^16.
pub const MAX_MODULUS: u32 = 1 << 16;

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

pub(crate) fn check_modulus(p: u32) -> Result<()> {
    if !(2..=MAX_MODULUS).contains(&p) || !is_prime(p) {
        return Err(Error::InvalidModulus(p as u64));
    }
    Ok(())
}

/// Multiplicative inverse table for GF(p); `inv[0]` is unused and set to 0.
fn inverse_table(p: u32) -> Vec<u32> {
    let m = p as u64;
    let mut inv = vec![0u32; p as usize];
    if p > 1 {
        inv[1] = 1;
    }
    for a in 2..p as usize {
        // inv[a] = -(p / a) * inv[p mod a]
        let q = m / a as u64;
        let r = (m % a as u64) as usize;
        inv[a] = ((m - q * inv[r] as u64 % m) % m) as u32;
    }
    inv
}

/// Dense row-major matrix over GF(p) with entries stored as residues.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    modulus: u32,
    entries: Vec<u32>,
}

/// Outcome of a full Gauss-Jordan reduction: `transform * original = rref`,
/// with `pivots` holding the pivot column of each nonzero rref row.
pub(crate) struct Echelon {
    pub rref: FieldMatrix,
    pub transform: FieldMatrix,
    pub pivots: Vec<usize>,
}

impl Echelon {
    /// Finds `D` with `D * original = target` for the matrix this reduction
    /// came from; [`Error::Infeasible`] when a target row escapes the row
    /// space.
    pub fn solve(&self, target: &FieldMatrix) -> Result<FieldMatrix> {
        let modulus = self.rref.modulus;
        if modulus != target.modulus {
            return Err(Error::ModulusMismatch(modulus, target.modulus));
        }
        if self.rref.cols != target.cols {
            return Err(Error::dims(format!(
                "solve: column counts differ ({} vs {})",
                self.rref.cols, target.cols
            )));
        }
        let p = modulus as u64;
        let source_rows = self.rref.rows;
        let mut d = FieldMatrix::raw_zeros(modulus, target.rows, source_rows);
        let mut residual = vec![0u32; target.cols];
        for i in 0..target.rows {
            residual.copy_from_slice(target.row(i));
            let mut coeffs = Vec::with_capacity(self.pivots.len());
            for (idx, &pcol) in self.pivots.iter().enumerate() {
                let c = residual[pcol] as u64;
                coeffs.push(c);
                if c != 0 {
                    let neg = p - c;
                    let basis = self.rref.row(idx);
                    for (rj, &bj) in residual.iter_mut().zip(basis) {
                        *rj = ((*rj as u64 + neg * bj as u64) % p) as u32;
                    }
                }
            }
            if residual.iter().any(|&v| v != 0) {
                return Err(Error::Infeasible);
            }
            let drow = &mut d.entries[i * source_rows..(i + 1) * source_rows];
            for (idx, &c) in coeffs.iter().enumerate() {
                if c != 0 {
                    for (dj, &tj) in drow.iter_mut().zip(self.transform.row(idx)) {
                        *dj = ((*dj as u64 + c * tj as u64) % p) as u32;
                    }
                }
            }
        }
        Ok(d)
    }
}

impl FieldMatrix {
    fn raw(modulus: u32, rows: usize, cols: usize, entries: Vec<u32>) -> Self {
        debug_assert_eq!(entries.len(), rows * cols);
        FieldMatrix {
            rows,
            cols,
            modulus,
            entries,
        }
    }

    fn raw_zeros(modulus: u32, rows: usize, cols: usize) -> Self {
        Self::raw(modulus, rows, cols, vec![0; rows * cols])
    }

    pub fn zeros(modulus: u32, rows: usize, cols: usize) -> Result<Self> {
        check_modulus(modulus)?;
        Ok(Self::raw_zeros(modulus, rows, cols))
    }

    pub fn identity(modulus: u32, n: usize) -> Result<Self> {
        let mut m = Self::zeros(modulus, n, n)?;
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        Ok(m)
    }

    /// Row vector of length `len` with a single 1 in position `s`.
    pub fn unit_row(modulus: u32, len: usize, s: usize) -> Result<Self> {
        if s >= len {
            return Err(Error::dims(format!("unit position {s} out of range for length {len}")));
        }
        let mut m = Self::zeros(modulus, 1, len)?;
        m.entries[s] = 1;
        Ok(m)
    }

    pub fn from_entries(modulus: u32, rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self> {
        check_modulus(modulus)?;
        if entries.len() != rows * cols {
            return Err(Error::dims(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        for &v in &entries {
            if v >= modulus {
                return Err(Error::EntryOutOfRange { value: v, modulus });
            }
        }
        Ok(Self::raw(modulus, rows, cols, entries))
    }

    pub fn from_rows(modulus: u32, rows: Vec<Vec<u32>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut entries = Vec::with_capacity(nrows * ncols);
        for row in &rows {
            if row.len() != ncols {
                return Err(Error::dims("rows have differing lengths".to_string()));
            }
            entries.extend_from_slice(row);
        }
        Self::from_entries(modulus, nrows, ncols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: u32) {
        assert!(i < self.rows && j < self.cols, "index ({i},{j}) out of bounds");
        assert!(value < self.modulus, "value {value} not a residue mod {}", self.modulus);
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        assert!(i < self.rows, "row {i} out of bounds");
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0)
    }

    pub fn row_is_zero(&self, i: usize) -> bool {
        self.row(i).iter().all(|&v| v == 0)
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut out = Self::raw_zeros(self.modulus, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.entries[j * self.rows + i] = self.entries[i * self.cols + j];
            }
        }
        out
    }

    /// Row rank by exact Gaussian elimination.
    pub fn rank(&self) -> usize {
        if self.modulus == 2 {
            self.rank_bitpacked()
        } else {
            self.rank_dense()
        }
    }

    fn rank_dense(&self) -> usize {
        let p = self.modulus as u64;
        let inv = inverse_table(self.modulus);
        let cols = self.cols;
        let mut a = self.entries.clone();
        let mut rank = 0usize;
        for col in 0..cols {
            if rank == self.rows {
                break;
            }
            let Some(piv) = (rank..self.rows).find(|&r| a[r * cols + col] != 0) else {
                continue;
            };
            if piv != rank {
                for j in col..cols {
                    a.swap(piv * cols + j, rank * cols + j);
                }
            }
            let pv_inv = inv[a[rank * cols + col] as usize] as u64;
            if pv_inv != 1 {
                for j in col..cols {
                    a[rank * cols + j] = (a[rank * cols + j] as u64 * pv_inv % p) as u32;
                }
            }
            for r in rank + 1..self.rows {
                let f = a[r * cols + col] as u64;
                if f != 0 {
                    let neg = p - f;
                    for j in col..cols {
                        a[r * cols + j] =
                            ((a[r * cols + j] as u64 + neg * a[rank * cols + j] as u64) % p) as u32;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// GF(2) rank on 64-bit packed rows.
    fn rank_bitpacked(&self) -> usize {
        debug_assert_eq!(self.modulus, 2);
        let words = self.cols.div_ceil(64);
        // basis rows kept sorted by leading column
        let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
        for i in 0..self.rows {
            let mut row = self.pack_row(i, words);
            while let Some(lead) = leading_bit(&row) {
                match basis.binary_search_by_key(&lead, |e| e.0) {
                    Ok(idx) => {
                        let (_, pivot) = &basis[idx];
                        for (w, pw) in row.iter_mut().zip(pivot) {
                            *w ^= *pw;
                        }
                    }
                    Err(idx) => {
                        basis.insert(idx, (lead, row));
                        break;
                    }
                }
            }
        }
        basis.len()
    }

    fn pack_row(&self, i: usize, words: usize) -> Vec<u64> {
        let mut out = vec![0u64; words];
        for (j, &v) in self.row(i).iter().enumerate() {
            if v != 0 {
                out[j / 64] |= 1u64 << (j % 64);
            }
        }
        out
    }

    /// Gauss-Jordan reduction with a recorded row transform.
    pub(crate) fn reduced_echelon(&self) -> Echelon {
        let p = self.modulus as u64;
        let inv = inverse_table(self.modulus);
        let cols = self.cols;
        let mut a = self.entries.clone();
        let mut t = FieldMatrix::identity(self.modulus, self.rows)
            .expect("modulus already validated")
            .entries;
        let trows = self.rows;
        let mut pivots = Vec::new();
        let mut rank = 0usize;
        for col in 0..cols {
            if rank == self.rows {
                break;
            }
            let Some(piv) = (rank..self.rows).find(|&r| a[r * cols + col] != 0) else {
                continue;
            };
            if piv != rank {
                for j in 0..cols {
                    a.swap(piv * cols + j, rank * cols + j);
                }
                for j in 0..trows {
                    t.swap(piv * trows + j, rank * trows + j);
                }
            }
            let pv_inv = inv[a[rank * cols + col] as usize] as u64;
            if pv_inv != 1 {
                for j in 0..cols {
                    a[rank * cols + j] = (a[rank * cols + j] as u64 * pv_inv % p) as u32;
                }
                for j in 0..trows {
                    t[rank * trows + j] = (t[rank * trows + j] as u64 * pv_inv % p) as u32;
                }
            }
            for r in 0..self.rows {
                if r == rank {
                    continue;
                }
                let f = a[r * cols + col] as u64;
                if f != 0 {
                    let neg = p - f;
                    for j in 0..cols {
                        a[r * cols + j] =
                            ((a[r * cols + j] as u64 + neg * a[rank * cols + j] as u64) % p) as u32;
                    }
                    for j in 0..trows {
                        t[r * trows + j] =
                            ((t[r * trows + j] as u64 + neg * t[rank * trows + j] as u64) % p) as u32;
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }
        Echelon {
            rref: FieldMatrix::raw(self.modulus, self.rows, cols, a),
            transform: FieldMatrix::raw(self.modulus, self.rows, trows, t),
            pivots,
        }
    }

    /// Inverse of a square full-rank matrix.
    pub fn invert(&self) -> Result<FieldMatrix> {
        if self.rows != self.cols {
            return Err(Error::dims(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let e = self.reduced_echelon();
        if e.pivots.len() == self.rows {
            Ok(e.transform)
        } else {
            Err(Error::Singular)
        }
    }

    /// Finds `D` with `D * self = target`, failing with [`Error::Infeasible`]
    /// when some row of `target` lies outside the row space of `self`.
    ///
    /// Any valid `D` is acceptable to callers; this implementation expresses
    /// each target row in the reduced-echelon basis of `self`. Callers that
    /// solve against one matrix repeatedly should reduce once and reuse
    /// [`Echelon::solve`].
    pub fn solve_left(&self, target: &FieldMatrix) -> Result<FieldMatrix> {
        self.reduced_echelon().solve(target)
    }

    pub fn matmul(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "matmul: {}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let p = self.modulus as u64;
        let mut out = FieldMatrix::raw_zeros(self.modulus, self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.entries[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k] as u64;
                if a == 0 {
                    continue;
                }
                let brow = other.row(k);
                for (oj, &bj) in orow.iter_mut().zip(brow) {
                    *oj = ((*oj as u64 + a * bj as u64) % p) as u32;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product: block (i, j) of the result is `self[i,j] * other`.
    pub fn kron(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.modulus, other.modulus));
        }
        let p = self.modulus as u64;
        let (rb, cb) = (other.rows, other.cols);
        let mut out = FieldMatrix::raw_zeros(self.modulus, self.rows * rb, self.cols * cb);
        let ocols = out.cols;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.entries[i * self.cols + j] as u64;
                if a == 0 {
                    continue;
                }
                for ib in 0..rb {
                    let dst = (i * rb + ib) * ocols + j * cb;
                    let src = other.row(ib);
                    for jb in 0..cb {
                        out.entries[dst + jb] = (a * src[jb] as u64 % p) as u32;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Block-diagonal assembly; dimensions add, off-diagonal blocks are zero.
    pub fn block_diag(modulus: u32, blocks: &[FieldMatrix]) -> Result<FieldMatrix> {
        check_modulus(modulus)?;
        for b in blocks {
            if b.modulus != modulus {
                return Err(Error::ModulusMismatch(modulus, b.modulus));
            }
        }
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = FieldMatrix::raw_zeros(modulus, rows, cols);
        let (mut r0, mut c0) = (0usize, 0usize);
        for b in blocks {
            for i in 0..b.rows {
                let dst = (r0 + i) * cols + c0;
                out.entries[dst..dst + b.cols].copy_from_slice(b.row(i));
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        Ok(out)
    }

    /// Vertical concatenation; all blocks must share the column count.
    pub fn stack_rows(modulus: u32, blocks: &[FieldMatrix]) -> Result<FieldMatrix> {
        check_modulus(modulus)?;
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut rows = 0usize;
        for b in blocks {
            if b.modulus != modulus {
                return Err(Error::ModulusMismatch(modulus, b.modulus));
            }
            if b.cols != cols {
                return Err(Error::dims(format!(
                    "stack_rows: column counts differ ({} vs {})",
                    b.cols, cols
                )));
            }
            rows += b.rows;
        }
        let mut entries = Vec::with_capacity(rows * cols);
        for b in blocks {
            entries.extend_from_slice(&b.entries);
        }
        Ok(FieldMatrix::raw(modulus, rows, cols, entries))
    }

    /// Stacks `self` on top of `other`.
    pub fn stack_with(&self, other: &FieldMatrix) -> Result<FieldMatrix> {
        Self::stack_rows(self.modulus, &[self.clone(), other.clone()])
    }

    /// True iff every row of `other` lies in the row space of `self`.
    pub fn row_space_contains(&self, other: &FieldMatrix) -> bool {
        assert_eq!(self.modulus, other.modulus, "row_space_contains: modulus mismatch");
        assert_eq!(self.cols, other.cols, "row_space_contains: column mismatch");
        let stacked = self
            .stack_with(other)
            .expect("dimensions checked above");
        stacked.rank() == self.rank()
    }

    /// True iff `self` and `other` span the same row space.
    pub fn row_space_equals(&self, other: &FieldMatrix) -> bool {
        self.row_space_contains(other) && other.row_space_contains(self)
    }

    /// Applies the matrix to a file viewed as a column of packet blocks:
    /// output block i is the mod-p combination of the input blocks with
    /// coefficients from row i.
    pub fn apply(&self, file: &[PacketBlock]) -> Result<Vec<PacketBlock>> {
        if file.len() != self.cols {
            return Err(Error::dims(format!(
                "apply: matrix has {} columns but file has {} blocks",
                self.cols,
                file.len()
            )));
        }
        let block_len = file.first().map_or(0, |b| b.len());
        for b in file {
            if b.len() != block_len {
                return Err(Error::dims("apply: blocks have differing lengths".to_string()));
            }
        }
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = PacketBlock::zeros(block_len);
            for (j, block) in file.iter().enumerate() {
                let c = self.entries[i * self.cols + j];
                if c != 0 {
                    acc.add_scaled(block, c, self.modulus);
                }
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Text form: `p rows cols` header, then one line of residues per row.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        self.write_into(&mut out);
        out
    }

    pub(crate) fn write_into(&self, out: &mut String) {
        out.push_str(&format!("{} {} {}\n", self.modulus, self.rows, self.cols));
        for i in 0..self.rows {
            let row = self.row(i);
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
    }

    pub fn from_text(text: &str) -> Result<FieldMatrix> {
        let mut reader = LineReader::new(text);
        let m = Self::read_from(&mut reader)?;
        if let Some(extra) = reader.next_nonempty() {
            return Err(reader.error(format!("trailing content `{extra}` after matrix")));
        }
        Ok(m)
    }

    pub(crate) fn read_from(reader: &mut LineReader) -> Result<FieldMatrix> {
        let header = reader.expect_nonempty("matrix header `p rows cols`")?;
        let h: Vec<u64> = parse_exact(header, 3, reader.line_no(), "matrix header `p rows cols`")?;
        let (p, rows, cols) = (h[0], h[1] as usize, h[2] as usize);
        if p > MAX_MODULUS as u64 {
            return Err(Error::InvalidModulus(p));
        }
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = reader
                .next_line()
                .ok_or_else(|| reader.error("unexpected end of input inside matrix body"))?;
            let row: Vec<u32> = parse_exact(line, cols, reader.line_no(), "matrix row")?;
            entries.extend_from_slice(&row);
        }
        FieldMatrix::from_entries(p as u32, rows, cols, entries)
    }
}

/// Fixed-length block of GF(p) symbols; the unit of payload a single matrix
/// row produces. All blocks in one library share the modulus and length.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PacketBlock {
    symbols: Vec<u32>,
}

impl PacketBlock {
    pub fn new(modulus: u32, symbols: Vec<u32>) -> Result<Self> {
        for &s in &symbols {
            if s >= modulus {
                return Err(Error::EntryOutOfRange {
                    value: s,
                    modulus,
                });
            }
        }
        Ok(PacketBlock { symbols })
    }

    pub fn zeros(len: usize) -> Self {
        PacketBlock {
            symbols: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn is_zero(&self) -> bool {
        self.symbols.iter().all(|&s| s == 0)
    }

    /// `self += coeff * other` symbol-wise mod p.
    pub fn add_scaled(&mut self, other: &PacketBlock, coeff: u32, modulus: u32) {
        debug_assert_eq!(self.len(), other.len());
        let p = modulus as u64;
        let c = coeff as u64;
        for (a, &b) in self.symbols.iter_mut().zip(&other.symbols) {
            *a = ((*a as u64 + c * b as u64) % p) as u32;
        }
    }

    /// `self -= other` symbol-wise mod p.
    pub fn sub_assign(&mut self, other: &PacketBlock, modulus: u32) {
        self.add_scaled(other, modulus - 1, modulus);
    }
}

fn leading_bit(row: &[u64]) -> Option<usize> {
    for (w, &word) in row.iter().enumerate() {
        if word != 0 {
            return Some(w * 64 + word.trailing_zeros() as usize);
        }
    }
    None
}
