//! The general linear caching model: per-user caching, coding and decoding
//! matrices, the rank-condition verifier, and the full placement / broadcast
//! / decode engine.
//!
//! A scheme is decodable iff for every user pair (k, k') the stack of S_k on
//! S'_k A_{k'} has rank F when k = k' and rank FM/N otherwise. The verifier
//! checks that rank condition and its subspace reformulation (containment
//! for k != k', full span for k = k') and insists the two agree.

use num_rational::Ratio;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{FieldMatrix, PacketBlock};
use crate::io::{parse_exact, LineReader};

/// The three linear maps attached to one user.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UserMatrices {
    /// (FM/N) x F: applied to every file during placement.
    pub caching: FieldMatrix,
    /// (RF) x F: this user's contribution to the broadcast signal.
    pub coding: FieldMatrix,
    /// (F - FM/N) x (RF): extracts this user's missing packets from the signal.
    pub decoding: FieldMatrix,
}

/// An F-division scheme for K users over GF(p) with memory ratio M/N and
/// nominal rate R. Immutable after construction.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearScheme {
    modulus: u32,
    packet_count: usize,
    cache_fraction: Ratio<u64>,
    nominal_rate: Ratio<u64>,
    users: Vec<UserMatrices>,
}

/// Rank observed for one ordered user pair.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct PairCheck {
    pub user: usize,
    pub other: usize,
    pub observed_rank: usize,
    pub expected_rank: usize,
    pub pass: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MatrixRole {
    Caching,
    Decoding,
}

/// A caching or decoding matrix that is not full row rank.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct RankDefect {
    pub user: usize,
    pub role: MatrixRole,
    pub rank: usize,
    pub rows: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VerifyReport {
    pub pass: bool,
    /// Expected stack rank for k = k' (the packet count F).
    pub expected_self_rank: usize,
    /// Expected stack rank for k != k' (the cache rows FM/N).
    pub expected_cross_rank: usize,
    pub pairs: Vec<PairCheck>,
    pub rank_defects: Vec<RankDefect>,
}

impl VerifyReport {
    pub fn failed_pairs(&self) -> impl Iterator<Item = &PairCheck> {
        self.pairs.iter().filter(|p| !p.pass)
    }
}

/// N files of F packet blocks each, all sharing modulus and block length.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PacketLibrary {
    modulus: u32,
    packets_per_file: usize,
    block_len: usize,
    files: Vec<Vec<PacketBlock>>,
}

impl PacketLibrary {
    pub fn new(modulus: u32, files: Vec<Vec<PacketBlock>>) -> Result<Self> {
        crate::field::check_modulus(modulus)?;
        let packets_per_file = files.first().map_or(0, |f| f.len());
        let block_len = files
            .first()
            .and_then(|f| f.first())
            .map_or(0, |b| b.len());
        for file in &files {
            if file.len() != packets_per_file {
                return Err(Error::dims("library files have differing packet counts"));
            }
            for block in file {
                if block.len() != block_len {
                    return Err(Error::dims("library blocks have differing lengths"));
                }
                if block.symbols().iter().any(|&s| s >= modulus) {
                    return Err(Error::EntryOutOfRange {
                        value: *block.symbols().iter().find(|&&s| s >= modulus).unwrap(),
                        modulus,
                    });
                }
            }
        }
        Ok(PacketLibrary {
            modulus,
            packets_per_file,
            block_len,
            files,
        })
    }

    /// Deterministic synthetic library: every symbol is the next byte of a
    /// seeded stream reduced mod p, so runs reproduce across platforms.
    pub fn random(
        modulus: u32,
        file_count: usize,
        packets_per_file: usize,
        block_len: usize,
        seed: u64,
    ) -> Result<Self> {
        crate::field::check_modulus(modulus)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = file_count * packets_per_file * block_len;
        let mut bytes = vec![0u8; total];
        rng.fill_bytes(&mut bytes);
        let mut it = bytes.into_iter();
        let files = (0..file_count)
            .map(|_| {
                (0..packets_per_file)
                    .map(|_| {
                        let symbols = (0..block_len)
                            .map(|_| it.next().unwrap() as u32 % modulus)
                            .collect();
                        PacketBlock::new(modulus, symbols).unwrap()
                    })
                    .collect()
            })
            .collect();
        Ok(PacketLibrary {
            modulus,
            packets_per_file,
            block_len,
            files,
        })
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    pub fn packets_per_file(&self) -> usize {
        self.packets_per_file
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn file(&self, n: usize) -> &[PacketBlock] {
        &self.files[n]
    }
}

/// One user's cache after placement: `per_file[n]` holds S_k W_n.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UserCache {
    pub per_file: Vec<Vec<PacketBlock>>,
}

impl UserCache {
    pub fn block_count(&self) -> usize {
        self.per_file.iter().map(|f| f.len()).sum()
    }
}

/// The broadcast signal for one demand, plus the rows that actually carry
/// payload: a row is transmitted iff some user's coding matrix is nonzero
/// there, independent of file contents.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Broadcast {
    pub blocks: Vec<PacketBlock>,
    pub transmitted_rows: Vec<usize>,
}

/// Cached per-user decoding state: the corrections D_{k,k'} with
/// D_{k,k'} S_k = S'_k A_{k'}, and the inverse of the stacked matrix
/// (S_k ; S'_k A_k). Building this once makes repeated decodes cheap.
pub struct UserDecoder {
    user: usize,
    corrections: Vec<Option<FieldMatrix>>,
    stack_inverse: FieldMatrix,
}

/// Worst-case transmitted-row count over the demand sweep, as a fraction of F.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RateReport {
    pub nominal: Ratio<u64>,
    pub worst_observed: Ratio<u64>,
    pub demands_checked: usize,
}

impl LinearScheme {
    pub fn new(
        modulus: u32,
        packet_count: usize,
        cache_fraction: Ratio<u64>,
        nominal_rate: Ratio<u64>,
        users: Vec<UserMatrices>,
    ) -> Result<Self> {
        crate::field::check_modulus(modulus)?;
        if users.is_empty() {
            return Err(Error::InvalidParameter("scheme needs at least one user".into()));
        }
        if packet_count == 0 {
            return Err(Error::InvalidParameter("scheme needs at least one packet".into()));
        }
        if cache_fraction <= Ratio::new(0, 1) || cache_fraction > Ratio::new(1, 1) {
            return Err(Error::InvalidParameter(format!(
                "memory ratio {cache_fraction} outside (0, 1]"
            )));
        }
        let f = packet_count as u64;
        let cached = cache_fraction * Ratio::new(f, 1);
        if !cached.is_integer() {
            return Err(Error::InvalidParameter(format!(
                "F * M/N = {f} * {cache_fraction} is not an integer"
            )));
        }
        let signal = nominal_rate * Ratio::new(f, 1);
        if !signal.is_integer() {
            return Err(Error::InvalidParameter(format!(
                "R * F = {nominal_rate} * {f} is not an integer"
            )));
        }
        let cached = cached.to_integer() as usize;
        let signal = signal.to_integer() as usize;
        for (k, u) in users.iter().enumerate() {
            for (m, role, rows, cols) in [
                (&u.caching, "caching", cached, packet_count),
                (&u.coding, "coding", signal, packet_count),
                (&u.decoding, "decoding", packet_count - cached, signal),
            ] {
                if m.modulus() != modulus {
                    return Err(Error::ModulusMismatch(modulus, m.modulus()));
                }
                if m.rows() != rows || m.cols() != cols {
                    return Err(Error::dims(format!(
                        "user {k} {role} matrix is {}x{}, expected {rows}x{cols}",
                        m.rows(),
                        m.cols()
                    )));
                }
            }
        }
        Ok(LinearScheme {
            modulus,
            packet_count,
            cache_fraction,
            nominal_rate,
            users,
        })
    }

    pub fn users(&self) -> usize {
        self.users.len()
    }

    pub fn packet_count(&self) -> usize {
        self.packet_count
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn cache_fraction(&self) -> Ratio<u64> {
        self.cache_fraction
    }

    pub fn nominal_rate(&self) -> Ratio<u64> {
        self.nominal_rate
    }

    /// Cache rows per user: F * M/N.
    pub fn cached_rows(&self) -> usize {
        (self.cache_fraction * Ratio::new(self.packet_count as u64, 1)).to_integer() as usize
    }

    /// Broadcast rows: R * F.
    pub fn signal_rows(&self) -> usize {
        (self.nominal_rate * Ratio::new(self.packet_count as u64, 1)).to_integer() as usize
    }

    pub fn user(&self, k: usize) -> &UserMatrices {
        &self.users[k]
    }

    pub fn user_matrices(&self) -> &[UserMatrices] {
        &self.users
    }

    /// Replaces one user's matrices; intended for fault-injection in tests
    /// and diagnostics, not for normal construction.
    pub fn with_user(mut self, k: usize, matrices: UserMatrices) -> Self {
        self.users[k] = matrices;
        self
    }

    /// Checks the decodability rank condition for every ordered pair, plus
    /// full row rank of every caching and decoding matrix.
    pub fn verify(&self) -> VerifyReport {
        let f = self.packet_count;
        let cached = self.cached_rows();
        let per_user: Vec<(Vec<PairCheck>, Vec<RankDefect>)> = (0..self.users())
            .into_par_iter()
            .map(|k| {
                let u = &self.users[k];
                let mut defects = Vec::new();
                let caching_rank = u.caching.rank();
                if caching_rank != u.caching.rows() {
                    defects.push(RankDefect {
                        user: k,
                        role: MatrixRole::Caching,
                        rank: caching_rank,
                        rows: u.caching.rows(),
                    });
                }
                let decoding_rank = u.decoding.rank();
                if decoding_rank != u.decoding.rows() {
                    defects.push(RankDefect {
                        user: k,
                        role: MatrixRole::Decoding,
                        rank: decoding_rank,
                        rows: u.decoding.rows(),
                    });
                }
                let mut pairs = Vec::with_capacity(self.users());
                for other in 0..self.users() {
                    let product = u
                        .decoding
                        .matmul(&self.users[other].coding)
                        .expect("dimensions fixed at construction");
                    let stack = u.caching.stack_with(&product).expect("same column count");
                    let observed = stack.rank();
                    let expected = if k == other { f } else { cached };
                    let rank_ok = observed == expected;
                    // subspace reformulation: containment off the diagonal,
                    // full span on it; must agree with the rank test whenever
                    // the caching matrix has full row rank
                    let subspace_ok = if k == other {
                        observed == f
                    } else {
                        observed == caching_rank && caching_rank == cached
                    };
                    if caching_rank == cached {
                        assert_eq!(
                            rank_ok, subspace_ok,
                            "rank and subspace formulations diverged at pair ({k},{other})"
                        );
                    }
                    pairs.push(PairCheck {
                        user: k,
                        other,
                        observed_rank: observed,
                        expected_rank: expected,
                        pass: rank_ok,
                    });
                }
                (pairs, defects)
            })
            .collect();

        let mut pairs = Vec::with_capacity(self.users() * self.users());
        let mut rank_defects = Vec::new();
        for (p, d) in per_user {
            pairs.extend(p);
            rank_defects.extend(d);
        }
        let pass = rank_defects.is_empty() && pairs.iter().all(|p| p.pass);
        VerifyReport {
            pass,
            expected_self_rank: f,
            expected_cross_rank: cached,
            pairs,
            rank_defects,
        }
    }

    fn check_library(&self, library: &PacketLibrary) -> Result<()> {
        if library.modulus() != self.modulus {
            return Err(Error::ModulusMismatch(self.modulus, library.modulus()));
        }
        if library.packets_per_file() != self.packet_count {
            return Err(Error::dims(format!(
                "library files have {} packets, scheme expects {}",
                library.packets_per_file(),
                self.packet_count
            )));
        }
        Ok(())
    }

    fn check_demand(&self, library: &PacketLibrary, demand: &[usize]) -> Result<()> {
        if demand.len() != self.users() {
            return Err(Error::dims(format!(
                "demand has {} entries for {} users",
                demand.len(),
                self.users()
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
        Ok(())
    }

    /// Placement: user k caches S_k W_n for every file n, M*F blocks total.
    pub fn place(&self, library: &PacketLibrary) -> Result<Vec<UserCache>> {
        self.check_library(library)?;
        (0..self.users())
            .map(|k| {
                let per_file = (0..library.file_count())
                    .map(|n| self.users[k].caching.apply(library.file(n)))
                    .collect::<Result<_>>()?;
                Ok(UserCache { per_file })
            })
            .collect()
    }

    /// Delivery: X_d = sum over users of A_k W_{d_k}.
    pub fn encode_broadcast(&self, library: &PacketLibrary, demand: &[usize]) -> Result<Broadcast> {
        self.check_library(library)?;
        self.check_demand(library, demand)?;
        let rows = self.signal_rows();
        let mut blocks = vec![PacketBlock::zeros(library.block_len()); rows];
        for (k, &d) in demand.iter().enumerate() {
            let contribution = self.users[k].coding.apply(library.file(d))?;
            for (acc, c) in blocks.iter_mut().zip(&contribution) {
                acc.add_scaled(c, 1, self.modulus);
            }
        }
        Ok(Broadcast {
            blocks,
            transmitted_rows: self.structural_rows(),
        })
    }

    /// Rows where at least one coding matrix has a nonzero entry.
    pub fn structural_rows(&self) -> Vec<usize> {
        (0..self.signal_rows())
            .filter(|&r| self.users.iter().any(|u| !u.coding.row_is_zero(r)))
            .collect()
    }

    /// Builds the cached decoding state for user k. Fails with
    /// [`Error::Infeasible`] or [`Error::Singular`] when the scheme does not
    /// satisfy the rank condition at this user.
    pub fn decoder_for(&self, k: usize) -> Result<UserDecoder> {
        let u = &self.users[k];
        let cache_basis = u.caching.reduced_echelon();
        let mut corrections = Vec::with_capacity(self.users());
        for other in 0..self.users() {
            if other == k {
                corrections.push(None);
                continue;
            }
            let product = u.decoding.matmul(&self.users[other].coding)?;
            corrections.push(Some(cache_basis.solve(&product)?));
        }
        let self_product = u.decoding.matmul(&u.coding)?;
        let stack = u.caching.stack_with(&self_product)?;
        let stack_inverse = stack.invert()?;
        Ok(UserDecoder {
            user: k,
            corrections,
            stack_inverse,
        })
    }

    /// One-shot decode for user k; builds the decoder internally.
    pub fn decode_user(
        &self,
        k: usize,
        cache: &UserCache,
        broadcast: &Broadcast,
        demand: &[usize],
    ) -> Result<Vec<PacketBlock>> {
        self.decoder_for(k)?.decode(self, cache, broadcast, demand)
    }

    /// Worst observed transmitted-row fraction over a demand sweep: all N^K
    /// demands when that is at most 4096, otherwise 512 seeded demands plus
    /// the spread demand (0, 1, ..., K-1) mod N.
    ///
    /// Per demand, users requesting the same file are collapsed by summing
    /// their coding matrices; a row counts as transmitted iff some collapsed
    /// matrix is nonzero there. File contents never enter the count.
    pub fn measured_rate(&self, file_count: usize, seed: u64) -> RateReport {
        let k = self.users();
        let f = self.packet_count as u64;
        let total = (file_count as u64).checked_pow(k as u32);
        let mut demands: Vec<Vec<usize>> = Vec::new();
        match total {
            Some(t) if t <= 4096 => {
                for code in 0..t {
                    let mut d = Vec::with_capacity(k);
                    let mut c = code;
                    for _ in 0..k {
                        d.push((c % file_count as u64) as usize);
                        c /= file_count as u64;
                    }
                    demands.push(d);
                }
            }
            _ => {
                demands.push((0..k).map(|i| i % file_count).collect());
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..512 {
                    demands.push((0..k).map(|_| rng.next_u64() as usize % file_count).collect());
                }
            }
        }
        let demands_checked = demands.len();
        let worst = demands
            .par_iter()
            .map(|d| self.transmitted_rows_for(d))
            .max()
            .unwrap_or(0);
        RateReport {
            nominal: self.nominal_rate,
            worst_observed: Ratio::new(worst as u64, f),
            demands_checked,
        }
    }

    fn transmitted_rows_for(&self, demand: &[usize]) -> usize {
        let rows = self.signal_rows();
        let p = self.modulus as u64;
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (k, &d) in demand.iter().enumerate() {
            groups.entry(d).or_default().push(k);
        }
        let mut transmitted = vec![false; rows];
        for users in groups.values() {
            if let [k] = users[..] {
                for (r, t) in transmitted.iter_mut().enumerate() {
                    if !*t && !self.users[k].coding.row_is_zero(r) {
                        *t = true;
                    }
                }
                continue;
            }
            for (r, t) in transmitted.iter_mut().enumerate() {
                if *t {
                    continue;
                }
                for c in 0..self.packet_count {
                    let sum: u64 = users
                        .iter()
                        .map(|&k| self.users[k].coding.get(r, c) as u64)
                        .sum();
                    if !sum.is_multiple_of(p) {
                        *t = true;
                        break;
                    }
                }
            }
        }
        transmitted.iter().filter(|&&t| t).count()
    }

    /// Text form: `K F p Znum Zden Rnum Rden` header, then per user the
    /// caching, coding and decoding matrices, blank-line separated.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {} {} {} {}\n",
            self.users(),
            self.packet_count,
            self.modulus,
            self.cache_fraction.numer(),
            self.cache_fraction.denom(),
            self.nominal_rate.numer(),
            self.nominal_rate.denom(),
        );
        for u in &self.users {
            for m in [&u.caching, &u.coding, &u.decoding] {
                out.push('\n');
                m.write_into(&mut out);
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<LinearScheme> {
        let mut reader = LineReader::new(text);
        let header = reader.expect_nonempty("scheme header `K F p Znum Zden Rnum Rden`")?;
        let h: Vec<u64> = parse_exact(header, 7, reader.line_no(), "scheme header")?;
        let (k, f, p) = (h[0] as usize, h[1] as usize, h[2] as u32);
        if h[4] == 0 || h[6] == 0 {
            return Err(reader.error("zero denominator in scheme header"));
        }
        let cache_fraction = Ratio::new(h[3], h[4]);
        let nominal_rate = Ratio::new(h[5], h[6]);
        let mut users = Vec::with_capacity(k);
        for _ in 0..k {
            let caching = FieldMatrix::read_from(&mut reader)?;
            let coding = FieldMatrix::read_from(&mut reader)?;
            let decoding = FieldMatrix::read_from(&mut reader)?;
            users.push(UserMatrices {
                caching,
                coding,
                decoding,
            });
        }
        if let Some(extra) = reader.next_nonempty() {
            return Err(reader.error(format!("trailing content `{extra}` after scheme")));
        }
        LinearScheme::new(p, f, cache_fraction, nominal_rate, users)
    }
}

impl UserDecoder {
    pub fn user(&self) -> usize {
        self.user
    }

    /// Recovers W_{d_k} exactly: applies S'_k to the signal, cancels every
    /// other user's contribution from the cache via D_{k,k'}, stacks the
    /// cached part of the requested file on top and applies the inverse.
    pub fn decode(
        &self,
        scheme: &LinearScheme,
        cache: &UserCache,
        broadcast: &Broadcast,
        demand: &[usize],
    ) -> Result<Vec<PacketBlock>> {
        let k = self.user;
        let u = scheme.user(k);
        let p = scheme.modulus();
        if demand.len() != scheme.users() {
            return Err(Error::dims(format!(
                "demand has {} entries for {} users",
                demand.len(),
                scheme.users()
            )));
        }
        let mut seen = u.decoding.apply(&broadcast.blocks)?;
        for (other, correction) in self.corrections.iter().enumerate() {
            let Some(d_matrix) = correction else { continue };
            let cached = &cache.per_file[demand[other]];
            let contribution = d_matrix.apply(cached)?;
            for (s, c) in seen.iter_mut().zip(&contribution) {
                s.sub_assign(c, p);
            }
        }
        let mut stacked = cache.per_file[demand[k]].clone();
        stacked.extend(seen);
        self.stack_inverse.apply(&stacked)
    }
}

/// Round-trip helper used by tests and the CLI: places a library, encodes
/// one broadcast per demand and checks every user decodes its file exactly.
/// Returns the number of (demand, user) decodes performed.
pub fn round_trip(scheme: &LinearScheme, library: &PacketLibrary, demands: &[Vec<usize>]) -> Result<usize> {
    let caches = scheme.place(library)?;
    let decoders: Vec<UserDecoder> = (0..scheme.users())
        .into_par_iter()
        .map(|k| scheme.decoder_for(k))
        .collect::<Result<_>>()?;
    let mut checked = 0;
    for demand in demands {
        let broadcast = scheme.encode_broadcast(library, demand)?;
        let results: Vec<(usize, bool)> = decoders
            .par_iter()
            .map(|dec| {
                let k = dec.user();
                let decoded = dec.decode(scheme, &caches[k], &broadcast, demand);
                (k, decoded.is_ok_and(|f| f == library.file(demand[k])))
            })
            .collect();
        for (k, ok) in results {
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "user {k} failed to decode demand {demand:?}"
                )));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Seeded demand vectors for sweeps.
pub fn random_demands(users: usize, files: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..users).map(|_| rng.next_u64() as usize % files).collect())
        .collect()
}
