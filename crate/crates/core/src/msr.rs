//! From storage codes with optimal repair to caching schemes.
//!
//! A (K + r, K) systematic code is given by r*K encoding matrices; optimal
//! repair of a systematic node demands r*K repair subspaces whose stacked
//! products satisfy the same kind of rank condition a caching scheme needs.
//! That makes the translation mechanical: parity row 0 supplies the caching
//! matrices, the remaining parity rows supply coding and decoding.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::field::FieldMatrix;
use crate::io::{parse_exact, LineReader};
use crate::scheme::{LinearScheme, PairCheck, UserMatrices};

/// Encoding matrices of a (K + r, K) systematic code: parity node x stores
/// the sum over i of A_{x,i} W_i, each A_{x,i} an F x F matrix over GF(p).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct MsrCode {
    systematic: usize,
    parity: usize,
    node_size: usize,
    modulus: u32,
    encoding: Vec<FieldMatrix>, // index x * K + i
}

/// Repair subspaces S_{x,k}, each (F/r) x F, index x * K + k.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RepairSubspaces {
    subspaces: Vec<FieldMatrix>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RepairReport {
    pub pass: bool,
    pub expected_self_rank: usize,
    pub expected_cross_rank: usize,
    pub pairs: Vec<PairCheck>,
}

impl MsrCode {
    pub fn new(
        modulus: u32,
        systematic: usize,
        parity: usize,
        node_size: usize,
        encoding: Vec<FieldMatrix>,
    ) -> Result<Self> {
        crate::field::check_modulus(modulus)?;
        if systematic == 0 || parity == 0 {
            return Err(Error::InvalidParameter(
                "code needs at least one systematic and one parity node".into(),
            ));
        }
        if !node_size.is_multiple_of(parity) {
            return Err(Error::InvalidParameter(format!(
                "node size {node_size} is not divisible by the parity count {parity}"
            )));
        }
        if encoding.len() != systematic * parity {
            return Err(Error::dims(format!(
                "expected {} encoding matrices, got {}",
                systematic * parity,
                encoding.len()
            )));
        }
        for (idx, m) in encoding.iter().enumerate() {
            if m.modulus() != modulus {
                return Err(Error::ModulusMismatch(modulus, m.modulus()));
            }
            if m.rows() != node_size || m.cols() != node_size {
                return Err(Error::dims(format!(
                    "encoding matrix {idx} is {}x{}, expected {node_size}x{node_size}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(MsrCode {
            systematic,
            parity,
            node_size,
            modulus,
            encoding,
        })
    }

    pub fn systematic(&self) -> usize {
        self.systematic
    }

    pub fn parity(&self) -> usize {
        self.parity
    }

    pub fn node_size(&self) -> usize {
        self.node_size
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn encoding(&self, x: usize, i: usize) -> &FieldMatrix {
        assert!(x < self.parity && i < self.systematic);
        &self.encoding[x * self.systematic + i]
    }

    pub fn encoding_mut(&mut self, x: usize, i: usize) -> &mut FieldMatrix {
        assert!(x < self.parity && i < self.systematic);
        &mut self.encoding[x * self.systematic + i]
    }
}

impl RepairSubspaces {
    pub fn new(code: &MsrCode, subspaces: Vec<FieldMatrix>) -> Result<Self> {
        let expect = code.systematic * code.parity;
        if subspaces.len() != expect {
            return Err(Error::dims(format!(
                "expected {expect} repair subspaces, got {}",
                subspaces.len()
            )));
        }
        let rows = code.node_size / code.parity;
        for (idx, m) in subspaces.iter().enumerate() {
            if m.modulus() != code.modulus {
                return Err(Error::ModulusMismatch(code.modulus, m.modulus()));
            }
            if m.rows() != rows || m.cols() != code.node_size {
                return Err(Error::dims(format!(
                    "repair subspace {idx} is {}x{}, expected {rows}x{}",
                    m.rows(),
                    m.cols(),
                    code.node_size
                )));
            }
        }
        Ok(RepairSubspaces { subspaces })
    }

    pub fn subspace(&self, code: &MsrCode, x: usize, k: usize) -> &FieldMatrix {
        assert!(x < code.parity && k < code.systematic);
        &self.subspaces[x * code.systematic + k]
    }

    pub fn subspace_mut(&mut self, code: &MsrCode, x: usize, k: usize) -> &mut FieldMatrix {
        assert!(x < code.parity && k < code.systematic);
        &mut self.subspaces[x * code.systematic + k]
    }
}

/// Checks the optimal-repair rank condition: for each node pair (k, k') the
/// stack of S_{x,k} A_{x,k'} over all parity rows x must have rank F when
/// k = k' and rank F/r otherwise.
pub fn verify_repair(code: &MsrCode, subspaces: &RepairSubspaces) -> RepairReport {
    let f = code.node_size;
    let cross = f / code.parity;
    let mut pairs = Vec::with_capacity(code.systematic * code.systematic);
    for k in 0..code.systematic {
        for other in 0..code.systematic {
            let blocks: Vec<FieldMatrix> = (0..code.parity)
                .map(|x| {
                    subspaces
                        .subspace(code, x, k)
                        .matmul(code.encoding(x, other))
                        .expect("dimensions fixed at construction")
                })
                .collect();
            let stack = FieldMatrix::stack_rows(code.modulus, &blocks)
                .expect("same column count");
            let observed = stack.rank();
            let expected = if k == other { f } else { cross };
            pairs.push(PairCheck {
                user: k,
                other,
                observed_rank: observed,
                expected_rank: expected,
                pass: observed == expected,
            });
        }
    }
    RepairReport {
        pass: pairs.iter().all(|p| p.pass),
        expected_self_rank: f,
        expected_cross_rank: cross,
        pairs,
    }
}

/// Exhaustive erasure check: every K-subset of the K + r nodes must determine
/// the file, i.e. the stacked KF x KF system (identity rows for systematic
/// nodes, encoding rows for parity nodes) has full rank. Capped at
/// K + r <= 12 nodes.
pub fn verify_mds(code: &MsrCode) -> Result<bool> {
    let n = code.systematic + code.parity;
    if n > 12 {
        return Err(Error::InvalidParameter(format!(
            "exhaustive erasure check capped at 12 nodes, got {n}"
        )));
    }
    let k = code.systematic;
    let f = code.node_size;
    let mut chosen: Vec<usize> = (0..k).collect();
    loop {
        let blocks: Vec<FieldMatrix> = chosen
            .iter()
            .map(|&node| {
                if node < k {
                    // systematic node: identity at block `node`
                    let mut row = FieldMatrix::zeros(code.modulus, f, k * f).unwrap();
                    for i in 0..f {
                        row.set(i, node * f + i, 1);
                    }
                    row
                } else {
                    let x = node - k;
                    let mut row = FieldMatrix::zeros(code.modulus, f, k * f).unwrap();
                    for i in 0..k {
                        let a = code.encoding(x, i);
                        for ri in 0..f {
                            for ci in 0..f {
                                let v = a.get(ri, ci);
                                if v != 0 {
                                    row.set(ri, i * f + ci, v);
                                }
                            }
                        }
                    }
                    row
                }
            })
            .collect();
        let system = FieldMatrix::stack_rows(code.modulus, &blocks)?;
        if system.rank() != k * f {
            return Ok(false);
        }
        if !next_combination(&mut chosen, n) {
            return Ok(true);
        }
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - (k - i) {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Builds the K-user caching scheme of a repair-optimal code: user k caches
/// through S_{0,k} A_{0,k}, codes through the stack of A_{x,k} for x >= 1 and
/// decodes through the block diagonal of S_{x,k} for x >= 1. The resulting
/// memory ratio is 1/r and the nominal rate r - 1.
pub fn to_scheme(code: &MsrCode, subspaces: &RepairSubspaces) -> Result<LinearScheme> {
    let report = verify_repair(code, subspaces);
    if !report.pass {
        return Err(Error::InvalidParameter(format!(
            "repair verification failed on {} node pairs",
            report.pairs.iter().filter(|p| !p.pass).count()
        )));
    }
    let r = code.parity;
    let f = code.node_size;
    let mut users = Vec::with_capacity(code.systematic);
    for k in 0..code.systematic {
        let caching = subspaces
            .subspace(code, 0, k)
            .matmul(code.encoding(0, k))?;
        let coding_blocks: Vec<FieldMatrix> =
            (1..r).map(|x| code.encoding(x, k).clone()).collect();
        let coding = FieldMatrix::stack_rows(code.modulus, &coding_blocks)?;
        let decoding_blocks: Vec<FieldMatrix> = (1..r)
            .map(|x| subspaces.subspace(code, x, k).clone())
            .collect();
        let decoding = FieldMatrix::block_diag(code.modulus, &decoding_blocks)?;
        users.push(UserMatrices {
            caching,
            coding,
            decoding,
        });
    }
    LinearScheme::new(
        code.modulus,
        f,
        Ratio::new(1, r as u64),
        Ratio::new(r as u64 - 1, 1),
        users,
    )
}

/// Text form: `p K r F` header, then r*K `ENC x i` sections and r*K
/// `SUB x k` sections, each holding one matrix in the shared format.
pub fn to_text(code: &MsrCode, subspaces: &RepairSubspaces) -> String {
    let mut out = format!(
        "{} {} {} {}\n",
        code.modulus, code.systematic, code.parity, code.node_size
    );
    for x in 0..code.parity {
        for i in 0..code.systematic {
            out.push_str(&format!("\nENC {x} {i}\n"));
            code.encoding(x, i).write_into(&mut out);
        }
    }
    for x in 0..code.parity {
        for k in 0..code.systematic {
            out.push_str(&format!("\nSUB {x} {k}\n"));
            subspaces.subspace(code, x, k).write_into(&mut out);
        }
    }
    out
}

fn read_section(
    reader: &mut LineReader,
    tag: &str,
    x: usize,
    idx: usize,
    modulus: u32,
) -> Result<FieldMatrix> {
    let label = reader.expect_nonempty("section label")?;
    let parts: Vec<&str> = label.split_whitespace().collect();
    if parts.len() != 3 || parts[0] != tag {
        return Err(reader.error(format!("expected `{tag} {x} {idx}`, found `{label}`")));
    }
    let lx: Result<usize> = parts[1]
        .parse()
        .map_err(|_| reader.error("invalid section index"));
    let li: Result<usize> = parts[2]
        .parse()
        .map_err(|_| reader.error("invalid section index"));
    if (lx?, li?) != (x, idx) {
        return Err(reader.error(format!(
            "sections out of order: expected `{tag} {x} {idx}`, found `{label}`"
        )));
    }
    let m = FieldMatrix::read_from(reader)?;
    if m.modulus() != modulus {
        return Err(Error::ModulusMismatch(modulus, m.modulus()));
    }
    Ok(m)
}

pub fn from_text(text: &str) -> Result<(MsrCode, RepairSubspaces)> {
    let mut reader = LineReader::new(text);
    let header = reader.expect_nonempty("code header `p K r F`")?;
    let h: Vec<u64> = parse_exact(header, 4, reader.line_no(), "code header `p K r F`")?;
    let (p, k, r, f) = (h[0] as u32, h[1] as usize, h[2] as usize, h[3] as usize);

    let mut encoding = Vec::with_capacity(r * k);
    for x in 0..r {
        for i in 0..k {
            encoding.push(read_section(&mut reader, "ENC", x, i, p)?);
        }
    }
    let code = MsrCode::new(p, k, r, f, encoding)?;
    let mut subs = Vec::with_capacity(r * k);
    for x in 0..r {
        for i in 0..k {
            subs.push(read_section(&mut reader, "SUB", x, i, p)?);
        }
    }
    if let Some(extra) = reader.next_nonempty() {
        return Err(reader.error(format!("trailing content `{extra}` after code sections")));
    }
    let subspaces = RepairSubspaces::new(&code, subs)?;
    Ok((code, subspaces))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::scheme::{random_demands, round_trip, PacketLibrary};

    /// Hand-checked GF(3) fixture with K = 2 systematic and r = 2 parity
    /// nodes of size F = 2; parity row 0 is the plain sum.
    pub(crate) fn gf3_fixture() -> (MsrCode, RepairSubspaces) {
        let id = FieldMatrix::identity(3, 2).unwrap();
        let a10 = FieldMatrix::from_rows(3, vec![vec![1, 0], vec![0, 2]]).unwrap();
        let a11 = FieldMatrix::from_rows(3, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let code = MsrCode::new(3, 2, 2, 2, vec![id.clone(), id, a10, a11]).unwrap();
        let row = |v: Vec<u32>| FieldMatrix::from_rows(3, vec![v]).unwrap();
        let subs = RepairSubspaces::new(
            &code,
            vec![
                row(vec![1, 1]), // S_{0,0}
                row(vec![1, 1]), // S_{0,1}
                row(vec![1, 1]), // S_{1,0}
                row(vec![1, 2]), // S_{1,1}
            ],
        )
        .unwrap();
        (code, subs)
    }

    #[test]
    fn fixture_satisfies_repair_condition() {
        let (code, subs) = gf3_fixture();
        let report = verify_repair(&code, &subs);
        assert!(report.pass, "{:?}", report.pairs);
        assert_eq!(report.expected_self_rank, 2);
        assert_eq!(report.expected_cross_rank, 1);
    }

    #[test]
    fn equal_subspaces_with_identity_encoders_fail_self_rank() {
        let id = FieldMatrix::identity(3, 2).unwrap();
        let code = MsrCode::new(3, 2, 2, 2, vec![id.clone(), id.clone(), id.clone(), id]).unwrap();
        let row = FieldMatrix::from_rows(3, vec![vec![1, 0]]).unwrap();
        let subs = RepairSubspaces::new(&code, vec![row.clone(), row.clone(), row.clone(), row]).unwrap();
        let report = verify_repair(&code, &subs);
        assert!(!report.pass);
        // stacking equal subspaces can never reach full rank on the diagonal
        assert!(report.pairs.iter().any(|p| p.user == p.other && !p.pass));
    }

    #[test]
    fn zeroed_subspace_row_is_detected() {
        let (code, mut subs) = gf3_fixture();
        let zero = FieldMatrix::zeros(3, 1, 2).unwrap();
        *subs.subspace_mut(&code, 1, 0) = zero;
        let report = verify_repair(&code, &subs);
        assert!(!report.pass);
        assert!(report
            .pairs
            .iter()
            .any(|p| p.user == 0 && p.other == 0 && p.observed_rank < 2));
    }

    #[test]
    fn fixture_is_mds() {
        let (code, _) = gf3_fixture();
        assert!(verify_mds(&code).unwrap());
    }

    #[test]
    fn single_parity_sum_code_is_mds() {
        let id = FieldMatrix::identity(2, 2).unwrap();
        let code = MsrCode::new(2, 2, 1, 2, vec![id.clone(), id]).unwrap();
        assert!(verify_mds(&code).unwrap());
    }

    #[test]
    fn zeroed_encoder_breaks_mds() {
        let (mut code, _) = gf3_fixture();
        *code.encoding_mut(0, 0) = FieldMatrix::zeros(3, 2, 2).unwrap();
        assert!(!verify_mds(&code).unwrap());
    }

    #[test]
    fn mds_cap_enforced() {
        let id = FieldMatrix::identity(2, 1).unwrap();
        let code = MsrCode::new(2, 12, 1, 1, vec![id; 12]).unwrap();
        assert!(verify_mds(&code).is_err());
    }

    #[test]
    fn scheme_conversion_parameters_and_round_trip() {
        let (code, subs) = gf3_fixture();
        let scheme = to_scheme(&code, &subs).unwrap();
        assert_eq!(scheme.users(), 2);
        assert_eq!(scheme.packet_count(), 2);
        assert_eq!(scheme.modulus(), 3);
        assert_eq!(scheme.cache_fraction(), Ratio::new(1, 2));
        assert_eq!(scheme.nominal_rate(), Ratio::new(1, 1));
        assert!(scheme.verify().pass);

        let library = PacketLibrary::random(3, 2, 2, 8, 42).unwrap();
        let demands = random_demands(2, 2, 8, 43);
        round_trip(&scheme, &library, &demands).unwrap();
    }

    #[test]
    fn conversion_rejects_broken_repair() {
        let (code, mut subs) = gf3_fixture();
        *subs.subspace_mut(&code, 0, 0) = FieldMatrix::zeros(3, 1, 2).unwrap();
        assert!(to_scheme(&code, &subs).is_err());
    }

    #[test]
    fn scheme_rank_condition_tracks_repair_condition() {
        // assembling the scheme matrices from a code that fails the repair
        // condition yields a scheme that fails the rank condition, and vice
        // versa (the passing direction is covered above)
        let (code, mut subs) = gf3_fixture();
        *subs.subspace_mut(&code, 1, 1) = FieldMatrix::from_rows(3, vec![vec![1, 1]]).unwrap();
        assert!(!verify_repair(&code, &subs).pass);
        // bypass the to_scheme guard and assemble by hand
        let users: Vec<crate::scheme::UserMatrices> = (0..2)
            .map(|k| crate::scheme::UserMatrices {
                caching: subs
                    .subspace(&code, 0, k)
                    .matmul(code.encoding(0, k))
                    .unwrap(),
                coding: code.encoding(1, k).clone(),
                decoding: subs.subspace(&code, 1, k).clone(),
            })
            .collect();
        let scheme = crate::scheme::LinearScheme::new(
            3,
            2,
            Ratio::new(1, 2),
            Ratio::new(1, 1),
            users,
        )
        .unwrap();
        assert!(!scheme.verify().pass);
    }

    #[test]
    fn bridge_parameters_match_z1_digit_construction() {
        // a code with r = q parities, K = (q+1)m systematic nodes and node
        // size q^m maps onto exactly the z = 1 digit-partition parameters
        for (q, m) in [(2usize, 1usize), (2, 3), (3, 2), (5, 2)] {
            let params = crate::qary::ConstructionParams::new(q, m, 1).unwrap();
            let r = q as u64;
            assert_eq!(params.cache_fraction(), Ratio::new(1, r));
            assert_eq!(params.rate() as u64, r - 1);
            assert_eq!(params.user_count(), (q + 1) * m);
            assert_eq!(params.packet_count(), q.pow(m as u32));
        }
    }

    #[test]
    fn text_round_trip() {
        let (code, subs) = gf3_fixture();
        let text = to_text(&code, &subs);
        let (code2, subs2) = from_text(&text).unwrap();
        assert_eq!(code2, code);
        assert_eq!(subs2, subs);
    }

    #[test]
    fn text_rejects_shuffled_sections() {
        let (code, subs) = gf3_fixture();
        let text = to_text(&code, &subs).replace("ENC 0 0", "ENC 0 1");
        assert!(from_text(&text).is_err());
    }
}
