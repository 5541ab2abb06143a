//! GF(2) caching schemes built from q-ary digit partitions.
//!
//! Indices s in [0, q^m) are read as m-digit base-q numbers. Fixing digit u
//! to the value v partitions the index set into V_{u,v}; the unit-row bundle
//! E_{u,v} and the digit-sum rows Q_u span the invariant subspaces the whole
//! construction lives on. Transfer matrices C map one partition class onto
//! another, and residue groups G_{v,eps} pick which classes each user must
//! recover. The result is a q^m-division scheme for K = m(q+1)h users with
//! memory ratio z/q and rate q - z, at a packet count exponentially smaller
//! than the binomial construction's.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::field::FieldMatrix;
use crate::scheme::{LinearScheme, UserMatrices};

/// Parameter triple (q, m, z) with 1 <= z < q, q >= 2, m >= 1.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct ConstructionParams {
    q: usize,
    m: usize,
    z: usize,
}

/// User label (u, v, eps): u picks the digit, v < q picks a partition class,
/// v = q marks the digit-sum user, eps picks the residue group.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct UserId {
    pub u: usize,
    pub v: usize,
    pub eps: usize,
}

impl ConstructionParams {
    pub fn new(q: usize, m: usize, z: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParameter(format!("q must be at least 2, got {q}")));
        }
        if m < 1 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if z < 1 || z >= q {
            return Err(Error::InvalidParameter(format!(
                "z must satisfy 1 <= z < q, got z = {z}, q = {q}"
            )));
        }
        Ok(ConstructionParams { q, m, z })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn z(&self) -> usize {
        self.z
    }

    /// F = q^m.
    pub fn packet_count(&self) -> usize {
        self.q.pow(self.m as u32)
    }

    /// h = floor((q - 1) / (q - z)), the number of residue groups per class.
    pub fn group_count(&self) -> usize {
        (self.q - 1) / (self.q - self.z)
    }

    /// K = m (q + 1) h.
    pub fn user_count(&self) -> usize {
        self.m * (self.q + 1) * self.group_count()
    }

    /// M/N = z/q.
    pub fn cache_fraction(&self) -> Ratio<u64> {
        Ratio::new(self.z as u64, self.q as u64)
    }

    /// R = q - z.
    pub fn rate(&self) -> usize {
        self.q - self.z
    }

    /// Flat user index: same-digit users are contiguous, v runs over
    /// [0, q] and eps over [0, h) innermost.
    pub fn flat_index(&self, id: UserId) -> usize {
        let h = self.group_count();
        (id.u * (self.q + 1) + id.v) * h + id.eps
    }

    pub fn user_id(&self, k: usize) -> UserId {
        let h = self.group_count();
        let eps = k % h;
        let rest = k / h;
        UserId {
            u: rest / (self.q + 1),
            v: rest % (self.q + 1),
            eps,
        }
    }
}

/// Base-q digits of s, least significant first.
pub fn digits(s: usize, q: usize, m: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(m);
    let mut rem = s;
    for _ in 0..m {
        out.push(rem % q);
        rem /= q;
    }
    out
}

pub fn from_digits(digits: &[usize], q: usize) -> usize {
    digits.iter().rev().fold(0, |acc, &d| acc * q + d)
}

fn digit(s: usize, q: usize, u: usize) -> usize {
    s / q.pow(u as u32) % q
}

/// Replaces digit u of s with v.
fn with_digit(s: usize, q: usize, u: usize, v: usize) -> usize {
    let pow = q.pow(u as u32);
    let old = digit(s, q, u);
    s - old * pow + v * pow
}

/// V_{u,v}: indices whose digit u equals v, ascending.
pub fn partition_set(q: usize, m: usize, u: usize, v: usize) -> Vec<usize> {
    assert!(u < m && v < q, "partition_set: u or v out of range");
    (0..q.pow(m as u32)).filter(|&s| digit(s, q, u) == v).collect()
}

/// E_{u,v}: unit rows e_s for s in V_{u,v}, ascending; q^(m-1) x q^m over GF(2).
pub fn basis_matrix(q: usize, m: usize, u: usize, v: usize) -> FieldMatrix {
    let f = q.pow(m as u32);
    let set = partition_set(q, m, u, v);
    let mut out = FieldMatrix::zeros(2, set.len(), f).unwrap();
    for (i, &s) in set.iter().enumerate() {
        out.set(i, s, 1);
    }
    out
}

/// Q_u: one row per index of V_{u,0}, summing e over all values of digit u.
pub fn sum_matrix(q: usize, m: usize, u: usize) -> FieldMatrix {
    let f = q.pow(m as u32);
    let base = partition_set(q, m, u, 0);
    let mut out = FieldMatrix::zeros(2, base.len(), f).unwrap();
    for (i, &s) in base.iter().enumerate() {
        for v in 0..q {
            out.set(i, with_digit(s, q, u, v), 1);
        }
    }
    out
}

/// Transfer matrix C_{u, v_from, v_to} (q^m x q^m over GF(2)).
///
/// For v_from < q, row s carries e at the index with digit u rewritten to
/// v_to when s sits in class v_from, plus e_s when s sits in class v_to.
/// For v_from = q, the matrix is the diagonal selector of class v_to.
pub fn transfer_matrix(q: usize, m: usize, u: usize, v_from: usize, v_to: usize) -> FieldMatrix {
    assert!(u < m, "transfer_matrix: u out of range");
    assert!(v_to < q, "transfer_matrix: v_to out of range");
    assert!(v_from <= q, "transfer_matrix: v_from out of range");
    assert_ne!(v_from, v_to, "transfer_matrix: v_from and v_to must differ");
    let f = q.pow(m as u32);
    let mut out = FieldMatrix::zeros(2, f, f).unwrap();
    for s in 0..f {
        let d = digit(s, q, u);
        if v_from == q {
            if d == v_to {
                out.set(s, s, 1);
            }
        } else {
            if d == v_from {
                out.set(s, with_digit(s, q, u, v_to), 1);
            }
            if d == v_to {
                out.set(s, s, 1);
            }
        }
    }
    out
}

/// Residue group G_{v,eps}: the q - z residues v+1+eps(q-z), ..., v+(q-z)+eps(q-z)
/// taken mod q, in that order.
pub fn group_set(q: usize, z: usize, v: usize, eps: usize) -> Vec<usize> {
    assert!((1..q).contains(&z), "group_set: z out of range");
    assert!(v < q, "group_set: v out of range");
    let h = (q - 1) / (q - z);
    assert!(eps < h, "group_set: eps out of range");
    (1..=q - z).map(|i| (v + i + eps * (q - z)) % q).collect()
}

/// Builds the full K-user scheme for (q, m, z).
///
/// Per user (u, v, eps): caching stacks the basis bundles of the classes
/// outside G_{v,eps} (the digit-sum rows first for v = q), coding stacks the
/// transfer matrices into the classes of G_{v,eps} in listed order, and
/// decoding is a block diagonal of q - z copies of the user's own bundle.
pub fn build_scheme(params: ConstructionParams) -> LinearScheme {
    let (q, m, z) = (params.q, params.m, params.z);
    let h = params.group_count();
    let f = params.packet_count();
    let mut users = Vec::with_capacity(params.user_count());
    for k in 0..params.user_count() {
        let id = params.user_id(k);
        debug_assert_eq!(params.flat_index(id), k);
        let (u, v, eps) = (id.u, id.v, id.eps);
        debug_assert!(eps < h);

        let (caching, coding, decoding) = if v < q {
            let group = group_set(q, z, v, eps);
            let kept: Vec<FieldMatrix> = (0..q)
                .filter(|vp| !group.contains(vp))
                .map(|vp| basis_matrix(q, m, u, vp))
                .collect();
            let caching = FieldMatrix::stack_rows(2, &kept).unwrap();
            let blocks: Vec<FieldMatrix> = group
                .iter()
                .map(|&vp| transfer_matrix(q, m, u, v, vp))
                .collect();
            let coding = FieldMatrix::stack_rows(2, &blocks).unwrap();
            let own = basis_matrix(q, m, u, v);
            let decoding = FieldMatrix::block_diag(2, &vec![own; q - z]).unwrap();
            (caching, coding, decoding)
        } else {
            let group = group_set(q, z, q - 1, eps);
            let mut kept = vec![sum_matrix(q, m, u)];
            kept.extend(
                (0..q - 1)
                    .filter(|vp| !group.contains(vp))
                    .map(|vp| basis_matrix(q, m, u, vp)),
            );
            let caching = FieldMatrix::stack_rows(2, &kept).unwrap();
            let blocks: Vec<FieldMatrix> = group
                .iter()
                .map(|&vp| transfer_matrix(q, m, u, q, vp))
                .collect();
            let coding = FieldMatrix::stack_rows(2, &blocks).unwrap();
            let own = sum_matrix(q, m, u);
            let decoding = FieldMatrix::block_diag(2, &vec![own; q - z]).unwrap();
            (caching, coding, decoding)
        };
        debug_assert_eq!(caching.rows(), z * f / q);
        users.push(UserMatrices {
            caching,
            coding,
            decoding,
        });
    }
    LinearScheme::new(
        2,
        f,
        params.cache_fraction(),
        Ratio::new(params.rate() as u64, 1),
        users,
    )
    .expect("construction dimensions are consistent by design")
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SubspacePart {
    CrossDigitContainment,
    SameDigitTransfer,
    SumRowAction,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubspaceFailure {
    pub part: SubspacePart,
    pub u1: usize,
    pub u2: usize,
    pub v1: Option<usize>,
    pub v_from: usize,
    pub v_to: usize,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubspaceReport {
    pub pass: bool,
    pub checks: usize,
    pub failures: Vec<SubspaceFailure>,
}

/// Exhaustively checks the three subspace identities the construction rests
/// on, as row-space relations over GF(2):
///
/// 1. cross digit: E_{u1,v1} C_{u2,*,*} stays inside E_{u1,v1} when u1 != u2;
/// 2. same digit: E_{u1,v1} C_{u1,v1,v2} equals E_{u1,v2}, and for v1 != v_from
///    the product stays inside E_{u1,v1};
/// 3. sum rows: Q_{u1} C_{u1,q,v2} equals E_{u1,v2}, all other products stay
///    inside Q_{u1}.
pub fn check_subspace_identities(q: usize, m: usize) -> SubspaceReport {
    let mut checks = 0usize;
    let mut failures = Vec::new();

    for u1 in 0..m {
        for u2 in 0..m {
            for v_from in 0..=q {
                for v_to in 0..q {
                    if v_to == v_from {
                        continue;
                    }
                    let c = transfer_matrix(q, m, u2, v_from, v_to);

                    for v1 in 0..q {
                        let e1 = basis_matrix(q, m, u1, v1);
                        let product = e1.matmul(&c).unwrap();
                        checks += 1;
                        let ok = if u1 != u2 {
                            e1.row_space_contains(&product)
                        } else if v1 == v_from {
                            basis_matrix(q, m, u1, v_to).row_space_equals(&product)
                        } else {
                            e1.row_space_contains(&product)
                        };
                        if !ok {
                            failures.push(SubspaceFailure {
                                part: if u1 != u2 {
                                    SubspacePart::CrossDigitContainment
                                } else {
                                    SubspacePart::SameDigitTransfer
                                },
                                u1,
                                u2,
                                v1: Some(v1),
                                v_from,
                                v_to,
                            });
                        }
                    }

                    let qrows = sum_matrix(q, m, u1);
                    let product = qrows.matmul(&c).unwrap();
                    checks += 1;
                    let ok = if u1 == u2 && v_from == q {
                        basis_matrix(q, m, u1, v_to).row_space_equals(&product)
                    } else {
                        qrows.row_space_contains(&product)
                    };
                    if !ok {
                        failures.push(SubspaceFailure {
                            part: SubspacePart::SumRowAction,
                            u1,
                            u2,
                            v1: None,
                            v_from,
                            v_to,
                        });
                    }
                }
            }
        }
    }

    SubspaceReport {
        pass: failures.is_empty(),
        checks,
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{random_demands, round_trip, PacketLibrary};

    #[test]
    fn digit_round_trip() {
        for q in 2..=5usize {
            for m in 1..=3usize {
                for s in 0..q.pow(m as u32) {
                    assert_eq!(from_digits(&digits(s, q, m), q), s);
                }
            }
        }
    }

    #[test]
    fn partition_sets_q3_m2() {
        assert_eq!(partition_set(3, 2, 0, 0), vec![0, 3, 6]);
        assert_eq!(partition_set(3, 2, 0, 1), vec![1, 4, 7]);
        assert_eq!(partition_set(3, 2, 1, 2), vec![6, 7, 8]);
    }

    #[test]
    fn partition_set_q2_m1() {
        assert_eq!(partition_set(2, 1, 0, 1), vec![1]);
    }

    #[test]
    fn partition_intersection_law() {
        let (q, m) = (4usize, 3usize);
        for u1 in 0..m {
            for v1 in 0..q {
                for u2 in 0..m {
                    for v2 in 0..q {
                        if (u1, v1) == (u2, v2) {
                            continue;
                        }
                        let a = partition_set(q, m, u1, v1);
                        let b = partition_set(q, m, u2, v2);
                        let inter = a.iter().filter(|s| b.contains(s)).count();
                        let expect = if u1 == u2 { 0 } else { q.pow(m as u32 - 2) };
                        assert_eq!(inter, expect, "u1={u1} v1={v1} u2={u2} v2={v2}");
                    }
                }
            }
        }
    }

    #[test]
    fn basis_matrix_unit_rows() {
        let e = basis_matrix(3, 2, 0, 0);
        assert_eq!((e.rows(), e.cols()), (3, 9));
        for (i, &s) in [0usize, 3, 6].iter().enumerate() {
            assert_eq!(e.get(i, s), 1);
        }
        // every column carries at most one 1
        for j in 0..9 {
            let ones = (0..3).filter(|&i| e.get(i, j) == 1).count();
            assert!(ones <= 1);
        }
        let single = basis_matrix(2, 1, 0, 0);
        assert_eq!((single.rows(), single.cols()), (1, 2));
    }

    #[test]
    fn sum_matrix_q3_m2() {
        let q0 = sum_matrix(3, 2, 0);
        let expect = FieldMatrix::from_rows(
            2,
            vec![
                vec![1, 1, 1, 0, 0, 0, 0, 0, 0],
                vec![0, 0, 0, 1, 1, 1, 0, 0, 0],
                vec![0, 0, 0, 0, 0, 0, 1, 1, 1],
            ],
        )
        .unwrap();
        assert_eq!(q0, expect);
    }

    #[test]
    fn sum_matrix_is_sum_of_basis_bundles() {
        for q in 2..=4usize {
            for m in 1..=3usize {
                for u in 0..m {
                    let qm = sum_matrix(q, m, u);
                    // row i of Q equals the GF(2) sum of row i over all E_{u,v}
                    let f = q.pow(m as u32);
                    let mut acc = FieldMatrix::zeros(2, qm.rows(), f).unwrap();
                    for v in 0..q {
                        let e = basis_matrix(q, m, u, v);
                        for i in 0..qm.rows() {
                            for j in 0..f {
                                let cur = acc.get(i, j);
                                acc.set(i, j, cur ^ e.get(i, j));
                            }
                        }
                    }
                    assert_eq!(qm, acc, "q={q} m={m} u={u}");
                }
            }
        }
    }

    #[test]
    fn sum_matrix_q2_m2_u1() {
        // rows e0+e2 and e1+e3
        let q1 = sum_matrix(2, 2, 1);
        let expect =
            FieldMatrix::from_rows(2, vec![vec![1, 0, 1, 0], vec![0, 1, 0, 1]]).unwrap();
        assert_eq!(q1, expect);
    }

    #[test]
    fn transfer_matrix_q3_m2_golden() {
        // C_{0,0,1} has rows (e1, e1, 0, e4, e4, 0, e7, e7, 0)
        let c = transfer_matrix(3, 2, 0, 0, 1);
        let e = |s: usize| {
            let mut v = vec![0u32; 9];
            v[s] = 1;
            v
        };
        let zero = vec![0u32; 9];
        let expect = FieldMatrix::from_rows(
            2,
            vec![
                e(1),
                e(1),
                zero.clone(),
                e(4),
                e(4),
                zero.clone(),
                e(7),
                e(7),
                zero.clone(),
            ],
        )
        .unwrap();
        assert_eq!(c, expect);

        // C_{1,3,0} selects the first partition class of digit 1
        let c = transfer_matrix(3, 2, 1, 3, 0);
        let expect = FieldMatrix::from_rows(
            2,
            vec![
                e(0),
                e(1),
                e(2),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                zero.clone(),
                zero,
            ],
        )
        .unwrap();
        assert_eq!(c, expect);
    }

    #[test]
    fn transfer_matrix_q2_m2_brute_force() {
        // evaluate the definition by hand for every index
        let c = transfer_matrix(2, 2, 0, 0, 1);
        let mut expect = FieldMatrix::zeros(2, 4, 4).unwrap();
        for s in 0..4usize {
            let d0 = s % 2;
            if d0 == 0 {
                expect.set(s, s + 1, 1); // rewrite digit 0 to 1
            }
            if d0 == 1 {
                expect.set(s, s, 1);
            }
        }
        assert_eq!(c, expect);
        // and it matches the coding matrix of the six-user reference scheme
        let e = |s: usize| {
            let mut v = vec![0u32; 4];
            v[s] = 1;
            v
        };
        assert_eq!(
            c,
            FieldMatrix::from_rows(2, vec![e(1), e(1), e(3), e(3)]).unwrap()
        );
    }

    #[test]
    fn group_sets_match_formula() {
        assert_eq!(group_set(3, 2, 0, 0), vec![1]);
        assert_eq!(group_set(3, 2, 0, 1), vec![2]);
        assert_eq!(group_set(3, 2, 1, 0), vec![2]);
        assert_eq!(group_set(3, 2, 1, 1), vec![0]);
        assert_eq!(group_set(3, 2, 2, 0), vec![0]);
        assert_eq!(group_set(3, 2, 2, 1), vec![1]);

        assert_eq!(group_set(8, 6, 3, 0), vec![4, 5]);
        assert_eq!(group_set(8, 6, 3, 2), vec![0, 1]);

        // z = 1: the group wraps to the complement of {v}
        for v in 0..5 {
            let g = group_set(5, 1, v, 0);
            assert_eq!(g.len(), 4);
            assert!(!g.contains(&v));
        }
    }

    #[test]
    fn parameter_identities() {
        let p = ConstructionParams::new(5, 3, 3).unwrap();
        assert_eq!(p.packet_count(), 125);
        assert_eq!(p.group_count(), 2);
        assert_eq!(p.user_count(), 3 * 6 * 2);
        assert_eq!(p.cache_fraction(), Ratio::new(3, 5));
        assert_eq!(p.rate(), 2);
        for k in 0..p.user_count() {
            assert_eq!(p.flat_index(p.user_id(k)), k);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ConstructionParams::new(1, 2, 1).is_err());
        assert!(ConstructionParams::new(3, 0, 1).is_err());
        assert!(ConstructionParams::new(3, 2, 0).is_err());
        assert!(ConstructionParams::new(3, 2, 3).is_err());
    }

    #[test]
    fn q2_m2_z1_matches_six_user_reference() {
        let scheme = build_scheme(ConstructionParams::new(2, 2, 1).unwrap());
        assert_eq!(scheme.users(), 6);
        assert_eq!(scheme.packet_count(), 4);

        let reference = crate::scheme::tests::six_user_scheme();
        // flat order here is (u=0: v=0,1,2), (u=1: v=0,1,2); the reference
        // lists the two digit-sum users last
        let map = [0usize, 1, 4, 2, 3, 5];
        for k in 0..6 {
            let got = scheme.user(k);
            let want = reference.user(map[k]);
            assert_eq!(got.caching, want.caching, "caching of user {k}");
            assert_eq!(got.coding, want.coding, "coding of user {k}");
            assert_eq!(got.decoding, want.decoding, "decoding of user {k}");
        }
        assert!(scheme.verify().pass);
    }

    #[test]
    fn q3_m2_z1_shapes_and_verification() {
        let scheme = build_scheme(ConstructionParams::new(3, 2, 1).unwrap());
        assert_eq!(scheme.users(), 8);
        assert_eq!(scheme.packet_count(), 9);
        // user (0,0,0) caches exactly E_{0,0} and decodes through the
        // 6x18 block diagonal diag(E_{0,0}, E_{0,0})
        assert_eq!(scheme.user(0).caching, basis_matrix(3, 2, 0, 0));
        let own = basis_matrix(3, 2, 0, 0);
        let expect =
            FieldMatrix::block_diag(2, &[own.clone(), own]).unwrap();
        assert_eq!((expect.rows(), expect.cols()), (6, 18));
        assert_eq!(scheme.user(0).decoding, expect);
        // the digit-sum user (0,3,0) caches exactly Q_0
        let p = ConstructionParams::new(3, 2, 1).unwrap();
        let k_sum = p.flat_index(UserId { u: 0, v: 3, eps: 0 });
        assert_eq!(scheme.user(k_sum).caching, sum_matrix(3, 2, 0));
        assert!(scheme.verify().pass);
    }

    #[test]
    fn caching_row_weight_bounds() {
        // caching rows of class users are unit rows; only digit-sum rows
        // carry q ones
        let params = ConstructionParams::new(3, 2, 2).unwrap();
        let scheme = build_scheme(params);
        for k in 0..scheme.users() {
            let id = params.user_id(k);
            let u = scheme.user(k);
            for i in 0..u.caching.rows() {
                let weight: u32 = u.caching.row(i).iter().sum();
                if id.v < params.q() {
                    assert_eq!(weight, 1);
                } else {
                    assert!(weight == 1 || weight == params.q() as u32);
                }
            }
            for m in [&u.coding, &u.decoding] {
                for i in 0..m.rows() {
                    let weight: u32 = m.row(i).iter().sum();
                    assert!(weight <= params.q() as u32);
                }
            }
        }
    }

    #[test]
    fn small_sweep_verifies_and_round_trips() {
        for (q, m, z) in [(2, 1, 1), (2, 3, 1), (3, 2, 2), (4, 2, 3)] {
            let params = ConstructionParams::new(q, m, z).unwrap();
            let scheme = build_scheme(params);
            assert_eq!(scheme.users(), params.user_count());
            assert_eq!(scheme.nominal_rate(), Ratio::new(params.rate() as u64, 1));
            let report = scheme.verify();
            assert!(report.pass, "(q,m,z)=({q},{m},{z})");

            let library =
                PacketLibrary::random(2, scheme.users(), scheme.packet_count(), 4, 17).unwrap();
            let demands = random_demands(scheme.users(), scheme.users(), 5, 23);
            round_trip(&scheme, &library, &demands).unwrap();
        }
    }

    #[test]
    fn subspace_identities_small_cases() {
        for (q, m) in [(2, 1), (2, 2), (3, 2)] {
            let report = check_subspace_identities(q, m);
            assert!(report.pass, "(q,m)=({q},{m}): {:?}", report.failures);
            assert!(report.checks > 0);
        }
    }

    #[test]
    fn transposed_transfer_matrix_breaks_same_digit_identity() {
        let (q, m) = (3, 2);
        let c = transfer_matrix(q, m, 0, 0, 1).transpose();
        let e = basis_matrix(q, m, 0, 0);
        let product = e.matmul(&c).unwrap();
        // the genuine matrix maps E_{0,0} onto E_{0,1}; the transpose does not
        assert!(!basis_matrix(q, m, 0, 1).row_space_equals(&product));
    }
}
