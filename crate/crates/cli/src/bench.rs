//! Exact rate/packet-count comparison tables for the scheme families at a
//! fixed memory ratio.
//!
//! All arithmetic is exact: binomials in big integers, rates as big
//! rationals. A family marks N/A at a user count its divisibility
//! constraints exclude.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};

/// Scheme families compared by the bench command.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SchemeFamily {
    /// Binomial-subset scheme: F = C(K, KM/N).
    Mn,
    /// The q-ary array family with F = q^(K/q - 1).
    Yan,
    /// The q-ary digit-partition family with F = q^(K/((q+1)h)).
    Theorem3,
    /// Digit-partition base composed up to an otherwise unreachable K.
    Composed,
}

impl SchemeFamily {
    pub fn label(&self) -> &'static str {
        match self {
            SchemeFamily::Mn => "mn",
            SchemeFamily::Yan => "yan",
            SchemeFamily::Theorem3 => "theorem3",
            SchemeFamily::Composed => "composed",
        }
    }
}

/// One table entry; `rate`/`packets` are None when the family has no scheme
/// at this user count.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BenchRow {
    pub family: SchemeFamily,
    pub users: u64,
    pub q: Option<u64>,
    pub z: Option<u64>,
    pub memory_ratio: Ratio<u64>,
    pub rate: Option<BigRational>,
    pub packets: Option<BigUint>,
}

fn big_binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc = acc * BigUint::from(n - k + i) / BigUint::from(i);
    }
    acc
}

fn big_ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn mn_row(users: u64, ratio: Ratio<u64>) -> BenchRow {
    let (a, b) = (*ratio.numer(), *ratio.denom());
    let mut row = BenchRow {
        family: SchemeFamily::Mn,
        users,
        q: None,
        z: None,
        memory_ratio: ratio,
        rate: None,
        packets: None,
    };
    if (users * a).is_multiple_of(b) {
        let t = users * a / b;
        if t > 0 && t < users {
            // R = K (1 - M/N) / (1 + K M/N) = K (b - a) / (b + K a)
            row.rate = Some(big_ratio(users * (b - a), b + users * a));
            row.packets = Some(big_binomial(users, t));
        }
    }
    row
}

fn yan_row(users: u64, ratio: Ratio<u64>) -> BenchRow {
    let (a, b) = (*ratio.numer(), *ratio.denom());
    let q = b;
    let mut row = BenchRow {
        family: SchemeFamily::Yan,
        users,
        q: Some(q),
        z: None,
        memory_ratio: ratio,
        rate: None,
        packets: None,
    };
    // the family exists at memory ratios 1/q and (q-1)/q, for K a multiple
    // of q with at least two groups
    if q >= 2 && (a == 1 || a + 1 == b) && users.is_multiple_of(q) && users / q >= 2 {
        let exp = (users / q - 1) as u32;
        row.packets = Some(BigUint::from(q).pow(exp));
        row.rate = Some(if a == 1 {
            big_ratio(q - 1, 1)
        } else {
            big_ratio(1, q - 1)
        });
    }
    row
}

/// Groups per class for the digit-partition family: floor((q-1)/(q-z)).
fn group_count(q: u64, z: u64) -> u64 {
    (q - 1) / (q - z)
}

fn theorem3_row(users: u64, ratio: Ratio<u64>) -> BenchRow {
    let (z, q) = (*ratio.numer(), *ratio.denom());
    let mut row = BenchRow {
        family: SchemeFamily::Theorem3,
        users,
        q: Some(q),
        z: Some(z),
        memory_ratio: ratio,
        rate: None,
        packets: None,
    };
    if q >= 2 && z >= 1 && z < q {
        let block = (q + 1) * group_count(q, z);
        if users.is_multiple_of(block) && users / block >= 1 {
            let m = (users / block) as u32;
            row.rate = Some(big_ratio(q - z, 1));
            row.packets = Some(BigUint::from(q).pow(m));
        }
    }
    row
}

/// Composition arithmetic without building matrices: base K1 users with
/// packet count F1, target K > K1. Mirrors the group-then-extend recipe.
fn composed_packets(k1: u64, f1: &BigUint, k_target: u64) -> BigUint {
    let k2 = k_target - k1;
    if k2 <= k1 {
        let h1 = k1 / k1.gcd(&k2);
        return f1 * BigUint::from(h1);
    }
    let copies = k2 / k1 + 1;
    let remainder = k_target - copies * k1;
    if remainder == 0 {
        f1.clone()
    } else {
        let base = copies * k1;
        f1 * BigUint::from(base / base.gcd(&remainder))
    }
}

fn composed_row(users: u64, ratio: Ratio<u64>, direct_available: bool) -> BenchRow {
    let (z, q) = (*ratio.numer(), *ratio.denom());
    let mut row = BenchRow {
        family: SchemeFamily::Composed,
        users,
        q: Some(q),
        z: Some(z),
        memory_ratio: ratio,
        rate: None,
        packets: None,
    };
    if direct_available || q < 2 || z < 1 || z >= q {
        return row;
    }
    let block = (q + 1) * group_count(q, z);
    let m = (users.saturating_sub(1)) / block;
    if m == 0 {
        return row;
    }
    let k1 = m * block;
    let f1 = BigUint::from(q).pow(m as u32);
    // rate = (K / K1) (q - z)
    row.rate = Some(big_ratio(users * (q - z), k1));
    row.packets = Some(composed_packets(k1, &f1, users));
    row
}

/// Builds the full table: four rows per user count, in family order.
pub fn bench_rows(ratio: Ratio<u64>, user_counts: &[u64]) -> Vec<BenchRow> {
    let mut rows = Vec::with_capacity(user_counts.len() * 4);
    for &k in user_counts {
        let direct = theorem3_row(k, ratio);
        let direct_available = direct.packets.is_some();
        rows.push(mn_row(k, ratio));
        rows.push(yan_row(k, ratio));
        rows.push(direct);
        rows.push(composed_row(k, ratio, direct_available));
    }
    rows
}

pub fn render_rate(rate: &BigRational) -> String {
    let approx = rate.to_f64().unwrap_or(f64::NAN);
    if rate.is_integer() {
        format!("{} ({approx:.4})", rate.numer())
    } else {
        format!("{}/{} ({approx:.4})", rate.numer(), rate.denom())
    }
}

/// Fixed-order CSV: label,K,q,z,MN_num,MN_den,R_num,R_den,F with empty
/// fields where a family is N/A.
pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("label,K,q,z,MN_num,MN_den,R_num,R_den,F\n");
    for row in rows {
        let opt = |v: Option<u64>| v.map_or(String::new(), |x| x.to_string());
        let (rn, rd) = row
            .rate
            .as_ref()
            .map_or((String::new(), String::new()), |r| {
                (r.numer().to_string(), r.denom().to_string())
            });
        let f = row
            .packets
            .as_ref()
            .map_or(String::new(), |p| p.to_string());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.family.label(),
            row.users,
            opt(row.q),
            opt(row.z),
            row.memory_ratio.numer(),
            row.memory_ratio.denom(),
            rn,
            rd,
            f
        ));
    }
    out
}

pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<6} {:<10} {:<6} {:<22} {}\n",
        "K", "family", "M/N", "R", "F"
    ));
    for row in rows {
        let rate = row
            .rate
            .as_ref()
            .map_or("N/A".to_string(), render_rate);
        let packets = row
            .packets
            .as_ref()
            .map_or("N/A".to_string(), |p| p.to_string());
        out.push_str(&format!(
            "{:<6} {:<10} {:<6} {:<22} {}\n",
            row.users,
            row.family.label(),
            format!("{}/{}", row.memory_ratio.numer(), row.memory_ratio.denom()),
            rate,
            packets
        ));
    }
    out
}
