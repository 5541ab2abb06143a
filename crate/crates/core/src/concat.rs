//! Extending a K1-user scheme to more users.
//!
//! Two label matrices drive the extension: A assigns each new user a cyclic
//! slate of source users, B schedules which broadcast stripe each source
//! user occupies so that no new user ever collides with its own sources.
//! The selector Gamma(B, k) lifts a source user's matrices into the striped
//! signal by a Kronecker product. Packet count multiplies by h1, rate by
//! (h1 + h2)/h1, and the memory ratio is untouched. For targets more than
//! twice the base size, the base scheme is first replicated group-wise.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::field::FieldMatrix;
use crate::scheme::{LinearScheme, UserMatrices};

/// The pair of label matrices for (K1, K2), plus the stripe counts
/// h1 = K1 / gcd(K1, K2) and h2 = K2 / gcd(K1, K2).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LabelMatrices {
    pub k1: usize,
    pub k2: usize,
    pub h1: usize,
    pub h2: usize,
    /// h1 x (K1 + K2), entries mod K1: row j lists the source users.
    pub a: Vec<Vec<usize>>,
    /// h1 x (K1 + K2), entries in [0, h1 + h2): stripe labels, distinct per column.
    pub b: Vec<Vec<usize>>,
}

fn gcd(a: usize, b: usize) -> usize {
    num_integer::gcd(a, b)
}

pub fn label_matrices(k1: usize, k2: usize) -> Result<LabelMatrices> {
    if k1 == 0 || k2 == 0 || k2 > k1 {
        return Err(Error::InvalidParameter(format!(
            "label matrices need 1 <= K2 <= K1, got K1 = {k1}, K2 = {k2}"
        )));
    }
    let g = gcd(k1, k2);
    let h1 = k1 / g;
    let h2 = k2 / g;

    let a: Vec<Vec<usize>> = (0..h1)
        .map(|j| {
            let mut row: Vec<usize> = (0..k1).collect();
            row.extend((0..k2).map(|i| (j * k2 + i) % k1));
            row
        })
        .collect();

    let b: Vec<Vec<usize>> = (0..h1)
        .map(|j| {
            // the K2 consecutive residues starting at j*K2 form this row's window
            let window: Vec<usize> = (0..k2).map(|i| (j * k2 + i) % k1).collect();
            (0..k1 + k2)
                .map(|k| {
                    if k < k1 && window.contains(&k) {
                        h1 + (j * k2 + (k + k1 - (j * k2) % k1) % k1) / k1
                    } else {
                        j
                    }
                })
                .collect()
        })
        .collect();

    Ok(LabelMatrices { k1, k2, h1, h2, a, b })
}

pub fn label_matrix_a(k1: usize, k2: usize) -> Result<Vec<Vec<usize>>> {
    Ok(label_matrices(k1, k2)?.a)
}

pub fn label_matrix_b(k1: usize, k2: usize) -> Result<Vec<Vec<usize>>> {
    Ok(label_matrices(k1, k2)?.b)
}

/// (h1 + h2) x h1 selector for column k of B: entry (x, j) is 1 iff
/// b_{j,k} = x. Each column holds exactly one 1, in distinct rows, so
/// Gamma^T Gamma is the h1 x h1 identity over any field.
pub fn gamma(labels: &LabelMatrices, k: usize, modulus: u32) -> Result<FieldMatrix> {
    if k >= labels.k1 + labels.k2 {
        return Err(Error::InvalidParameter(format!(
            "gamma: column {k} out of range for {} users",
            labels.k1 + labels.k2
        )));
    }
    let rows = labels.h1 + labels.h2;
    let mut out = FieldMatrix::zeros(modulus, rows, labels.h1)?;
    for j in 0..labels.h1 {
        out.set(labels.b[j][k], j, 1);
    }
    Ok(out)
}

/// Places `m` into a `rows x cols` zero matrix at the top-left corner.
fn pad_to(m: &FieldMatrix, rows: usize, cols: usize) -> FieldMatrix {
    let mut out = FieldMatrix::zeros(m.modulus(), rows, cols).expect("modulus already valid");
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if v != 0 {
                out.set(i, j, v);
            }
        }
    }
    out
}

/// Lifts a K1-user scheme to K1 + K2 users (1 <= K2 <= K1).
///
/// Source users keep block-diagonal caching, coding striped by
/// Gamma(B, k1) (x) A_{k1} and decoding by Gamma(B, k1)^T (x) S'_{k1}. Each
/// new user runs the block diagonal of its h1 source users, padded with the
/// h2 stripes it never occupies. F multiplies by h1, the rate becomes
/// (1 + h2/h1) R, M/N is unchanged.
pub fn extend_scheme(scheme: &LinearScheme, k2: usize) -> Result<LinearScheme> {
    let k1 = scheme.users();
    let labels = label_matrices(k1, k2)?;
    let (h1, h2) = (labels.h1, labels.h2);
    let p = scheme.modulus();
    let f = scheme.packet_count();
    let signal = scheme.signal_rows();

    let mut users = Vec::with_capacity(k1 + k2);
    for k in 0..k1 {
        let u = scheme.user(k);
        let g = gamma(&labels, k, p)?;
        let caching = FieldMatrix::block_diag(p, &vec![u.caching.clone(); h1])?;
        let coding = g.kron(&u.coding)?;
        let decoding = g.transpose().kron(&u.decoding)?;
        users.push(UserMatrices {
            caching,
            coding,
            decoding,
        });
    }
    for k in k1..k1 + k2 {
        let sources: Vec<usize> = (0..h1).map(|j| labels.a[j][k]).collect();
        let caching = FieldMatrix::block_diag(
            p,
            &sources
                .iter()
                .map(|&s| scheme.user(s).caching.clone())
                .collect::<Vec<_>>(),
        )?;
        let coding_diag = FieldMatrix::block_diag(
            p,
            &sources
                .iter()
                .map(|&s| scheme.user(s).coding.clone())
                .collect::<Vec<_>>(),
        )?;
        // new users never occupy the last h2 stripes of the signal
        let coding = pad_to(&coding_diag, (h1 + h2) * signal, h1 * f);
        let decoding_diag = FieldMatrix::block_diag(
            p,
            &sources
                .iter()
                .map(|&s| scheme.user(s).decoding.clone())
                .collect::<Vec<_>>(),
        )?;
        let decoding = pad_to(&decoding_diag, decoding_diag.rows(), (h1 + h2) * signal);
        users.push(UserMatrices {
            caching,
            coding,
            decoding,
        });
    }

    let rate = scheme.nominal_rate() * Ratio::new((h1 + h2) as u64, h1 as u64);
    LinearScheme::new(p, h1 * f, scheme.cache_fraction(), rate, users)
}

/// Runs `copies` independent instances of the scheme side by side: same
/// packet count, user g*K1 + k behaves as user k of instance g, and the
/// broadcast is the concatenation of the per-instance signals.
pub fn group_scheme(scheme: &LinearScheme, copies: usize) -> Result<LinearScheme> {
    if copies == 0 {
        return Err(Error::InvalidParameter("group_scheme needs at least one copy".into()));
    }
    let k1 = scheme.users();
    let p = scheme.modulus();
    let f = scheme.packet_count();
    let signal = scheme.signal_rows();
    let mut users = Vec::with_capacity(copies * k1);
    for g in 0..copies {
        for k in 0..k1 {
            let u = scheme.user(k);
            let mut coding = FieldMatrix::zeros(p, copies * signal, f)?;
            for i in 0..signal {
                for j in 0..f {
                    let v = u.coding.get(i, j);
                    if v != 0 {
                        coding.set(g * signal + i, j, v);
                    }
                }
            }
            let mut decoding = FieldMatrix::zeros(p, u.decoding.rows(), copies * signal)?;
            for i in 0..u.decoding.rows() {
                for j in 0..signal {
                    let v = u.decoding.get(i, j);
                    if v != 0 {
                        decoding.set(i, g * signal + j, v);
                    }
                }
            }
            users.push(UserMatrices {
                caching: u.caching.clone(),
                coding,
                decoding,
            });
        }
    }
    let rate = scheme.nominal_rate() * Ratio::new(copies as u64, 1);
    LinearScheme::new(p, f, scheme.cache_fraction(), rate, users)
}

/// Reaches an arbitrary user count K > K1: a direct extension when
/// K - K1 <= K1, otherwise group replication to floor(K/K1) copies followed
/// by an extension with the remainder. The resulting rate is exactly
/// (K / K1) times the base rate.
pub fn compose_for_users(scheme: &LinearScheme, k_target: usize) -> Result<LinearScheme> {
    let k1 = scheme.users();
    if k_target <= k1 {
        return Err(Error::InvalidParameter(format!(
            "compose_for_users needs a target above {k1}, got {k_target}"
        )));
    }
    let k2 = k_target - k1;
    if k2 <= k1 {
        return extend_scheme(scheme, k2);
    }
    let copies = k2 / k1 + 1;
    let remainder = k_target - copies * k1;
    let grouped = group_scheme(scheme, copies)?;
    if remainder == 0 {
        Ok(grouped)
    } else {
        extend_scheme(&grouped, remainder)
    }
}
