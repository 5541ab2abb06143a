//! Linear coded caching toolkit.
//!
//! A centralized caching scheme splits each file into F packets, fills user
//! caches during off-peak hours and serves all demands with one coded
//! broadcast. Here schemes are linear maps over a prime field: per user a
//! caching matrix (placement), a coding matrix (broadcast contribution) and
//! a decoding matrix (extraction), decodable exactly when a rank condition
//! holds on every user pair.
//!
//! The crate provides:
//!
//! - exact GF(p) dense linear algebra ([`field`]);
//! - placement delivery arrays, their validation, the binomial construction
//!   and conversion to matrix form ([`pda`]);
//! - the scheme container, rank-condition verifier and the full
//!   place/broadcast/decode engine ([`scheme`]);
//! - a GF(2) scheme family built from q-ary digit partitions with packet
//!   counts exponentially below the binomial construction ([`qary`]);
//! - concatenation to arbitrary user counts ([`concat`]);
//! - a bridge turning repair-optimal storage codes into caching schemes
//!   ([`msr`]).
//!
//! Everything is exact integer arithmetic; verification is by rank
//! computation, never by sampling.

pub mod concat;
pub mod error;
pub mod field;
mod io;
pub mod msr;
pub mod pda;
pub mod qary;
pub mod scheme;

pub use error::{Error, Result};
pub use field::{FieldMatrix, PacketBlock};
pub use pda::{Pda, PdaCell, PdaReport};
pub use scheme::{LinearScheme, PacketLibrary, UserMatrices, VerifyReport};
