//! Python bindings: matrices over GF(p), placement delivery arrays, linear
//! caching schemes and the storage-code bridge.
//!
//! Build with `cargo build -p lcc-py`, then rename the produced
//! `liblcc_py.so` to `lcc_py.so` somewhere on `sys.path` (the smoke test in
//! python/smoke_test.py does this automatically).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use lcc_core::error::Error as CoreError;
use lcc_core::{concat, msr, pda, qary, scheme};

fn err(e: CoreError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Dense matrix over a prime field GF(p).
#[pyclass(name = "Matrix", skip_from_py_object)]
#[derive(Clone)]
struct PyMatrix {
    inner: lcc_core::FieldMatrix,
}

#[pymethods]
impl PyMatrix {
    #[new]
    fn new(modulus: u32, rows: Vec<Vec<u32>>) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: lcc_core::FieldMatrix::from_rows(modulus, rows).map_err(err)?,
        })
    }

    #[staticmethod]
    fn zeros(modulus: u32, rows: usize, cols: usize) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: lcc_core::FieldMatrix::zeros(modulus, rows, cols).map_err(err)?,
        })
    }

    #[staticmethod]
    fn identity(modulus: u32, n: usize) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: lcc_core::FieldMatrix::identity(modulus, n).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: lcc_core::FieldMatrix::from_text(text).map_err(err)?,
        })
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[getter]
    fn modulus(&self) -> u32 {
        self.inner.modulus()
    }

    fn to_list(&self) -> Vec<Vec<u32>> {
        (0..self.inner.rows())
            .map(|i| self.inner.row(i).to_vec())
            .collect()
    }

    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn invert(&self) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: self.inner.invert().map_err(err)?,
        })
    }

    fn matmul(&self, other: &PyMatrix) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: self.inner.matmul(&other.inner).map_err(err)?,
        })
    }

    fn kron(&self, other: &PyMatrix) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: self.inner.kron(&other.inner).map_err(err)?,
        })
    }

    fn transpose(&self) -> Self {
        PyMatrix {
            inner: self.inner.transpose(),
        }
    }

    /// Solves D * self = target for D; raises when infeasible.
    fn solve_left(&self, target: &PyMatrix) -> PyResult<Self> {
        Ok(PyMatrix {
            inner: self.inner.solve_left(&target.inner).map_err(err)?,
        })
    }

    fn row_space_contains(&self, other: &PyMatrix) -> bool {
        self.inner.row_space_contains(&other.inner)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "Matrix(GF({}), {}x{})",
            self.inner.modulus(),
            self.inner.rows(),
            self.inner.cols()
        )
    }
}

/// (K, F, Z, S) placement delivery array.
#[pyclass(name = "Pda", skip_from_py_object)]
#[derive(Clone)]
struct PyPda {
    inner: pda::Pda,
}

#[pymethods]
impl PyPda {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyPda {
            inner: pda::Pda::from_text(text).map_err(err)?,
        })
    }

    /// Binomial-subset array with F = C(K, t).
    #[staticmethod]
    fn binomial(users: usize, t: usize) -> PyResult<Self> {
        Ok(PyPda {
            inner: pda::mn_pda(users, t).map_err(err)?,
        })
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.users()
    }

    #[getter]
    fn packet_rows(&self) -> usize {
        self.inner.packet_rows()
    }

    #[getter]
    fn stars_per_column(&self) -> usize {
        self.inner.stars_per_column()
    }

    #[getter]
    fn symbols(&self) -> usize {
        self.inner.symbols()
    }

    /// Returns (valid, violations) where violations are human-readable.
    fn validate(&self) -> (bool, Vec<String>) {
        let report = self.inner.validate();
        let violations = report
            .violations
            .iter()
            .map(|v| format!("{}: {} {:?}", v.condition, v.detail, v.coordinates))
            .collect();
        (report.valid, violations)
    }

    #[pyo3(signature = (modulus = 2))]
    fn to_scheme(&self, modulus: u32) -> PyResult<PyScheme> {
        Ok(PyScheme {
            inner: self.inner.to_linear(modulus).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "Pda(K={}, F={}, Z={}, S={})",
            self.inner.users(),
            self.inner.packet_rows(),
            self.inner.stars_per_column(),
            self.inner.symbols()
        )
    }
}

/// Linear caching scheme: per-user caching/coding/decoding matrices.
#[pyclass(name = "Scheme", skip_from_py_object)]
#[derive(Clone)]
struct PyScheme {
    inner: scheme::LinearScheme,
}

#[pymethods]
impl PyScheme {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyScheme {
            inner: scheme::LinearScheme::from_text(text).map_err(err)?,
        })
    }

    #[getter]
    fn users(&self) -> usize {
        self.inner.users()
    }

    #[getter]
    fn packet_count(&self) -> usize {
        self.inner.packet_count()
    }

    #[getter]
    fn modulus(&self) -> u32 {
        self.inner.modulus()
    }

    /// Memory ratio M/N as a (numerator, denominator) pair.
    #[getter]
    fn cache_fraction(&self) -> (u64, u64) {
        let f = self.inner.cache_fraction();
        (*f.numer(), *f.denom())
    }

    /// Nominal rate R as a (numerator, denominator) pair.
    #[getter]
    fn rate(&self) -> (u64, u64) {
        let r = self.inner.nominal_rate();
        (*r.numer(), *r.denom())
    }

    fn caching_matrix(&self, k: usize) -> PyResult<PyMatrix> {
        self.user_matrix(k, 0)
    }

    fn coding_matrix(&self, k: usize) -> PyResult<PyMatrix> {
        self.user_matrix(k, 1)
    }

    fn decoding_matrix(&self, k: usize) -> PyResult<PyMatrix> {
        self.user_matrix(k, 2)
    }

    /// Returns (pass, failures) with one string per failing check.
    fn verify(&self) -> (bool, Vec<String>) {
        let report = self.inner.verify();
        let mut failures: Vec<String> = report
            .rank_defects
            .iter()
            .map(|d| format!("user {} {:?} matrix rank {} < {} rows", d.user, d.role, d.rank, d.rows))
            .collect();
        failures.extend(report.failed_pairs().map(|p| {
            format!(
                "pair ({}, {}): rank {} != expected {}",
                p.user, p.other, p.observed_rank, p.expected_rank
            )
        }));
        (report.pass, failures)
    }

    /// Runs place/broadcast/decode on a seeded library; returns the number
    /// of successful user decodes (demands * users when everything works).
    #[pyo3(signature = (seed = 7, demands = 10, block_size = 16, files = None))]
    fn round_trip(
        &self,
        seed: u64,
        demands: usize,
        block_size: usize,
        files: Option<usize>,
    ) -> PyResult<usize> {
        let files = files.unwrap_or(self.inner.users());
        let library = scheme::PacketLibrary::random(
            self.inner.modulus(),
            files,
            self.inner.packet_count(),
            block_size,
            seed,
        )
        .map_err(err)?;
        let demand_list = scheme::random_demands(self.inner.users(), files, demands, seed ^ 0xD1CE);
        scheme::round_trip(&self.inner, &library, &demand_list)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Worst observed transmitted-row fraction over the demand sweep,
    /// as ((worst_num, worst_den), demands_checked).
    #[pyo3(signature = (files = None, seed = 7))]
    fn measured_rate(&self, files: Option<usize>, seed: u64) -> ((u64, u64), usize) {
        let files = files.unwrap_or(self.inner.users());
        let report = self.inner.measured_rate(files, seed);
        (
            (*report.worst_observed.numer(), *report.worst_observed.denom()),
            report.demands_checked,
        )
    }

    /// Concatenates up to `k_target` users (grouping + extension).
    fn extend_to(&self, k_target: usize) -> PyResult<Self> {
        Ok(PyScheme {
            inner: concat::compose_for_users(&self.inner, k_target).map_err(err)?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scheme(K={}, F={}, p={}, M/N={}, R={})",
            self.inner.users(),
            self.inner.packet_count(),
            self.inner.modulus(),
            self.inner.cache_fraction(),
            self.inner.nominal_rate()
        )
    }
}

impl PyScheme {
    fn user_matrix(&self, k: usize, which: usize) -> PyResult<PyMatrix> {
        if k >= self.inner.users() {
            return Err(PyValueError::new_err(format!(
                "user {k} out of range for {} users",
                self.inner.users()
            )));
        }
        let u = self.inner.user(k);
        let m = match which {
            0 => &u.caching,
            1 => &u.coding,
            _ => &u.decoding,
        };
        Ok(PyMatrix { inner: m.clone() })
    }
}

/// Systematic storage code with repair subspaces.
#[pyclass(name = "StorageCode")]
struct PyStorageCode {
    code: msr::MsrCode,
    subspaces: msr::RepairSubspaces,
}

#[pymethods]
impl PyStorageCode {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        let (code, subspaces) = msr::from_text(text).map_err(err)?;
        Ok(PyStorageCode { code, subspaces })
    }

    #[getter]
    fn systematic(&self) -> usize {
        self.code.systematic()
    }

    #[getter]
    fn parity(&self) -> usize {
        self.code.parity()
    }

    #[getter]
    fn node_size(&self) -> usize {
        self.code.node_size()
    }

    fn verify_repair(&self) -> bool {
        msr::verify_repair(&self.code, &self.subspaces).pass
    }

    fn verify_mds(&self) -> PyResult<bool> {
        msr::verify_mds(&self.code).map_err(err)
    }

    fn to_scheme(&self) -> PyResult<PyScheme> {
        Ok(PyScheme {
            inner: msr::to_scheme(&self.code, &self.subspaces).map_err(err)?,
        })
    }
}

/// q^m-division scheme over GF(2) with K = m(q+1)h users, M/N = z/q,
/// rate q - z.
#[pyfunction]
fn theorem3_scheme(q: usize, m: usize, z: usize) -> PyResult<PyScheme> {
    let params = qary::ConstructionParams::new(q, m, z).map_err(err)?;
    Ok(PyScheme {
        inner: qary::build_scheme(params),
    })
}

/// Exhaustive subspace-identity check; returns (pass, checks, failures).
#[pyfunction]
fn check_subspace_identities(q: usize, m: usize) -> (bool, usize, usize) {
    let report = qary::check_subspace_identities(q, m);
    (report.pass, report.checks, report.failures.len())
}

#[pymodule]
fn lcc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyPda>()?;
    m.add_class::<PyScheme>()?;
    m.add_class::<PyStorageCode>()?;
    m.add_function(wrap_pyfunction!(theorem3_scheme, m)?)?;
    m.add_function(wrap_pyfunction!(check_subspace_identities, m)?)?;
    Ok(())
}
