//! Python bindings: metrics, reduced meshes, solvers and the Monte-Carlo statistics.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use anisofm::experiments::{self, item_rng, random_spd, theta_grid};
use anisofm::lattice;
use anisofm::mesh::{self, ReducedMesh};
use anisofm::metric::{LatticeVector, Rotation, SpdMatrix};
use anisofm::solver::{self, DistanceField, Grid};

fn py_err(e: anisofm::Error) -> PyErr {
    if e.is_defect() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn lattice_vector(z: &[i64]) -> PyResult<LatticeVector> {
    LatticeVector::new(z).map_err(py_err)
}

fn to_lists(vs: &[LatticeVector]) -> Vec<Vec<i64>> {
    vs.iter().map(|v| v.as_slice().to_vec()).collect()
}

/// Constant symmetric positive definite metric.
#[pyclass(name = "Metric", module = "anisofm_py", frozen)]
struct PyMetric {
    inner: SpdMatrix,
}

#[pymethods]
impl PyMetric {
    #[new]
    fn new(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: SpdMatrix::from_rows(&rows).map_err(py_err)? })
    }

    #[staticmethod]
    fn identity(dim: usize) -> PyResult<Self> {
        Ok(Self { inner: SpdMatrix::identity(dim).map_err(py_err)? })
    }

    /// Diagonal metric with the given eigenvalues; in 2D `axis` is the eigenvector of
    /// the first eigenvalue.
    #[staticmethod]
    #[pyo3(signature = (eigenvalues, axis=None))]
    fn from_spectrum(eigenvalues: Vec<f64>, axis: Option<[f64; 2]>) -> PyResult<Self> {
        let r = match axis {
            Some(a) if eigenvalues.len() == 2 => Rotation::from_axis_2d(a),
            Some(_) => return Err(PyValueError::new_err("axis is only supported in dimension 2")),
            None => Rotation::identity(eigenvalues.len()),
        }
        .map_err(py_err)?;
        Ok(Self { inner: anisofm::metric::spd_from_spectrum(&eigenvalues, &r).map_err(py_err)? })
    }

    /// Random metric with unit determinant, item `index` of the stream seeded by `seed`.
    #[staticmethod]
    #[pyo3(signature = (dim, kappa_max, seed, index=0))]
    fn random(dim: usize, kappa_max: f64, seed: u64, index: u64) -> PyResult<Self> {
        Ok(Self { inner: random_spd(dim, kappa_max, &mut item_rng(seed, index)).map_err(py_err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn det(&self) -> f64 {
        self.inner.det()
    }

    fn anisotropy_ratio(&self) -> PyResult<f64> {
        self.inner.anisotropy_ratio().map_err(py_err)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows()
    }

    /// `‖z‖_M` of an integer vector.
    fn norm(&self, z: Vec<i64>) -> PyResult<f64> {
        let z = lattice_vector(&z)?;
        if z.dim() != self.inner.dim() {
            return Err(PyValueError::new_err("dimension mismatch"));
        }
        Ok(self.inner.lattice_norm(&z))
    }

    fn __repr__(&self) -> String {
        format!("Metric({:?})", self.inner.rows())
    }
}

/// Minkowski-reduced basis: the basis vectors and their norms `λ₁ ≤ … ≤ λ_d`.
#[pyfunction]
fn reduce_basis(m: &PyMetric) -> PyResult<(Vec<Vec<i64>>, Vec<f64>)> {
    let b = lattice::reduce_basis(&m.inner).map_err(py_err)?;
    Ok((to_lists(b.vectors()), b.norms().to_vec()))
}

/// The M-reduced mesh of a metric.
#[pyclass(name = "Mesh", module = "anisofm_py", frozen)]
struct PyMesh {
    metric: SpdMatrix,
    inner: ReducedMesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    fn new(m: &PyMetric) -> PyResult<Self> {
        let b = lattice::reduce_basis(&m.inner).map_err(py_err)?;
        let inner = mesh::build_mesh(&m.inner, &b).map_err(py_err)?;
        Ok(Self { metric: m.inner, inner })
    }

    fn __len__(&self) -> usize {
        self.inner.simplices().len()
    }

    /// Non-zero vertices of each simplex.
    fn simplices(&self) -> Vec<Vec<Vec<i64>>> {
        self.inner.simplices().iter().map(|s| to_lists(s.nonzero())).collect()
    }

    fn vertices(&self) -> Vec<Vec<i64>> {
        to_lists(&self.inner.vertices())
    }

    /// Largest simplex radius `r_M(𝒯)`.
    fn radius(&self) -> f64 {
        mesh::mesh_metrics(&self.metric, &self.inner).r_mesh
    }

    #[pyo3(signature = (rays=mesh::DEFAULT_RAY_COUNT))]
    fn verify<'py>(&self, py: Python<'py>, rays: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = mesh::verify_mesh_with(&self.metric, &self.inner, rays);
        let d = PyDict::new(py);
        d.set_item("passed", r.passed())?;
        d.set_item("covering", r.covering)?;
        d.set_item("unit_covolume", r.unit_covolume)?;
        d.set_item("acuteness", r.acuteness)?;
        d.set_item("worst_acuteness_margin", r.worst_acuteness_margin)?;
        d.set_item("rays_checked", r.rays_checked)?;
        d.set_item("rays_failed", r.rays_failed)?;
        Ok(d)
    }

    fn dump(&self) -> String {
        self.inner.dump()
    }
}

/// Discrete distance on the grid `{-n,…,n}ᵈ`.
#[pyclass(name = "Field", module = "anisofm_py", frozen)]
struct PyField {
    inner: DistanceField,
}

#[pymethods]
impl PyField {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.grid().dim()
    }

    #[getter]
    fn n(&self) -> i64 {
        self.inner.grid().half_width()
    }

    /// Values in lexicographic node order, first coordinate slowest.
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    fn __getitem__(&self, z: Vec<i64>) -> PyResult<f64> {
        Ok(self.inner.get(&lattice_vector(&z)?))
    }

    fn write_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        let f = std::fs::File::create(&path).map_err(|e| PyValueError::new_err(e.to_string()))?;
        self.inner.write_csv(std::io::BufWriter::new(f)).map_err(py_err)
    }
}

/// Solves on `{-n,…,n}ᵈ` with `scheme` one of `fm`, `gs`, `igs`.
#[pyfunction]
#[pyo3(signature = (m, n, scheme="fm", tol=1e-10))]
fn solve(py: Python<'_>, m: &PyMetric, n: i64, scheme: &str, tol: f64) -> PyResult<PyField> {
    let metric = m.inner;
    let scheme = scheme.to_string();
    let field = py.detach(move || -> anisofm::Result<DistanceField> {
        let grid = Grid::new(metric.dim(), n)?;
        match scheme.as_str() {
            "fm" | "gs" => {
                let mesh = mesh::build_mesh(&metric, &lattice::reduce_basis(&metric)?)?;
                if scheme == "fm" {
                    Ok(solver::fast_march(&metric, &mesh, grid)?.0)
                } else {
                    solver::gauss_seidel_solve(&metric, &mesh, grid, tol)
                }
            }
            "igs" => solver::br_baseline_solve(&metric, grid, tol),
            other => Err(anisofm::Error::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    });
    Ok(PyField { inner: field.map_err(py_err)? })
}

/// `max |𝔡(z) − ‖z‖_M|` over all finite nodes, or over `Ω*¹` only.
#[pyfunction]
#[pyo3(signature = (m, field, omega1=false))]
fn linf_error(m: &PyMetric, field: &PyField, omega1: bool) -> PyResult<f64> {
    if !omega1 {
        return Ok(solver::linf_error(&m.inner, &field.inner, None).0);
    }
    let mesh = mesh::build_mesh(&m.inner, &lattice::reduce_basis(&m.inner).map_err(py_err)?).map_err(py_err)?;
    let mask = solver::omega1_mask(&mesh, field.inner.grid()).map_err(py_err)?;
    Ok(solver::linf_error(&m.inner, &field.inner, Some(&mask)).0)
}

/// `(θ, λ₂)` pairs of `diag(κ, 1/κ)` rotated over `steps` angles in `[0, π/4]`.
#[pyfunction]
fn rotation_sweep(kappa: f64, steps: usize) -> PyResult<Vec<(f64, f64)>> {
    let recs = experiments::rotation_sweep(kappa, &theta_grid(steps)).map_err(py_err)?;
    Ok(recs.iter().map(|r| (r.theta, r.lambda_d)).collect())
}

/// Haar average of `λ_d(RᵀMR)`: `(mean, std_error, normalized)`.
#[pyfunction]
fn haar_average(m: &PyMetric, samples: usize, seed: u64) -> PyResult<(f64, f64, f64)> {
    let s = experiments::haar_average(&m.inner, samples, seed).map_err(py_err)?;
    Ok((s.mean, s.std_error, s.normalized))
}

/// `(δ, frequency, std_error, bound, pass)`
type TailRow = (f64, f64, f64, f64, bool);

/// One [`TailRow`] per threshold.
#[pyfunction]
fn tail_probability_check(
    m: &PyMetric,
    deltas: Vec<f64>,
    samples: usize,
    seed: u64,
) -> PyResult<Vec<TailRow>> {
    let r = experiments::tail_probability_check(&m.inner, &deltas, samples, seed).map_err(py_err)?;
    Ok(r.rows.iter().map(|t| (t.delta, t.frequency, t.std_error, t.bound, t.pass)).collect())
}

#[pymodule]
fn anisofm_py(module: &Bound<'_, PyModule>) -> PyResult<()> {
    module.add_class::<PyMetric>()?;
    module.add_class::<PyMesh>()?;
    module.add_class::<PyField>()?;
    module.add_function(wrap_pyfunction!(reduce_basis, module)?)?;
    module.add_function(wrap_pyfunction!(solve, module)?)?;
    module.add_function(wrap_pyfunction!(linf_error, module)?)?;
    module.add_function(wrap_pyfunction!(rotation_sweep, module)?)?;
    module.add_function(wrap_pyfunction!(haar_average, module)?)?;
    module.add_function(wrap_pyfunction!(tail_probability_check, module)?)?;
    Ok(())
}
