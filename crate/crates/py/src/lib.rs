//! Python module `fibermap`: tree maps, the assembled small-fiber maps and
//! the sphere measurement checks.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use fibermap_core::audit::{self, AuditOptions, Surface};
use fibermap_core::geom::AxisBox;
use fibermap_core::slicer::{section_measure, HyperplaneSystem};
use fibermap_core::sphere_lab::suites::{run_suite as run, Suite};
use fibermap_core::sphere_lab::{cap_volume as cap, equator_tube_volume as tube};
use fibermap_core::sphere_map::{fiber_total_volume, BoundaryPoint, MapBundle, SmallFiberMap};
use fibermap_core::tree_map::{fiber_volume, TreeMapSpec};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Round-trip through `json.loads` so callers get plain dicts and lists.
fn to_py<'py, T: Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// `t_{n,r,delta}: I^n -> T_{n,r}`.
#[pyclass(module = "fibermap", frozen)]
struct TreeMap {
    inner: TreeMapSpec,
}

#[pymethods]
impl TreeMap {
    #[new]
    fn new(n: u32, r: u32, delta: f64) -> PyResult<Self> {
        Ok(Self {
            inner: TreeMapSpec::new(n, r, delta).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.inner.n()
    }

    #[getter]
    fn r(&self) -> u32 {
        self.inner.r()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    /// `(edge, s)` of the image of `x`.
    fn eval(&self, x: Vec<f64>) -> PyResult<(u64, f64)> {
        let p = self.inner.eval(&x).map_err(err)?;
        Ok((p.edge.0, p.s))
    }

    /// Descriptor of the fiber through `x`.
    fn fiber<'py>(&self, py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        let d = self.inner.fiber_of(self.inner.eval(&x).map_err(err)?).map_err(err)?;
        to_py(py, &d)
    }

    /// `(n-1)`-volume of the fiber through `x`.
    fn fiber_volume(&self, x: Vec<f64>) -> PyResult<f64> {
        let d = self.inner.fiber_of(self.inner.eval(&x).map_err(err)?).map_err(err)?;
        Ok(fiber_volume(&d))
    }

    fn exceptional_volume(&self) -> f64 {
        self.inner.exceptional_volume()
    }

    fn lemma_bound(&self) -> f64 {
        self.inner.lemma_bound()
    }

    fn small_fiber_coverage(&self, side: f64) -> PyResult<f64> {
        self.inner.small_fiber_coverage(side).map_err(err)
    }

    fn schedule<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.schedule_json())
    }

    fn __repr__(&self) -> String {
        format!("TreeMap(n={}, r={}, delta={})", self.inner.n(), self.inner.r(), self.inner.delta())
    }
}

/// `f: ∂I^{n+1} -> R^q` with small fibers outside an epsilon of the volume.
#[pyclass(module = "fibermap", frozen)]
struct FiberMap {
    inner: SmallFiberMap,
}

#[pymethods]
impl FiberMap {
    #[new]
    #[pyo3(signature = (n, q, epsilon, seed = 0, r = None))]
    fn new(n: usize, q: usize, epsilon: f64, seed: u64, r: Option<u32>) -> PyResult<Self> {
        Ok(Self {
            inner: SmallFiberMap::build(n, q, epsilon, seed, r).map_err(err)?,
        })
    }

    /// Rebuild from a bundle written by `bundle()` or the CLI.
    #[staticmethod]
    fn from_bundle(text: &str) -> PyResult<Self> {
        let b: MapBundle = serde_json::from_str(text).map_err(err)?;
        Ok(Self {
            inner: SmallFiberMap::from_bundle(&b).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn q(&self) -> usize {
        self.inner.q()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    #[getter]
    fn r(&self) -> u32 {
        self.inner.r()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    #[getter]
    fn max_degree(&self) -> u64 {
        self.inner.max_degree()
    }

    #[getter]
    fn certified_bound(&self) -> f64 {
        self.inner.certified_fiber_bound()
    }

    /// Image of a point of `∂I^{n+1}` given in ambient coordinates.
    fn eval(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let p = BoundaryPoint::from_ambient(&x).map_err(err)?;
        self.inner.eval(&p).map_err(err)
    }

    /// Image of a point of `S^n` under `f o psi`.
    fn eval_sphere(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.eval_sphere(&x).map_err(err)
    }

    /// Fiber components over `y`.
    fn fiber<'py>(&self, py: Python<'py>, y: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.fiber(&y))
    }

    /// Total `(n-q)`-volume of the fiber over `y`.
    fn fiber_volume(&self, y: Vec<f64>) -> f64 {
        fiber_total_volume(&self.inner, &self.inner.fiber(&y)).volume
    }

    fn bundle(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_bundle()).map_err(err)
    }

    #[pyo3(signature = (samples = 10_000, seed = 0, surface = "cube"))]
    fn audit<'py>(&self, py: Python<'py>, samples: usize, seed: u64, surface: &str) -> PyResult<Bound<'py, PyAny>> {
        let surface = match surface {
            "cube" => Surface::Cube,
            "sphere" => Surface::Sphere,
            s => return Err(err(format!("unknown surface '{s}'"))),
        };
        let opts = AuditOptions {
            samples,
            seed,
            surface,
            timing: false,
        };
        let mut rep = py.detach(|| audit::audit(&self.inner, &opts));
        rep.records.clear();
        to_py(py, &rep)
    }

    fn __repr__(&self) -> String {
        format!(
            "FiberMap(n={}, q={}, epsilon={}, r={})",
            self.inner.n(),
            self.inner.q(),
            self.inner.epsilon(),
            self.inner.r()
        )
    }
}

/// Exact volume of the geodesic ball of radius `rho` in `S^n`.
#[pyfunction]
fn cap_volume(n: usize, rho: f64) -> f64 {
    cap(n, rho)
}

/// Volume of the `eps`-neighbourhood of an equatorial `S^{n-q}` in `S^n`.
#[pyfunction]
fn equator_tube_volume(n: usize, q: usize, eps: f64) -> f64 {
    tube(n, q, eps)
}

/// Section volume of the box `[lo, hi]` by `{normals_k . x = offsets_k}`.
#[pyfunction]
fn slice_volume(lo: Vec<f64>, hi: Vec<f64>, normals: Vec<Vec<f64>>, offsets: Vec<f64>) -> PyResult<f64> {
    let bx = AxisBox::new(lo, hi);
    let sys = HyperplaneSystem::new(normals, offsets);
    section_measure(&bx, &sys).map(|(v, _)| v).map_err(err)
}

/// Report of one appendix property suite.
#[pyfunction]
#[pyo3(signature = (suite, samples = 100_000, seed = 0))]
fn run_suite<'py>(py: Python<'py>, suite: &str, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let s: Suite = suite.parse().map_err(err)?;
    let rep = py.detach(|| run(s, samples, seed)).map_err(err)?;
    to_py(py, &rep)
}

/// SVG figure of the fibers of `t_{2,r,delta}`.
#[pyfunction]
#[pyo3(signature = (r = 2, delta = 0.05, resolution = 6))]
fn render_figure(r: u32, delta: f64, resolution: usize) -> PyResult<String> {
    fibermap_core::render::render_figure(2, r, delta, resolution).map_err(err)
}

#[pymodule]
fn fibermap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TreeMap>()?;
    m.add_class::<FiberMap>()?;
    m.add_function(wrap_pyfunction!(cap_volume, m)?)?;
    m.add_function(wrap_pyfunction!(equator_tube_volume, m)?)?;
    m.add_function(wrap_pyfunction!(slice_volume, m)?)?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(render_figure, m)?)?;
    Ok(())
}
