//! Python bindings: networks, datasets, decompositions, overlap classes and
//! homology.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use relu_overlap::datasets::{self, LabeledDataset, Targets, TopologyKind};
use relu_overlap::error::Error;
use relu_overlap::homology::{self, betti_at_scale, Barcode};
use relu_overlap::io;
use relu_overlap::linalg::{AffineMap, Matrix, DEFAULT_RANK_TOL};
use relu_overlap::lp::{solve_feasibility, FeasibilityProblem, DEFAULT_FEASIBILITY_TOL};
use relu_overlap::network::{GlobalCodeword, Mlp};
use relu_overlap::overlap::{overlap_decomposition_with, OverlapClass, OverlapDecomposition, OverlapOptions};
use relu_overlap::polyhedra::{populate_decomposition, BoundingBox};
use relu_overlap::rankdecomp::region_rank;
use relu_overlap::train::{train, TrainConfig};

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        2 => PyArithmeticError::new_err(e.to_string()),
        3 => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for relu_overlap::error::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// A fully connected ReLU network; ReLU after every layer but the last.
#[pyclass(name = "Mlp", module = "relu_overlap")]
struct PyMlp {
    inner: Mlp,
}

#[pymethods]
impl PyMlp {
    /// Network from `[(weights, bias), ...]`, weights given row by row.
    #[new]
    fn new(layers: Vec<(Vec<Vec<f64>>, Vec<f64>)>) -> PyResult<Self> {
        let maps = layers
            .into_iter()
            .map(|(w, b)| AffineMap::new(Matrix::from_rows(&w)?, b))
            .collect::<relu_overlap::error::Result<Vec<_>>>()
            .py()?;
        Ok(Self { inner: Mlp::new(maps).py()? })
    }

    #[staticmethod]
    #[pyo3(signature = (shape, seed = 0))]
    fn kaiming(shape: Vec<usize>, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: Mlp::init_kaiming(&shape, seed).py()? })
    }

    #[staticmethod]
    #[pyo3(signature = (shape, seed = 0))]
    fn orthogonal(shape: Vec<usize>, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: Mlp::init_orthogonal(&shape, seed).py()? })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: io::load_weights(&path).py()?.0 })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        io::save_weights(&path, &self.inner, &serde_json::Value::Null).py()
    }

    #[getter]
    fn shape(&self) -> Vec<usize> {
        self.inner.shape()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn layers(&self) -> Vec<(Vec<Vec<f64>>, Vec<f64>)> {
        self.inner
            .layers()
            .iter()
            .map(|m| {
                let w = m.linear();
                ((0..w.rows()).map(|r| w.row(r).to_vec()).collect(), m.offset().to_vec())
            })
            .collect()
    }

    fn output(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.output(&x).py()
    }

    /// Activations after `layer` (1-based).
    fn representation(&self, x: Vec<f64>, layer: usize) -> PyResult<Vec<f64>> {
        self.inner.representation(&x, layer).py()
    }

    /// Sign pattern of layers `1..=layer` as text, layers separated by `|`.
    #[pyo3(signature = (x, layer = None))]
    fn codeword(&self, x: Vec<f64>, layer: Option<usize>) -> PyResult<String> {
        let l = layer.unwrap_or(self.inner.depth());
        Ok(self.inner.global_codeword(&x, l).py()?.to_string())
    }

    /// `(matrix, offset)` of the affine map the network restricts to on a region.
    #[pyo3(signature = (codeword, layer = None))]
    fn region_affine_map(&self, codeword: &str, layer: Option<usize>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
        let j: GlobalCodeword = codeword.parse().py()?;
        let l = layer.unwrap_or(self.inner.depth());
        let m = self.inner.region_affine_map(&j, l).py()?;
        let w = m.linear();
        Ok(((0..w.rows()).map(|r| w.row(r).to_vec()).collect(), m.offset().to_vec()))
    }

    #[pyo3(signature = (codeword, layer = None, tol = DEFAULT_RANK_TOL))]
    fn region_rank(&self, codeword: &str, layer: Option<usize>, tol: f64) -> PyResult<usize> {
        let j: GlobalCodeword = codeword.parse().py()?;
        region_rank(&self.inner, &j, layer.unwrap_or(self.inner.depth()), tol).py()
    }

    fn __repr__(&self) -> String {
        format!("Mlp(shape={:?})", self.inner.shape())
    }
}

/// A dataset returned as `(inputs, targets)`; targets are class labels or
/// value vectors.
fn split(ds: LabeledDataset, py: Python<'_>) -> PyResult<(Vec<Vec<f64>>, Py<PyAny>)> {
    let targets = match ds.targets {
        Targets::Labels(l) => l.into_pyobject(py)?.into_any().unbind(),
        Targets::Values(v) => v.into_pyobject(py)?.into_any().unbind(),
    };
    Ok((ds.inputs, targets))
}

#[pyfunction]
fn gen_curve(py: Python<'_>, a: f64, b: f64, n: usize) -> PyResult<(Vec<Vec<f64>>, Py<PyAny>)> {
    split(datasets::gen_curve(a, b, n).py()?, py)
}

#[pyfunction]
#[pyo3(signature = (d, n_per_sphere, seed = 0))]
fn gen_concentric_spheres(py: Python<'_>, d: usize, n_per_sphere: usize, seed: u64) -> PyResult<(Vec<Vec<f64>>, Py<PyAny>)> {
    split(datasets::gen_concentric_spheres(d, n_per_sphere, seed).py()?, py)
}

/// `kind` is one of `circle`, `annulus-cloud`, `wedge-of-circles`, `interval`.
#[pyfunction]
#[pyo3(signature = (kind, n, noise = 0.0, seed = 0))]
fn gen_known_topology(py: Python<'_>, kind: &str, n: usize, noise: f64, seed: u64) -> PyResult<(Vec<Vec<f64>>, Py<PyAny>)> {
    let kind: TopologyKind = kind.parse().py()?;
    split(datasets::gen_known_topology(kind, n, noise, seed).py()?, py)
}

/// Trains a copy of `net` with one of the presets `curves`, `spheres`,
/// `propagation`. Targets are class labels (ints) or value vectors. Returns
/// the trained network and the loss per epoch.
#[pyfunction]
#[pyo3(signature = (net, inputs, targets, preset, seed = 0, epochs = None, learning_rate = None))]
fn train_network(
    net: &PyMlp,
    inputs: Vec<Vec<f64>>,
    targets: &Bound<'_, PyAny>,
    preset: &str,
    seed: u64,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
) -> PyResult<(PyMlp, Vec<f64>)> {
    let mut cfg = match preset {
        "curves" => TrainConfig::curves(seed),
        "spheres" => TrainConfig::spheres(seed),
        "propagation" => TrainConfig::propagation(seed),
        other => return Err(PyValueError::new_err(format!("unknown preset {other:?}"))),
    };
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    if let Some(lr) = learning_rate {
        cfg.learning_rate = lr;
    }
    let targets = match targets.extract::<Vec<usize>>() {
        Ok(l) => Targets::Labels(l),
        Err(_) => Targets::Values(targets.extract::<Vec<Vec<f64>>>()?),
    };
    let (trained, report) = train(&net.inner, &inputs, &targets, &cfg).py()?;
    Ok((PyMlp { inner: trained }, report.loss_history))
}

fn bbox(dim: usize, half: f64) -> PyResult<BoundingBox> {
    BoundingBox::symmetric(dim, half).py()
}

/// Populated regions as `(codeword, point indices, rank)`.
#[pyfunction]
#[pyo3(signature = (net, inputs, layer = None, bbox_half_width = 100.0))]
fn populate(
    net: &PyMlp,
    inputs: Vec<Vec<f64>>,
    layer: Option<usize>,
    bbox_half_width: f64,
) -> PyResult<Vec<(String, Vec<usize>, usize)>> {
    let net = &net.inner;
    let layer = layer.unwrap_or(net.depth());
    let d = populate_decomposition(net, &inputs, layer, &bbox(net.input_dim(), bbox_half_width)?).py()?;
    d.regions()
        .iter()
        .map(|r| {
            let rank = region_rank(net, &r.codeword, layer, DEFAULT_RANK_TOL).py()?;
            Ok((r.codeword.to_string(), r.points.clone(), rank))
        })
        .collect()
}

/// Overlap classes (point-index lists of size >= 2).
#[pyfunction]
#[pyo3(signature = (net, inputs, layer = None, delta = 1.0, bbox_half_width = 100.0, tol = DEFAULT_FEASIBILITY_TOL, boundary_membership = true))]
fn overlap_classes(
    net: &PyMlp,
    inputs: Vec<Vec<f64>>,
    layer: Option<usize>,
    delta: f64,
    bbox_half_width: f64,
    tol: f64,
    boundary_membership: bool,
) -> PyResult<Vec<Vec<usize>>> {
    let net = &net.inner;
    let layer = layer.unwrap_or(net.depth());
    let d = populate_decomposition(net, &inputs, layer, &bbox(net.input_dim(), bbox_half_width)?).py()?;
    let opts = OverlapOptions {
        delta,
        tol,
        boundary_membership,
    };
    let od = overlap_decomposition_with(net, &inputs, &d, &opts).py()?;
    Ok(od.classes().iter().map(|c| c.points.clone()).collect())
}

fn decomposition(classes: Vec<Vec<usize>>) -> PyResult<OverlapDecomposition> {
    OverlapDecomposition::new(
        classes
            .into_iter()
            .map(|points| OverlapClass { points, regions: Vec::new() })
            .collect(),
    )
    .py()
}

fn bars(b: &Barcode) -> Vec<(usize, f64, f64)> {
    b.flat()
}

/// Rips barcode of the Euclidean distances as `(dim, birth, death)`.
#[pyfunction]
#[pyo3(signature = (points, max_dim = 1, max_scale = f64::INFINITY))]
fn persistent_homology(points: Vec<Vec<f64>>, max_dim: usize, max_scale: f64) -> PyResult<Vec<(usize, f64, f64)>> {
    Ok(bars(&homology::point_cloud_homology(&points, max_dim, max_scale).py()?))
}

/// Barcode of the quotient pseudometric with `classes` collapsed.
#[pyfunction]
#[pyo3(signature = (points, classes, max_dim = 1, max_scale = f64::INFINITY))]
fn quotient_homology(
    points: Vec<Vec<f64>>,
    classes: Vec<Vec<usize>>,
    max_dim: usize,
    max_scale: f64,
) -> PyResult<Vec<(usize, f64, f64)>> {
    Ok(bars(&homology::quotient_homology(&points, &decomposition(classes)?, max_dim, max_scale).py()?))
}

/// Betti numbers of the quotient at scale `epsilon`.
#[pyfunction]
#[pyo3(signature = (points, classes, epsilon, max_dim = 1))]
fn quotient_betti(points: Vec<Vec<f64>>, classes: Vec<Vec<usize>>, epsilon: f64, max_dim: usize) -> PyResult<Vec<usize>> {
    let b = homology::quotient_homology(&points, &decomposition(classes)?, max_dim, epsilon).py()?;
    Ok(betti_at_scale(&b, epsilon))
}

/// Feasibility of `{x : a x <= b}`; returns `(feasible, witness)`.
#[pyfunction]
#[pyo3(signature = (a, b, tol = DEFAULT_FEASIBILITY_TOL))]
fn feasible(a: Vec<Vec<f64>>, b: Vec<f64>, tol: f64) -> PyResult<(bool, Option<Vec<f64>>)> {
    let p = FeasibilityProblem::inequalities(Matrix::from_rows(&a).py()?, b).py()?;
    let r = solve_feasibility(&p, tol).py()?;
    Ok((r.is_feasible(), r.witness))
}

#[pymodule]
#[pyo3(name = "relu_overlap")]
fn relu_overlap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMlp>()?;
    m.add_function(wrap_pyfunction!(gen_curve, m)?)?;
    m.add_function(wrap_pyfunction!(gen_concentric_spheres, m)?)?;
    m.add_function(wrap_pyfunction!(gen_known_topology, m)?)?;
    m.add_function(wrap_pyfunction!(train_network, m)?)?;
    m.add_function(wrap_pyfunction!(populate, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_classes, m)?)?;
    m.add_function(wrap_pyfunction!(persistent_homology, m)?)?;
    m.add_function(wrap_pyfunction!(quotient_homology, m)?)?;
    m.add_function(wrap_pyfunction!(quotient_betti, m)?)?;
    m.add_function(wrap_pyfunction!(feasible, m)?)?;
    Ok(())
}
