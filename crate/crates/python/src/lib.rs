//! Python bindings: kernel checks, rank-one constructions, Poisson cylinder
//! measures, join laws and the experiment runner.
//!
//! Rationals cross the boundary as strings (`"3/7"`); sets use the config
//! syntax `"0..1/2, 3/4..1"` and may mention `ln2`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ergolab::caps::Caps;
use ergolab::entropy::{entropy_of_masses, LengthRule, LogBase, ProbabilityVector};
use ergolab::explab::config::{parse_real, parse_set};
use ergolab::explab::{render, run_experiment, ExperimentConfig, Format, Kind};
use ergolab::markov::{transfer_matrix, verify_injective_dense, verify_intertwining, KernelSpec};
use ergolab::poisson::{cylinder_measure, sample_configuration, verify_independence, CylinderEvent};
use ergolab::rank_one::{build_with_caps, spacer_params_for, verify_translate_disjointness, RankOneParams, RankOneState};
use ergolab::rational::{fmt_q, parse_q};
use ergolab::reference::{bernoulli_join_law, rotation_join_law, AlphabetPartition, BernoulliScheme, RotationSystem};

fn err(e: ergolab::Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.code()))
}

fn base(name: &str) -> PyResult<LogBase> {
    name.parse().map_err(err)
}

fn kernel(a: &str) -> PyResult<KernelSpec> {
    KernelSpec::new(parse_q(a).map_err(err)?).map_err(err)
}

/// Transfer matrix of the kernel, rows `(B, X∖B)`, columns `(A, X∖A)`.
#[pyfunction]
fn transfer_matrix_entries(a: &str) -> PyResult<Vec<Vec<String>>> {
    let m = transfer_matrix(&kernel(a)?).as_matrix();
    Ok((0..m.rows()).map(|r| (0..m.cols()).map(|c| fmt_q(m.get(r, c))).collect()).collect())
}

#[pyfunction]
fn markov_check(a: &str) -> PyResult<bool> {
    Ok(transfer_matrix(&kernel(a)?).markov_check().all())
}

/// Number of failing intertwining checks on window `w`.
#[pyfunction]
fn intertwining_failures(a: &str, w: usize) -> PyResult<usize> {
    Ok(verify_intertwining(&kernel(a)?, w).map_err(err)?.failures())
}

#[pyfunction]
fn tensor_rank<'py>(py: Python<'py>, a: &str, w: usize) -> PyResult<Bound<'py, PyDict>> {
    let r = verify_injective_dense(&kernel(a)?, w, &Caps::from_env().map_err(err)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rank", r.rank)?;
    d.set_item("dimension", r.dimension)?;
    d.set_item("determinant", fmt_q(&r.determinant))?;
    d.set_item("determinant_matches", r.determinant_matches)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (masses, base_name = "bit"))]
fn entropy(masses: Vec<f64>, base_name: &str) -> PyResult<f64> {
    Ok(entropy_of_masses(&masses, base(base_name)?))
}

/// Exact join law of a Bernoulli scheme; `groups` lists the letters of each cell.
#[pyfunction]
fn bernoulli_join(masses: Vec<String>, groups: Vec<Vec<usize>>, index_set: Vec<i64>) -> PyResult<Vec<String>> {
    let masses = masses.iter().map(|m| parse_q(m)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let scheme = BernoulliScheme::new(ProbabilityVector::new(masses).map_err(err)?);
    let xi = AlphabetPartition::from_groups(scheme.alphabet_size(), &groups).map_err(err)?;
    let law = bernoulli_join_law(&scheme, &xi, &index_set).map_err(err)?;
    Ok(law.masses().iter().map(fmt_q).collect())
}

#[pyfunction]
fn rotation_join(angle: &str, cuts: Vec<String>, index_set: Vec<i64>) -> PyResult<Vec<String>> {
    let cuts = cuts.iter().map(|c| parse_q(c)).collect::<Result<Vec<_>, _>>().map_err(err)?;
    let rot = RotationSystem::new(parse_q(angle).map_err(err)?, cuts).map_err(err)?;
    Ok(rotation_join_law(&rot, &index_set).map_err(err)?.masses().iter().map(fmt_q).collect())
}

/// A built rank-one construction.
#[pyclass(name = "RankOne")]
struct PyRankOne {
    state: RankOneState,
}

#[pymethods]
impl PyRankOne {
    /// Builds from lines `stage r=<cuts> s=<s1>,…`.
    #[new]
    fn new(params: &str) -> PyResult<Self> {
        let p = RankOneParams::from_text(params).map_err(err)?;
        Self::from_params(&p)
    }

    /// `s_j(i) = L(j) h_j + 1` with `cuts` columns; `length` is `j`, `2j`, `3`, ….
    #[staticmethod]
    #[pyo3(signature = (length, stages, cuts = 2))]
    fn margin(length: &str, stages: usize, cuts: u64) -> PyResult<Self> {
        let rule: LengthRule = length.parse().map_err(err)?;
        Self::from_params(&spacer_params_for(|j| rule.length(j), |_| Some(cuts), stages).map_err(err)?)
    }

    #[staticmethod]
    fn odometer(stages: usize) -> PyResult<Self> {
        Self::from_params(&RankOneParams::odometer(stages))
    }

    fn heights(&self) -> Vec<u64> {
        self.state.heights().to_vec()
    }

    fn tower_measure(&self, j: usize) -> PyResult<String> {
        Ok(fmt_q(&self.state.tower_measure(j).map_err(err)?))
    }

    fn params(&self) -> String {
        self.state.params().to_text()
    }

    /// Whether `X_j, T^{h_j} X_j, …, T^{L h_j} X_j` are pairwise disjoint.
    fn translates_disjoint(&self, j: usize, length: u64) -> PyResult<bool> {
        Ok(verify_translate_disjointness(&self.state, j, length).map_err(err)?.disjoint)
    }

    /// `T^n x`, or `None` where it is not yet defined.
    fn map_point(&self, x: &str, n: i64) -> PyResult<Option<String>> {
        Ok(self.state.map_point(&parse_real(x).map_err(err)?, n).map(|y| fmt_q(&y)))
    }

    fn __repr__(&self) -> String {
        format!("RankOne(heights={:?})", self.state.heights())
    }
}

impl PyRankOne {
    fn from_params(p: &RankOneParams) -> PyResult<Self> {
        let caps = Caps::from_env().map_err(err)?;
        Ok(Self { state: build_with_caps(p, caps).map_err(err)? })
    }
}

/// `terms` pairs a set with a point count.
#[pyfunction]
fn cylinder_probability(terms: Vec<(String, u64)>) -> PyResult<f64> {
    let terms = terms
        .into_iter()
        .map(|(s, k)| parse_set(&s).map(|set| (set, k)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    Ok(cylinder_measure(&CylinderEvent::new(terms).map_err(err)?))
}

/// Points of a Poisson configuration on `window`, as rationals.
#[pyfunction]
fn sample_points(window: &str, seed: u64) -> PyResult<Vec<String>> {
    let c = sample_configuration(&parse_set(window).map_err(err)?, seed).map_err(err)?;
    Ok(c.points().iter().map(fmt_q).collect())
}

#[pyfunction]
#[pyo3(signature = (a, b, k, m, samples = 0, seed = 0))]
fn independence<'py>(py: Python<'py>, a: &str, b: &str, k: u64, m: u64, samples: u64, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let r = verify_independence(&parse_set(a).map_err(err)?, &parse_set(b).map_err(err)?, k, m, samples, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("joint", r.joint)?;
    d.set_item("product", r.product)?;
    d.set_item("relative_error", r.relative_error)?;
    d.set_item("identity_holds", r.identity_holds)?;
    if let Some(mc) = r.monte_carlo {
        d.set_item("frequency", mc.frequency)?;
        d.set_item("sigma", mc.sigma)?;
    }
    Ok(d)
}

/// Runs an experiment config and returns the report rendered as JSON or CSV.
#[pyfunction]
#[pyo3(signature = (config, kind = None, format = "json"))]
fn run(config: &str, kind: Option<&str>, format: &str) -> PyResult<String> {
    let kind = kind.map(|k| k.parse::<Kind>()).transpose().map_err(err)?;
    let format: Format = format.parse().map_err(err)?;
    let c = ExperimentConfig::parse(config, kind).map_err(err)?;
    let report = run_experiment(&c, &Caps::from_env().map_err(err)?).map_err(err)?;
    Ok(render(&report, format))
}

#[pymodule]
fn pyergolab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRankOne>()?;
    m.add_function(wrap_pyfunction!(transfer_matrix_entries, m)?)?;
    m.add_function(wrap_pyfunction!(markov_check, m)?)?;
    m.add_function(wrap_pyfunction!(intertwining_failures, m)?)?;
    m.add_function(wrap_pyfunction!(tensor_rank, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(bernoulli_join, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_join, m)?)?;
    m.add_function(wrap_pyfunction!(cylinder_probability, m)?)?;
    m.add_function(wrap_pyfunction!(sample_points, m)?)?;
    m.add_function(wrap_pyfunction!(independence, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
