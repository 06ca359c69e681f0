//! Python bindings. Structured results (law reports, findings, run reports)
//! come back as plain dicts and lists.

use std::collections::BTreeMap;

use catecon_core as core;
use catecon_core::dispatch::{dispatch_str, Flags};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn points(labelled: Vec<(String, BTreeMap<String, f64>)>) -> Vec<core::ValuationSet> {
    labelled
        .into_iter()
        .map(|(label, weights)| core::ValuationSet::new("", label, weights))
        .collect()
}

/// A distance on valuations: weighted L1 or an explicit table.
#[pyclass(name = "ValueMetric", module = "catecon", frozen)]
struct PyValueMetric {
    inner: core::ValueMetric,
}

#[pymethods]
impl PyValueMetric {
    #[staticmethod]
    #[pyo3(signature = (importance=None, default_importance=1.0, epsilon=1e-9))]
    fn weighted_l1(importance: Option<BTreeMap<String, f64>>, default_importance: f64, epsilon: f64) -> PyResult<Self> {
        let mut inner = core::ValueMetric::weighted_l1()
            .with_default_importance(default_importance)
            .with_epsilon(epsilon);
        for (k, l) in importance.unwrap_or_default() {
            inner = inner.with_importance(&k, l);
        }
        inner.validate().map_err(value_error)?;
        Ok(Self { inner })
    }

    /// `entries` is a list of `(from, to, distance)`.
    #[staticmethod]
    fn table(entries: Vec<(String, String, f64)>) -> PyResult<Self> {
        let mut table = core::DistanceTable::new();
        for (a, b, d) in &entries {
            table.insert(a, b, *d);
        }
        let inner = core::ValueMetric::table(table);
        inner.validate().map_err(value_error)?;
        Ok(Self { inner })
    }

    /// Distance between two `(label, weights)` valuations.
    fn distance(&self, x: (String, BTreeMap<String, f64>), y: (String, BTreeMap<String, f64>)) -> PyResult<f64> {
        let p = points(vec![x, y]);
        core::distance(&self.inner, &p[0], &p[1]).map_err(value_error)
    }

    /// Points of a table metric, sorted.
    fn table_points(&self) -> Vec<String> {
        match &self.inner.kind {
            core::MetricKind::Table(t) => t.points(),
            core::MetricKind::WeightedL1 => Vec::new(),
        }
    }

    /// Law report for M1-M4 over `(label, weights)` samples.
    fn check_axioms<'py>(
        &self,
        py: Python<'py>,
        samples: Vec<(String, BTreeMap<String, f64>)>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let report = core::check_metric_axioms(&self.inner, &points(samples)).map_err(value_error)?;
        to_py(py, &report)
    }

    fn detect_arbitrage<'py>(
        &self,
        py: Python<'py>,
        samples: Vec<(String, BTreeMap<String, f64>)>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let findings = core::detect_arbitrage(&self.inner, &points(samples)).map_err(value_error)?;
        to_py(py, &findings)
    }
}

/// Value of one bundling event: `w * n**gamma + kappa`.
#[pyclass(name = "BundlingModel", module = "catecon", frozen)]
struct PyBundlingModel {
    inner: core::BundlingModel,
}

#[pymethods]
impl PyBundlingModel {
    #[new]
    #[pyo3(signature = (gamma=1.0, kappa=0.0, per_property=false))]
    fn new(gamma: f64, kappa: f64, per_property: bool) -> PyResult<Self> {
        let scope = if per_property {
            core::BundlingScope::PerProperty
        } else {
            core::BundlingScope::Aggregate
        };
        let inner = core::BundlingModel::new(gamma, kappa)
            .map_err(value_error)?
            .with_scope(scope);
        Ok(Self { inner })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    fn bundle_value(&self, n: u64, unit_total: f64) -> PyResult<f64> {
        core::bundle_value(&self.inner, n, unit_total).map_err(value_error)
    }

    /// L1/L2 report over `(alpha, beta, w)` samples; a default grid when
    /// none are given.
    #[pyo3(signature = (samples=None))]
    fn check_scalar_laws<'py>(
        &self,
        py: Python<'py>,
        samples: Option<Vec<(u64, u64, f64)>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let samples = match samples {
            Some(s) => s
                .into_iter()
                .map(|(a, b, w)| core::ScalarSample::new(a, b, w))
                .collect(),
            None => core::bundling::default_scalar_samples(),
        };
        let report = core::check_scalar_laws(&self.inner, &samples).map_err(value_error)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("BundlingModel(gamma={}, kappa={})", self.inner.gamma, self.inner.kappa)
    }
}

/// Outcome of running a command on a scenario.
#[pyclass(name = "RunResult", module = "catecon", frozen, get_all)]
struct PyRunResult {
    exit_code: i32,
    /// The run report as JSON text.
    report_json: String,
    /// The event log (simulate only).
    log: Option<String>,
}

#[pymethods]
impl PyRunResult {
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        py.import("json")?.call_method1("loads", (self.report_json.as_str(),))
    }
}

/// A validated scenario.
#[pyclass(name = "Scenario", module = "catecon", frozen)]
struct PyScenario {
    inner: core::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::load_scenario(path).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: core::parse_scenario(text).map_err(value_error)?,
        })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn agents(&self) -> Vec<String> {
        self.inner.agents.iter().map(|a| a.name.clone()).collect()
    }

    #[getter]
    fn objects(&self) -> Vec<String> {
        self.inner.objects.iter().map(|o| o.name.clone()).collect()
    }

    /// Runs one of check-laws, detect-arbitrage, simulate, optimize-design,
    /// optimize-price or segment-report.
    #[pyo3(signature = (command, seed=None, rounds=None, split=None))]
    fn run(&self, command: &str, seed: Option<u64>, rounds: Option<u32>, split: Option<f64>) -> PyResult<PyRunResult> {
        let flags = Flags { seed, rounds, split };
        let out = dispatch_str(command, &self.inner, &flags).map_err(value_error)?;
        Ok(PyRunResult {
            exit_code: out.exit_code,
            report_json: out.report.to_json(),
            log: out.log.map(|l| l.to_lines()),
        })
    }

    fn __eq__(&self, other: &PyScenario) -> bool {
        self.inner == other.inner
    }
}

/// Price of a trade, or None when the buyer gains less than the seller
/// loses (or no more, with `strict`).
#[pyfunction]
#[pyo3(signature = (d_seller, d_buyer, split=0.5, strict=false))]
fn trade_price(d_seller: f64, d_buyer: f64, split: f64, strict: bool) -> Option<f64> {
    let threshold = if strict {
        core::Threshold::Strict
    } else {
        core::Threshold::Weak
    };
    core::trade_price(d_seller, d_buyer, split, threshold)
}

#[pymodule]
fn catecon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyValueMetric>()?;
    m.add_class::<PyBundlingModel>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(trade_price, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
