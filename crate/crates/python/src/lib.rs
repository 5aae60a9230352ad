//! Python bindings. Forms travel as lists of coefficients and target sets as
//! set-spec strings (`"odd"`, `"mod:9:2,8"`, `"form:2,3,4"`).

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use engine::cli;
use engine::escalator::{self, NodeStatus, TargetSet, TreeConfig};
use engine::quadform::{self, DiagonalForm, TernaryQuadraticForm};
use engine::rules::{self, ScanOptions};
use engine::triangular::{self, RepTable};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn target(spec: &str) -> PyResult<TargetSet> {
    cli::parse_set(spec).map_err(value_err)
}

/// A sum of triangular numbers `Σ b_i T(x_i)`.
#[pyclass(name = "TriangularForm", module = "trinum", frozen, eq, hash, skip_from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
struct PyTriangularForm {
    inner: triangular::TriangularForm,
}

#[pymethods]
impl PyTriangularForm {
    /// Coefficients in any order.
    #[new]
    fn new(coeffs: Vec<u64>) -> PyResult<Self> {
        let inner = triangular::TriangularForm::from_unsorted(coeffs).map_err(value_err)?;
        if inner.is_empty() {
            return Err(value_err("form needs at least one coefficient"));
        }
        Ok(Self { inner })
    }

    #[getter]
    fn coeffs(&self) -> Vec<u64> {
        self.inner.coeffs().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("TriangularForm({})", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn evaluate(&self, xs: Vec<u64>) -> PyResult<u64> {
        self.inner.evaluate(&xs).map_err(value_err)
    }

    fn represents(&self, n: u64) -> PyResult<bool> {
        triangular::represents(&self.inner, n).map_err(value_err)
    }

    fn count_reps(&self, n: u64) -> PyResult<u64> {
        triangular::count_reps(&self.inner, n).map_err(value_err)
    }

    fn find_representation(&self, n: u64) -> PyResult<Option<Vec<u64>>> {
        triangular::find_representation(&self.inner, n).map_err(value_err)
    }

    /// Values in `0..=bound` the form misses.
    fn missing_up_to(&self, py: Python<'_>, bound: u64) -> PyResult<Vec<u64>> {
        let table = py.detach(|| triangular::represented_up_to(&self.inner, bound)).map_err(runtime_err)?;
        Ok(table.missing().collect())
    }

    /// Sieve bitmap over `0..=bound` as booleans.
    fn represented_up_to(&self, py: Python<'_>, bound: u64) -> PyResult<Vec<bool>> {
        let table: RepTable =
            py.detach(|| triangular::represented_up_to(&self.inner, bound)).map_err(runtime_err)?;
        Ok((0..=bound).map(|n| table.get(n)).collect())
    }

    fn smallest_missing(&self, py: Python<'_>, set: &str, bound: u64) -> PyResult<Option<u64>> {
        let s = target(set)?;
        py.detach(|| escalator::smallest_missing(&self.inner, &s, bound)).map_err(runtime_err)
    }

    fn shift_identity_check(&self, n: u64) -> PyResult<bool> {
        quadform::shift_identity_check(&self.inner, n).map_err(value_err)
    }

    fn with_coefficient(&self, c: u64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.with_coefficient(c).map_err(value_err)? })
    }
}

/// A positive definite ternary form `ax²+by²+cz²+dxy+exz+fyz`.
#[pyclass(name = "TernaryQuadraticForm", module = "trinum", frozen)]
struct PyTernaryForm {
    inner: TernaryQuadraticForm,
}

#[pymethods]
impl PyTernaryForm {
    #[new]
    #[pyo3(signature = (a, b, c, d = 0, e = 0, f = 0))]
    fn new(a: i64, b: i64, c: i64, d: i64, e: i64, f: i64) -> PyResult<Self> {
        Ok(Self { inner: TernaryQuadraticForm::new(a, b, c, d, e, f).map_err(value_err)? })
    }

    #[getter]
    fn coefficients(&self) -> [i64; 6] {
        self.inner.coefficients()
    }

    fn __repr__(&self) -> String {
        format!("TernaryQuadraticForm{}", self.inner)
    }

    fn evaluate(&self, x: i64, y: i64, z: i64) -> i64 {
        self.inner.evaluate(x, y, z)
    }

    fn rq_count(&self, py: Python<'_>, m: u64) -> u64 {
        py.detach(|| self.inner.rq_count(m))
    }

    fn theta_series(&self, py: Python<'_>, max: u64) -> Vec<u64> {
        py.detach(|| self.inner.theta_series(max))
    }
}

fn diagonal(coeffs: Vec<u64>) -> PyResult<DiagonalForm> {
    DiagonalForm::new(coeffs).map_err(value_err)
}

#[pyfunction]
fn triangular_number(x: u64) -> PyResult<u64> {
    triangular::triangular(x).map_err(value_err)
}

/// All-odd representation count of `Σ b_i x_i²`.
#[pyfunction]
fn rq_odd_count(coeffs: Vec<u64>, m: u64) -> PyResult<u64> {
    Ok(diagonal(coeffs)?.rq_odd_count(m))
}

#[pyfunction]
fn inclusion_exclusion_odd(coeffs: Vec<u64>, m: u64) -> PyResult<i64> {
    Ok(diagonal(coeffs)?.inclusion_exclusion_odd(m))
}

/// Dictionary with `s0`, `nodes` (`(coeffs, status, detail)` tuples in
/// pre-order) and `warnings`.
#[pyfunction]
#[pyo3(signature = (set, truant_bound = 100_000, leaf_bound = 200_000, use_known_rules = true))]
fn build_tree<'py>(
    py: Python<'py>,
    set: &str,
    truant_bound: u64,
    leaf_bound: u64,
    use_known_rules: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let s = target(set)?;
    let mut config = TreeConfig::new(truant_bound, leaf_bound);
    config.use_known_rules = use_known_rules;
    let tree = py.detach(|| escalator::build_tree(&s, &config)).map_err(runtime_err)?;
    let nodes: Vec<(Vec<u64>, &str, String)> = tree
        .nodes()
        .map(|n| {
            let (status, detail) = match n.status {
                NodeStatus::Truant(t) => ("truant", t.to_string()),
                NodeStatus::ProvisionalLeaf { verified_bound } => ("leaf", verified_bound.to_string()),
                NodeStatus::KnownLeaf { rule } => ("known", rule.id.to_string()),
                NodeStatus::Pending => ("pending", String::new()),
            };
            (n.form.coeffs().to_vec(), status, detail)
        })
        .collect();
    let stuck: Vec<(Vec<u64>, u64)> =
        escalator::stuck_report(&tree).into_iter().map(|(f, c)| (f.coeffs().to_vec(), c)).collect();
    let out = PyDict::new(py);
    out.set_item("s0", tree.s0.iter().copied().collect::<Vec<_>>())?;
    out.set_item("nodes", nodes)?;
    out.set_item("stuck", stuck)?;
    out.set_item("warnings", tree.warnings.clone())?;
    Ok(out)
}

/// The witness form's coefficient count and its violations up to `bound`.
#[pyfunction]
fn witness_form(py: Python<'_>, coeffs: Vec<u64>, truant: u64, set: &str, bound: u64) -> PyResult<(usize, Vec<u64>)> {
    let form = PyTriangularForm::new(coeffs)?.inner;
    let s = target(set)?;
    let (w, v) = py.detach(|| escalator::witness_form(&form, truant, &s, bound)).map_err(runtime_err)?;
    Ok((w.len(), v))
}

/// Violations of built-in equivalence row `row` (0-7) up to `bound`.
#[pyfunction]
fn table1_check(py: Python<'_>, row: usize, bound: u64) -> PyResult<Vec<u64>> {
    let r = quadform::table1_rows().into_iter().nth(row).ok_or_else(|| value_err("row must be 0-7"))?;
    py.detach(|| quadform::table1_check(&r, bound)).map_err(runtime_err)
}

/// Dictionary with `missing`, `classes` (`(modulus, residue, full)`) and
/// `sporadics`.
#[pyfunction]
#[pyo3(signature = (coeffs, bound, supplied = Vec::new()))]
fn table3_scan<'py>(
    py: Python<'py>,
    coeffs: Vec<u64>,
    bound: u64,
    supplied: Vec<(u64, Vec<u64>)>,
) -> PyResult<Bound<'py, PyDict>> {
    let form = PyTriangularForm::new(coeffs)?.inner;
    let mut options = ScanOptions::with_default_moduli();
    for (m, rs) in supplied {
        options = options.supply(m, rs);
    }
    let report = py.detach(|| rules::table3_scan(&form, bound, &options)).map_err(runtime_err)?;
    let classes: Vec<(u64, u64, bool)> = report.classes.iter().map(|c| (c.modulus, c.residue, c.full)).collect();
    let out = PyDict::new(py);
    out.set_item("missing", report.missing.clone())?;
    out.set_item("classes", classes)?;
    out.set_item("sporadics", report.sporadics.clone())?;
    Ok(out)
}

/// `(rule text, passed)` for each built-in catalog rule of the form.
#[pyfunction]
fn verify_rules(py: Python<'_>, coeffs: Vec<u64>, bound: u64) -> PyResult<Vec<(String, bool)>> {
    let form = PyTriangularForm::new(coeffs)?.inner;
    let table = py.detach(|| triangular::represented_up_to(&form, bound)).map_err(runtime_err)?;
    Ok(rules::rules_for(&form)
        .into_iter()
        .map(|e| {
            let pass = rules::verify_rule_on(&table, &e.rule).passes(e.rule.claim);
            (e.rule.to_string(), pass)
        })
        .collect())
}

/// Runs the command line in-process: `(exit code, stdout, stderr)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    let o = py.detach(|| cli::run(std::iter::once("trinum".to_string()).chain(args)));
    (o.code, o.stdout, o.stderr)
}

#[pymodule]
fn trinum(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTriangularForm>()?;
    m.add_class::<PyTernaryForm>()?;
    m.add_function(wrap_pyfunction!(triangular_number, m)?)?;
    m.add_function(wrap_pyfunction!(rq_odd_count, m)?)?;
    m.add_function(wrap_pyfunction!(inclusion_exclusion_odd, m)?)?;
    m.add_function(wrap_pyfunction!(build_tree, m)?)?;
    m.add_function(wrap_pyfunction!(witness_form, m)?)?;
    m.add_function(wrap_pyfunction!(table1_check, m)?)?;
    m.add_function(wrap_pyfunction!(table3_scan, m)?)?;
    m.add_function(wrap_pyfunction!(verify_rules, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
