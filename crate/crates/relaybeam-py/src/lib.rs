//! Python bindings: system parameters, channels, beamformers, the
//! optimizing solver, boundary points, region sweeps, and the heuristic
//! baseline designs.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relaybeam::liftings::FormulationKind;
use relaybeam::{baselines, closedform, model, region, CMat, CVec};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_formulation(name: Option<&str>) -> PyResult<Option<FormulationKind>> {
    match name {
        None | Some("auto") => Ok(None),
        Some("direct") => Ok(Some(FormulationKind::Direct)),
        Some("reduced") => Ok(Some(FormulationKind::Reduced)),
        Some("combined") => Ok(Some(FormulationKind::Combined)),
        Some(other) => Err(value_err(format!(
            "unknown formulation `{other}` (expected auto|direct|reduced|combined)"
        ))),
    }
}

fn cvec(values: Vec<Complex64>) -> CVec {
    CVec::from_vec(values)
}

fn vec_of(v: &CVec) -> Vec<Complex64> {
    v.iter().cloned().collect()
}

// ── Core types ───────────────────────────────────────────────────────────

/// Transmit powers, noise variances, energy target, and jamming margin.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct SystemParams {
    inner: model::SystemParams,
}

#[pymethods]
impl SystemParams {
    #[new]
    #[pyo3(signature = (k, p_s, p_j, p_r_max, sigma_r2=1.0, sigma_d2=1.0, q_target=0.0, epsilon=0.99))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        k: usize,
        p_s: f64,
        p_j: f64,
        p_r_max: f64,
        sigma_r2: f64,
        sigma_d2: f64,
        q_target: f64,
        epsilon: f64,
    ) -> PyResult<Self> {
        let inner =
            model::SystemParams::new(k, p_s, p_j, p_r_max, sigma_r2, sigma_d2, q_target, epsilon)
                .map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Copy with a different energy target (watts).
    fn with_q_target(&self, q_target: f64) -> PyResult<Self> {
        let p = self.inner.with_q_target(q_target);
        if q_target < 0.0 || !q_target.is_finite() {
            return Err(value_err("q_target must be >= 0 and finite"));
        }
        Ok(Self { inner: p })
    }

    /// Copy with a different jammer power (watts).
    fn with_p_j(&self, p_j: f64) -> PyResult<Self> {
        if p_j < 0.0 || !p_j.is_finite() {
            return Err(value_err("p_j must be >= 0 and finite"));
        }
        Ok(Self { inner: self.inner.with_p_j(p_j) })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }
    #[getter]
    fn p_s(&self) -> f64 {
        self.inner.p_s
    }
    #[getter]
    fn p_j(&self) -> f64 {
        self.inner.p_j
    }
    #[getter]
    fn p_r_max(&self) -> f64 {
        self.inner.p_r_max
    }
    #[getter]
    fn sigma_r2(&self) -> f64 {
        self.inner.sigma_r2
    }
    #[getter]
    fn sigma_d2(&self) -> f64 {
        self.inner.sigma_d2
    }
    #[getter]
    fn q_target(&self) -> f64 {
        self.inner.q_target
    }
    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "SystemParams(k={}, p_s={}, p_j={}, p_r_max={}, sigma_r2={}, sigma_d2={}, \
             q_target={}, epsilon={})",
            p.k, p.p_s, p.p_j, p.p_r_max, p.sigma_r2, p.sigma_d2, p.q_target, p.epsilon
        )
    }
}

/// One realization of the four length-K channels (source, jammer,
/// destination, energy harvester).
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct ChannelSet {
    inner: model::ChannelSet,
}

#[pymethods]
impl ChannelSet {
    #[new]
    fn new(
        h_s: Vec<Complex64>,
        h_j: Vec<Complex64>,
        h_d: Vec<Complex64>,
        h_e: Vec<Complex64>,
    ) -> PyResult<Self> {
        let inner = model::ChannelSet::new(cvec(h_s), cvec(h_j), cvec(h_d), cvec(h_e))
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    /// Draw all four channels i.i.d. circularly-symmetric unit Gaussian,
    /// deterministically from `seed`.
    #[staticmethod]
    fn sample(seed: u64, k: usize) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inner = model::sample_channels(&mut rng, k).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }
    #[getter]
    fn h_s(&self) -> Vec<Complex64> {
        vec_of(&self.inner.h_s)
    }
    #[getter]
    fn h_j(&self) -> Vec<Complex64> {
        vec_of(&self.inner.h_j)
    }
    #[getter]
    fn h_d(&self) -> Vec<Complex64> {
        vec_of(&self.inner.h_d)
    }
    #[getter]
    fn h_e(&self) -> Vec<Complex64> {
        vec_of(&self.inner.h_e)
    }

    fn __repr__(&self) -> String {
        format!("ChannelSet(k={})", self.inner.k())
    }
}

/// A K x K relay beamforming matrix.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Beamformer {
    inner: model::Beamformer,
}

#[pymethods]
impl Beamformer {
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(value_err("beamformer rows must form a square matrix"));
        }
        let a = CMat::from_fn(k, k, |i, j| rows[i][j]);
        Ok(Self { inner: model::Beamformer::new(a).map_err(value_err)? })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    /// The matrix as a list of row lists.
    #[getter]
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let a = &self.inner.a;
        (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
    }

    fn __repr__(&self) -> String {
        format!("Beamformer(k={})", self.inner.k())
    }
}

// ── Results ──────────────────────────────────────────────────────────────

/// Outcome of one constrained solve: the relaxation bound, the recovered
/// design, and what it achieves.
#[pyclass(frozen, skip_from_py_object)]
struct SolveResult {
    #[pyo3(get)]
    rate_bits: f64,
    #[pyo3(get)]
    sinr_bound: f64,
    #[pyo3(get)]
    rate_bound: f64,
    #[pyo3(get)]
    rank1_gap: f64,
    #[pyo3(get)]
    iterations: u32,
    #[pyo3(get)]
    formulation: String,
    bf: model::Beamformer,
}

#[pymethods]
impl SolveResult {
    #[getter]
    fn beamformer(&self) -> Beamformer {
        Beamformer { inner: self.bf.clone() }
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveResult(rate_bits={:.6}, formulation={}, rank1_gap={:.2e})",
            self.rate_bits, self.formulation, self.rank1_gap
        )
    }
}

/// Maximum harvestable power and the design delivering it.
#[pyclass(frozen, skip_from_py_object)]
struct QmaxResult {
    #[pyo3(get)]
    q_max_watts: f64,
    #[pyo3(get)]
    rate_bits: f64,
    bf: model::Beamformer,
}

#[pymethods]
impl QmaxResult {
    #[getter]
    fn beamformer(&self) -> Beamformer {
        Beamformer { inner: self.bf.clone() }
    }

    fn __repr__(&self) -> String {
        format!("QmaxResult(q_max_watts={:.6}, rate_bits={:.6})", self.q_max_watts, self.rate_bits)
    }
}

/// The swept rate-energy boundary: `points` is a list of
/// `(q_watts, rate_bits)` pairs ordered by rising energy target;
/// `failures` lists `(q_watts, status)` for grid points the solver could
/// not certify.
#[pyclass(frozen, skip_from_py_object)]
struct RegionResult {
    #[pyo3(get)]
    points: Vec<(f64, f64)>,
    #[pyo3(get)]
    failures: Vec<(f64, String)>,
    #[pyo3(get)]
    r_max: f64,
    #[pyo3(get)]
    q_max: f64,
    #[pyo3(get)]
    r_eh: f64,
    #[pyo3(get)]
    eh_backoff: f64,
}

#[pymethods]
impl RegionResult {
    fn __repr__(&self) -> String {
        format!(
            "RegionResult(r_max={:.6}, q_max={:.6}, r_eh={:.6}, {} points)",
            self.r_max,
            self.q_max,
            self.r_eh,
            self.points.len()
        )
    }
}

// ── Operations ───────────────────────────────────────────────────────────

/// Decibel-watts to watts.
#[pyfunction]
fn dbw_to_watts(dbw: f64) -> f64 {
    model::dbw_to_watts(dbw)
}

/// Rate of a beamformer in bits per channel use (half-duplex factor
/// included; zero when the jammer can symmetrize the channel).
#[pyfunction]
fn capacity(a: &Beamformer, ch: &ChannelSet, p: &SystemParams) -> PyResult<f64> {
    model::capacity(&a.inner, &ch.inner, &p.inner).map_err(value_err)
}

/// Average transmit power the relay spends on a beamformer (watts).
#[pyfunction]
fn relay_power(a: &Beamformer, ch: &ChannelSet, p: &SystemParams) -> PyResult<f64> {
    model::relay_power(&a.inner, &ch.inner, &p.inner).map_err(value_err)
}

/// Power harvested at the energy receiver (watts).
#[pyfunction]
fn harvested_energy(a: &Beamformer, ch: &ChannelSet, p: &SystemParams) -> PyResult<f64> {
    model::harvested_energy(&a.inner, &ch.inner, &p.inner).map_err(value_err)
}

/// Solve for the optimal beamformer under the configured power, energy,
/// and jamming-margin constraints.
#[pyfunction]
#[pyo3(signature = (ch, p, formulation=None))]
fn solve(ch: &ChannelSet, p: &SystemParams, formulation: Option<&str>) -> PyResult<SolveResult> {
    let kind = parse_formulation(formulation)?;
    let ms = region::solve_master(&ch.inner, &p.inner, kind).map_err(runtime_err)?;
    Ok(SolveResult {
        rate_bits: ms.rate_bits,
        sinr_bound: ms.sinr_bound,
        rate_bound: ms.rate_bound,
        rank1_gap: ms.rank1_gap,
        iterations: ms.iterations,
        formulation: ms.kind.as_str().to_string(),
        bf: ms.beamformer,
    })
}

/// Maximum harvestable power regardless of rate.
#[pyfunction]
fn q_max(ch: &ChannelSet, p: &SystemParams) -> PyResult<QmaxResult> {
    let qs = region::compute_qmax(&ch.inner, &p.inner).map_err(runtime_err)?;
    Ok(QmaxResult { q_max_watts: qs.q_max_watts, rate_bits: qs.rate_bits, bf: qs.beamformer })
}

/// Closed-form maximum harvestable power (generalized-eigenvalue form).
#[pyfunction]
fn q_max_closed_form(ch: &ChannelSet, p: &SystemParams) -> PyResult<f64> {
    Ok(closedform::qmax_closed(&ch.inner, &p.inner).map_err(value_err)?.q_max_watts)
}

/// Sweep the rate-energy boundary on an `n_grid`-point energy grid.
#[pyfunction]
#[pyo3(signature = (ch, p, n_grid=21, formulation=None))]
fn rate_energy_region(
    ch: &ChannelSet,
    p: &SystemParams,
    n_grid: usize,
    formulation: Option<&str>,
) -> PyResult<RegionResult> {
    let kind = parse_formulation(formulation)?;
    let res = region::region_sweep(&ch.inner, &p.inner, n_grid, kind).map_err(runtime_err)?;
    Ok(RegionResult {
        points: res.points.iter().map(|pt| (pt.q_watts, pt.rate_bits)).collect(),
        failures: res
            .failures
            .iter()
            .map(|f| (f.q_watts, f.status_label().to_string()))
            .collect(),
        r_max: res.r_max,
        q_max: res.q_max,
        r_eh: res.r_eh,
        eh_backoff: res.eh_backoff,
    })
}

/// Matched-forwarding heuristic design.
#[pyfunction]
fn pmf(ch: &ChannelSet, p: &SystemParams) -> PyResult<Beamformer> {
    Ok(Beamformer { inner: baselines::pmf(&ch.inner, &p.inner).map_err(value_err)? })
}

/// Jammer-nulling heuristic design; the null-space direction is drawn
/// deterministically from `seed`.
#[pyfunction]
fn zf(ch: &ChannelSet, p: &SystemParams, seed: u64) -> PyResult<Beamformer> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Beamformer { inner: baselines::zf(&ch.inner, &p.inner, &mut rng).map_err(value_err)? })
}

/// Identity-scaling heuristic design.
#[pyfunction]
fn dr(ch: &ChannelSet, p: &SystemParams) -> PyResult<Beamformer> {
    Ok(Beamformer { inner: baselines::dr(&ch.inner, &p.inner).map_err(value_err)? })
}

#[pymodule]
fn relaybeam_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SystemParams>()?;
    m.add_class::<ChannelSet>()?;
    m.add_class::<Beamformer>()?;
    m.add_class::<SolveResult>()?;
    m.add_class::<QmaxResult>()?;
    m.add_class::<RegionResult>()?;
    m.add_function(wrap_pyfunction!(dbw_to_watts, m)?)?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(relay_power, m)?)?;
    m.add_function(wrap_pyfunction!(harvested_energy, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(q_max, m)?)?;
    m.add_function(wrap_pyfunction!(q_max_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(rate_energy_region, m)?)?;
    m.add_function(wrap_pyfunction!(pmf, m)?)?;
    m.add_function(wrap_pyfunction!(zf, m)?)?;
    m.add_function(wrap_pyfunction!(dr, m)?)?;
    Ok(())
}
