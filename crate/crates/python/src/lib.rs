//! Python bindings for the simulator core.

use mdiqss::adversary::{
    ancilla_residual_error, ancilla_rotation, intercept_resend_escape_per_check, theoretical_escape, AncillaTarget,
    BasisPolicy,
};
use mdiqss::cli::{self, AttackSpec, CampaignSpec};
use mdiqss::postproc::{self, BitString, ToeplitzSeed};
use mdiqss::protocol::{self, Decision};
use mdiqss::qsim::{self, Amplitude, AncillaState, NoiseSpec, StateVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Parses an enum from its wire label, e.g. `"PHI_PLUS"` or `"fixed_x"`.
fn parse<T: DeserializeOwned>(label: &str) -> PyResult<T> {
    serde_json::from_value(serde_json::Value::String(label.to_string()))
        .map_err(|_| PyValueError::new_err(format!("unknown label `{label}`")))
}

fn label<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn to_json<T: Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(value_err)
}

fn bits(v: Vec<u8>) -> PyResult<BitString> {
    BitString::new(v).map_err(value_err)
}

/// Bits as a list of ints; a bare `Vec<u8>` would surface as `bytes`.
fn bit_list(v: Vec<u8>) -> Vec<u32> {
    v.into_iter().map(u32::from).collect()
}

fn noise(spec: Option<(f64, f64, f64)>) -> PyResult<NoiseSpec> {
    match spec {
        None => Ok(NoiseSpec::noiseless()),
        Some((x, y, z)) => NoiseSpec::new(x, y, z).map_err(value_err),
    }
}

/// Campaign parameters; noise arguments are `(p_x, p_y, p_z)` tuples.
#[pyclass(name = "ProtocolConfig", module = "pymdiqss")]
struct PyProtocolConfig {
    inner: protocol::ProtocolConfig,
}

#[pymethods]
impl PyProtocolConfig {
    #[new]
    #[pyo3(signature = (p=0.8, m=10_000, qber_threshold=0.05, seed=0, noise_d=None, noise_e=None, noise_b=None, noise_c=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        p: f64,
        m: u64,
        qber_threshold: f64,
        seed: u64,
        noise_d: Option<(f64, f64, f64)>,
        noise_e: Option<(f64, f64, f64)>,
        noise_b: Option<(f64, f64, f64)>,
        noise_c: Option<(f64, f64, f64)>,
    ) -> PyResult<Self> {
        let inner = protocol::ProtocolConfig {
            p,
            m,
            qber_threshold,
            seed,
            noise_d: noise(noise_d)?,
            noise_e: noise(noise_e)?,
            noise_b: noise(noise_b)?,
            noise_c: noise(noise_c)?,
        };
        inner.validate().map_err(value_err)?;
        Ok(PyProtocolConfig { inner })
    }

    #[getter]
    fn p(&self) -> f64 {
        self.inner.p
    }

    #[getter]
    fn m(&self) -> u64 {
        self.inner.m
    }

    #[getter]
    fn qber_threshold(&self) -> f64 {
        self.inner.qber_threshold
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "ProtocolConfig(p={}, m={}, qber_threshold={}, seed={})",
            self.inner.p, self.inner.m, self.inner.qber_threshold, self.inner.seed
        )
    }
}

/// Result of one campaign.
#[pyclass(name = "Transcript", module = "pymdiqss", frozen)]
struct PyTranscript {
    inner: protocol::Transcript,
}

#[pymethods]
impl PyTranscript {
    #[getter]
    fn decision(&self) -> String {
        label(&self.inner.decision)
    }

    #[getter]
    fn proceeded(&self) -> bool {
        self.inner.decision == Decision::Proceed
    }

    #[getter]
    fn num_rounds(&self) -> usize {
        self.inner.rounds.len()
    }

    /// Combined decoy error rate, `None` when nothing was checked.
    #[getter]
    fn error_rate(&self) -> Option<f64> {
        self.inner.report.combined.rate().value()
    }

    /// Per-arm check tallies as JSON.
    fn report_json(&self) -> PyResult<String> {
        to_json(&self.inner.report)
    }

    /// Round records, one JSON object per line.
    fn rounds_jsonl(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_jsonl(&mut buf).map_err(value_err)?;
        String::from_utf8(buf).map_err(value_err)
    }

    /// Alice's raw key bits, present only when the campaign proceeded.
    fn alice_raw_key(&self) -> Option<Vec<u32>> {
        self.inner.sifted.as_ref().map(|s| bit_list(s.alice_raw_key()))
    }

    /// Raw key bits reconstructed by the two sharers together.
    fn sharers_raw_key(&self) -> Option<Vec<u32>> {
        self.inner.sifted.as_ref().map(|s| bit_list(s.sharers_raw_key()))
    }
}

fn attack_spec(attack: &str, basis_policy: &str, epsilon: f64, target: &str) -> PyResult<AttackSpec> {
    Ok(match attack {
        "none" => AttackSpec::None,
        "intercept_resend_c" => AttackSpec::InterceptResendC {
            basis_policy: parse::<BasisPolicy>(basis_policy)?,
        },
        "measure_de_in_x" => AttackSpec::MeasureDeInX,
        "entangle_ancilla" => AttackSpec::EntangleAncilla {
            epsilon,
            target: parse::<AncillaTarget>(target)?,
        },
        other => return Err(PyValueError::new_err(format!("unknown attack `{other}`"))),
    })
}

/// Runs one campaign. `attack` is one of `none`, `intercept_resend_c`,
/// `measure_de_in_x`, `entangle_ancilla`.
#[pyfunction]
#[pyo3(signature = (config, attack="none", basis_policy="random_per_round", epsilon=0.0, target="c_particle"))]
fn run_campaign(
    py: Python<'_>,
    config: &PyProtocolConfig,
    attack: &str,
    basis_policy: &str,
    epsilon: f64,
    target: &str,
) -> PyResult<PyTranscript> {
    let strategy = attack_spec(attack, basis_policy, epsilon, target)?
        .to_strategy()
        .map_err(value_err)?;
    let config = config.inner.clone();
    let inner = py
        .detach(|| protocol::run_campaign(&config, &strategy))
        .map_err(value_err)?;
    Ok(PyTranscript { inner })
}

/// Executes a TOML campaign spec in memory and returns stats.json content.
#[pyfunction]
fn run_spec(py: Python<'_>, toml: &str) -> PyResult<String> {
    let spec = CampaignSpec::from_toml(toml).map_err(value_err)?;
    let outcome = py.detach(|| cli::execute(&spec)).map_err(value_err)?;
    serde_json::to_string_pretty(&outcome.stats).map_err(value_err)
}

/// Amplitudes of the three-qubit GHZ state, qubit 0 most significant.
#[pyfunction]
fn prepare_ghz() -> Vec<Amplitude> {
    qsim::prepare_ghz().amplitudes().to_vec()
}

/// Probabilities of the four Bell outcomes on qubits `(q1, q2)`, in the
/// order PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS.
#[pyfunction]
fn bell_probabilities(amplitudes: Vec<Amplitude>, q1: usize, q2: usize) -> PyResult<[f64; 4]> {
    StateVector::new(amplitudes)
        .and_then(|s| s.bell_probabilities(q1, q2))
        .map_err(value_err)
}

#[pyfunction]
fn reconstruct_bit(bob_bit: u8, charlie_bit: u8, bsm_d: &str, bsm_e: &str) -> PyResult<u8> {
    if bob_bit > 1 || charlie_bit > 1 {
        return Err(PyValueError::new_err("bits must be 0 or 1"));
    }
    Ok(protocol::reconstruct_bit(
        bob_bit,
        charlie_bit,
        parse(bsm_d)?,
        parse(bsm_e)?,
    ))
}

#[pyfunction]
fn decoy_check(decoy: &str, sharer: &str, bsm: &str) -> PyResult<String> {
    Ok(label(&protocol::decoy_check(
        parse(decoy)?,
        parse(sharer)?,
        parse(bsm)?,
    )))
}

/// Rows `(bob, charlie, bsm_d, bsm_e, alice_state, probability)`.
#[pyfunction]
#[pyo3(signature = (x_only=false))]
fn correlation_table(x_only: bool) -> Vec<(String, String, String, String, String, f64)> {
    protocol::correlation_table()
        .into_iter()
        .filter(|r| !x_only || (r.bob.basis() == qsim::Basis::X && r.charlie.basis() == qsim::Basis::X))
        .map(|r| {
            (
                label(&r.bob),
                label(&r.charlie),
                label(&r.bsm_d),
                label(&r.bsm_e),
                label(&r.alice_state),
                r.probability,
            )
        })
        .collect()
}

#[pyfunction]
#[pyo3(signature = (x_only=true))]
fn table1_csv(x_only: bool) -> String {
    cli::table1_csv(x_only)
}

#[pyfunction(name = "theoretical_escape")]
fn py_theoretical_escape(num_checked: u32) -> f64 {
    theoretical_escape(num_checked)
}

#[pyfunction(name = "intercept_resend_escape_per_check")]
#[pyo3(signature = (basis_policy="random_per_round"))]
fn py_intercept_resend_escape_per_check(basis_policy: &str) -> PyResult<f64> {
    Ok(intercept_resend_escape_per_check(parse(basis_policy)?))
}

/// Worst-case check error of the rotation coupling of strength `epsilon`
/// with the probe in `|0⟩`.
#[pyfunction]
fn ancilla_rotation_residual(epsilon: f64) -> PyResult<f64> {
    let u = ancilla_rotation(epsilon).map_err(value_err)?;
    ancilla_residual_error(&u, &AncillaState::zero()).map_err(value_err)
}

#[pyfunction]
fn h2(p: f64) -> f64 {
    postproc::h2(p)
}

#[pyfunction]
fn pa_output_length(n_sift: u64, qber_z: f64, leaked: u64, safety_margin: u64) -> u64 {
    postproc::pa_output_length(n_sift, qber_z, leaked, safety_margin)
}

/// Multiplies `bits` by the Toeplitz matrix whose diagonals are `seed`
/// (`len(bits) + n_out - 1` entries).
#[pyfunction]
fn toeplitz_hash(bits_in: Vec<u8>, seed: Vec<u8>, n_out: usize) -> PyResult<Vec<u32>> {
    let input = bits(bits_in)?;
    let seed = ToeplitzSeed::new(bits(seed)?, input.len(), n_out).map_err(value_err)?;
    Ok(bit_list(
        postproc::toeplitz_hash(&input, &seed)
            .map_err(value_err)?
            .as_slice()
            .to_vec(),
    ))
}

#[pyfunction]
fn otp(key: Vec<u8>, message: Vec<u8>) -> PyResult<Vec<u32>> {
    Ok(bit_list(
        postproc::otp_encrypt(&bits(key)?, &bits(message)?)
            .map_err(value_err)?
            .as_slice()
            .to_vec(),
    ))
}

#[pymodule]
fn pymdiqss(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProtocolConfig>()?;
    m.add_class::<PyTranscript>()?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(run_spec, m)?)?;
    m.add_function(wrap_pyfunction!(prepare_ghz, m)?)?;
    m.add_function(wrap_pyfunction!(bell_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_bit, m)?)?;
    m.add_function(wrap_pyfunction!(decoy_check, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_table, m)?)?;
    m.add_function(wrap_pyfunction!(table1_csv, m)?)?;
    m.add_function(wrap_pyfunction!(py_theoretical_escape, m)?)?;
    m.add_function(wrap_pyfunction!(py_intercept_resend_escape_per_check, m)?)?;
    m.add_function(wrap_pyfunction!(ancilla_rotation_residual, m)?)?;
    m.add_function(wrap_pyfunction!(h2, m)?)?;
    m.add_function(wrap_pyfunction!(pa_output_length, m)?)?;
    m.add_function(wrap_pyfunction!(toeplitz_hash, m)?)?;
    m.add_function(wrap_pyfunction!(otp, m)?)?;
    Ok(())
}
