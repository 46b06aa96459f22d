//! Python bindings: environments, lie partitions, mechanism synthesis, and
//! equilibrium verification. Structured results cross the boundary as JSON
//! strings; callers `json.loads` them.

use evimech::env::validate_structure;
use evimech::game::GameLimits;
use evimech::io::{mechanism_json, parse_environment, serialize_environment};
use evimech::lies::classify;
use evimech::renegotiation::check_rp_conditions;
use evimech::variant::{synthesize, Mechanism, VariantRequest};
use evimech::variation::{is_evidence_monotonic_cp, is_evidence_monotonic_star, EmVerdict};
use evimech::verify::{verify_implementation, VerifyConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

#[pyclass(name = "Environment")]
#[derive(Clone)]
struct PyEnvironment {
    inner: evimech::Environment,
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pymethods]
impl PyEnvironment {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyEnvironment { inner: parse_environment(text).map_err(value_err)? })
    }

    /// Canonical fixtures: env_a, env_b, env_c, env_d, env_d_modified,
    /// env_e, env_e3, env_3, env_costly_2state.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        use evimech::fixtures as fx;
        let inner = match name {
            "env_a" => fx::env_a(),
            "env_b" => fx::env_b(),
            "env_c" => fx::env_c(),
            "env_d" => fx::env_d(),
            "env_d_modified" => fx::env_d_modified(),
            "env_e" => fx::env_e(),
            "env_e3" => fx::env_e3(),
            "env_3" => fx::env_3(),
            "env_costly_2state" => fx::env_costly_2state(),
            _ => return Err(value_err(format!("unknown fixture {name:?}"))),
        };
        Ok(PyEnvironment { inner })
    }

    #[staticmethod]
    fn random(seed: u64) -> Self {
        PyEnvironment { inner: evimech::fixtures::random_env(seed, &Default::default()) }
    }

    fn to_json(&self) -> String {
        serialize_environment(&self.inner)
    }

    fn states(&self) -> Vec<String> {
        self.inner.states.labels().to_vec()
    }

    fn agents(&self) -> usize {
        self.inner.agents
    }

    /// (e1)/(e2) violation report as JSON.
    fn validate(&self) -> String {
        serde_json::to_string(&validate_structure(&self.inner)).unwrap()
    }

    fn is_normal(&self) -> bool {
        self.inner.is_normal()
    }

    fn is_measurable(&self) -> bool {
        self.inner.is_measurable()
    }

    fn equivalent_states(&self) -> Vec<Vec<String>> {
        self.inner
            .equivalent_states()
            .into_iter()
            .map(|class| {
                class
                    .into_iter()
                    .map(|s| self.inner.states.label(s).to_string())
                    .collect()
            })
            .collect()
    }

    fn tightest_evidence(&self, agent: usize, state: &str) -> PyResult<Vec<String>> {
        let s = self.find_state(state)?;
        if agent == 0 || agent > self.inner.agents {
            return Err(value_err(format!("agent index {agent} out of range")));
        }
        let set = self.inner.tightest_evidence(agent - 1, s);
        Ok(self.inner.states.set_labels(&set))
    }

    /// Lie partition at the true state, as JSON.
    fn classify(&self, state: &str) -> PyResult<String> {
        let s = self.find_state(state)?;
        Ok(serde_json::to_string(&classify(&self.inner, s).report(&self.inner)).unwrap())
    }

    /// Evidence-monotonicity verdicts as JSON:
    /// `{"em_cp": bool|"incomplete", "em_star": bool}`.
    fn check_em(&self) -> PyResult<String> {
        let cp = is_evidence_monotonic_cp(&self.inner).map_err(value_err)?;
        let star = is_evidence_monotonic_star(&self.inner).map_err(value_err)?;
        let cp_value = match cp {
            EmVerdict::Holds(_) => serde_json::json!(true),
            EmVerdict::Fails { .. } => serde_json::json!(false),
            EmVerdict::Incomplete => serde_json::json!("incomplete"),
        };
        Ok(serde_json::json!({ "em_cp": cp_value, "em_star": star.is_ok() }).to_string())
    }

    /// Pairwise refutation-condition report as JSON.
    fn check_rp(&self) -> PyResult<String> {
        let report = check_rp_conditions(&self.inner).map_err(value_err)?;
        Ok(serde_json::to_string(&report).unwrap())
    }

    /// Synthesize a mechanism variant (see `VariantRequest::parse` tags).
    fn synthesize(&self, variant: &str) -> PyResult<PyMechanism> {
        let request = VariantRequest::parse(variant).map_err(value_err)?;
        let mech = synthesize(&self.inner, &request).map_err(value_err)?;
        Ok(PyMechanism { env: self.inner.clone(), mech })
    }
}

impl PyEnvironment {
    fn find_state(&self, label: &str) -> PyResult<evimech::StateId> {
        self.inner
            .states
            .find(label)
            .ok_or_else(|| value_err(format!("unknown state {label:?}")))
    }
}

#[pyclass(name = "Mechanism")]
struct PyMechanism {
    env: evimech::Environment,
    mech: Mechanism,
}

#[pymethods]
impl PyMechanism {
    fn tag(&self) -> String {
        self.mech.tag()
    }

    #[pyo3(signature = (extensional = false))]
    fn to_json(&self, extensional: bool) -> String {
        let mut text =
            serde_json::to_string_pretty(&mechanism_json(&self.env, &self.mech, extensional))
                .unwrap();
        text.push('\n');
        text
    }

    /// Evaluate one direct message profile `[(state, article_name), ...]`.
    /// Returns JSON `{outcome, transfers, components}`.
    fn evaluate(&self, profile: Vec<(String, String)>) -> PyResult<String> {
        let messages: Vec<evimech::mech::Message> = profile
            .iter()
            .enumerate()
            .map(|(i, (state, article))| {
                let claim = self
                    .env
                    .states
                    .find(state)
                    .ok_or_else(|| value_err(format!("unknown state {state:?}")))?;
                let art = self.env.evidence[i]
                    .universe()
                    .find(|&a| &self.env.article(i, a).name(&self.env.states) == article)
                    .ok_or_else(|| {
                        value_err(format!("agent {} has no article {article:?}", i + 1))
                    })?;
                Ok(evimech::mech::Message::Direct(evimech::mech::DirectMessage {
                    claim,
                    article: art,
                }))
            })
            .collect::<PyResult<_>>()?;
        let eval = self
            .mech
            .evaluate(&self.env, &messages)
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        Ok(serde_json::json!({
            "outcome": evimech::io::outcome_label(&self.env, &eval.outcome),
            "transfers": eval.transfers.iter().map(evimech::rational::format_q).collect::<Vec<_>>(),
            "components": eval.components.iter().map(|(rule, vals)| {
                serde_json::json!({
                    "rule": rule,
                    "values": vals.iter().map(evimech::rational::format_q).collect::<Vec<_>>(),
                })
            }).collect::<Vec<_>>(),
        })
        .to_string())
    }

    /// Verification report for one state (or every state with `state=None`),
    /// as JSON.
    #[pyo3(signature = (state = None, samples = 20, seed = 0xE71D, max_support = 3))]
    fn verify(
        &self,
        state: Option<&str>,
        samples: usize,
        seed: u64,
        max_support: usize,
    ) -> PyResult<String> {
        let cfg = VerifyConfig {
            samples,
            seed,
            max_support,
            limits: GameLimits::default(),
            ..Default::default()
        };
        let states: Vec<evimech::StateId> = match state {
            Some(label) => vec![self
                .env
                .states
                .find(label)
                .ok_or_else(|| value_err(format!("unknown state {label:?}")))?],
            None => self.env.states.ids().collect(),
        };
        let reports: Vec<_> = states
            .into_iter()
            .map(|s| verify_implementation(&self.mech, &self.env, s, &cfg))
            .collect();
        Ok(serde_json::to_string(&reports).unwrap())
    }
}

#[pymodule]
fn evimech_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyMechanism>()?;
    Ok(())
}
