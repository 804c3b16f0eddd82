//! Python module `resto`.
//!
//! States are status strings such as `"EUUUUD"`, actions are lists of
//! branch indices, and outcomes are dicts `{branch: "E" | "D"}`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use resto_core as core;
use resto_core::{Action, BuildOptions, FailureProfile, Goal, Observation, Outcome, SystemState};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_state(text: &str) -> PyResult<SystemState> {
    text.parse().map_err(err)
}

fn parse_action(branches: Vec<usize>) -> PyResult<Action> {
    Action::new(branches).map_err(err)
}

fn parse_outcomes(outcomes: BTreeMap<usize, String>) -> PyResult<BTreeMap<usize, Outcome>> {
    outcomes
        .into_iter()
        .map(|(j, o)| match o.as_str() {
            "E" => Ok((j, Outcome::Energized)),
            "D" => Ok((j, Outcome::Damaged)),
            other => Err(err(format!("outcome `{other}` should be \"E\" or \"D\""))),
        })
        .collect()
}

fn observation(
    action: Vec<usize>,
    outcomes: Option<BTreeMap<usize, String>>,
) -> PyResult<Observation> {
    let action = parse_action(action)?;
    Ok(match outcomes {
        Some(o) => Observation::new(action, parse_outcomes(o)?),
        None => Observation::all_energized(action),
    })
}

fn profile(p_f: Vec<f64>) -> PyResult<FailureProfile> {
    FailureProfile::new(p_f).map_err(err)
}

fn goal_of(target: Option<String>) -> Goal {
    target.map_or(Goal::FullRestoration, Goal::TargetBus)
}

fn branches(a: &Action) -> Vec<usize> {
    a.branches().to_vec()
}

#[pyclass(frozen, module = "resto")]
struct Network {
    inner: Arc<core::Network>,
}

#[pymethods]
impl Network {
    /// Parses a network JSON document.
    #[new]
    fn new(document: &str) -> PyResult<Self> {
        Ok(Self {
            inner: Arc::new(core::load_network(document).map_err(err)?),
        })
    }

    #[getter]
    fn branch_count(&self) -> usize {
        self.inner.branch_count()
    }

    #[getter]
    fn bus_ids(&self) -> Vec<String> {
        self.inner.buses().iter().map(|b| b.id.clone()).collect()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings().to_vec()
    }

    fn connected_branches(&self, branch: usize) -> PyResult<Vec<usize>> {
        Ok(self
            .inner
            .connected_branches(branch)
            .map_err(err)?
            .into_iter()
            .collect())
    }

    fn source_adjacent(&self, branch: usize) -> PyResult<bool> {
        self.inner.source_adjacent(branch).map_err(err)
    }

    fn feasible_branch_actions(&self, state: &str) -> PyResult<Vec<usize>> {
        let s = parse_state(state)?;
        Ok(self
            .inner
            .feasible_branch_actions(&s)
            .map_err(err)?
            .into_iter()
            .collect())
    }

    #[pyo3(signature = (state, action, forbid_source_island_merge = false))]
    fn action_valid(
        &self,
        state: &str,
        action: Vec<usize>,
        forbid_source_island_merge: bool,
    ) -> PyResult<bool> {
        let mut rules = core::ActionRules::default();
        rules.forbid_source_island_merge = forbid_source_island_merge;
        self.inner
            .action_valid(&rules, &parse_state(state)?, &action)
            .map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.to_document()).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(buses={}, branches={})",
            self.inner.buses().len(),
            self.inner.branch_count()
        )
    }
}

#[pyfunction]
fn load_network(document: &str) -> PyResult<Network> {
    Network::new(document)
}

#[pyfunction]
fn standard_normal_cdf(x: f64) -> f64 {
    core::standard_normal_cdf(x)
}

/// Failure probability at `pga` for a lognormal fragility curve.
#[pyfunction]
fn evaluate_fragility(median_pga: f64, beta: f64, pga: f64) -> PyResult<f64> {
    let curve = core::FragilityCurve::new(median_pga, beta).map_err(err)?;
    core::evaluate_fragility(&curve, pga).map_err(err)
}

/// Successor states and probabilities of closing `action` in `state`.
#[pyfunction]
fn transition_distribution(
    state: &str,
    action: Vec<usize>,
    p_f: Vec<f64>,
) -> PyResult<Vec<(String, f64)>> {
    let dist =
        core::transition_distribution(&parse_state(state)?, &parse_action(action)?, &profile(p_f)?)
            .map_err(err)?;
    Ok(dist.into_iter().map(|(s, p)| (s.to_string(), p)).collect())
}

/// Values per state and the optimal action per state.
type SolveResult = (Vec<f64>, Vec<Option<Vec<usize>>>);

#[pyclass(frozen, module = "resto")]
struct Mdp {
    net: Arc<core::Network>,
    inner: core::RestorationMdp,
}

fn stats_dict<'py>(py: Python<'py>, st: core::MdpStats) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("states", st.states)?;
    d.set_item("actions", st.actions)?;
    d.set_item("transitions", st.transitions)?;
    d.set_item("terminals", st.terminals)?;
    d.set_item("max_depth", st.max_depth)?;
    Ok(d)
}

#[pymethods]
impl Mdp {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        stats_dict(py, self.inner.stats())
    }

    fn states(&self) -> Vec<String> {
        self.inner.states().iter().map(|s| s.to_string()).collect()
    }

    fn state_index(&self, state: &str) -> PyResult<Option<usize>> {
        Ok(self.inner.state_index(&parse_state(state)?))
    }

    fn actions(&self, state: usize) -> PyResult<Vec<Vec<usize>>> {
        self.check(state)?;
        Ok(self.inner.actions(state).iter().map(branches).collect())
    }

    fn successors(&self, state: usize, action: usize) -> PyResult<Vec<(usize, f64)>> {
        self.check(state)?;
        if action >= self.inner.actions(state).len() {
            return Err(err(format!("state {state} has no action {action}")));
        }
        Ok(self.inner.successors(state, action).to_vec())
    }

    /// Returns `(values, policy)`; policy entries are actions or `None`.
    #[pyo3(signature = (target = None))]
    fn solve(&self, target: Option<String>) -> PyResult<SolveResult> {
        let mask = core::goal_mask(&self.inner, &self.net, &goal_of(target)).map_err(err)?;
        let sol = core::solve(&self.inner, &mask).map_err(err)?;
        let policy = (0..self.inner.len())
            .map(|i| sol.action(&self.inner, i).map(branches))
            .collect();
        Ok((sol.values, policy))
    }

    fn dump(&self) -> PyResult<String> {
        let mut out = Vec::new();
        self.inner.write_dump(&mut out).map_err(err)?;
        String::from_utf8(out).map_err(err)
    }
}

impl Mdp {
    fn check(&self, state: usize) -> PyResult<()> {
        if state < self.inner.len() {
            Ok(())
        } else {
            Err(err(format!("no state {state}")))
        }
    }
}

#[pyfunction]
#[pyo3(signature = (network, p_f, simplify = true, initial = None, forbid_source_island_merge = false))]
fn build_mdp(
    py: Python<'_>,
    network: &Network,
    p_f: Vec<f64>,
    simplify: bool,
    initial: Option<String>,
    forbid_source_island_merge: bool,
) -> PyResult<Mdp> {
    let p_f = profile(p_f)?;
    let mut options = BuildOptions {
        simplify,
        initial: initial.as_deref().map(parse_state).transpose()?,
        ..Default::default()
    };
    options.rules.forbid_source_island_merge = forbid_source_island_merge;
    let net = network.inner.clone();
    let inner = py
        .detach(|| core::build_mdp(&net, &p_f, &options))
        .map_err(err)?;
    Ok(Mdp { net, inner })
}

#[pyclass(module = "resto")]
struct Session {
    inner: core::Session,
}

fn recommendation(r: core::Recommendation) -> Option<Vec<usize>> {
    r.action().map(branches)
}

#[pymethods]
impl Session {
    #[new]
    #[pyo3(signature = (network, p_f, simplify = true, forbid_source_island_merge = false, initial = None, target = None))]
    fn new(
        py: Python<'_>,
        network: &Network,
        p_f: Vec<f64>,
        simplify: bool,
        forbid_source_island_merge: bool,
        initial: Option<String>,
        target: Option<String>,
    ) -> PyResult<Self> {
        let options = core::SessionOptions {
            simplify,
            forbid_source_island_merge,
            initial,
        };
        let p_f = profile(p_f)?;
        let net = network.inner.clone();
        let inner = py
            .detach(|| core::Session::start(net, p_f, options, goal_of(target)))
            .map_err(err)?;
        Ok(Self { inner })
    }

    /// Loads a scenario file and starts its session.
    #[staticmethod]
    fn from_scenario(py: Python<'_>, path: PathBuf) -> PyResult<Self> {
        let inner = py
            .detach(|| core::Scenario::from_file(&path).and_then(|s| s.start_session()))
            .map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_snapshot(py: Python<'_>, snapshot: &str) -> PyResult<Self> {
        let snap: core::SessionSnapshot = serde_json::from_str(snapshot).map_err(err)?;
        let inner = py
            .detach(|| core::Session::from_snapshot(snap))
            .map_err(err)?;
        Ok(Self { inner })
    }

    fn snapshot(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner.snapshot()).map_err(err)
    }

    #[getter]
    fn state(&self) -> String {
        self.inner.current_state().to_string()
    }

    #[getter]
    fn value(&self) -> f64 {
        self.inner.current_value()
    }

    #[getter]
    fn initial_value(&self) -> f64 {
        self.inner.initial_value()
    }

    #[getter]
    fn is_goal(&self) -> bool {
        self.inner.is_goal()
    }

    #[getter]
    fn history(&self) -> PyResult<String> {
        serde_json::to_string(self.inner.history()).map_err(err)
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        stats_dict(py, self.inner.stats())
    }

    fn available_actions(&self) -> Vec<Vec<usize>> {
        self.inner
            .available_actions()
            .iter()
            .map(branches)
            .collect()
    }

    /// Next action, or `None` once the goal is reached.
    fn recommend(&self) -> Option<Vec<usize>> {
        recommendation(self.inner.recommend())
    }

    fn expected_sequence(&self) -> Vec<Vec<usize>> {
        self.inner
            .expected_sequence()
            .iter()
            .map(branches)
            .collect()
    }

    /// Applies an observation; omitted outcomes mean all energized.
    #[pyo3(signature = (action, outcomes = None))]
    fn apply_observation(
        &mut self,
        action: Vec<usize>,
        outcomes: Option<BTreeMap<usize, String>>,
    ) -> PyResult<String> {
        let obs = observation(action, outcomes)?;
        Ok(self.inner.apply_observation(obs).map_err(err)?.to_string())
    }

    /// Returns `(successor, remaining_steps, next_action_or_None)`.
    #[pyo3(signature = (action, outcomes = None))]
    fn what_if(
        &self,
        action: Vec<usize>,
        outcomes: Option<BTreeMap<usize, String>>,
    ) -> PyResult<(String, f64, Option<Vec<usize>>)> {
        let w = self
            .inner
            .what_if(&observation(action, outcomes)?)
            .map_err(err)?;
        Ok((
            w.successor.to_string(),
            w.remaining_steps,
            recommendation(w.next),
        ))
    }

    /// Target a bus, or `None` for full restoration.
    #[pyo3(signature = (bus = None))]
    fn retarget(&mut self, py: Python<'_>, bus: Option<String>) -> PyResult<()> {
        let mut next = self.inner.clone();
        let next = py
            .detach(move || next.set_goal(goal_of(bus)).map(|()| next))
            .map_err(err)?;
        self.inner = next;
        Ok(())
    }

    fn __repr__(&self) -> String {
        format!(
            "Session(state={}, value={:.4})",
            self.inner.current_state(),
            self.inner.current_value()
        )
    }
}

#[pymodule]
fn resto(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Network>()?;
    m.add_class::<Mdp>()?;
    m.add_class::<Session>()?;
    m.add_function(wrap_pyfunction!(load_network, m)?)?;
    m.add_function(wrap_pyfunction!(standard_normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_fragility, m)?)?;
    m.add_function(wrap_pyfunction!(transition_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(build_mdp, m)?)?;
    Ok(())
}
