//! HTTP JSON session service.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use resto_core::{
    Action, Goal, MdpStats, NetworkDocument, NetworkSource, Observation, Recommendation,
    ScenarioDocument, Session,
};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::error::{parse_body, ApiError};
use crate::shorthand::{parse_action, parse_outcomes};
use crate::store::{Quarantined, SessionRecord, Store};

struct Entry {
    record: SessionRecord,
    session: Session,
}

struct Inner {
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
    store: Option<Store>,
}

/// Shared service state. Each session sits behind its own async lock, so
/// mutations of one session are linearized while others proceed.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// Empty in-memory service.
    pub fn ephemeral() -> Self {
        Self {
            inner: Arc::new(Inner {
                sessions: RwLock::new(HashMap::new()),
                store: None,
            }),
        }
    }

    /// Service backed by `store`, with every stored session restored.
    pub fn with_store(store: Store) -> std::io::Result<(Self, Vec<Quarantined>)> {
        let (loaded, bad) = store.load_all()?;
        let sessions = loaded
            .into_iter()
            .map(|(record, session)| {
                (
                    record.id.clone(),
                    Arc::new(Mutex::new(Entry { record, session })),
                )
            })
            .collect();
        let state = Self {
            inner: Arc::new(Inner {
                sessions: RwLock::new(sessions),
                store: Some(store),
            }),
        };
        Ok((state, bad))
    }

    pub fn session_count(&self) -> usize {
        self.inner
            .sessions
            .read()
            .expect("session map poisoned")
            .len()
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>, ApiError> {
        self.inner
            .sessions
            .read()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn persist(&self, record: &SessionRecord) -> Result<(), ApiError> {
        if let Some(store) = &self.inner.store {
            store.save(record).map_err(|e| {
                tracing::error!(id = %record.id, error = %e, "failed to write session");
                ApiError::internal(format!("could not persist session: {e}"))
            })?;
        }
        Ok(())
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/observations", post(observe))
        .route("/sessions/{id}/whatif", get(what_if))
        .route("/sessions/{id}/retarget", post(retarget))
        .route("/sessions/{id}/mdp/stats", get(mdp_stats))
        .with_state(state)
}

fn recommendation(r: &Recommendation) -> Option<Action> {
    r.action().cloned()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionView {
    pub id: String,
    pub created: u64,
    pub updated: u64,
    pub state: String,
    pub value: f64,
    pub initial_value: f64,
    pub goal: Goal,
    /// Next action to apply; `null` once the goal is reached.
    pub recommendation: Option<Action>,
    pub terminal: bool,
    pub expected_sequence: Vec<Action>,
    pub available_actions: Vec<Action>,
    pub history: Vec<Observation>,
    pub p_f: Vec<f64>,
    pub network: NetworkDocument,
}

impl SessionView {
    fn of(entry: &Entry) -> Self {
        let s = &entry.session;
        Self {
            id: entry.record.id.clone(),
            created: entry.record.created,
            updated: entry.record.updated,
            state: s.current_state().to_string(),
            value: s.current_value(),
            initial_value: s.initial_value(),
            goal: s.goal().clone(),
            recommendation: recommendation(&s.recommend()),
            terminal: s.is_goal(),
            expected_sequence: s.expected_sequence(),
            available_actions: s.available_actions().to_vec(),
            history: s.history().to_vec(),
            p_f: s.profile().as_slice().to_vec(),
            network: entry.record.snapshot.network.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WhatIfView {
    pub successor: String,
    pub remaining_steps: f64,
    pub recommendation: Option<Action>,
    pub terminal: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StatsView {
    #[serde(flatten)]
    pub stats: MdpStats,
    pub simplified: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RetargetRequest {
    /// Bus to energize first; `null` returns to full restoration.
    bus: Option<String>,
}

async fn healthz(State(state): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::json!({"status": "ok", "sessions": state.session_count()}))
}

async fn list_sessions(State(state): State<AppState>) -> Json<Vec<String>> {
    let mut ids: Vec<String> = state
        .inner
        .sessions
        .read()
        .expect("session map poisoned")
        .keys()
        .cloned()
        .collect();
    ids.sort();
    Json(ids)
}

async fn create_session(
    State(state): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let doc: ScenarioDocument = parse_body(&body)?;
    if let NetworkSource::Path(_) = doc.network {
        return Err(ApiError::schema(
            "the service accepts inline network documents only",
            "network",
        ));
    }
    let scenario = doc.resolve(None).map_err(|e| ApiError::from_scenario(&e))?;
    let session = tokio::task::spawn_blocking(move || scenario.start_session())
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::from_scenario(&e))?;
    let entry = Entry {
        record: SessionRecord::new(&session),
        session,
    };
    state.persist(&entry.record)?;
    let view = SessionView::of(&entry);
    tracing::info!(id = %view.id, states = entry.session.mdp().len(), "session created");
    state
        .inner
        .sessions
        .write()
        .expect("session map poisoned")
        .insert(view.id.clone(), Arc::new(Mutex::new(entry)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let entry = state.entry(&id)?;
    let entry = entry.lock().await;
    Ok(Json(SessionView::of(&entry)))
}

async fn observe(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>, ApiError> {
    let entry = state.entry(&id)?;
    let obs: Observation = parse_body(&body)?;
    let mut entry = entry.lock().await;
    let mut next = entry.session.clone();
    next.apply_observation(obs)
        .map_err(|e| ApiError::from_planner(&e, ""))?;
    let record = entry.record.updated_from(&next);
    state.persist(&record)?;
    entry.session = next;
    entry.record = record;
    Ok(Json(SessionView::of(&entry)))
}

async fn what_if(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Json<WhatIfView>, ApiError> {
    let entry = state.entry(&id)?;
    let action = query
        .get("action")
        .ok_or_else(|| ApiError::malformed("missing query parameter", "action"))
        .and_then(|a| parse_action(a).map_err(|m| ApiError::malformed(m, "action")))?;
    let obs = match query.get("outcomes") {
        Some(text) => Observation::new(
            action,
            parse_outcomes(text).map_err(|m| ApiError::malformed(m, "outcomes"))?,
        ),
        None => Observation::all_energized(action),
    };
    let entry = entry.lock().await;
    let w = entry
        .session
        .what_if(&obs)
        .map_err(|e| ApiError::from_planner(&e, ""))?;
    Ok(Json(WhatIfView {
        successor: w.successor.to_string(),
        remaining_steps: w.remaining_steps,
        terminal: w.next == Recommendation::Terminal,
        recommendation: recommendation(&w.next),
    }))
}

async fn retarget(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>, ApiError> {
    let entry = state.entry(&id)?;
    let req: RetargetRequest = parse_body(&body)?;
    let goal = match req.bus {
        Some(bus) => Goal::TargetBus(bus),
        None => Goal::FullRestoration,
    };
    let mut entry = entry.lock().await;
    let mut next = entry.session.clone();
    let next = tokio::task::spawn_blocking(move || next.set_goal(goal).map(|()| next))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| ApiError::from_planner(&e, ""))?;
    let record = entry.record.updated_from(&next);
    state.persist(&record)?;
    entry.session = next;
    entry.record = record;
    Ok(Json(SessionView::of(&entry)))
}

async fn mdp_stats(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<StatsView>, ApiError> {
    let entry = state.entry(&id)?;
    let entry = entry.lock().await;
    Ok(Json(StatsView {
        stats: entry.session.stats(),
        simplified: entry.session.mdp().is_simplified(),
    }))
}
