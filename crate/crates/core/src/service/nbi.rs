//! REST northbound interface.

use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::{IntentReport, Orchestrator, ServiceError, NBI_PATH};
use crate::decision::EncryptionLayerChoice;
use crate::intent::{ConstraintSet, IntentError, IntentId, IntentState};
use crate::topology::NodeId;

/// Body of `POST /onos/v1/intents`. Omitted constraints default to off / 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct IntentRequest {
    pub src: NodeId,
    pub dst: NodeId,
    #[serde(default)]
    pub encryption: bool,
    #[serde(default)]
    pub latency_sensitive: bool,
    #[serde(default)]
    pub bandwidth_bps: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub id: IntentId,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IntentView {
    pub id: IntentId,
    pub src: NodeId,
    pub dst: NodeId,
    pub encryption: bool,
    pub latency_sensitive: bool,
    pub bandwidth_bps: u64,
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choice: Option<EncryptionLayerChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processing_time_ms: Option<f64>,
}

impl From<IntentReport> for IntentView {
    fn from(r: IntentReport) -> Self {
        let reason = match &r.intent.state {
            IntentState::Failed(reason) => Some(reason.clone()),
            _ => None,
        };
        IntentView {
            id: r.intent.id,
            src: r.intent.src,
            dst: r.intent.dst,
            encryption: r.intent.constraints.encrypted,
            latency_sensitive: r.intent.constraints.latency_sensitive,
            bandwidth_bps: r.intent.constraints.bandwidth_bps,
            state: r.intent.state.name().to_owned(),
            reason,
            choice: r.choice,
            processing_time_ms: r.metrics.processing_time_ms(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentList {
    pub intents: Vec<IntentView>,
}

pub fn router(orchestrator: Arc<Orchestrator>) -> Router {
    Router::new()
        .route(NBI_PATH, get(list_intents).post(submit_intent))
        .route(
            &format!("{NBI_PATH}/{{id}}"),
            get(get_intent).delete(delete_intent),
        )
        .route(&format!("{NBI_PATH}/{{id}}/trace"), get(get_trace))
        .with_state(orchestrator)
}

fn error_response(e: ServiceError) -> Response {
    let status = match &e {
        ServiceError::Intent(IntentError::UnknownIntent(_)) => StatusCode::NOT_FOUND,
        ServiceError::Intent(_) | ServiceError::UnknownFormat(_) => StatusCode::BAD_REQUEST,
        ServiceError::Conflict(..) => StatusCode::CONFLICT,
        ServiceError::Teardown(_) => StatusCode::BAD_GATEWAY,
        ServiceError::Config(_) => StatusCode::INTERNAL_SERVER_ERROR,
    };
    (status, e.to_string()).into_response()
}

async fn submit_intent(State(orch): State<Arc<Orchestrator>>, body: Bytes) -> Response {
    let received_at = Instant::now();
    let request: IntentRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return (StatusCode::BAD_REQUEST, format!("malformed intent: {e}")).into_response(),
    };
    let constraints = match ConstraintSet::from_signed(
        request.encryption,
        request.latency_sensitive,
        request.bandwidth_bps,
    ) {
        Ok(c) => c,
        Err(e) => return error_response(e.into()),
    };
    match orch.accept_intent(received_at, &request.src, &request.dst, constraints) {
        Ok(intent) => {
            let location = format!("{NBI_PATH}/{}", intent.id);
            (
                StatusCode::CREATED,
                [(header::LOCATION, location.clone())],
                Json(Created {
                    id: intent.id,
                    location,
                }),
            )
                .into_response()
        }
        Err(e) => error_response(e),
    }
}

async fn list_intents(State(orch): State<Arc<Orchestrator>>) -> Json<IntentList> {
    Json(IntentList {
        intents: orch.reports().into_iter().map(IntentView::from).collect(),
    })
}

async fn get_intent(State(orch): State<Arc<Orchestrator>>, Path(id): Path<String>) -> Response {
    match orch.report(&IntentId(id)) {
        Ok(r) => Json(IntentView::from(r)).into_response(),
        Err(e) => error_response(e),
    }
}

async fn delete_intent(State(orch): State<Arc<Orchestrator>>, Path(id): Path<String>) -> Response {
    let id = IntentId(id);
    match orch.withdraw(&id).await {
        Ok(_) => match orch.report(&id) {
            Ok(r) => Json(IntentView::from(r)).into_response(),
            Err(e) => error_response(e),
        },
        Err(e) => error_response(e),
    }
}

#[derive(Deserialize)]
struct TraceQuery {
    format: Option<String>,
}

async fn get_trace(
    State(orch): State<Arc<Orchestrator>>,
    Path(id): Path<String>,
    Query(q): Query<TraceQuery>,
) -> Response {
    let format = q.format.unwrap_or_else(|| "table".into());
    let content_type = orch
        .formatters()
        .get(&format)
        .map(|f| f.content_type())
        .unwrap_or("text/plain");
    match orch.export_trace(&IntentId(id), &format) {
        Ok(doc) => ([(header::CONTENT_TYPE, content_type)], doc).into_response(),
        Err(e) => error_response(e),
    }
}
