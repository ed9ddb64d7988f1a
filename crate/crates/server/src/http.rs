use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use opinion_core::registry::{registry_entries, RegistryEntry};
use uuid::Uuid;

use crate::error::ServeError;
use crate::gateway::Gateway;
use crate::model::{AskRequest, AskResponse, Conversation, ConversationSummary, FieldError, SharedConversation, ShareResponse};

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/api/biases", get(biases))
        .route("/api/ask", post(ask))
        .route("/api/conversations", get(history))
        .route("/api/conversations/{id}", get(conversation))
        .route("/api/conversations/{id}/share", post(share))
        .route("/api/share/{token}", get(resolve_share))
        .with_state(gateway)
}

/// Serves until the listener fails or the future is dropped.
pub async fn serve(listener: tokio::net::TcpListener, gateway: Arc<Gateway>) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "listening");
    axum::serve(listener, router(gateway)).await
}

async fn biases() -> Json<Vec<RegistryEntry>> {
    Json(registry_entries())
}

async fn ask(
    State(gw): State<Arc<Gateway>>,
    body: Result<Json<AskRequest>, JsonRejection>,
) -> Result<Json<AskResponse>, ServeError> {
    let Json(req) = body.map_err(|e| ServeError::Validation(vec![FieldError::new("body", e.body_text())]))?;
    Ok(Json(gw.ask(req).await?))
}

async fn history(State(gw): State<Arc<Gateway>>) -> Json<Vec<ConversationSummary>> {
    Json(gw.history())
}

fn parse_id(raw: &str) -> Result<Uuid, ServeError> {
    Uuid::parse_str(raw).map_err(|_| ServeError::NotFound)
}

async fn conversation(State(gw): State<Arc<Gateway>>, Path(id): Path<String>) -> Result<Json<Conversation>, ServeError> {
    Ok(Json(gw.conversation(parse_id(&id)?)?))
}

async fn share(State(gw): State<Arc<Gateway>>, Path(id): Path<String>) -> Result<Json<ShareResponse>, ServeError> {
    let share_token = gw.share(parse_id(&id)?)?;
    Ok(Json(ShareResponse { share_token }))
}

async fn resolve_share(
    State(gw): State<Arc<Gateway>>,
    Path(token): Path<String>,
) -> Result<Json<SharedConversation>, ServeError> {
    Ok(Json(gw.resolve_share(&token)?.into()))
}
