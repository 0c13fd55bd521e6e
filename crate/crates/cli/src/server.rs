//! HTTP/JSON front end over [`Api`]. Compute-heavy handlers run on the
//! blocking pool so reads of other sessions are never starved.

use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use elicit_core::session::{Api, ApiError, ErrorCode, RunRequest};
use serde::Deserialize;
use serde::Serialize;

pub struct HttpError(pub ApiError);

impl From<ApiError> for HttpError {
    fn from(e: ApiError) -> Self {
        HttpError(e)
    }
}

pub fn status_of(code: ErrorCode) -> StatusCode {
    match code {
        ErrorCode::ParseError
        | ErrorCode::UnknownName
        | ErrorCode::RangeError
        | ErrorCode::ValidationError
        | ErrorCode::InvalidArgument => StatusCode::BAD_REQUEST,
        ErrorCode::SessionNotFound | ErrorCode::StatementNotFound => StatusCode::NOT_FOUND,
        ErrorCode::NotRun
        | ErrorCode::StaleResults
        | ErrorCode::SamplesUnavailable
        | ErrorCode::NoSamples
        | ErrorCode::AllUndefined => StatusCode::CONFLICT,
        ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for HttpError {
    fn into_response(self) -> Response {
        (status_of(self.0.code), Json(self.0)).into_response()
    }
}

type Reply<T> = Result<Json<T>, HttpError>;

fn body_text(body: &Bytes) -> Result<String, HttpError> {
    String::from_utf8(body.to_vec()).map_err(|_| {
        HttpError(ApiError::new(
            ErrorCode::InvalidArgument,
            "body is not UTF-8",
        ))
    })
}

async fn blocking<T, F>(f: F) -> Reply<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json).map_err(HttpError),
        Err(e) => Err(HttpError(ApiError::new(ErrorCode::Internal, e.to_string()))),
    }
}

async fn create(State(api): State<Api>, body: Bytes) -> Result<Response, HttpError> {
    let text = body_text(&body)?;
    let created = blocking(move || api.create_session(&text)).await?;
    Ok((StatusCode::CREATED, created).into_response())
}

async fn snapshot(State(api): State<Api>, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(api.snapshot(&id)?))
}

async fn add_statement(
    State(api): State<Api>,
    Path(id): Path<String>,
    body: Bytes,
) -> Reply<impl Serialize> {
    let line = body_text(&body)?;
    blocking(move || api.add_statement(&id, &line)).await
}

async fn remove_statement(
    State(api): State<Api>,
    Path((id, sid)): Path<(String, String)>,
) -> Reply<impl Serialize> {
    blocking(move || api.remove_statement(&id, &sid)).await
}

async fn run(State(api): State<Api>, Path(id): Path<String>, body: Bytes) -> Reply<impl Serialize> {
    let request: RunRequest = if body.iter().all(u8::is_ascii_whitespace) {
        RunRequest::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| HttpError(ApiError::new(ErrorCode::InvalidArgument, e.to_string())))?
    };
    blocking(move || api.run(&id, &request)).await
}

#[derive(Deserialize)]
struct ResultsParams {
    query: String,
    bins: Option<usize>,
}

async fn results(
    State(api): State<Api>,
    Path(id): Path<String>,
    Query(p): Query<ResultsParams>,
) -> Reply<impl Serialize> {
    blocking(move || api.results(&id, &p.query, p.bins)).await
}

async fn bounds(State(api): State<Api>, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(api.bounds(&id)?))
}

async fn cliques(State(api): State<Api>, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(api.cliques(&id)?))
}

async fn consistency(State(api): State<Api>, Path(id): Path<String>) -> Reply<impl Serialize> {
    Ok(Json(api.consistency(&id)?))
}

pub fn router(api: Api) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(snapshot))
        .route("/sessions/{id}/statements", post(add_statement))
        .route("/sessions/{id}/statements/{sid}", delete(remove_statement))
        .route("/sessions/{id}/run", post(run))
        .route("/sessions/{id}/results", get(results))
        .route("/sessions/{id}/bounds", get(bounds))
        .route("/sessions/{id}/cliques", get(cliques))
        .route("/sessions/{id}/consistency", get(consistency))
        .with_state(api)
}

pub async fn serve(addr: SocketAddr, api: Api) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(api)).await
}
