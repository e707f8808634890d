use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use deckforge::analysis::analyze_folder;
use tokio::sync::Semaphore;

use crate::api::{AnalysisJob, AnalyzeBody, JobCreated, JobResult, JobState, API_VERSION};
use crate::{not_found, ApiError, AppState};

struct Entry {
    job: AnalysisJob,
    dir: PathBuf,
}

/// In-memory analysis jobs and the bounded pool that runs them.
pub struct JobStore {
    jobs: Mutex<HashMap<String, Entry>>,
    next: AtomicU64,
    permits: Arc<Semaphore>,
    output: tempfile::TempDir,
}

impl JobStore {
    pub fn new(workers: usize) -> std::io::Result<Self> {
        Ok(JobStore {
            jobs: Mutex::new(HashMap::new()),
            next: AtomicU64::new(1),
            permits: Arc::new(Semaphore::new(workers.max(1))),
            output: tempfile::Builder::new().prefix("deckforge-jobs").tempdir()?,
        })
    }

    pub fn get(&self, id: &str) -> Option<AnalysisJob> {
        self.lock().get(id).map(|e| e.job.clone())
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<String, Entry>> {
        // A panic while holding the lock cannot leave an entry half-written.
        self.jobs.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut AnalysisJob)) {
        if let Some(e) = self.lock().get_mut(id) {
            f(&mut e.job);
        }
    }
}

pub(crate) async fn submit(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let bad = |detail: String| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", detail);
    let request: AnalyzeBody = serde_json::from_slice(&body).map_err(|e| bad(e.to_string()))?;
    let analysis = request.to_request().map_err(bad)?;
    let folder = PathBuf::from(&request.folder);
    if !folder.is_dir() {
        return Err(bad(format!("{} is not a directory", folder.display())));
    }

    let store = &state.jobs;
    let id = format!("job-{:06}", store.next.fetch_add(1, Ordering::Relaxed));
    let dir = store.output.path().join(&id);
    let job = AnalysisJob { id: id.clone(), state: JobState::Queued, request, result: None, progress: 0.0 };
    store.lock().insert(id.clone(), Entry { job, dir: dir.clone() });

    let task_state = state.clone();
    let task_id = id.clone();
    tokio::spawn(async move {
        let store = &task_state.jobs;
        let Ok(_permit) = store.permits.clone().acquire_owned().await else { return };
        store.update(&task_id, |j| {
            j.state = JobState::Running;
            j.progress = 0.1;
        });
        let outcome = tokio::task::spawn_blocking(move || analyze_folder(&folder, &analysis, &dir)).await;
        let result = match outcome {
            Ok(Ok((_, files))) => Ok(files
                .iter()
                .filter_map(|p| p.file_name().and_then(|n| n.to_str()).map(str::to_string))
                .collect()),
            Ok(Err(e)) => Err(e.to_string()),
            Err(e) => Err(format!("analysis worker stopped: {e}")),
        };
        store.update(&task_id, |j| {
            j.progress = 1.0;
            match result {
                Ok(files) => {
                    j.state = JobState::Done;
                    j.result = Some(JobResult { files, error: None });
                }
                Err(error) => {
                    log::warn!("{task_id} failed: {error}");
                    j.state = JobState::Failed;
                    j.result = Some(JobResult { files: Vec::new(), error: Some(error) });
                }
            }
        });
    });
    Ok((StatusCode::ACCEPTED, Json(JobCreated { api_version: API_VERSION, id })).into_response())
}

pub(crate) async fn status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<AnalysisJob>, ApiError> {
    state.jobs.get(&id).map(Json).ok_or_else(|| not_found("job", &id))
}

pub(crate) async fn file(
    State(state): State<Arc<AppState>>,
    Path((id, name)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let path = {
        let jobs = state.jobs.lock();
        let entry = jobs.get(&id).ok_or_else(|| not_found("job", &id))?;
        // Only names the job itself reported are served, which rules out path tricks.
        let listed = entry.job.result.as_ref().is_some_and(|r| r.files.contains(&name));
        if !listed {
            return Err(not_found("file", &name));
        }
        entry.dir.join(&name)
    };
    let bytes = tokio::fs::read(&path).await.map_err(|_| not_found("file", &name))?;
    let mime = if name.ends_with(".svg") { "image/svg+xml" } else { "text/csv; charset=utf-8" };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}
