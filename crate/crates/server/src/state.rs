use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock, RwLock};
use std::time::SystemTime;

use geoatlas_core::fixtures::{fixtures_json, generate_fixtures};
use geoatlas_core::index::{build_index, SpatialIndex};
use geoatlas_core::kml::{parse_document, Document, KmlError, ParseOptions, ValidationIssue};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("FILE_NOT_FOUND: {path}: {source}")]
    FileNotFound { path: PathBuf, source: io::Error },
    #[error("PARSE_FAILED: {path}: {source}")]
    ParseFailed { path: PathBuf, source: KmlError },
}

impl LoadError {
    pub fn code(&self) -> &'static str {
        match self {
            LoadError::FileNotFound { .. } => "FILE_NOT_FOUND",
            LoadError::ParseFailed { .. } => "PARSE_FAILED",
        }
    }
}

/// One loaded dataset. Never mutated; reloads build a fresh value.
#[derive(Debug)]
pub struct AppState {
    pub document: Document,
    pub index: SpatialIndex,
    pub started_at: SystemTime,
    pub data_path: PathBuf,
    pub parse_options: ParseOptions,
    /// Lenient-mode findings from the load.
    pub issues: Vec<ValidationIssue>,
}

impl AppState {
    /// State over an in-memory document, for embedding and tests.
    pub fn from_document(document: Document, parse_options: ParseOptions) -> Self {
        AppState {
            index: build_index(&document),
            data_path: PathBuf::from(&document.source_uri),
            document,
            started_at: SystemTime::now(),
            parse_options,
            issues: Vec::new(),
        }
    }
}

pub fn load_state(data_path: &Path, opts: ParseOptions) -> Result<AppState, LoadError> {
    let bytes = std::fs::read(data_path).map_err(|source| LoadError::FileNotFound {
        path: data_path.to_path_buf(),
        source,
    })?;
    let (mut document, issues) =
        parse_document(&bytes, &opts).map_err(|source| LoadError::ParseFailed {
            path: data_path.to_path_buf(),
            source,
        })?;
    document.source_uri = data_path.display().to_string();
    Ok(AppState {
        index: build_index(&document),
        document,
        started_at: SystemTime::now(),
        data_path: data_path.to_path_buf(),
        parse_options: opts,
        issues,
    })
}

/// The live [`AppState`] behind an atomically swappable pointer. Readers
/// clone the inner `Arc` and keep a consistent snapshot for the whole
/// request.
#[derive(Debug)]
pub struct StateHandle {
    current: RwLock<Arc<AppState>>,
    fixtures: OnceLock<Arc<str>>,
}

impl StateHandle {
    pub fn new(state: AppState) -> Self {
        StateHandle {
            current: RwLock::new(Arc::new(state)),
            fixtures: OnceLock::new(),
        }
    }

    pub fn snapshot(&self) -> Arc<AppState> {
        self.current
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    pub fn replace(&self, state: AppState) {
        *self.current.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(state);
    }

    /// Re-reads the current data file with the current options. On failure
    /// the previous state stays live.
    pub fn reload(&self) -> Result<Arc<AppState>, LoadError> {
        let old = self.snapshot();
        let fresh = load_state(&old.data_path, old.parse_options)?;
        self.replace(fresh);
        Ok(self.snapshot())
    }

    /// The fixture document, rendered once.
    pub fn fixtures_json(&self) -> Arc<str> {
        self.fixtures
            .get_or_init(|| Arc::from(fixtures_json(&generate_fixtures())))
            .clone()
    }
}
