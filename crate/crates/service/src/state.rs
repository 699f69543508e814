use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use hina_core::{Hin, Table};

use crate::error::ApiError;
use crate::ServiceConfig;

/// Datasets, networks and cached responses of one client session.
#[derive(Default)]
pub struct Session {
    datasets: RwLock<BTreeMap<String, Arc<Table>>>,
    hins: RwLock<BTreeMap<String, Arc<Hin>>>,
    /// Serialized response bodies keyed by network id, endpoint and
    /// canonical parameters.
    cache: Mutex<HashMap<String, Arc<String>>>,
    counter: Mutex<u64>,
    dir: Option<PathBuf>,
}

impl Session {
    fn next_id(&self, prefix: char) -> String {
        let mut counter = self.counter.lock().expect("counter lock");
        *counter += 1;
        format!("{prefix}{counter}")
    }

    pub fn add_dataset(&self, table: Table) -> Result<String, ApiError> {
        let mut datasets = self.datasets.write().expect("dataset lock");
        let id = self.next_id('d');
        self.persist("datasets", &id, &serde_json::to_string(&table).expect("table serializes"))?;
        datasets.insert(id.clone(), Arc::new(table));
        Ok(id)
    }

    pub fn dataset(&self, id: &str) -> Result<Arc<Table>, ApiError> {
        self.datasets
            .read()
            .expect("dataset lock")
            .get(id)
            .cloned()
            .ok_or(ApiError::UnknownId)
    }

    pub fn add_hin(&self, hin: Hin) -> Result<String, ApiError> {
        let mut hins = self.hins.write().expect("hin lock");
        let id = self.next_id('h');
        self.persist("hins", &id, &hin.to_json())?;
        hins.insert(id.clone(), Arc::new(hin));
        Ok(id)
    }

    pub fn hin(&self, id: &str) -> Result<Arc<Hin>, ApiError> {
        self.hins
            .read()
            .expect("hin lock")
            .get(id)
            .cloned()
            .ok_or(ApiError::UnknownId)
    }

    pub fn cached(&self, key: &str) -> Option<Arc<String>> {
        self.cache.lock().expect("cache lock").get(key).cloned()
    }

    /// Stores a body unless one is already present, and returns the stored
    /// body so concurrent computations converge on a single response.
    pub fn store(&self, key: String, body: String) -> Arc<String> {
        self.cache
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| Arc::new(body))
            .clone()
    }

    fn persist(&self, kind: &str, id: &str, text: &str) -> Result<(), ApiError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let dir = dir.join(kind);
        let write = || -> std::io::Result<()> {
            fs::create_dir_all(&dir)?;
            let tmp = dir.join(format!(".{id}.json.tmp"));
            fs::write(&tmp, text)?;
            fs::rename(tmp, dir.join(format!("{id}.json")))
        };
        write().map_err(|e| ApiError::Internal(format!("persisting {kind}/{id}: {e}")))
    }

    fn load(dir: PathBuf) -> std::io::Result<Self> {
        let session = Session {
            dir: Some(dir.clone()),
            ..Session::default()
        };
        let mut highest = 0;
        for (kind, prefix) in [("datasets", 'd'), ("hins", 'h')] {
            for (id, text) in read_documents(&dir.join(kind))? {
                let number = id.strip_prefix(prefix).and_then(|n| n.parse::<u64>().ok());
                let Some(number) = number else { continue };
                highest = highest.max(number);
                let bad = |e: String| std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{kind}/{id}: {e}"));
                if prefix == 'd' {
                    let table: Table = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
                    session.datasets.write().expect("dataset lock").insert(id, Arc::new(table));
                } else {
                    let hin = Hin::from_json(&text).map_err(|e| bad(e.to_string()))?;
                    session.hins.write().expect("hin lock").insert(id, Arc::new(hin));
                }
            }
        }
        *session.counter.lock().expect("counter lock") = highest;
        Ok(session)
    }
}

fn read_documents(dir: &Path) -> std::io::Result<Vec<(String, String)>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
            if !id.starts_with('.') {
                out.push((id, fs::read_to_string(&path)?));
            }
        }
    }
    Ok(out)
}

/// Shared server state: sessions by id.
pub struct AppState {
    pub config: ServiceConfig,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl AppState {
    /// Builds the state, restoring every session found in the persistence
    /// directory.
    pub fn new(config: ServiceConfig) -> std::io::Result<Self> {
        let mut sessions = HashMap::new();
        if let Some(root) = &config.persist_dir {
            if root.exists() {
                for entry in fs::read_dir(root)? {
                    let entry = entry?;
                    if entry.file_type()?.is_dir() {
                        let name = entry.file_name().to_string_lossy().into_owned();
                        if valid_session_id(&name) {
                            sessions.insert(name, Arc::new(Session::load(entry.path())?));
                        }
                    }
                }
            }
        }
        Ok(Self {
            config,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        if !valid_session_id(id) {
            return Err(ApiError::Malformed(format!("invalid session id {id:?}")));
        }
        if let Some(s) = self.sessions.read().expect("session lock").get(id) {
            return Ok(s.clone());
        }
        let mut sessions = self.sessions.write().expect("session lock");
        let session = sessions.entry(id.to_owned()).or_insert_with(|| {
            Arc::new(Session {
                dir: self.config.persist_dir.as_ref().map(|d| d.join(id)),
                ..Session::default()
            })
        });
        Ok(session.clone())
    }
}

/// Session ids double as directory names, so they are restricted to
/// `[A-Za-z0-9_-]{1,64}`.
pub fn valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}
