use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use super::{Session, SessionError};
use crate::canonical::Tolerances;

/// One writer at a time; readers always see a complete snapshot.
struct Slot {
    writer: Mutex<()>,
    current: RwLock<Arc<Session>>,
}

/// Sessions by id, optionally persisted as `<dir>/<id>.json`.
pub struct SessionStore {
    dir: Option<PathBuf>,
    counter: AtomicU64,
    slots: RwLock<BTreeMap<String, Arc<Slot>>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            counter: AtomicU64::new(1),
            slots: RwLock::new(BTreeMap::new()),
        }
    }

    /// Opens `dir`, loading every session file found there.
    pub fn persistent(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let store = Self {
            dir: Some(dir.clone()),
            ..Self::in_memory()
        };
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            store.insert(Session::load(&p)?);
        }
        Ok(store)
    }

    fn path(&self, id: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{id}.json")))
    }

    fn persist(&self, session: &Session) -> Result<(), SessionError> {
        match self.path(&session.id) {
            Some(p) => session.save(&p),
            None => Ok(()),
        }
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, SessionError> {
        self.slots
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    /// Adds an existing session, keeping the id counter ahead of `sess-N` ids.
    pub fn insert(&self, session: Session) -> Arc<Session> {
        if let Some(n) = session
            .id
            .strip_prefix("sess-")
            .and_then(|n| n.parse::<u64>().ok())
        {
            self.counter.fetch_max(n + 1, Ordering::SeqCst);
        }
        let snapshot = Arc::new(session);
        let slot = Arc::new(Slot {
            writer: Mutex::new(()),
            current: RwLock::new(snapshot.clone()),
        });
        self.slots
            .write()
            .expect("store lock")
            .insert(snapshot.id.clone(), slot);
        snapshot
    }

    pub fn create(&self, text: &str, tolerances: Tolerances) -> Result<Arc<Session>, SessionError> {
        let id = format!("sess-{}", self.counter.fetch_add(1, Ordering::SeqCst));
        let session = Session::create_with(id, text, tolerances)?;
        self.persist(&session)?;
        Ok(self.insert(session))
    }

    pub fn get(&self, id: &str) -> Result<Arc<Session>, SessionError> {
        Ok(self.slot(id)?.current.read().expect("slot lock").clone())
    }

    pub fn ids(&self) -> Vec<String> {
        self.slots
            .read()
            .expect("store lock")
            .keys()
            .cloned()
            .collect()
    }

    /// Applies `f` to the current snapshot under the session's writer lock.
    /// Readers keep seeing the previous snapshot until `f` finishes.
    pub fn update<F>(&self, id: &str, f: F) -> Result<Arc<Session>, SessionError>
    where
        F: FnOnce(&Session) -> Result<Session, SessionError>,
    {
        let slot = self.slot(id)?;
        let _writer = slot.writer.lock().expect("writer lock");
        let current = slot.current.read().expect("slot lock").clone();
        let next = Arc::new(f(&current)?);
        self.persist(&next)?;
        *slot.current.write().expect("slot lock") = next.clone();
        Ok(next)
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }
}

impl Default for SessionStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NET: &str = "var A : a > na\nvar B : b > nb\nedge A -> B\n";

    #[test]
    fn ids_and_updates() {
        let store = SessionStore::in_memory();
        let a = store.create(NET, Tolerances::default()).unwrap();
        let b = store.create(NET, Tolerances::default()).unwrap();
        assert_eq!((a.id.as_str(), b.id.as_str()), ("sess-1", "sess-2"));
        let updated = store
            .update("sess-1", |s| s.add_statement("P(a) = 0.3"))
            .unwrap();
        assert_eq!(updated.statements.len(), 1);
        assert_eq!(store.get("sess-1").unwrap().statements.len(), 1);
        // the old snapshot is untouched
        assert!(a.statements.is_empty());
        assert!(matches!(
            store.get("sess-9"),
            Err(SessionError::NotFound(_))
        ));
        assert!(store
            .update("sess-1", |s| s.remove_statement("s7"))
            .is_err());
        assert_eq!(store.get("sess-1").unwrap().statements.len(), 1);
    }

    #[test]
    fn persistence_reloads_sessions() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = SessionStore::persistent(dir.path()).unwrap();
            store.create(NET, Tolerances::default()).unwrap();
            store
                .update("sess-1", |s| s.add_statement("P(b | a) = 0.7"))
                .unwrap();
        }
        let store = SessionStore::persistent(dir.path()).unwrap();
        assert_eq!(store.ids(), vec!["sess-1"]);
        assert_eq!(store.get("sess-1").unwrap().statements.len(), 1);
        assert_eq!(
            store.create(NET, Tolerances::default()).unwrap().id,
            "sess-2"
        );
    }

    #[test]
    fn concurrent_writers_serialize() {
        let store = Arc::new(SessionStore::in_memory());
        store.create(NET, Tolerances::default()).unwrap();
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let store = store.clone();
                std::thread::spawn(move || {
                    store
                        .update("sess-1", |s| {
                            s.add_statement(&format!("P(a) >= {}*P(b)", i))
                        })
                        .unwrap();
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(store.get("sess-1").unwrap().statements.len(), 8);
    }
}
