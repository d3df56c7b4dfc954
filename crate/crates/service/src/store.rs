use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use qrscript::vm::Session;

struct Entry {
    created_at: Instant,
    session: Arc<Mutex<Session>>,
}

/// In-memory sessions keyed by random id. Each session has its own lock so
/// requests for one session are serialized without blocking the others.
pub struct SessionStore {
    ttl: Duration,
    sessions: Mutex<HashMap<String, Entry>>,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        SessionStore {
            ttl,
            sessions: Mutex::new(HashMap::new()),
        }
    }

    fn map(&self) -> std::sync::MutexGuard<'_, HashMap<String, Entry>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn insert(&self, session: Session) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut map = self.map();
        let now = Instant::now();
        map.retain(|_, e| now.duration_since(e.created_at) < self.ttl);
        map.insert(
            id.clone(),
            Entry {
                created_at: now,
                session: Arc::new(Mutex::new(session)),
            },
        );
        id
    }

    /// The live session with this id; expired ones are removed and not returned.
    pub fn get(&self, id: &str) -> Option<Arc<Mutex<Session>>> {
        let mut map = self.map();
        let entry = map.get(id)?;
        if entry.created_at.elapsed() >= self.ttl {
            map.remove(id);
            return None;
        }
        Some(Arc::clone(&entry.session))
    }

    pub fn purge_expired(&self) -> usize {
        let mut map = self.map();
        let before = map.len();
        map.retain(|_, e| e.created_at.elapsed() < self.ttl);
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.map().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qrscript::ir::Program;

    fn session() -> Session {
        Session::new(Program::default(), None).unwrap()
    }

    #[test]
    fn ids_are_unique() {
        let store = SessionStore::new(Duration::from_secs(60));
        let a = store.insert(session());
        let b = store.insert(session());
        assert_ne!(a, b);
        assert_eq!(store.len(), 2);
        assert!(store.get(&a).is_some());
        assert!(store.get("nope").is_none());
    }

    #[test]
    fn expired_sessions_vanish() {
        let store = SessionStore::new(Duration::ZERO);
        let id = store.insert(session());
        assert!(store.get(&id).is_none());
        store.insert(session());
        assert_eq!(store.purge_expired(), 1);
        assert!(store.is_empty());
    }
}
