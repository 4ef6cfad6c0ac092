//! Single-file event store. Rows are only ever inserted; triggers reject
//! updates and deletes.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rusqlite::{params, Connection, OptionalExtension};
use serde::{Deserialize, Serialize};

use crate::model::Event;
use crate::AnnotationError;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS events (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    ts_ms INTEGER NOT NULL,
    payload TEXT NOT NULL
);
CREATE TRIGGER IF NOT EXISTS events_no_update BEFORE UPDATE ON events
    BEGIN SELECT RAISE(ABORT, 'events are append-only'); END;
CREATE TRIGGER IF NOT EXISTS events_no_delete BEFORE DELETE ON events
    BEGIN SELECT RAISE(ABORT, 'events are append-only'); END;
";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedEvent {
    pub seq: u64,
    pub ts_ms: u64,
    pub event: Event,
}

pub struct Store {
    conn: Connection,
}

impl Store {
    pub fn open(path: &Path) -> Result<Self, AnnotationError> {
        Self::init(Connection::open(path)?)
    }

    pub fn in_memory() -> Result<Self, AnnotationError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Self, AnnotationError> {
        conn.execute_batch(SCHEMA)?;
        Ok(Store { conn })
    }

    pub fn meta(&self, key: &str) -> Result<Option<String>, AnnotationError> {
        Ok(self
            .conn
            .query_row("SELECT value FROM meta WHERE key = ?1", [key], |r| r.get(0))
            .optional()?)
    }

    pub fn set_meta(&self, key: &str, value: &str) -> Result<(), AnnotationError> {
        self.conn
            .execute("INSERT OR REPLACE INTO meta (key, value) VALUES (?1, ?2)", params![key, value])?;
        Ok(())
    }

    pub fn append(&mut self, event: &Event, ts_ms: Option<u64>) -> Result<LoggedEvent, AnnotationError> {
        let ts_ms = ts_ms.unwrap_or_else(now_ms);
        let payload = serde_json::to_string(event).expect("serializable");
        let tx = self.conn.transaction()?;
        tx.execute("INSERT INTO events (ts_ms, payload) VALUES (?1, ?2)", params![ts_ms as i64, payload])?;
        let seq = tx.last_insert_rowid() as u64;
        tx.commit()?;
        Ok(LoggedEvent {
            seq,
            ts_ms,
            event: event.clone(),
        })
    }

    pub fn events(&self) -> Result<Vec<LoggedEvent>, AnnotationError> {
        let mut stmt = self.conn.prepare("SELECT seq, ts_ms, payload FROM events ORDER BY seq")?;
        let rows = stmt.query_map([], |r| {
            Ok((r.get::<_, i64>(0)?, r.get::<_, i64>(1)?, r.get::<_, String>(2)?))
        })?;
        let mut out = Vec::new();
        for row in rows {
            let (seq, ts, payload) = row?;
            let event = serde_json::from_str(&payload).map_err(|e| AnnotationError::Corrupt {
                seq: seq as u64,
                message: e.to_string(),
            })?;
            out.push(LoggedEvent {
                seq: seq as u64,
                ts_ms: ts as u64,
                event,
            });
        }
        Ok(out)
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}
