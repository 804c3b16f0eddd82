//! Session files: one `<id>.json` per session, written via a temporary
//! file and a rename so a crash never leaves a half-written snapshot.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use resto_core::{Session, SessionSnapshot};
use serde::{Deserialize, Serialize};

/// On-disk form of a session. Timestamps are Unix milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub created: u64,
    pub updated: u64,
    pub snapshot: SessionSnapshot,
}

pub fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub fn new_session_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

impl SessionRecord {
    pub fn new(session: &Session) -> Self {
        let now = now_millis();
        Self {
            id: new_session_id(),
            created: now,
            updated: now,
            snapshot: session.snapshot(),
        }
    }

    /// Same id and creation time, fresh snapshot.
    pub fn updated_from(&self, session: &Session) -> Self {
        Self {
            id: self.id.clone(),
            created: self.created,
            updated: now_millis().max(self.created),
            snapshot: session.snapshot(),
        }
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Atomic replace of `path`.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        let body = serde_json::to_vec_pretty(self).map_err(std::io::Error::other)?;
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&body)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)
    }
}

/// Snapshot that could not be restored and was moved aside.
#[derive(Debug, Clone)]
pub struct Quarantined {
    pub file: PathBuf,
    pub reason: String,
}

/// Sessions restored from disk and the files that were moved aside.
pub type Loaded = (Vec<(SessionRecord, Session)>, Vec<Quarantined>);

#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn quarantine_dir(&self) -> PathBuf {
        self.dir.join("quarantine")
    }

    pub fn path_of(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    pub fn save(&self, record: &SessionRecord) -> std::io::Result<()> {
        if !valid_id(&record.id) {
            return Err(std::io::Error::other(format!(
                "bad session id {}",
                record.id
            )));
        }
        record.write(&self.path_of(&record.id))
    }

    /// Restores every session by replaying its history. Files that fail
    /// to parse or replay are moved to `quarantine/`.
    pub fn load_all(&self) -> std::io::Result<Loaded> {
        let mut files: Vec<PathBuf> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut loaded = Vec::new();
        let mut bad = Vec::new();
        for file in files {
            match Self::restore(&file) {
                Ok(pair) => loaded.push(pair),
                Err(reason) => {
                    tracing::error!(file = %file.display(), %reason, "quarantining session snapshot");
                    let qdir = self.quarantine_dir();
                    fs::create_dir_all(&qdir)?;
                    let target = qdir.join(file.file_name().unwrap_or_default());
                    fs::rename(&file, &target)?;
                    bad.push(Quarantined {
                        file: target,
                        reason,
                    });
                }
            }
        }
        Ok((loaded, bad))
    }

    fn restore(file: &Path) -> Result<(SessionRecord, Session), String> {
        let record = SessionRecord::read(file).map_err(|e| e.to_string())?;
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        if record.id != stem || !valid_id(stem) {
            return Err(format!(
                "record id `{}` does not match file name",
                record.id
            ));
        }
        let session = Session::from_snapshot(record.snapshot.clone()).map_err(|e| e.to_string())?;
        Ok((record, session))
    }
}
