//! Append-only JSON Lines journal of engine events.
//!
//! Every line is one [`EngineEvent`] tagged by `kind`. A crash can leave at
//! most one torn line at the end of the file; opening the journal drops it
//! and truncates the file back to the last complete event.

use std::fs::{File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use parking_lot::Mutex;
use safetynet_core::{EngineEvent, EngineState, EventSink};

use crate::config::FsyncPolicy;
use crate::ServiceError;

/// What [`load`] found in a journal.
#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub events: Vec<EngineEvent>,
    /// Byte length of the complete-event prefix.
    pub valid_len: u64,
    /// Bytes of a torn final line that were ignored.
    pub torn_bytes: u64,
}

/// Parses journal bytes. Only an unterminated final line may be malformed;
/// anything else is corruption and fails with its 1-based line number.
pub fn parse(bytes: &[u8]) -> Result<Loaded, ServiceError> {
    let mut events = Vec::new();
    let mut pos = 0usize;
    let mut line_no = 0usize;
    while pos < bytes.len() {
        line_no += 1;
        let (line, next, terminated) = match bytes[pos..].iter().position(|&b| b == b'\n') {
            Some(i) => (&bytes[pos..pos + i], pos + i + 1, true),
            None => (&bytes[pos..], bytes.len(), false),
        };
        if line.iter().all(u8::is_ascii_whitespace) {
            if terminated {
                pos = next;
                continue;
            }
            break;
        }
        match serde_json::from_slice::<EngineEvent>(line) {
            Ok(ev) if terminated => events.push(ev),
            // An unterminated tail is torn even if it happens to parse: the
            // newline is written with the event, so its absence means the
            // append never completed.
            Ok(_) => break,
            Err(_) if !terminated => break,
            Err(e) => return Err(ServiceError::Corrupt { line: line_no, message: e.to_string() }),
        }
        pos = next;
    }
    Ok(Loaded { events, valid_len: pos as u64, torn_bytes: (bytes.len() - pos) as u64 })
}

pub fn load(path: &Path) -> Result<Loaded, ServiceError> {
    let mut bytes = Vec::new();
    match File::open(path) {
        Ok(mut f) => {
            f.read_to_end(&mut bytes).map_err(|e| io_err(path, e))?;
        }
        Err(e) if e.kind() == io::ErrorKind::NotFound => {}
        Err(e) => return Err(io_err(path, e)),
    }
    parse(&bytes)
}

/// Folds a journal into engine state.
pub fn replay(path: &Path) -> Result<(EngineState, Loaded), ServiceError> {
    let loaded = load(path)?;
    let state = EngineState::replay(&loaded.events).map_err(|e| ServiceError::Replay(e.to_string()))?;
    Ok((state, loaded))
}

fn io_err(path: &Path, e: io::Error) -> ServiceError {
    ServiceError::Io(format!("{}: {e}", path.display()))
}

/// Journal file open for appending.
pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
    fsync: FsyncPolicy,
}

impl Journal {
    /// Opens (creating if needed) the journal, drops a torn tail, and returns
    /// the events already recorded.
    pub fn open(path: &Path, fsync: FsyncPolicy) -> Result<(Self, Loaded), ServiceError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        let loaded = load(path)?;
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        if loaded.torn_bytes > 0 {
            tracing::warn!(path = %path.display(), bytes = loaded.torn_bytes, "dropping torn final journal line");
            file.set_len(loaded.valid_len).map_err(|e| io_err(path, e))?;
            file.sync_all().map_err(|e| io_err(path, e))?;
        }
        file.seek(SeekFrom::End(0)).map_err(|e| io_err(path, e))?;
        Ok((Self { path: path.to_path_buf(), file: Mutex::new(file), fsync }, loaded))
    }

    /// Wraps an already-open file, e.g. a device that always fails.
    pub fn from_file(path: impl Into<PathBuf>, file: File, fsync: FsyncPolicy) -> Self {
        Self { path: path.into(), file: Mutex::new(file), fsync }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventSink for Journal {
    fn append(&self, ev: &EngineEvent) -> Result<(), String> {
        let mut line = serde_json::to_vec(ev).map_err(|e| e.to_string())?;
        line.push(b'\n');
        let mut f = self.file.lock();
        let before = f.stream_position().map_err(|e| e.to_string())?;
        let written = f.write_all(&line).and_then(|_| f.flush()).and_then(|_| {
            if self.fsync == FsyncPolicy::Always {
                f.sync_data()
            } else {
                Ok(())
            }
        });
        if let Err(e) = written {
            // Roll back a partial line so later appends do not land behind it.
            if f.set_len(before).and_then(|_| f.seek(SeekFrom::Start(before))).is_err() {
                tracing::error!(path = %self.path.display(), "journal rollback failed; reopen drops the torn tail");
            }
            return Err(e.to_string());
        }
        Ok(())
    }
}
