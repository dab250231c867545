//! Write-ahead event log plus periodic state snapshots.
//!
//! Layout of the data directory:
//!
//! - `events.jsonl`: one JSON event per line, fsynced before the caller
//!   acknowledges the change;
//! - `snapshot.json`: `{ "events": n, "state": … }`, the state after the
//!   first `n` events, replaced atomically via rename.
//!
//! A crash can leave a partial last line; it is discarded on open.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::ServiceError;

const LOG: &str = "events.jsonl";
const SNAPSHOT: &str = "snapshot.json";

#[derive(Serialize, Deserialize)]
struct Snapshot<S> {
    events: u64,
    state: S,
}

pub struct Recovered<S, E> {
    pub state: Option<S>,
    /// Events logged after the snapshot, in order.
    pub events: Vec<E>,
}

pub struct EventStore<E> {
    dir: PathBuf,
    log: File,
    events: u64,
    _event: PhantomData<fn(E)>,
}

impl<E: Serialize + DeserializeOwned> EventStore<E> {
    pub fn open<S: DeserializeOwned>(dir: &Path) -> Result<(Self, Recovered<S, E>), ServiceError> {
        fs::create_dir_all(dir)?;
        let snapshot: Option<Snapshot<S>> = match fs::read(dir.join(SNAPSHOT)) {
            Ok(bytes) => Some(serde_json::from_slice(&bytes)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        let skip = snapshot.as_ref().map_or(0, |s| s.events);

        let mut log = OpenOptions::new().read(true).append(true).create(true).open(dir.join(LOG))?;
        let mut events = Vec::new();
        let mut count = 0u64;
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&mut log);
        let mut line = String::new();
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            if !line.ends_with('\n') {
                // Torn final write: never acknowledged, so drop it.
                break;
            }
            count += 1;
            if count > skip {
                let event = serde_json::from_str(line.trim_end()).map_err(|e| ServiceError::CorruptLog {
                    line: count,
                    message: e.to_string(),
                })?;
                events.push(event);
            }
            good_len += n as u64;
        }
        drop(reader);
        if log.metadata()?.len() != good_len {
            log.set_len(good_len)?;
            log.sync_all()?;
        }
        log.seek(SeekFrom::End(0))?;
        if count < skip {
            return Err(ServiceError::CorruptLog {
                line: count,
                message: format!("snapshot covers {skip} events but the log holds {count}"),
            });
        }
        let store = EventStore { dir: dir.to_path_buf(), log, events: count, _event: PhantomData };
        Ok((store, Recovered { state: snapshot.map(|s| s.state), events }))
    }

    /// Append and fsync one event.
    pub fn append(&mut self, event: &E) -> Result<(), ServiceError> {
        let mut line = serde_json::to_vec(event)?;
        line.push(b'\n');
        self.log.write_all(&line)?;
        self.log.sync_data()?;
        self.events += 1;
        Ok(())
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn write_snapshot<S: Serialize>(&mut self, state: &S) -> Result<(), ServiceError> {
        let tmp = self.dir.join(format!("{SNAPSHOT}.tmp"));
        let bytes = serde_json::to_vec(&Snapshot { events: self.events, state })?;
        let mut f = File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, self.dir.join(SNAPSHOT))?;
        File::open(&self.dir)?.sync_all()?;
        Ok(())
    }
}
