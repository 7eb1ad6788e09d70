//! Owner lookup by plate against a records service.
//!
//! Wire protocol, one request per line:
//!
//! ```text
//! -> PLATE ABC123
//! <- OWNER J. PEREZ      (or)      <- NOTFOUND
//! ```
//!
//! Two backends speak it: [`FixtureBackend`] answers from an in-memory
//! plate → owner map loaded from a JSON file, and [`SocketBackend`] sends the
//! request over TCP (to a [`StubServer`] in this repository).

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plates::{is_valid_plate, normalize_plate};

pub const DEFAULT_LOOKUP_DEADLINE: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OwnerSource {
    Stub,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OwnerRecord {
    pub plate: String,
    pub owner_name: String,
    pub source: OwnerSource,
}

/// A plate unknown to the backend is a normal outcome, not an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LookupOutcome {
    Found(OwnerRecord),
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("invalid plate {0:?}")]
    InvalidPlate(String),
    #[error("lookup for {plate} timed out after {deadline:?}")]
    Timeout { plate: String, deadline: Duration },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("lookup io: {0}")]
    Io(String),
    #[error("fixture: {0}")]
    Fixture(String),
}

pub trait LookupBackend: Send + Sync {
    /// Returns the owner name for `plate`, `None` when the backend does not know it.
    fn lookup(&self, plate: &str, deadline: Duration) -> Result<Option<String>, LookupError>;

    fn source(&self) -> OwnerSource;
}

/// Answers from a plate → owner map, optionally after an artificial delay.
#[derive(Debug, Clone, Default)]
pub struct FixtureBackend {
    owners: BTreeMap<String, String>,
    delay: Duration,
}

impl FixtureBackend {
    pub fn new(owners: BTreeMap<String, String>) -> Self {
        let owners = owners.into_iter().map(|(p, o)| (normalize_plate(&p), o)).collect();
        Self { owners, delay: Duration::ZERO }
    }

    /// Reads a JSON object mapping plate → owner name.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, LookupError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| LookupError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, LookupError> {
        let owners: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| LookupError::Fixture(e.to_string()))?;
        if let Some(bad) = owners.keys().find(|p| !is_valid_plate(&normalize_plate(p))) {
            return Err(LookupError::Fixture(format!("invalid plate key {bad:?}")));
        }
        Ok(Self::new(owners))
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    pub fn owners(&self) -> &BTreeMap<String, String> {
        &self.owners
    }
}

impl LookupBackend for FixtureBackend {
    fn lookup(&self, plate: &str, deadline: Duration) -> Result<Option<String>, LookupError> {
        if !self.delay.is_zero() {
            if self.delay >= deadline {
                thread::sleep(deadline);
                return Err(LookupError::Timeout { plate: plate.to_string(), deadline });
            }
            thread::sleep(self.delay);
        }
        Ok(self.owners.get(plate).cloned())
    }

    fn source(&self) -> OwnerSource {
        OwnerSource::Stub
    }
}

/// Sends `PLATE <plate>` over TCP and parses the one-line reply.
#[derive(Debug, Clone)]
pub struct SocketBackend {
    addr: SocketAddr,
}

impl SocketBackend {
    pub fn new(addr: SocketAddr) -> Self {
        Self { addr }
    }
}

fn io_to_lookup(e: io::Error, plate: &str, deadline: Duration) -> LookupError {
    match e.kind() {
        io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock => {
            LookupError::Timeout { plate: plate.to_string(), deadline }
        }
        _ => LookupError::Io(e.to_string()),
    }
}

impl LookupBackend for SocketBackend {
    fn lookup(&self, plate: &str, deadline: Duration) -> Result<Option<String>, LookupError> {
        let timeout = || LookupError::Timeout { plate: plate.to_string(), deadline };
        if deadline.is_zero() {
            return Err(timeout());
        }
        let started = Instant::now();
        let mut stream = TcpStream::connect_timeout(&self.addr, deadline)
            .map_err(|e| io_to_lookup(e, plate, deadline))?;
        let remaining = deadline.checked_sub(started.elapsed()).filter(|d| !d.is_zero()).ok_or_else(timeout)?;
        stream.set_read_timeout(Some(remaining)).map_err(|e| LookupError::Io(e.to_string()))?;
        stream.set_write_timeout(Some(remaining)).map_err(|e| LookupError::Io(e.to_string()))?;
        stream
            .write_all(format!("PLATE {plate}\n").as_bytes())
            .map_err(|e| io_to_lookup(e, plate, deadline))?;

        let mut line = String::new();
        BufReader::new(stream)
            .read_line(&mut line)
            .map_err(|e| io_to_lookup(e, plate, deadline))?;
        parse_response(&line)
    }

    fn source(&self) -> OwnerSource {
        OwnerSource::Remote
    }
}

fn parse_response(line: &str) -> Result<Option<String>, LookupError> {
    let Some(body) = line.strip_suffix('\n') else {
        return Err(LookupError::Protocol(format!("unterminated response {line:?}")));
    };
    let body = body.strip_suffix('\r').unwrap_or(body);
    if body == "NOTFOUND" {
        return Ok(None);
    }
    match body.strip_prefix("OWNER ") {
        Some(name) if !name.trim().is_empty() => Ok(Some(name.to_string())),
        _ => Err(LookupError::Protocol(format!("unexpected response {body:?}"))),
    }
}

/// Local TCP server speaking the lookup protocol from a fixture map.
/// Shuts down when dropped.
pub struct StubServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Binds an ephemeral port on 127.0.0.1. Each reply is sent after `delay`.
    pub fn spawn(backend: FixtureBackend, delay: Duration) -> io::Result<Self> {
        Self::spawn_with(move |request| {
            let reply = match request.strip_prefix("PLATE ") {
                Some(plate) => match backend.owners().get(plate.trim()) {
                    Some(owner) => format!("OWNER {owner}\n"),
                    None => "NOTFOUND\n".to_string(),
                },
                None => "ERROR bad request\n".to_string(),
            };
            (reply, delay)
        })
    }

    /// Serves replies computed by `respond`; used to inject malformed answers.
    pub fn spawn_with<F>(respond: F) -> io::Result<Self>
    where
        F: Fn(&str) -> (String, Duration) + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let respond = Arc::new(respond);
        let flag = Arc::clone(&stop);
        let handle = thread::spawn(move || {
            for conn in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(conn) = conn else { continue };
                let respond = Arc::clone(&respond);
                thread::spawn(move || {
                    let _ = serve(conn, &*respond);
                });
            }
        });
        Ok(Self { addr, stop, handle: Some(handle) })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }
}

fn serve(conn: TcpStream, respond: &dyn Fn(&str) -> (String, Duration)) -> io::Result<()> {
    let mut writer = conn.try_clone()?;
    for line in BufReader::new(conn).lines() {
        let (reply, delay) = respond(line?.trim_end());
        thread::sleep(delay);
        writer.write_all(reply.as_bytes())?;
    }
    Ok(())
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendConfig {
    Fixture { path: PathBuf, delay: Duration },
    Socket { addr: SocketAddr },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookupConfig {
    pub backend: BackendConfig,
    pub deadline: Duration,
}

impl LookupConfig {
    pub fn fixture(path: impl Into<PathBuf>) -> Self {
        Self {
            backend: BackendConfig::Fixture { path: path.into(), delay: Duration::ZERO },
            deadline: DEFAULT_LOOKUP_DEADLINE,
        }
    }
}

/// Lookup client with a per-run cache. Safe to share across threads.
pub struct OwnerClient {
    backend: Box<dyn LookupBackend>,
    deadline: Duration,
    cache: Mutex<HashMap<String, LookupOutcome>>,
}

impl OwnerClient {
    pub fn new(backend: impl LookupBackend + 'static, deadline: Duration) -> Self {
        Self {
            backend: Box::new(backend),
            deadline,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn from_config(config: &LookupConfig) -> Result<Self, LookupError> {
        Ok(match &config.backend {
            BackendConfig::Fixture { path, delay } => {
                Self::new(FixtureBackend::from_file(path)?.with_delay(*delay), config.deadline)
            }
            BackendConfig::Socket { addr } => Self::new(SocketBackend::new(*addr), config.deadline),
        })
    }

    /// Looks up a normalized plate. Successful answers (found or not found)
    /// are cached; errors are not.
    pub fn query_owner(&self, plate: &str) -> Result<LookupOutcome, LookupError> {
        if !is_valid_plate(plate) {
            return Err(LookupError::InvalidPlate(plate.to_string()));
        }
        if let Some(hit) = self.cache.lock().expect("cache lock").get(plate) {
            return Ok(hit.clone());
        }
        let outcome = match self.backend.lookup(plate, self.deadline)? {
            Some(owner_name) => LookupOutcome::Found(OwnerRecord {
                plate: plate.to_string(),
                owner_name,
                source: self.backend.source(),
            }),
            None => LookupOutcome::NotFound,
        };
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(cache.entry(plate.to_string()).or_insert(outcome).clone())
    }
}

pub fn query_owner(client: &OwnerClient, plate: &str) -> Result<LookupOutcome, LookupError> {
    client.query_owner(plate)
}
