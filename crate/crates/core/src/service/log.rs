use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use tokio::io::AsyncWriteExt;
use tokio::sync::{mpsc, oneshot};
use tokio::task::JoinHandle;

use crate::lang::Lang;
use crate::retrieval::Backend;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Vote {
    Up,
    Down,
}

impl FromStr for Vote {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(Vote::Up),
            "down" => Ok(Vote::Down),
            other => Err(format!("vote must be \"up\" or \"down\", got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedAnswer {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionLogRecord {
    pub interaction_id: String,
    pub timestamp: DateTime<Utc>,
    pub question: String,
    pub lang_detected: Lang,
    pub backend: Backend,
    pub answers: Vec<LoggedAnswer>,
    pub answered: bool,
    pub latency_ms: f64,
    #[serde(default)]
    pub feedback: Option<Vote>,
}

/// One line of the on-disk log. Votes are appended as their own lines so the
/// file is never rewritten; [`read_interaction_log`] folds them back in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LogLine {
    Ask(InteractionLogRecord),
    Feedback {
        interaction_id: String,
        timestamp: DateTime<Utc>,
        vote: Vote,
    },
}

enum Msg {
    Line(LogLine),
    Flush(oneshot::Sender<()>),
    Close,
}

struct Window {
    records: HashMap<String, InteractionLogRecord>,
    order: VecDeque<String>,
    capacity: usize,
}

/// Append-only interaction log. Handlers enqueue lines; one task owns the
/// file and writes them in arrival order. Recent records stay in memory so
/// votes can be matched to them.
#[derive(Clone)]
pub struct InteractionLog {
    tx: mpsc::UnboundedSender<Msg>,
    window: Arc<Mutex<Window>>,
}

impl InteractionLog {
    /// Opens (creating if needed) the log file and starts its writer task.
    /// With no path, records are kept in memory only. Must be called inside
    /// a tokio runtime.
    pub fn open(path: Option<&Path>, capacity: usize) -> std::io::Result<(Self, JoinHandle<()>)> {
        let file = match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                let f = std::fs::OpenOptions::new().create(true).append(true).open(p)?;
                Some(tokio::fs::File::from_std(f))
            }
            None => None,
        };
        let (tx, rx) = mpsc::unbounded_channel();
        let task = tokio::spawn(write_loop(file, rx));
        let window = Window {
            records: HashMap::new(),
            order: VecDeque::new(),
            capacity: capacity.max(1),
        };
        Ok((
            Self {
                tx,
                window: Arc::new(Mutex::new(window)),
            },
            task,
        ))
    }

    fn window(&self) -> std::sync::MutexGuard<'_, Window> {
        self.window.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn record(&self, rec: InteractionLogRecord) {
        {
            let mut w = self.window();
            w.order.push_back(rec.interaction_id.clone());
            w.records.insert(rec.interaction_id.clone(), rec.clone());
            while w.order.len() > w.capacity {
                if let Some(old) = w.order.pop_front() {
                    w.records.remove(&old);
                }
            }
        }
        let _ = self.tx.send(Msg::Line(LogLine::Ask(rec)));
    }

    /// Sets the vote on a recent interaction. Returns false if the id is not
    /// in the window. A later vote replaces an earlier one.
    pub fn feedback(&self, interaction_id: &str, vote: Vote) -> bool {
        {
            let mut w = self.window();
            match w.records.get_mut(interaction_id) {
                Some(rec) => rec.feedback = Some(vote),
                None => return false,
            }
        }
        let _ = self.tx.send(Msg::Line(LogLine::Feedback {
            interaction_id: interaction_id.to_string(),
            timestamp: Utc::now(),
            vote,
        }));
        true
    }

    pub fn get(&self, interaction_id: &str) -> Option<InteractionLogRecord> {
        self.window().records.get(interaction_id).cloned()
    }

    /// Resolves once everything enqueued so far is on disk.
    pub async fn flush(&self) {
        let (tx, rx) = oneshot::channel();
        if self.tx.send(Msg::Flush(tx)).is_ok() {
            let _ = rx.await;
        }
    }

    /// Stops the writer task after it has written everything enqueued so
    /// far. Later lines are dropped.
    pub fn close(&self) {
        let _ = self.tx.send(Msg::Close);
    }
}

async fn write_loop(mut file: Option<tokio::fs::File>, mut rx: mpsc::UnboundedReceiver<Msg>) {
    while let Some(msg) = rx.recv().await {
        match msg {
            Msg::Line(line) => {
                let Some(f) = file.as_mut() else { continue };
                let mut buf = serde_json::to_vec(&line).expect("log line serializes");
                buf.push(b'\n');
                if let Err(e) = f.write_all(&buf).await {
                    tracing::error!(error = %e, "interaction log write failed");
                }
            }
            Msg::Flush(done) => {
                if let Some(f) = file.as_mut() {
                    if let Err(e) = f.flush().await {
                        tracing::error!(error = %e, "interaction log flush failed");
                    }
                }
                let _ = done.send(());
            }
            Msg::Close => break,
        }
    }
    if let Some(f) = file.as_mut() {
        let _ = f.flush().await;
    }
}

/// Reads a log file back into one record per interaction, with the latest
/// vote applied.
pub fn read_interaction_log(path: impl AsRef<Path>) -> std::io::Result<Vec<InteractionLogRecord>> {
    let file = std::fs::File::open(path)?;
    let mut records: Vec<InteractionLogRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
        })?;
        match parsed {
            LogLine::Ask(rec) => {
                index.insert(rec.interaction_id.clone(), records.len());
                records.push(rec);
            }
            LogLine::Feedback { interaction_id, vote, .. } => {
                if let Some(&j) = index.get(&interaction_id) {
                    records[j].feedback = Some(vote);
                }
            }
        }
    }
    Ok(records)
}
