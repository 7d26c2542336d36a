//! Elicitation sessions: the five lists in order 1 through 5, then the Likert
//! battery. Every accepted submission is appended to a JSON-lines event log,
//! and replaying the log rebuilds the same sessions.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use riskpref_core::elicitation::{
    builtin_tasks, consistency, record_likert, ChoiceSheet, ConsistencyReport, LikertAnswers, LikertRecord,
    RiskMeasures, TASK_COUNT,
};
use riskpref_core::synthdata::{to_csv_string, Column, DataTable};
use riskpref_core::Error as CoreError;
use serde::{Deserialize, Serialize};

/// Number of steps in a session: five lists and the battery.
pub const STEPS: usize = TASK_COUNT + 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SessionError {
    #[error("session `{0}` not found")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("session incomplete")]
    Incomplete,
    #[error("{0}")]
    Internal(String),
}

impl SessionError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        SessionError::Validation { field: field.into(), message: message.into() }
    }

    /// Maps a core validation error, prefixing its field with `prefix`.
    fn from_core(e: CoreError, prefix: &str) -> Self {
        match e {
            CoreError::Validation { field, message } => SessionError::validation(format!("{prefix}{field}"), message),
            CoreError::UnknownTask(id) => SessionError::validation("task_id", format!("unregistered task id {id}")),
            other => SessionError::Internal(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, SessionError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pending {
    Mpl { task_id: u32 },
    Likert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Submission {
    Mpl { sheet: ChoiceSheet },
    Likert { answers: LikertAnswers },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    InProgress,
    Complete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    sheets: Vec<ChoiceSheet>,
    likert: Option<LikertRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskConsistency {
    pub task_id: u32,
    #[serde(flatten)]
    pub report: ConsistencyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scores {
    pub mpl_avg_safe: f64,
    pub risk_grq: u8,
    pub likert: LikertRecord,
    pub consistency: Vec<TaskConsistency>,
}

impl Session {
    pub fn new(id: impl Into<String>, created_at: u64) -> Self {
        Self { id: id.into(), created_at, sheets: Vec::new(), likert: None }
    }

    pub fn pending(&self) -> Option<Pending> {
        if let Some(task) = builtin_tasks().get(self.sheets.len()) {
            Some(Pending::Mpl { task_id: task.id() })
        } else if self.likert.is_none() {
            Some(Pending::Likert)
        } else {
            None
        }
    }

    pub fn status(&self) -> Status {
        if self.pending().is_none() {
            Status::Complete
        } else {
            Status::InProgress
        }
    }

    /// Steps already submitted, out of [`STEPS`].
    pub fn completed_steps(&self) -> usize {
        self.sheets.len() + usize::from(self.likert.is_some())
    }

    /// Checks `submission` against the next pending step and applies it.
    pub fn submit(&mut self, submission: &Submission) -> Result<()> {
        let pending = self
            .pending()
            .ok_or_else(|| SessionError::Conflict("session is complete and cannot change".into()))?;
        match (submission, pending) {
            (Submission::Mpl { sheet }, Pending::Mpl { task_id }) if sheet.task_id() == task_id => {
                self.sheets.push(sheet.clone());
                Ok(())
            }
            (Submission::Mpl { sheet }, _) => {
                let id = sheet.task_id();
                if !builtin_tasks().iter().any(|t| t.id() == id) {
                    Err(SessionError::validation("task_id", format!("unregistered task id {id}")))
                } else if self.sheets.iter().any(|s| s.task_id() == id) {
                    Err(SessionError::Conflict(format!("choices for task {id} were already submitted")))
                } else {
                    Err(SessionError::Conflict(format!("expected {}, got choices for task {id}", describe(pending))))
                }
            }
            (Submission::Likert { answers }, Pending::Likert) => {
                self.likert = Some(record_likert(answers).map_err(|e| SessionError::from_core(e, "likert."))?);
                Ok(())
            }
            (Submission::Likert { .. }, _) => {
                Err(SessionError::Conflict(format!("expected {}, got Likert answers", describe(pending))))
            }
        }
    }

    pub fn scores(&self) -> Result<Scores> {
        let likert = match (self.status(), self.likert) {
            (Status::Complete, Some(l)) => l,
            _ => return Err(SessionError::Incomplete),
        };
        let measures = RiskMeasures::score(&self.sheets, Some(&likert)).map_err(|e| SessionError::from_core(e, ""))?;
        let consistency = self
            .sheets
            .iter()
            .map(|s| {
                Ok(TaskConsistency {
                    task_id: s.task_id(),
                    report: consistency(s).map_err(|e| SessionError::from_core(e, ""))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scores {
            mpl_avg_safe: measures.mpl_avg_safe,
            risk_grq: likert.risk_grq,
            likert,
            consistency,
        })
    }
}

fn describe(p: Pending) -> String {
    match p {
        Pending::Mpl { task_id } => format!("choices for task {task_id}"),
        Pending::Likert => "Likert answers".to_string(),
    }
}

/// Export columns besides the id and the two targets.
fn export_columns() -> Vec<String> {
    let mut names: Vec<String> = ["occupation", "health", "personal_finances", "job_finances"]
        .iter()
        .map(|q| format!("likert_{q}"))
        .collect();
    for t in builtin_tasks() {
        let id = t.id();
        names.extend([
            format!("mpl{id}_switch_count"),
            format!("mpl{id}_multiple_switch"),
            format!("mpl{id}_dominated"),
        ]);
    }
    names
}

/// One row per session, keyed by session id, with `mpl_avg_safe` and
/// `risk_grq` as target columns. Multiple-switch flags are 0/1 and a "not
/// applicable" health answer is a missing cell.
pub fn export_table(sessions: &[Scores], ids: &[String]) -> std::result::Result<DataTable, CoreError> {
    let names = export_columns();
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(sessions.len()); names.len()];
    for s in sessions {
        let l = &s.likert;
        let mut row = vec![
            f64::from(l.occupation),
            l.health.map_or(f64::NAN, f64::from),
            f64::from(l.personal_finances),
            f64::from(l.job_finances),
        ];
        for c in &s.consistency {
            row.extend([
                f64::from(c.report.switch_count),
                f64::from(u8::from(c.report.multiple_switch)),
                c.report.dominated_choices.len() as f64,
            ]);
        }
        for (col, v) in values.iter_mut().zip(row) {
            col.push(v);
        }
    }
    let columns = names.into_iter().zip(values).map(|(n, v)| Column::numerical(n, v)).collect();
    DataTable::new(
        sessions.len(),
        columns,
        Some(sessions.iter().map(|s| s.mpl_avg_safe).collect()),
        Some(sessions.iter().map(|s| f64::from(s.risk_grq)).collect()),
    )?
    .with_ids(ids.to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum Event {
    Created { session: String, at: u64 },
    Submitted { session: String, submission: Submission },
}

/// All sessions, each behind its own lock, plus the optional event log.
pub struct SessionStore {
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    /// Session ids in creation order.
    order: RwLock<Vec<String>>,
    log: Option<Mutex<File>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self { sessions: RwLock::default(), order: RwLock::default(), log: None }
    }

    /// Opens (or creates) the log at `path` and replays it. A final line cut
    /// short by a crash is dropped from the file.
    pub fn open(path: &Path) -> Result<Self> {
        let io = |e: std::io::Error| SessionError::Internal(format!("{}: {e}", path.display()));
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path).map_err(io)?;
        let store = Self::in_memory();
        let mut reader = BufReader::new(&file);
        let mut good_len = 0u64;
        let mut line = String::new();
        let mut number = 0;
        loop {
            line.clear();
            let read = reader.read_line(&mut line).map_err(io)?;
            if read == 0 {
                break;
            }
            number += 1;
            if !line.ends_with('\n') {
                break;
            }
            let event: Event = serde_json::from_str(line.trim_end())
                .map_err(|e| SessionError::Internal(format!("{} line {number}: {e}", path.display())))?;
            store
                .apply(&event)
                .map_err(|e| SessionError::Internal(format!("{} line {number}: {e}", path.display())))?;
            good_len += read as u64;
        }
        drop(reader);
        if file.metadata().map_err(io)?.len() != good_len {
            file.set_len(good_len).map_err(io)?;
            file.seek(SeekFrom::End(0)).map_err(io)?;
        }
        Ok(Self { log: Some(Mutex::new(file)), ..store })
    }

    fn apply(&self, event: &Event) -> Result<()> {
        match event {
            Event::Created { session, at } => {
                let mut map = self.sessions.write().expect("session map lock");
                if map.contains_key(session) {
                    return Err(SessionError::Conflict(format!("session `{session}` created twice")));
                }
                map.insert(session.clone(), Arc::new(Mutex::new(Session::new(session.clone(), *at))));
                self.order.write().expect("order lock").push(session.clone());
                Ok(())
            }
            Event::Submitted { session, submission } => self.get(session)?.lock().expect("session lock").submit(submission),
        }
    }

    fn append(&self, event: &Event) -> Result<()> {
        let Some(log) = &self.log else {
            return Ok(());
        };
        let mut line = serde_json::to_string(event).map_err(|e| SessionError::Internal(e.to_string()))?;
        line.push('\n');
        let mut f = log.lock().expect("log lock");
        f.write_all(line.as_bytes()).and_then(|_| f.flush()).map_err(|e| SessionError::Internal(format!("event log: {e}")))
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::NotFound(id.to_string()))
    }

    pub fn create(&self) -> Result<Session> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        self.create_with(id, at)
    }

    pub fn create_with(&self, id: String, at: u64) -> Result<Session> {
        let event = Event::Created { session: id.clone(), at };
        // Hold the map lock across the append so creation order in the log matches memory.
        let mut map = self.sessions.write().expect("session map lock");
        if map.contains_key(&id) {
            return Err(SessionError::Conflict(format!("session `{id}` already exists")));
        }
        self.append(&event)?;
        let session = Session::new(id.clone(), at);
        map.insert(id.clone(), Arc::new(Mutex::new(session.clone())));
        self.order.write().expect("order lock").push(id);
        Ok(session)
    }

    /// A snapshot of the session.
    pub fn session(&self, id: &str) -> Result<Session> {
        Ok(self.get(id)?.lock().expect("session lock").clone())
    }

    /// Validates and applies `submission`, logging it first; returns the updated session.
    pub fn submit(&self, id: &str, submission: Submission) -> Result<Session> {
        let handle = self.get(id)?;
        let mut session = handle.lock().expect("session lock");
        let mut next = session.clone();
        next.submit(&submission)?;
        self.append(&Event::Submitted { session: id.to_string(), submission })?;
        *session = next;
        Ok(session.clone())
    }

    pub fn scores(&self, id: &str) -> Result<Scores> {
        self.get(id)?.lock().expect("session lock").scores()
    }

    /// CSV of the given sessions, or of every complete session in creation
    /// order when `ids` is empty. Naming an incomplete session is an error.
    pub fn export(&self, ids: &[String]) -> Result<String> {
        let (ids, strict) = if ids.is_empty() {
            (self.order.read().expect("order lock").clone(), false)
        } else {
            (ids.to_vec(), true)
        };
        let mut rows = Vec::new();
        let mut kept = Vec::new();
        for id in ids {
            match self.scores(&id) {
                Ok(s) => {
                    rows.push(s);
                    kept.push(id);
                }
                Err(SessionError::Incomplete) if !strict => {}
                Err(SessionError::Incomplete) => {
                    return Err(SessionError::Conflict(format!("session `{id}` is incomplete")));
                }
                Err(e) => return Err(e),
            }
        }
        let table = export_table(&rows, &kept).map_err(|e| SessionError::Internal(e.to_string()))?;
        to_csv_string(&table).map_err(|e| SessionError::Internal(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use riskpref_core::elicitation::{Choice, LikertResponse};
    use riskpref_core::synthdata::{from_csv_str, TargetKind};

    fn mpl(task_id: u32, c: Choice) -> Submission {
        Submission::Mpl { sheet: ChoiceSheet::uniform(task_id, c) }
    }

    fn likert(general: i64) -> Submission {
        let mut answers = LikertAnswers::uniform(4);
        answers.general = LikertResponse::Value(general);
        Submission::Likert { answers }
    }

    fn complete(s: &mut Session, c: Choice, general: i64) {
        for t in 1..=5 {
            s.submit(&mpl(t, c)).unwrap();
        }
        s.submit(&likert(general)).unwrap();
    }

    #[test]
    fn fixed_order() {
        let mut s = Session::new("s", 0);
        assert_eq!(s.pending(), Some(Pending::Mpl { task_id: 1 }));
        s.submit(&mpl(1, Choice::A)).unwrap();
        assert_eq!(s.pending(), Some(Pending::Mpl { task_id: 2 }));
        assert_eq!(s.completed_steps(), 1);
    }

    #[test]
    fn all_safe_scores() {
        let mut s = Session::new("s", 0);
        complete(&mut s, Choice::A, 5);
        let scores = s.scores().unwrap();
        assert_eq!((scores.mpl_avg_safe, scores.risk_grq), (10.0, 5));
        assert_eq!(scores.consistency.len(), 5);
        assert_eq!(s.status(), Status::Complete);
    }

    #[test]
    fn incomplete_has_no_scores() {
        let mut s = Session::new("s", 0);
        assert_eq!(s.scores(), Err(SessionError::Incomplete));
        for t in 1..=5 {
            s.submit(&mpl(t, Choice::B)).unwrap();
        }
        assert_eq!(s.scores().unwrap_err().to_string(), "session incomplete");
    }

    #[test]
    fn out_of_order_and_duplicates_conflict() {
        let mut s = Session::new("s", 0);
        assert!(matches!(s.submit(&mpl(2, Choice::A)), Err(SessionError::Conflict(_))));
        assert!(matches!(s.submit(&likert(3)), Err(SessionError::Conflict(_))));
        s.submit(&mpl(1, Choice::A)).unwrap();
        assert!(matches!(s.submit(&mpl(1, Choice::A)), Err(SessionError::Conflict(_))));
        assert!(matches!(s.submit(&mpl(9, Choice::A)), Err(SessionError::Validation { .. })));
        assert_eq!(s.completed_steps(), 1);
    }

    #[test]
    fn complete_is_final() {
        let mut s = Session::new("s", 0);
        complete(&mut s, Choice::A, 5);
        let before = s.clone();
        assert!(matches!(s.submit(&likert(1)), Err(SessionError::Conflict(_))));
        assert!(matches!(s.submit(&mpl(1, Choice::B)), Err(SessionError::Conflict(_))));
        assert_eq!(s, before);
    }

    #[test]
    fn bad_likert_names_field() {
        let mut s = Session::new("s", 0);
        for t in 1..=5 {
            s.submit(&mpl(t, Choice::A)).unwrap();
        }
        let mut answers = LikertAnswers::uniform(4);
        answers.occupation = LikertResponse::NA;
        match s.submit(&Submission::Likert { answers }) {
            Err(SessionError::Validation { field, .. }) => assert_eq!(field, "likert.occupation"),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.pending(), Some(Pending::Likert));
    }

    #[test]
    fn replay_reproduces_sessions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let first = SessionStore::open(&path).unwrap();
        let a = first.create_with("a".into(), 1).unwrap().id;
        let b = first.create_with("b".into(), 2).unwrap().id;
        for t in 1..=5 {
            first.submit(&a, mpl(t, if t % 2 == 0 { Choice::A } else { Choice::B })).unwrap();
        }
        first.submit(&a, likert(7)).unwrap();
        first.submit(&b, mpl(1, Choice::A)).unwrap();
        assert!(first.submit(&b, mpl(3, Choice::A)).is_err());
        let scores = first.scores(&a).unwrap();
        let export = first.export(&[]).unwrap();
        drop(first);

        let second = SessionStore::open(&path).unwrap();
        assert_eq!(second.scores(&a).unwrap(), scores);
        assert_eq!(second.session(&b).unwrap().completed_steps(), 1);
        assert_eq!(second.export(&[]).unwrap(), export);
        second.submit(&b, mpl(2, Choice::A)).unwrap();
        drop(second);
        assert_eq!(SessionStore::open(&path).unwrap().session(&b).unwrap().completed_steps(), 2);
    }

    #[test]
    fn torn_final_line_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        let store = SessionStore::open(&path).unwrap();
        store.create_with("a".into(), 1).unwrap();
        drop(store);
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(br#"{"event":"submitted","sess"#).unwrap();
        drop(f);
        let store = SessionStore::open(&path).unwrap();
        store.submit("a", mpl(1, Choice::A)).unwrap();
        drop(store);
        assert_eq!(SessionStore::open(&path).unwrap().session("a").unwrap().completed_steps(), 1);
    }

    #[test]
    fn corrupt_log_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.jsonl");
        std::fs::write(&path, "{\"event\":\"submitted\",\"session\":\"x\",\"submission\":{\"kind\":\"likert\"}}\n").unwrap();
        assert!(SessionStore::open(&path).is_err());
    }

    #[test]
    fn export_round_trips_through_table_reader() {
        let store = SessionStore::in_memory();
        for (id, c, g) in [("p1", Choice::A, 5), ("p2", Choice::B, 0)] {
            store.create_with(id.into(), 0).unwrap();
            for t in 1..=5 {
                store.submit(id, mpl(t, c)).unwrap();
            }
            let mut answers = LikertAnswers::uniform(2);
            answers.general = LikertResponse::Value(g);
            answers.health = LikertResponse::NA;
            store.submit(id, Submission::Likert { answers }).unwrap();
        }
        store.create_with("p3".into(), 0).unwrap();
        let csv = store.export(&[]).unwrap();
        let table = from_csv_str(&csv, None).unwrap();
        assert_eq!(table.ids().unwrap(), ["p1", "p2"]);
        assert_eq!(table.target(TargetKind::MplAvgSafe).unwrap(), [10.0, 0.0]);
        assert_eq!(table.target(TargetKind::RiskGrq).unwrap(), [5.0, 0.0]);
        assert_eq!(table.column("likert_health").unwrap().missing_count(), 2);
        assert_eq!(to_csv_string(&table).unwrap(), csv);
        assert!(matches!(store.export(&["p3".into()]), Err(SessionError::Conflict(_))));
        assert!(matches!(store.export(&["nope".into()]), Err(SessionError::NotFound(_))));
    }
}
