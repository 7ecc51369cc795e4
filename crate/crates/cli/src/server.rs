//! Session protocol: JSON requests in, JSON responses out, one server-held
//! proof state per theorem of each loaded document.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use serde_json::{json, Map, Value};
use vinculum_core::{
    check_document, parse_document, parse_term, print_term, serialize_document, CheckConfig, Direction, Document, Equation, GoalPath,
    Notation, ProofState, ProofTree, DEFAULT_FUEL, FORMAT_VERSION,
};

use crate::frame::{read_frame, write_frame, FrameError};
use crate::report;

pub const PROTOCOL_VERSION: u32 = 1;

/// A failed request, rendered as `{"code", "message", "details"}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolError {
    pub code: String,
    pub message: String,
    pub details: Value,
}

impl ProtocolError {
    fn new(code: &str, message: impl Into<String>) -> Self {
        ProtocolError { code: code.to_string(), message: message.into(), details: json!({}) }
    }

    fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new("bad-request", message)
    }
}

type Reply = Result<Value, ProtocolError>;

struct Session {
    doc: Document,
    path: Option<PathBuf>,
    proofs: BTreeMap<usize, ProofState>,
}

impl Session {
    fn theorem(&self, args: &Map<String, Value>) -> Result<usize, ProtocolError> {
        let name = str_arg(args, "theorem")?;
        self.doc.theorem_index(name).ok_or_else(|| ProtocolError::new("unknown-theorem", format!("no theorem named `{name}`")))
    }

    /// The document with every theorem's script replaced by its session state.
    fn current(&self) -> Document {
        let mut doc = self.doc.clone();
        for (index, state) in &self.proofs {
            doc.set_script(*index, state.script().to_vec());
        }
        doc
    }
}

/// Holds the sessions of one connection. Requests are handled strictly in
/// arrival order.
pub struct Server {
    sessions: BTreeMap<String, Session>,
    next_session: u64,
    fuel: usize,
}

impl Default for Server {
    fn default() -> Self {
        Server::new(DEFAULT_FUEL)
    }
}

fn str_arg<'a>(args: &'a Map<String, Value>, key: &str) -> Result<&'a str, ProtocolError> {
    args.get(key).and_then(Value::as_str).ok_or_else(|| ProtocolError::bad_request(format!("missing string argument `{key}`")))
}

fn usize_arg(args: &Map<String, Value>, key: &str) -> Result<usize, ProtocolError> {
    args.get(key)
        .and_then(Value::as_u64)
        .map(|n| n as usize)
        .ok_or_else(|| ProtocolError::bad_request(format!("missing integer argument `{key}`")))
}

fn path_arg(args: &Map<String, Value>, key: &str) -> Result<GoalPath, ProtocolError> {
    let v = args.get(key).cloned().unwrap_or(json!([]));
    serde_json::from_value(v).map_err(|_| ProtocolError::bad_request(format!("`{key}` must be an array of child indices")))
}

fn bool_arg(args: &Map<String, Value>, key: &str) -> bool {
    args.get(key).and_then(Value::as_bool).unwrap_or(false)
}

fn goal_view(state: &ProofState, path: &[usize]) -> Reply {
    let goal = state.goal(path).map_err(apply_error)?;
    let assumptions: Vec<Value> =
        goal.assumptions.iter().enumerate().map(|(i, a)| json!({"index": i, "text": state.print_rule_at(&goal, a)})).collect();
    Ok(json!({
        "path": path,
        "locals": goal.locals.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
        "assumptions": assumptions,
        "target": state.print_term_at(&goal, &goal.target),
    }))
}

fn tree_view(state: &ProofState, node: &ProofTree, path: &mut Vec<usize>) -> Value {
    let goal = state.goal(path).expect("tree paths are valid");
    let children: Vec<Value> = node
        .children
        .iter()
        .enumerate()
        .map(|(i, c)| {
            path.push(i);
            let v = tree_view(state, c, path);
            path.pop();
            v
        })
        .collect();
    json!({
        "path": path.clone(),
        "target": state.print_term_at(&goal, &goal.target),
        "by": node.step.as_ref().map(|s| s.label()),
        "children": children,
    })
}

fn apply_error(e: vinculum_core::ApplyError) -> ProtocolError {
    ProtocolError::new(e.code(), e.to_string())
}

fn progress(state: &ProofState, goal: &[usize]) -> Value {
    let new_goals: Vec<GoalPath> = state.unsolved().into_iter().filter(|p| p.starts_with(goal)).collect();
    json!({"new_goals": new_goals, "complete": state.is_complete()})
}

impl Server {
    pub fn new(fuel: usize) -> Self {
        Server { sessions: BTreeMap::new(), next_session: 1, fuel }
    }

    /// Answers one request. Never fails: errors become error responses.
    pub fn handle(&mut self, request: &Value) -> Value {
        let id = request.get("id").cloned().unwrap_or(Value::Null);
        let reply = match request {
            Value::Object(map) => match map.get("op").and_then(Value::as_str) {
                Some(op) => self.dispatch(op, map),
                None => Err(ProtocolError::bad_request("request has no `op`")),
            },
            _ => Err(ProtocolError::bad_request("request is not an object")),
        };
        match reply {
            Ok(result) => json!({"id": id, "ok": true, "result": result}),
            Err(e) => json!({"id": id, "ok": false, "error": {"code": e.code, "message": e.message, "details": e.details}}),
        }
    }

    fn dispatch(&mut self, op: &str, args: &Map<String, Value>) -> Reply {
        match op {
            "version" => Ok(json!({"protocol": PROTOCOL_VERSION, "format": FORMAT_VERSION})),
            "load" => self.load(args),
            "save" => self.save(args),
            "close" => {
                let id = str_arg(args, "session")?;
                self.sessions.remove(id).ok_or_else(|| unknown_session(id))?;
                Ok(json!({}))
            }
            "check" => {
                let session = self.session(args)?;
                let rep = check_document(&session.current(), &CheckConfig { fuel: self.fuel, ..CheckConfig::default() });
                Ok(report::document(&rep))
            }
            "parse_term" => {
                let session = self.session(args)?;
                let text = str_arg(args, "text")?;
                let binders: Vec<String> = match args.get("binders") {
                    Some(v) => {
                        serde_json::from_value(v.clone()).map_err(|_| ProtocolError::bad_request("`binders` must be an array of names"))?
                    }
                    None => Vec::new(),
                };
                let env = session.doc.env().with_binders(binders.iter().map(String::as_str));
                let term = parse_term(text, &env)
                    .map_err(|e| ProtocolError::new("parse-error", e.to_string()).with_details(json!({"offset": e.offset})))?;
                Ok(json!({"text": print_term(&term, &env, Notation::Infix)}))
            }
            "goals" => {
                let (_, state) = self.proof(args)?;
                let goals = state.unsolved().iter().map(|p| goal_view(state, p)).collect::<Result<Vec<_>, _>>()?;
                Ok(json!({"goals": goals, "complete": state.is_complete()}))
            }
            "goal_summary" => {
                let (_, state) = self.proof(args)?;
                let path = path_arg(args, "goal")?;
                let summary = state.goal_summary(&path, bool_arg(args, "show_all"), bool_arg(args, "check")).map_err(apply_error)?;
                let mut view = goal_view(state, &path)?;
                view["candidates"] = json!(summary.candidates);
                Ok(view)
            }
            "tree" => {
                let (_, state) = self.proof(args)?;
                Ok(json!({
                    "tree": tree_view(state, state.tree(), &mut Vec::new()),
                    "complete": state.is_complete(),
                    "script": state.script(),
                }))
            }
            "apply_intro" => self.mutate(args, |s, p, a| s.apply_intro(p, str_arg(a, "rule")?).map_err(apply_error)),
            "apply_elim" => {
                self.mutate(args, |s, p, a| s.apply_elim(p, usize_arg(a, "assumption")?, str_arg(a, "rule")?).map_err(apply_error))
            }
            "apply_assumption" => self.mutate(args, |s, p, a| s.apply_assumption(p, usize_arg(a, "assumption")?).map_err(apply_error)),
            "apply_refl" => self.mutate(args, |s, p, _| s.apply_refl(p).map_err(apply_error)),
            "clear_subtree" => self.mutate(args, |s, p, _| s.clear_subtree(p).map_err(apply_error)),
            "rewrite" => self.mutate(args, |s, p, a| {
                let equation = match (a.get("rule").and_then(Value::as_str), a.get("assumption").and_then(Value::as_u64)) {
                    (Some(r), None) => Equation::Rule(r.to_string()),
                    (None, Some(i)) => Equation::Assumption(i as usize),
                    _ => return Err(ProtocolError::bad_request("rewrite needs exactly one of `rule` or `assumption`")),
                };
                let direction = match a.get("direction").and_then(Value::as_str).unwrap_or("->") {
                    "->" => Direction::Forward,
                    "<-" => Direction::Backward,
                    other => return Err(ProtocolError::bad_request(format!("unknown direction `{other}`"))),
                };
                let occurrence = a.get("occurrence").and_then(Value::as_u64).unwrap_or(0) as usize;
                s.rewrite(p, &equation, direction, occurrence).map_err(apply_error)
            }),
            other => Err(ProtocolError::new("unknown-op", format!("unknown operation `{other}`"))),
        }
    }

    fn session(&self, args: &Map<String, Value>) -> Result<&Session, ProtocolError> {
        let id = str_arg(args, "session")?;
        self.sessions.get(id).ok_or_else(|| unknown_session(id))
    }

    fn proof(&self, args: &Map<String, Value>) -> Result<(usize, &ProofState), ProtocolError> {
        let session = self.session(args)?;
        let index = session.theorem(args)?;
        Ok((index, &session.proofs[&index]))
    }

    fn mutate(
        &mut self,
        args: &Map<String, Value>,
        step: impl FnOnce(&ProofState, &[usize], &Map<String, Value>) -> Result<ProofState, ProtocolError>,
    ) -> Reply {
        let (index, state) = self.proof(args)?;
        let path = path_arg(args, "goal")?;
        let next = step(state, &path, args)?;
        let reply = progress(&next, &path);
        let id = str_arg(args, "session")?.to_string();
        self.sessions.get_mut(&id).expect("session exists").proofs.insert(index, next);
        Ok(reply)
    }

    fn load(&mut self, args: &Map<String, Value>) -> Reply {
        let (src, path) = match (args.get("path").and_then(Value::as_str), args.get("text").and_then(Value::as_str)) {
            (Some(p), None) => {
                let src = fs::read_to_string(p).map_err(|e| ProtocolError::new("io", format!("{p}: {e}")))?;
                (src, Some(PathBuf::from(p)))
            }
            (None, Some(t)) => (t.to_string(), None),
            _ => return Err(ProtocolError::bad_request("load needs exactly one of `path` or `text`")),
        };
        let doc =
            parse_document(&src).map_err(|e| ProtocolError::new("document", e.to_string()).with_details(report::document_error(&e)))?;
        let mut proofs = BTreeMap::new();
        let mut theorems = Vec::new();
        for (index, theorem) in doc.theorems() {
            let start = doc.start_proof(index, self.fuel).expect("theorem item");
            let (state, errors) = start.replay(&theorem.script);
            theorems.push(json!({
                "name": theorem.statement.name,
                "item": index,
                "complete": state.is_complete(),
                "errors": errors.iter().map(report::node_error).collect::<Vec<_>>(),
            }));
            proofs.insert(index, state);
        }
        let id = format!("s{}", self.next_session);
        self.next_session += 1;
        let title = doc.title.clone();
        self.sessions.insert(id.clone(), Session { doc, path, proofs });
        Ok(json!({"session": id, "title": title, "theorems": theorems}))
    }

    fn save(&mut self, args: &Map<String, Value>) -> Reply {
        let session = self.session(args)?;
        let text = serialize_document(&session.current());
        let target = args.get("path").and_then(Value::as_str).map(PathBuf::from).or_else(|| session.path.clone());
        match target {
            Some(p) if !bool_arg(args, "text_only") => {
                fs::write(&p, &text).map_err(|e| ProtocolError::new("io", format!("{}: {e}", p.display())))?;
                Ok(json!({"path": p.display().to_string(), "bytes": text.len()}))
            }
            _ => Ok(json!({"text": text})),
        }
    }
}

fn unknown_session(id: &str) -> ProtocolError {
    ProtocolError::new("unknown-session", format!("no session `{id}`"))
}

/// Serves one connection until end of stream. A malformed frame gets a final
/// error response and closes the connection.
pub fn serve<R: BufRead, W: Write>(reader: &mut R, writer: &mut W, server: &mut Server) -> std::io::Result<()> {
    loop {
        match read_frame(reader) {
            Ok(None) => return Ok(()),
            Ok(Some(request)) => write_frame(writer, &server.handle(&request))?,
            Err(FrameError::Io(e)) => return Err(e),
            Err(e) => {
                let response = json!({
                    "id": Value::Null,
                    "ok": false,
                    "error": {"code": "malformed-frame", "message": e.to_string(), "details": {}},
                });
                return write_frame(writer, &response);
            }
        }
    }
}
