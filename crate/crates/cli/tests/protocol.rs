use std::fs;
use std::io::{BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde_json::{json, Value};
use vinculum_cli::commands::{self, CheckArgs};
use vinculum_cli::frame::{encode_frame, read_frame};
use vinculum_cli::{serve, Server};
use vinculum_core::DEFAULT_FUEL;

fn corpus_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/tour.hbt")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn requests() -> Vec<Value> {
    let corpus = corpus_path().canonicalize().unwrap();
    fs::read_to_string(fixture("and_comm.requests.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(&l.replace("$CORPUS", &corpus.display().to_string())).unwrap())
        .collect()
}

/// Runs requests through the framing layer and returns the response bytes.
fn run_transcript(requests: &[Value]) -> Vec<u8> {
    let input: Vec<u8> = requests.iter().flat_map(encode_frame).collect();
    let mut out = Vec::new();
    serve(&mut &input[..], &mut out, &mut Server::default()).unwrap();
    out
}

fn responses(bytes: &[u8]) -> Vec<Value> {
    let mut r = bytes;
    let mut out = Vec::new();
    while let Some(v) = read_frame(&mut r).unwrap() {
        out.push(v);
    }
    out
}

#[test]
fn transcript_replay_is_byte_identical() {
    let reqs = requests();
    let first = run_transcript(&reqs);
    let second = run_transcript(&reqs);
    assert_eq!(first, second);

    let golden = fixture("and_comm.responses.jsonl");
    let lines: String = responses(&first).iter().map(|v| format!("{}\n", serde_json::to_string(v).unwrap())).collect();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&golden, &lines).unwrap();
    }
    assert_eq!(lines, fs::read_to_string(golden).unwrap());
}

#[test]
fn transcript_walkthrough() {
    let out = responses(&run_transcript(&requests()));
    let by_id = |id: Value| out.iter().find(|r| r["id"] == id).unwrap().clone();

    assert_eq!(by_id(json!(2))["result"]["session"], "s1");
    assert_eq!(by_id(json!(6))["result"]["new_goals"], json!([[0, 0], [0, 1]]));

    let summary = by_id(json!(9))["result"].clone();
    assert_eq!(summary["target"], "A");
    assert_eq!(summary["assumptions"][0]["text"], "A /\\ B");
    assert!(!summary["candidates"].as_array().unwrap().contains(&json!("/\\E1")));
    let all = by_id(json!(10))["result"]["candidates"].clone();
    assert!(all.as_array().unwrap().contains(&json!("/\\E1")));

    let wrong = by_id(json!(11));
    assert_eq!(wrong["ok"], false);
    assert_eq!(wrong["error"]["code"], "no-unifier");

    assert_eq!(by_id(json!(13))["result"]["complete"], true);
    assert_eq!(by_id(json!(14))["error"]["code"], "goal-solved");
    assert_eq!(by_id(json!(17))["result"]["summary"], "4 theorems, 4 complete");
    assert_eq!(by_id(json!(18))["result"]["text"], "∀ (a. P a)");
    assert_eq!(by_id(json!(20))["error"]["code"], "unknown-op");
    assert_eq!(by_id(json!("last"))["result"]["text"], fs::read_to_string(corpus_path()).unwrap());
}

#[test]
fn every_request_gets_one_response_with_its_id() {
    let reqs = requests();
    let out = responses(&run_transcript(&reqs));
    assert_eq!(out.len(), reqs.len());
    for (q, r) in reqs.iter().zip(&out) {
        assert_eq!(q["id"], r["id"]);
    }
}

#[test]
fn malformed_frame_closes_the_session() {
    let mut input = encode_frame(&json!({"id": 1, "op": "version"}));
    input.extend_from_slice(b"5\n{oops");
    input.extend(encode_frame(&json!({"id": 2, "op": "version"})));
    let mut out = Vec::new();
    serve(&mut &input[..], &mut out, &mut Server::default()).unwrap();
    let rs = responses(&out);
    assert_eq!(rs.len(), 2);
    assert_eq!(rs[0]["ok"], true);
    assert_eq!(rs[1]["error"]["code"], "malformed-frame");
}

#[test]
fn argument_errors_are_structured() {
    let mut server = Server::default();
    let r = server.handle(&json!({"id": 1, "op": "goals", "session": "s9", "theorem": "x"}));
    assert_eq!(r["error"]["code"], "unknown-session");
    let r = server.handle(&json!({"id": 2, "op": "load"}));
    assert_eq!(r["error"]["code"], "bad-request");
    let r = server.handle(&json!([1, 2]));
    assert_eq!(r["error"]["code"], "bad-request");
    assert_eq!(r["id"], Value::Null);
    let r = server.handle(&json!({"id": 3, "op": "load", "text": "{"}));
    assert_eq!(r["error"]["code"], "document");
}

#[test]
fn interactive_proof_saves_a_checkable_document() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("saved.hbt");
    let mut server = Server::default();
    let corpus = corpus_path();
    let mut call = |v: Value| {
        let r = server.handle(&v);
        assert_eq!(r["ok"], true, "{r}");
        r["result"].clone()
    };
    call(json!({"op": "load", "path": corpus.display().to_string()}));
    let t = |extra: Value| {
        let mut v = json!({"session": "s1", "theorem": "+0"});
        v.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
        v
    };
    call(t(json!({"op": "clear_subtree", "goal": []})));
    call(t(json!({"op": "apply_elim", "goal": [], "assumption": 0, "rule": "induction(_ℕ)"})));
    call(t(json!({"op": "apply_intro", "goal": [0], "rule": "+B"})));
    call(t(json!({"op": "rewrite", "goal": [1], "rule": "+I", "direction": "->"})));
    call(t(json!({"op": "rewrite", "goal": [1, 0], "assumption": 1, "direction": "->"})));
    let last = call(t(json!({"op": "apply_refl", "goal": [1, 0, 0]})));
    assert_eq!(last["complete"], true);
    call(json!({"op": "save", "session": "s1", "path": saved.display().to_string()}));

    let args = CheckArgs { paths: vec![saved.clone()], json: false, fuel: DEFAULT_FUEL, strict_unused_unifvars: false };
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(commands::check(&args, &mut out, &mut err), 0);
    assert!(String::from_utf8(out).unwrap().contains("4 theorems, 4 complete"));
    assert_eq!(fs::read_to_string(saved).unwrap(), fs::read_to_string(corpus).unwrap());
}

#[test]
fn stdio_server_binary() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_vinculum"))
        .args(["serve", "--stdio"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    stdin.write_all(&encode_frame(&json!({"id": 7, "op": "version"}))).unwrap();
    stdin.write_all(&encode_frame(&json!({"id": 8, "op": "nope"}))).unwrap();
    drop(stdin);
    let mut bytes = Vec::new();
    child.stdout.take().unwrap().read_to_end(&mut bytes).unwrap();
    assert!(child.wait().unwrap().success());
    let rs = responses(&bytes);
    assert_eq!(rs[0], json!({"id": 7, "ok": true, "result": {"protocol": 1, "format": 1}}));
    assert_eq!(rs[1]["error"]["code"], "unknown-op");
}

#[test]
fn socket_server_binary() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_vinculum")).args(["serve", "--listen", "0"]).stderr(Stdio::piped()).spawn().unwrap();
    let mut stderr = BufReader::new(child.stderr.take().unwrap());
    let mut line = String::new();
    std::io::BufRead::read_line(&mut stderr, &mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap().to_string();

    let run = |reqs: &[Value]| {
        let mut stream = TcpStream::connect(&addr).unwrap();
        for q in reqs {
            stream.write_all(&encode_frame(q)).unwrap();
        }
        stream.shutdown(std::net::Shutdown::Write).unwrap();
        let mut bytes = Vec::new();
        stream.read_to_end(&mut bytes).unwrap();
        bytes
    };
    // Two connections each get their own sessions and the same answers.
    let reqs = requests();
    let a = run(&reqs);
    let b = run(&reqs);
    child.kill().unwrap();
    let _ = child.wait();
    assert_eq!(a, b);
    assert_eq!(a, run_transcript(&reqs));
}
