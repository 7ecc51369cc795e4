//! Machine-readable rendering of check reports.

use serde_json::{json, Value};
use vinculum_core::{DocumentError, DocumentReport, NodeError, TheoremReport};

pub fn node_error(e: &NodeError) -> Value {
    json!({"step": e.step, "path": e.path, "code": e.code, "message": e.message})
}

pub fn theorem(t: &TheoremReport) -> Value {
    json!({
        "item": t.item,
        "name": t.name,
        "status": t.status,
        "errors": t.errors.iter().map(node_error).collect::<Vec<_>>(),
        "unsolved": t.unsolved,
        "unresolved": t.unresolved.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
    })
}

pub fn document(report: &DocumentReport) -> Value {
    json!({
        "summary": report.summary(),
        "complete": report.all_complete(),
        "theorems": report.theorems.iter().map(theorem).collect::<Vec<_>>(),
    })
}

pub fn document_error(e: &DocumentError) -> Value {
    json!({"code": e.code(), "message": e.to_string()})
}

/// Syntax and version errors mean the file could not be read as a document
/// at all; everything else is a document that parses but is invalid.
pub fn is_unreadable(e: &DocumentError) -> bool {
    matches!(e, DocumentError::Syntax { .. } | DocumentError::Version(_))
}
