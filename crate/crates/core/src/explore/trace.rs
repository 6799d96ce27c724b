use serde::{Deserialize, Serialize};

/// One line of the exploration trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u64,
    pub activity: Option<String>,
    /// Scene the action was issued from, when known.
    pub scene_id: Option<String>,
    /// `launch`, `tap`, `set_text`, `toggle`, `back` or `expand`.
    pub action: String,
    pub selector: Option<String>,
    pub outcome: String,
}

/// Line-delimited JSON, one record per line.
pub fn to_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        out.push('\n');
    }
    out
}

pub fn from_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
