//! Verification report: serializable record of every check with its
//! status and payload, plus a text rendering of the same data.

use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    /// Fail dominates, then inconclusive.
    pub fn combine<I: IntoIterator<Item = Status>>(it: I) -> Status {
        let mut out = Status::Pass;
        for s in it {
            match s {
                Status::Fail => return Status::Fail,
                Status::Inconclusive => out = Status::Inconclusive,
                Status::Pass => {}
            }
        }
        out
    }

    pub fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    /// The statement being verified.
    pub anchor: String,
    pub status: Status,
    pub payload: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceInfo {
    pub family: String,
    pub q: u64,
    pub i: u32,
    pub moduli: Vec<String>,
    pub genus: u64,
    pub infinite_places: u64,
    pub bound: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub check: String,
    pub millis: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub instance: InstanceInfo,
    pub seed: u64,
    pub truncation: usize,
    pub sample: usize,
    pub status: Status,
    pub checks: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let inst = &self.instance;
        let _ = writeln!(s, "instance {} q={} i={}", inst.family, inst.q, inst.i);
        for m in &inst.moduli {
            let _ = writeln!(s, "  field {m}");
        }
        let _ = writeln!(
            s,
            "  genus {}  infinite places {}  bound {}",
            inst.genus, inst.infinite_places, inst.bound
        );
        let _ = writeln!(s, "seed {}  truncation {}  sample {}", self.seed, self.truncation, self.sample);
        for c in &self.checks {
            let _ = writeln!(s, "[{}] {}: {}", c.status.as_str(), c.name, c.anchor);
            render_value(&mut s, &c.payload, 2);
            for n in &c.notes {
                let _ = writeln!(s, "  note: {n}");
            }
        }
        if let Some(t) = &self.timings {
            for x in t {
                let _ = writeln!(s, "time {} {:.1} ms", x.check, x.millis);
            }
        }
        let _ = writeln!(s, "overall {}", self.status.as_str());
        s
    }
}

fn render_value(s: &mut String, v: &Value, indent: usize) {
    let pad = " ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match x {
                    Value::Object(_) => {
                        let _ = writeln!(s, "{pad}{k}:");
                        render_value(s, x, indent + 2);
                    }
                    Value::Array(items) if items.iter().any(|i| i.is_object()) => {
                        let _ = writeln!(s, "{pad}{k}: {} entries", items.len());
                        for it in items {
                            let _ = writeln!(s, "{pad}  - {}", compact(it));
                        }
                    }
                    _ => {
                        let _ = writeln!(s, "{pad}{k}: {}", compact(x));
                    }
                }
            }
        }
        Value::Null => {}
        other => {
            let _ = writeln!(s, "{pad}{}", compact(other));
        }
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(x) => x.clone(),
        other => other.to_string(),
    }
}

/// Reports of several components of one family.
#[derive(Clone, Debug, Serialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub status: Status,
    pub reports: Vec<VerificationReport>,
}

impl BatchReport {
    pub fn new(reports: Vec<VerificationReport>) -> BatchReport {
        let status = Status::combine(reports.iter().map(|r| r.status));
        BatchReport { schema_version: SCHEMA_VERSION, status, reports }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s: String = self.reports.iter().map(|r| r.to_text() + "\n").collect();
        let _ = writeln!(s, "batch {}", self.status.as_str());
        s
    }
}
