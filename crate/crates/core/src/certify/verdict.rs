use serde_json::{json, Map, Value};

use crate::exactmath::rational::vec_json;
use crate::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "HOLDS",
            Status::Fails => "FAILS",
            Status::Unknown => "UNKNOWN",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Three-valued certification outcome with its audit trail.
#[derive(Clone, Debug, PartialEq)]
pub struct CqVerdict {
    pub status: Status,
    /// Which test decided (`linear`, `nnamcq`, `foscms`, …).
    pub method: String,
    /// What a FAILS refutes: the named CQ itself, or only a sufficient condition.
    pub scope: Option<String>,
    /// Named exact vectors (FAILS).
    pub witness: Vec<(String, Vec<Rational>)>,
    /// Structured proof data (HOLDS), exact values as strings.
    pub certificate: Option<Value>,
    /// Explanation (UNKNOWN, or notes).
    pub reason: Option<String>,
    pub prerequisites: Vec<(String, CqVerdict)>,
    pub subresults: Vec<CqVerdict>,
}

impl CqVerdict {
    fn new(status: Status, method: &str) -> Self {
        CqVerdict {
            status,
            method: method.into(),
            scope: None,
            witness: Vec::new(),
            certificate: None,
            reason: None,
            prerequisites: Vec::new(),
            subresults: Vec::new(),
        }
    }

    pub fn holds(method: &str, certificate: Value) -> Self {
        let mut v = Self::new(Status::Holds, method);
        v.certificate = Some(certificate);
        v
    }

    pub fn fails(method: &str, scope: &str, witness: Vec<(&str, Vec<Rational>)>) -> Self {
        let mut v = Self::new(Status::Fails, method);
        v.scope = Some(scope.into());
        v.witness = witness.into_iter().map(|(k, x)| (k.to_string(), x)).collect();
        v
    }

    pub fn unknown(method: &str, reason: impl Into<String>) -> Self {
        let mut v = Self::new(Status::Unknown, method);
        v.reason = Some(reason.into());
        v
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn witness(&self, name: &str) -> Option<&[Rational]> {
        self.witness.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_slice())
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("status".into(), json!(self.status.as_str()));
        m.insert("method".into(), json!(self.method));
        if let Some(s) = &self.scope {
            m.insert("scope".into(), json!(s));
        }
        if !self.witness.is_empty() {
            let w: Map<String, Value> = self.witness.iter().map(|(k, v)| (k.clone(), vec_json(v))).collect();
            m.insert("witness".into(), Value::Object(w));
        }
        if let Some(c) = &self.certificate {
            m.insert("certificate".into(), c.clone());
        }
        if let Some(r) = &self.reason {
            m.insert("reason".into(), json!(r));
        }
        if !self.prerequisites.is_empty() {
            let p: Vec<Value> = self
                .prerequisites
                .iter()
                .map(|(name, v)| {
                    let mut j = v.to_json();
                    j["name"] = json!(name);
                    j
                })
                .collect();
            m.insert("prerequisites".into(), Value::Array(p));
        }
        if !self.subresults.is_empty() {
            m.insert("subresults".into(), Value::Array(self.subresults.iter().map(CqVerdict::to_json).collect()));
        }
        Value::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactmath::rational::ints;

    #[test]
    fn json_layout() {
        let v = CqVerdict::fails("nnamcq", "NNAMCQ", vec![("lambda", ints(&[1, 1]))]);
        let j = v.to_json();
        assert_eq!(j["status"], "FAILS");
        assert_eq!(j["witness"]["lambda"], json!(["1", "1"]));
        assert_eq!(v.witness("lambda"), Some(&ints(&[1, 1])[..]));
        assert!(j.get("certificate").is_none());
    }
}
