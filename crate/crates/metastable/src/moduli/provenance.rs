//! Construction trees attached to every bound.
//!
//! Each modulus records how it was built: the rule name, the scalar
//! parameters, and the child moduli. The tree serializes to JSON and, for
//! every rule except opaque `custom` closures, can be rebuilt into a live
//! modulus whose evaluation matches the original bit for bit.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::boundedness::BoundednessModulus;
use super::rate::LearnableRate;
use super::ModuliError;

/// One node of a construction tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Rule that built the bound (e.g. `"product_boundedness"`).
    pub rule: String,
    /// What kind of bound the node produces (e.g. `"modulus of uniform
    /// boundedness"`).
    pub kind: String,
    /// Optional role of the node inside a larger construction, such as the
    /// intermediates of the almost-supermartingale pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Free-form remarks (clamping semantics, caps, ...).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Scalar parameters of the rule, keyed by name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    /// Structured payloads that are not plain scalars (step schedules, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Provenance>,
}

impl Provenance {
    pub fn new(rule: &str, kind: &str) -> Self {
        Self {
            rule: rule.to_owned(),
            kind: kind.to_owned(),
            label: None,
            notes: Vec::new(),
            params: BTreeMap::new(),
            detail: None,
            children: Vec::new(),
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_owned(), value);
        self
    }

    pub fn with_child(mut self, child: Provenance) -> Self {
        self.children.push(child);
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_owned());
        self
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.notes.push(note.to_owned());
        self
    }

    pub fn with_detail(mut self, detail: serde_json::Value) -> Self {
        self.detail = Some(detail);
        self
    }

    /// Serializes the tree to the JSON document `{rule, kind, params,
    /// children, ...}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("provenance trees always serialize")
    }

    /// True if this node or any descendant carries the given rule name.
    pub fn contains_rule(&self, rule: &str) -> bool {
        self.rule == rule || self.children.iter().any(|c| c.contains_rule(rule))
    }

    /// True if this node or any descendant carries the given label.
    pub fn contains_label(&self, label: &str) -> bool {
        self.label.as_deref() == Some(label)
            || self.children.iter().any(|c| c.contains_label(label))
    }

    /// Finds the first node (pre-order) with the given label.
    pub fn find_label(&self, label: &str) -> Option<&Provenance> {
        if self.label.as_deref() == Some(label) {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find_label(label))
    }

    fn render(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let indent = "  ".repeat(depth);
        write!(f, "{indent}{}", self.rule)?;
        if let Some(label) = &self.label {
            write!(f, " [{label}]")?;
        }
        if !self.params.is_empty() {
            let params: Vec<String> = self
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            write!(f, " ({})", params.join(", "))?;
        }
        writeln!(f, " -> {}", self.kind)?;
        for note in &self.notes {
            writeln!(f, "{indent}  note: {note}")?;
        }
        for child in &self.children {
            child.render(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.render(f, 0)
    }
}

pub(crate) fn param(p: &Provenance, name: &str) -> Result<f64, ModuliError> {
    p.params
        .get(name)
        .copied()
        .ok_or_else(|| ModuliError::Unrebuildable {
            rule: p.rule.clone(),
            reason: format!("missing parameter `{name}`"),
        })
}

pub(crate) fn child<'a>(p: &'a Provenance, idx: usize) -> Result<&'a Provenance, ModuliError> {
    p.children.get(idx).ok_or_else(|| ModuliError::Unrebuildable {
        rule: p.rule.clone(),
        reason: format!("missing child #{idx}"),
    })
}

/// Rebuilds a live boundedness modulus from a serialized construction tree.
pub fn rebuild_boundedness(p: &Provenance) -> Result<BoundednessModulus, ModuliError> {
    BoundednessModulus::rebuild(p)
}

/// Rebuilds a live learnable rate from a serialized construction tree.
pub fn rebuild_learnable_rate(p: &Provenance) -> Result<LearnableRate, ModuliError> {
    LearnableRate::rebuild(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_preserves_tree() {
        let tree = Provenance::new("sum_boundedness", "modulus of uniform boundedness")
            .with_param("k", 2.0)
            .with_child(Provenance::new("constant_boundedness", "modulus of uniform boundedness").with_param("value", 1.0))
            .with_label("chi2");
        let json = tree.to_json();
        let back: Provenance = serde_json::from_str(&json).unwrap();
        assert_eq!(tree, back);
        assert!(back.contains_label("chi2"));
        assert!(back.contains_rule("constant_boundedness"));
    }

    #[test]
    fn display_renders_rule_and_kind() {
        let tree = Provenance::new("ville", "modulus of uniform boundedness").with_param("k", 2.0);
        let text = tree.to_string();
        assert!(text.contains("ville"));
        assert!(text.contains("modulus of uniform boundedness"));
    }
}
