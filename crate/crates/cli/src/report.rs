//! Report envelope and renderers.

use std::fmt::Write as _;

use homc::tensor::Tensor;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA: &str = "homc.report/1";

#[derive(Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct ChainInfo {
    /// History length of the chain; the tensor has `order + 1` indices.
    pub order: usize,
    pub states: usize,
    pub source: String,
}

/// Every command's output. Field order is fixed by declaration.
#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool: Tool,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainInfo>,
    /// Tolerances, horizons and seeds the result depends on.
    pub settings: Map<String, Value>,
    pub result: Value,
}

impl Report {
    pub fn new(
        command: &str,
        chain: Option<ChainInfo>,
        settings: Map<String, Value>,
        result: Value,
    ) -> Self {
        Self {
            schema: SCHEMA,
            tool: Tool {
                name: "homc",
                version: env!("CARGO_PKG_VERSION"),
            },
            command: command.to_string(),
            chain,
            settings,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("homc {} ({})\n", self.command, self.tool.version);
        if let Some(c) = &self.chain {
            let _ = writeln!(
                out,
                "chain: {} (order {}, {} states)",
                c.source, c.order, c.states
            );
        }
        for (k, v) in &self.settings {
            let _ = writeln!(out, "setting {k}: {}", compact(v));
        }
        render(&mut out, &self.result, 0);
        out
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Array(items) => items.iter().all(|i| !i.is_array() && !i.is_object()),
        Value::Object(_) => false,
        _ => true,
    }
}

fn render(out: &mut String, v: &Value, depth: usize) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                if is_flat(v) {
                    let _ = writeln!(out, "{pad}{k}: {}", compact(v));
                } else {
                    let _ = writeln!(out, "{pad}{k}:");
                    render(out, v, depth + 1);
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                if is_flat(item) {
                    let _ = writeln!(out, "{pad}{}", compact(item));
                } else {
                    let _ = writeln!(out, "{pad}-");
                    render(out, item, depth + 1);
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{}", compact(other));
        }
    }
}

/// A tensor as nested arrays indexed `[i1 - 1][i2 - 1]...[im - 1]`.
pub fn nested(t: &Tensor) -> Value {
    fn build(t: &Tensor, prefix: &mut Vec<usize>) -> Value {
        if prefix.len() == t.order() {
            return json!(t.get(prefix));
        }
        let items = (1..=t.dim())
            .map(|i| {
                prefix.push(i);
                let v = build(t, prefix);
                prefix.pop();
                v
            })
            .collect();
        Value::Array(items)
    }
    build(t, &mut Vec::with_capacity(t.order()))
}
