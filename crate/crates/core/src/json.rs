//! JSON emission with sorted keys, independent of serde_json's map backend.

use serde::Serialize;
use serde_json::{Map, Value};

/// Recursively rebuilds every object with its keys in lexicographic order.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, canonicalize(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Pretty-printed JSON with sorted keys and a trailing newline.
pub fn to_sorted_string<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable value");
    let mut s = serde_json::to_string_pretty(&canonicalize(v)).expect("serializable value");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_come_out_sorted() {
        let v = serde_json::json!({"b": 1, "a": {"z": 0, "c": [ {"y": 1, "x": 2} ]}});
        let s = to_sorted_string(&v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.find("\"c\"").unwrap() < s.find("\"z\"").unwrap());
        assert!(s.find("\"x\"").unwrap() < s.find("\"y\"").unwrap());
    }
}
