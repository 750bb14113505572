//! Config resolution: JSON file, `key=value` overrides, hashing.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::Usage;

/// Apply `a.b.c=value` to a JSON tree. The key must already exist, so
/// typos are rejected instead of silently ignored. Values are parsed as
/// JSON and fall back to plain strings.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Usage(format!("override {spec:?} is not key=value")))?;
    let mut node = &mut *root;
    for part in key.split('.') {
        node = match node {
            Value::Object(map) => map
                .get_mut(part)
                .ok_or_else(|| Usage(format!("unknown config key {key:?}")))?,
            _ => bail!(Usage(format!("config key {key:?} does not name a field"))),
        };
    }
    *node = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(())
}

/// Start from `defaults`, merge the file (if any), then the overrides.
pub fn resolve<T: Serialize + DeserializeOwned>(defaults: &T, file: Option<&Path>, overrides: &[String]) -> Result<T> {
    let mut v = serde_json::to_value(defaults)?;
    if let Some(p) = file {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let user: Value = serde_json::from_str(&text).map_err(|e| Usage(format!("{}: {e}", p.display())))?;
        // Deserialize once on its own so unknown keys in the file are caught.
        serde_json::from_value::<T>(user.clone()).map_err(|e| Usage(format!("{}: {e}", p.display())))?;
        merge(&mut v, user);
    }
    for o in overrides {
        apply_override(&mut v, o)?;
    }
    serde_json::from_value(v).map_err(|e| Usage(format!("invalid config: {e}")).into())
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// SHA-256 of the canonical JSON form (object keys sorted).
pub fn config_hash<T: Serialize>(cfg: &T) -> Result<String> {
    let v = serde_json::to_value(cfg)?;
    Ok(hex::encode(Sha256::digest(serde_json::to_string(&v)?.as_bytes())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields, default)]
    struct Inner {
        x: u32,
        name: String,
    }

    impl Default for Inner {
        fn default() -> Self {
            Inner { x: 1, name: "a".into() }
        }
    }

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields, default)]
    struct Outer {
        inner: Inner,
        list: Vec<f64>,
    }

    #[test]
    fn overrides() {
        let d = Outer::default();
        let r: Outer = resolve(&d, None, &["inner.x=5".into(), "inner.name=zz".into(), "list=[1,2.5]".into()]).unwrap();
        assert_eq!(r.inner.x, 5);
        assert_eq!(r.inner.name, "zz");
        assert_eq!(r.list, vec![1.0, 2.5]);
        assert!(resolve(&d, None, &["inner.y=5".into()]).is_err());
        assert!(resolve(&d, None, &["inner.x".into()]).is_err());
        assert!(resolve(&d, None, &["inner.x=\"no\"".into()]).is_err());
    }

    #[test]
    fn hash_is_order_independent() {
        let a: Value = serde_json::from_str(r#"{"a": 1, "b": [1, 2]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"b": [1, 2], "a": 1}"#).unwrap();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_eq!(config_hash(&a).unwrap().len(), 64);
    }
}
