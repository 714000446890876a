//! Flat `key = value` overrides for [`StackConfig`]. Keys are dotted field
//! paths, for example:
//!
//! ```text
//! slam.particle_count = 500
//! nav.clearance_weight = 4
//! nav.thresholds.free = 0.2
//! sim.noise.lidar_range_noise = 0.02
//! sim.kinematics.distance_per_tick = 5e-5
//! goal_timeout = 60
//! ```

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::formats::{key_values, read_text};
use crate::pipeline::StackConfig;

fn set_path(root: &mut Value, key: &str, raw: &str) -> std::result::Result<(), String> {
    let mut node = root;
    for part in key.split('.') {
        node = node
            .as_object_mut()
            .and_then(|m| m.get_mut(part))
            .ok_or_else(|| format!("unknown config key {key:?}"))?;
    }
    if node.is_object() {
        return Err(format!("{key:?} is a section, not a value"));
    }
    let value: Value =
        serde_json::from_str(raw).map_err(|_| format!("invalid value {raw:?} for {key:?}"))?;
    if !(value.is_number() || value.is_boolean()) {
        return Err(format!("invalid value {raw:?} for {key:?}"));
    }
    *node = value;
    Ok(())
}

/// Applies `(key, value)` overrides in order. Each error names the key.
pub fn apply_overrides<'a>(
    base: &StackConfig,
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> std::result::Result<StackConfig, String> {
    let mut tree = serde_json::to_value(base).expect("config serializes");
    for (k, v) in pairs {
        set_path(&mut tree, k, v)?;
        // type-check each key as it is applied
        serde_json::from_value::<StackConfig>(tree.clone()).map_err(|e| format!("{k}: {e}"))?;
    }
    Ok(serde_json::from_value(tree).expect("checked above"))
}

/// Reads a config file on top of `base` and validates the result.
pub fn load_config(path: &Path, base: &StackConfig) -> Result<StackConfig> {
    let mut cfg = *base;
    for e in key_values(&read_text(path)?, path)? {
        cfg = apply_overrides(&cfg, [(e.key.as_str(), e.value.as_str())])
            .map_err(|m| Error::parse(path, e.line, m))?;
    }
    cfg.validate()
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    Ok(cfg)
}

/// Every overridable key with its current value, in file syntax.
pub fn dump_config(cfg: &StackConfig) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(m) => {
                for (k, child) in m {
                    let key = if prefix.is_empty() {
                        k.clone()
                    } else {
                        format!("{prefix}.{k}")
                    };
                    walk(&key, child, out);
                }
            }
            other => {
                out.push_str(&format!("{prefix} = {other}\n"));
            }
        }
    }
    let mut out = String::new();
    walk(
        "",
        &serde_json::to_value(cfg).expect("config serializes"),
        &mut out,
    );
    out
}
