//! Canonical serialization and stable 64-bit digests.
//!
//! Canonical form: valid JSON with object keys sorted lexicographically,
//! reals rendered as the shortest decimal that round-trips, no whitespace.
//! The same value always produces the same bytes on every platform, which is
//! what makes digests usable as provenance anchors.

use crate::error::{FlowError, Result};
use serde_json::Value;

pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
pub const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a 64-bit over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Incremental FNV-1a 64-bit hasher.
#[derive(Debug, Clone)]
pub struct Fnv1a64 {
    state: u64,
}

impl Fnv1a64 {
    pub fn new() -> Self {
        Self { state: FNV_OFFSET }
    }

    pub fn update(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.state ^= *b as u64;
            self.state = self.state.wrapping_mul(FNV_PRIME);
        }
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}

impl Default for Fnv1a64 {
    fn default() -> Self {
        Self::new()
    }
}

/// Word-oriented content hash for bulk f64 data. Chains each 64-bit word
/// through the splitmix64 finalizer so column contents hash at memory speed
/// while staying platform-stable (IEEE-754 bit patterns are canonical).
#[derive(Debug, Clone)]
pub struct WordHash {
    state: u64,
}

impl WordHash {
    pub fn new() -> Self {
        Self {
            state: 0x9E37_79B9_7F4A_7C15,
        }
    }

    pub fn update_u64(&mut self, word: u64) {
        let mut z = self.state ^ word;
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        self.state = z ^ (z >> 31);
    }

    pub fn update_f64(&mut self, x: f64) {
        self.update_u64(x.to_bits());
    }

    pub fn update_bytes(&mut self, bytes: &[u8]) {
        self.update_u64(fnv1a64(bytes));
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}

impl Default for WordHash {
    fn default() -> Self {
        Self::new()
    }
}

/// Shortest round-trip decimal for a finite f64. Rust's `Display` for floats
/// is exactly this rendering.
pub fn format_f64(x: f64) -> String {
    debug_assert!(x.is_finite());
    if x == 0.0 {
        // Normalize -0.0 so equal values give equal bytes.
        "0".to_string()
    } else {
        format!("{x}")
    }
}

fn write_json_string(out: &mut Vec<u8>, s: &str) {
    out.push(b'"');
    for c in s.chars() {
        match c {
            '"' => out.extend_from_slice(b"\\\""),
            '\\' => out.extend_from_slice(b"\\\\"),
            '\n' => out.extend_from_slice(b"\\n"),
            '\r' => out.extend_from_slice(b"\\r"),
            '\t' => out.extend_from_slice(b"\\t"),
            c if (c as u32) < 0x20 => {
                out.extend_from_slice(format!("\\u{:04x}", c as u32).as_bytes());
            }
            c => {
                let mut buf = [0u8; 4];
                out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            }
        }
    }
    out.push(b'"');
}

fn write_value(out: &mut Vec<u8>, value: &Value, path: &str) -> Result<()> {
    match value {
        Value::Null => out.extend_from_slice(b"null"),
        Value::Bool(b) => out.extend_from_slice(if *b { b"true" } else { b"false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.extend_from_slice(u.to_string().as_bytes());
            } else if let Some(i) = n.as_i64() {
                out.extend_from_slice(i.to_string().as_bytes());
            } else {
                let f = n
                    .as_f64()
                    .filter(|f| f.is_finite())
                    .ok_or_else(|| FlowError::Unserializable(path.to_string()))?;
                out.extend_from_slice(format_f64(f).as_bytes());
            }
        }
        Value::String(s) => write_json_string(out, s),
        Value::Array(items) => {
            out.push(b'[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_value(out, item, &format!("{path}[{i}]"))?;
            }
            out.push(b']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort_unstable();
            out.push(b'{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                write_json_string(out, key);
                out.push(b':');
                write_value(out, &map[*key], &format!("{path}.{key}"))?;
            }
            out.push(b'}');
        }
    }
    Ok(())
}

/// Canonical bytes of a JSON value: sorted keys, shortest-round-trip reals,
/// no whitespace. Errors on non-finite numbers.
pub fn canonical_bytes(value: &Value) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_value(&mut out, value, "$")?;
    Ok(out)
}

/// Canonical bytes of any serializable value.
pub fn canonicalize<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let json = serde_json::to_value(value)
        .map_err(|e| FlowError::Unserializable(format!("serialization failed: {e}")))?;
    canonical_bytes(&json)
}

/// FNV-1a 64 digest of the canonical bytes of a serializable value.
pub fn digest<T: serde::Serialize>(value: &T) -> Result<u64> {
    Ok(fnv1a64(&canonicalize(value)?))
}

/// Render a digest the way it appears in file names and reports.
pub fn digest_hex(d: u64) -> String {
    format!("{d:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x8594_4171_f739_67e8);
    }

    #[test]
    fn keys_are_sorted() {
        let v = json!({"b": 1, "a": 2});
        assert_eq!(canonical_bytes(&v).unwrap(), b"{\"a\":2,\"b\":1}");
    }

    #[test]
    fn floats_shortest_round_trip() {
        // Float-typed 1.0 renders as "1" (shortest form); integer-typed stays "1".
        let v = json!({"x": 0.1, "y": 1.0, "z": -0.0, "n": 1});
        let bytes = canonical_bytes(&v).unwrap();
        assert_eq!(bytes, b"{\"n\":1,\"x\":0.1,\"y\":1,\"z\":0}");
    }

    #[test]
    fn non_finite_rejected() {
        let v = serde_json::to_value(f64::NAN);
        // serde_json maps NaN to null; guard against that path explicitly.
        assert!(v.unwrap().is_null());
        let v = Value::Number(serde_json::Number::from_f64(1.0).unwrap());
        assert!(canonical_bytes(&v).is_ok());
    }

    #[test]
    fn digest_stable_for_equal_values() {
        let a = json!({"k": [1, 2, 3], "m": {"x": 0.5}});
        let b = json!({"m": {"x": 0.5}, "k": [1, 2, 3]});
        assert_eq!(digest(&a).unwrap(), digest(&b).unwrap());
    }

    #[test]
    fn word_hash_order_sensitive() {
        let mut a = WordHash::new();
        a.update_f64(1.0);
        a.update_f64(2.0);
        let mut b = WordHash::new();
        b.update_f64(2.0);
        b.update_f64(1.0);
        assert_ne!(a.finish(), b.finish());
    }
}
