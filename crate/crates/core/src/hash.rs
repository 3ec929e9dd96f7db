//! Content hashing used for suite, template, lexicon and request identities.

use alloc::string::String;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Serializes `value` to JSON with object keys in sorted order.
///
/// `serde_json::Map` is BTreeMap-backed (no `preserve_order`), so routing
/// through `Value` sorts every nested object.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_string(&v).expect("value to string")
}

/// SHA-256 of [`canonical_json`].
pub fn canonical_hash<T: Serialize + ?Sized>(value: &T) -> String {
    sha256_hex(canonical_json(value).as_bytes())
}

/// 64-bit FNV-1a, used for feature hashing.
pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
