//! Serialization of exact rationals as `p/q` strings.

use serde::ser::{SerializeSeq, SerializeTuple};
use serde::Serializer;

use crate::rational::{format_q, Q};

pub fn serialize<S: Serializer>(q: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_q(q))
}

pub fn serialize_vec<S: Serializer>(v: &[Q], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for q in v {
        seq.serialize_element(&format_q(q))?;
    }
    seq.end()
}

pub fn serialize_vecs<S: Serializer>(v: &[Vec<Q>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for row in v {
        let strings: Vec<String> = row.iter().map(format_q).collect();
        seq.serialize_element(&strings)?;
    }
    seq.end()
}

pub fn serialize_option<S: Serializer>(q: &Option<Q>, s: S) -> Result<S::Ok, S::Error> {
    match q {
        Some(q) => s.serialize_some(&format_q(q)),
        None => s.serialize_none(),
    }
}

/// `(level, value)` pairs as `[level, "p/q"]`.
pub fn serialize_samples<S: Serializer>(v: &[(u64, Q)], s: S) -> Result<S::Ok, S::Error> {
    struct Pair<'a>(u64, &'a Q);
    impl serde::Serialize for Pair<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            let mut t = s.serialize_tuple(2)?;
            t.serialize_element(&self.0)?;
            t.serialize_element(&format_q(self.1))?;
            t.end()
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for (k, q) in v {
        seq.serialize_element(&Pair(*k, q))?;
    }
    seq.end()
}
