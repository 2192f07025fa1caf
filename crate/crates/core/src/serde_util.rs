//! Reports number indices from 1, the way matrices are usually written.

use serde::ser::{SerializeSeq, Serializer};

pub(crate) fn one_based_index<S: Serializer>(i: &usize, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(*i as u64 + 1)
}

pub(crate) fn one_based<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for i in v {
        seq.serialize_element(&(i + 1))?;
    }
    seq.end()
}

pub(crate) fn one_based_sets<S: Serializer>(v: &[Vec<usize>], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for set in v {
        let shifted: Vec<usize> = set.iter().map(|i| i + 1).collect();
        seq.serialize_element(&shifted)?;
    }
    seq.end()
}

pub(crate) fn one_based_pairs<S: Serializer>(
    v: &[(usize, usize)],
    s: S,
) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for (i, j) in v {
        seq.serialize_element(&[i + 1, j + 1])?;
    }
    seq.end()
}

/// Renders a 0-based index set as `{1,2,3}`.
pub fn format_set(v: &[usize]) -> String {
    let parts: Vec<String> = v.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", parts.join(","))
}
