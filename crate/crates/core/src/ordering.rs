use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fiedler,
    Tsne,
    Umap,
    Original,
    Random,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Fiedler,
        Method::Tsne,
        Method::Umap,
        Method::Original,
        Method::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fiedler => "fiedler",
            Method::Tsne => "tsne",
            Method::Umap => "umap",
            Method::Original => "original",
            Method::Random => "random",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Method::Tsne | Method::Umap | Method::Random)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// A bijection from vertices to ranks `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ordering {
    rank_of: Vec<usize>,
    vertex_at: Vec<usize>,
    pub method: Method,
    pub params: BTreeMap<String, Value>,
}

impl Ordering {
    pub fn from_ranks(rank_of: Vec<usize>, method: Method) -> Result<Self> {
        let n = rank_of.len();
        let mut vertex_at = vec![usize::MAX; n];
        for (v, &r) in rank_of.iter().enumerate() {
            if r >= n || vertex_at[r] != usize::MAX {
                return Err(Error::InvalidParameter(format!(
                    "ranks are not a permutation of 0..{n}"
                )));
            }
            vertex_at[r] = v;
        }
        Ok(Ordering {
            rank_of,
            vertex_at,
            method,
            params: BTreeMap::new(),
        })
    }

    /// `sequence[k]` is the vertex placed at rank `k`.
    pub fn from_sequence(sequence: Vec<usize>, method: Method) -> Result<Self> {
        let n = sequence.len();
        let mut rank_of = vec![usize::MAX; n];
        for (r, &v) in sequence.iter().enumerate() {
            if v >= n || rank_of[v] != usize::MAX {
                return Err(Error::InvalidParameter(format!(
                    "sequence is not a permutation of 0..{n}"
                )));
            }
            rank_of[v] = r;
        }
        Ok(Ordering {
            rank_of,
            vertex_at: sequence,
            method,
            params: BTreeMap::new(),
        })
    }

    /// Ranks by ascending value; ties by ascending vertex index.
    pub fn from_values(values: &[f64], method: Method) -> Self {
        let mut seq: Vec<usize> = (0..values.len()).collect();
        seq.sort_by(|&a, &b| {
            values[a]
                .partial_cmp(&values[b])
                .expect("finite embedding values")
                .then(a.cmp(&b))
        });
        Ordering::from_sequence(seq, method).expect("sorted indices form a permutation")
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn n(&self) -> usize {
        self.rank_of.len()
    }

    pub fn rank(&self, v: usize) -> usize {
        self.rank_of[v]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.rank_of
    }

    pub fn vertex_at(&self, rank: usize) -> usize {
        self.vertex_at[rank]
    }

    pub fn sequence(&self) -> &[usize] {
        &self.vertex_at
    }

    /// `rank ↦ n − 1 − rank`, same provenance.
    pub fn reversed(&self) -> Ordering {
        let n = self.n();
        let mut o = Ordering::from_ranks(self.rank_of.iter().map(|&r| n - 1 - r).collect(), self.method)
            .expect("reversal of a permutation");
        o.params = self.params.clone();
        o
    }

    pub fn seed(&self) -> Option<u64> {
        self.params.get("seed").and_then(Value::as_u64)
    }

    /// Short file-name friendly label, e.g. `tsne_perplexity30_seed42`.
    /// Only the identifying parameters take part.
    pub fn label(&self) -> String {
        const KEYS: [&str; 4] = ["k", "min_dist", "perplexity", "seed"];
        let mut s = self.method.as_str().to_string();
        for (k, v) in self.params.iter().filter(|(k, _)| KEYS.contains(&k.as_str())) {
            let v = match v {
                Value::String(x) => x.clone(),
                other => other.to_string(),
            };
            s.push('_');
            s.push_str(k);
            s.push_str(&v.replace(['/', '\\', ' ', '.'], "p"));
        }
        s
    }
}

/// Per-vertex real value from which an ordering is derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding1D {
    pub values: Vec<f64>,
}

impl Embedding1D {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().all(|v| v.is_finite()) {
            Ok(Embedding1D { values })
        } else {
            Err(Error::NonFinite("embedding"))
        }
    }

    pub fn ordering(&self, method: Method) -> Ordering {
        Ordering::from_values(&self.values, method)
    }
}
