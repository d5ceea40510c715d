//! Candidate-model spaces: all subsets of {1..p} (optionally with forced-in
//! variables) and all set partitions of {1..p} encoded as restricted-growth
//! strings.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default guard against accidentally enumerating a huge space.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 24;

/// A candidate model: either a subset of variable ids (1-based, sorted) or a
/// set partition given by its restricted-growth string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelIndex {
    Subset(Vec<usize>),
    Partition(Vec<usize>),
}

impl ModelIndex {
    /// Subset model from unsorted ids; rejects duplicates and zero ids.
    pub fn subset(ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = ids.into_iter().collect();
        v.sort_unstable();
        if v.iter().any(|&i| i == 0) {
            return Err(Error::InvalidModel("variable ids are 1-based".into()));
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel("duplicate variable id".into()));
        }
        Ok(ModelIndex::Subset(v))
    }

    /// Partition model from block labels; canonicalizes to the
    /// restricted-growth representative.
    pub fn partition(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidModel("empty partition".into()));
        }
        Ok(ModelIndex::Partition(canonicalize_rgs(labels)))
    }

    pub fn is_subset(&self) -> bool {
        matches!(self, ModelIndex::Subset(_))
    }

    /// Number of elements of a subset model, or number of blocks of a
    /// partition model.
    pub fn cardinality(&self) -> usize {
        match self {
            ModelIndex::Subset(v) => v.len(),
            ModelIndex::Partition(g) => g.iter().copied().max().map_or(0, |m| m + 1),
        }
    }

    /// Canonical textual encoding: "1,3,7" for subsets (empty subset prints
    /// as "-"), "0|0|1|2" for partitions.
    pub fn encode(&self) -> String {
        match self {
            ModelIndex::Subset(v) => {
                if v.is_empty() {
                    "-".to_string()
                } else {
                    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
                }
            }
            ModelIndex::Partition(g) => g.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("|"),
        }
    }

    /// Parse the textual encoding produced by [`encode`](Self::encode).
    pub fn decode(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(ModelIndex::Subset(Vec::new()));
        }
        // '|' marks a partition; a bare "0" is the p=1 partition
        if s.contains('|') || s == "0" {
            let labels: Vec<usize> = s
                .split('|')
                .map(|t| t.trim().parse::<usize>().map_err(|e| Error::InvalidModel(e.to_string())))
                .collect::<Result<_>>()?;
            if !is_restricted_growth(&labels) {
                return Err(Error::InvalidModel(format!("not a restricted-growth string: {s}")));
            }
            Ok(ModelIndex::Partition(labels))
        } else {
            let ids: Vec<usize> = s
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|e| Error::InvalidModel(e.to_string())))
                .collect::<Result<_>>()?;
            let sorted_ok = ids.windows(2).all(|w| w[0] < w[1]);
            if !sorted_ok {
                return Err(Error::InvalidModel(format!("subset ids must be strictly increasing: {s}")));
            }
            ModelIndex::subset(ids)
        }
    }
}

impl fmt::Display for ModelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

/// True iff g[0] = 0 and g[i] <= 1 + max(g[0..i]).
pub fn is_restricted_growth(g: &[usize]) -> bool {
    if g.is_empty() || g[0] != 0 {
        return false;
    }
    let mut max = 0usize;
    for &b in &g[1..] {
        if b > max + 1 {
            return false;
        }
        max = max.max(b);
    }
    true
}

/// Relabel arbitrary block labels into the restricted-growth representative.
fn canonicalize_rgs(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels {
        let id = match map.iter().find(|(k, _)| *k == l) {
            Some((_, v)) => *v,
            None => {
                let v = map.len();
                map.push((l, v));
                v
            }
        };
        out.push(id);
    }
    out
}

/// A declared model space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelSpace {
    AllSubsets { p: usize, forced: BTreeSet<usize> },
    AllPartitions { p: usize },
}

impl ModelSpace {
    pub fn all_subsets(p: usize) -> Self {
        ModelSpace::AllSubsets { p, forced: BTreeSet::new() }
    }

    pub fn all_subsets_forced(p: usize, forced: impl IntoIterator<Item = usize>) -> Self {
        ModelSpace::AllSubsets { p, forced: forced.into_iter().collect() }
    }

    pub fn all_partitions(p: usize) -> Self {
        ModelSpace::AllPartitions { p }
    }

    pub fn p(&self) -> usize {
        match self {
            ModelSpace::AllSubsets { p, .. } | ModelSpace::AllPartitions { p } => *p,
        }
    }

    pub fn cardinality(&self) -> u128 {
        match self {
            ModelSpace::AllSubsets { p, forced } => 1u128 << (p - forced.len()),
            ModelSpace::AllPartitions { p } => bell_number(*p),
        }
    }

    /// The full model of this space: all p variables, or the one-block
    /// partition.
    pub fn full_model(&self) -> ModelIndex {
        match self {
            ModelSpace::AllSubsets { p, .. } => ModelIndex::Subset((1..=*p).collect()),
            ModelSpace::AllPartitions { p } => ModelIndex::Partition(vec![0; *p]),
        }
    }

    /// Membership check: dimensions agree, ids in range, forced ids present.
    pub fn contains(&self, model: &ModelIndex) -> bool {
        match (self, model) {
            (ModelSpace::AllSubsets { p, forced }, ModelIndex::Subset(ids)) => {
                ids.iter().all(|&i| i >= 1 && i <= *p) && forced.iter().all(|f| ids.contains(f))
            }
            (ModelSpace::AllPartitions { p }, ModelIndex::Partition(g)) => {
                g.len() == *p && is_restricted_growth(g)
            }
            _ => false,
        }
    }

    /// Deterministic enumeration of the whole space. Subsets follow binary
    /// counting over the free ids (low id = low bit); partitions follow
    /// lexicographic restricted-growth order.
    pub fn enumerate(&self) -> Result<Vec<ModelIndex>> {
        self.enumerate_capped(DEFAULT_ENUMERATION_CAP)
    }

    pub fn enumerate_capped(&self, cap: u128) -> Result<Vec<ModelIndex>> {
        assert!(self.p() >= 1, "model space requires p >= 1");
        match self {
            ModelSpace::AllSubsets { p, forced } => {
                let free: Vec<usize> = (1..=*p).filter(|i| !forced.contains(i)).collect();
                let count = 1u128 << free.len();
                if count > cap {
                    return Err(Error::SubsetSpaceTooLarge { free: free.len(), cap });
                }
                let mut out = Vec::with_capacity(count as usize);
                for mask in 0..count as u64 {
                    let mut ids: Vec<usize> = forced.iter().copied().collect();
                    for (bit, &id) in free.iter().enumerate() {
                        if mask >> bit & 1 == 1 {
                            ids.push(id);
                        }
                    }
                    ids.sort_unstable();
                    out.push(ModelIndex::Subset(ids));
                }
                Ok(out)
            }
            ModelSpace::AllPartitions { p } => {
                let count = bell_number(*p);
                if count > cap {
                    return Err(Error::PartitionSpaceTooLarge { p: *p, cardinality: count, cap });
                }
                let mut out = Vec::with_capacity(count as usize);
                let mut g = vec![0usize; *p];
                loop {
                    out.push(ModelIndex::Partition(g.clone()));
                    if !next_rgs(&mut g) {
                        break;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Features of a model in this space: variable ids for subsets,
    /// co-clustered unordered pairs for partitions.
    pub fn features_of(&self, model: &ModelIndex) -> Result<Vec<FeatureId>> {
        if !self.contains(model) {
            return Err(Error::ModelSpaceMismatch(model.encode()));
        }
        Ok(match model {
            ModelIndex::Subset(ids) => ids.iter().map(|&i| FeatureId::Var(i)).collect(),
            ModelIndex::Partition(g) => {
                let mut pairs = Vec::new();
                for j in 0..g.len() {
                    for k in j + 1..g.len() {
                        if g[j] == g[k] {
                            pairs.push(FeatureId::Pair(j + 1, k + 1));
                        }
                    }
                }
                pairs
            }
        })
    }

    /// Every feature the space can express.
    pub fn all_features(&self) -> Vec<FeatureId> {
        match self {
            ModelSpace::AllSubsets { p, .. } => (1..=*p).map(FeatureId::Var).collect(),
            ModelSpace::AllPartitions { p } => {
                let mut pairs = Vec::new();
                for j in 1..=*p {
                    for k in j + 1..=*p {
                        pairs.push(FeatureId::Pair(j, k));
                    }
                }
                pairs
            }
        }
    }
}

/// Advance a restricted-growth string to its lexicographic successor.
/// Returns false when the input was the last string (0,1,2,...,p-1).
fn next_rgs(g: &mut [usize]) -> bool {
    let p = g.len();
    for i in (1..p).rev() {
        let max_prefix = g[..i].iter().copied().max().unwrap_or(0);
        if g[i] <= max_prefix {
            g[i] += 1;
            for b in g[i + 1..].iter_mut() {
                *b = 0;
            }
            return true;
        }
    }
    false
}

/// A unit of model structure for inclusion importance: a variable id in a
/// subset space, or an unordered co-clustered pair {j,k} (j < k) in a
/// partition space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureId {
    Var(usize),
    Pair(usize, usize),
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureId::Var(i) => write!(f, "{i}"),
            FeatureId::Pair(j, k) => write!(f, "{j}:{k}"),
        }
    }
}

/// Bell numbers via the Bell triangle. Valid for 1 <= p <= 30 (fits u128).
pub fn bell_number(p: usize) -> u128 {
    assert!(p >= 1 && p <= 30, "bell_number requires 1 <= p <= 30");
    let mut row = vec![1u128];
    for _ in 1..p {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last + x);
        }
        row = next;
    }
    *row.last().unwrap()
}
