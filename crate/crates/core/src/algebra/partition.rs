use serde::{Deserialize, Serialize};

use super::Elem;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns false when `x` and `y` were already joined.
    pub fn union(&mut self, x: u32, y: u32) -> bool {
        let (mut rx, mut ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        if self.size[rx as usize] < self.size[ry as usize] {
            std::mem::swap(&mut rx, &mut ry);
        }
        self.parent[ry as usize] = rx;
        self.size[rx as usize] += self.size[ry as usize];
        true
    }

    pub fn into_congruence(mut self) -> Congruence {
        let n = self.len();
        let roots: Vec<u32> = (0..n as u32).map(|x| self.find(x)).collect();
        Congruence::from_labels(&roots)
    }
}

/// An equivalence relation on `0..len`, stored as canonical block labels:
/// blocks are numbered in order of their least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Congruence {
    labels: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct BlocksJson {
    blocks: Vec<Vec<Elem>>,
}

impl Congruence {
    pub fn identity(n: usize) -> Self {
        Congruence {
            labels: (0..n as u32).collect(),
        }
    }

    pub fn total(n: usize) -> Self {
        Congruence {
            labels: vec![0; n],
        }
    }

    /// Canonicalizes arbitrary labels.
    pub fn from_labels<T: Copy + Eq + std::hash::Hash>(raw: &[T]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|r| {
                let next = map.len() as u32;
                *map.entry(*r).or_insert(next)
            })
            .collect();
        Congruence { labels }
    }

    pub fn from_blocks(n: usize, blocks: &[Vec<Elem>]) -> Option<Self> {
        let mut raw = vec![u32::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &x in block {
                let slot = raw.get_mut(x as usize)?;
                if *slot != u32::MAX {
                    return None;
                }
                *slot = b as u32;
            }
        }
        if raw.contains(&u32::MAX) {
            return None;
        }
        Some(Self::from_labels(&raw))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn block_of(&self, x: Elem) -> u32 {
        self.labels[x as usize]
    }

    pub fn related(&self, x: Elem, y: Elem) -> bool {
        self.labels[x as usize] == self.labels[y as usize]
    }

    pub fn num_blocks(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    pub fn is_identity(&self) -> bool {
        self.num_blocks() == self.len()
    }

    pub fn is_total(&self) -> bool {
        self.num_blocks() <= 1
    }

    pub fn blocks(&self) -> Vec<Vec<Elem>> {
        let mut blocks = vec![Vec::new(); self.num_blocks()];
        for (x, &b) in self.labels.iter().enumerate() {
            blocks[b as usize].push(x as Elem);
        }
        blocks
    }

    /// Unordered related pairs `(x, y)` with `x < y`.
    pub fn nontrivial_pairs(&self) -> Vec<(Elem, Elem)> {
        let mut out = Vec::new();
        for block in self.blocks() {
            for (i, &x) in block.iter().enumerate() {
                for &y in &block[i + 1..] {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// `self ⊆ other` as relations.
    pub fn refines(&self, other: &Congruence) -> bool {
        let mut image = vec![u32::MAX; self.num_blocks()];
        for (&b, &o) in self.labels.iter().zip(&other.labels) {
            let slot = &mut image[b as usize];
            if *slot == u32::MAX {
                *slot = o;
            } else if *slot != o {
                return false;
            }
        }
        true
    }

    pub fn meet(&self, other: &Congruence) -> Congruence {
        let pairs: Vec<(u32, u32)> = self.labels.iter().copied().zip(other.labels.iter().copied()).collect();
        Congruence::from_labels(&pairs)
    }

    /// Join in the lattice of equivalence relations (the transitive closure of
    /// the union).
    pub fn join(&self, other: &Congruence) -> Congruence {
        let mut uf = UnionFind::new(self.len());
        for rel in [self, other] {
            let mut first = vec![u32::MAX; rel.num_blocks()];
            for (x, &b) in rel.labels.iter().enumerate() {
                if first[b as usize] == u32::MAX {
                    first[b as usize] = x as u32;
                } else {
                    uf.union(first[b as usize], x as u32);
                }
            }
        }
        uf.into_congruence()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(BlocksJson {
            blocks: self.blocks(),
        })
        .expect("blocks serialize")
    }

    pub fn from_json(n: usize, value: &serde_json::Value) -> Option<Self> {
        let parsed: BlocksJson = serde_json::from_value(value.clone()).ok()?;
        Self::from_blocks(n, &parsed.blocks)
    }
}
