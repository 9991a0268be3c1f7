//! Coordinatewise evaluation of operations on sets of tuples.
//!
//! For a subset `S` of a power `A^w`, the image `f(S^k)` and the set of
//! translations `x ↦ f(c_1, .., x, .., c_{k-1})` with constants from `S` are
//! computed by a dynamic program over argument positions. Per coordinate, the
//! partial argument assignments are collapsed into classes with identical
//! residual behaviour (a reduced decision diagram of the operation restricted
//! to that coordinate's value set), and the program tracks the set of
//! reachable class tuples instead of the set of argument tuples.

use std::collections::HashMap;
use std::sync::Arc;

use indexmap::IndexMap;
use rayon::prelude::*;

use super::{Elem, FiniteAlgebra};

const NO_SLOT: u32 = u32::MAX;

/// Largest `|D|^(arity)` for which an automaton is built.
pub(crate) const AUTOMATON_LIMIT: usize = 1 << 21;

/// Reduced decision diagram of one operation over a value set `D`, with an
/// optional free ("hole") argument position.
#[derive(Debug)]
pub(crate) struct ResidualAutomaton {
    width: usize,
    /// `transitions[j][class * width + slot]`: class after fixing the next
    /// non-hole argument. The last level points into `leaves`.
    transitions: Vec<Vec<u32>>,
    /// Output for each hole value slot (a single entry without a hole).
    leaves: Vec<Vec<Elem>>,
}

struct Builder<'a> {
    alg: &'a FiniteAlgebra,
    op: usize,
    domain: &'a [Elem],
    hole: Option<usize>,
    levels: usize,
    interned: Vec<HashMap<Vec<u32>, u32>>,
    transitions: Vec<Vec<u32>>,
    leaf_ids: HashMap<Vec<Elem>, u32>,
    leaves: Vec<Vec<Elem>>,
    args: Vec<Elem>,
    positions: Vec<usize>,
}

impl Builder<'_> {
    fn build(&mut self, level: usize) -> u32 {
        if level == self.levels {
            return self.leaf();
        }
        let pos = self.positions[level];
        let mut children = Vec::with_capacity(self.domain.len());
        for &v in self.domain {
            self.args[pos] = v;
            children.push(self.build(level + 1));
        }
        let table = &mut self.interned[level];
        if let Some(&id) = table.get(&children) {
            return id;
        }
        let id = table.len() as u32;
        self.transitions[level].extend_from_slice(&children);
        table.insert(children, id);
        id
    }

    fn leaf(&mut self) -> u32 {
        let out: Vec<Elem> = match self.hole {
            None => vec![self.alg.apply(self.op, &self.args)],
            Some(h) => self
                .domain
                .iter()
                .map(|&v| {
                    self.args[h] = v;
                    self.alg.apply(self.op, &self.args)
                })
                .collect(),
        };
        if let Some(&id) = self.leaf_ids.get(&out) {
            return id;
        }
        let id = self.leaves.len() as u32;
        self.leaf_ids.insert(out.clone(), id);
        self.leaves.push(out);
        id
    }
}

impl ResidualAutomaton {
    /// `None` when `|domain|^arity` exceeds [`AUTOMATON_LIMIT`].
    pub(crate) fn build(
        alg: &FiniteAlgebra,
        op: usize,
        domain: &[Elem],
        hole: Option<usize>,
    ) -> Option<Self> {
        let arity = alg.ops()[op].arity;
        let cost = (domain.len().max(1) as u128).pow(arity as u32);
        if cost > AUTOMATON_LIMIT as u128 {
            return None;
        }
        let positions: Vec<usize> = (0..arity).filter(|&p| Some(p) != hole).collect();
        let levels = positions.len();
        let mut b = Builder {
            alg,
            op,
            domain,
            hole,
            levels,
            interned: vec![HashMap::new(); levels],
            transitions: vec![Vec::new(); levels],
            leaf_ids: HashMap::new(),
            leaves: Vec::new(),
            args: vec![domain.first().copied().unwrap_or(0); arity],
            positions,
        };
        let root = b.build(0);
        debug_assert_eq!(root, 0);
        Some(ResidualAutomaton {
            width: domain.len(),
            transitions: b.transitions,
            leaves: b.leaves,
        })
    }

    fn levels(&self) -> usize {
        self.transitions.len()
    }

    #[inline]
    fn next(&self, level: usize, class: u32, slot: u32) -> u32 {
        self.transitions[level][class as usize * self.width + slot as usize]
    }
}

/// A set of tuples `S ⊆ A^w` prepared for coordinatewise kernels.
pub(crate) struct TupleSet<'a> {
    base: &'a FiniteAlgebra,
    width: usize,
    /// Flattened tuples, `len = |S| * width`.
    coords: &'a [Elem],
    domains: Vec<Arc<Vec<Elem>>>,
    /// Position of each coordinate value inside its domain.
    slots: Vec<u32>,
}

impl<'a> TupleSet<'a> {
    pub(crate) fn new(base: &'a FiniteAlgebra, width: usize, coords: &'a [Elem]) -> Self {
        let count = if width == 0 { 0 } else { coords.len() / width };
        let mut interned: HashMap<Vec<Elem>, Arc<Vec<Elem>>> = HashMap::new();
        let mut domains = Vec::with_capacity(width);
        let mut slot_of = Vec::with_capacity(width);
        for l in 0..width {
            let mut values: Vec<Elem> = (0..count).map(|i| coords[i * width + l]).collect();
            values.sort_unstable();
            values.dedup();
            let mut lookup = vec![NO_SLOT; base.size()];
            for (s, &v) in values.iter().enumerate() {
                lookup[v as usize] = s as u32;
            }
            slot_of.push(lookup);
            let shared = interned.entry(values.clone()).or_insert_with(|| Arc::new(values));
            domains.push(shared.clone());
        }
        let mut slots = Vec::with_capacity(coords.len());
        for i in 0..count {
            for l in 0..width {
                slots.push(slot_of[l][coords[i * width + l] as usize]);
            }
        }
        TupleSet {
            base,
            width,
            coords,
            domains,
            slots,
        }
    }

    pub(crate) fn len(&self) -> usize {
        if self.width == 0 {
            0
        } else {
            self.coords.len() / self.width
        }
    }

    /// One automaton per coordinate, shared between coordinates with equal
    /// domains. `None` if some domain is too large.
    fn automata(&self, op: usize, hole: Option<usize>) -> Option<Vec<Arc<ResidualAutomaton>>> {
        let mut cache: HashMap<*const Vec<Elem>, Arc<ResidualAutomaton>> = HashMap::new();
        let mut out = Vec::with_capacity(self.width);
        for dom in &self.domains {
            let key = Arc::as_ptr(dom);
            let auto = match cache.get(&key) {
                Some(a) => a.clone(),
                None => {
                    let a = Arc::new(ResidualAutomaton::build(self.base, op, dom, hole)?);
                    cache.insert(key, a.clone());
                    a
                }
            };
            out.push(auto);
        }
        Some(out)
    }

    /// Reachable final class tuples, each with the first (in enumeration
    /// order) list of argument indices into `S` that reaches it.
    fn reachable(&self, automata: &[Arc<ResidualAutomaton>]) -> IndexMap<Box<[u32]>, Vec<u32>> {
        let w = self.width;
        let levels = automata.first().map_or(0, |a| a.levels());
        let mut states: IndexMap<Box<[u32]>, Vec<u32>> = IndexMap::new();
        states.insert(vec![0u32; w].into_boxed_slice(), Vec::new());
        let n = self.len();
        for level in 0..levels {
            let step = |state: &[u32]| -> Vec<(Box<[u32]>, u32)> {
                let mut local: IndexMap<Box<[u32]>, u32> = IndexMap::new();
                let mut buf = vec![0u32; w];
                for e in 0..n {
                    let slots = &self.slots[e * w..(e + 1) * w];
                    for l in 0..w {
                        buf[l] = automata[l].next(level, state[l], slots[l]);
                    }
                    if !local.contains_key(buf.as_slice()) {
                        local.insert(buf.clone().into_boxed_slice(), e as u32);
                    }
                }
                local.into_iter().collect()
            };
            let current: Vec<(&Box<[u32]>, &Vec<u32>)> = states.iter().collect();
            let expanded: Vec<Vec<(Box<[u32]>, u32)>> = if current.len() * n > 1 << 14 {
                current.par_iter().map(|(s, _)| step(s)).collect()
            } else {
                current.iter().map(|(s, _)| step(s)).collect()
            };
            let mut next: IndexMap<Box<[u32]>, Vec<u32>> = IndexMap::new();
            for ((_, rep), children) in current.iter().zip(expanded) {
                for (child, e) in children {
                    next.entry(child).or_insert_with(|| {
                        let mut r = (*rep).clone();
                        r.push(e);
                        r
                    });
                }
            }
            states = next;
        }
        states
    }

    /// `f(S^k)` as a list of tuples, or `None` if an automaton is too large.
    pub(crate) fn image(&self, op: usize) -> Option<Vec<Vec<Elem>>> {
        let automata = self.automata(op, None)?;
        let finals = self.reachable(&automata);
        Some(
            finals
                .keys()
                .map(|leaf| {
                    leaf.iter()
                        .zip(&automata)
                        .map(|(&id, a)| a.leaves[id as usize][0])
                        .collect()
                })
                .collect(),
        )
    }

    /// Distinct translations of `op` with the free argument at `hole`,
    /// constants from `S`. Each entry is the map on `S` (as output tuples,
    /// flattened) and representative constants (indices into `S`).
    pub(crate) fn translations(&self, op: usize, hole: usize) -> Option<Vec<(Vec<Elem>, Vec<u32>)>> {
        let automata = self.automata(op, Some(hole))?;
        let finals = self.reachable(&automata);
        let w = self.width;
        let n = self.len();
        let mut out = Vec::with_capacity(finals.len());
        for (leaf, rep) in finals {
            let mut map = Vec::with_capacity(n * w);
            for x in 0..n {
                for l in 0..w {
                    let slot = self.slots[x * w + l];
                    map.push(automata[l].leaves[leaf[l] as usize][slot as usize]);
                }
            }
            out.push((map, rep));
        }
        Some(out)
    }
}
