//! Translation depth of pairs and Maltsev depth.
//!
//! [`PairDepthGraph`] is a layered breadth-first search over unordered pairs:
//! layer `d + 1` holds the pairs `{t(x), t(y)}` for fundamental translations
//! `t` and pairs `{x, y}` of layer `d` that were not seen before. The depth of
//! a pair is therefore the least number of fundamental translations whose
//! composite `λ` has `{λ(a), λ(b)} = {x, y}`.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use super::translation::{enumerate_translations, TranslationSet, TranslationStep};
use super::{Budget, BudgetKind, Elem, FiniteAlgebra, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PairRecord {
    pub x: Elem,
    pub y: Elem,
    pub depth: u32,
    #[serde(skip)]
    parent: Option<usize>,
    #[serde(skip)]
    via: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct PairDepthGraph {
    source: (Elem, Elem),
    cap: u32,
    records: Vec<PairRecord>,
    index: HashMap<(Elem, Elem), usize>,
    steps: Vec<TranslationStep>,
    exhausted: bool,
}

#[inline]
fn unordered(x: Elem, y: Elem) -> (Elem, Elem) {
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

impl PairDepthGraph {
    pub fn build(
        translations: &TranslationSet,
        a: Elem,
        b: Elem,
        cap: u32,
        budget: &Budget,
    ) -> Result<Self> {
        let maps: Vec<&[Elem]> = translations.distinct_maps();
        let steps: Vec<TranslationStep> = translations.distinct().map(|t| t.step.clone()).collect();
        let (x0, y0) = unordered(a, b);
        let mut graph = PairDepthGraph {
            source: (a, b),
            cap,
            records: vec![PairRecord {
                x: x0,
                y: y0,
                depth: 0,
                parent: None,
                via: None,
            }],
            index: HashMap::from([((x0, y0), 0)]),
            steps,
            exhausted: false,
        };
        let mut frontier: Vec<usize> = vec![0];
        for depth in 0..cap {
            budget.check_time()?;
            let expandable: Vec<usize> = frontier
                .iter()
                .copied()
                .filter(|&i| graph.records[i].x != graph.records[i].y)
                .collect();
            if expandable.is_empty() {
                break;
            }
            let seen = &graph.index;
            let records = &graph.records;
            let expand = |&i: &usize| -> Vec<((Elem, Elem), usize)> {
                let PairRecord { x, y, .. } = records[i];
                let mut local: HashMap<(Elem, Elem), ()> = HashMap::new();
                let mut out = Vec::new();
                for (t, map) in maps.iter().enumerate() {
                    let q = unordered(map[x as usize], map[y as usize]);
                    if !seen.contains_key(&q) && local.insert(q, ()).is_none() {
                        out.push((q, t));
                    }
                }
                out
            };
            let candidates: Vec<Vec<((Elem, Elem), usize)>> = if expandable.len() * maps.len() > 1 << 15 {
                expandable.par_iter().map(expand).collect()
            } else {
                expandable.iter().map(expand).collect()
            };
            let mut next = Vec::new();
            for (&parent, found) in expandable.iter().zip(candidates) {
                for (q, via) in found {
                    if graph.index.contains_key(&q) {
                        continue;
                    }
                    let id = graph.records.len();
                    graph.records.push(PairRecord {
                        x: q.0,
                        y: q.1,
                        depth: depth + 1,
                        parent: Some(parent),
                        via: Some(via),
                    });
                    graph.index.insert(q, id);
                    next.push(id);
                }
            }
            budget.check(BudgetKind::Pairs, graph.records.len())?;
            frontier = next;
        }
        graph.exhausted = frontier
            .iter()
            .all(|&i| graph.records[i].x == graph.records[i].y);
        Ok(graph)
    }

    pub fn source(&self) -> (Elem, Elem) {
        self.source
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// True when the search ran out of new pairs before reaching the cap, so
    /// every reachable pair is recorded.
    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn depth(&self, x: Elem, y: Elem) -> Option<u32> {
        self.index.get(&unordered(x, y)).map(|&i| self.records[i].depth)
    }

    /// Records in discovery order (nondecreasing depth).
    pub fn records(&self) -> &[PairRecord] {
        &self.records
    }

    pub fn max_depth(&self) -> u32 {
        self.records.last().map_or(0, |r| r.depth)
    }

    /// Translations (innermost first) whose composite maps the source pair
    /// onto `{x, y}`.
    pub fn witness(&self, x: Elem, y: Elem) -> Option<Vec<TranslationStep>> {
        let mut i = *self.index.get(&unordered(x, y))?;
        let mut chain = Vec::new();
        while let (Some(parent), Some(via)) = (self.records[i].parent, self.records[i].via) {
            chain.push(self.steps[via].clone());
            i = parent;
        }
        chain.reverse();
        Some(chain)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut pairs: Vec<&PairRecord> = self.records.iter().collect();
        pairs.sort_by_key(|r| (r.x, r.y));
        serde_json::json!({
            "source": [self.source.0, self.source.1],
            "cap": self.cap,
            "pairs": pairs,
        })
    }
}

pub fn pair_depth_graph(alg: &FiniteAlgebra, a: Elem, b: Elem, cap: u32, budget: &Budget) -> Result<PairDepthGraph> {
    alg.check_element(a)?;
    alg.check_element(b)?;
    let translations = enumerate_translations(alg, budget)?;
    PairDepthGraph::build(&translations, a, b, cap, budget)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DepthResult {
    /// `path` runs from `c` to `d`; consecutive elements are joined by pair
    /// edges of depth at most `depth`.
    Reached { depth: u32, path: Vec<Elem> },
    Unreached,
}

impl DepthResult {
    pub fn depth(&self) -> Option<u32> {
        match self {
            DepthResult::Reached { depth, .. } => Some(*depth),
            DepthResult::Unreached => None,
        }
    }
}

impl PairDepthGraph {
    /// Minimax path from `c` to `d` in the graph whose edges are the recorded
    /// pairs weighted by depth. Among optimal paths, the one with the fewest
    /// edges and then the lexicographically smallest node sequence is
    /// returned.
    pub fn minimax_path(&self, c: Elem, d: Elem) -> DepthResult {
        if c == d {
            return DepthResult::Reached {
                depth: 0,
                path: vec![c],
            };
        }
        let mut adj: HashMap<Elem, Vec<(Elem, u32)>> = HashMap::new();
        for r in &self.records {
            if r.x != r.y {
                adj.entry(r.x).or_default().push((r.y, r.depth));
                adj.entry(r.y).or_default().push((r.x, r.depth));
            }
        }
        for list in adj.values_mut() {
            list.sort_unstable();
        }
        // Bottleneck Dijkstra: path cost is the largest edge weight.
        let mut best: HashMap<Elem, u32> = HashMap::from([(c, 0)]);
        let mut heap = BinaryHeap::from([Reverse((0u32, c))]);
        while let Some(Reverse((w, u))) = heap.pop() {
            if best.get(&u).is_some_and(|&b| b < w) {
                continue;
            }
            if u == d {
                break;
            }
            for &(v, e) in adj.get(&u).map_or(&[][..], Vec::as_slice) {
                let cand = w.max(e);
                if best.get(&v).is_none_or(|&b| cand < b) {
                    best.insert(v, cand);
                    heap.push(Reverse((cand, v)));
                }
            }
        }
        let Some(&bound) = best.get(&d) else {
            return DepthResult::Unreached;
        };
        // Hop distances to `d` inside the subgraph of edges with weight ≤ bound,
        // then a greedy walk from `c` along the smallest admissible neighbour.
        let mut hops: HashMap<Elem, usize> = HashMap::from([(d, 0)]);
        let mut queue = VecDeque::from([d]);
        while let Some(u) = queue.pop_front() {
            let h = hops[&u];
            for &(v, e) in adj.get(&u).map_or(&[][..], Vec::as_slice) {
                if e <= bound && !hops.contains_key(&v) {
                    hops.insert(v, h + 1);
                    queue.push_back(v);
                }
            }
        }
        let mut path = vec![c];
        let mut u = c;
        while u != d {
            let h = hops[&u];
            u = adj[&u]
                .iter()
                .filter(|&&(v, e)| e <= bound && hops.get(&v) == Some(&(h - 1)))
                .map(|&(v, _)| v)
                .min()
                .expect("hop distances are consistent");
            path.push(u);
        }
        DepthResult::Reached { depth: bound, path }
    }
}

/// Least `M` such that `(c, d)` is linked by a Maltsev chain from `(a, b)`
/// whose polynomials each compose at most `M` fundamental translations,
/// searching up to `cap`.
pub fn maltsev_depth(
    alg: &FiniteAlgebra,
    generator: (Elem, Elem),
    target: (Elem, Elem),
    cap: u32,
    budget: &Budget,
) -> Result<DepthResult> {
    alg.check_element(target.0)?;
    alg.check_element(target.1)?;
    let graph = pair_depth_graph(alg, generator.0, generator.1, cap, budget)?;
    Ok(graph.minimax_path(target.0, target.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::fixtures::semilattice2;
    use crate::algebra::{CongruenceEngine, Operation};
    use proptest::prelude::*;

    fn cycle(n: usize) -> FiniteAlgebra {
        FiniteAlgebra::new(n, vec![Operation::tabulate("s", 1, n, |a| (a[0] + 1) % n as Elem)]).unwrap()
    }

    #[test]
    fn source_has_depth_zero() {
        let s = semilattice2();
        let g = pair_depth_graph(&s, 1, 0, 3, &Budget::default()).unwrap();
        assert_eq!(g.depth(0, 1), Some(0));
        assert_eq!(g.depth(0, 0), Some(1));
        assert!(g.is_exhausted());
    }

    #[test]
    fn successor_cycle_depths() {
        // In Z_6 with x+1, the pair {0,1} reaches {k, k+1} after k steps.
        let c = cycle(6);
        let g = pair_depth_graph(&c, 0, 1, 10, &Budget::default()).unwrap();
        for k in 0..6u32 {
            assert_eq!(g.depth(k, (k + 1) % 6), Some(k.min(6)));
        }
        assert_eq!(g.len(), 6);
        assert_eq!(g.witness(3, 4).unwrap().len(), 3);
        // (0,3) is linked by 0-1-2-3 with edge depths 0, 1, 2.
        assert_eq!(
            g.minimax_path(0, 3),
            DepthResult::Reached {
                depth: 2,
                path: vec![0, 1, 2, 3]
            }
        );
        // 0-5 directly has depth 5; around the other way the max is 4.
        assert_eq!(g.minimax_path(0, 5).depth(), Some(4));
        assert_eq!(g.minimax_path(2, 2).depth(), Some(0));
    }

    #[test]
    fn cap_limits_search() {
        let c = cycle(6);
        let g = pair_depth_graph(&c, 0, 1, 2, &Budget::default()).unwrap();
        assert_eq!(g.max_depth(), 2);
        assert!(!g.is_exhausted());
        assert_eq!(g.minimax_path(0, 4), DepthResult::Unreached);
        assert_eq!(
            maltsev_depth(&c, (0, 1), (0, 1), 0, &Budget::default()).unwrap().depth(),
            Some(0)
        );
    }

    #[test]
    fn json_shape() {
        let s = semilattice2();
        let g = pair_depth_graph(&s, 0, 1, 2, &Budget::default()).unwrap();
        assert_eq!(
            g.to_json().to_string(),
            r#"{"cap":2,"pairs":[{"depth":1,"x":0,"y":0},{"depth":0,"x":0,"y":1}],"source":[0,1]}"#
        );
    }

    #[test]
    fn pair_budget() {
        let c = cycle(12);
        let budget = Budget {
            max_pairs: 4,
            ..Budget::default()
        };
        assert!(pair_depth_graph(&c, 0, 1, 20, &budget).unwrap_err().is_budget());
    }

    fn arb_algebra() -> impl Strategy<Value = FiniteAlgebra> {
        (2usize..7).prop_flat_map(|n| {
            (
                Just(n),
                proptest::collection::vec(0..n as Elem, n * n),
                proptest::collection::vec(0..n as Elem, n),
            )
                .prop_map(|(n, bin, un)| {
                    FiniteAlgebra::new(n, vec![Operation::dense("f", 2, bin), Operation::dense("g", 1, un)])
                        .unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn depth_graph_invariants(alg in arb_algebra(), a in 0u32..7, b in 0u32..7, cap in 0u32..6) {
            let n = alg.size() as Elem;
            let (a, b) = (a % n, b % n);
            let budget = Budget::default();
            let engine = CongruenceEngine::new(&alg, &budget).unwrap();
            let small = PairDepthGraph::build(engine.translations(), a, b, cap, &budget).unwrap();
            let large = PairDepthGraph::build(engine.translations(), a, b, cap + 3, &budget).unwrap();
            let cg = engine.principal(a, b);
            for r in small.records() {
                // A larger cap never changes assigned depths.
                prop_assert_eq!(large.depth(r.x, r.y), Some(r.depth));
                prop_assert!(r.depth <= cap);
                prop_assert!(cg.related(r.x, r.y));
                // The witness chain reproduces the pair.
                let chain = small.witness(r.x, r.y).unwrap();
                prop_assert_eq!(chain.len() as u32, r.depth);
                let (mut u, mut v) = (a, b);
                for step in &chain {
                    u = step.apply(&alg, u);
                    v = step.apply(&alg, v);
                }
                prop_assert_eq!(unordered(u, v), (r.x, r.y));
            }
            for x in 0..n {
                for y in 0..n {
                    match small.minimax_path(x, y) {
                        DepthResult::Reached { depth, path } => {
                            prop_assert!(cg.related(x, y));
                            if let Some(direct) = small.depth(x, y) {
                                prop_assert!(depth <= direct);
                            }
                            prop_assert_eq!(path.first(), Some(&x));
                            prop_assert_eq!(path.last(), Some(&y));
                        }
                        DepthResult::Unreached => {
                            if large.is_exhausted() && small.is_exhausted() {
                                prop_assert!(!cg.related(x, y));
                            }
                        }
                    }
                }
            }
            // With an uncapped search, components coincide with Cg-blocks.
            let full = PairDepthGraph::build(engine.translations(), a, b, n * n, &budget).unwrap();
            prop_assert!(full.is_exhausted());
            for x in 0..n {
                for y in 0..n {
                    prop_assert_eq!(full.minimax_path(x, y) != DepthResult::Unreached, cg.related(x, y));
                }
            }
        }
    }
}
