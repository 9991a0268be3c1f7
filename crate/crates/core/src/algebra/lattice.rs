//! Finite lattices given by join/meet tables, congruence lattices, and the
//! meet-semidistributive law.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::congruence::CongruenceEngine;
use super::{AlgebraError, Budget, BudgetKind, Congruence, Elem, FiniteAlgebra, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteLattice {
    pub join: Vec<Vec<u32>>,
    pub meet: Vec<Vec<u32>>,
}

/// `x ∧ y = x ∧ z` but `x ∧ (y ∨ z) ≠ x ∧ y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SdWitness {
    pub x: u32,
    pub y: u32,
    pub z: u32,
}

impl FiniteLattice {
    pub fn new(join: Vec<Vec<u32>>, meet: Vec<Vec<u32>>) -> std::result::Result<Self, String> {
        let l = FiniteLattice { join, meet };
        l.check_axioms()?;
        Ok(l)
    }

    pub fn len(&self) -> usize {
        self.join.len()
    }

    pub fn is_empty(&self) -> bool {
        self.join.is_empty()
    }

    pub fn leq(&self, x: u32, y: u32) -> bool {
        self.meet[x as usize][y as usize] == x
    }

    /// The `n`-element chain `0 < 1 < .. < n-1`.
    pub fn chain(n: usize) -> Self {
        let t = |f: fn(u32, u32) -> u32| -> Vec<Vec<u32>> {
            (0..n as u32).map(|x| (0..n as u32).map(|y| f(x, y)).collect()).collect()
        };
        FiniteLattice {
            join: t(u32::max),
            meet: t(u32::min),
        }
    }

    /// `M3`: bottom 0, atoms 1, 2, 3, top 4.
    pub fn m3() -> Self {
        let n = 5u32;
        let mut join = vec![vec![0; 5]; 5];
        let mut meet = vec![vec![0; 5]; 5];
        for x in 0..n {
            for y in 0..n {
                let (j, m) = if x == y {
                    (x, x)
                } else if x == 0 || y == 4 {
                    (y, x)
                } else if y == 0 || x == 4 {
                    (x, y)
                } else {
                    (4, 0)
                };
                join[x as usize][y as usize] = j;
                meet[x as usize][y as usize] = m;
            }
        }
        FiniteLattice { join, meet }
    }

    /// Idempotence, commutativity, associativity and absorption.
    pub fn check_axioms(&self) -> std::result::Result<(), String> {
        let n = self.len();
        if self.meet.len() != n
            || self.join.iter().chain(&self.meet).any(|row| row.len() != n)
            || self.join.iter().chain(&self.meet).flatten().any(|&v| v as usize >= n)
        {
            return Err("tables must be square with entries in range".into());
        }
        let (j, m) = (&self.join, &self.meet);
        for x in 0..n {
            if j[x][x] != x as u32 || m[x][x] != x as u32 {
                return Err(format!("idempotence fails at {x}"));
            }
            for y in 0..n {
                if j[x][y] != j[y][x] || m[x][y] != m[y][x] {
                    return Err(format!("commutativity fails at ({x}, {y})"));
                }
                if m[x][j[x][y] as usize] != x as u32 || j[x][m[x][y] as usize] != x as u32 {
                    return Err(format!("absorption fails at ({x}, {y})"));
                }
                for z in 0..n {
                    if j[j[x][y] as usize][z] != j[x][j[y][z] as usize]
                        || m[m[x][y] as usize][z] != m[x][m[y][z] as usize]
                    {
                        return Err(format!("associativity fails at ({x}, {y}, {z})"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Checks `x ∧ y = x ∧ z ⇒ x ∧ y = x ∧ (y ∨ z)` for all triples.
///
/// For each `x`, the elements `y` are grouped by `x ∧ y`; the law holds for a
/// group exactly when `x` meets the join of the whole group in the common
/// value, so only failing groups are searched pairwise.
pub fn is_meet_semidistributive(lattice: &FiniteLattice) -> std::result::Result<(), SdWitness> {
    let n = lattice.len() as u32;
    let (j, m) = (&lattice.join, &lattice.meet);
    for x in 0..n {
        let mut groups: Vec<Vec<u32>> = vec![Vec::new(); n as usize];
        for y in 0..n {
            groups[m[x as usize][y as usize] as usize].push(y);
        }
        for (v, group) in groups.iter().enumerate() {
            let Some((&first, rest)) = group.split_first() else {
                continue;
            };
            let top = rest.iter().fold(first, |acc, &y| j[acc as usize][y as usize]);
            if m[x as usize][top as usize] == v as u32 {
                continue;
            }
            for (i, &y) in group.iter().enumerate() {
                for &z in &group[i..] {
                    if m[x as usize][j[y as usize][z as usize] as usize] != v as u32 {
                        return Err(SdWitness { x, y, z });
                    }
                }
            }
            unreachable!("a failing group contains a failing pair");
        }
    }
    Ok(())
}

/// `Con(A)` with its congruences in a canonical order (`Δ` first, `∇` last,
/// otherwise by decreasing block count).
#[derive(Debug, Clone)]
pub struct CongruenceLattice {
    pub congruences: Vec<Congruence>,
    pub lattice: FiniteLattice,
}

impl CongruenceLattice {
    pub fn len(&self) -> usize {
        self.congruences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.congruences.is_empty()
    }

    pub fn position(&self, c: &Congruence) -> Option<usize> {
        self.congruences.iter().position(|d| d == c)
    }
}

/// All congruences of `alg`: the closure of `Δ` and the principal
/// congruences under binary join. Fails once more than `size_cap`
/// congruences are found.
pub fn congruence_lattice(alg: &FiniteAlgebra, size_cap: usize, budget: &Budget) -> Result<CongruenceLattice> {
    let engine = CongruenceEngine::new(alg, budget)?;
    congruence_lattice_with(&engine, size_cap, budget)
}

pub(crate) fn congruence_lattice_with(
    engine: &CongruenceEngine,
    size_cap: usize,
    budget: &Budget,
) -> Result<CongruenceLattice> {
    let n = engine.size();
    let mut list: Vec<Congruence> = vec![Congruence::identity(n)];
    let mut index: HashMap<Congruence, usize> = HashMap::from([(list[0].clone(), 0)]);
    let push = |c: Congruence, list: &mut Vec<Congruence>, index: &mut HashMap<Congruence, usize>| -> Result<()> {
        if !index.contains_key(&c) {
            index.insert(c.clone(), list.len());
            list.push(c);
            if list.len() > size_cap {
                return Err(AlgebraError::BudgetExceeded {
                    kind: BudgetKind::Elements,
                    limit: size_cap as u64,
                });
            }
        }
        Ok(())
    };
    for x in 0..n as Elem {
        budget.check_time()?;
        for y in x + 1..n as Elem {
            push(engine.principal(x, y), &mut list, &mut index)?;
        }
    }
    let mut i = 0;
    while i < list.len() {
        budget.check_time()?;
        for k in 0..i {
            let joined = list[i].join(&list[k]);
            push(joined, &mut list, &mut index)?;
        }
        i += 1;
    }
    list.sort_by(|a, b| b.num_blocks().cmp(&a.num_blocks()).then_with(|| a.cmp(b)));
    let index: HashMap<&Congruence, u32> = list.iter().enumerate().map(|(i, c)| (c, i as u32)).collect();
    let m = list.len();
    let mut join = vec![vec![0; m]; m];
    let mut meet = vec![vec![0; m]; m];
    for a in 0..m {
        for b in a..m {
            let jv = index[&list[a].join(&list[b])];
            let mv = *index
                .get(&list[a].meet(&list[b]))
                .expect("congruences are closed under intersection");
            join[a][b] = jv;
            join[b][a] = jv;
            meet[a][b] = mv;
            meet[b][a] = mv;
        }
    }
    Ok(CongruenceLattice {
        congruences: list,
        lattice: FiniteLattice { join, meet },
    })
}
