//! Fundamental translations: unary polynomials obtained by fixing all but one
//! argument of a basic operation with constants from the universe.

use std::collections::HashMap;

use serde::Serialize;

use super::residual::TupleSet;
use super::{AlgebraError, Budget, BudgetKind, Elem, FiniteAlgebra, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranslationStep {
    #[serde(rename = "op")]
    pub symbol: String,
    #[serde(skip)]
    pub op: usize,
    pub position: usize,
    /// Constants for every argument except `position`, in argument order.
    pub constants: Vec<Elem>,
}

impl TranslationStep {
    pub fn new(alg: &FiniteAlgebra, symbol: &str, position: usize, constants: Vec<Elem>) -> Result<Self> {
        let op = alg
            .op_index(symbol)
            .ok_or_else(|| AlgebraError::UnknownSymbol(symbol.to_string()))?;
        let arity = alg.ops()[op].arity;
        if position >= arity || constants.len() + 1 != arity {
            return Err(AlgebraError::ArityMismatch {
                symbol: symbol.to_string(),
                expected: arity,
                got: constants.len() + 1,
            });
        }
        for &c in &constants {
            alg.check_element(c)?;
        }
        Ok(TranslationStep {
            symbol: symbol.to_string(),
            op,
            position,
            constants,
        })
    }

    pub fn arguments(&self, x: Elem) -> Vec<Elem> {
        let mut args = self.constants.clone();
        args.insert(self.position, x);
        args
    }

    pub fn apply(&self, alg: &FiniteAlgebra, x: Elem) -> Elem {
        alg.apply(self.op, &self.arguments(x))
    }
}

/// A translation together with its values on the whole universe.
#[derive(Debug, Clone)]
pub struct Translation {
    pub step: TranslationStep,
    pub map: Vec<Elem>,
}

impl Translation {
    pub fn is_constant(&self) -> bool {
        self.map.windows(2).all(|w| w[0] == w[1])
    }
}

/// All fundamental translations of an algebra, up to equality as maps.
///
/// `entries` holds one translation per distinct map for each
/// `(operation, position)`; `distinct` indexes the first entry of each
/// distinct map overall.
#[derive(Debug, Clone)]
pub struct TranslationSet {
    size: usize,
    entries: Vec<Translation>,
    distinct: Vec<usize>,
}

impl TranslationSet {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entries(&self) -> &[Translation] {
        &self.entries
    }

    pub fn distinct(&self) -> impl Iterator<Item = &Translation> + '_ {
        self.distinct.iter().map(move |&i| &self.entries[i])
    }

    pub fn distinct_maps(&self) -> Vec<&[Elem]> {
        self.distinct.iter().map(|&i| self.entries[i].map.as_slice()).collect()
    }

    pub fn for_op(&self, op: usize) -> impl Iterator<Item = &Translation> + '_ {
        self.entries.iter().filter(move |t| t.step.op == op)
    }

    pub fn len(&self) -> usize {
        self.distinct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distinct.is_empty()
    }

    fn from_entries(size: usize, entries: Vec<Translation>) -> Self {
        let mut seen: HashMap<&[Elem], ()> = HashMap::new();
        let mut distinct = Vec::new();
        for (i, t) in entries.iter().enumerate() {
            if seen.insert(t.map.as_slice(), ()).is_none() {
                distinct.push(i);
            }
        }
        TranslationSet {
            size,
            entries,
            distinct,
        }
    }
}

/// Enumerates every fundamental translation of `alg`.
///
/// Algebras embedded in a power with small coordinate value sets go through
/// the coordinatewise kernel; otherwise constants are enumerated directly,
/// subject to `budget.max_translations`.
pub fn enumerate_translations(alg: &FiniteAlgebra, budget: &Budget) -> Result<TranslationSet> {
    if let Some(set) = coordinatewise_translations(alg, budget)? {
        return Ok(set);
    }
    naive_translations(alg, budget)
}

fn coordinatewise_translations(alg: &FiniteAlgebra, budget: &Budget) -> Result<Option<TranslationSet>> {
    let Some(product) = alg.product() else {
        return Ok(None);
    };
    let w = product.width;
    let mut coords = vec![0; alg.size() * w];
    for x in 0..alg.size() {
        product.write_coords(x as Elem, &mut coords[x * w..(x + 1) * w]);
    }
    let set = TupleSet::new(&product.base, w, &coords);
    let mut entries = Vec::new();
    for (op, spec) in alg.ops().iter().enumerate() {
        for hole in 0..spec.arity {
            budget.check_time()?;
            let Some(found) = set.translations(op, hole) else {
                return Ok(None);
            };
            for (flat, rep) in found {
                let map: Vec<Elem> = flat
                    .chunks(w)
                    .map(|t| product.index_of(t).expect("translations stay in the subalgebra"))
                    .collect();
                entries.push(Translation {
                    step: TranslationStep {
                        symbol: spec.symbol.clone(),
                        op,
                        position: hole,
                        constants: rep,
                    },
                    map,
                });
                budget.check(BudgetKind::Translations, entries.len())?;
            }
        }
    }
    Ok(Some(TranslationSet::from_entries(alg.size(), entries)))
}

/// Direct enumeration of constant tuples; exposed so the coordinatewise
/// kernel can be cross-checked.
pub(crate) fn naive_translations(alg: &FiniteAlgebra, budget: &Budget) -> Result<TranslationSet> {
    let n = alg.size();
    let mut work: u128 = 0;
    for op in alg.ops() {
        if op.arity > 0 {
            work += op.arity as u128 * (n as u128).pow(op.arity as u32 - 1);
        }
    }
    if work > budget.max_translations as u128 {
        return Err(AlgebraError::BudgetExceeded {
            kind: BudgetKind::Translations,
            limit: budget.max_translations as u64,
        });
    }
    let mut entries = Vec::new();
    for (op, spec) in alg.ops().iter().enumerate() {
        let k = spec.arity;
        for position in 0..k {
            budget.check_time()?;
            let mut seen: HashMap<Vec<Elem>, ()> = HashMap::new();
            let mut constants = vec![0 as Elem; k - 1];
            let mut args = vec![0 as Elem; k];
            loop {
                let mut map = Vec::with_capacity(n);
                for x in 0..n as Elem {
                    args[..position].copy_from_slice(&constants[..position]);
                    args[position] = x;
                    args[position + 1..].copy_from_slice(&constants[position..]);
                    map.push(alg.apply(op, &args));
                }
                if seen.insert(map.clone(), ()).is_none() {
                    entries.push(Translation {
                        step: TranslationStep {
                            symbol: spec.symbol.clone(),
                            op,
                            position,
                            constants: constants.clone(),
                        },
                        map,
                    });
                }
                let mut p = constants.len();
                let advanced = loop {
                    if p == 0 {
                        break false;
                    }
                    p -= 1;
                    constants[p] += 1;
                    if (constants[p] as usize) < n {
                        break true;
                    }
                    constants[p] = 0;
                };
                if !advanced {
                    break;
                }
            }
        }
    }
    Ok(TranslationSet::from_entries(n, entries))
}

/// Whether `op` returns `zero` whenever argument `position` is `zero`.
pub fn is_zero_absorbing(alg: &FiniteAlgebra, op: usize, position: usize, zero: Elem) -> bool {
    let k = alg.ops()[op].arity;
    let n = alg.size() as Elem;
    let mut args = vec![0 as Elem; k];
    args[position] = zero;
    loop {
        if alg.apply(op, &args) != zero {
            return false;
        }
        let mut p = k;
        loop {
            if p == 0 {
                return true;
            }
            p -= 1;
            if p == position {
                continue;
            }
            args[p] += 1;
            if args[p] < n {
                break;
            }
            args[p] = 0;
        }
    }
}
