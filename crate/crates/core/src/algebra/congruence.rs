//! Congruence generation by closing pairs under fundamental translations.

use std::collections::VecDeque;

use super::translation::{enumerate_translations, TranslationSet};
use super::{Budget, Congruence, Elem, FiniteAlgebra, Result, UnionFind};

/// Congruence generation against a precomputed translation set.
///
/// Uses the classical union-find closure: every pair that merges two blocks
/// is queued once and pushed through every translation. The relation is
/// closed under translations and transitive, hence a congruence.
pub struct CongruenceEngine {
    size: usize,
    translations: TranslationSet,
}

impl CongruenceEngine {
    pub fn new(alg: &FiniteAlgebra, budget: &Budget) -> Result<Self> {
        Ok(Self::with_translations(alg, enumerate_translations(alg, budget)?))
    }

    pub fn with_translations(alg: &FiniteAlgebra, translations: TranslationSet) -> Self {
        CongruenceEngine {
            size: alg.size(),
            translations,
        }
    }

    pub fn translations(&self) -> &TranslationSet {
        &self.translations
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn principal(&self, a: Elem, b: Elem) -> Congruence {
        self.from_pairs(&[(a, b)])
    }

    pub fn from_pairs(&self, pairs: &[(Elem, Elem)]) -> Congruence {
        let maps = self.translations.distinct_maps();
        let mut uf = UnionFind::new(self.size);
        let mut queue = VecDeque::new();
        for &(x, y) in pairs {
            if uf.union(x, y) {
                queue.push_back((x, y));
            }
        }
        while let Some((x, y)) = queue.pop_front() {
            for map in &maps {
                let (u, v) = (map[x as usize], map[y as usize]);
                if uf.union(u, v) {
                    queue.push_back((u, v));
                }
            }
        }
        uf.into_congruence()
    }

    /// Every translation maps related pairs to related pairs.
    pub fn is_compatible(&self, cong: &Congruence) -> bool {
        is_compatible(&self.translations, cong)
    }
}

pub fn is_compatible(translations: &TranslationSet, cong: &Congruence) -> bool {
    let pairs = cong.nontrivial_pairs();
    translations.distinct().all(|t| {
        pairs
            .iter()
            .all(|&(x, y)| cong.related(t.map[x as usize], t.map[y as usize]))
    })
}

/// `Cg(a, b)`: the least congruence relating `a` and `b`.
pub fn principal_congruence(alg: &FiniteAlgebra, a: Elem, b: Elem) -> Result<Congruence> {
    alg.check_element(a)?;
    alg.check_element(b)?;
    Ok(CongruenceEngine::new(alg, &Budget::default())?.principal(a, b))
}

/// The least congruence containing every pair.
pub fn congruence_from_pairs(alg: &FiniteAlgebra, pairs: &[(Elem, Elem)]) -> Result<Congruence> {
    for &(x, y) in pairs {
        alg.check_element(x)?;
        alg.check_element(y)?;
    }
    Ok(CongruenceEngine::new(alg, &Budget::default())?.from_pairs(pairs))
}
