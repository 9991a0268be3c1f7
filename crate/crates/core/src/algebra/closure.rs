//! Subuniverse generation.

use std::collections::BTreeSet;
use std::sync::Arc;

use indexmap::IndexSet;

use super::residual::TupleSet;
use super::{AlgebraError, Budget, BudgetKind, Elem, FiniteAlgebra, Result};

/// Least subuniverse of `alg` containing `gens`, sorted.
///
/// Algebras embedded in a power are closed coordinatewise; others use the
/// worklist closure.
pub fn generate_subuniverse(alg: &FiniteAlgebra, gens: &[Elem], budget: &Budget) -> Result<Vec<Elem>> {
    if gens.is_empty() {
        return Err(AlgebraError::NoGenerators);
    }
    for &g in gens {
        alg.check_element(g)?;
    }
    if let Some(product) = alg.product() {
        let tuples: Vec<Vec<Elem>> = gens.iter().map(|&g| product.coords(g)).collect();
        if let Some(closed) = close_tuples_coordinatewise(&product.base, product.width, tuples, budget)? {
            let mut out: Vec<Elem> = closed
                .iter()
                .map(|t| product.index_of(t).expect("closure stays in the power"))
                .collect();
            out.sort_unstable();
            return Ok(out);
        }
    }
    generate_subuniverse_worklist(alg, gens, budget)
}

/// Worklist closure with a dense membership bitmap. Each element is combined
/// with all earlier ones exactly once.
pub fn generate_subuniverse_worklist(
    alg: &FiniteAlgebra,
    gens: &[Elem],
    budget: &Budget,
) -> Result<Vec<Elem>> {
    if gens.is_empty() {
        return Err(AlgebraError::NoGenerators);
    }
    for &g in gens {
        alg.check_element(g)?;
    }
    let mut member = vec![false; alg.size()];
    let mut items: Vec<Elem> = Vec::new();
    for &g in gens {
        if !member[g as usize] {
            member[g as usize] = true;
            items.push(g);
        }
    }
    worklist(
        &mut items,
        alg.ops().iter().map(|o| o.arity).collect(),
        |op, args| alg.apply(op, args),
        |x| {
            let fresh = !member[*x as usize];
            member[*x as usize] = true;
            fresh
        },
        budget,
    )?;
    items.sort_unstable();
    Ok(items)
}

/// Semi-naive closure: processes `items` in order; for item `i`, applies every
/// operation to each argument tuple over `items[..=i]` that uses `i`.
fn worklist<T: Clone>(
    items: &mut Vec<T>,
    arities: Vec<usize>,
    apply: impl Fn(usize, &[T]) -> T,
    mut insert: impl FnMut(&T) -> bool,
    budget: &Budget,
) -> Result<()> {
    let mut args: Vec<T> = Vec::new();
    let mut idx: Vec<usize> = Vec::new();
    let mut i = 0;
    for (op, &k) in arities.iter().enumerate() {
        if k == 0 {
            let v = apply(op, &[]);
            if insert(&v) {
                items.push(v);
            }
        }
    }
    while i < items.len() {
        budget.check_time()?;
        for (op, &k) in arities.iter().enumerate() {
            if k == 0 {
                continue;
            }
            // The first occurrence of `i` is at position `first`: earlier
            // positions range over `..i`, later ones over `..=i`.
            for first in 0..k {
                if i == 0 && first > 0 {
                    break;
                }
                idx.clear();
                idx.resize(k, 0);
                idx[first] = i;
                loop {
                    args.clear();
                    args.extend(idx.iter().map(|&j| items[j].clone()));
                    let v = apply(op, &args);
                    if insert(&v) {
                        items.push(v);
                        budget.check(BudgetKind::Elements, items.len())?;
                    }
                    // Odometer over the free positions.
                    let mut p = k;
                    let advanced = loop {
                        if p == 0 {
                            break false;
                        }
                        p -= 1;
                        if p == first {
                            continue;
                        }
                        let limit = if p < first { i } else { i + 1 };
                        idx[p] += 1;
                        if idx[p] < limit {
                            break true;
                        }
                        idx[p] = 0;
                    };
                    if !advanced {
                        break;
                    }
                }
            }
        }
        i += 1;
    }
    Ok(())
}

/// Closes a set of tuples of `base^width` under coordinatewise operations.
/// Returns `None` if the coordinatewise kernel cannot be used (some
/// coordinate value set is too large).
fn close_tuples_coordinatewise(
    base: &FiniteAlgebra,
    width: usize,
    gens: Vec<Vec<Elem>>,
    budget: &Budget,
) -> Result<Option<BTreeSet<Vec<Elem>>>> {
    let mut current: BTreeSet<Vec<Elem>> = gens.into_iter().collect();
    loop {
        budget.check_time()?;
        let flat: Vec<Elem> = current.iter().flatten().copied().collect();
        let set = TupleSet::new(base, width, &flat);
        let mut fresh = Vec::new();
        for op in 0..base.ops().len() {
            let Some(image) = set.image(op) else {
                return Ok(None);
            };
            fresh.extend(image.into_iter().filter(|t| !current.contains(t)));
        }
        if fresh.is_empty() {
            return Ok(Some(current));
        }
        current.extend(fresh);
        budget.check(BudgetKind::Elements, current.len())?;
    }
}

fn close_tuples_worklist(
    base: &FiniteAlgebra,
    width: usize,
    gens: Vec<Vec<Elem>>,
    budget: &Budget,
) -> Result<BTreeSet<Vec<Elem>>> {
    let mut seen: IndexSet<Vec<Elem>> = IndexSet::new();
    let mut items = Vec::new();
    for g in gens {
        if seen.insert(g.clone()) {
            items.push(g);
        }
    }
    worklist(
        &mut items,
        base.ops().iter().map(|o| o.arity).collect(),
        |op, args: &[Vec<Elem>]| coordinatewise(base, op, args, width),
        |t| seen.insert(t.clone()),
        budget,
    )?;
    Ok(items.into_iter().collect())
}

pub(crate) fn coordinatewise(base: &FiniteAlgebra, op: usize, args: &[Vec<Elem>], width: usize) -> Vec<Elem> {
    let mut col = vec![0; args.len()];
    (0..width)
        .map(|l| {
            for (c, a) in col.iter_mut().zip(args) {
                *c = a[l];
            }
            base.apply(op, &col)
        })
        .collect()
}

/// The subalgebra of `base^width` generated by `gens`, elements indexed in
/// lexicographic tuple order.
pub fn generate_subpower(
    base: &Arc<FiniteAlgebra>,
    width: usize,
    gens: &[Vec<Elem>],
    budget: &Budget,
) -> Result<FiniteAlgebra> {
    if gens.is_empty() {
        return Err(AlgebraError::NoGenerators);
    }
    for g in gens {
        if g.len() != width {
            return Err(AlgebraError::WidthMismatch {
                expected: width,
                got: g.len(),
            });
        }
        for &c in g {
            base.check_element(c)?;
        }
    }
    let closed = match close_tuples_coordinatewise(base, width, gens.to_vec(), budget)? {
        Some(c) => c,
        None => close_tuples_worklist(base, width, gens.to_vec(), budget)?,
    };
    Ok(FiniteAlgebra::subpower_from_tuples(
        base.clone(),
        width,
        closed.into_iter().collect(),
    ))
}

/// Worklist closure of tuples, exposed for cross-checking the coordinatewise
/// kernel.
pub fn generate_subpower_worklist(
    base: &Arc<FiniteAlgebra>,
    width: usize,
    gens: &[Vec<Elem>],
    budget: &Budget,
) -> Result<Vec<Vec<Elem>>> {
    Ok(close_tuples_worklist(base, width, gens.to_vec(), budget)?
        .into_iter()
        .collect())
}
