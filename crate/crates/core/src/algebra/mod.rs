//! Generic finite algebras on the universe `0..size`.
//!
//! Operations are either dense tables or evaluated on demand. Algebras that
//! live inside a direct power carry a [`ProductStructure`] describing each
//! element as a coordinate tuple; the closure and translation kernels use it
//! to work coordinatewise.

pub(crate) mod closure;
mod congruence;
mod depth;
mod lattice;
mod partition;
pub(crate) mod residual;
mod translation;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

pub use closure::{
    generate_subpower, generate_subpower_worklist, generate_subuniverse, generate_subuniverse_worklist,
};
pub use congruence::{
    congruence_from_pairs, is_compatible, principal_congruence, CongruenceEngine,
};
pub use depth::{maltsev_depth, pair_depth_graph, DepthResult, PairDepthGraph, PairRecord};
pub use lattice::{
    congruence_lattice, is_meet_semidistributive, CongruenceLattice, FiniteLattice, SdWitness,
};
pub use partition::{Congruence, UnionFind};
pub use translation::{
    enumerate_translations, is_zero_absorbing, Translation, TranslationSet, TranslationStep,
};

#[allow(unused_imports)]
pub(crate) use translation::naive_translations;

/// An element of a finite algebra, as an index into its universe.
pub type Elem = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Elements,
    Pairs,
    Translations,
    Time,
}

impl fmt::Display for BudgetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetKind::Elements => "elements",
            BudgetKind::Pairs => "pairs",
            BudgetKind::Translations => "translations",
            BudgetKind::Time => "wall-clock",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("{kind} budget exceeded{}", limit_note(.kind, .limit))]
    BudgetExceeded { kind: BudgetKind, limit: u64 },
    #[error("operation symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("operation `{symbol}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("operation `{symbol}` table has {got} entries, expected {expected}")]
    TableSize {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("element {elem} outside universe of size {size}")]
    ElementOutOfRange { elem: u64, size: usize },
    #[error("empty generating set")]
    NoGenerators,
    #[error("power exponent must be at least 1")]
    ZeroExponent,
    #[error("tuple has width {got}, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
}

fn limit_note(kind: &BudgetKind, limit: &u64) -> String {
    match kind {
        BudgetKind::Time => String::new(),
        _ => format!(" (limit {limit})"),
    }
}

impl AlgebraError {
    pub fn is_budget(&self) -> bool {
        matches!(self, AlgebraError::BudgetExceeded { .. })
    }
}

pub type Result<T, E = AlgebraError> = std::result::Result<T, E>;

/// Hard limits for the expensive kernels. Exceeding one is an error, never a
/// silent truncation.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub max_elements: usize,
    pub max_pairs: usize,
    pub max_translations: usize,
    pub deadline: Option<Instant>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_elements: 1 << 22,
            max_pairs: 1 << 26,
            max_translations: 1 << 26,
            deadline: None,
        }
    }
}

impl Budget {
    pub(crate) fn check_time(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() > d => Err(AlgebraError::BudgetExceeded {
                kind: BudgetKind::Time,
                limit: 0,
            }),
            _ => Ok(()),
        }
    }

    pub(crate) fn check(&self, kind: BudgetKind, used: usize) -> Result<()> {
        let limit = match kind {
            BudgetKind::Elements => self.max_elements,
            BudgetKind::Pairs => self.max_pairs,
            BudgetKind::Translations => self.max_translations,
            BudgetKind::Time => return self.check_time(),
        };
        if used > limit {
            Err(AlgebraError::BudgetExceeded {
                kind,
                limit: limit as u64,
            })
        } else {
            Ok(())
        }
    }
}

pub type OpFn = dyn Fn(&[Elem]) -> Elem + Send + Sync;

#[derive(Clone)]
pub enum OpTable {
    /// Row-major table: `args[0]` is the most significant digit.
    Dense(Arc<[Elem]>),
    Lazy(Arc<OpFn>),
}

impl fmt::Debug for OpTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpTable::Dense(t) => write!(f, "Dense({} entries)", t.len()),
            OpTable::Lazy(_) => f.write_str("Lazy"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Operation {
    pub symbol: String,
    pub arity: usize,
    pub table: OpTable,
}

impl Operation {
    pub fn dense(symbol: impl Into<String>, arity: usize, table: Vec<Elem>) -> Self {
        Operation {
            symbol: symbol.into(),
            arity,
            table: OpTable::Dense(table.into()),
        }
    }

    pub fn lazy(
        symbol: impl Into<String>,
        arity: usize,
        f: impl Fn(&[Elem]) -> Elem + Send + Sync + 'static,
    ) -> Self {
        Operation {
            symbol: symbol.into(),
            arity,
            table: OpTable::Lazy(Arc::new(f)),
        }
    }

    /// Tabulates `f` over all argument tuples of a universe of `size`.
    pub fn tabulate(
        symbol: impl Into<String>,
        arity: usize,
        size: usize,
        f: impl Fn(&[Elem]) -> Elem,
    ) -> Self {
        let total = size.pow(arity as u32);
        let mut table = Vec::with_capacity(total);
        let mut args = vec![0 as Elem; arity];
        for _ in 0..total {
            table.push(f(&args));
            for slot in args.iter_mut().rev() {
                *slot += 1;
                if (*slot as usize) < size {
                    break;
                }
                *slot = 0;
            }
        }
        Operation::dense(symbol, arity, table)
    }

    #[inline]
    pub fn eval(&self, size: usize, args: &[Elem]) -> Elem {
        debug_assert_eq!(args.len(), self.arity);
        match &self.table {
            OpTable::Dense(t) => {
                let mut idx = 0usize;
                for &a in args {
                    idx = idx * size + a as usize;
                }
                t[idx]
            }
            OpTable::Lazy(f) => f(args),
        }
    }
}

/// Coordinate view of an algebra embedded in a direct power of `base`.
#[derive(Debug)]
pub struct ProductStructure {
    pub base: Arc<FiniteAlgebra>,
    pub width: usize,
    repr: TupleRepr,
}

#[derive(Debug)]
enum TupleRepr {
    /// Every tuple, mixed-radix coded.
    Full(TupleCodec),
    /// An explicit sorted list of tuples.
    Listed {
        coords: Vec<Elem>,
        index: HashMap<Box<[Elem]>, Elem>,
    },
}

impl ProductStructure {
    pub fn coords(&self, x: Elem) -> Vec<Elem> {
        let mut out = vec![0; self.width];
        self.write_coords(x, &mut out);
        out
    }

    pub fn write_coords(&self, x: Elem, out: &mut [Elem]) {
        match &self.repr {
            TupleRepr::Full(codec) => codec.decode_into(x as u64, out),
            TupleRepr::Listed { coords, .. } => {
                let w = self.width;
                out.copy_from_slice(&coords[x as usize * w..(x as usize + 1) * w]);
            }
        }
    }

    pub fn coord(&self, x: Elem, l: usize) -> Elem {
        match &self.repr {
            TupleRepr::Full(codec) => codec.coord(x as u64, l),
            TupleRepr::Listed { coords, .. } => coords[x as usize * self.width + l],
        }
    }

    pub fn index_of(&self, tuple: &[Elem]) -> Option<Elem> {
        match &self.repr {
            TupleRepr::Full(codec) => codec.encode(tuple).ok().map(|i| i as Elem),
            TupleRepr::Listed { index, .. } => index.get(tuple).copied(),
        }
    }
}

/// Bijection between tuples in `base^width` and `0..base^width`.
#[derive(Debug, Clone)]
pub struct TupleCodec {
    base: usize,
    width: usize,
}

impl TupleCodec {
    pub fn new(base: usize, width: usize) -> Self {
        TupleCodec { base, width }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> u64 {
        (self.base as u64).pow(self.width as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn encode(&self, tuple: &[Elem]) -> Result<u64> {
        if tuple.len() != self.width {
            return Err(AlgebraError::WidthMismatch {
                expected: self.width,
                got: tuple.len(),
            });
        }
        let mut idx = 0u64;
        for &c in tuple {
            if c as usize >= self.base {
                return Err(AlgebraError::ElementOutOfRange {
                    elem: c as u64,
                    size: self.base,
                });
            }
            idx = idx * self.base as u64 + c as u64;
        }
        Ok(idx)
    }

    pub fn decode(&self, idx: u64) -> Vec<Elem> {
        let mut out = vec![0; self.width];
        self.decode_into(idx, &mut out);
        out
    }

    pub fn decode_into(&self, mut idx: u64, out: &mut [Elem]) {
        for slot in out.iter_mut().rev() {
            *slot = (idx % self.base as u64) as Elem;
            idx /= self.base as u64;
        }
    }

    fn coord(&self, idx: u64, l: usize) -> Elem {
        let shift = (self.base as u64).pow((self.width - 1 - l) as u32);
        ((idx / shift) % self.base as u64) as Elem
    }
}

#[derive(Debug, Clone)]
pub struct FiniteAlgebra {
    size: usize,
    ops: Vec<Operation>,
    product: Option<Arc<ProductStructure>>,
}

impl FiniteAlgebra {
    pub fn new(size: usize, ops: Vec<Operation>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for op in &ops {
            if !seen.insert(op.symbol.as_str()) {
                return Err(AlgebraError::DuplicateSymbol(op.symbol.clone()));
            }
            if let OpTable::Dense(t) = &op.table {
                let expected = size.pow(op.arity as u32);
                if t.len() != expected {
                    return Err(AlgebraError::TableSize {
                        symbol: op.symbol.clone(),
                        expected,
                        got: t.len(),
                    });
                }
                if let Some(&bad) = t.iter().find(|&&v| v as usize >= size) {
                    return Err(AlgebraError::ElementOutOfRange {
                        elem: bad as u64,
                        size,
                    });
                }
            }
        }
        Ok(FiniteAlgebra {
            size,
            ops,
            product: None,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn op_index(&self, symbol: &str) -> Option<usize> {
        self.ops.iter().position(|o| o.symbol == symbol)
    }

    pub fn product(&self) -> Option<&Arc<ProductStructure>> {
        self.product.as_ref()
    }

    #[inline]
    pub fn apply(&self, op: usize, args: &[Elem]) -> Elem {
        self.ops[op].eval(self.size, args)
    }

    pub fn apply_symbol(&self, symbol: &str, args: &[Elem]) -> Result<Elem> {
        let idx = self
            .op_index(symbol)
            .ok_or_else(|| AlgebraError::UnknownSymbol(symbol.to_string()))?;
        let op = &self.ops[idx];
        if op.arity != args.len() {
            return Err(AlgebraError::ArityMismatch {
                symbol: symbol.to_string(),
                expected: op.arity,
                got: args.len(),
            });
        }
        if let Some(&bad) = args.iter().find(|&&a| a as usize >= self.size) {
            return Err(AlgebraError::ElementOutOfRange {
                elem: bad as u64,
                size: self.size,
            });
        }
        Ok(self.apply(idx, args))
    }

    pub fn check_element(&self, x: Elem) -> Result<()> {
        if (x as usize) < self.size {
            Ok(())
        } else {
            Err(AlgebraError::ElementOutOfRange {
                elem: x as u64,
                size: self.size,
            })
        }
    }

    /// Subalgebra on `elements` of the power `base^width`, indexed in the
    /// order given (which must be sorted and closed).
    pub(crate) fn subpower_from_tuples(
        base: Arc<FiniteAlgebra>,
        width: usize,
        tuples: Vec<Vec<Elem>>,
    ) -> FiniteAlgebra {
        let mut coords = Vec::with_capacity(tuples.len() * width);
        let mut index = HashMap::with_capacity(tuples.len());
        for (i, t) in tuples.iter().enumerate() {
            coords.extend_from_slice(t);
            index.insert(t.clone().into_boxed_slice(), i as Elem);
        }
        let product = Arc::new(ProductStructure {
            base: base.clone(),
            width,
            repr: TupleRepr::Listed { coords, index },
        });
        let ops = product_ops(&product);
        FiniteAlgebra {
            size: tuples.len(),
            ops,
            product: Some(product),
        }
    }
}

/// Coordinatewise operations for elements described by `product`.
fn product_ops(product: &Arc<ProductStructure>) -> Vec<Operation> {
    let base = &product.base;
    (0..base.ops.len())
        .map(|op| {
            let p = product.clone();
            let arity = base.ops[op].arity;
            Operation::lazy(base.ops[op].symbol.clone(), arity, move |args| {
                let w = p.width;
                let mut flat = vec![0; arity * w];
                for (i, &a) in args.iter().enumerate() {
                    p.write_coords(a, &mut flat[i * w..(i + 1) * w]);
                }
                let mut out = vec![0; w];
                let mut col = vec![0; arity];
                for (l, slot) in out.iter_mut().enumerate() {
                    for i in 0..arity {
                        col[i] = flat[i * w + l];
                    }
                    *slot = p.base.apply(op, &col);
                }
                p.index_of(&out)
                    .expect("product operations stay inside a closed subpower")
            })
        })
        .collect()
}

/// The direct power `alg^n` with coordinatewise operations.
pub fn power(alg: &Arc<FiniteAlgebra>, n: usize, budget: &Budget) -> Result<(FiniteAlgebra, TupleCodec)> {
    if n == 0 {
        return Err(AlgebraError::ZeroExponent);
    }
    let codec = TupleCodec::new(alg.size, n);
    let total = (alg.size as u128).pow(n as u32);
    if total > budget.max_elements as u128 || total > Elem::MAX as u128 {
        return Err(AlgebraError::BudgetExceeded {
            kind: BudgetKind::Elements,
            limit: budget.max_elements as u64,
        });
    }
    let product = Arc::new(ProductStructure {
        base: alg.clone(),
        width: n,
        repr: TupleRepr::Full(codec.clone()),
    });
    let ops = product_ops(&product);
    Ok((
        FiniteAlgebra {
            size: total as usize,
            ops,
            product: Some(product),
        },
        codec,
    ))
}
