//! The witness subpowers `B_n ≤ A(T)^n` and checks of their congruence
//! behaviour.
//!
//! `B_n` is generated by
//!
//! ```text
//! a   = (D, 0, .., 0)
//! b_i = (D, .., D, 0, .., 0)          D in coordinates 1..i
//! d_i = (D, .., D, ∂D, 0, .., 0)      ∂D in coordinate i
//! ```
//!
//! for `2 ≤ i ≤ n`; `c_i = (0, D, .., D, 0, ..)` (D in 2..i) is derived. Every
//! check returns a [`Report`]; mathematical failures are report content, while
//! exhausted budgets surface as [`BnError::Algebra`] so callers can tell the
//! two apart.

use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::closure::coordinatewise;
use crate::algebra::residual::TupleSet;
use crate::algebra::{
    generate_subpower, AlgebraError, Budget, CongruenceEngine, DepthResult, Elem, FiniteAlgebra, PairDepthGraph,
    TranslationStep,
};
use crate::at::{AtAlgebra, AtElement, BAR_D, D};

/// Operations that may be nonzero on `B_n`.
pub const NONZERO_OPS: [&str; 4] = ["meet", "J", "J'", "S2"];

/// At most this many counterexamples are listed in a report.
const MAX_LISTED: usize = 32;

#[derive(Debug, Error)]
pub enum BnError {
    #[error("width must be at least 2, got {0}")]
    Width(usize),
    #[error("omitted index {k} outside 2..={n}")]
    OmittedIndex { k: usize, n: usize },
    #[error("this check needs an algebra {0} the operation K")]
    WrongSignature(&'static str),
    #[error("tuple {0} escaped the generated subalgebra")]
    Escaped(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl BnError {
    pub fn is_budget(&self) -> bool {
        matches!(self, BnError::Algebra(e) if e.is_budget())
    }
}

pub type Result<T, E = BnError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub universe: usize,
    pub pairs: usize,
    pub seconds: Option<f64>,
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub lemma: String,
    pub n: usize,
    pub pass: bool,
    pub witnesses: Vec<Value>,
    pub counterexamples: Vec<Value>,
    pub stats: Stats,
}

impl Report {
    fn new(lemma: &str, n: usize, universe: usize) -> Self {
        Report {
            lemma: lemma.to_string(),
            n,
            pass: true,
            witnesses: Vec::new(),
            counterexamples: Vec::new(),
            stats: Stats {
                universe,
                pairs: 0,
                seconds: None,
            },
        }
    }

    fn witness(&mut self, v: Value) {
        self.witnesses.push(v);
    }

    /// Records a failure; only the first few are listed.
    fn fail(&mut self, v: Value) {
        self.pass = false;
        if self.counterexamples.len() < MAX_LISTED {
            self.counterexamples.push(v);
        }
    }

    fn check(&mut self, ok: bool, what: Value) {
        if ok {
            self.witness(what);
        } else {
            self.fail(what);
        }
    }

    fn timed(mut self, start: Instant) -> Self {
        self.stats.seconds = Some(start.elapsed().as_secs_f64());
        self
    }

    /// Drops the wall-clock figure, for byte-stable output.
    pub fn without_timing(mut self) -> Self {
        self.stats.seconds = None;
        self
    }
}

/// Coordinates (1-based) where a tuple is nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportProfile {
    pub element: Vec<Elem>,
    pub support: BTreeSet<usize>,
}

impl SupportProfile {
    pub fn new(element: &[Elem], zero: Elem) -> Self {
        SupportProfile {
            element: element.to_vec(),
            support: (1..=element.len()).filter(|&l| element[l - 1] != zero).collect(),
        }
    }
}

/// Generator tuples of `B_n`, as indices into the base algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generators {
    zero: Elem,
    d: Elem,
    bar_d: Elem,
    n: usize,
}

impl Generators {
    fn new(at: &AtAlgebra, n: usize) -> Self {
        Generators {
            zero: at.index(AtElement::Zero),
            d: at.index(D),
            bar_d: at.index(BAR_D),
            n,
        }
    }

    fn pattern(&self, f: impl Fn(usize) -> Elem) -> Vec<Elem> {
        (1..=self.n).map(f).collect()
    }

    pub fn zero(&self) -> Vec<Elem> {
        vec![self.zero; self.n]
    }

    pub fn a(&self) -> Vec<Elem> {
        self.b(1)
    }

    pub fn b(&self, i: usize) -> Vec<Elem> {
        self.pattern(|l| if l <= i { self.d } else { self.zero })
    }

    pub fn c(&self, i: usize) -> Vec<Elem> {
        self.pattern(|l| if (2..=i).contains(&l) { self.d } else { self.zero })
    }

    pub fn d(&self, i: usize) -> Vec<Elem> {
        self.pattern(|l| match l.cmp(&i) {
            std::cmp::Ordering::Less => self.d,
            std::cmp::Ordering::Equal => self.bar_d,
            std::cmp::Ordering::Greater => self.zero,
        })
    }

    /// `a`, then `b_i, d_i` for `i = 2..=n`, optionally without `d_skip`.
    fn list(&self, skip: Option<usize>) -> Vec<Vec<Elem>> {
        let mut out = vec![self.a()];
        for i in 2..=self.n {
            out.push(self.b(i));
            if skip != Some(i) {
                out.push(self.d(i));
            }
        }
        out
    }
}

/// `B_n` together with its generators and lazily computed translations.
pub struct BnContext {
    n: usize,
    at: Arc<AtAlgebra>,
    gens: Generators,
    algebra: FiniteAlgebra,
    budget: Budget,
    engine: OnceLock<CongruenceEngine>,
}

impl std::fmt::Debug for BnContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BnContext")
            .field("n", &self.n)
            .field("size", &self.algebra.size())
            .field("with_k", &self.at.with_k())
            .finish()
    }
}

/// Generates `B_n` (or `B_n'` when `at` carries `K`) inside `A(T)^n`.
pub fn build_bn(at: &Arc<AtAlgebra>, n: usize, budget: &Budget) -> Result<BnContext> {
    if n < 2 {
        return Err(BnError::Width(n));
    }
    let gens = Generators::new(at, n);
    let algebra = generate_subpower(at.carrier(), n, &gens.list(None), budget)?;
    Ok(BnContext {
        n,
        at: at.clone(),
        gens,
        algebra,
        budget: *budget,
        engine: OnceLock::new(),
    })
}

impl BnContext {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self) -> &Arc<AtAlgebra> {
        &self.at
    }

    pub fn generators(&self) -> &Generators {
        &self.gens
    }

    /// `B_n` as an algebra; elements are indexed in lexicographic tuple order.
    pub fn algebra(&self) -> &FiniteAlgebra {
        &self.algebra
    }

    pub fn size(&self) -> usize {
        self.algebra.size()
    }

    pub fn tuple(&self, x: Elem) -> Vec<Elem> {
        self.algebra.product().expect("subpower").coords(x)
    }

    pub fn index_of(&self, tuple: &[Elem]) -> Option<Elem> {
        self.algebra.product().expect("subpower").index_of(tuple)
    }

    fn element(&self, tuple: &[Elem]) -> Result<Elem> {
        self.index_of(tuple).ok_or_else(|| BnError::Escaped(self.name(tuple)))
    }

    pub fn tuples(&self) -> Vec<Vec<Elem>> {
        (0..self.size() as Elem).map(|x| self.tuple(x)).collect()
    }

    /// Canonical name such as `(D,bD,0)`.
    pub fn name(&self, tuple: &[Elem]) -> String {
        let parts: Vec<String> = tuple.iter().map(|&c| self.at.element(c).to_string()).collect();
        format!("({})", parts.join(","))
    }

    fn name_of(&self, x: Elem) -> String {
        self.name(&self.tuple(x))
    }

    /// Translations of `B_n` with constants from `B_n`, computed on first use.
    pub fn engine(&self) -> Result<&CongruenceEngine> {
        if let Some(e) = self.engine.get() {
            return Ok(e);
        }
        let e = CongruenceEngine::new(&self.algebra, &self.budget)?;
        Ok(self.engine.get_or_init(|| e))
    }

    /// Evaluates a base operation coordinatewise on tuples.
    pub fn apply_tuples(&self, symbol: &str, args: &[Vec<Elem>]) -> Result<Vec<Elem>> {
        let base = self.at.carrier();
        let op = base
            .op_index(symbol)
            .ok_or_else(|| AlgebraError::UnknownSymbol(symbol.to_string()))?;
        if base.ops()[op].arity != args.len() {
            return Err(AlgebraError::ArityMismatch {
                symbol: symbol.to_string(),
                expected: base.ops()[op].arity,
                got: args.len(),
            }
            .into());
        }
        Ok(coordinatewise(base, op, args, self.n))
    }

    fn pair_graph(&self, cap: u32) -> Result<PairDepthGraph> {
        let a = self.element(&self.gens.a())?;
        let zero = self.element(&self.gens.zero())?;
        Ok(PairDepthGraph::build(
            self.engine()?.translations(),
            a,
            zero,
            cap,
            &self.budget,
        )?)
    }

    fn target(&self) -> Result<(Elem, Elem)> {
        Ok((self.element(&self.gens.b(self.n))?, self.element(&self.gens.c(self.n))?))
    }
}

/// Items (1)–(4) of the structure lemma for one tuple; returns the failing
/// item numbers.
fn structure_violations(g: &Generators, x: &[Elem]) -> Vec<u8> {
    let mut bad = Vec::new();
    let allowed = |c: Elem| c == g.zero || c == g.d || c == g.bar_d;
    if !(x[0] == g.zero || x[0] == g.d) || !x.iter().all(|&c| allowed(c)) {
        bad.push(1);
    }
    let bars: Vec<usize> = (0..x.len()).filter(|&l| x[l] == g.bar_d).collect();
    if bars.len() > 1 {
        bad.push(2);
    }
    if bars.iter().any(|&l| x[l + 1..].iter().any(|&c| c != g.zero)) {
        bad.push(3);
    }
    if bars
        .iter()
        .any(|&l| x != g.d(l + 1).as_slice() && !x[..l].contains(&g.zero))
    {
        bad.push(4);
    }
    bad
}

/// Every element of `B_n` satisfies the four structure properties.
pub fn verify_bn_structure(ctx: &BnContext) -> Report {
    let start = Instant::now();
    let mut r = Report::new("structure", ctx.n, ctx.size());
    for t in ctx.tuples() {
        let bad = structure_violations(&ctx.gens, &t);
        if !bad.is_empty() {
            r.fail(json!({"element": ctx.name(&t), "items": bad}));
        }
    }
    if ctx.size() <= 64 {
        let names: Vec<String> = ctx.tuples().iter().map(|t| ctx.name(t)).collect();
        r.witness(json!({"elements": names}));
    }
    r.timed(start)
}

/// Operations outside [`NONZERO_OPS`] are constantly zero on `B_n`.
///
/// The image of each operation over `B_n^k` is computed exhaustively by the
/// coordinatewise kernel. Independently, arguments are enumerated directly
/// for arity ≤ 3, and for wider operations every tuple over the generators
/// (boundary cases) plus `samples` seeded random tuples per operation are
/// evaluated.
pub fn verify_nonzero_ops(ctx: &BnContext, seed: u64, samples: usize) -> Report {
    let start = Instant::now();
    let mut r = Report::new("nonzero-ops", ctx.n, ctx.size());
    let base = ctx.at.carrier();
    let n = ctx.n;
    let zero = ctx.gens.zero();
    let universe = ctx.tuples();
    let flat: Vec<Elem> = universe.iter().flatten().copied().collect();
    let set = TupleSet::new(base, n, &flat);
    let mut boundary = ctx.gens.list(None);
    boundary.push(ctx.gens.c(n));
    boundary.push(zero.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluated: u64 = 0;

    for (op, spec) in base.ops().iter().enumerate() {
        let allowed = NONZERO_OPS.contains(&spec.symbol.as_str());
        match set.image(op) {
            Some(image) => {
                let nonzero: Vec<&Vec<Elem>> = image.iter().filter(|t| **t != zero).collect();
                if allowed {
                    if let Some(t) = nonzero.first() {
                        r.witness(json!({"op": spec.symbol, "nonzero_value": ctx.name(t)}));
                    }
                } else {
                    for t in nonzero {
                        r.fail(json!({"op": spec.symbol, "value": ctx.name(t)}));
                    }
                }
            }
            None => r.witness(json!({"op": spec.symbol, "image": "not computed (domain too large)"})),
        }
        if allowed {
            continue;
        }
        let k = spec.arity;
        let check = |args: &[Vec<Elem>], r: &mut Report| {
            let v = coordinatewise(base, op, args, n);
            if v != zero {
                let names: Vec<String> = args.iter().map(|t| ctx.name(t)).collect();
                r.fail(json!({"op": spec.symbol, "args": names, "value": ctx.name(&v)}));
            }
        };
        if k <= 3 {
            for_each_tuple(&universe, k, |args| check(args, &mut r));
            evaluated += (universe.len() as u64).pow(k as u32);
        } else {
            for_each_tuple(&boundary, k, |args| check(args, &mut r));
            evaluated += (boundary.len() as u64).pow(k as u32);
            let mut args = vec![Vec::new(); k];
            for _ in 0..samples {
                for a in args.iter_mut() {
                    *a = universe[rng.gen_range(0..universe.len())].clone();
                }
                check(&args, &mut r);
            }
            evaluated += samples as u64;
        }
    }
    r.witness(json!({"seed": seed, "samples_per_wide_op": samples, "direct_evaluations": evaluated}));
    r.timed(start)
}

/// Calls `f` on every `k`-tuple over `items`.
fn for_each_tuple<T: Clone>(items: &[T], k: usize, mut f: impl FnMut(&[T])) {
    if k == 0 {
        f(&[]);
        return;
    }
    let Some(first) = items.first() else {
        return;
    };
    let mut idx = vec![0usize; k];
    let mut args: Vec<T> = vec![first.clone(); k];
    loop {
        for (a, &i) in args.iter_mut().zip(&idx) {
            *a = items[i].clone();
        }
        f(&args);
        let mut p = k;
        loop {
            if p == 0 {
                return;
            }
            p -= 1;
            idx[p] += 1;
            if idx[p] < items.len() {
                break;
            }
            idx[p] = 0;
        }
    }
}

/// `θ = Cg(a, 0)` is generated by each of its nontrivial pairs.
pub fn verify_atomicity(ctx: &BnContext) -> Result<Report> {
    let start = Instant::now();
    let mut r = Report::new("atomic", ctx.n, ctx.size());
    let engine = ctx.engine()?;
    let a = ctx.element(&ctx.gens.a())?;
    let zero = ctx.element(&ctx.gens.zero())?;
    let theta = engine.principal(a, zero);
    let pairs = theta.nontrivial_pairs();
    r.stats.pairs = pairs.len();
    ctx.budget.check_time()?;
    let failures: Vec<(Elem, Elem)> = pairs
        .par_iter()
        .filter(|&&(u, v)| engine.principal(u, v) != theta)
        .copied()
        .collect();
    for (u, v) in failures {
        r.fail(json!({"pair": [ctx.name_of(u), ctx.name_of(v)]}));
    }
    let (bn, cn) = ctx.target()?;
    r.check(
        theta.related(bn, cn) && engine.principal(bn, cn) == theta,
        json!({"regenerates": [ctx.name_of(bn), ctx.name_of(cn)]}),
    );
    r.witness(json!({"blocks": theta.num_blocks(), "pairs_checked": pairs.len()}));
    Ok(r.timed(start))
}

/// The polynomial `J'(b_n, d_n, .. J'(b_2, d_2, x) ..)`, innermost first.
#[derive(Debug, Clone, Serialize)]
pub struct ChainPolynomial {
    pub steps: Vec<TranslationStep>,
}

impl ChainPolynomial {
    pub fn apply(&self, alg: &FiniteAlgebra, x: Elem) -> Elem {
        self.steps.iter().fold(x, |acc, s| s.apply(alg, acc))
    }
}

pub fn chain_polynomial(ctx: &BnContext) -> Result<ChainPolynomial> {
    let steps = (2..=ctx.n)
        .map(|l| {
            let consts = vec![ctx.element(&ctx.gens.b(l))?, ctx.element(&ctx.gens.d(l))?];
            Ok(TranslationStep::new(&ctx.algebra, "J'", 2, consts)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainPolynomial { steps })
}

/// The chain maps `(a, 0)` to `(b_l, c_l)` after `l − 1` steps, and the
/// generic congruence closure agrees that `(b_n, c_n) ∈ Cg(a, 0)`.
pub fn explicit_chain_polynomial(ctx: &BnContext) -> Result<(ChainPolynomial, Report)> {
    let start = Instant::now();
    let mut r = Report::new("chain", ctx.n, ctx.size());
    let poly = chain_polynomial(ctx)?;
    let (mut x, mut y) = (ctx.element(&ctx.gens.a())?, ctx.element(&ctx.gens.zero())?);
    let (a, zero) = (x, y);
    for (i, step) in poly.steps.iter().enumerate() {
        let l = i + 2;
        x = step.apply(&ctx.algebra, x);
        y = step.apply(&ctx.algebra, y);
        let ok = ctx.tuple(x) == ctx.gens.b(l) && ctx.tuple(y) == ctx.gens.c(l);
        r.check(ok, json!({"l": l, "f(a)": ctx.name_of(x), "f(0)": ctx.name_of(y)}));
    }
    r.check(poly.steps.len() == ctx.n - 1, json!({"length": poly.steps.len()}));
    let (bn, cn) = ctx.target()?;
    let theta = ctx.engine()?.principal(a, zero);
    r.check(theta.related(bn, cn), json!({"principal_congruence_contains_target": theta.related(bn, cn)}));
    Ok((poly, r.timed(start)))
}

/// In the pair search from `(a, 0)`, `b_n` is only ever paired with `c_n`.
pub fn verify_f_characterization(ctx: &BnContext, cap: u32) -> Result<Report> {
    let start = Instant::now();
    let mut r = Report::new("f-char", ctx.n, ctx.size());
    let graph = ctx.pair_graph(cap)?;
    r.stats.pairs = graph.len();
    let (bn, cn) = ctx.target()?;
    for rec in graph.records() {
        let partner = if rec.x == bn {
            rec.y
        } else if rec.y == bn {
            rec.x
        } else {
            continue;
        };
        if partner == bn {
            continue;
        }
        r.check(
            partner == cn,
            json!({"partner": ctx.name_of(partner), "depth": rec.depth}),
        );
    }
    r.check(
        graph.depth(bn, cn).is_some(),
        json!({"target_depth": graph.depth(bn, cn), "cap": cap, "exhausted": graph.is_exhausted()}),
    );
    Ok(r.timed(start))
}

/// Dropping `d_k` from the generators yields a proper subalgebra `C` in
/// which `(b_n, c_n) ∉ Cg^C(a, 0)`.
pub fn verify_subalgebra_omission(ctx: &BnContext, k: usize) -> Result<Report> {
    let start = Instant::now();
    let n = ctx.n;
    if !(2..=n).contains(&k) {
        return Err(BnError::OmittedIndex { k, n });
    }
    let mut r = Report::new("omission", n, ctx.size());
    let g = &ctx.gens;
    let c = generate_subpower(ctx.at.carrier(), n, &g.list(Some(k)), &ctx.budget)?;
    let c_tuples: Vec<Vec<Elem>> = (0..c.size() as Elem)
        .map(|x| c.product().expect("subpower").coords(x))
        .collect();
    let inside = c_tuples.iter().all(|t| ctx.index_of(t).is_some());
    r.check(
        inside && c.size() < ctx.size(),
        json!({"k": k, "subalgebra": c.size(), "universe": ctx.size()}),
    );
    let find = |t: &[Elem]| c.product().expect("subpower").index_of(t);
    match (find(&g.b(n)), find(&g.c(n)), find(&g.a()), find(&g.zero())) {
        (Some(bn), Some(cn), Some(a), Some(zero)) => {
            let theta = CongruenceEngine::new(&c, &ctx.budget)?.principal(a, zero);
            r.check(
                !theta.related(bn, cn),
                json!({"k": k, "target_in_subalgebra": true, "target_related": theta.related(bn, cn)}),
            );
        }
        (bn, cn, _, _) => r.witness(json!({
            "k": k,
            "b_n_in_subalgebra": bn.is_some(),
            "c_n_in_subalgebra": cn.is_some(),
        })),
    }
    let jk = ctx.apply_tuples("J", &[g.b(n), g.d(k), g.b(n)])?;
    r.check(jk == g.b(k), json!({"J(b_n,d_k,b_n)": ctx.name(&jk), "b_k": ctx.name(&g.b(k))}));
    Ok(r.timed(start))
}

/// [`verify_subalgebra_omission`] for every `k` in `2..=n`, as one report.
pub fn verify_omission_all(ctx: &BnContext) -> Result<Report> {
    let start = Instant::now();
    let mut r = Report::new("omission", ctx.n, ctx.size());
    for k in 2..=ctx.n {
        let part = verify_subalgebra_omission(ctx, k)?;
        r.pass &= part.pass;
        r.witnesses.extend(part.witnesses);
        r.counterexamples.extend(part.counterexamples);
    }
    r.counterexamples.truncate(MAX_LISTED);
    Ok(r.timed(start))
}

/// For every pair `r, s` with `r(1) ≠ s(1) = 0` agreeing elsewhere, and every
/// fundamental translation `g` of `∧, J, J', S₂` separating them,
/// `|supp g(r)| ≤ |supp r| + 1`.
pub fn verify_support_growth(ctx: &BnContext) -> Result<Report> {
    let start = Instant::now();
    let mut r = Report::new("support-growth", ctx.n, ctx.size());
    let engine = ctx.engine()?;
    let zero = ctx.gens.zero;
    let tuples = ctx.tuples();
    let supp = |t: &[Elem]| t.iter().filter(|&&c| c != zero).count();
    let mut pairs = Vec::new();
    for (x, rt) in tuples.iter().enumerate() {
        for (y, st) in tuples.iter().enumerate() {
            if rt[0] != st[0] && st[0] == zero && rt[1..] == st[1..] {
                pairs.push((x, y));
            }
        }
    }
    r.stats.pairs = pairs.len();
    let ops: Vec<usize> = NONZERO_OPS
        .iter()
        .filter_map(|s| ctx.algebra.op_index(s))
        .collect();
    let translations: Vec<_> = engine
        .translations()
        .entries()
        .iter()
        .filter(|t| ops.contains(&t.step.op))
        .collect();
    let mut separating = 0usize;
    let mut growth_seen = 0usize;
    for t in &translations {
        for &(x, y) in &pairs {
            let (gx, gy) = (t.map[x], t.map[y]);
            if gx == gy {
                continue;
            }
            separating += 1;
            let (before, after) = (supp(&tuples[x]), supp(&tuples[gx as usize]));
            growth_seen = growth_seen.max(after.saturating_sub(before));
            if after > before + 1 {
                r.fail(json!({
                    "r": ctx.name(&tuples[x]),
                    "s": ctx.name(&tuples[y]),
                    "g": t.step,
                    "g(r)": ctx.name(&tuples[gx as usize]),
                }));
            }
        }
    }
    r.witness(json!({
        "hypothesis_pairs": pairs.len(),
        "translations": translations.len(),
        "separating_cases": separating,
        "max_growth": growth_seen,
    }));
    Ok(r.timed(start))
}

/// Maltsev depth of `(b_n, c_n)` from `(a, 0)` in `B_n`, searching to depth
/// `n + 2`.
pub fn bn_maltsev_depth(ctx: &BnContext) -> Result<(DepthResult, Report)> {
    let start = Instant::now();
    let mut r = Report::new("depth", ctx.n, ctx.size());
    let cap = ctx.n as u32 + 2;
    let graph = ctx.pair_graph(cap)?;
    r.stats.pairs = graph.len();
    let (bn, cn) = ctx.target()?;
    let result = graph.minimax_path(bn, cn);
    let expected = ctx.n as u32 - 1;
    let mut w = json!({"depth": result.depth(), "expected": expected, "cap": cap});
    if let Some(steps) = graph.witness(bn, cn) {
        w["polynomial"] = serde_json::to_value(steps).expect("steps serialize");
    }
    r.check(result.depth() == Some(expected), w);
    Ok((result, r.timed(start)))
}

/// In `B_n'` (with `K`), the element `b_n'` from the recursion
/// `b_2' = d_n`, `b_{k+1}' = K(b_n, b_k', d_{n−k+1})` makes
/// `λ(x) = J'(b_n, b_n', x)` send `(a, 0)` to `(b_n, c_n)` in one step.
pub fn kprime_collapse(at_k: &Arc<AtAlgebra>, n: usize, budget: &Budget) -> Result<Report> {
    if !at_k.with_k() {
        return Err(BnError::WrongSignature("with"));
    }
    let start = Instant::now();
    let ctx = build_bn(at_k, n, budget)?;
    let g = &ctx.gens;
    let mut r = Report::new("k-collapse", n, ctx.size());
    let bn = g.b(n);
    let mut prime = g.d(n);
    for k in 2..n {
        prime = ctx.apply_tuples("K", &[bn.clone(), prime, g.d(n - (k - 1))])?;
        ctx.element(&prime)?;
    }
    r.witness(json!({"b_n'": ctx.name(&prime)}));
    for i in 2..=n {
        let ok = ctx.at.element(prime[i - 1]).bar().ok().map(|e| ctx.at.index(e)) == Some(bn[i - 1]);
        r.check(ok, json!({"coordinate": i, "b_n": ctx.name(&bn), "b_n'": ctx.name(&prime)}));
    }
    let lambda = |x: Vec<Elem>| ctx.apply_tuples("J'", &[bn.clone(), prime.clone(), x]);
    let (la, l0) = (lambda(g.a())?, lambda(g.zero())?);
    r.check(la == bn, json!({"lambda(a)": ctx.name(&la)}));
    r.check(l0 == g.c(n), json!({"lambda(0)": ctx.name(&l0)}));
    let violations = structure_violations(g, &prime);
    r.witness(json!({"b_n'_structure_violations": violations}));
    let graph = ctx.pair_graph(2)?;
    r.stats.pairs = graph.len();
    let (tb, tc) = ctx.target()?;
    let depth = graph.minimax_path(tb, tc).depth();
    r.check(depth == Some(1), json!({"depth": depth}));
    Ok(r.timed(start))
}
