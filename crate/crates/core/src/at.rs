//! The algebra `A(T)` compiled from a Turing machine `T`.
//!
//! The universe is `{0} ∪ U ∪ W ∪ V` with `U = {1, 2, H}`,
//! `W = {C, D, ∂C, ∂D}` and, for each state `i` and bits `r, s`, the elements
//! `C[i,r]^s`, `D[i,r]^s`, `M[i]^r` and their barred copies. `∂` ("bar") is an
//! involution on `V ∪ W`; it is not an operation of the algebra.
//!
//! Elements are indexed canonically: `0, 1, 2, H, C, D, bC, bD`, then the `V`
//! elements sorted by `(state, kind, r, s, barred)`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde_json::json;
use thiserror::Error;

use crate::algebra::{Elem, FiniteAlgebra, Operation};
use crate::tm::{Direction, Instruction, TuringMachine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Head {
    One,
    Two,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    C,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VKind {
    C,
    D,
    M,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtElement {
    Zero,
    U(Head),
    W {
        letter: Letter,
        barred: bool,
    },
    /// `s` is `None` exactly for kind `M`.
    V {
        kind: VKind,
        state: usize,
        r: u8,
        s: Option<u8>,
        barred: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtError {
    #[error("bar is undefined on {0}")]
    UndefinedBar(AtElement),
    #[error("unknown operation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("operation `{symbol}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        got: usize,
    },
    #[error("cannot parse element name `{0}`")]
    BadElementName(String),
    #[error("element {0} does not belong to this algebra")]
    ForeignElement(AtElement),
}

use AtElement::{Zero, U, V, W};

pub const ONE: AtElement = U(Head::One);
pub const TWO: AtElement = U(Head::Two);
pub const H: AtElement = U(Head::H);
pub const C: AtElement = W {
    letter: Letter::C,
    barred: false,
};
pub const D: AtElement = W {
    letter: Letter::D,
    barred: false,
};
pub const BAR_C: AtElement = W {
    letter: Letter::C,
    barred: true,
};
pub const BAR_D: AtElement = W {
    letter: Letter::D,
    barred: true,
};

impl AtElement {
    pub fn c(state: usize, r: u8, s: u8) -> Self {
        V {
            kind: VKind::C,
            state,
            r,
            s: Some(s),
            barred: false,
        }
    }

    pub fn d(state: usize, r: u8, s: u8) -> Self {
        V {
            kind: VKind::D,
            state,
            r,
            s: Some(s),
            barred: false,
        }
    }

    pub fn m(state: usize, r: u8) -> Self {
        V {
            kind: VKind::M,
            state,
            r,
            s: None,
            barred: false,
        }
    }

    pub fn is_zero(self) -> bool {
        self == Zero
    }

    pub fn is_barred(self) -> bool {
        matches!(self, W { barred: true, .. } | V { barred: true, .. })
    }

    /// `∂x`, defined on `V ∪ W`.
    pub fn bar(self) -> Result<AtElement, AtError> {
        match self {
            W { letter, barred } => Ok(W {
                letter,
                barred: !barred,
            }),
            V {
                kind,
                state,
                r,
                s,
                barred,
            } => Ok(V {
                kind,
                state,
                r,
                s,
                barred: !barred,
            }),
            other => Err(AtError::UndefinedBar(other)),
        }
    }

    /// `self = ∂other`.
    pub fn is_bar_of(self, other: AtElement) -> bool {
        other.bar() == Ok(self)
    }

    fn unbarred(self) -> AtElement {
        match self {
            W { letter, .. } => W {
                letter,
                barred: false,
            },
            V { kind, state, r, s, .. } => V {
                kind,
                state,
                r,
                s,
                barred: false,
            },
            other => other,
        }
    }
}

impl fmt::Display for AtElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Zero => f.write_str("0"),
            U(Head::One) => f.write_str("1"),
            U(Head::Two) => f.write_str("2"),
            U(Head::H) => f.write_str("H"),
            W { letter, barred } => {
                let b = if barred { "b" } else { "" };
                let l = if letter == Letter::C { "C" } else { "D" };
                write!(f, "{b}{l}")
            }
            V {
                kind,
                state,
                r,
                s,
                barred,
            } => {
                let b = if barred { "b" } else { "" };
                match (kind, s) {
                    (VKind::M, _) => write!(f, "{b}M[{state}]^{r}"),
                    (VKind::C, Some(s)) => write!(f, "{b}C[{state},{r}]^{s}"),
                    (VKind::D, Some(s)) => write!(f, "{b}D[{state},{r}]^{s}"),
                    _ => write!(f, "{b}?[{state},{r}]"),
                }
            }
        }
    }
}

impl FromStr for AtElement {
    type Err = AtError;

    fn from_str(name: &str) -> Result<Self, AtError> {
        let bad = || AtError::BadElementName(name.to_string());
        match name {
            "0" => return Ok(Zero),
            "1" => return Ok(ONE),
            "2" => return Ok(TWO),
            "H" => return Ok(H),
            "C" => return Ok(C),
            "D" => return Ok(D),
            "bC" => return Ok(BAR_C),
            "bD" => return Ok(BAR_D),
            _ => {}
        }
        let (barred, rest) = match name.strip_prefix('b') {
            Some(rest) => (true, rest),
            None => (false, name),
        };
        let mut chars = rest.chars();
        let kind = match chars.next() {
            Some('C') => VKind::C,
            Some('D') => VKind::D,
            Some('M') => VKind::M,
            _ => return Err(bad()),
        };
        let rest = chars.as_str().strip_prefix('[').ok_or_else(bad)?;
        let (inside, sup) = rest.split_once("]^").ok_or_else(bad)?;
        let bit = |t: &str| match t {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            _ => Err(bad()),
        };
        let elem = if kind == VKind::M {
            let state = inside.parse().map_err(|_| bad())?;
            AtElement::m(state, bit(sup)?)
        } else {
            let (state, r) = inside.split_once(',').ok_or_else(bad)?;
            let state = state.parse().map_err(|_| bad())?;
            let (r, s) = (bit(r)?, bit(sup)?);
            if kind == VKind::C {
                AtElement::c(state, r, s)
            } else {
                AtElement::d(state, r, s)
            }
        };
        Ok(if barred { elem.bar()? } else { elem })
    }
}

/// `x ≤ y` iff `x ∈ {0, y}`.
pub fn leq(x: AtElement, y: AtElement) -> bool {
    x == Zero || x == y
}

/// `x ≺ y` on `{1, 2, H}`: `2 ≺ 2`, `2 ≺ H`, `1 ≺ 1`.
pub fn prec(x: AtElement, y: AtElement) -> bool {
    matches!(
        (x, y),
        (U(Head::Two), U(Head::Two)) | (U(Head::Two), U(Head::H)) | (U(Head::One), U(Head::One))
    )
}

pub fn meet(x: AtElement, y: AtElement) -> AtElement {
    if x == y {
        x
    } else {
        Zero
    }
}

/// `(x ∧ y) ∨ (x ∧ z)`. Both meets lie in `{0, x}`, so the join is the
/// nonzero one if any.
pub fn meet_join(x: AtElement, y: AtElement, z: AtElement) -> AtElement {
    match meet(x, y) {
        Zero => meet(x, z),
        m => m,
    }
}

pub fn mul(x: AtElement, y: AtElement) -> AtElement {
    match (x, y) {
        (U(Head::Two), D) | (U(Head::H), C) => D,
        (U(Head::One), C) => C,
        (U(Head::Two), BAR_D) | (U(Head::H), BAR_C) => BAR_D,
        (U(Head::One), BAR_C) => BAR_C,
        _ => Zero,
    }
}

/// One of the `L_{irt}` / `R_{irt}` operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shift {
    pub instruction: Instruction,
    pub t: u8,
}

impl Shift {
    pub fn symbol(&self) -> String {
        let ins = &self.instruction;
        format!("{}[{},{},{}]", ins.dir, ins.state, ins.read, self.t)
    }

    /// The unbarred case lines; `u` must be unbarred.
    fn core(&self, x: AtElement, y: AtElement, u: AtElement) -> AtElement {
        let Instruction {
            state: i,
            read: r,
            write: s,
            dir,
            next: j,
        } = self.instruction;
        let t = self.t;
        let V {
            kind,
            state,
            r: ur,
            s: us,
            barred: false,
        } = u
        else {
            return Zero;
        };
        if state != i || ur != r {
            return Zero;
        }
        match (dir, x, y, kind, us) {
            (_, ONE, ONE, VKind::C, Some(s2)) => AtElement::c(j, t, s2),
            (_, TWO, TWO, VKind::D, Some(s2)) => AtElement::d(j, t, s2),
            (Direction::L, H, ONE, VKind::C, Some(s2)) if s2 == t => AtElement::m(j, t),
            (Direction::L, TWO, H, VKind::M, None) => AtElement::d(j, t, s),
            (Direction::R, H, ONE, VKind::M, None) => AtElement::c(j, t, s),
            (Direction::R, TWO, H, VKind::D, Some(s2)) if s2 == t => AtElement::m(j, t),
            _ => Zero,
        }
    }

    pub fn eval(&self, x: AtElement, y: AtElement, u: AtElement) -> AtElement {
        match u {
            V { barred: false, .. } => self.core(x, y, u),
            V { barred: true, .. } => match self.core(x, y, u.unbarred()) {
                Zero => Zero,
                v => v.bar().expect("shift outputs lie in V"),
            },
            _ => Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtOp {
    Zero,
    Meet,
    Mul,
    J,
    JPrime,
    S0,
    S1,
    S2,
    T,
    I,
    Shift(Shift),
    U1(Shift),
    U0(Shift),
    K,
}

impl AtOp {
    pub fn symbol(&self) -> String {
        match self {
            AtOp::Zero => "zero".into(),
            AtOp::Meet => "meet".into(),
            AtOp::Mul => "mul".into(),
            AtOp::J => "J".into(),
            AtOp::JPrime => "J'".into(),
            AtOp::S0 => "S0".into(),
            AtOp::S1 => "S1".into(),
            AtOp::S2 => "S2".into(),
            AtOp::T => "T".into(),
            AtOp::I => "I".into(),
            AtOp::Shift(f) => f.symbol(),
            AtOp::U1(f) => format!("U1[{}]", f.symbol()),
            AtOp::U0(f) => format!("U0[{}]", f.symbol()),
            AtOp::K => "K".into(),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            AtOp::Zero => 0,
            AtOp::I => 1,
            AtOp::Meet | AtOp::Mul => 2,
            AtOp::J | AtOp::JPrime | AtOp::Shift(_) | AtOp::K => 3,
            AtOp::S0 | AtOp::S1 | AtOp::T | AtOp::U1(_) | AtOp::U0(_) => 4,
            AtOp::S2 => 5,
        }
    }

    /// Case-by-case evaluation; `args.len()` must equal the arity.
    pub fn eval(&self, args: &[AtElement]) -> AtElement {
        match *self {
            AtOp::Zero => Zero,
            AtOp::Meet => meet(args[0], args[1]),
            AtOp::Mul => mul(args[0], args[1]),
            AtOp::J => {
                let (x, y, z) = (args[0], args[1], args[2]);
                if x == y {
                    x
                } else if x.is_bar_of(y) {
                    meet(x, z)
                } else {
                    Zero
                }
            }
            AtOp::JPrime => {
                let (x, y, z) = (args[0], args[1], args[2]);
                if x == y {
                    meet(x, z)
                } else if x.is_bar_of(y) {
                    x
                } else {
                    Zero
                }
            }
            AtOp::S0 => match args[0] {
                V { state: 0, .. } => meet_join(args[1], args[2], args[3]),
                _ => Zero,
            },
            AtOp::S1 => match args[0] {
                ONE | TWO => meet_join(args[1], args[2], args[3]),
                _ => Zero,
            },
            AtOp::S2 => {
                if args[0].is_bar_of(args[1]) {
                    meet_join(args[2], args[3], args[4])
                } else {
                    Zero
                }
            }
            AtOp::T => {
                let (w, x, y, z) = (args[0], args[1], args[2], args[3]);
                let (p, q) = (mul(w, x), mul(y, z));
                if p != q {
                    Zero
                } else if (w, x) == (y, z) {
                    p
                } else if p != Zero {
                    p.bar().expect("nonzero products lie in W")
                } else {
                    Zero
                }
            }
            AtOp::I => match args[0] {
                ONE => AtElement::c(1, 0, 0),
                H => AtElement::m(1, 0),
                TWO => AtElement::d(1, 0, 0),
                _ => Zero,
            },
            AtOp::Shift(f) => f.eval(args[0], args[1], args[2]),
            AtOp::U1(f) => {
                let (x, y, z, u) = (args[0], args[1], args[2], args[3]);
                if !prec(x, z) {
                    return Zero;
                }
                match f.eval(x, y, u) {
                    Zero => Zero,
                    v if y != z => v.bar().expect("shift outputs lie in V"),
                    v => v,
                }
            }
            AtOp::U0(f) => {
                let (x, y, z, u) = (args[0], args[1], args[2], args[3]);
                if !prec(x, z) {
                    return Zero;
                }
                match f.eval(y, z, u) {
                    Zero => Zero,
                    v if x != y => v.bar().expect("shift outputs lie in V"),
                    v => v,
                }
            }
            AtOp::K => {
                let (x, y, z) = (args[0], args[1], args[2]);
                if x.is_bar_of(y) {
                    y
                } else if x == y && x.is_bar_of(z) {
                    z
                } else {
                    meet(meet(x, y), z)
                }
            }
        }
    }
}

/// Index arithmetic for the canonical element order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtCodec {
    num_states: usize,
}

const BASE_COUNT: usize = 8;
const PER_STATE: usize = 20;

impl AtCodec {
    pub fn new(num_states: usize) -> Self {
        AtCodec { num_states }
    }

    pub fn size(&self) -> usize {
        BASE_COUNT + PER_STATE * self.num_states
    }

    pub fn encode(&self, x: AtElement) -> Result<Elem, AtError> {
        let idx = match x {
            Zero => 0,
            U(Head::One) => 1,
            U(Head::Two) => 2,
            U(Head::H) => 3,
            W { letter, barred } => 4 + letter as usize + 2 * barred as usize,
            V {
                kind,
                state,
                r,
                s,
                barred,
            } => {
                if state >= self.num_states || r > 1 {
                    return Err(AtError::ForeignElement(x));
                }
                let within = match (kind, s) {
                    (VKind::C, Some(s @ 0..=1)) => r as usize * 4 + s as usize * 2 + barred as usize,
                    (VKind::D, Some(s @ 0..=1)) => 8 + r as usize * 4 + s as usize * 2 + barred as usize,
                    (VKind::M, None) => 16 + r as usize * 2 + barred as usize,
                    _ => return Err(AtError::ForeignElement(x)),
                };
                BASE_COUNT + PER_STATE * state + within
            }
        };
        Ok(idx as Elem)
    }

    pub fn decode(&self, idx: Elem) -> AtElement {
        let idx = idx as usize;
        match idx {
            0 => Zero,
            1 => ONE,
            2 => TWO,
            3 => H,
            4 => C,
            5 => D,
            6 => BAR_C,
            7 => BAR_D,
            _ => {
                let state = (idx - BASE_COUNT) / PER_STATE;
                let within = (idx - BASE_COUNT) % PER_STATE;
                let barred = within % 2 == 1;
                let (kind, r, s) = match within {
                    0..=7 => (VKind::C, (within / 4) as u8, Some(((within / 2) % 2) as u8)),
                    8..=15 => (VKind::D, ((within - 8) / 4) as u8, Some(((within / 2) % 2) as u8)),
                    _ => (VKind::M, ((within - 16) / 2) as u8, None),
                };
                V {
                    kind,
                    state,
                    r,
                    s,
                    barred,
                }
            }
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = AtElement> + '_ {
        (0..self.size() as Elem).map(|i| self.decode(i))
    }
}

/// `A(T)`, or `A'(T)` when built with `K`.
#[derive(Debug, Clone)]
pub struct AtAlgebra {
    machine: TuringMachine,
    codec: AtCodec,
    ops: Vec<AtOp>,
    carrier: Arc<FiniteAlgebra>,
    with_k: bool,
}

/// Operation list in carrier order: the fixed operations, the shifts (one
/// per instruction and `t`), the `U1`/`U0` pair for each shift, then `K`.
pub fn operation_list(tm: &TuringMachine, with_k: bool) -> Vec<AtOp> {
    let mut ops = vec![
        AtOp::Zero,
        AtOp::Meet,
        AtOp::Mul,
        AtOp::J,
        AtOp::JPrime,
        AtOp::S0,
        AtOp::S1,
        AtOp::S2,
        AtOp::T,
        AtOp::I,
    ];
    let shifts: Vec<Shift> = tm
        .instructions()
        .iter()
        .flat_map(|&instruction| (0..2).map(move |t| Shift { instruction, t }))
        .collect();
    ops.extend(shifts.iter().map(|&f| AtOp::Shift(f)));
    for &f in &shifts {
        ops.push(AtOp::U1(f));
        ops.push(AtOp::U0(f));
    }
    if with_k {
        ops.push(AtOp::K);
    }
    ops
}

impl AtAlgebra {
    /// Operations of arity at most 3 are tabulated; wider ones are evaluated
    /// case by case on demand.
    pub fn build(tm: &TuringMachine, with_k: bool) -> Self {
        let codec = AtCodec::new(tm.num_states());
        let size = codec.size();
        let ops = operation_list(tm, with_k);
        let elements: Arc<[AtElement]> = codec.elements().collect();
        let carrier_ops = ops
            .iter()
            .map(|&op| {
                let arity = op.arity();
                let elements = elements.clone();
                let eval = move |args: &[Elem]| -> Elem {
                    let mut decoded = [Zero; 5];
                    for (d, &a) in decoded.iter_mut().zip(args) {
                        *d = elements[a as usize];
                    }
                    codec
                        .encode(op.eval(&decoded[..args.len()]))
                        .expect("operations stay inside the universe")
                };
                if arity <= 3 {
                    Operation::tabulate(op.symbol(), arity, size, eval)
                } else {
                    Operation::lazy(op.symbol(), arity, eval)
                }
            })
            .collect();
        let carrier = FiniteAlgebra::new(size, carrier_ops).expect("operation symbols are distinct");
        AtAlgebra {
            machine: tm.clone(),
            codec,
            ops,
            carrier: Arc::new(carrier),
            with_k,
        }
    }

    pub fn machine(&self) -> &TuringMachine {
        &self.machine
    }

    pub fn codec(&self) -> AtCodec {
        self.codec
    }

    pub fn ops(&self) -> &[AtOp] {
        &self.ops
    }

    pub fn carrier(&self) -> &Arc<FiniteAlgebra> {
        &self.carrier
    }

    pub fn with_k(&self) -> bool {
        self.with_k
    }

    pub fn size(&self) -> usize {
        self.codec.size()
    }

    pub fn index(&self, x: AtElement) -> Elem {
        self.codec.encode(x).expect("element of this algebra")
    }

    pub fn element(&self, i: Elem) -> AtElement {
        self.codec.decode(i)
    }

    pub fn op(&self, symbol: &str) -> Option<(usize, AtOp)> {
        self.ops
            .iter()
            .enumerate()
            .find(|(_, op)| op.symbol() == symbol)
            .map(|(i, &op)| (i, op))
    }

    pub fn eval_op(&self, symbol: &str, args: &[AtElement]) -> Result<AtElement, AtError> {
        let (_, op) = self
            .op(symbol)
            .ok_or_else(|| AtError::UnknownSymbol(symbol.to_string()))?;
        if op.arity() != args.len() {
            return Err(AtError::ArityMismatch {
                symbol: symbol.to_string(),
                expected: op.arity(),
                got: args.len(),
            });
        }
        for &a in args {
            self.codec.encode(a)?;
        }
        Ok(op.eval(args))
    }

    pub fn describe(&self) -> serde_json::Value {
        json!({
            "size": self.size(),
            "ops": self.ops.iter().map(|op| json!({"symbol": op.symbol(), "arity": op.arity()})).collect::<Vec<_>>(),
            "elements": self.codec.elements().map(|e| e.to_string()).collect::<Vec<_>>(),
        })
    }
}
