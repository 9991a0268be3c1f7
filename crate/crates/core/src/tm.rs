//! Turing machines in the 5-tuple formalism: parsing, validation and bounded
//! simulation on the empty tape.
//!
//! States are referred to by their position in the declared state list. State
//! `0` is the halting state and state `1` is the initial state.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// Index into [`TuringMachine::states`].
pub type StateIndex = usize;

pub const HALT: StateIndex = 0;
pub const START: StateIndex = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    L,
    R,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::L => f.write_str("L"),
            Direction::R => f.write_str("R"),
        }
    }
}

/// `(state, read, write, dir, next)`: in `state` reading `read`, write `write`,
/// move one cell in `dir` and enter `next`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub state: StateIndex,
    pub read: u8,
    pub write: u8,
    pub dir: Direction,
    pub next: StateIndex,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TmError {
    #[error("a machine needs at least a halting and an initial state")]
    TooFewStates,
    #[error("state name `{0}` declared twice")]
    DuplicateStateName(String),
    #[error("unknown state index {0}")]
    UnknownState(StateIndex),
    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(u8),
    #[error("more than one instruction for state `{state}` reading {read}")]
    DuplicateInstruction { state: String, read: u8 },
    #[error("instruction leaves the halting state `{0}`")]
    InstructionFromHalt(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuringMachine {
    states: Vec<String>,
    instructions: Vec<Instruction>,
    lookup: HashMap<(StateIndex, u8), usize>,
}

impl TuringMachine {
    /// Validates and builds a deterministic machine. `states[0]` halts,
    /// `states[1]` is the initial state.
    pub fn new(states: Vec<String>, instructions: Vec<Instruction>) -> Result<Self, TmError> {
        if states.len() < 2 {
            return Err(TmError::TooFewStates);
        }
        let mut seen = BTreeSet::new();
        for name in &states {
            if !seen.insert(name.as_str()) {
                return Err(TmError::DuplicateStateName(name.clone()));
            }
        }
        let mut lookup = HashMap::new();
        for (idx, ins) in instructions.iter().enumerate() {
            for s in [ins.state, ins.next] {
                if s >= states.len() {
                    return Err(TmError::UnknownState(s));
                }
            }
            for bit in [ins.read, ins.write] {
                if bit > 1 {
                    return Err(TmError::InvalidBit(bit));
                }
            }
            if ins.state == HALT {
                return Err(TmError::InstructionFromHalt(states[HALT].clone()));
            }
            if lookup.insert((ins.state, ins.read), idx).is_some() {
                return Err(TmError::DuplicateInstruction {
                    state: states[ins.state].clone(),
                    read: ins.read,
                });
            }
        }
        Ok(TuringMachine {
            states,
            instructions,
            lookup,
        })
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    /// Number of states, `n + 1` for states `μ_0..μ_n`.
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn state_name(&self, s: StateIndex) -> &str {
        &self.states[s]
    }

    pub fn instruction_for(&self, state: StateIndex, read: u8) -> Option<&Instruction> {
        self.lookup
            .get(&(state, read))
            .map(|&idx| &self.instructions[idx])
    }
}

/// Tape contents (positions holding 1), head position and current state.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub ones: BTreeSet<i64>,
    pub head: i64,
    pub state: StateIndex,
}

impl Configuration {
    /// Empty tape, head at 0, initial state.
    pub fn initial() -> Self {
        Configuration {
            ones: BTreeSet::new(),
            head: 0,
            state: START,
        }
    }

    pub fn read(&self, pos: i64) -> u8 {
        u8::from(self.ones.contains(&pos))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Next(Configuration),
    /// The machine was already in the halting state, or no instruction
    /// matched (`stalled`).
    Halted { stalled: bool },
}

pub fn step(tm: &TuringMachine, c: &Configuration) -> Step {
    if c.state == HALT {
        return Step::Halted { stalled: false };
    }
    let Some(ins) = tm.instruction_for(c.state, c.read(c.head)) else {
        return Step::Halted { stalled: true };
    };
    let mut next = c.clone();
    if ins.write == 1 {
        next.ones.insert(c.head);
    } else {
        next.ones.remove(&c.head);
    }
    next.head += match ins.dir {
        Direction::L => -1,
        Direction::R => 1,
    };
    next.state = ins.next;
    Step::Next(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// Reached the halting state (or stalled) after `steps` steps.
    Halted { steps: u64, stalled: bool },
    Running,
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunOutcome::Halted {
                steps,
                stalled: false,
            } => write!(f, "HALTED({steps})"),
            RunOutcome::Halted {
                steps,
                stalled: true,
            } => write!(f, "HALTED({steps}, stalled)"),
            RunOutcome::Running => f.write_str("RUNNING"),
        }
    }
}

/// Runs from the empty tape for at most `max_steps` steps.
pub fn run_bounded(tm: &TuringMachine, max_steps: u64) -> RunOutcome {
    let mut config = Configuration::initial();
    let mut steps = 0;
    loop {
        match step(tm, &config) {
            Step::Halted { stalled } => return RunOutcome::Halted { steps, stalled },
            Step::Next(_) if steps == max_steps => return RunOutcome::Running,
            Step::Next(next) => {
                config = next;
                steps += 1;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected `states:` header before any instruction")]
    MissingHeader,
    #[error("`states:` declared twice")]
    DuplicateHeader,
    #[error("unknown state `{0}`")]
    UnknownStateName(String),
    #[error("expected bit 0 or 1, found `{0}`")]
    BadBit(String),
    #[error("expected direction L or R, found `{0}`")]
    BadDirection(String),
    #[error("expected `->`, found `{0}`")]
    MissingArrow(String),
    #[error("expected `<state> <read> -> <write> <L|R> <next>`")]
    WrongFieldCount,
    #[error("empty machine description")]
    Empty,
    #[error(transparent)]
    Invalid(#[from] TmError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

/// Parses the line-oriented machine format:
///
/// ```text
/// # comment
/// states: halt start other
/// start 0 -> 1 R other
/// ```
pub fn parse_tm(text: &str) -> Result<TuringMachine, ParseError> {
    let mut states: Option<Vec<String>> = None;
    let mut index: HashMap<String, StateIndex> = HashMap::new();
    let mut instructions = Vec::new();
    let mut origins = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        let Some(&(first_col, first)) = tokens.first() else {
            continue;
        };
        let err = |column: usize, kind: ParseErrorKind| ParseError { line, column, kind };

        if let Some(rest) = first.strip_prefix("states:") {
            if states.is_some() {
                return Err(err(first_col, ParseErrorKind::DuplicateHeader));
            }
            let mut names = Vec::new();
            if !rest.is_empty() {
                names.push(rest.to_string());
            }
            names.extend(tokens[1..].iter().map(|(_, t)| t.to_string()));
            for (i, name) in names.iter().enumerate() {
                if index.insert(name.clone(), i).is_some() {
                    return Err(err(
                        first_col,
                        TmError::DuplicateStateName(name.clone()).into(),
                    ));
                }
            }
            if names.len() < 2 {
                return Err(err(first_col, TmError::TooFewStates.into()));
            }
            states = Some(names);
            continue;
        }

        if states.is_none() {
            return Err(err(first_col, ParseErrorKind::MissingHeader));
        }
        if tokens.len() != 6 {
            return Err(err(first_col, ParseErrorKind::WrongFieldCount));
        }
        let state_of = |(col, tok): (usize, &str)| {
            index
                .get(tok)
                .copied()
                .ok_or_else(|| err(col, ParseErrorKind::UnknownStateName(tok.to_string())))
        };
        let bit_of = |(col, tok): (usize, &str)| match tok {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            _ => Err(err(col, ParseErrorKind::BadBit(tok.to_string()))),
        };
        let state = state_of(tokens[0])?;
        let read = bit_of(tokens[1])?;
        if tokens[2].1 != "->" {
            return Err(err(
                tokens[2].0,
                ParseErrorKind::MissingArrow(tokens[2].1.to_string()),
            ));
        }
        let write = bit_of(tokens[3])?;
        let dir = match tokens[4].1 {
            "L" => Direction::L,
            "R" => Direction::R,
            other => {
                return Err(err(
                    tokens[4].0,
                    ParseErrorKind::BadDirection(other.to_string()),
                ))
            }
        };
        let next = state_of(tokens[5])?;
        instructions.push(Instruction {
            state,
            read,
            write,
            dir,
            next,
        });
        origins.push((line, first_col));
    }

    let Some(states) = states else {
        return Err(ParseError {
            line: 1,
            column: 1,
            kind: ParseErrorKind::Empty,
        });
    };
    // Re-validate instruction by instruction so errors carry the right line.
    for end in 1..=instructions.len() {
        if let Err(e) = TuringMachine::new(states.clone(), instructions[..end].to_vec()) {
            let (line, column) = origins[end - 1];
            return Err(ParseError {
                line,
                column,
                kind: e.into(),
            });
        }
    }
    TuringMachine::new(states, instructions).map_err(|e| ParseError {
        line: 1,
        column: 1,
        kind: e.into(),
    })
}

/// Whitespace-separated tokens with 1-based columns.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}
