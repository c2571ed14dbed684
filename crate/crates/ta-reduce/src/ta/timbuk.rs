//! Reading and writing the Timbuk tree automaton format.
//!
//! The format is bottom-up: a line `a(q1,q2) -> q` says that symbol `a`
//! combines child states `q1,q2` into `q`, and `Final States` lists the
//! states accepting at the root. Parsing reverses each rule into the
//! top-down view used everywhere else in this crate, and the final states
//! become the initial states; serialization reverses back. The acceptance
//! state ψ never appears in the textual form: leaf rules are written
//! `a -> q`.
//!
//! `#` starts a comment running to the end of the line. Names are nonempty
//! words over `[A-Za-z0-9_]`. An `Ops` section with no symbols and an empty
//! `Transitions` section are both accepted.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::automaton::{Alphabet, Rule, StateId, TreeAutomaton};

/// Parse error with 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct TimbukError {
    pub line: usize,
    pub col: usize,
    pub kind: TimbukErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimbukErrorKind {
    Syntax(String),
    DuplicateSymbol(String),
    DuplicateState(String),
    DuplicateSection(String),
    UndeclaredSymbol(String),
    UndeclaredState(String),
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
}

impl fmt::Display for TimbukErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimbukErrorKind::Syntax(msg) => write!(f, "{msg}"),
            TimbukErrorKind::DuplicateSymbol(s) => write!(f, "duplicate symbol declaration {s:?}"),
            TimbukErrorKind::DuplicateState(s) => write!(f, "duplicate state declaration {s:?}"),
            TimbukErrorKind::DuplicateSection(s) => write!(f, "duplicate {s} section"),
            TimbukErrorKind::UndeclaredSymbol(s) => write!(f, "undeclared symbol {s:?}"),
            TimbukErrorKind::UndeclaredState(s) => write!(f, "undeclared state {s:?}"),
            TimbukErrorKind::ArityMismatch {
                symbol,
                expected,
                found,
            } => write!(
                f,
                "symbol {symbol:?} has rank {expected} but is applied to {found} states"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Name(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Arrow,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Name(n) => write!(f, "{n:?}"),
            Token::LParen => write!(f, "'('"),
            Token::RParen => write!(f, "')'"),
            Token::Comma => write!(f, "','"),
            Token::Colon => write!(f, "':'"),
            Token::Arrow => write!(f, "'->'"),
        }
    }
}

/// One source line broken into tokens, with the column of each token.
struct Line {
    number: usize,
    tokens: Vec<(usize, Token)>,
}

fn err(line: usize, col: usize, kind: TimbukErrorKind) -> TimbukError {
    TimbukError { line, col, kind }
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> TimbukError {
    err(line, col, TimbukErrorKind::Syntax(msg.into()))
}

fn tokenize(number: usize, text: &str) -> Result<Line, TimbukError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let col = i + 1;
        match bytes[i] {
            b'#' => break,
            b if b.is_ascii_whitespace() => i += 1,
            b'(' => {
                tokens.push((col, Token::LParen));
                i += 1;
            }
            b')' => {
                tokens.push((col, Token::RParen));
                i += 1;
            }
            b',' => {
                tokens.push((col, Token::Comma));
                i += 1;
            }
            b':' => {
                tokens.push((col, Token::Colon));
                i += 1;
            }
            b'-' => {
                if bytes.get(i + 1) == Some(&b'>') {
                    tokens.push((col, Token::Arrow));
                    i += 2;
                } else {
                    return Err(syntax(number, col, "expected '->'"));
                }
            }
            b if b.is_ascii_alphanumeric() || b == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                tokens.push((
                    col,
                    Token::Name(String::from_utf8_lossy(&bytes[start..i]).into_owned()),
                ));
            }
            other => {
                return Err(syntax(
                    number,
                    col,
                    format!("unexpected character {:?}", other as char),
                ))
            }
        }
    }
    Ok(Line { number, tokens })
}

struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str) -> LineReader<'a> {
        LineReader {
            lines: text.lines().enumerate(),
        }
    }

    /// Next line that carries tokens, skipping blank and comment-only lines.
    fn next_content(&mut self) -> Result<Option<Line>, TimbukError> {
        for (idx, text) in self.lines.by_ref() {
            let line = tokenize(idx + 1, text)?;
            if !line.tokens.is_empty() {
                return Ok(Some(line));
            }
        }
        Ok(None)
    }
}

fn expect_keyword(line: &Line, at: usize, word: &str) -> Result<(), TimbukError> {
    match line.tokens.get(at) {
        Some((_, Token::Name(n))) if n == word => Ok(()),
        Some((col, tok)) => Err(syntax(
            line.number,
            *col,
            format!("expected {word:?}, found {tok}"),
        )),
        None => Err(syntax(
            line.number,
            end_col(line),
            format!("expected {word:?}"),
        )),
    }
}

fn end_col(line: &Line) -> usize {
    line.tokens.last().map(|(c, _)| c + 1).unwrap_or(1)
}

fn take_name(line: &Line, at: usize, what: &str) -> Result<String, TimbukError> {
    match line.tokens.get(at) {
        Some((_, Token::Name(n))) => Ok(n.clone()),
        Some((col, tok)) => Err(syntax(
            line.number,
            *col,
            format!("expected {what}, found {tok}"),
        )),
        None => Err(syntax(line.number, end_col(line), format!("expected {what}"))),
    }
}

fn no_more(line: &Line, at: usize) -> Result<(), TimbukError> {
    if let Some((col, tok)) = line.tokens.get(at) {
        return Err(syntax(
            line.number,
            *col,
            format!("unexpected {tok} at end of line"),
        ));
    }
    Ok(())
}

/// Parses a Timbuk document into a top-down tree automaton.
pub fn parse_timbuk(text: &str) -> Result<TreeAutomaton, TimbukError> {
    let mut reader = LineReader::new(text);

    // Ops
    let ops = reader
        .next_content()?
        .ok_or_else(|| syntax(1, 1, "empty document, expected an Ops section"))?;
    expect_keyword(&ops, 0, "Ops")?;
    let mut alphabet = Alphabet::new();
    let mut at = 1;
    while at < ops.tokens.len() {
        let (col, _) = ops.tokens[at];
        let name = take_name(&ops, at, "a symbol name")?;
        match ops.tokens.get(at + 1) {
            Some((_, Token::Colon)) => {}
            Some((c, tok)) => {
                return Err(syntax(ops.number, *c, format!("expected ':', found {tok}")))
            }
            None => return Err(syntax(ops.number, end_col(&ops), "expected ':'")),
        }
        let rank_text = take_name(&ops, at + 2, "a rank")?;
        let rank: usize = rank_text
            .parse()
            .map_err(|_| syntax(ops.number, ops.tokens[at + 2].0, "rank must be a number"))?;
        alphabet
            .add(&name, rank)
            .map_err(|_| err(ops.number, col, TimbukErrorKind::DuplicateSymbol(name.clone())))?;
        at += 3;
    }

    // Automaton
    let header = reader
        .next_content()?
        .ok_or_else(|| syntax(ops.number + 1, 1, "expected an Automaton section"))?;
    expect_keyword(&header, 0, "Automaton")?;
    let automaton_name = take_name(&header, 1, "an automaton name")?;
    no_more(&header, 2)?;

    // States
    let states_line = reader
        .next_content()?
        .ok_or_else(|| syntax(header.number + 1, 1, "expected a States section"))?;
    if let Some((col, Token::Name(n))) = states_line.tokens.first() {
        if n == "Automaton" {
            return Err(err(
                states_line.number,
                *col,
                TimbukErrorKind::DuplicateSection("Automaton".to_string()),
            ));
        }
    }
    expect_keyword(&states_line, 0, "States")?;
    let mut state_names = Vec::new();
    let mut state_ids: HashMap<String, StateId> = HashMap::new();
    for at in 1..states_line.tokens.len() {
        let (col, _) = states_line.tokens[at];
        let name = take_name(&states_line, at, "a state name")?;
        if state_ids.insert(name.clone(), state_names.len()).is_some() {
            return Err(err(
                states_line.number,
                col,
                TimbukErrorKind::DuplicateState(name),
            ));
        }
        state_names.push(name);
    }
    let psi = state_names.len();

    // Final States
    let finals_line = reader
        .next_content()?
        .ok_or_else(|| syntax(states_line.number + 1, 1, "expected a Final States section"))?;
    expect_keyword(&finals_line, 0, "Final")?;
    expect_keyword(&finals_line, 1, "States")?;
    let mut initials = Vec::new();
    for at in 2..finals_line.tokens.len() {
        let (col, _) = finals_line.tokens[at];
        let name = take_name(&finals_line, at, "a state name")?;
        let id = *state_ids.get(&name).ok_or_else(|| {
            err(finals_line.number, col, TimbukErrorKind::UndeclaredState(name))
        })?;
        initials.push(id);
    }

    // Transitions
    let trans_line = reader
        .next_content()?
        .ok_or_else(|| syntax(finals_line.number + 1, 1, "expected a Transitions section"))?;
    expect_keyword(&trans_line, 0, "Transitions")?;
    no_more(&trans_line, 1)?;

    let mut rules = Vec::new();
    while let Some(line) = reader.next_content()? {
        rules.push(parse_rule(&line, &alphabet, &state_ids, psi)?);
    }

    TreeAutomaton::from_parts(
        &automaton_name,
        alphabet,
        state_names,
        initials,
        rules,
        Vec::new(),
    )
    .map_err(|e| syntax(trans_line.number, 1, format!("invalid automaton: {e}")))
}

fn parse_rule(
    line: &Line,
    alphabet: &Alphabet,
    state_ids: &HashMap<String, StateId>,
    psi: StateId,
) -> Result<Rule, TimbukError> {
    let (sym_col, _) = line.tokens[0];
    let symbol_name = take_name(line, 0, "a symbol name")?;
    let symbol = alphabet.id(&symbol_name).ok_or_else(|| {
        err(
            line.number,
            sym_col,
            TimbukErrorKind::UndeclaredSymbol(symbol_name.clone()),
        )
    })?;
    let lookup = |at: usize| -> Result<StateId, TimbukError> {
        let (col, _) = line.tokens[at];
        let name = take_name(line, at, "a state name")?;
        state_ids
            .get(&name)
            .copied()
            .ok_or_else(|| err(line.number, col, TimbukErrorKind::UndeclaredState(name)))
    };

    let mut children = Vec::new();
    let mut at = 1;
    if let Some((_, Token::LParen)) = line.tokens.get(at) {
        at += 1;
        loop {
            children.push(lookup(at)?);
            at += 1;
            match line.tokens.get(at) {
                Some((_, Token::Comma)) => at += 1,
                Some((_, Token::RParen)) => {
                    at += 1;
                    break;
                }
                Some((col, tok)) => {
                    return Err(syntax(
                        line.number,
                        *col,
                        format!("expected ',' or ')', found {tok}"),
                    ))
                }
                None => return Err(syntax(line.number, end_col(line), "expected ',' or ')'")),
            }
        }
    }
    match line.tokens.get(at) {
        Some((_, Token::Arrow)) => {}
        Some((col, tok)) => {
            return Err(syntax(
                line.number,
                *col,
                format!("expected '->', found {tok}"),
            ))
        }
        None => return Err(syntax(line.number, end_col(line), "expected '->'")),
    }
    let source = lookup(at + 1)?;
    no_more(line, at + 2)?;

    let rank = alphabet.rank(symbol);
    if children.len() != rank {
        return Err(err(
            line.number,
            sym_col,
            TimbukErrorKind::ArityMismatch {
                symbol: symbol_name,
                expected: rank,
                found: children.len(),
            },
        ));
    }
    let targets = if rank == 0 { vec![psi] } else { children };
    Ok(Rule {
        source,
        symbol,
        targets,
    })
}

/// Serializes an automaton back to the Timbuk format.
///
/// The output is canonical: symbols and states keep their declaration
/// order, initial states are listed in state order, and transition lines
/// are sorted lexicographically. Comments attached to the automaton are
/// emitted after the `Automaton` line. ψ is hidden.
pub fn serialize_timbuk(a: &TreeAutomaton) -> String {
    let mut out = String::new();
    out.push_str("Ops");
    for s in a.alphabet().symbols() {
        out.push_str(&format!(" {}:{}", a.alphabet().name(s), a.alphabet().rank(s)));
    }
    out.push('\n');
    out.push_str(&format!("Automaton {}\n", a.name()));
    for c in a.comments() {
        out.push_str(&format!("# {c}\n"));
    }
    out.push_str("States");
    for q in a.visible_states() {
        out.push_str(&format!(" {}", a.state_name(q)));
    }
    out.push('\n');
    out.push_str("Final States");
    for &q in a.initials() {
        out.push_str(&format!(" {}", a.state_name(q)));
    }
    out.push('\n');
    out.push_str("Transitions\n");
    let mut lines: Vec<String> = a
        .rules()
        .iter()
        .map(|r| {
            let symbol = a.alphabet().name(r.symbol);
            let source = a.state_name(r.source);
            if a.alphabet().rank(r.symbol) == 0 {
                format!("{symbol} -> {source}")
            } else {
                let children: Vec<&str> = r.targets.iter().map(|&t| a.state_name(t)).collect();
                format!("{symbol}({}) -> {source}", children.join(","))
            }
        })
        .collect();
    lines.sort_unstable();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Canonical text form used for structural comparisons: the serialization
/// with comment lines removed.
pub fn canonical_form(a: &TreeAutomaton) -> String {
    serialize_timbuk(a)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}
