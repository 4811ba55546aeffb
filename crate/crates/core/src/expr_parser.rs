//! Composition expressions.
//!
//! ```text
//! program := decl* expr
//! decl    := ID ':' INT ';'
//! expr    := term (OP INT term)*        left-associative
//! term    := ID | '(' expr ')'
//! OP      := 'o_' | '@'                 the INT may be glued on: o_2, @2
//! ```
//!
//! `#` starts a comment running to the end of the line. A composition
//! position always addresses the current foliage of the left operand, so
//! in `(f o_2 g) o_4 h` the 4 counts leaves of `f o_2 g`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::config::Config;
use crate::flat_machine::{Event, FlatState, MachineError};
use crate::ids::{is_operator_word, IdError, OperadId, Position};
use crate::tree_oracle::{Node, TreeOperad};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ComposeExpr {
    Atom(OperadId),
    Compose(Box<ComposeExpr>, Position, Box<ComposeExpr>),
}

impl ComposeExpr {
    pub fn atom(id: OperadId) -> Self {
        ComposeExpr::Atom(id)
    }

    pub fn compose(left: ComposeExpr, i: Position, right: ComposeExpr) -> Self {
        ComposeExpr::Compose(Box::new(left), i, Box::new(right))
    }

    /// Leftmost atom: the operad that ends up as the root.
    pub fn root(&self) -> &OperadId {
        match self {
            ComposeExpr::Atom(id) => id,
            ComposeExpr::Compose(l, _, _) => l.root(),
        }
    }

    /// Atoms in left-to-right order, repeats included.
    pub fn atoms(&self) -> Vec<&OperadId> {
        match self {
            ComposeExpr::Atom(id) => vec![id],
            ComposeExpr::Compose(l, _, r) => {
                let mut v = l.atoms();
                v.extend(r.atoms());
                v
            }
        }
    }

    /// Number of leaves, given the atoms' arities. `None` for unknown atoms.
    pub fn leaf_count(&self, arities: &BTreeMap<OperadId, usize>) -> Option<usize> {
        match self {
            ComposeExpr::Atom(id) => arities.get(id).copied(),
            ComposeExpr::Compose(l, _, r) => {
                Some(l.leaf_count(arities)? + r.leaf_count(arities)? - 1)
            }
        }
    }

    /// The tree this expression denotes, without any machine bounds.
    pub fn to_tree(&self, arities: &BTreeMap<OperadId, usize>) -> Result<TreeOperad, ElabError> {
        match self {
            ComposeExpr::Atom(id) => {
                let n = *arities.get(id).ok_or_else(|| ElabError {
                    node: self.to_string(),
                    kind: ElabErrorKind::Undeclared(id.clone()),
                })?;
                Ok(TreeOperad::new(id.clone(), vec![Node::Leaf; n]))
            }
            ComposeExpr::Compose(l, i, r) => {
                let lt = l.to_tree(arities)?;
                let rt = r.to_tree(arities)?;
                lt.graft(*i, &rt).map_err(|e| ElabError {
                    node: self.to_string(),
                    kind: ElabErrorKind::Tree(e.to_string()),
                })
            }
        }
    }
}

/// Fully parenthesized: `((f o_2 g) o_4 h)`.
impl fmt::Display for ComposeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComposeExpr::Atom(id) => write!(f, "{id}"),
            ComposeExpr::Compose(l, i, r) => write!(f, "({l} o_{i} {r})"),
        }
    }
}

pub fn print_expr(expr: &ComposeExpr) -> String {
    expr.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Declaration {
    pub id: OperadId,
    pub arity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub decls: Vec<Declaration>,
    pub expr: ComposeExpr,
}

impl Program {
    pub fn arities(&self) -> BTreeMap<OperadId, usize> {
        self.decls.iter().map(|d| (d.id.clone(), d.arity)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    Lex(char),
    #[error("expected {expected}, found {found}")]
    Syntax { expected: &'static str, found: String },
    #[error("{0}")]
    BadId(IdError),
    #[error("integer `{0}` out of range")]
    BadInt(String),
    #[error("undeclared atom `{0}`")]
    Undeclared(OperadId),
    #[error("duplicate declaration of `{0}`")]
    Duplicate(OperadId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Id(String),
    Int(String),
    /// operator with its position if written glued (`o_2`, `@2`)
    Op(Option<String>),
    Colon,
    Semi,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Id(s) => write!(f, "`{s}`"),
            Tok::Int(s) => write!(f, "`{s}`"),
            Tok::Op(Some(n)) => write!(f, "`o_{n}`"),
            Tok::Op(None) => f.write_str("`o_`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1, 1);
    let take_while = |chars: &mut std::iter::Peekable<std::str::Chars>, col: &mut usize, pred: fn(char) -> bool| {
        let mut s = String::new();
        while let Some(&c) = chars.peek() {
            if !pred(c) {
                break;
            }
            s.push(c);
            chars.next();
            *col += 1;
        }
        s
    };
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        let tok = match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
                continue;
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                }
                continue;
            }
            ':' | ';' | '(' | ')' | '@' => {
                chars.next();
                col += 1;
                match c {
                    ':' => Tok::Colon,
                    ';' => Tok::Semi,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    _ => {
                        let n = take_while(&mut chars, &mut col, |c| c.is_ascii_digit());
                        Tok::Op((!n.is_empty()).then_some(n))
                    }
                }
            }
            c if c.is_ascii_digit() => Tok::Int(take_while(&mut chars, &mut col, |c| c.is_ascii_digit())),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let w = take_while(&mut chars, &mut col, |c| c.is_ascii_alphanumeric() || c == '_');
                if is_operator_word(&w) {
                    let n = &w[2..];
                    Tok::Op((!n.is_empty()).then(|| n.to_string()))
                } else {
                    Tok::Id(w)
                }
            }
            other => {
                return Err(ParseError {
                    line,
                    col,
                    kind: ParseErrorKind::Lex(other),
                })
            }
        };
        out.push(Spanned { tok, line: l0, col: c0 });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
    decl_spans: Vec<(usize, usize)>,
    atom_spans: Vec<(OperadId, usize, usize)>,
}

impl Parser {
    fn new(toks: Vec<Spanned>) -> Self {
        Parser {
            toks,
            at: 0,
            decl_spans: Vec::new(),
            atom_spans: Vec::new(),
        }
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.at];
        (t.line, t.col)
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].tok
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        let t = &self.toks[self.at];
        ParseError {
            line: t.line,
            col: t.col,
            kind,
        }
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        self.err(ParseErrorKind::Syntax {
            expected,
            found: self.peek().to_string(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn ident(&mut self) -> Result<OperadId, ParseError> {
        match self.peek() {
            Tok::Id(s) => {
                let id = OperadId::new(s.as_str()).map_err(|e| self.err(ParseErrorKind::BadId(e)))?;
                self.bump();
                Ok(id)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn int(&mut self, text: &str) -> Result<usize, ParseError> {
        text.parse()
            .map_err(|_| self.err(ParseErrorKind::BadInt(text.to_string())))
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut decls = Vec::new();
        while matches!(self.peek(), Tok::Id(_)) && *self.peek2() == Tok::Colon {
            self.decl_spans.push(self.here());
            let id = self.ident()?;
            self.bump();
            let arity = match self.peek().clone() {
                Tok::Int(s) => {
                    let n = self.int(&s)?;
                    if n == 0 {
                        return Err(self.err(ParseErrorKind::BadInt(s)));
                    }
                    self.bump();
                    n
                }
                _ => return Err(self.unexpected("an arity")),
            };
            if self.bump() != Tok::Semi {
                self.at -= 1;
                return Err(self.unexpected("`;`"));
            }
            decls.push(Declaration { id, arity });
        }
        let expr = self.expr()?;
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("`o_` or end of input"));
        }
        Ok(Program { decls, expr })
    }

    fn expr(&mut self) -> Result<ComposeExpr, ParseError> {
        let mut left = self.term()?;
        while let Tok::Op(glued) = self.peek().clone() {
            self.bump();
            let text = match glued {
                Some(n) => n,
                None => match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        n
                    }
                    _ => return Err(self.unexpected("a position")),
                },
            };
            let i = self.int(&text)?;
            let i = Position::new(i).map_err(|_| {
                self.at -= 1;
                self.err(ParseErrorKind::BadInt(text.clone()))
            })?;
            let right = self.term()?;
            left = ComposeExpr::compose(left, i, right);
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<ComposeExpr, ParseError> {
        match self.peek() {
            Tok::Id(_) => {
                let (line, col) = self.here();
                let id = self.ident()?;
                self.atom_spans.push((id.clone(), line, col));
                Ok(ComposeExpr::Atom(id))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(e)
            }
            _ => Err(self.unexpected("an identifier or `(`")),
        }
    }
}

/// Parse a whole program and check that declarations are unique and every
/// atom is declared. Positions are checked by [`elaborate`].
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks);
    let program = p.program()?;

    let mut seen = BTreeSet::new();
    for (d, &(line, col)) in program.decls.iter().zip(&p.decl_spans) {
        if !seen.insert(&d.id) {
            return Err(ParseError {
                line,
                col,
                kind: ParseErrorKind::Duplicate(d.id.clone()),
            });
        }
    }
    for (atom, line, col) in &p.atom_spans {
        if !seen.contains(atom) {
            return Err(ParseError {
                line: *line,
                col: *col,
                kind: ParseErrorKind::Undeclared(atom.clone()),
            });
        }
    }
    Ok(program)
}

/// Parse a bare expression with no declarations.
pub fn parse_expr(src: &str) -> Result<ComposeExpr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser::new(toks);
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("`o_` or end of input"));
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("in `{node}`: {kind}")]
pub struct ElabError {
    /// the offending sub-expression, printed
    pub node: String,
    pub kind: ElabErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElabErrorKind {
    #[error("undeclared atom `{0}`")]
    Undeclared(OperadId),
    #[error("atom `{0}` is used more than once")]
    Reused(OperadId),
    #[error("arity {arity} of `{id}` exceeds max_args = {max_args}")]
    ArityTooLarge { id: OperadId, arity: usize, max_args: usize },
    #[error("position {position} outside the left operand's foliage 1..={leaves}")]
    PositionOutOfRange { position: usize, leaves: usize },
    #[error("{0}")]
    Tree(String),
    #[error("{0}")]
    Machine(MachineError),
}

impl ElabErrorKind {
    /// Guard label when the machine refused an event.
    pub fn label(&self) -> &'static str {
        match self {
            ElabErrorKind::Machine(e) => e.label(),
            ElabErrorKind::Undeclared(_) => "undeclared",
            ElabErrorKind::Reused(_) => "reused-atom",
            ElabErrorKind::ArityTooLarge { .. } => "max_args",
            ElabErrorKind::PositionOutOfRange { .. } => "position",
            ElabErrorKind::Tree(_) => "tree",
        }
    }
}

/// Turn a program into machine events: one `new` per used declaration in
/// declaration order, then one `compose` per node in post-order, addressed
/// to the roots of the operands. The sequence is replayed against an empty
/// machine so bound violations surface here, tagged with their node.
pub fn elaborate(program: &Program, config: &Config) -> Result<Vec<Event>, ElabError> {
    let arities = program.arities();
    let mut used = BTreeSet::new();
    for atom in program.expr.atoms() {
        if !arities.contains_key(atom) {
            return Err(ElabError {
                node: atom.to_string(),
                kind: ElabErrorKind::Undeclared(atom.clone()),
            });
        }
        if !used.insert(atom.clone()) {
            return Err(ElabError {
                node: program.expr.to_string(),
                kind: ElabErrorKind::Reused(atom.clone()),
            });
        }
    }

    let mut events = Vec::new();
    let mut state = FlatState::new(*config);
    let mut fire = |event: Event, node: &dyn fmt::Display, state: &mut FlatState| {
        *state = state.apply(&event).map_err(|e| ElabError {
            node: node.to_string(),
            kind: ElabErrorKind::Machine(e),
        })?;
        events.push(event);
        Ok::<_, ElabError>(())
    };

    for d in program.decls.iter().filter(|d| used.contains(&d.id)) {
        if d.arity > config.max_args() {
            return Err(ElabError {
                node: d.id.to_string(),
                kind: ElabErrorKind::ArityTooLarge {
                    id: d.id.clone(),
                    arity: d.arity,
                    max_args: config.max_args(),
                },
            });
        }
        let e = Event::New {
            id: d.id.clone(),
            inputs: d.arity,
            outputs: 1,
        };
        fire(e, &d.id, &mut state)?;
    }

    type Fire<'f> = dyn FnMut(Event, &dyn fmt::Display, &mut FlatState) -> Result<(), ElabError> + 'f;

    fn walk(
        e: &ComposeExpr,
        arities: &BTreeMap<OperadId, usize>,
        state: &mut FlatState,
        fire: &mut Fire<'_>,
    ) -> Result<(), ElabError> {
        if let ComposeExpr::Compose(l, i, r) = e {
            walk(l, arities, state, fire)?;
            walk(r, arities, state, fire)?;
            let leaves = l.leaf_count(arities).expect("atoms checked");
            if i.get() > leaves {
                return Err(ElabError {
                    node: e.to_string(),
                    kind: ElabErrorKind::PositionOutOfRange {
                        position: i.get(),
                        leaves,
                    },
                });
            }
            let ev = Event::Compose {
                op1: l.root().clone(),
                position: *i,
                op2: r.root().clone(),
            };
            fire(ev, e, state)?;
        }
        Ok(())
    }
    walk(&program.expr, &arities, &mut state, &mut fire)?;
    Ok(events)
}
