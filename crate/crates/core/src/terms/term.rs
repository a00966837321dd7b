use std::fmt;

use thiserror::Error;

/// A formal ternary expression over variables `a1..ap`.
///
/// Every internal node has exactly three ordered children, so a term is its
/// own unique parse tree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    /// 1-based variable index.
    Var(usize),
    Node(Box<[Term; 3]>),
}

impl Term {
    pub fn var(index: usize) -> Self {
        assert!(index >= 1, "variables are 1-based");
        Term::Var(index)
    }

    pub fn node(a: Term, b: Term, c: Term) -> Self {
        Term::Node(Box::new([a, b, c]))
    }

    pub fn children(&self) -> Option<&[Term; 3]> {
        match self {
            Term::Var(_) => None,
            Term::Node(ch) => Some(ch),
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Nesting depth: 0 for a variable, one more than the deepest child otherwise.
    pub fn complexity(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Node(ch) => 1 + ch.iter().map(Term::complexity).max().unwrap_or(0),
        }
    }

    /// Largest variable index occurring in the term.
    pub fn max_var(&self) -> usize {
        match self {
            Term::Var(i) => *i,
            Term::Node(ch) => ch.iter().map(Term::max_var).max().unwrap_or(0),
        }
    }

    /// Number of symbols (variables and nodes).
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::Node(ch) => 1 + ch.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// Realizes the term in a ternary algebra: variables go to the assigned
    /// elements, nodes to `op` applied to the evaluated children.
    pub fn evaluate<T, F>(&self, assignment: &[T], op: &mut F) -> T
    where
        T: Clone,
        F: FnMut(&T, &T, &T) -> T,
    {
        match self {
            Term::Var(i) => assignment[*i - 1].clone(),
            Term::Node(ch) => {
                let x = ch[0].evaluate(assignment, op);
                let y = ch[1].evaluate(assignment, op);
                let z = ch[2].evaluate(assignment, op);
                op(&x, &y, &z)
            }
        }
    }

    /// Subterm reached by following `depth` first-child links.
    pub fn first_child_chain(&self, depth: usize) -> Option<&Term> {
        let mut cur = self;
        for _ in 0..depth {
            cur = &cur.children()?[0];
        }
        Some(cur)
    }

    /// Copy of `self` with the subterm at first-child depth `depth` replaced.
    pub fn with_first_child_chain(&self, depth: usize, replacement: Term) -> Option<Term> {
        if depth == 0 {
            return Some(replacement);
        }
        let ch = self.children()?;
        let inner = ch[0].with_first_child_chain(depth - 1, replacement)?;
        Some(Term::node(inner, ch[1].clone(), ch[2].clone()))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(i) => write!(f, "a{i}"),
            Term::Node(ch) => write!(f, "<{} {} {}>", ch[0], ch[1], ch[2]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedEnd,
    UnexpectedChar(char),
    MissingVariableIndex,
    UnknownVariable(usize),
    /// A bracket closed after the given number of children.
    WrongArity(usize),
    MissingSeparator,
    TrailingInput,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedEnd => write!(f, "unbalanced brackets or truncated input"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            ParseErrorKind::MissingVariableIndex => write!(f, "variable without index"),
            ParseErrorKind::UnknownVariable(i) => write!(f, "unknown variable a{i}"),
            ParseErrorKind::WrongArity(n) => write!(f, "bracket has {n} children, expected 3"),
            ParseErrorKind::MissingSeparator => write!(f, "terms must be separated by spaces"),
            ParseErrorKind::TrailingInput => write!(f, "trailing input after term"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("term syntax error at byte {position}: {kind}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    alphabet: usize,
}

impl Parser<'_> {
    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            position: self.pos,
            kind,
        })
    }

    fn skip_spaces(&mut self) -> usize {
        let start = self.pos;
        while self.bytes.get(self.pos) == Some(&b' ') {
            self.pos += 1;
        }
        self.pos - start
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            None => self.err(ParseErrorKind::UnexpectedEnd),
            Some(b'a') => self.variable(),
            Some(b'<') => {
                self.pos += 1;
                self.skip_spaces();
                let mut children = Vec::with_capacity(3);
                loop {
                    match self.peek() {
                        None => return self.err(ParseErrorKind::UnexpectedEnd),
                        Some(b'>') => {
                            if children.len() != 3 {
                                return self.err(ParseErrorKind::WrongArity(children.len()));
                            }
                            self.pos += 1;
                            let [a, b, c]: [Term; 3] = children.try_into().expect("three children");
                            return Ok(Term::node(a, b, c));
                        }
                        Some(_) => {
                            if children.len() == 3 {
                                return self.err(ParseErrorKind::WrongArity(4));
                            }
                            children.push(self.term()?);
                            let gap = self.skip_spaces();
                            if gap == 0 && !matches!(self.peek(), Some(b'>') | None) {
                                return self.err(ParseErrorKind::MissingSeparator);
                            }
                        }
                    }
                }
            }
            Some(c) => self.err(ParseErrorKind::UnexpectedChar(c as char)),
        }
    }

    fn variable(&mut self) -> Result<Term, ParseError> {
        let start = self.pos;
        self.pos += 1;
        let digits_start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return self.err(ParseErrorKind::MissingVariableIndex);
        }
        let text = std::str::from_utf8(&self.bytes[digits_start..self.pos]).expect("ascii digits");
        let index = text.parse::<usize>().unwrap_or(usize::MAX);
        if index == 0 || index > self.alphabet {
            return Err(ParseError {
                position: start,
                kind: ParseErrorKind::UnknownVariable(index),
            });
        }
        Ok(Term::Var(index))
    }
}

/// Parses `term := "a" digits | "<" term " " term " " term ">"` over the
/// alphabet `a1..a{alphabet}`. Runs of spaces are accepted wherever one space is.
pub fn parse_term(text: &str, alphabet: usize) -> Result<Term, ParseError> {
    let mut parser = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        alphabet,
    };
    parser.skip_spaces();
    let term = parser.term()?;
    parser.skip_spaces();
    if parser.pos != parser.bytes.len() {
        return parser.err(ParseErrorKind::TrailingInput);
    }
    Ok(term)
}

/// All terms of complexity at most `max_complexity` over `alphabet` variables,
/// ordered by complexity and then by their serialized form.
pub fn enumerate_terms(alphabet: usize, max_complexity: usize) -> Vec<Term> {
    let mut levels: Vec<Vec<Term>> = vec![(1..=alphabet).map(Term::Var).collect()];
    for level in 1..=max_complexity {
        let lower: Vec<&Term> = levels.iter().flatten().collect();
        let mut fresh = Vec::new();
        for a in &lower {
            for b in &lower {
                for c in &lower {
                    let t = Term::node((*a).clone(), (*b).clone(), (*c).clone());
                    if t.complexity() == level {
                        fresh.push(t);
                    }
                }
            }
        }
        fresh.sort_by_cached_key(|t| t.to_string());
        levels.push(fresh);
    }
    levels.into_iter().flatten().collect()
}
