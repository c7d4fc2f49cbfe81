//! Tokenizer with Python-style INDENT/DEDENT tracking.

use super::error::RuntimeError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest first so that greedy matching works.
const OPERATORS: &[&str] = &[
    "**=", "//=", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "**", "//", "->", "+", "-",
    "*", "/", "%", "<", ">", "=", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, RuntimeError> {
    Lexer::new(src).run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    indents: Vec<usize>,
    depth: usize,
    out: Vec<Token>,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            indents: vec![0],
            depth: 0,
            out: Vec::new(),
        }
    }

    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, tok: Tok, line: usize, col: usize) {
        self.out.push(Token { tok, line, col });
    }

    fn err(&self, msg: impl Into<String>) -> RuntimeError {
        RuntimeError::syntax(self.line, self.col, msg)
    }

    fn run(mut self) -> Result<Vec<Token>, RuntimeError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.handle_indentation()? {
                    break;
                }
                at_line_start = false;
            }
            let Some(c) = self.peek(0) else { break };
            match c {
                '\n' => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    if self.depth == 0 {
                        self.push(Tok::Newline, line, col);
                        at_line_start = true;
                    }
                }
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '#' => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                }
                '\\' if self.peek(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '"' | '\'' => self.string()?,
                c if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) => {
                    self.number()?
                }
                c if c.is_alphabetic() || c == '_' => {
                    let (line, col) = (self.line, self.col);
                    let mut name = String::new();
                    while let Some(c) = self.peek(0).filter(|c| c.is_alphanumeric() || *c == '_') {
                        name.push(c);
                        self.bump();
                    }
                    self.push(Tok::Name(name), line, col);
                }
                _ => self.operator()?,
            }
        }
        if self.depth > 0 {
            return Err(self.err("unexpected end of input inside brackets"));
        }
        let (line, col) = (self.line, self.col);
        if self
            .out
            .last()
            .is_some_and(|t| !matches!(t.tok, Tok::Newline | Tok::Dedent))
        {
            self.push(Tok::Newline, line, col);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, line, col);
        }
        self.push(Tok::Eof, line, col);
        Ok(self.out)
    }

    /// Measures leading whitespace of a logical line and emits INDENT/DEDENT.
    /// Blank and comment-only lines are skipped. Returns false at end of input.
    fn handle_indentation(&mut self) -> Result<bool, RuntimeError> {
        loop {
            let mut width = 0;
            let mut ahead = 0;
            while let Some(c) = self.peek(ahead) {
                match c {
                    ' ' => width += 1,
                    '\t' => width = (width / 8 + 1) * 8,
                    '\r' | '\x0c' => {}
                    _ => break,
                }
                ahead += 1;
            }
            match self.peek(ahead) {
                None => {
                    for _ in 0..ahead {
                        self.bump();
                    }
                    return Ok(false);
                }
                Some('\n') | Some('#') => {
                    while self.peek(0).is_some_and(|c| c != '\n') {
                        self.bump();
                    }
                    if self.bump().is_none() {
                        return Ok(false);
                    }
                    continue;
                }
                Some(_) => {
                    for _ in 0..ahead {
                        self.bump();
                    }
                    let current = *self.indents.last().expect("indent stack nonempty");
                    if width > current {
                        self.indents.push(width);
                        self.push(Tok::Indent, self.line, self.col);
                    } else {
                        while width < *self.indents.last().expect("indent stack nonempty") {
                            self.indents.pop();
                            self.push(Tok::Dedent, self.line, self.col);
                        }
                        if width != *self.indents.last().expect("indent stack nonempty") {
                            return Err(RuntimeError::syntax(
                                self.line,
                                1,
                                "unindent does not match any outer indentation level",
                            ));
                        }
                    }
                    return Ok(true);
                }
            }
        }
    }

    fn string(&mut self) -> Result<(), RuntimeError> {
        let (line, col) = (self.line, self.col);
        let quote = self.bump().expect("quote present");
        let triple = self.peek(0) == Some(quote) && self.peek(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let mut value = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(RuntimeError::syntax(line, col, "unterminated string literal"));
            };
            if c == quote {
                if !triple {
                    break;
                }
                if self.peek(0) == Some(quote) && self.peek(1) == Some(quote) {
                    self.bump();
                    self.bump();
                    break;
                }
                value.push(c);
                continue;
            }
            match c {
                '\n' if !triple => {
                    return Err(RuntimeError::syntax(line, col, "unterminated string literal"));
                }
                '\\' => {
                    let Some(e) = self.bump() else {
                        return Err(RuntimeError::syntax(line, col, "unterminated string literal"));
                    };
                    match e {
                        'n' => value.push('\n'),
                        't' => value.push('\t'),
                        '\\' => value.push('\\'),
                        '\'' => value.push('\''),
                        '"' => value.push('"'),
                        '\n' => {}
                        other => {
                            value.push('\\');
                            value.push(other);
                        }
                    }
                }
                _ => value.push(c),
            }
        }
        self.push(Tok::Str(value), line, col);
        Ok(())
    }

    fn number(&mut self) -> Result<(), RuntimeError> {
        let (line, col) = (self.line, self.col);
        let mut text = String::new();
        let mut is_float = false;
        while let Some(c) = self.peek(0) {
            if c.is_ascii_digit() || c == '_' {
                text.push(c);
            } else if c == '.' && !is_float {
                is_float = true;
                text.push(c);
            } else if (c == 'e' || c == 'E')
                && (self.peek(1).is_some_and(|d| d.is_ascii_digit())
                    || (matches!(self.peek(1), Some('+') | Some('-'))
                        && self.peek(2).is_some_and(|d| d.is_ascii_digit())))
            {
                is_float = true;
                text.push(c);
                self.bump();
                text.push(self.peek(0).expect("checked"));
            } else {
                break;
            }
            self.bump();
        }
        if self.peek(0).is_some_and(|c| c.is_alphabetic() || c == '_') {
            return Err(RuntimeError::syntax(line, col, "invalid numeric literal"));
        }
        let clean: String = text.chars().filter(|c| *c != '_').collect();
        let tok = if is_float {
            Tok::Float(
                clean
                    .parse()
                    .map_err(|_| RuntimeError::syntax(line, col, "invalid numeric literal"))?,
            )
        } else {
            Tok::Int(
                clean
                    .parse()
                    .map_err(|_| RuntimeError::syntax(line, col, "integer literal too large"))?,
            )
        };
        self.push(tok, line, col);
        Ok(())
    }

    fn operator(&mut self) -> Result<(), RuntimeError> {
        let (line, col) = (self.line, self.col);
        for op in OPERATORS {
            if op.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c)) {
                for _ in 0..op.chars().count() {
                    self.bump();
                }
                match *op {
                    "(" | "[" | "{" => self.depth += 1,
                    ")" | "]" | "}" => {
                        if self.depth == 0 {
                            return Err(RuntimeError::syntax(line, col, format!("unmatched '{op}'")));
                        }
                        self.depth -= 1;
                    }
                    _ => {}
                }
                self.push(Tok::Op(op), line, col);
                return Ok(());
            }
        }
        let c = self.peek(0).expect("operator called with input");
        Err(RuntimeError::syntax(line, col, format!("invalid character '{c}'")))
    }
}
