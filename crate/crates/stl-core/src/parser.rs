use thiserror::Error;

use crate::formula::{Formula, TimeInterval};

/// Syntax error with a 1-based source position.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("syntax error at line {line}, column {col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Amp,
    Pipe,
    Bang,
    Gt,
    Lt,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(v) => format!("number `{v}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Amp => "`&`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Bang => "`!`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Lt => "`<`".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(input: &'a str) -> Self {
        Lexer { chars: input.chars().peekable(), line: 1, col: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn tokenize(mut self) -> Result<(Vec<Token>, usize, usize), ParseError> {
        let mut out = Vec::new();
        while let Some(&c) = self.chars.peek() {
            let (line, col) = (self.line, self.col);
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.bump();
                }
                '(' | ')' | '[' | ']' | ',' | '&' | '|' | '!' | '>' | '<' => {
                    self.bump();
                    let tok = match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        ',' => Tok::Comma,
                        '&' => Tok::Amp,
                        '|' => Tok::Pipe,
                        '!' => Tok::Bang,
                        '>' => Tok::Gt,
                        _ => Tok::Lt,
                    };
                    out.push(Token { tok, line, col });
                }
                c if c.is_ascii_digit() || c == '-' || c == '.' => {
                    let text = self.scan_number(line, col)?;
                    let value: f64 = text.parse().map_err(|_| {
                        ParseError::new(line, col, format!("invalid number `{text}`"))
                    })?;
                    out.push(Token { tok: Tok::Number(value), line, col });
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut name = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '_' {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    out.push(Token { tok: Tok::Ident(name), line, col });
                }
                other => {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("unexpected character `{other}`"),
                    ));
                }
            }
        }
        Ok((out, self.line, self.col))
    }

    fn scan_number(&mut self, line: usize, col: usize) -> Result<String, ParseError> {
        let mut text = String::new();
        if self.chars.peek() == Some(&'-') {
            text.push('-');
            self.bump();
        }
        let mut digits = 0;
        while let Some(&c) = self.chars.peek() {
            if c.is_ascii_digit() {
                digits += 1;
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self.chars.peek() == Some(&'.') {
            text.push('.');
            self.bump();
            while let Some(&c) = self.chars.peek() {
                if c.is_ascii_digit() {
                    digits += 1;
                    text.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
        }
        if digits == 0 {
            return Err(ParseError::new(line, col, format!("invalid number `{text}`")));
        }
        if matches!(self.chars.peek(), Some('e') | Some('E')) {
            text.push('e');
            self.bump();
            if matches!(self.chars.peek(), Some('+') | Some('-')) {
                text.push(self.bump().unwrap());
            }
            let mut exp_digits = 0;
            while let Some(&c) = self.chars.peek() {
                if c.is_ascii_digit() {
                    exp_digits += 1;
                    text.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            if exp_digits == 0 {
                return Err(ParseError::new(line, col, format!("invalid number `{text}`")));
            }
        }
        Ok(text)
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end_line: usize,
    end_col: usize,
}

/// Parse formula text.
///
/// Grammar, loosest to tightest binding: `|`, `&`, `U`, then the unary
/// operators `!`, `F`, `G`. Temporal operators take an optional window
/// `[lo,hi]` in seconds (`hi` may be `inf`); a bare operator means `[0,inf]`.
/// Atoms are `true`, `signal > value`, `signal < value`, or a parenthesized
/// formula.
pub fn parse_formula(input: &str) -> Result<Formula, ParseError> {
    let (tokens, end_line, end_col) = Lexer::new(input).tokenize()?;
    let mut parser = Parser { tokens, pos: 0, end_line, end_col };
    let f = parser.or_expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::new(
            tok.line,
            tok.col,
            format!("unexpected trailing input starting at {}", tok.tok.describe()),
        ));
    }
    Ok(f)
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek2(&self) -> Option<&Token> {
        self.tokens.get(self.pos + 1)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: impl Into<String>) -> ParseError {
        match self.peek() {
            Some(t) => ParseError::new(t.line, t.col, message),
            None => ParseError::new(self.end_line, self.end_col, message),
        }
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<Token, ParseError> {
        match self.peek() {
            Some(t) if t.tok == *want => Ok(self.bump().unwrap()),
            Some(t) => Err(ParseError::new(
                t.line,
                t.col,
                format!("expected {what}, found {}", t.tok.describe()),
            )),
            None => Err(ParseError::new(
                self.end_line,
                self.end_col,
                format!("expected {what}, found end of input"),
            )),
        }
    }

    fn or_expr(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and_expr()?;
        while matches!(self.peek(), Some(t) if t.tok == Tok::Pipe) {
            self.bump();
            let rhs = self.and_expr()?;
            f = Formula::or(f, rhs);
        }
        Ok(f)
    }

    fn and_expr(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.until_expr()?;
        while matches!(self.peek(), Some(t) if t.tok == Tok::Amp) {
            self.bump();
            let rhs = self.until_expr()?;
            f = Formula::and(f, rhs);
        }
        Ok(f)
    }

    fn until_expr(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.peek_operator("U") {
            self.bump();
            let interval = self.optional_interval()?;
            let rhs = self.unary()?;
            f = Formula::until_within(interval, f, rhs);
        }
        Ok(f)
    }

    /// True when the next token is the named operator rather than a signal
    /// in a bare predicate (i.e. not followed by a comparison).
    fn peek_operator(&self, name: &str) -> bool {
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), .. }) if s == name => {
                !matches!(self.peek2(), Some(t) if t.tok == Tok::Gt || t.tok == Tok::Lt)
            }
            _ => false,
        }
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if matches!(self.peek(), Some(t) if t.tok == Tok::Bang) {
            self.bump();
            return Ok(Formula::not(self.unary()?));
        }
        if self.peek_operator("F") {
            self.bump();
            let interval = self.optional_interval()?;
            return Ok(Formula::eventually_within(interval, self.unary()?));
        }
        if self.peek_operator("G") {
            self.bump();
            let interval = self.optional_interval()?;
            return Ok(Formula::always_within(interval, self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::LParen) => {
                self.bump();
                let f = self.or_expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(name)) if name == "true" => {
                self.bump();
                Ok(Formula::True)
            }
            Some(Tok::Ident(name)) => {
                self.bump();
                let cmp = match self.peek().map(|t| t.tok.clone()) {
                    Some(Tok::Gt) => {
                        self.bump();
                        true
                    }
                    Some(Tok::Lt) => {
                        self.bump();
                        false
                    }
                    _ => {
                        return Err(self.err_here(format!(
                            "expected `>` or `<` after signal name `{name}`"
                        )));
                    }
                };
                let threshold = self.number("threshold")?;
                Ok(if cmp { Formula::gt(name, threshold) } else { Formula::lt(name, threshold) })
            }
            Some(_) => Err(self.err_here(format!(
                "expected a formula, found {}",
                self.peek().unwrap().tok.describe()
            ))),
            None => Err(self.err_here("expected a formula, found end of input")),
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Number(v)) => {
                self.bump();
                Ok(v)
            }
            Some(t) => Err(self.err_here(format!("expected {what}, found {}", t.describe()))),
            None => Err(self.err_here(format!("expected {what}, found end of input"))),
        }
    }

    fn optional_interval(&mut self) -> Result<TimeInterval, ParseError> {
        if !matches!(self.peek(), Some(t) if t.tok == Tok::LBracket) {
            return Ok(TimeInterval::unbounded());
        }
        let open = self.bump().unwrap();
        let lower = self.number("interval lower bound")?;
        self.expect(&Tok::Comma, "`,`")?;
        let upper = match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Ident(s)) if s == "inf" => {
                self.bump();
                f64::INFINITY
            }
            Some(Tok::Number(v)) => {
                self.bump();
                v
            }
            Some(t) => {
                return Err(self.err_here(format!(
                    "expected interval upper bound or `inf`, found {}",
                    t.describe()
                )));
            }
            None => {
                return Err(self.err_here("expected interval upper bound, found end of input"));
            }
        };
        self.expect(&Tok::RBracket, "`]`")?;
        TimeInterval::new(lower, upper)
            .map_err(|e| ParseError::new(open.line, open.col, e.to_string()))
    }
}
