use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Numeric literal with its source text (kept for outcome labels).
    Num(C64, String),
    Ket(String),
    Let,
    Var,
    Meas,
    Kraus,
    Skip,
    If,
    Fi,
    While,
    Do,
    Od,
    Trout,
    Sqrt,
    Assign,
    Eq,
    Colon,
    Semi,
    Comma,
    LBrack,
    RBrack,
    Box,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Arrow,
    Star,
    Minus,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

pub fn lex(src: &str) -> Result<Vec<Token>> {
    let mut lx = Lexer { chars: src.chars().collect(), pos: 0, line: 1, col: 1 };
    let mut out = Vec::new();
    loop {
        lx.skip_ws();
        let (line, col) = (lx.line, lx.col);
        let tok = match lx.peek(0) {
            None => {
                out.push(Token { tok: Tok::Eof, line, col });
                return Ok(out);
            }
            Some(c) => lx.token(c)?,
        };
        out.push(Token { tok, line, col });
    }
}

impl Lexer {
    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
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

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, col: self.col, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek(0) {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek(1) == Some('/') => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn token(&mut self, c: char) -> Result<Tok> {
        let two = |a: char, b: char| c == a && self.peek(1) == Some(b);
        if two(':', '=') {
            self.bump();
            self.bump();
            return Ok(Tok::Assign);
        }
        if two('-', '>') {
            self.bump();
            self.bump();
            return Ok(Tok::Arrow);
        }
        if two('[', ']') {
            self.bump();
            self.bump();
            return Ok(Tok::Box);
        }
        if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            return self.number(false);
        }
        if c == '-' {
            let next = self.peek(1);
            if next.is_some_and(|d| d.is_ascii_digit() || d == '.') {
                self.bump();
                return self.number(true);
            }
            if next == Some('i') && !self.peek(2).is_some_and(ident_char) {
                self.bump();
                self.bump();
                return Ok(Tok::Num(C64::new(0.0, -1.0), "-i".into()));
            }
            self.bump();
            return Ok(Tok::Minus);
        }
        if c == '|' {
            self.bump();
            let mut s = String::new();
            while let Some(d) = self.peek(0) {
                if d == '>' {
                    break;
                }
                if !d.is_ascii_alphanumeric() {
                    return Err(self.err("malformed ket"));
                }
                s.push(d);
                self.bump();
            }
            if self.bump() != Some('>') {
                return Err(self.err("unterminated ket"));
            }
            return Ok(Tok::Ket(s));
        }
        if ident_start(c) {
            let mut s = String::new();
            while let Some(d) = self.peek(0) {
                if !ident_char(d) {
                    break;
                }
                s.push(d);
                self.bump();
            }
            // Tag suffix q<1>, only when written without spaces.
            if self.peek(0) == Some('<') && self.peek(1).is_some_and(|d| d.is_ascii_digit()) {
                let mut k = 1;
                while self.peek(k).is_some_and(|d| d.is_ascii_digit()) {
                    k += 1;
                }
                if self.peek(k) == Some('>') {
                    for _ in 0..=k {
                        s.push(self.bump().expect("lookahead"));
                    }
                }
            }
            return Ok(match s.as_str() {
                "let" => Tok::Let,
                "var" => Tok::Var,
                "meas" => Tok::Meas,
                "kraus" => Tok::Kraus,
                "skip" => Tok::Skip,
                "if" => Tok::If,
                "fi" => Tok::Fi,
                "while" => Tok::While,
                "do" => Tok::Do,
                "od" => Tok::Od,
                "trout" => Tok::Trout,
                "sqrt" => Tok::Sqrt,
                _ => Tok::Ident(s),
            });
        }
        self.bump();
        Ok(match c {
            '=' => Tok::Eq,
            ':' => Tok::Colon,
            ';' => Tok::Semi,
            ',' => Tok::Comma,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '*' => Tok::Star,
            other => {
                return Err(Error::Parse {
                    line: self.line,
                    col: self.col - 1,
                    msg: format!("unexpected character {other:?}"),
                })
            }
        })
    }

    /// Reads the unsigned decimal starting at `pos + k` without consuming it;
    /// returns its length.
    fn scan_real(&self, k: usize) -> usize {
        let mut n = 0;
        while self.peek(k + n).is_some_and(|d| d.is_ascii_digit()) {
            n += 1;
        }
        if self.peek(k + n) == Some('.') && self.peek(k + n + 1).is_some_and(|d| d.is_ascii_digit()) {
            n += 1;
            while self.peek(k + n).is_some_and(|d| d.is_ascii_digit()) {
                n += 1;
            }
        } else if self.peek(k + n) == Some('.') && n > 0 {
            n += 1;
        }
        if n > 0 && matches!(self.peek(k + n), Some('e') | Some('E')) {
            let mut m = 1;
            if matches!(self.peek(k + n + m), Some('+') | Some('-')) {
                m += 1;
            }
            if self.peek(k + n + m).is_some_and(|d| d.is_ascii_digit()) {
                while self.peek(k + n + m).is_some_and(|d| d.is_ascii_digit()) {
                    m += 1;
                }
                n += m;
            }
        }
        n
    }

    fn take(&mut self, n: usize) -> String {
        (0..n).map(|_| self.bump().expect("scanned")).collect()
    }

    fn number(&mut self, negative: bool) -> Result<Tok> {
        let sign = if negative { -1.0 } else { 1.0 };
        let n = self.scan_real(0);
        let text = self.take(n);
        let re: f64 = text.parse().map_err(|_| self.err(format!("bad number {text}")))?;
        let re = sign * re;
        let mut raw = if negative { format!("-{text}") } else { text };
        let unit_follows = |lx: &Self, k: usize| lx.peek(k) == Some('i') && !lx.peek(k + 1).is_some_and(ident_char);
        if unit_follows(self, 0) {
            self.bump();
            raw.push('i');
            return Ok(Tok::Num(C64::new(0.0, re), raw));
        }
        if let Some(s) = self.peek(0).filter(|&s| s == '+' || s == '-') {
            let isign = if s == '-' { -1.0 } else { 1.0 };
            if unit_follows(self, 1) {
                self.take(2);
                raw.push(s);
                raw.push('i');
                return Ok(Tok::Num(C64::new(re, isign), raw));
            }
            let m = self.scan_real(1);
            if m > 0 && unit_follows(self, 1 + m) {
                self.bump();
                let t = self.take(m);
                self.bump();
                let im: f64 = t.parse().map_err(|_| self.err(format!("bad number {t}")))?;
                raw.push(s);
                raw.push_str(&t);
                raw.push('i');
                return Ok(Tok::Num(C64::new(re, isign * im), raw));
            }
        }
        if self.peek(0).is_some_and(ident_char) {
            return Err(self.err(format!("unexpected character after number {raw}")));
        }
        Ok(Tok::Num(C64::new(re, 0.0), raw))
    }
}
