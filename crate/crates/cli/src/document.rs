//! Model documents.
//!
//! ```text
//! # Bures: one sum of two equal-weight unitaries times a square Ginibre
//! model {
//!   factors: [
//!     cue_sum { weights: [0.70710678+0i, 0.70710678+0i] }
//!     ginibre { sigma: 1, rows: 1, cols: 1 }
//!   ]
//! }
//! ```
//!
//! Factors are listed in product order. Commas between list items and
//! fields are optional, `#` starts a comment. Weights are complex literals
//! `a`, `a+bi`, `a-bi` or `bi`. Ginibre `rows` and `cols` are positive
//! integers giving the dimension chain at a reference outer size; adjacent
//! factors must agree.

use bures_core::model::{EnsembleFactor, GinibreFactor, ModelError, ModelSpec, ValidatedModel};
use num_complex::Complex64;
use num_rational::Rational64;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DocumentError {
    #[error("{line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error(transparent)]
    Validation(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, DocumentError> {
    Err(DocumentError::Parse { line, column, message: message.into() })
}

fn lex(text: &str) -> Result<Vec<Token>, DocumentError> {
    let mut out = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() || c == ',' {
                i += 1;
                continue;
            }
            if "{}[]:".contains(c) {
                out.push(Token { tok: Tok::Sym(c), line, column });
                i += 1;
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line, column });
                continue;
            }
            if c.is_ascii_digit() || c == '.' || c == '+' || c == '-' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || ".+-".contains(chars[i])) {
                    i += 1;
                }
                out.push(Token { tok: Tok::Number(chars[start..i].iter().collect()), line, column });
                continue;
            }
            return err(line, column, format!("unexpected character `{c}`"));
        }
    }
    Ok(out)
}

/// Length of the longest prefix of `s` that is a decimal float literal.
fn float_prefix(s: &[u8]) -> usize {
    let mut i = 0;
    if i < s.len() && (s[i] == b'+' || s[i] == b'-') {
        i += 1;
    }
    let digits = |i: &mut usize| {
        let st = *i;
        while *i < s.len() && s[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - st
    };
    let mut n = digits(&mut i);
    if i < s.len() && s[i] == b'.' {
        i += 1;
        n += digits(&mut i);
    }
    if n == 0 {
        return 0;
    }
    if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
        let mut j = i + 1;
        if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
            j += 1;
        }
        let st = j;
        while j < s.len() && s[j].is_ascii_digit() {
            j += 1;
        }
        if j > st {
            i = j;
        }
    }
    i
}

/// Parses a complex literal; on failure returns the byte offset of the
/// offending character.
fn parse_complex(s: &str) -> Result<Complex64, (usize, String)> {
    let b = s.as_bytes();
    let n1 = float_prefix(b);
    if n1 == 0 {
        return Err((0, format!("expected a number, found `{s}`")));
    }
    let first: f64 = s[..n1].parse().map_err(|_| (0, format!("bad number `{}`", &s[..n1])))?;
    if n1 == b.len() {
        return Ok(Complex64::new(first, 0.0));
    }
    if b[n1] == b'i' && n1 + 1 == b.len() {
        return Ok(Complex64::new(0.0, first));
    }
    if b[n1] != b'+' && b[n1] != b'-' {
        return Err((n1, format!("unexpected `{}` in complex literal", b[n1] as char)));
    }
    let rest = &b[n1..];
    let n2 = float_prefix(rest);
    if n2 <= 1 {
        return Err((n1 + 1, "expected the imaginary part".into()));
    }
    let second: f64 = s[n1..n1 + n2].parse().map_err(|_| (n1, "bad imaginary part".to_string()))?;
    let at = n1 + n2;
    if at >= b.len() || b[at] != b'i' {
        let what = if at < b.len() { format!("`{}`", b[at] as char) } else { "end of literal".into() };
        return Err((at, format!("imaginary part must end with `i`, found {what}")));
    }
    if at + 1 != b.len() {
        return Err((at + 1, "trailing characters after complex literal".into()));
    }
    Ok(Complex64::new(first, second))
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|t| (t.line, t.column)).unwrap_or(self.end)
    }

    fn next(&mut self, what: &str) -> Result<Token, DocumentError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => err(self.end.0, self.end.1, format!("unexpected end of document, expected {what}")),
        }
    }

    fn sym(&mut self, c: char) -> Result<(), DocumentError> {
        let t = self.next(&format!("`{c}`"))?;
        if t.tok == Tok::Sym(c) {
            Ok(())
        } else {
            err(t.line, t.column, format!("expected `{c}`"))
        }
    }

    fn ident(&mut self) -> Result<(String, usize, usize), DocumentError> {
        let t = self.next("a name")?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.line, t.column)),
            _ => err(t.line, t.column, "expected a name"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DocumentError> {
        let (s, l, c) = self.ident()?;
        if s == kw {
            Ok(())
        } else {
            err(l, c, format!("expected `{kw}`, found `{s}`"))
        }
    }

    fn at_sym(&self, c: char) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(s), .. }) if *s == c)
    }

    fn number(&mut self) -> Result<(String, usize, usize), DocumentError> {
        let t = self.next("a number")?;
        match t.tok {
            Tok::Number(s) => Ok((s, t.line, t.column)),
            // a leading `i` lexes as a name
            Tok::Ident(s) => Ok((s, t.line, t.column)),
            _ => err(t.line, t.column, "expected a number"),
        }
    }

    fn real(&mut self) -> Result<f64, DocumentError> {
        let (s, l, c) = self.number()?;
        let n = float_prefix(s.as_bytes());
        if n == 0 || n != s.len() {
            return err(l, c + n, format!("expected a real number, found `{s}`"));
        }
        Ok(s.parse().expect("validated float literal"))
    }

    fn positive_int(&mut self) -> Result<i64, DocumentError> {
        let (s, l, c) = self.number()?;
        match s.parse::<i64>() {
            Ok(v) if v > 0 => Ok(v),
            _ => err(l, c, format!("expected a positive integer, found `{s}`")),
        }
    }

    fn weights(&mut self) -> Result<Vec<Complex64>, DocumentError> {
        self.sym('[')?;
        let mut out = Vec::new();
        while !self.at_sym(']') {
            let (s, l, c) = self.number()?;
            match parse_complex(&s) {
                Ok(z) => out.push(z),
                Err((off, msg)) => return err(l, c + off, msg),
            }
        }
        self.sym(']')?;
        Ok(out)
    }

    fn factor(&mut self) -> Result<EnsembleFactor, DocumentError> {
        let (kind, l, c) = self.ident()?;
        self.sym('{')?;
        let f = match kind.as_str() {
            "cue_sum" => {
                let mut weights = None;
                while !self.at_sym('}') {
                    let (field, fl, fc) = self.ident()?;
                    self.sym(':')?;
                    match field.as_str() {
                        "weights" if weights.is_none() => weights = Some(self.weights()?),
                        "weights" => return err(fl, fc, "duplicate field `weights`"),
                        other => return err(fl, fc, format!("unknown cue_sum field `{other}`")),
                    }
                }
                let Some(w) = weights else {
                    return err(l, c, "cue_sum needs `weights`");
                };
                EnsembleFactor::cue(w)
            }
            "ginibre" => {
                let (mut sigma, mut rows, mut cols) = (None, None, None);
                while !self.at_sym('}') {
                    let (field, fl, fc) = self.ident()?;
                    self.sym(':')?;
                    let slot_taken = match field.as_str() {
                        "sigma" => sigma.replace(self.real()?).is_some(),
                        "rows" => rows.replace(self.positive_int()?).is_some(),
                        "cols" => cols.replace(self.positive_int()?).is_some(),
                        other => return err(fl, fc, format!("unknown ginibre field `{other}`")),
                    };
                    if slot_taken {
                        return err(fl, fc, format!("duplicate field `{field}`"));
                    }
                }
                match (sigma, rows, cols) {
                    (Some(sigma), Some(rows), Some(cols)) => EnsembleFactor::Ginibre(GinibreFactor {
                        sigma,
                        rows: Rational64::from_integer(rows),
                        cols: Rational64::from_integer(cols),
                    }),
                    _ => return err(l, c, "ginibre needs `sigma`, `rows` and `cols`"),
                }
            }
            other => return err(l, c, format!("unknown factor kind `{other}`")),
        };
        self.sym('}')?;
        Ok(f)
    }

    fn document(&mut self) -> Result<ModelSpec, DocumentError> {
        self.keyword("model")?;
        self.sym('{')?;
        let (field, l, c) = self.ident()?;
        if field != "factors" {
            return err(l, c, format!("expected `factors`, found `{field}`"));
        }
        self.sym(':')?;
        self.sym('[')?;
        let mut factors = Vec::new();
        while !self.at_sym(']') {
            if self.peek().is_none() {
                let (l, c) = self.here();
                return err(l, c, "unterminated factor list");
            }
            factors.push(self.factor()?);
        }
        self.sym(']')?;
        self.sym('}')?;
        if let Some(t) = self.peek() {
            return err(t.line, t.column, "trailing content after the model");
        }
        Ok(ModelSpec::new(factors))
    }
}

/// Parses a model document without validating the dimension chain.
pub fn parse_model_spec(text: &str) -> Result<ModelSpec, DocumentError> {
    let toks = lex(text)?;
    let lines = text.lines().count().max(1);
    let last_len = text.lines().last().map(|l| l.chars().count()).unwrap_or(0);
    let mut p = Parser { toks, pos: 0, end: (lines, last_len + 1) };
    p.document()
}

/// Parses and validates a model document.
pub fn parse_model_document(text: &str) -> Result<ValidatedModel, DocumentError> {
    Ok(parse_model_spec(text)?.validate()?)
}

fn fmt_complex(z: Complex64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{:?}-{:?}i", z.re, -z.im)
    } else {
        format!("{:?}+{:?}i", z.re, z.im)
    }
}

/// Canonical text of a specification; parsing it returns the same spec.
pub fn format_model_document(spec: &ModelSpec) -> String {
    let mut s = String::from("model {\n  factors: [\n");
    for f in &spec.factors {
        match f {
            EnsembleFactor::CueSum(c) => {
                let w: Vec<String> = c.weights.iter().map(|&z| fmt_complex(z)).collect();
                let _ = writeln!(s, "    cue_sum {{ weights: [{}] }}", w.join(", "));
            }
            EnsembleFactor::Ginibre(g) => {
                // rows and cols always come from integer documents or integer presets
                let _ = writeln!(
                    s,
                    "    ginibre {{ sigma: {:?}, rows: {}, cols: {} }}",
                    g.sigma,
                    g.rows.to_integer(),
                    g.cols.to_integer()
                );
            }
        }
    }
    s.push_str("  ]\n}\n");
    s
}
