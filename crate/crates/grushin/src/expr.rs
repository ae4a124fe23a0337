//! Index-set expressions.
//!
//! ```text
//! value   := family | set
//! family  := '[' set (';' set)* ']'
//! set     := atom (('+' | '-') operand)*
//! operand := complex | atom          number: shift, atom: sum
//! atom    := 'inf' | 'N0' | 'Theta(' real ')' | '{' entries '}'
//!          | 'trunc(' '{' entries '}' ';' real ')'
//!          | 'u(' set ';' set ')' | 'eu(' set ';' set ')'
//!          | 'compose(' family ';' family [';' real ';' int] ')' '.' face
//!          | '(' set ')'
//! entries := [ '(' complex ',' int ')' (',' ...)* ]
//! ```
//!
//! `compose(E;F)` on its own evaluates to a family; `.B10`, `.B01`, `.B11`
//! (or `.0`, `.1`, `.2`) select a face. Printing a result with `Display` gives
//! an expression that parses back to the same set.

use grushin_core::indexset::{
    compose_indexsets_to, extended_union_to, sum_to, union_to, Exponent, IndexFamily, IndexSet, Lattice,
    DOUBLE_SPACE_FACES,
};
use grushin_core::Complex64;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Set(IndexSet),
    Family(IndexFamily),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Set(s) => write!(f, "{s}"),
            Value::Family(fam) => write!(f, "{fam}"),
        }
    }
}

/// Defaults for evaluation: `compose` uses `alpha` and `n` unless given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalContext {
    pub alpha: f64,
    pub n: u32,
    pub height: f64,
}

impl Default for EvalContext {
    fn default() -> Self {
        EvalContext { alpha: 0.0, n: 1, height: grushin_core::indexset::DEFAULT_HEIGHT }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprError {
    /// Malformed input, with the byte offset.
    Syntax { pos: usize, msg: String },
    /// Well-formed input that the algebra rejects.
    Eval(grushin_core::Error),
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExprError::Syntax { pos, msg } => write!(f, "at offset {pos}: {msg}"),
            ExprError::Eval(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ExprError {}

impl From<grushin_core::Error> for ExprError {
    fn from(e: grushin_core::Error) -> Self {
        ExprError::Eval(e)
    }
}

type Res<T> = Result<T, ExprError>;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num { value: f64, imag: bool },
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Res<Vec<(usize, Tok)>> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let ch = b[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || (ch == '.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    while j < b.len() && b[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 =
                text.parse().map_err(|_| ExprError::Syntax { pos: start, msg: format!("bad number `{text}`") })?;
            let imag = i < b.len() && b[i] == b'i' && !b.get(i + 1).is_some_and(|c| c.is_ascii_alphanumeric());
            if imag {
                i += 1;
            }
            out.push((start, Tok::Num { value, imag }));
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            if word == "i" {
                out.push((start, Tok::Num { value: 1.0, imag: true }));
            } else {
                out.push((start, Tok::Ident(word.to_string())));
            }
        } else if "{}()[],;+-.".contains(ch) {
            out.push((i, Tok::Sym(ch)));
            i += 1;
        } else {
            return Err(ExprError::Syntax { pos: i, msg: format!("unexpected character `{ch}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    ctx: &'a EvalContext,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Res<T> {
        Err(ExprError::Syntax { pos: self.offset(), msg: msg.into() })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Sym(c))
    }

    fn expect(&mut self, c: char) -> Res<()> {
        if self.is_sym(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected `{c}`"))
        }
    }

    fn real(&mut self) -> Res<f64> {
        let neg = if self.is_sym('-') {
            self.pos += 1;
            true
        } else {
            if self.is_sym('+') {
                self.pos += 1;
            }
            false
        };
        match self.bump() {
            Some(Tok::Num { value, imag: false }) => Ok(if neg { -value } else { value }),
            Some(Tok::Ident(w)) if w == "inf" => Ok(if neg { f64::NEG_INFINITY } else { f64::INFINITY }),
            _ => {
                self.pos -= 1;
                self.fail("expected a real number")
            }
        }
    }

    fn natural(&mut self) -> Res<u32> {
        match self.bump() {
            Some(Tok::Num { value, imag: false })
                if value.fract() == 0.0 && value >= 0.0 && value <= u32::MAX as f64 =>
            {
                Ok(value as u32)
            }
            _ => {
                self.pos -= 1;
                self.fail("expected a non-negative integer")
            }
        }
    }

    /// `a`, `bi`, `a+bi`, `a-bi`, each with an optional leading sign.
    fn complex(&mut self) -> Res<Complex64> {
        let sign = |p: &mut Self| -> f64 {
            if p.is_sym('-') {
                p.pos += 1;
                -1.0
            } else {
                if p.is_sym('+') {
                    p.pos += 1;
                }
                1.0
            }
        };
        let s0 = sign(self);
        let (v0, imag0) = match self.bump() {
            Some(Tok::Num { value, imag }) => (s0 * value, imag),
            _ => {
                self.pos -= 1;
                return self.fail("expected a number");
            }
        };
        if imag0 {
            return Ok(Complex64::new(0.0, v0));
        }
        // An imaginary part follows only as `±<num>i`.
        if let (Some(Tok::Sym(c)), Some(Tok::Num { imag: true, .. })) =
            (self.peek().cloned(), self.toks.get(self.pos + 1).map(|t| t.1.clone()))
        {
            if c == '+' || c == '-' {
                let s1 = sign(self);
                if let Some(Tok::Num { value, .. }) = self.bump() {
                    return Ok(Complex64::new(v0, s1 * value));
                }
            }
        }
        Ok(Complex64::new(v0, 0.0))
    }

    fn entries(&mut self) -> Res<Vec<Exponent>> {
        self.expect('{')?;
        let mut out = Vec::new();
        if self.is_sym('}') {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            self.expect('(')?;
            let s = self.complex()?;
            self.expect(',')?;
            let p = self.natural()?;
            self.expect(')')?;
            if !(s.re.is_finite() && s.im.is_finite()) {
                return self.fail("exponents must be finite");
            }
            out.push(Exponent::new(s, p));
            if self.is_sym(',') {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.expect('}')?;
        Ok(out)
    }

    fn value(&mut self) -> Res<Value> {
        if self.is_sym('[') {
            Ok(Value::Family(self.family()?))
        } else {
            self.set_or_family()
        }
    }

    fn family(&mut self) -> Res<IndexFamily> {
        self.expect('[')?;
        let mut sets = vec![self.set()?];
        while self.is_sym(';') {
            self.pos += 1;
            sets.push(self.set()?);
        }
        self.expect(']')?;
        Ok(if sets.len() == 3 {
            let mut it = sets.into_iter();
            IndexFamily::double_space(it.next().unwrap(), it.next().unwrap(), it.next().unwrap())
        } else {
            IndexFamily::unlabelled(sets)
        })
    }

    fn family_arg(&mut self) -> Res<IndexFamily> {
        if self.is_sym('[') {
            return self.family();
        }
        match self.atom_value()? {
            Value::Family(f) => Ok(f),
            Value::Set(_) => self.fail("expected a family `[A; B; C]`"),
        }
    }

    fn set(&mut self) -> Res<IndexSet> {
        match self.set_or_family()? {
            Value::Set(s) => Ok(s),
            Value::Family(_) => self.fail("expected an index set, got a family (select a face with `.B11`)"),
        }
    }

    fn set_or_family(&mut self) -> Res<Value> {
        let first = self.atom_value()?;
        let mut acc = match first {
            Value::Family(f) => return Ok(Value::Family(f)),
            Value::Set(s) => s,
        };
        while self.is_sym('+') || self.is_sym('-') {
            let negate = self.is_sym('-');
            let at = |k: usize| self.toks.get(self.pos + k).map(|t| &t.1);
            let number_follows = matches!(at(1), Some(Tok::Num { .. }))
                || (matches!(at(1), Some(Tok::Sym('-' | '+'))) && matches!(at(2), Some(Tok::Num { .. })));
            self.pos += 1;
            if number_follows {
                let c = self.complex()?;
                acc = acc.shift(if negate { -c } else { c });
            } else {
                if negate {
                    self.pos -= 1;
                    return self.fail("only numbers can be subtracted");
                }
                let rhs = self.atom()?;
                acc = sum_to(&acc, &rhs, self.ctx.height);
            }
        }
        Ok(Value::Set(acc))
    }

    fn atom(&mut self) -> Res<IndexSet> {
        match self.atom_value()? {
            Value::Set(s) => Ok(s),
            Value::Family(_) => self.fail("expected an index set, got a family (select a face with `.B11`)"),
        }
    }

    fn pair(&mut self) -> Res<(IndexSet, IndexSet)> {
        self.expect('(')?;
        let a = self.set()?;
        self.expect(';')?;
        let b = self.set()?;
        self.expect(')')?;
        Ok((a, b))
    }

    fn atom_value(&mut self) -> Res<Value> {
        if self.is_sym('{') {
            let e = self.entries()?;
            return Ok(Value::Set(IndexSet::finite(e)));
        }
        if self.is_sym('(') {
            self.pos += 1;
            let v = self.value()?;
            self.expect(')')?;
            return Ok(v);
        }
        if self.is_sym('[') {
            return Ok(Value::Family(self.family()?));
        }
        let word = match self.peek() {
            Some(Tok::Ident(w)) => w.clone(),
            _ => return self.fail("expected an index set"),
        };
        self.pos += 1;
        let h = self.ctx.height;
        let set = match word.as_str() {
            "inf" => IndexSet::Empty,
            "N0" => IndexSet::smooth(),
            "Theta" => {
                self.expect('(')?;
                let a = self.real()?;
                self.expect(')')?;
                if !(a > -1.0 && a.is_finite()) {
                    return self.fail("Theta needs alpha > -1");
                }
                IndexSet::generated(vec![Exponent::real(0.0, 0)], Lattice::Theta(a))
            }
            "trunc" => {
                self.expect('(')?;
                let e = self.entries()?;
                self.expect(';')?;
                let height = self.real()?;
                self.expect(')')?;
                IndexSet::truncated(e, height)
            }
            "u" => {
                let (a, b) = self.pair()?;
                union_to(&a, &b, h)
            }
            "eu" => {
                let (a, b) = self.pair()?;
                extended_union_to(&a, &b, h)
            }
            "compose" => return self.compose(),
            other => return self.fail(format!("unknown name `{other}`")),
        };
        Ok(Value::Set(set))
    }

    fn compose(&mut self) -> Res<Value> {
        self.expect('(')?;
        let e = self.family_arg()?;
        self.expect(';')?;
        let f = self.family_arg()?;
        let (mut alpha, mut n) = (self.ctx.alpha, self.ctx.n);
        if self.is_sym(';') {
            self.pos += 1;
            alpha = self.real()?;
            self.expect(';')?;
            n = self.natural()?;
        }
        self.expect(')')?;
        let g = compose_indexsets_to(&e, &f, alpha, n, self.ctx.height)?;
        if self.is_sym('.') {
            self.pos += 1;
            let face = match self.bump() {
                Some(Tok::Ident(w)) => w,
                Some(Tok::Num { value, imag: false }) if value.fract() == 0.0 && value < 3.0 => {
                    DOUBLE_SPACE_FACES[value as usize].to_string()
                }
                _ => {
                    self.pos -= 1;
                    return self.fail("expected a face label");
                }
            };
            return match g.get(&face) {
                Some(s) => Ok(Value::Set(s.clone())),
                None => self.fail(format!("no face `{face}`")),
            };
        }
        Ok(Value::Family(g))
    }
}

/// Parses and evaluates an index-set expression.
pub fn evaluate(src: &str, ctx: &EvalContext) -> Result<Value, ExprError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, end: src.len(), ctx };
    let v = p.value()?;
    if p.pos < p.toks.len() {
        return p.fail("trailing input");
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str) -> String {
        evaluate(s, &EvalContext::default()).unwrap().to_string()
    }

    #[test]
    fn extended_union_bumps_the_log_power() {
        assert_eq!(ev("eu({(0,0)};{(0,0)})"), "{(0,0),(0,1)}");
        assert_eq!(ev("u({(0,0)};{(0,0)})"), "{(0,0)}");
        assert_eq!(ev("eu({(0,0)};inf)"), "{(0,0)}");
    }

    #[test]
    fn literals_round_trip() {
        for s in [
            "inf",
            "{}",
            "{(0,0),(0.5,2)}",
            "{(0,0)} + N0",
            "{(0.5-2i,0),(1+0.25i,1)} + Theta(0.5)",
            "trunc({(0,0),(1,0)}; 1.5)",
            "[{(0,0)} + N0; inf; {(1,0)}]",
        ] {
            let once = ev(s);
            assert_eq!(ev(&once), once, "{s}");
        }
        assert_eq!(ev("{(0,0)} + N0"), "{(0,0)} + N0");
        assert_eq!(ev("N0"), "{(0,0)} + N0");
    }

    #[test]
    fn shifts_and_sums() {
        assert_eq!(ev("{(0,0)} + 1.5"), "{(1.5,0)}");
        assert_eq!(ev("{(1,0)} - 1"), "{(0,0)}");
        assert_eq!(ev("{(0,0)} + -2i"), "{(0-2i,0)}");
        assert_eq!(ev("{(1,0)} + {(0,0),(2,1)}"), "{(1,0),(3,1)}");
        assert_eq!(ev("({(1,0)} + N0) + 1"), "{(2,0)} + N0");
    }

    #[test]
    fn composition_of_small_calculus() {
        let ctx = EvalContext::default();
        let v = evaluate("compose([inf; inf; N0]; [inf; inf; N0])", &ctx).unwrap();
        assert_eq!(v.to_string(), "[inf; inf; {(0,0)} + N0]");
        assert_eq!(ev("compose([inf; inf; N0]; [inf; inf; N0]).B11"), "{(0,0)} + N0");
    }

    #[test]
    fn reports_syntax_errors() {
        let ctx = EvalContext::default();
        for bad in ["", "{(0,0)", "{(0,-1)}", "eu({(0,0)})", "foo", "{(0,0)} ?", "{(0,0)} - {(1,0)}", "[inf; inf]"] {
            let r = evaluate(bad, &ctx);
            match bad {
                "[inf; inf]" => assert!(r.is_ok()),
                _ => assert!(matches!(r, Err(ExprError::Syntax { .. })), "{bad}: {r:?}"),
            }
        }
        let r = evaluate("compose([inf; {(0,0)}; N0]; [{(0,0)}; inf; N0])", &ctx);
        assert!(matches!(r, Err(ExprError::Eval(_))));
    }
}
