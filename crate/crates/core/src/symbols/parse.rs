//! Symbol mini-language.
//!
//! ```text
//! poly:c0,c1,...        exp:alpha,beta,gamma      kernel:w
//! shift:k:(S)           prod:(S)*(S)*...          sum:(S)+(S)+...
//! deriv:(S)             antideriv:(S)
//! ```
//! Complex literals: `1.5`, `-2i`, `0.3+0.4i`, `1e-3-2i` (no whitespace).

use std::fmt;

use num_complex::Complex64;

use super::{antiderivative, derivative, EntireSymbol};
use crate::fock::GaussWeight;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub input: String,
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let caret_col = self.input[..self.position.min(self.input.len())].chars().count();
        writeln!(f, "{} at position {}", self.message, self.position)?;
        writeln!(f, "  {}", self.input)?;
        write!(f, "  {}^", " ".repeat(caret_col))
    }
}

impl std::error::Error for ParseError {}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    weight: GaussWeight,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError { input: self.src.to_string(), position: self.pos, message: message.into() })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn symbol(&mut self) -> Result<EntireSymbol, ParseError> {
        let head_len = self.rest().find(':').unwrap_or(self.rest().len());
        let head = &self.rest()[..head_len];
        let start = self.pos;
        self.pos += head_len;
        if !self.eat(':') {
            self.pos = start;
            return self.err("expected '<kind>:'");
        }
        match head {
            "poly" => {
                let mut coeffs = vec![self.complex()?];
                while self.eat(',') {
                    coeffs.push(self.complex()?);
                }
                Ok(EntireSymbol::polynomial(coeffs))
            }
            "exp" => {
                let alpha = self.complex()?;
                self.expect(',')?;
                let beta = self.complex()?;
                self.expect(',')?;
                let gamma = self.complex()?;
                Ok(EntireSymbol::exp_quadratic(alpha, beta, gamma))
            }
            "kernel" => Ok(EntireSymbol::kernel(self.complex()?, self.weight)),
            "shift" => {
                let k = self.integer()?;
                self.expect(':')?;
                Ok(EntireSymbol::shifted(self.group()?, k))
            }
            "prod" => {
                let mut parts = vec![self.group()?];
                while self.eat('*') {
                    parts.push(self.group()?);
                }
                Ok(EntireSymbol::product(parts))
            }
            "sum" => {
                let mut parts = vec![self.group()?];
                while self.eat('+') {
                    parts.push(self.group()?);
                }
                Ok(EntireSymbol::sum(parts))
            }
            "deriv" => Ok(derivative(&self.group()?)),
            "antideriv" => Ok(antiderivative(&self.group()?)),
            _ => {
                self.pos = start;
                self.err(format!("unknown symbol kind '{head}'"))
            }
        }
    }

    fn group(&mut self) -> Result<EntireSymbol, ParseError> {
        self.expect('(')?;
        let s = self.symbol()?;
        self.expect(')')?;
        Ok(s)
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        let len = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if len == 0 {
            return self.err("expected a nonnegative integer");
        }
        let v = self.rest()[..len].parse().or_else(|_| self.err("integer out of range"))?;
        self.pos += len;
        Ok(v)
    }

    /// Length of a real literal `[+-]digits[.digits][e[+-]digits]` at the cursor.
    fn real_len(&self) -> usize {
        let b = self.rest().as_bytes();
        let mut i = 0;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let digits_start = i;
        while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
            i += 1;
        }
        if i == digits_start {
            return 0;
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            let exp_start = j;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            if j > exp_start {
                i = j;
            }
        }
        i
    }

    fn real(&mut self) -> Result<Option<f64>, ParseError> {
        let len = self.real_len();
        if len == 0 {
            return Ok(None);
        }
        match self.rest()[..len].parse::<f64>() {
            Ok(v) => {
                self.pos += len;
                Ok(Some(v))
            }
            Err(_) => self.err("malformed number"),
        }
    }

    /// Bare `i` / `+i` / `-i` as unit imaginary.
    fn unit_imaginary(&mut self) -> Option<f64> {
        for (tok, v) in [("+i", 1.0), ("-i", -1.0), ("i", 1.0)] {
            if self.rest().starts_with(tok) {
                self.pos += tok.len();
                return Some(v);
            }
        }
        None
    }

    fn complex(&mut self) -> Result<Complex64, ParseError> {
        let start = self.pos;
        let first = match self.real()? {
            Some(v) => v,
            None => {
                if let Some(im) = self.unit_imaginary() {
                    return Ok(Complex64::new(0.0, im));
                }
                return self.err("expected a complex literal");
            }
        };
        if self.eat('i') {
            return Ok(Complex64::new(0.0, first));
        }
        match self.peek() {
            Some('+') | Some('-') => {
                let sign_pos = self.pos;
                let im = match self.real()? {
                    Some(v) => v,
                    None => match self.unit_imaginary() {
                        Some(v) => return Ok(Complex64::new(first, v)),
                        None => {
                            self.pos = sign_pos;
                            return self.err("expected imaginary part");
                        }
                    },
                };
                if !self.eat('i') {
                    return self.err("imaginary part must end with 'i'");
                }
                Ok(Complex64::new(first, im))
            }
            _ => {
                if !first.is_finite() {
                    self.pos = start;
                    return self.err("non-finite literal");
                }
                Ok(Complex64::new(first, 0.0))
            }
        }
    }
}

/// Parse a symbol; `kernel:w` symbols take the supplied weight.
pub fn parse_symbol(src: &str, weight: GaussWeight) -> Result<EntireSymbol, ParseError> {
    let mut p = Parser { src, pos: 0, weight };
    let s = p.symbol()?;
    if p.pos != src.len() {
        return p.err("unexpected trailing input");
    }
    Ok(s)
}

/// Parse one complex literal.
pub fn parse_complex(src: &str) -> Result<Complex64, ParseError> {
    let mut p = Parser { src, pos: 0, weight: GaussWeight::new(1.0).expect("unit weight") };
    let c = p.complex()?;
    if p.pos != src.len() {
        return p.err("unexpected trailing input");
    }
    Ok(c)
}
