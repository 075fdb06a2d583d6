//! Closed-form scalar expressions over the parameter coordinates.
//!
//! Grammar: `+ - * / ^` with usual precedence, `^` right-associative and
//! binding tighter than unary minus on its left operand, functions `sin`,
//! `cos`, `exp`, variables `rho1 rho2 rho3` (Greek spellings accepted), and
//! the constant `pi`. Exact re-evaluation at arbitrary points is what makes
//! refinement studies possible, so every field a study touches must be
//! expressed in this language.

use std::fmt;

#[derive(Debug, Clone)]
pub struct ExprError {
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.position + 1, self.message)
    }
}

impl std::error::Error for ExprError {}

fn err<T>(position: usize, message: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError {
        position,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Num(f64),
    Var(usize),
    Pi,
    Sin,
    Cos,
    Exp,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<(Token, usize)>, ExprError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let (pos, c) = chars[k];
        match c {
            ' ' | '\t' => k += 1,
            '+' => {
                out.push((Token::Plus, pos));
                k += 1;
            }
            '-' => {
                out.push((Token::Minus, pos));
                k += 1;
            }
            '*' => {
                out.push((Token::Star, pos));
                k += 1;
            }
            '/' => {
                out.push((Token::Slash, pos));
                k += 1;
            }
            '^' => {
                out.push((Token::Caret, pos));
                k += 1;
            }
            '(' => {
                out.push((Token::LParen, pos));
                k += 1;
            }
            ')' => {
                out.push((Token::RParen, pos));
                k += 1;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                while k < chars.len() && (chars[k].1.is_ascii_digit() || chars[k].1 == '.') {
                    k += 1;
                }
                // Exponent part, absorbing its sign.
                if k < chars.len() && (chars[k].1 == 'e' || chars[k].1 == 'E') {
                    let mut j = k + 1;
                    if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        k = j;
                        while k < chars.len() && chars[k].1.is_ascii_digit() {
                            k += 1;
                        }
                    }
                }
                let end = if k < chars.len() { chars[k].0 } else { src.len() };
                let text = &src[pos..end];
                match text.parse::<f64>() {
                    Ok(v) => out.push((Token::Num(v), pos)),
                    Err(_) => return err(pos, format!("malformed number '{text}'")),
                }
            }
            _ if c.is_alphabetic() => {
                let start = k;
                while k < chars.len() && (chars[k].1.is_alphanumeric() || chars[k].1 == '_') {
                    k += 1;
                }
                let end = if k < chars.len() { chars[k].0 } else { src.len() };
                let word = &src[chars[start].0..end];
                let token = match word {
                    "rho1" | "ρ1" => Token::Var(0),
                    "rho2" | "ρ2" => Token::Var(1),
                    "rho3" | "ρ3" => Token::Var(2),
                    "pi" | "π" => Token::Pi,
                    "sin" => Token::Sin,
                    "cos" => Token::Cos,
                    "exp" => Token::Exp,
                    _ => return err(pos, format!("unknown name '{word}'")),
                };
                out.push((token, pos));
            }
            _ => return err(pos, format!("unexpected character '{c}'")),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    cursor: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<Token> {
        self.tokens.get(self.cursor).map(|(t, _)| *t)
    }

    fn position(&self) -> usize {
        self.tokens
            .get(self.cursor)
            .map(|(_, p)| *p)
            .unwrap_or(self.len)
    }

    fn advance(&mut self) -> Option<Token> {
        let t = self.peek();
        self.cursor += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(t) = self.peek() {
            let op = match t {
                Token::Plus => BinOp::Add,
                Token::Minus => BinOp::Sub,
                _ => break,
            };
            self.cursor += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        while let Some(t) = self.peek() {
            let op = match t {
                Token::Star => BinOp::Mul,
                Token::Slash => BinOp::Div,
                _ => break,
            };
            self.cursor += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    /// `^` is right-associative and binds tighter than a leading minus
    /// (-2^2 = -4), while an exponent may still carry its own sign (2^-1).
    fn factor(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(Token::Minus) {
            self.cursor += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.primary()?;
        if self.peek() == Some(Token::Caret) {
            self.cursor += 1;
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let pos = self.position();
        match self.advance() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::Var(k)) => Ok(Expr::Var(k)),
            Some(Token::Pi) => Ok(Expr::Num(std::f64::consts::PI)),
            Some(t @ (Token::Sin | Token::Cos | Token::Exp)) => {
                let func = match t {
                    Token::Sin => Func::Sin,
                    Token::Cos => Func::Cos,
                    _ => Func::Exp,
                };
                if self.advance() != Some(Token::LParen) {
                    return err(self.position(), "expected '(' after function name");
                }
                let arg = self.expr()?;
                if self.advance() != Some(Token::RParen) {
                    return err(self.position(), "expected ')' closing function argument");
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                if self.advance() != Some(Token::RParen) {
                    return err(self.position(), "expected ')'");
                }
                Ok(inner)
            }
            Some(_) => err(pos, "expected a number, name, or '('"),
            None => err(pos, "unexpected end of expression"),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ExprError> {
        let tokens = lex(src)?;
        if tokens.is_empty() {
            return err(0, "empty expression");
        }
        let mut parser = Parser {
            tokens,
            cursor: 0,
            len: src.len(),
        };
        let expr = parser.expr()?;
        if parser.cursor != parser.tokens.len() {
            return err(parser.position(), "trailing input after expression");
        }
        Ok(expr)
    }

    pub fn eval(&self, rho: &[f64; 3]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(k) => rho[*k],
            Expr::Neg(e) => -e.eval(rho),
            Expr::Call(f, e) => {
                let v = e.eval(rho);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                }
            }
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(rho), b.eval(rho));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => x.powf(y),
                }
            }
        }
    }

    pub fn uses_variables(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(_) => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses_variables(),
            Expr::Bin(_, a, b) => a.uses_variables() || b.uses_variables(),
        }
    }

    /// Evaluates an expression that must not reference the coordinates
    /// (grid spacing, tolerances, and the like).
    pub fn eval_const(src: &str) -> Result<f64, ExprError> {
        let expr = Expr::parse(src)?;
        if expr.uses_variables() {
            return err(0, "expression must be constant, but references a coordinate");
        }
        Ok(expr.eval(&[0.0; 3]))
    }
}
