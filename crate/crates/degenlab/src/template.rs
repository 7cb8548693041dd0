//! Dimension-generic text templates.
//!
//! Tables and basis rows are written once in terms of `n` (and `m` for the
//! parameterized families) and instantiated per dimension. Index expressions
//! use integers, identifiers, `+ - *` and parentheses. A trailing
//! `for i in a..b` (inclusive, empty when `a > b`) repeats a line.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("cannot parse `{src}`: {msg}")]
    Syntax { src: String, msg: String },
}

pub type Vars = BTreeMap<String, i64>;

pub fn vars(pairs: &[(&str, i64)]) -> Vars {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn syntax<T>(src: &str, msg: impl Into<String>) -> Result<T, TemplateError> {
    Err(TemplateError::Syntax { src: src.to_string(), msg: msg.into() })
}

/// Evaluate an integer expression such as `n-m+1` or `2*m+1`.
pub fn eval_index(src: &str, vars: &Vars) -> Result<i64, TemplateError> {
    let toks: Vec<char> = src.chars().filter(|c| !c.is_whitespace()).collect();
    let mut p = IndexParser { src, toks: &toks, pos: 0, vars };
    let v = p.sum()?;
    if p.pos != toks.len() {
        return syntax(src, format!("trailing input at {}", p.pos));
    }
    Ok(v)
}

struct IndexParser<'a> {
    src: &'a str,
    toks: &'a [char],
    pos: usize,
    vars: &'a Vars,
}

impl IndexParser<'_> {
    fn sum(&mut self) -> Result<i64, TemplateError> {
        let mut acc = self.product()?;
        while let Some(&c @ ('+' | '-')) = self.toks.get(self.pos) {
            self.pos += 1;
            let r = self.product()?;
            acc = if c == '+' { acc + r } else { acc - r };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<i64, TemplateError> {
        let mut acc = self.atom()?;
        while self.toks.get(self.pos) == Some(&'*') {
            self.pos += 1;
            acc *= self.atom()?;
        }
        Ok(acc)
    }

    fn atom(&mut self) -> Result<i64, TemplateError> {
        match self.toks.get(self.pos) {
            Some('-') => {
                self.pos += 1;
                Ok(-self.atom()?)
            }
            Some('(') => {
                self.pos += 1;
                let v = self.sum()?;
                if self.toks.get(self.pos) != Some(&')') {
                    return syntax(self.src, "missing `)`");
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.toks.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let s: String = self.toks[start..self.pos].iter().collect();
                s.parse().or_else(|_| syntax(self.src, "integer overflow"))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.toks.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_') {
                    self.pos += 1;
                }
                let name: String = self.toks[start..self.pos].iter().collect();
                self.vars.get(&name).copied().ok_or(TemplateError::UnknownVariable(name))
            }
            _ => syntax(self.src, format!("unexpected token at {}", self.pos)),
        }
    }
}

/// Conjunction of comparisons joined by `&`, e.g. `n>=6&m=3`. `*` is true.
pub fn eval_cond(src: &str, vars: &Vars) -> Result<bool, TemplateError> {
    if src.trim() == "*" {
        return Ok(true);
    }
    for clause in src.split('&') {
        let ops = [">=", "<=", "!=", "=", "<", ">"];
        let Some((op, at)) = ops.iter().find_map(|op| clause.find(op).map(|at| (*op, at))) else {
            return syntax(src, "expected a comparison");
        };
        let l = eval_index(&clause[..at], vars)?;
        let r = eval_index(&clause[at + op.len()..], vars)?;
        let ok = match op {
            ">=" => l >= r,
            "<=" => l <= r,
            "!=" => l != r,
            "=" => l == r,
            "<" => l < r,
            _ => l > r,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Expand `body for i in a..b` into one `(body, vars+{i})` per value; lines
/// without a loop pass through once.
pub fn expand_line(line: &str, vars: &Vars) -> Result<Vec<(String, Vars)>, TemplateError> {
    let Some(at) = line.find(" for ") else {
        return Ok(vec![(line.trim().to_string(), vars.clone())]);
    };
    let body = line[..at].trim();
    let rest = line[at + 5..].trim();
    let Some((var, range)) = rest.split_once(" in ") else {
        return syntax(line, "expected `for <var> in a..b`");
    };
    let Some((a, b)) = range.split_once("..") else {
        return syntax(line, "expected a range `a..b`");
    };
    let (a, b) = (eval_index(a, vars)?, eval_index(b, vars)?);
    Ok((a..=b)
        .map(|v| {
            let mut vs = vars.clone();
            vs.insert(var.trim().to_string(), v);
            (body.to_string(), vs)
        })
        .collect())
}

/// Replace every `{expr}` in `src` by its value, e.g. `eta({m-1})`.
pub fn substitute(src: &str, vars: &Vars) -> Result<String, TemplateError> {
    let mut out = String::new();
    let mut rest = src;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else {
            return syntax(src, "unbalanced `{`");
        };
        out.push_str(&rest[..open]);
        out.push_str(&eval_index(&rest[open + 1..open + close], vars)?.to_string());
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_expressions() {
        let v = vars(&[("n", 9), ("m", 3)]);
        assert_eq!(eval_index("n-m+1", &v).unwrap(), 7);
        assert_eq!(eval_index("2*m+1", &v).unwrap(), 7);
        assert_eq!(eval_index("-(n - 2)*2", &v).unwrap(), -14);
        assert!(matches!(eval_index("k", &v), Err(TemplateError::UnknownVariable(_))));
        assert!(eval_index("n+", &v).is_err());
    }

    #[test]
    fn conditions() {
        let v = vars(&[("n", 6), ("m", 3)]);
        assert!(eval_cond("n>=6&m=3", &v).unwrap());
        assert!(!eval_cond("n>=7", &v).unwrap());
        assert!(eval_cond("*", &v).unwrap());
        assert!(eval_cond("n!=5", &v).unwrap());
    }

    #[test]
    fn loops_and_substitution() {
        let v = vars(&[("n", 7)]);
        let rows = expand_line("e{i} for i in 5..n-1", &v).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].1["i"], 6);
        assert!(expand_line("e{i} for i in 5..n-3", &v).unwrap().is_empty());
        assert_eq!(substitute("eta({n-4})", &v).unwrap(), "eta(3)");
    }
}
