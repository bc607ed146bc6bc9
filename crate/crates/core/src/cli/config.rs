//! Line-oriented `key = value` files.
//!
//! Values are numbers, `true`/`false`, quoted or bare strings, or bracketed
//! arrays of values (nested for matrices). `#` starts a comment outside
//! quotes. Later keys override earlier ones.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Number(f64),
    Bool(bool),
    Str(String),
    Array(Vec<Value>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// A number as a one-row, one-column matrix, or an array of numeric rows.
    pub fn as_rows(&self) -> Option<Vec<Vec<f64>>> {
        match self {
            Value::Number(v) => Some(vec![vec![*v]]),
            Value::Array(rows) if rows.iter().all(|r| matches!(r, Value::Number(_))) => {
                if rows.len() == 1 {
                    Some(vec![vec![rows[0].as_f64()?]])
                } else {
                    None
                }
            }
            Value::Array(rows) => rows
                .iter()
                .map(|r| match r {
                    Value::Array(xs) => xs.iter().map(Value::as_f64).collect(),
                    _ => None,
                })
                .collect(),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, Value>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = strip_comment(raw);
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("line {}: expected key = value", i + 1)))?;
            let key = key.trim();
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(Error::InvalidInput(format!("line {}: bad key '{key}'", i + 1)));
            }
            let value = parse_value(rest).map_err(|e| Error::InvalidInput(format!("line {}: {e}", i + 1)))?;
            entries.insert(key.to_string(), value);
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key)
    }

    pub fn require(&self, key: &str) -> Result<&Value> {
        self.get(key).ok_or_else(|| Error::InvalidInput(format!("missing key '{key}'")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        self.require(key)?
            .as_f64()
            .ok_or_else(|| Error::InvalidInput(format!("'{key}' must be a number")))
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.require(key)?
            .as_str()
            .ok_or_else(|| Error::InvalidInput(format!("'{key}' must be a string")))
    }
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, ch) in line.char_indices() {
        match ch {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Parses one value occupying all of `s`.
pub fn parse_value(s: &str) -> std::result::Result<Value, String> {
    let chars: Vec<char> = s.chars().collect();
    let mut p = Parser { s: &chars, i: 0 };
    let v = p.value()?;
    p.skip_ws();
    if p.i != chars.len() {
        return Err(format!("trailing input '{}'", chars[p.i..].iter().collect::<String>()));
    }
    Ok(v)
}

struct Parser<'a> {
    s: &'a [char],
    i: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_whitespace() {
            self.i += 1;
        }
    }

    fn value(&mut self) -> std::result::Result<Value, String> {
        self.skip_ws();
        match self.s.get(self.i) {
            None => Err("missing value".into()),
            Some('[') => {
                self.i += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    if self.s.get(self.i) == Some(&']') {
                        self.i += 1;
                        return Ok(Value::Array(items));
                    }
                    items.push(self.value()?);
                    self.skip_ws();
                    match self.s.get(self.i) {
                        Some(',') => self.i += 1,
                        Some(']') => {}
                        _ => return Err("expected ',' or ']' in array".into()),
                    }
                }
            }
            Some('"') => {
                self.i += 1;
                let start = self.i;
                while self.i < self.s.len() && self.s[self.i] != '"' {
                    self.i += 1;
                }
                if self.i == self.s.len() {
                    return Err("unterminated string".into());
                }
                let out: String = self.s[start..self.i].iter().collect();
                self.i += 1;
                Ok(Value::Str(out))
            }
            Some(_) => {
                let start = self.i;
                while self.i < self.s.len() && !matches!(self.s[self.i], ',' | ']' | '[') {
                    self.i += 1;
                }
                let word: String = self.s[start..self.i].iter().collect::<String>().trim().to_string();
                if word.is_empty() {
                    return Err("empty value".into());
                }
                Ok(match word.as_str() {
                    "true" => Value::Bool(true),
                    "false" => Value::Bool(false),
                    _ => word.parse::<f64>().map(Value::Number).unwrap_or(Value::Str(word)),
                })
            }
        }
    }
}
