//! Runtime values: 64-bit integers and fixed-point decimals with four
//! fractional digits.
//!
//! Integers and decimals compare numerically (`2 == 2.0`). The only place
//! where the two kinds behave differently is division and remainder, where
//! two integers use truncating integer semantics.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Number of fractional decimal digits carried by [`Fixed`].
pub const FIXED_DIGITS: u32 = 4;
/// `10^FIXED_DIGITS`.
pub const FIXED_SCALE: i64 = 10_000;

/// Fixed-point decimal stored as `raw / 10^4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fixed(pub i64);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const ONE: Fixed = Fixed(FIXED_SCALE);

    pub fn from_int(v: i64) -> Option<Fixed> {
        v.checked_mul(FIXED_SCALE).map(Fixed)
    }

    pub fn raw(self) -> i64 {
        self.0
    }

    /// Parses `123`, `-0.25`, `1.1000`. At most four fractional digits.
    pub fn parse(text: &str) -> Option<Fixed> {
        let (neg, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if frac_part.len() > FIXED_DIGITS as usize || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        let int: i64 = int_part.parse().ok()?;
        let mut frac: i64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().ok()?
        };
        for _ in frac_part.len()..FIXED_DIGITS as usize {
            frac *= 10;
        }
        let raw = int.checked_mul(FIXED_SCALE)?.checked_add(frac)?;
        Some(Fixed(if neg { -raw } else { raw }))
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let raw = self.0 as i128;
        let sign = if raw < 0 { "-" } else { "" };
        let abs = raw.abs();
        let scale = FIXED_SCALE as i128;
        write!(f, "{sign}{}.{:04}", abs / scale, abs % scale)
    }
}

/// A value produced by evaluating an expression or statement.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub enum Value {
    Int(i64),
    Fixed(Fixed),
    /// Result of calling a function that falls off its end.
    Unit,
}

/// Failure of a primitive operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithError {
    DivisionByZero,
    Overflow,
    InvalidOperand,
}

impl Value {
    pub const TRUE: Value = Value::Int(1);
    pub const FALSE: Value = Value::Int(0);

    pub fn from_bool(b: bool) -> Value {
        if b {
            Value::TRUE
        } else {
            Value::FALSE
        }
    }

    /// Value scaled to fixed-point units as an exact wide integer, or `None`
    /// for [`Value::Unit`]. Numerically equal values share one canonical form.
    pub fn canonical(self) -> Option<i128> {
        match self {
            Value::Int(v) => Some(v as i128 * FIXED_SCALE as i128),
            Value::Fixed(f) => Some(f.0 as i128),
            Value::Unit => None,
        }
    }

    pub fn is_zero(self) -> bool {
        self.canonical() == Some(0)
    }

    pub fn truthy(self) -> Result<bool, ArithError> {
        self.canonical()
            .map(|c| c != 0)
            .ok_or(ArithError::InvalidOperand)
    }

    pub fn neg(self) -> Result<Value, ArithError> {
        match self {
            Value::Int(v) => v.checked_neg().map(Value::Int).ok_or(ArithError::Overflow),
            Value::Fixed(f) => {
                f.0.checked_neg()
                    .map(|r| Value::Fixed(Fixed(r)))
                    .ok_or(ArithError::Overflow)
            }
            Value::Unit => Err(ArithError::InvalidOperand),
        }
    }

    pub fn add(self, rhs: Value) -> Result<Value, ArithError> {
        match (self, rhs) {
            (Value::Int(a), Value::Int(b)) => {
                a.checked_add(b).map(Value::Int).ok_or(ArithError::Overflow)
            }
            _ => fixed_result(self.wide()? + rhs.wide()?),
        }
    }

    pub fn sub(self, rhs: Value) -> Result<Value, ArithError> {
        match (self, rhs) {
            (Value::Int(a), Value::Int(b)) => {
                a.checked_sub(b).map(Value::Int).ok_or(ArithError::Overflow)
            }
            _ => fixed_result(self.wide()? - rhs.wide()?),
        }
    }

    pub fn mul(self, rhs: Value) -> Result<Value, ArithError> {
        match (self, rhs) {
            (Value::Int(a), Value::Int(b)) => {
                a.checked_mul(b).map(Value::Int).ok_or(ArithError::Overflow)
            }
            _ => {
                let product = self
                    .wide()?
                    .checked_mul(rhs.wide()?)
                    .ok_or(ArithError::Overflow)?;
                fixed_result(product / FIXED_SCALE as i128)
            }
        }
    }

    pub fn div(self, rhs: Value) -> Result<Value, ArithError> {
        match (self, rhs) {
            (Value::Int(_), Value::Int(0)) => Err(ArithError::DivisionByZero),
            (Value::Int(a), Value::Int(b)) => {
                a.checked_div(b).map(Value::Int).ok_or(ArithError::Overflow)
            }
            _ => {
                let den = rhs.wide()?;
                if den == 0 {
                    return Err(ArithError::DivisionByZero);
                }
                let num = self
                    .wide()?
                    .checked_mul(FIXED_SCALE as i128)
                    .ok_or(ArithError::Overflow)?;
                fixed_result(num / den)
            }
        }
    }

    pub fn rem(self, rhs: Value) -> Result<Value, ArithError> {
        match (self, rhs) {
            (Value::Int(_), Value::Int(0)) => Err(ArithError::DivisionByZero),
            (Value::Int(a), Value::Int(b)) => {
                a.checked_rem(b).map(Value::Int).ok_or(ArithError::Overflow)
            }
            _ => {
                let den = rhs.wide()?;
                if den == 0 {
                    return Err(ArithError::DivisionByZero);
                }
                fixed_result(self.wide()? % den)
            }
        }
    }

    pub fn compare(self, rhs: Value) -> Result<Ordering, ArithError> {
        Ok(self.wide()?.cmp(&rhs.wide()?))
    }

    fn wide(self) -> Result<i128, ArithError> {
        self.canonical().ok_or(ArithError::InvalidOperand)
    }
}

fn fixed_result(raw: i128) -> Result<Value, ArithError> {
    i64::try_from(raw)
        .map(|r| Value::Fixed(Fixed(r)))
        .map_err(|_| ArithError::Overflow)
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Fixed(x) => write!(f, "{x}"),
            Value::Unit => f.write_str("()"),
        }
    }
}
