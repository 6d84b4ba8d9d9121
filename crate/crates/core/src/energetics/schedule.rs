use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which one-sided derivative to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Piecewise-linear table of `(t, value)` rows, constant outside its range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table<T> {
    pub rows: Vec<(f64, T)>,
}

pub trait Lerp: Copy {
    fn lerp(a: Self, b: Self, w: f64) -> Self;
    fn slope(a: Self, b: Self, dt: f64) -> Self;
    fn zero() -> Self;
}

impl Lerp for f64 {
    fn lerp(a: f64, b: f64, w: f64) -> f64 {
        a + w * (b - a)
    }
    fn slope(a: f64, b: f64, dt: f64) -> f64 {
        (b - a) / dt
    }
    fn zero() -> f64 {
        0.0
    }
}

impl Lerp for [f64; 3] {
    fn lerp(a: Self, b: Self, w: f64) -> Self {
        std::array::from_fn(|c| f64::lerp(a[c], b[c], w))
    }
    fn slope(a: Self, b: Self, dt: f64) -> Self {
        std::array::from_fn(|c| (b[c] - a[c]) / dt)
    }
    fn zero() -> Self {
        [0.0; 3]
    }
}

impl<T: Lerp> Table<T> {
    pub fn new(rows: Vec<(f64, T)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("schedule table is empty"));
        }
        if rows.iter().any(|r| !r.0.is_finite()) || rows.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("schedule times must be finite and strictly increasing"));
        }
        Ok(Self { rows })
    }

    pub fn constant(v: T) -> Self {
        Self { rows: vec![(0.0, v)] }
    }

    /// Index of the segment `[t_i, t_{i+1})` containing `t`, if any.
    fn segment(&self, t: f64) -> Option<usize> {
        let r = &self.rows;
        if r.len() < 2 || t < r[0].0 || t > r[r.len() - 1].0 {
            return None;
        }
        let i = r.partition_point(|row| row.0 <= t);
        Some(i.saturating_sub(1).min(r.len() - 2))
    }

    pub fn value(&self, t: f64) -> T {
        let r = &self.rows;
        if t <= r[0].0 {
            return r[0].1;
        }
        if t >= r[r.len() - 1].0 {
            return r[r.len() - 1].1;
        }
        let i = self.segment(t).expect("inside table range");
        let (t0, a) = r[i];
        let (t1, b) = r[i + 1];
        T::lerp(a, b, (t - t0) / (t1 - t0))
    }

    /// One-sided derivative; zero outside the table range.
    pub fn rate(&self, t: f64, side: Side) -> T {
        let r = &self.rows;
        if r.len() < 2 {
            return T::zero();
        }
        let i = match (self.segment(t), side) {
            (None, _) => return T::zero(),
            (Some(i), Side::Left) if t == r[i].0 => {
                if i == 0 {
                    return T::zero();
                }
                i - 1
            }
            (Some(i), Side::Right) if t == r[r.len() - 1].0 && i == r.len() - 2 => return T::zero(),
            (Some(i), _) => i,
        };
        T::slope(r[i].1, r[i + 1].1, r[i + 1].0 - r[i].0)
    }

    pub fn is_breakpoint(&self, t: f64) -> bool {
        self.rows.iter().any(|r| r.0 == t)
    }

    fn scaled(&self, factor: f64) -> Self {
        Self { rows: self.rows.iter().map(|&(t, v)| (t * factor, v)).collect() }
    }
}

/// External field as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldLaw {
    Table { table: Table<[f64; 3]> },
    /// `offset + amplitude * sin(2 pi t / period + phase)`.
    Harmonic { offset: [f64; 3], amplitude: [f64; 3], period: f64, phase: f64 },
}

impl FieldLaw {
    fn value(&self, t: f64) -> [f64; 3] {
        match self {
            FieldLaw::Table { table } => table.value(t),
            FieldLaw::Harmonic { offset, amplitude, period, phase } => {
                let s = (2.0 * PI * (t / period) + phase).sin();
                std::array::from_fn(|c| offset[c] + amplitude[c] * s)
            }
        }
    }

    fn rate(&self, t: f64, side: Side) -> [f64; 3] {
        match self {
            FieldLaw::Table { table } => table.rate(t, side),
            FieldLaw::Harmonic { amplitude, period, phase, .. } => {
                let c = (2.0 * PI * (t / period) + phase).cos() * 2.0 * PI / period;
                amplitude.map(|a| a * c)
            }
        }
    }
}

/// Boundary amplitude `lambda(t)` and uniform applied field `H(t)` on
/// `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSchedule {
    pub lambda: Table<f64>,
    pub field: FieldLaw,
    pub horizon: f64,
}

impl LoadSchedule {
    pub fn new(lambda: Table<f64>, field: FieldLaw, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!("horizon must be positive (got {horizon})")));
        }
        if let FieldLaw::Harmonic { period, .. } = field {
            if !(period > 0.0 && period.is_finite()) {
                return Err(Error::invalid("harmonic period must be positive"));
            }
        }
        Ok(Self { lambda, field, horizon })
    }

    /// Time-independent loading.
    pub fn frozen(lambda: f64, field: [f64; 3], horizon: f64) -> Self {
        Self {
            lambda: Table::constant(lambda),
            field: FieldLaw::Table { table: Table::constant(field) },
            horizon,
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::invalid(format!("time {t} outside [0, {}]", self.horizon)));
        }
        Ok(())
    }

    pub fn lambda(&self, t: f64) -> f64 {
        self.lambda.value(t)
    }

    pub fn field(&self, t: f64) -> [f64; 3] {
        self.field.value(t)
    }

    pub fn lambda_rate(&self, t: f64, side: Side) -> f64 {
        self.lambda.rate(t, side)
    }

    pub fn field_rate(&self, t: f64, side: Side) -> [f64; 3] {
        self.field.rate(t, side)
    }

    /// Whether `t` is a kink of either table (derivatives are one-sided there).
    pub fn is_breakpoint(&self, t: f64) -> bool {
        self.lambda.is_breakpoint(t)
            || matches!(&self.field, FieldLaw::Table { table } if table.is_breakpoint(t))
    }

    /// Same loading path traversed `factor` times slower.
    pub fn time_scaled(&self, factor: f64) -> Self {
        let field = match &self.field {
            FieldLaw::Table { table } => FieldLaw::Table { table: table.scaled(factor) },
            FieldLaw::Harmonic { offset, amplitude, period, phase } => FieldLaw::Harmonic {
                offset: *offset,
                amplitude: *amplitude,
                period: period * factor,
                phase: *phase,
            },
        };
        Self { lambda: self.lambda.scaled(factor), field, horizon: self.horizon * factor }
    }

    /// `n` equal steps over `[0, T]`.
    pub fn uniform_partition(&self, n: usize) -> Vec<f64> {
        (0..=n).map(|k| self.horizon * (k as f64 / n as f64)).collect()
    }
}
