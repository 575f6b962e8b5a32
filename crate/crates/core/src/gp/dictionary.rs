//! Ordered training set of an exact GP.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Input/target pairs stored row-major. Indices stay valid between
/// mutations: appends go to the end and replacements overwrite in place.
#[derive(Clone, Debug, PartialEq)]
pub struct Dictionary {
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    capacity: Option<usize>,
}

impl Dictionary {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        Dictionary { input_dim, output_dim, inputs: Vec::new(), targets: Vec::new(), capacity: None }
    }

    pub fn with_capacity_limit(mut self, capacity: usize) -> Self {
        self.capacity = Some(capacity);
        self
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn len(&self) -> usize {
        if self.input_dim == 0 {
            0
        } else {
            self.inputs.len() / self.input_dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.output_dim..(i + 1) * self.output_dim]
    }

    pub fn inputs(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.inputs.chunks_exact(self.input_dim)
    }

    pub fn targets(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.targets.chunks_exact(self.output_dim)
    }

    pub(crate) fn check_pair(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.input_dim || y.len() != self.output_dim {
            return Err(Error::usage(format!(
                "pair shape ({}, {}) does not match dictionary ({}, {})",
                x.len(),
                y.len(),
                self.input_dim,
                self.output_dim
            )));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::usage("non-finite dictionary entry"));
        }
        Ok(())
    }

    pub fn push(&mut self, x: &[f64], y: &[f64]) -> Result<()> {
        self.check_pair(x, y)?;
        if let Some(cap) = self.capacity {
            if self.len() >= cap {
                return Err(Error::Capacity { capacity: cap, policy: "fifo or replace-by-max-covariance" });
            }
        }
        self.inputs.extend_from_slice(x);
        self.targets.extend_from_slice(y);
        Ok(())
    }

    pub fn set(&mut self, i: usize, x: &[f64], y: &[f64]) -> Result<()> {
        self.check_pair(x, y)?;
        if i >= self.len() {
            return Err(Error::usage(format!("dictionary index {i} out of range (len {})", self.len())));
        }
        self.inputs[i * self.input_dim..(i + 1) * self.input_dim].copy_from_slice(x);
        self.targets[i * self.output_dim..(i + 1) * self.output_dim].copy_from_slice(y);
        Ok(())
    }

    /// Drops the oldest pair.
    pub(crate) fn pop_front(&mut self) {
        if !self.is_empty() {
            self.inputs.drain(..self.input_dim);
            self.targets.drain(..self.output_dim);
        }
    }

    /// Columnar text: one row per pair, inputs then targets.
    pub fn write_columnar<W: Write>(&self, mut w: W, delimiter: char) -> Result<()> {
        for (x, y) in self.inputs().zip(self.targets()) {
            let mut first = true;
            for v in x.iter().chain(y) {
                if !first {
                    write!(w, "{delimiter}")?;
                }
                first = false;
                // shortest round-trip representation
                write!(w, "{v:?}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Parses the columnar format. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn read_columnar<R: BufRead>(r: R, input_dim: usize, output_dim: usize, delimiter: char) -> Result<Self> {
        let mut dict = Dictionary::new(input_dim, output_dim);
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields = line
                .split(delimiter)
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if fields.len() != input_dim + output_dim {
                return Err(Error::Parse(format!(
                    "line {}: expected {} fields, found {}",
                    lineno + 1,
                    input_dim + output_dim,
                    fields.len()
                )));
            }
            dict.push(&fields[..input_dim], &fields[input_dim..])?;
        }
        Ok(dict)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columnar_round_trip_is_exact() {
        let mut d = Dictionary::new(2, 1);
        d.push(&[0.1, -1.0 / 3.0], &[2.5e-17]).unwrap();
        d.push(&[1e300, 0.0], &[-7.0]).unwrap();
        let mut buf = Vec::new();
        d.write_columnar(&mut buf, ',').unwrap();
        let back = Dictionary::read_columnar(&buf[..], 2, 1, ',').unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn capacity_and_handles() {
        let mut d = Dictionary::new(1, 1).with_capacity_limit(1);
        d.push(&[0.0], &[1.0]).unwrap();
        assert!(matches!(d.push(&[1.0], &[1.0]), Err(Error::Capacity { .. })));
        assert!(d.set(3, &[0.0], &[0.0]).is_err());
        d.set(0, &[2.0], &[3.0]).unwrap();
        assert_eq!(d.input(0), &[2.0]);
        assert_eq!(d.target(0), &[3.0]);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(Dictionary::read_columnar("1,2\n".as_bytes(), 2, 1, ',').is_err());
        assert!(Dictionary::read_columnar("1,x,2\n".as_bytes(), 2, 1, ',').is_err());
    }
}
