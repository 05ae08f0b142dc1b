//! Dense upper-triangular QUBO instances and the sparse triplet text format.
//!
//! `H(x) = Σ_{i≤j} Q_ij x_i x_j + offset`. Linear terms live on the diagonal
//! because `x_i² = x_i` for bits.
//!
//! Triplet format (whitespace separated, `#` starts a comment):
//!
//! ```text
//! # optional comments; "# t <value>" records the bisection parameter
//! <N_V> <offset>
//! <i> <j> <value>
//! ...
//! ```
//!
//! Indices are 0-based. Entries with `i > j` are folded onto `(j, i)` and
//! repeated entries are summed.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    n: usize,
    /// Row-major `n × n`; the strictly lower triangle is always zero.
    q: Vec<f64>,
    offset: f64,
    t: Option<f64>,
}

impl QuboInstance {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            q: vec![0.0; n * n],
            offset: 0.0,
            t: None,
        }
    }

    /// From an upper-triangular row-major matrix. Lower-triangle entries are
    /// folded onto their mirror.
    pub fn from_upper(n: usize, q: Vec<f64>, offset: f64) -> Result<Self> {
        if q.len() != n * n {
            return Err(Error::invalid(format!("expected {} entries, got {}", n * n, q.len())));
        }
        let mut inst = Self { n, q, offset, t: None };
        for i in 0..n {
            for j in 0..i {
                let v = std::mem::take(&mut inst.q[i * n + j]);
                inst.q[j * n + i] += v;
            }
        }
        Ok(inst)
    }

    /// `x^T M x + linear^T x + offset` for symmetric `M` given row-major.
    pub fn from_symmetric_parts(n: usize, m: &[f64], linear: &[f64], offset: f64) -> Result<Self> {
        if m.len() != n * n || linear.len() != n {
            return Err(Error::invalid("matrix / linear term size mismatch"));
        }
        let mut q = vec![0.0; n * n];
        for i in 0..n {
            q[i * n + i] = m[i * n + i] + linear[i];
            for j in (i + 1)..n {
                q[i * n + j] = m[i * n + j] + m[j * n + i];
            }
        }
        Ok(Self { n, q, offset, t: None })
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn t(&self) -> Option<f64> {
        self.t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i <= j {
            self.q[i * self.n + j]
        } else {
            self.q[j * self.n + i]
        }
    }

    /// Adds to the upper-triangular slot of `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.q[i * self.n + j] += value;
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.q
    }

    pub fn linear(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.q[i * self.n + i]).collect()
    }

    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::invalid(format!(
                "configuration has {} bits, instance has {}",
                x.len(),
                self.n
            )));
        }
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[u8]) -> f64 {
        let n = self.n;
        let mut e = self.offset;
        for i in 0..n {
            if x[i] == 0 {
                continue;
            }
            let row = &self.q[i * n..(i + 1) * n];
            let mut s = 0.0;
            for j in i..n {
                if x[j] != 0 {
                    s += row[j];
                }
            }
            e += s;
        }
        e
    }

    /// Mean absolute value of the nonzero upper-triangular coefficients.
    pub fn mean_abs_coefficient(&self) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..self.n {
            for &v in &self.q[i * self.n + i..(i + 1) * self.n] {
                if v != 0.0 {
                    sum += v.abs();
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }

    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i..self.n).filter_map(move |j| {
                let v = self.q[i * self.n + j];
                (v != 0.0).then_some((i, j, v))
            })
        })
    }

    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut buf = String::new();
        if let Some(t) = self.t {
            let _ = writeln!(buf, "# t {t}");
        }
        let _ = writeln!(buf, "{} {}", self.n, self.offset);
        out.write_all(buf.as_bytes())?;
        for (i, j, v) in self.nonzeros() {
            writeln!(out, "{i} {j} {v}")?;
        }
        Ok(())
    }

    pub fn to_triplet_string(&self) -> String {
        let mut out = Vec::new();
        self.write_triplets(&mut out).expect("writing to a Vec cannot fail");
        String::from_utf8(out).expect("ascii output")
    }

    pub fn save_triplets(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_triplets(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_triplets<R: BufRead>(input: R) -> Result<Self> {
        let mut inst: Option<QuboInstance> = None;
        let mut t = None;
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let trimmed = line.trim();
            if let Some(comment) = trimmed.strip_prefix('#') {
                let mut parts = comment.split_whitespace();
                if parts.next() == Some("t") {
                    if let Some(v) = parts.next() {
                        t = Some(parse_num::<f64>(v, lineno)?);
                    }
                }
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            match (&mut inst, fields.as_slice()) {
                (None, [n, offset]) => {
                    let n: usize = parse_num(n, lineno)?;
                    let mut fresh = QuboInstance::zeros(n);
                    fresh.offset = parse_num(offset, lineno)?;
                    inst = Some(fresh);
                }
                (Some(q), [i, j, v]) => {
                    let i: usize = parse_num(i, lineno)?;
                    let j: usize = parse_num(j, lineno)?;
                    if i >= q.n || j >= q.n {
                        return Err(Error::Parse(format!(
                            "line {}: index ({i}, {j}) out of range for {} variables",
                            lineno + 1,
                            q.n
                        )));
                    }
                    q.add(i, j, parse_num(v, lineno)?);
                }
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: unexpected `{trimmed}`",
                        lineno + 1
                    )))
                }
            }
        }
        let mut inst = inst.ok_or_else(|| Error::Parse("missing `<N_V> <offset>` header".into()))?;
        inst.t = t;
        Ok(inst)
    }

    pub fn load_triplets(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_triplets(std::io::BufReader::new(file))
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, lineno: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {}: cannot parse `{s}`", lineno + 1)))
}
