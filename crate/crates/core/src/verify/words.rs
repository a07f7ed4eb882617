//! Trace words in the per-site pair `(Y, Z)`.

use crate::dynamics::extended::{embed_matrices, site_pair, ExtendedState};
use crate::dynamics::{ChainKind, DarbouxChart, Observable};
use crate::error::{Error, Result};
use crate::liealg::{matrix_power, LieContext};
use crate::scalar::Real;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Letter {
    Y,
    Z,
}

/// `Tr(L_1^{e_1} ⋯ L_m^{e_m})` at a site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceWordSpec {
    pub site: usize,
    pub word: Vec<(Letter, u32)>,
}

impl TraceWordSpec {
    pub fn new(site: usize, word: Vec<(Letter, u32)>) -> Result<Self> {
        if word.is_empty() || word.iter().any(|(_, e)| *e == 0) {
            return Err(Error::MalformedWord("empty word or zero exponent".into()));
        }
        Ok(Self { site, word })
    }

    /// Total length `Σ e_i`.
    pub fn len(&self) -> usize {
        self.word.iter().map(|(_, e)| *e as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Parse `"Y2 Z"`, `"YYZ"`, `"Y^2Z^3"` at the given site.
    pub fn parse(site: usize, text: &str) -> Result<Self> {
        let mut word: Vec<(Letter, u32)> = Vec::new();
        let mut chars = text.chars().filter(|c| !c.is_whitespace()).peekable();
        while let Some(c) = chars.next() {
            let letter = match c {
                'Y' | 'y' => Letter::Y,
                'Z' | 'z' => Letter::Z,
                other => return Err(Error::MalformedWord(format!("unexpected character '{other}' in '{text}'"))),
            };
            if chars.peek() == Some(&'^') {
                chars.next();
            }
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let e: u32 = if digits.is_empty() {
                1
            } else {
                digits.parse().map_err(|_| Error::MalformedWord(format!("bad exponent in '{text}'")))?
            };
            match word.last_mut() {
                Some((l, exp)) if *l == letter => *exp += e,
                _ => word.push((letter, e)),
            }
        }
        Self::new(site, word)
    }

    fn check_site(&self, kind: ChainKind, sites: usize) -> Result<()> {
        let ok = match kind {
            ChainKind::Periodic => (1..=sites).contains(&self.site),
            ChainKind::Open => self.site <= sites + 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::MalformedWord(format!("site {} not valid for a chain with {sites} sites", self.site)))
        }
    }
}

impl fmt::Display for TraceWordSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "site {}: ", self.site)?;
        for (l, e) in &self.word {
            let c = match l {
                Letter::Y => 'Y',
                Letter::Z => 'Z',
            };
            if *e == 1 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}^{e}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for TraceWordSpec {
    type Err = Error;

    /// `"<site>:<word>"`.
    fn from_str(s: &str) -> Result<Self> {
        let (site, word) = s
            .split_once(':')
            .ok_or_else(|| Error::MalformedWord(format!("expected '<site>:<word>', got '{s}'")))?;
        let site = site.trim().parse().map_err(|_| Error::MalformedWord(format!("bad site in '{s}'")))?;
        Self::parse(site, word)
    }
}

/// Evaluate a word on raw extended-space matrices.
pub fn trace_word_matrices<T: Real>(kind: ChainKind, x: &[DMatrix<T>], g: &[DMatrix<T>], spec: &TraceWordSpec) -> Result<T> {
    let sites = match kind {
        ChainKind::Periodic => x.len(),
        ChainKind::Open => x.len() - 1,
    };
    spec.check_site(kind, sites)?;
    if spec.word.is_empty() {
        return Err(Error::MalformedWord("empty word".into()));
    }
    let (y, z) = site_pair(kind, x, g, spec.site)?;
    let n = y.nrows();
    let mut m = DMatrix::<T>::identity(n, n);
    for (l, e) in &spec.word {
        let base = match l {
            Letter::Y => &y,
            Letter::Z => &z,
        };
        m *= matrix_power(base, *e as usize);
    }
    Ok(m.trace())
}

/// `Tr` of the word on an extended state.
pub fn trace_word(es: &ExtendedState, spec: &TraceWordSpec) -> Result<f64> {
    let x: Vec<_> = es.x.iter().map(|v| v.0.clone()).collect();
    let g: Vec<_> = es.g.iter().map(|v| v.0.clone()).collect();
    trace_word_matrices(es.kind, &x, &g, spec)
}

/// Mixed words of length at most `max_len` at every site (Casimir-only
/// words excluded).
pub fn default_words(kind: ChainKind, sites: usize, max_len: usize) -> Vec<TraceWordSpec> {
    let site_range: Vec<usize> = match kind {
        ChainKind::Periodic => (1..=sites).collect(),
        ChainKind::Open => (0..=sites + 1).collect(),
    };
    let mut words = Vec::new();
    for site in site_range {
        for len in 2..=max_len {
            for mask in 0u32..(1 << len) {
                let letters: Vec<Letter> = (0..len).map(|b| if mask >> b & 1 == 1 { Letter::Z } else { Letter::Y }).collect();
                if !letters.contains(&Letter::Y) || !letters.contains(&Letter::Z) {
                    continue;
                }
                // Keep one representative per cyclic rotation class.
                let rotations = (0..len).map(|r| (mask >> r | mask << (len - r)) & ((1 << len) - 1));
                if rotations.min() != Some(mask) {
                    continue;
                }
                let mut word: Vec<(Letter, u32)> = Vec::new();
                for l in letters {
                    match word.last_mut() {
                        Some((last, e)) if *last == l => *e += 1,
                        _ => word.push((l, 1)),
                    }
                }
                words.push(TraceWordSpec { site, word });
            }
        }
    }
    words
}

/// A trace word viewed as a function on the radial chart.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTraceWord(pub TraceWordSpec);

impl Observable for RadialTraceWord {
    fn eval<T: Real>(&self, _ctx: &LieContext, chart: &DarbouxChart, z: &[T]) -> Result<T> {
        let state = chart.unpack(z)?;
        let (x, g) = embed_matrices(&state);
        trace_word_matrices(chart.kind(), &x, &g, &self.0)
    }
}
