//! The defining sequence `{j_n}` and the closed-form combinatorics that
//! follow from it: cell scales, cell and node counts, shape counts and the
//! Hausdorff / spectral / walk dimensions.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Constant,
    Periodic,
    Explicit,
}

/// The sequence `{j_n}_{n>=1}` that defines a Laakso space.
///
/// Periodic patterns are stored in their minimal period, so `"2,2"` is the
/// constant sequence `2` and `"2,3,2,3"` is the periodic pattern `(2,3)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JSequence {
    kind: SequenceKind,
    values: Vec<u32>,
}

impl JSequence {
    pub fn constant(j: u32) -> Result<Self> {
        check_entry(j, 0)?;
        Ok(JSequence { kind: SequenceKind::Constant, values: vec![j] })
    }

    /// Repeat `pattern` forever. The pattern is reduced to its minimal period.
    pub fn periodic(pattern: &[u32]) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::validation("periodic pattern is empty"));
        }
        for (i, &j) in pattern.iter().enumerate() {
            check_entry(j, i)?;
        }
        let p = minimal_period(pattern);
        if p == 1 {
            return Self::constant(pattern[0]);
        }
        Ok(JSequence { kind: SequenceKind::Periodic, values: pattern[..p].to_vec() })
    }

    /// A finite prefix `j_1, ..., j_L`; levels beyond `L` do not exist.
    pub fn explicit(prefix: &[u32]) -> Result<Self> {
        if prefix.is_empty() {
            return Err(Error::validation("explicit sequence is empty"));
        }
        for (i, &j) in prefix.iter().enumerate() {
            check_entry(j, i)?;
        }
        Ok(JSequence { kind: SequenceKind::Explicit, values: prefix.to_vec() })
    }

    /// Parse `"k"`, `"a,b,..."` or `"seq:a,b,..."`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (explicit, body) = match text.strip_prefix("seq:") {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        if body.trim().is_empty() {
            return Err(Error::validation(format!("empty sequence spec {text:?}")));
        }
        let mut values = Vec::new();
        for (i, tok) in body.split(',').enumerate() {
            let tok = tok.trim();
            let j: u32 = tok.parse().map_err(|_| {
                Error::validation(format!("entry {} ({tok:?}) is not a non-negative integer", i + 1))
            })?;
            check_entry(j, i)?;
            values.push(j);
        }
        if explicit {
            Self::explicit(&values)
        } else if values.len() == 1 {
            Self::constant(values[0])
        } else {
            Self::periodic(&values)
        }
    }

    pub fn kind(&self) -> SequenceKind {
        self.kind
    }

    /// The constant, the repeating pattern or the explicit prefix.
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// Length of an explicit prefix; `None` for infinite sequences.
    pub fn len(&self) -> Option<usize> {
        match self.kind {
            SequenceKind::Explicit => Some(self.values.len()),
            _ => None,
        }
    }

    /// Period of a constant (1) or periodic sequence.
    pub fn period(&self) -> Option<usize> {
        match self.kind {
            SequenceKind::Explicit => None,
            _ => Some(self.values.len()),
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.kind != SequenceKind::Explicit
    }

    /// Largest admissible level index, if any.
    pub fn max_level(&self) -> Option<usize> {
        self.len()
    }

    pub fn check_level(&self, n: usize) -> Result<()> {
        match self.len() {
            Some(len) if n > len => Err(Error::BeyondPrefix { level: n, len }),
            _ => Ok(()),
        }
    }

    /// `j_n` for `n >= 1`.
    pub fn j(&self, n: usize) -> Result<u32> {
        if n == 0 {
            return Err(Error::validation("j_n is indexed from n = 1"));
        }
        self.check_level(n)?;
        Ok(self.j_unchecked(n))
    }

    pub(crate) fn j_unchecked(&self, n: usize) -> u32 {
        match self.kind {
            SequenceKind::Explicit => self.values[n - 1],
            _ => self.values[(n - 1) % self.values.len()],
        }
    }

    /// `I_n = j_1 * ... * j_n`.
    pub fn scale(&self, n: usize) -> Result<BigUint> {
        self.check_level(n)?;
        Ok((1..=n).fold(BigUint::one(), |acc, i| acc * self.j_unchecked(i)))
    }

    /// `I_n` for `n = 0..=n_max` in one pass.
    pub fn scales(&self, n_max: usize) -> Result<Vec<BigUint>> {
        self.check_level(n_max)?;
        let mut out = Vec::with_capacity(n_max + 1);
        out.push(BigUint::one());
        for n in 1..=n_max {
            let next = &out[n - 1] * self.j_unchecked(n);
            out.push(next);
        }
        Ok(out)
    }

    /// Product of one period of the pattern.
    pub fn pattern_product(&self) -> Option<u64> {
        self.period().map(|_| self.values.iter().map(|&j| j as u64).product())
    }

    /// The largest `j_n` that can occur.
    pub fn max_j(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(2)
    }
}

fn check_entry(j: u32, index: usize) -> Result<()> {
    if j < 2 {
        return Err(Error::validation(format!(
            "entry {} is {j}, but every j_n must be >= 2",
            index + 1
        )));
    }
    Ok(())
}

fn minimal_period(pattern: &[u32]) -> usize {
    let n = pattern.len();
    (1..=n)
        .find(|&p| n % p == 0 && (p..n).all(|i| pattern[i] == pattern[i - p]))
        .unwrap_or(n)
}

impl fmt::Display for JSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body = self.values.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(",");
        match self.kind {
            SequenceKind::Explicit => write!(f, "seq:{body}"),
            _ => f.write_str(&body),
        }
    }
}

impl FromStr for JSequence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        JSequence::parse(s)
    }
}

impl Serialize for JSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for JSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        JSequence::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Exact per-level counts of `F_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelInfo {
    pub n: usize,
    /// `I_n`; cells have length `1 / I_n`.
    #[serde(with = "crate::bigdec")]
    pub scale: BigUint,
    /// `N_n = 2^n I_n`, the number of cells (edges) of `F_n`.
    #[serde(with = "crate::bigdec")]
    pub cells: BigUint,
    #[serde(with = "crate::bigdec")]
    pub nodes: BigUint,
}

impl LevelInfo {
    pub fn cell_length(&self) -> f64 {
        1.0 / big_to_f64(&self.scale)
    }
}

pub fn level_info(seq: &JSequence, n: usize) -> Result<LevelInfo> {
    let scale = seq.scale(n)?;
    let cells = (&scale) << n;
    let nodes = node_count(n, &scale);
    Ok(LevelInfo { n, scale, cells, nodes })
}

/// `2^{n-1}(I_n + 3)` for `n >= 1`; the unit interval has two nodes.
fn node_count(n: usize, scale: &BigUint) -> BigUint {
    if n == 0 {
        BigUint::from(2u32)
    } else {
        (scale + 3u32) << (n - 1)
    }
}

/// How many V's, loops and crosses appear at level `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShapeCensus {
    pub n: usize,
    #[serde(with = "crate::bigdec")]
    pub v_count: BigUint,
    #[serde(with = "crate::bigdec")]
    pub loop_count: BigUint,
    #[serde(with = "crate::bigdec")]
    pub cross_count: BigUint,
}

impl ShapeCensus {
    pub fn degree_one_nodes(&self) -> BigUint {
        &self.v_count << 1
    }
}

pub fn shape_census(seq: &JSequence, n: usize) -> Result<ShapeCensus> {
    if n == 0 {
        return Err(Error::validation("no shapes exist on the unit interval (n = 0)"));
    }
    let prev = seq.scale(n - 1)?;
    let j = seq.j(n)?;
    let v_count = BigUint::one() << n;
    let loop_count = (&prev * (j - 2)) << (n - 1);
    let cross_count = if n >= 2 { (&prev - 1u32) << (n - 2) } else { BigUint::zero() };
    Ok(ShapeCensus { n, v_count, loop_count, cross_count })
}

/// Number of degree-four nodes of `F_n`, `2^{n-1}(I_n - 1)`.
pub fn degree_four_nodes(seq: &JSequence, n: usize) -> Result<BigUint> {
    if n == 0 {
        return Ok(BigUint::zero());
    }
    Ok((seq.scale(n)? - 1u32) << (n - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionReport {
    /// `lim I_n^{1/n}`.
    pub r: f64,
    pub hausdorff: f64,
    pub spectral: f64,
    pub walk: f64,
}

impl DimensionReport {
    /// `2 d_h / d_w`, which must reproduce the spectral dimension.
    pub fn einstein_spectral(&self) -> f64 {
        2.0 * self.hausdorff / self.walk
    }
}

/// `ln r` for constant and periodic sequences.
pub fn log_ratio(seq: &JSequence) -> Result<f64> {
    let p = seq.period().ok_or(Error::UndefinedRatio)?;
    let ln_product: f64 = seq.values().iter().map(|&j| (j as f64).ln()).sum();
    Ok(ln_product / p as f64)
}

pub fn dimensions(seq: &JSequence) -> Result<DimensionReport> {
    let ln_r = log_ratio(seq)?;
    let r = ln_r.exp();
    let ln2 = std::f64::consts::LN_2;
    Ok(DimensionReport {
        r,
        hausdorff: 1.0 + ln2 / ln_r,
        spectral: (ln2 + ln_r) / ln_r,
        walk: 2.0,
    })
}

/// `log(2^n I_n) / log(I_n)`, the finite-`n` Hausdorff dimension estimate.
pub fn hausdorff_estimate(seq: &JSequence, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::validation("the estimate needs n >= 1"));
    }
    let ln_scale = big_ln(&seq.scale(n)?);
    Ok((n as f64 * std::f64::consts::LN_2 + ln_scale) / ln_scale)
}

/// Lossy conversion; saturates to `f64::INFINITY` beyond the f64 range.
pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Natural log of an arbitrarily large integer.
pub fn big_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return big_to_f64(x).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn parses_the_three_kinds() {
        let c = JSequence::parse("2").unwrap();
        assert_eq!(c.kind(), SequenceKind::Constant);
        assert_eq!(c.j(1000).unwrap(), 2);

        let p = JSequence::parse("2,3").unwrap();
        assert_eq!(p.kind(), SequenceKind::Periodic);
        let js: Vec<u32> = (1..=5).map(|n| p.j(n).unwrap()).collect();
        assert_eq!(js, vec![2, 3, 2, 3, 2]);

        let e = JSequence::parse("seq:2,3,2").unwrap();
        assert_eq!(e.len(), Some(3));
        assert_eq!(e.j(3).unwrap(), 2);
        assert!(matches!(e.j(4), Err(Error::BeyondPrefix { level: 4, len: 3 })));
    }

    #[test]
    fn rejects_small_and_malformed_entries() {
        let err = JSequence::parse("seq:2,1").unwrap_err();
        assert!(err.to_string().contains("entry 2 is 1"), "{err}");
        assert!(JSequence::parse("0").is_err());
        assert!(JSequence::parse("2,x").is_err());
        assert!(JSequence::parse("").is_err());
        assert!(JSequence::parse("seq:").is_err());
        assert!(JSequence::parse("-3").is_err());
    }

    #[test]
    fn periodic_patterns_reduce_to_minimal_period() {
        assert_eq!(JSequence::parse("2,2").unwrap(), JSequence::constant(2).unwrap());
        let p = JSequence::parse("2,3,2,3").unwrap();
        assert_eq!(p.values(), &[2, 3]);
        assert_eq!(p.to_string(), "2,3");
        assert_eq!(JSequence::parse("seq:2,2").unwrap().to_string(), "seq:2,2");
    }

    #[test]
    fn level_zero_is_the_unit_interval() {
        let info = level_info(&JSequence::parse("2,3").unwrap(), 0).unwrap();
        assert_eq!((info.scale, info.cells, info.nodes), (big(1), big(1), big(2)));
    }

    #[test]
    fn level_one_for_constant_two() {
        let info = level_info(&JSequence::constant(2).unwrap(), 1).unwrap();
        assert_eq!((info.scale.clone(), info.cells.clone(), info.nodes.clone()), (big(2), big(4), big(5)));
        assert_relative_eq!(info.cell_length(), 0.5);
    }

    #[test]
    fn alternating_scale_matches_closed_form() {
        // I_{2k-1} = 2 * 6^{k-1}
        let seq = JSequence::parse("2,3").unwrap();
        assert_eq!(seq.scale(3).unwrap(), big(12));
        for k in 1..10u32 {
            assert_eq!(seq.scale(2 * k as usize - 1).unwrap(), big(2) * big(6).pow(k - 1));
            assert_eq!(seq.scale(2 * k as usize).unwrap(), big(6).pow(k));
        }
    }

    #[test]
    fn scales_do_not_overflow() {
        let seq = JSequence::constant(3).unwrap();
        let i60 = seq.scale(60).unwrap();
        assert_eq!(i60, big(3).pow(60u32));
        assert!(i60 > BigUint::from(u64::MAX));
    }

    #[test]
    fn shape_census_examples() {
        let c2 = shape_census(&JSequence::constant(2).unwrap(), 1).unwrap();
        assert_eq!((c2.v_count, c2.loop_count, c2.cross_count), (big(2), big(0), big(0)));

        let alt = shape_census(&JSequence::parse("2,3").unwrap(), 2).unwrap();
        assert_eq!((alt.v_count, alt.loop_count, alt.cross_count), (big(4), big(4), big(1)));

        let c3 = shape_census(&JSequence::constant(3).unwrap(), 1).unwrap();
        assert_eq!((c3.v_count, c3.loop_count, c3.cross_count), (big(2), big(1), big(0)));

        assert!(shape_census(&JSequence::constant(2).unwrap(), 0).is_err());
        assert!(shape_census(&JSequence::parse("seq:2,3").unwrap(), 3).is_err());
    }

    #[test]
    fn dimension_examples() {
        let d2 = dimensions(&JSequence::constant(2).unwrap()).unwrap();
        assert_relative_eq!(d2.r, 2.0, max_relative = 1e-15);
        assert_relative_eq!(d2.hausdorff, 2.0, max_relative = 1e-15);
        assert_relative_eq!(d2.spectral, 2.0, max_relative = 1e-15);
        assert_eq!(d2.walk, 2.0);

        let alt = dimensions(&JSequence::parse("2,3").unwrap()).unwrap();
        let expected = 24f64.ln() / 6f64.ln();
        assert_relative_eq!(alt.r, 6f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(alt.hausdorff, expected, max_relative = 1e-15);
        assert_relative_eq!(alt.spectral, expected, max_relative = 1e-15);
        assert!((alt.hausdorff - 1.7737).abs() < 1e-4);

        let d3 = dimensions(&JSequence::constant(3).unwrap()).unwrap();
        assert_relative_eq!(d3.hausdorff, 6f64.ln() / 3f64.ln(), max_relative = 1e-15);
        assert!((d3.hausdorff - 1.6309).abs() < 1e-4);

        assert_eq!(dimensions(&JSequence::parse("seq:2,3").unwrap()), Err(Error::UndefinedRatio));
    }

    #[test]
    fn big_ln_is_accurate_for_huge_values() {
        let x = BigUint::from(3u32).pow(5000u32);
        assert_relative_eq!(big_ln(&x), 5000.0 * 3f64.ln(), max_relative = 1e-14);
    }
}
