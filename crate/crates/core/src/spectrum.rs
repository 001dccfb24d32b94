//! The exact spectrum of the Laplacian on a Laakso space.
//!
//! Every eigenvalue has the form `λ = m² π² / 4` for a positive integer `m`,
//! so eigenvalues are keyed by `m` and coincidences between shapes and
//! levels are merged by exact integer comparison.
//!
//! | family        | level  | keys `m`            | multiplicity                     |
//! |---------------|--------|---------------------|----------------------------------|
//! | line          | 0      | `2k`, `k >= 0`      | 1                                |
//! | V             | `n>=1` | `(2k+1) I_n`        | `2^n`                            |
//! | loop          | `n>=1` | `2k I_n`, `k >= 1`  | `2^{n-1} (j_n - 2) I_{n-1}`      |
//! | cross (full)  | `n>=2` | `2k I_n`, `k >= 1`  | `2^{n-1} (I_{n-1} - 1)`          |
//! | cross (quarter)| `n>=2`| `k I_n`, `k >= 1`   | `2^{n-2} (I_{n-1} - 1)`          |

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::sequence::{shape_census, JSequence};

/// `m` such that the eigenvalue is `m² π² / 4`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EigenKey(#[serde(with = "crate::bigdec")] pub BigUint);

impl EigenKey {
    pub fn new(m: impl Into<BigUint>) -> Self {
        EigenKey(m.into())
    }

    pub fn value(&self) -> f64 {
        key_value(self.0.to_f64().unwrap_or(f64::INFINITY))
    }

    /// The key of `(k π)²`.
    pub fn from_k_pi(k: u64) -> Self {
        EigenKey(BigUint::from(k) * 2u32)
    }
}

impl fmt::Display for EigenKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn key_value(m: f64) -> f64 {
    let x = m * (PI / 2.0);
    x * x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Line,
    V,
    Loop,
    CrossFull,
    CrossQuarter,
}

impl Shape {
    pub const ALL: [Shape; 5] = [Shape::Line, Shape::V, Shape::Loop, Shape::CrossFull, Shape::CrossQuarter];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Line => "line",
            Shape::V => "v",
            Shape::Loop => "loop",
            Shape::CrossFull => "cross-full",
            Shape::CrossQuarter => "cross-quarter",
        }
    }

    fn check_level(self, n: usize) -> Result<()> {
        let ok = match self {
            Shape::Line => n == 0,
            Shape::V | Shape::Loop => n >= 1,
            Shape::CrossFull | Shape::CrossQuarter => n >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeLevel { shape: self.name(), level: n })
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|sh| sh.name() == s)
            .ok_or_else(|| Error::validation(format!("unknown shape {s:?}")))
    }
}

/// One family term feeding into a spectrum entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contribution {
    pub shape: Shape,
    pub level: usize,
    /// Mode index `k` within the family.
    pub k: u64,
    #[serde(with = "crate::bigdec")]
    pub count: BigUint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub key: EigenKey,
    pub value: f64,
    #[serde(with = "crate::bigdec")]
    pub multiplicity: BigUint,
    pub contributions: Vec<Contribution>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelsIncluded {
    /// Every level carrying an eigenvalue below the cutoff.
    All,
    Cap(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub sequence: JSequence,
    pub lambda_max: f64,
    pub levels_included: LevelsIncluded,
    /// Highest level that contributed at least one eigenvalue.
    pub deepest_level: usize,
    /// Set when an explicit prefix ran out while deeper levels would still
    /// have contributed below the cutoff.
    pub prefix_exhausted: bool,
    pub entries: Vec<SpectrumEntry>,
}

impl SpectrumTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Multiplicities as `u64`; panics only past `u64::MAX`.
    pub fn multiplicities(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.multiplicity.to_u64().expect("multiplicity overflows u64")).collect()
    }

    pub fn get(&self, key: &EigenKey) -> Option<&SpectrumEntry> {
        self.entries.binary_search_by(|e| e.key.cmp(key)).ok().map(|i| &self.entries[i])
    }

    /// Keep only the first `count` distinct eigenvalues.
    pub fn truncate(&mut self, count: usize) {
        self.entries.truncate(count);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum tables always serialize")
    }

    /// `lambda,multiplicity` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,multiplicity\n");
        for e in &self.entries {
            out.push_str(&format!("{},{}\n", e.value, e.multiplicity));
        }
        out
    }

    /// `Σ g_k e^{-λ_k t}` over the table (no tail).
    pub fn heat_sum(&self, t: f64) -> f64 {
        // Summed from the top so that small terms are not swamped.
        self.entries
            .iter()
            .rev()
            .map(|e| e.multiplicity.to_f64().unwrap_or(f64::INFINITY) * (-e.value * t).exp())
            .sum()
    }
}

/// Largest `m` with `m² π² / 4 <= lambda_max`, or `None` when unbounded.
fn key_bound(lambda_max: f64) -> Option<u64> {
    if !lambda_max.is_finite() {
        return None;
    }
    let mut m = (2.0 * lambda_max.max(0.0).sqrt() / PI).floor() as u64;
    while key_value((m + 1) as f64) <= lambda_max {
        m += 1;
    }
    while m > 0 && key_value(m as f64) > lambda_max {
        m -= 1;
    }
    Some(m)
}

fn check_cutoff(lambda_max: f64) -> Result<()> {
    if lambda_max.is_nan() || lambda_max < 0.0 {
        return Err(Error::validation(format!("lambda_max must be >= 0, got {lambda_max}")));
    }
    Ok(())
}

/// Per-shape multiplicity at level `n` (already including the factor two of
/// the full cross family).
fn family_count(shape: Shape, seq: &JSequence, n: usize) -> Result<BigUint> {
    shape.check_level(n)?;
    if shape == Shape::Line {
        return Ok(BigUint::from(1u32));
    }
    let census = shape_census(seq, n)?;
    Ok(match shape {
        Shape::Line => unreachable!(),
        Shape::V => census.v_count,
        Shape::Loop => census.loop_count,
        Shape::CrossFull => census.cross_count << 1,
        Shape::CrossQuarter => census.cross_count,
    })
}

/// Keys of one family as `(k, m)` pairs up to `m_max`.
fn family_keys(shape: Shape, scale: u64, m_max: u64) -> Vec<(u64, u64)> {
    let (start, step, offset): (u64, u64, u64) = match shape {
        // m = 2k, k >= 0
        Shape::Line => (0, 2, 0),
        // m = (2k+1) I
        Shape::V => (0, 2 * scale, scale),
        Shape::Loop | Shape::CrossFull => (1, 2 * scale, 0),
        Shape::CrossQuarter => (1, scale, 0),
    };
    let mut out = Vec::new();
    let mut k = start;
    loop {
        let m = match (k.checked_mul(step)).and_then(|x| x.checked_add(offset)) {
            Some(m) if m <= m_max => m,
            _ => break,
        };
        out.push((k, m));
        k += 1;
    }
    out
}

/// All eigenvalues of one shape family at level `n` up to `lambda_max`, with
/// the family multiplicity.
pub fn shape_spectrum(
    shape: Shape,
    seq: &JSequence,
    n: usize,
    lambda_max: f64,
) -> Result<Vec<(EigenKey, BigUint)>> {
    Ok(family_entries(shape, seq, n, lambda_max)?
        .into_iter()
        .map(|(key, c)| (key, c.count))
        .collect())
}

fn family_entries(shape: Shape, seq: &JSequence, n: usize, lambda_max: f64) -> Result<Vec<(EigenKey, Contribution)>> {
    check_cutoff(lambda_max)?;
    let count = family_count(shape, seq, n)?;
    if count.is_zero() {
        return Ok(Vec::new());
    }
    let m_max = key_bound(lambda_max).ok_or_else(|| {
        Error::validation(format!("family {shape} at level {n} is infinite; give a finite lambda_max"))
    })?;
    let scale = match seq.scale(n)?.to_u64() {
        Some(s) if s <= m_max || shape == Shape::Line => s,
        _ => return Ok(Vec::new()),
    };
    Ok(family_keys(shape, scale, m_max)
        .into_iter()
        .map(|(k, m)| (EigenKey::new(m), Contribution { shape, level: n, k, count: count.clone() }))
        .collect())
}

/// The merged spectrum over every level whose lowest eigenvalue `π² I_n² / 4`
/// is at most `lambda_max`.
pub fn full_spectrum(seq: &JSequence, lambda_max: f64) -> Result<SpectrumTable> {
    full_spectrum_with(seq, lambda_max, Execution::default())
}

pub fn full_spectrum_with(seq: &JSequence, lambda_max: f64, exec: Execution) -> Result<SpectrumTable> {
    build_table(seq, None, lambda_max, exec)
}

/// The spectrum carried by `F_{n_max}`: the line family and levels `1..=n_max`.
pub fn level_spectrum(seq: &JSequence, n_max: usize, lambda_max: f64) -> Result<SpectrumTable> {
    level_spectrum_with(seq, n_max, lambda_max, Execution::default())
}

pub fn level_spectrum_with(seq: &JSequence, n_max: usize, lambda_max: f64, exec: Execution) -> Result<SpectrumTable> {
    seq.check_level(n_max)?;
    build_table(seq, Some(n_max), lambda_max, exec)
}

/// The first `count` distinct eigenvalues of the full spectrum (or of the
/// levels up to `n_max`).
pub fn first_distinct(seq: &JSequence, n_max: Option<usize>, count: usize) -> Result<SpectrumTable> {
    if count == 0 {
        return Err(Error::validation("count must be >= 1"));
    }
    // The line family alone supplies one eigenvalue per (kπ)², so this
    // cutoff always holds enough entries.
    let lambda_max = key_value(2.0 * count as f64);
    let mut table = build_table(seq, n_max, lambda_max, Execution::default())?;
    table.truncate(count);
    if let Some(last) = table.entries.last() {
        table.lambda_max = last.value;
    }
    Ok(table)
}

fn build_table(seq: &JSequence, cap: Option<usize>, lambda_max: f64, exec: Execution) -> Result<SpectrumTable> {
    check_cutoff(lambda_max)?;
    if !lambda_max.is_finite() {
        return Err(Error::validation("lambda_max must be finite"));
    }
    let m_max = key_bound(lambda_max).expect("finite cutoff");

    // Levels whose smallest key I_n fits under the cutoff.
    let mut levels = Vec::new();
    let mut prefix_exhausted = false;
    let mut scale = BigUint::from(1u32);
    let mut n = 1;
    loop {
        if cap.is_some_and(|c| n > c) {
            break;
        }
        if seq.check_level(n).is_err() {
            let next_min = scale.to_u64().map_or(u64::MAX, |s| s.saturating_mul(2));
            prefix_exhausted = next_min <= m_max;
            break;
        }
        scale *= seq.j_unchecked(n);
        match scale.to_u64() {
            Some(s) if s <= m_max => levels.push(n),
            _ => break,
        }
        n += 1;
    }

    let mut jobs = vec![(Shape::Line, 0)];
    for &n in &levels {
        jobs.push((Shape::V, n));
        jobs.push((Shape::Loop, n));
        if n >= 2 {
            jobs.push((Shape::CrossFull, n));
            jobs.push((Shape::CrossQuarter, n));
        }
    }
    let parts = par::map(exec, &jobs, |&(shape, n)| family_entries(shape, seq, n, lambda_max));

    let mut merged: BTreeMap<EigenKey, (BigUint, Vec<Contribution>)> = BTreeMap::new();
    for part in parts {
        for (key, c) in part? {
            let slot = merged.entry(key).or_insert_with(|| (BigUint::zero(), Vec::new()));
            slot.0 += &c.count;
            slot.1.push(c);
        }
    }
    let entries = merged
        .into_iter()
        .map(|(key, (multiplicity, contributions))| SpectrumEntry {
            value: key.value(),
            key,
            multiplicity,
            contributions,
        })
        .collect();
    Ok(SpectrumTable {
        sequence: seq.clone(),
        lambda_max,
        levels_included: cap.map_or(LevelsIncluded::All, LevelsIncluded::Cap),
        deepest_level: levels.last().copied().unwrap_or(0),
        prefix_exhausted,
        entries,
    })
}

/// Number of eigenvalues (with multiplicity) at most `lambda`.
pub fn counting_function(table: &SpectrumTable, lambda: f64) -> Result<BigUint> {
    if lambda > table.lambda_max {
        return Err(Error::OutOfRange { lambda, lambda_max: table.lambda_max });
    }
    Ok(table
        .entries
        .iter()
        .take_while(|e| e.value <= lambda)
        .fold(BigUint::zero(), |acc, e| acc + &e.multiplicity))
}

/// Least-squares slope of `log N(λ)` against `log λ` on a log-spaced grid.
pub fn weyl_slope(table: &SpectrumTable, lambda_lo: f64, lambda_hi: f64, points: usize) -> Result<f64> {
    if !(lambda_lo > 0.0 && lambda_hi > lambda_lo) || points < 2 {
        return Err(Error::validation("need 0 < lambda_lo < lambda_hi and at least two points"));
    }
    let mut xs = Vec::with_capacity(points);
    let mut ys = Vec::with_capacity(points);
    for i in 0..points {
        let lam = lambda_lo * (lambda_hi / lambda_lo).powf(i as f64 / (points - 1) as f64);
        let lam = lam.min(table.lambda_max);
        let n = counting_function(table, lam)?.to_f64().unwrap_or(f64::INFINITY);
        xs.push(lam.ln());
        ys.push(n.ln());
    }
    Ok(least_squares_slope(&xs, &ys))
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pi2(k: f64) -> f64 {
        k * k * PI * PI
    }

    fn as_pairs(v: Vec<(EigenKey, BigUint)>) -> Vec<(u64, u64)> {
        v.into_iter().map(|(k, c)| (k.0.to_u64().unwrap(), c.to_u64().unwrap())).collect()
    }

    #[test]
    fn key_value_is_exact_to_an_ulp() {
        for m in [1u64, 2, 3, 12, 1000, 123_456] {
            let exact = (m as f64 / 2.0).powi(2) * PI * PI;
            let v = EigenKey::new(m).value();
            assert!((v - exact).abs() <= 2.0 * f64::EPSILON * exact, "{m}");
        }
    }

    #[test]
    fn v_family_at_level_one() {
        let seq = JSequence::parse("2,3").unwrap();
        let got = as_pairs(shape_spectrum(Shape::V, &seq, 1, 9.5 * PI * PI).unwrap());
        assert_eq!(got, vec![(2, 2), (6, 2)]);
    }

    #[test]
    fn loops_vanish_for_constant_two() {
        let seq = JSequence::constant(2).unwrap();
        for n in 1..6 {
            assert!(shape_spectrum(Shape::Loop, &seq, n, f64::INFINITY).unwrap().is_empty());
        }
    }

    #[test]
    fn quarter_cross_at_level_two() {
        let seq = JSequence::parse("2,3").unwrap();
        let got = as_pairs(shape_spectrum(Shape::CrossQuarter, &seq, 2, pi2(6.5)).unwrap());
        assert_eq!(got, vec![(6, 1), (12, 1)]);
        let full = as_pairs(shape_spectrum(Shape::CrossFull, &seq, 2, pi2(6.5)).unwrap());
        assert_eq!(full, vec![(12, 2)]);
    }

    #[test]
    fn shape_level_compatibility() {
        let seq = JSequence::constant(2).unwrap();
        assert!(matches!(shape_spectrum(Shape::Line, &seq, 1, 10.0), Err(Error::ShapeLevel { .. })));
        assert!(matches!(shape_spectrum(Shape::V, &seq, 0, 10.0), Err(Error::ShapeLevel { .. })));
        assert!(matches!(shape_spectrum(Shape::CrossFull, &seq, 1, 10.0), Err(Error::ShapeLevel { .. })));
    }

    #[test]
    fn table_one_prefix() {
        let seq = JSequence::parse("2,3").unwrap();
        let table = full_spectrum(&seq, 360.0).unwrap();
        assert_eq!(table.multiplicities(), vec![1, 3, 1, 8, 1, 3, 26]);
        let expected = [0.0, 9.87, 39.48, 88.83, 157.91, 246.74, 355.31];
        for (e, x) in table.entries.iter().zip(expected) {
            assert!((e.value - x).abs() < 0.005, "{} vs {x}", e.value);
        }
    }

    #[test]
    fn table_one_deep_rows() {
        let seq = JSequence::parse("2,3").unwrap();
        let table = full_spectrum(&seq, 3600.0).unwrap();
        assert_eq!(table.get(&EigenKey::from_k_pi(12)).unwrap().multiplicity, BigUint::from(38u32));
        assert_eq!(table.get(&EigenKey::from_k_pi(18)).unwrap().multiplicity, BigUint::from(86u32));
    }

    #[test]
    fn tiny_cutoff_leaves_the_constant_mode() {
        let table = full_spectrum(&JSequence::constant(2).unwrap(), 1.0).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table.entries[0].value, 0.0);
        assert_eq!(table.multiplicities(), vec![1]);
    }

    #[test]
    fn level_one_for_constant_two() {
        let table = level_spectrum(&JSequence::constant(2).unwrap(), 1, pi2(9.5)).unwrap();
        let ks: Vec<u64> = table.entries.iter().map(|e| e.key.0.to_u64().unwrap() / 2).collect();
        assert_eq!(ks, (0..10).collect::<Vec<_>>());
        assert_eq!(table.multiplicities(), vec![1, 3, 1, 3, 1, 3, 1, 3, 1, 3]);
    }

    #[test]
    fn level_zero_is_neumann_interval() {
        let table = level_spectrum(&JSequence::parse("2,3").unwrap(), 0, 100.0).unwrap();
        assert_eq!(table.multiplicities(), vec![1, 1, 1, 1]);
        assert_eq!(table.entries[3].key, EigenKey::from_k_pi(3));
    }

    #[test]
    fn counting_examples() {
        let table = full_spectrum(&JSequence::parse("2,3").unwrap(), 400.0).unwrap();
        assert_eq!(counting_function(&table, 10.0).unwrap(), BigUint::from(4u32));
        assert_eq!(counting_function(&table, 0.0).unwrap(), BigUint::from(1u32));
        assert_eq!(counting_function(&table, 356.0).unwrap(), BigUint::from(43u32));
        assert!(matches!(counting_function(&table, 401.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn explicit_prefix_caps_levels() {
        let explicit = full_spectrum(&JSequence::parse("seq:2,3,2").unwrap(), 4000.0).unwrap();
        let periodic = level_spectrum(&JSequence::parse("2,3").unwrap(), 3, 4000.0).unwrap();
        assert!(explicit.prefix_exhausted);
        assert_eq!(explicit.entries, periodic.entries);
    }

    #[test]
    fn full_cross_is_twice_the_quarter_count() {
        let seq = JSequence::parse("3,2").unwrap();
        for n in 2..6 {
            let q = family_count(Shape::CrossQuarter, &seq, n).unwrap();
            assert_eq!(family_count(Shape::CrossFull, &seq, n).unwrap(), q * 2u32);
        }
    }

    #[test]
    fn sequential_and_parallel_tables_match() {
        let seq = JSequence::parse("2,3").unwrap();
        let a = full_spectrum_with(&seq, 1e6, Execution::Sequential).unwrap();
        let b = full_spectrum_with(&seq, 1e6, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_keys_are_decimal_strings() {
        let table = full_spectrum(&JSequence::parse("2,3").unwrap(), 10.0).unwrap();
        let json: serde_json::Value = serde_json::from_str(&table.to_json()).unwrap();
        assert_eq!(json["entries"][1]["key"], "2");
        assert_eq!(json["entries"][1]["multiplicity"], "3");
        assert_eq!(json["sequence"], "2,3");
        let back: SpectrumTable = serde_json::from_str(&table.to_json()).unwrap();
        assert_eq!(back, table);
        assert!(table.to_csv().starts_with("lambda,multiplicity\n0,1\n"));
    }
}
