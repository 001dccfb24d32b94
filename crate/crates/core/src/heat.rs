//! Heat-kernel trace, spectral zeta function, complex dimensions and the
//! small-time expansion of the trace.
//!
//! With `ζ_L(s) = Σ g_k λ_k^{-s}` over the nonzero eigenvalues, the spectrum
//! gives
//!
//! ```text
//! ζ_L(s) = ζ_R(2s) π^{-2s} [1 + Σ_{n>=1} c_n(s) I_n^{-2s}]
//! c_n(s) = 2^n (4^s - 1) + 2^{n-1}(j_n - 2) I_{n-1}
//!          + [n >= 2] (I_{n-1} - 1)(2^{n-1} + 2^{n-2} 4^s)
//! ```
//!
//! For a periodic sequence with period `p` and pattern product `P` the
//! level sum splits into two geometric series per residue class of `n`,
//! with ratios `ρ_lin = 2^p P / P^{2s}` and `ρ_free = 2^p / P^{2s}`. Their
//! poles, together with `s = 1/2` from `ζ_R(2s)` and `s = 0` from `Γ(s)`,
//! give the expansion of `Z(t) = Σ g_k e^{-λ_k t}` as `t -> 0`.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::sequence::{big_ln, dimensions, JSequence, SequenceKind};
use crate::special::{gamma, hurwitz_zeta, riemann_zeta};
use crate::spectrum::{LevelsIncluded, SpectrumTable};

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// Heat trace

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatTraceSample {
    pub t: f64,
    pub z: f64,
    /// Upper bound on the omitted part of the sum.
    pub tail_bound: f64,
    /// Deepest level summed exactly.
    pub levels: usize,
}

/// `Σ_{k>=1} e^{-a k²}`.
pub fn theta_integer(a: f64) -> f64 {
    if a >= PI {
        let mut sum = 0.0;
        let mut k = 1.0f64;
        loop {
            let term = (-a * k * k).exp();
            sum += term;
            if term <= 1e-18 * sum || term == 0.0 {
                return sum;
            }
            k += 1.0;
        }
    }
    // Poisson summation: Σ_{k∈Z} e^{-ak²} = sqrt(π/a) Σ_{k∈Z} e^{-π²k²/a}
    let b = PI * PI / a;
    let mut dual = 0.0;
    let mut k = 1.0f64;
    loop {
        let term = (-b * k * k).exp();
        dual += term;
        if term <= 1e-18 || k > 50.0 {
            break;
        }
        k += 1.0;
    }
    ((PI / a).sqrt() * (1.0 + 2.0 * dual) - 1.0) / 2.0
}

/// `Σ_{k>=0} e^{-a (k + 1/2)²}`.
pub fn theta_half(a: f64) -> f64 {
    if a >= PI {
        let mut sum = 0.0;
        let mut k = 0.5f64;
        loop {
            let term = (-a * k * k).exp();
            sum += term;
            if term <= 1e-18 * sum || term == 0.0 {
                return sum;
            }
            k += 1.0;
        }
    }
    // Σ_{k∈Z} e^{-a(k+1/2)²} = sqrt(π/a) Σ_{k∈Z} (-1)^k e^{-π²k²/a}
    let b = PI * PI / a;
    let mut dual = 0.0;
    let mut k = 1.0f64;
    let mut sign = -1.0;
    loop {
        let term = (-b * k * k).exp();
        dual += sign * term;
        if term <= 1e-18 || k > 50.0 {
            break;
        }
        sign = -sign;
        k += 1.0;
    }
    0.5 * (PI / a).sqrt() * (1.0 + 2.0 * dual)
}

/// Exact per-level data as floats.
#[derive(Clone, Copy, Debug)]
struct Level {
    scale: f64,
    v: f64,
    loops: f64,
    crosses: f64,
}

fn level_data(seq: &JSequence, n: usize, prev_scale: f64) -> Level {
    let j = seq.j_unchecked(n) as f64;
    let p2 = 2f64.powi(n as i32 - 1);
    Level {
        scale: prev_scale * j,
        v: 2.0 * p2,
        loops: p2 * (j - 2.0) * prev_scale,
        crosses: if n >= 2 { p2 / 2.0 * (prev_scale - 1.0) } else { 0.0 },
    }
}

/// Sum of `e^{-λt}` over every family of one level.
fn level_heat(l: &Level, t: f64) -> f64 {
    let a = PI * PI * t * l.scale * l.scale;
    l.v * theta_half(a) + (l.loops + 2.0 * l.crosses) * theta_integer(a) + l.crosses * theta_integer(a / 4.0)
}

/// Bound on the whole of level `n`: every family starts at or above
/// `π² I_n² / 4` and the total multiplicity per mode index is below
/// `2^{n+1} I_n`.
fn level_bound(n: usize, scale: f64, t: f64) -> f64 {
    let a = PI * PI * t * scale * scale;
    let count = 2f64.powi(n as i32 + 1) * scale;
    count * (-a / 4.0).exp() / -(-0.75 * a).exp_m1()
}

/// Geometric domination: from level `n` on the bounds shrink at least by
/// half per level once `2 j_max e^{-3π² t I_n² / 4} <= 1/2`.
fn dominated(seq: &JSequence, scale: f64, t: f64) -> bool {
    let a = PI * PI * t * scale * scale;
    2.0 * seq.max_j() as f64 * (-0.75 * a).exp() <= 0.5
}

pub fn heat_trace(seq: &JSequence, t: f64, tol: f64) -> Result<HeatTraceSample> {
    heat_trace_capped(seq, t, tol, None)
}

/// Heat trace summing levels up to `level_cap` exactly; omitted levels
/// must fit in `tol`.
pub fn heat_trace_capped(seq: &JSequence, t: f64, tol: f64, level_cap: Option<usize>) -> Result<HeatTraceSample> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::validation(format!("t must be positive and finite, got {t}")));
    }
    if !(tol > 0.0) {
        return Err(Error::validation("tolerance must be positive"));
    }
    let exists = seq.len().unwrap_or(usize::MAX);
    let cap = level_cap.unwrap_or(usize::MAX).min(exists);

    // Small terms first.
    let mut terms = vec![1.0, theta_integer(PI * PI * t)];
    let mut scale = 1.0;
    let mut n = 1;
    let mut levels = 0;
    let tail_bound = loop {
        if n > exists {
            break 0.0;
        }
        let l = level_data(seq, n, scale);
        if n > cap {
            break tail_from(seq, n, scale, t, exists);
        }
        if dominated(seq, l.scale, t) && 2.0 * level_bound(n, l.scale, t) <= 0.5 * tol {
            break 2.0 * level_bound(n, l.scale, t);
        }
        terms.push(level_heat(&l, t));
        levels = n;
        scale = l.scale;
        n += 1;
        if n > 4096 {
            return Err(Error::Numerical("heat trace level sum did not terminate".into()));
        }
    };
    if tail_bound > tol {
        return Err(Error::Tolerance { achieved: tail_bound, tol, level_cap: cap });
    }
    let z = terms.iter().rev().sum();
    Ok(HeatTraceSample { t, z, tail_bound, levels })
}

/// Bound on levels `n..=exists`, `prev_scale = I_{n-1}`.
fn tail_from(seq: &JSequence, mut n: usize, mut prev_scale: f64, t: f64, exists: usize) -> f64 {
    let mut total = 0.0;
    while n <= exists {
        let scale = prev_scale * seq.j_unchecked(n) as f64;
        let b = level_bound(n, scale, t);
        if dominated(seq, scale, t) {
            return total + 2.0 * b;
        }
        total += b;
        prev_scale = scale;
        n += 1;
    }
    total
}

pub fn heat_trace_grid(seq: &JSequence, ts: &[f64], tol: f64, exec: Execution) -> Result<Vec<HeatTraceSample>> {
    par::map(exec, ts, |&t| heat_trace(seq, t, tol)).into_iter().collect()
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    if !(a > 0.0 && b > a) || n < 2 {
        return Err(Error::validation(format!("need 0 < a < b and n >= 2, got {a}:{b}:{n}")));
    }
    let (la, lb) = (a.ln(), b.ln());
    Ok((0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect())
}

// ---------------------------------------------------------------------------
// Spectral zeta function, closed form

/// One period of a periodic sequence, as the level-sum needs it.
struct Periodic {
    p: usize,
    ln_p: f64,
    /// `I_q`, `I_{q-1}` and `j_q` for `q = 2..=p+1`.
    classes: Vec<(f64, f64, f64)>,
    j1: f64,
    /// All entries equal 2: the `ρ_free` poles are removable.
    all_two: bool,
}

impl Periodic {
    fn new(seq: &JSequence) -> Result<Periodic> {
        let p = seq.period().ok_or(Error::UndefinedRatio)?;
        let scales = seq.scales(p + 1)?;
        let ln = |i: usize| big_ln(&scales[i]);
        let classes = (2..=p + 1).map(|q| (ln(q), ln(q - 1), seq.j_unchecked(q) as f64)).collect();
        Ok(Periodic {
            p,
            ln_p: seq.values().iter().map(|&j| (j as f64).ln()).sum(),
            classes,
            j1: seq.j_unchecked(1) as f64,
            all_two: seq.values().iter().all(|&j| j == 2),
        })
    }

    fn rho_lin(&self, s: C) -> C {
        (c(self.p as f64 * LN_2 + self.ln_p) - 2.0 * s * self.ln_p).exp()
    }

    fn rho_free(&self, s: C) -> C {
        (c(self.p as f64 * LN_2) - 2.0 * s * self.ln_p).exp()
    }

    /// `Σ_q lin_q(s)`, the numerators over `1 - ρ_lin`.
    fn lin_sum(&self, s: C) -> C {
        let four_s = (s * 4f64.ln()).exp();
        self.classes
            .iter()
            .enumerate()
            .map(|(i, &(ln_iq, ln_prev, jq))| {
                let q = i + 2;
                (c((q as f64 - 1.0) * LN_2 + ln_prev) - 2.0 * s * ln_iq).exp() * (jq - 1.0 + four_s / 2.0)
            })
            .sum()
    }

    /// `Σ_q free_q(s)`, the numerators over `1 - ρ_free`.
    fn free_sum(&self, s: C) -> C {
        let four_s = (s * 4f64.ln()).exp();
        let b = four_s * 0.75 - 1.5;
        self.classes
            .iter()
            .enumerate()
            .map(|(i, &(ln_iq, _, _))| (c((i + 2) as f64 * LN_2) - 2.0 * s * ln_iq).exp() * b)
            .sum()
    }

    /// `Σ_q free_q(s) / (1 - ρ_free(s))` for sequences of twos, written
    /// without the removable singularity: with `u = 4^s / 2` the ratio is
    /// `(3/2) u^p / (1 + u + ... + u^{p-1})` per class.
    fn free_term_twos(&self, s: C) -> C {
        let u = (s * 4f64.ln()).exp() / 2.0;
        let mut geom = C::new(0.0, 0.0);
        let mut pow = c(1.0);
        for _ in 0..self.p {
            geom += pow;
            pow *= u;
        }
        let factor = 1.5 * pow / geom;
        self.classes
            .iter()
            .enumerate()
            .map(|(i, &(ln_iq, _, _))| (c((i + 2) as f64 * LN_2) - 2.0 * s * ln_iq).exp() * factor)
            .sum()
    }

    fn first_level(&self, s: C) -> C {
        // (2^{2s+1} - 4 + j_1) j_1^{-2s}
        (((s * 2.0 + 1.0) * LN_2).exp() + (self.j1 - 4.0)) * (-2.0 * s * self.j1.ln()).exp()
    }

    fn lin_pole(&self, m: i64) -> C {
        C::new(
            (self.p as f64 * LN_2 + self.ln_p) / (2.0 * self.ln_p),
            PI * m as f64 / self.ln_p,
        )
    }

    fn free_pole(&self, m: i64) -> C {
        C::new(self.p as f64 * LN_2 / (2.0 * self.ln_p), PI * m as f64 / self.ln_p)
    }

    fn nearest(&self, s: C, pole: impl Fn(i64) -> C) -> C {
        let m = (s.im * self.ln_p / PI).round() as i64;
        pole(m)
    }

    fn bracket(&self, s: C) -> Result<C> {
        let d_lin = 1.0 - self.rho_lin(s);
        if d_lin.norm() < 1e-12 {
            return Err(Error::Pole { s, nearest: self.nearest(s, |m| self.lin_pole(m)) });
        }
        let free = if self.all_two {
            self.free_term_twos(s)
        } else {
            let d_free = 1.0 - self.rho_free(s);
            if d_free.norm() < 1e-12 {
                return Err(Error::Pole { s, nearest: self.nearest(s, |m| self.free_pole(m)) });
            }
            self.free_sum(s) / d_free
        };
        Ok(1.0 + self.first_level(s) + self.lin_sum(s) / d_lin + free)
    }
}

/// `1 + Σ_n c_n(s) I_n^{-2s}` summed level by level (explicit prefixes).
fn bracket_explicit(seq: &JSequence, s: C) -> Result<C> {
    let len = seq.len().expect("explicit sequence");
    let scales = seq.scales(len)?;
    let four_s = (s * 4f64.ln()).exp();
    let mut total = c(1.0);
    for n in 1..=len {
        let prev = scales[n - 1].to_f64().unwrap();
        let j = seq.j_unchecked(n) as f64;
        let p2 = 2f64.powi(n as i32 - 1);
        let mut cn = 2.0 * p2 * (four_s - 1.0) + p2 * (j - 2.0) * prev;
        if n >= 2 {
            cn += (prev - 1.0) * (p2 + p2 / 2.0 * four_s);
        }
        total += cn * (-2.0 * s * big_ln(&scales[n])).exp();
    }
    Ok(total)
}

fn bracket(seq: &JSequence, s: C) -> Result<C> {
    match seq.kind() {
        SequenceKind::Explicit => bracket_explicit(seq, s),
        _ => Periodic::new(seq)?.bracket(s),
    }
}

/// `ζ_L(s)` from the closed form, continued meromorphically to all `s`
/// (so `ζ_L(0)` is available). Explicit prefixes are summed over their
/// finitely many levels.
pub fn spectral_zeta_closed(seq: &JSequence, s: C) -> Result<C> {
    if (s - 0.5).norm() < 1e-12 {
        return Err(Error::Pole { s, nearest: c(0.5) });
    }
    let b = bracket(seq, s)?;
    Ok(riemann_zeta(2.0 * s)? * (-2.0 * s * PI.ln()).exp() * b)
}

// ---------------------------------------------------------------------------
// Spectral zeta function, direct sum

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaDirect {
    pub value: C,
    /// Magnitude of the analytic correction added for eigenvalues beyond
    /// the table cutoff.
    pub tail: f64,
    /// Rough bound on the levels that were not summed.
    pub remainder_bound: f64,
}

/// `Σ g_k λ_k^{-s}` over the table, plus the exact remainder of every
/// family beyond the table cutoff (Hurwitz zeta tails) and of every level
/// too deep to appear in the table.
pub fn spectral_zeta_direct(table: &SpectrumTable, s: C) -> Result<ZetaDirect> {
    let seq = &table.sequence;
    let cap = match table.levels_included {
        LevelsIncluded::All => seq.len(),
        LevelsIncluded::Cap(n) => Some(n),
    };
    let abscissa = match cap {
        Some(_) => 0.5,
        None => dimensions(seq)?.spectral / 2.0,
    };
    if s.re <= abscissa {
        return Err(Error::Divergent { re: s.re, abscissa });
    }
    let ln_half_pi = (PI / 2.0).ln();
    // λ^{-s} with λ = (m π / 2)²
    let key_pow = |m: f64| (-2.0 * s * (m.ln() + ln_half_pi)).exp();

    let mut sum = C::new(0.0, 0.0);
    for e in table.entries.iter().rev() {
        let m = e.key.0.to_f64().unwrap();
        if m > 0.0 {
            sum += key_pow(m) * e.multiplicity.to_f64().unwrap();
        }
    }

    let m_max = table.entries.last().map_or(0.0, |e| e.key.0.to_f64().unwrap());
    let m_cut = m_max.max((2.0 * table.lambda_max.sqrt() / PI).floor());
    let two_s = 2.0 * s;
    let zeta2s = hurwitz_zeta(two_s, 1.0)?;
    let pow = |x: f64| (-two_s * x.ln()).exp(); // x^{-2s}

    // Line family: m = 2k, λ = (kπ)².
    let k_line = (m_cut / 2.0).floor();
    let mut tail = pow(PI) * hurwitz_zeta(two_s, k_line + 1.0)?;

    let levels_in_table = table.deepest_level;
    let mut prev = 1.0;
    for n in 1..=levels_in_table {
        let l = level_data(seq, n, prev);
        let i = l.scale;
        // V: m = (2k+1) I, λ = ((k + 1/2) π I)²
        let kv = ((m_cut / i - 1.0) / 2.0).floor();
        tail += l.v * pow(PI * i) * hurwitz_zeta(two_s, kv + 1.5)?;
        // loop and full cross: m = 2k I, λ = (k π I)²
        let kl = (m_cut / (2.0 * i)).floor();
        tail += (l.loops + 2.0 * l.crosses) * pow(PI * i) * hurwitz_zeta(two_s, kl + 1.0)?;
        // quarter cross: m = k I, λ = (k π I / 2)²
        let kq = (m_cut / i).floor();
        tail += l.crosses * pow(PI * i / 2.0) * hurwitz_zeta(two_s, kq + 1.0)?;
        prev = l.scale;
    }

    // Levels deeper than the table: whole families.
    let four_s = (two_s * LN_2).exp();
    let last = cap.unwrap_or(usize::MAX);
    let mut n = levels_in_table + 1;
    let mut remainder_bound = 0.0;
    let mut small_run = 0;
    while n <= last {
        let l = level_data(seq, n, prev);
        let base = pow(PI * l.scale) * zeta2s;
        let term = base * (l.v * (four_s - 1.0) + l.loops + 2.0 * l.crosses + l.crosses * four_s);
        tail += term;
        prev = l.scale;
        n += 1;
        if term.norm() <= 1e-18 * (sum + tail).norm() {
            small_run += 1;
            if small_run >= 2 * seq.values().len() + 2 {
                remainder_bound = term.norm() * 4.0;
                break;
            }
        } else {
            small_run = 0;
        }
        if n > 100_000 {
            return Err(Error::Numerical("direct zeta level sum did not settle".into()));
        }
    }
    Ok(ZetaDirect { value: sum + tail, tail: tail.norm(), remainder_bound })
}

// ---------------------------------------------------------------------------
// Complex dimensions

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleLattice {
    pub real_part: f64,
    /// Distance between consecutive poles along the imaginary axis.
    pub spacing: f64,
    /// `(m, s_m)`.
    pub members: Vec<(i64, C)>,
}

impl PoleLattice {
    /// Period in `log t` of the oscillation the lattice induces, `2π / spacing`.
    pub fn log_period(&self) -> f64 {
        2.0 * PI / self.spacing
    }
}

fn check_range(m_lo: i64, m_hi: i64) -> Result<()> {
    if m_lo > m_hi {
        return Err(Error::validation(format!("empty pole range {m_lo}:{m_hi}")));
    }
    Ok(())
}

/// The poles of `ζ_L` with the largest real part, `d_s / 2 + i m π / ln P`,
/// where `P` is the product over one period.
pub fn poles(seq: &JSequence, m_lo: i64, m_hi: i64) -> Result<PoleLattice> {
    check_range(m_lo, m_hi)?;
    let per = Periodic::new(seq)?;
    let real_part = dimensions(seq)?.spectral / 2.0;
    let spacing = PI / per.ln_p;
    Ok(PoleLattice {
        real_part,
        spacing,
        members: (m_lo..=m_hi).map(|m| (m, C::new(real_part, spacing * m as f64))).collect(),
    })
}

/// The second lattice at real part `p ln 2 / (2 ln P)`; absent for
/// sequences of twos, where its residues vanish.
pub fn secondary_poles(seq: &JSequence, m_lo: i64, m_hi: i64) -> Result<Option<PoleLattice>> {
    check_range(m_lo, m_hi)?;
    let per = Periodic::new(seq)?;
    if per.all_two {
        return Ok(None);
    }
    let spacing = PI / per.ln_p;
    Ok(Some(PoleLattice {
        real_part: per.free_pole(0).re,
        spacing,
        members: (m_lo..=m_hi).map(|m| (m, per.free_pole(m))).collect(),
    }))
}

/// Period in `log t` of the leading oscillation, `2 ln P`.
pub fn log_period(seq: &JSequence) -> Result<f64> {
    Ok(poles(seq, 0, 0)?.log_period())
}

// ---------------------------------------------------------------------------
// Small-time expansion

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeResidues {
    pub real_part: f64,
    pub spacing: f64,
    /// `(m, s_m, r_m)` for `m >= 0`; the term is `r_m t^{-s_m}` and
    /// `m < 0` contributes the complex conjugate.
    pub terms: Vec<(i64, C, C)>,
}

impl LatticeResidues {
    fn evaluate(&self, t: f64) -> f64 {
        let ln_t = t.ln();
        self.terms
            .iter()
            .map(|&(m, s, r)| {
                let v = (r * (-s * ln_t).exp()).re;
                if m == 0 { v } else { 2.0 * v }
            })
            .sum()
    }
}

/// `Z(t) ≈ constant + half_coeff t^{-1/2} + Σ residues`, up to `O(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueExpansion {
    /// `1 + ζ_L(0)`: the zero mode plus the residue at `s = 0`.
    pub constant: f64,
    /// Coefficient of `t^{-1/2}`, from the pole of `ζ_R(2s)`.
    pub half_coeff: f64,
    pub lattices: Vec<LatticeResidues>,
}

impl ResidueExpansion {
    /// Residues of `Γ(s) ζ_L(s) t^{-s}` with `|m| <= m_terms` on each lattice.
    pub fn new(seq: &JSequence, m_terms: usize) -> Result<ResidueExpansion> {
        let per = Periodic::new(seq)?;
        let zeta_at_zero = spectral_zeta_closed(seq, c(0.0))?;
        let half_coeff = per.bracket(c(0.5))?.re / (2.0 * PI.sqrt());
        let mellin = |s: C| -> Result<C> {
            Ok(gamma(s) * riemann_zeta(2.0 * s)? * (-2.0 * s * PI.ln()).exp() / (2.0 * per.ln_p))
        };
        let m_terms = m_terms as i64;
        let mut lattices = Vec::new();
        let lin = (0..=m_terms)
            .map(|m| {
                let s = per.lin_pole(m);
                Ok((m, s, mellin(s)? * per.lin_sum(s)))
            })
            .collect::<Result<Vec<_>>>()?;
        lattices.push(LatticeResidues { real_part: per.lin_pole(0).re, spacing: PI / per.ln_p, terms: lin });
        if !per.all_two {
            let free = (0..=m_terms)
                .map(|m| {
                    let s = per.free_pole(m);
                    Ok((m, s, mellin(s)? * per.free_sum(s)))
                })
                .collect::<Result<Vec<_>>>()?;
            lattices.push(LatticeResidues { real_part: per.free_pole(0).re, spacing: PI / per.ln_p, terms: free });
        }
        Ok(ResidueExpansion { constant: 1.0 + zeta_at_zero.re, half_coeff, lattices })
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        self.constant
            + self.half_coeff / t.sqrt()
            + self.lattices.iter().map(|l| l.evaluate(t)).sum::<f64>()
    }

    /// The leading term alone (`m = 0` of the dominant lattice).
    pub fn leading(&self, t: f64) -> f64 {
        let (_, s, r) = self.lattices[0].terms[0];
        r.re * t.powf(-s.re)
    }
}

/// `t^{-1/2}` coefficient of `Z(t)` for the constant sequence 2.
pub const J2_HALF_COEFF: f64 = 0.423_142_187_660_817_24; // 3 / (4 sqrt(π))

/// Small-time trace for the constant sequence 2:
/// `1 + ζ_L(0) + 3/(4 sqrt(πt)) + (1/(16 t ln 2)) (1 + Σ_{m=1}^{M} 2 Re(a_m t^{-2πim/ln 4}))`
/// with `a_m = 6 ζ_R(2 + 4πim/ln 4) Γ(1 + 2πim/ln 4) / π^{2 + 4πim/ln 4}`.
///
/// Only meaningful as `t -> 0`.
pub fn leading_term_j2(t: f64, m_terms: usize) -> Result<f64> {
    let seq = JSequence::constant(2)?;
    let constant = 1.0 + spectral_zeta_closed(&seq, c(0.0))?.re;
    let ln4 = 4f64.ln();
    let mut osc = 1.0;
    for m in 1..=m_terms {
        let w = 2.0 * PI * m as f64 / ln4;
        let a = j2_coefficient(m as i64)?;
        osc += 2.0 * (a * C::new(0.0, -w * t.ln()).exp()).re;
    }
    Ok(constant + J2_HALF_COEFF / t.sqrt() + osc / (16.0 * t * LN_2))
}

/// `a_m` of [`leading_term_j2`]; `a_0 = 1`.
pub fn j2_coefficient(m: i64) -> Result<C> {
    let w = 2.0 * PI * m as f64 / 4f64.ln();
    let s2 = C::new(2.0, 2.0 * w);
    Ok(6.0 * riemann_zeta(s2)? * gamma(C::new(1.0, w)) * (-s2 * PI.ln()).exp())
}

/// Small-time trace for the periodic sequence 2,3: the dominant lattice at
/// `1/2 + ln 2/ln 6` with residue
/// `2^{-2s}(2^{4s} + 10·2^{2s} + 12)/(24 ln 6) · Γ(s) ζ_R(2s) / π^{2s}`,
/// the secondary lattice at `ln 2/ln 6` with residue
/// `(3/(8 ln 6))(4^{2s} - 4)/4^s · Γ(s) ζ_R(2s) / π^{2s}`,
/// both with spacing `π / ln 6`, plus `1 + ζ_L(0)` and the `t^{-1/2}` term.
pub fn leading_term_j23(t: f64, m_terms: usize) -> Result<f64> {
    let seq = JSequence::periodic(&[2, 3])?;
    let constant = 1.0 + spectral_zeta_closed(&seq, c(0.0))?.re;
    let half = Periodic::new(&seq)?.bracket(c(0.5))?.re / (2.0 * PI.sqrt());
    let ln6 = 6f64.ln();
    let spacing = PI / ln6;
    let ln_t = t.ln();
    let gz = |s: C| -> Result<C> { Ok(gamma(s) * riemann_zeta(2.0 * s)? * (-2.0 * s * PI.ln()).exp()) };
    let pow2 = |x: C| (x * LN_2).exp();
    let mut total = constant + half / t.sqrt();
    for m in 0..=m_terms as i64 {
        let weight = if m == 0 { 1.0 } else { 2.0 };
        let s = C::new(0.5 + LN_2 / ln6, spacing * m as f64);
        let r = pow2(-2.0 * s) * (pow2(4.0 * s) + 10.0 * pow2(2.0 * s) + 12.0) / (24.0 * ln6) * gz(s)?;
        total += weight * (r * (-s * ln_t).exp()).re;
        let s = C::new(LN_2 / ln6, spacing * m as f64);
        let r = 3.0 / (8.0 * ln6) * (pow2(4.0 * s) - 4.0) / pow2(2.0 * s) * gz(s)?;
        total += weight * (r * (-s * ln_t).exp()).re;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Spectral dimension

/// Mean of the piecewise-linear interpolant of `(xs, ys)` over each window
/// `[x_i, x_i + width]` that fits in the data, as `(window centre, mean)`.
pub fn window_means(xs: &[f64], ys: &[f64], width: f64) -> Vec<(f64, f64)> {
    let n = xs.len();
    let interp = |x: f64| -> f64 {
        let i = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
        let (x0, x1) = (xs[i - 1], xs[i]);
        ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
    };
    let x_max = xs[n - 1];
    let mut out = Vec::new();
    for i in 0..n {
        let (a, b) = (xs[i], xs[i] + width);
        if b > x_max * (1.0 + 1e-15_f64.copysign(x_max)) + 1e-12 {
            break;
        }
        // Trapezoid over the breakpoints inside [a, b].
        let mut pts = vec![(a, ys[i])];
        pts.extend(xs.iter().zip(ys).skip(i + 1).take_while(|(x, _)| **x < b).map(|(x, y)| (*x, *y)));
        pts.push((b, interp(b.min(x_max))));
        let area: f64 = pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum();
        out.push((a + width / 2.0, area / width));
    }
    out
}

/// `-2 ×` the least-squares slope of `ln Z` against `ln t`, after
/// averaging `ln Z` over windows one log-period wide.
pub fn estimate_spectral_dimension(samples: &[HeatTraceSample], log_period: f64) -> Result<f64> {
    if samples.len() < 10 {
        return Err(Error::validation(format!("need at least 10 samples, got {}", samples.len())));
    }
    if !(log_period > 0.0) {
        return Err(Error::validation("log period must be positive"));
    }
    let mut s: Vec<HeatTraceSample> = samples.to_vec();
    s.sort_by(|a, b| a.t.total_cmp(&b.t));
    let xs: Vec<f64> = s.iter().map(|x| x.t.ln()).collect();
    let ys: Vec<f64> = s.iter().map(|x| x.z.ln()).collect();
    let span = xs[xs.len() - 1] - xs[0];
    if span < 2.0 * 10f64.ln() {
        return Err(Error::validation("samples must span at least two decades of t"));
    }
    if let Some(bad) = s.iter().find(|x| !(x.tail_bound / x.z < 1e-6)) {
        return Err(Error::validation(format!("sample at t = {} has relative tail {}", bad.t, bad.tail_bound / bad.z)));
    }
    let means = window_means(&xs, &ys, log_period);
    if means.len() < 3 {
        return Err(Error::validation("samples do not span enough log-periods to average"));
    }
    let (cx, cy): (Vec<f64>, Vec<f64>) = means.into_iter().unzip();
    Ok(-2.0 * crate::spectrum::least_squares_slope(&cx, &cy))
}
