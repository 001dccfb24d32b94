//! Numeric-versus-analytic comparison: discretize `F_n`, solve for the
//! lowest eigenvalues, cluster them and line the clusters up against
//! [`level_spectrum`].

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::eigen::{cluster_values, lowest_eigenvalues_with, Method, SolverOptions};
use crate::error::{Error, Result};
use crate::graph::{build_graph, discretize_with};
use crate::sequence::{level_info, JSequence};
use crate::spectrum::{level_spectrum, level_spectrum_with};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    /// Interior mesh points per edge of `F_n`.
    pub points_per_edge: usize,
    /// Eigenvalues to compute; 0 means every analytic eigenvalue below the
    /// trust cutoff.
    pub k: usize,
    /// Relative gap for [`cluster_values`].
    pub rel_gap: f64,
    /// Allowed relative error between matched values.
    pub value_tol: f64,
    pub solver: SolverOptions,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions { points_per_edge: 16, k: 0, rel_gap: 1e-4, value_tol: 5e-3, solver: SolverOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Match,
    ValueMismatch,
    MultiplicityMismatch,
    /// Analytic eigenvalue below the cutoff with no numeric cluster.
    Missing,
    /// Numeric cluster with no analytic counterpart.
    Spurious,
    /// Above the trust cutoff; reported, not judged.
    Untrusted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub analytic: Option<f64>,
    pub analytic_multiplicity: Option<u64>,
    pub numeric: Option<f64>,
    pub numeric_multiplicity: Option<usize>,
    pub relative_error: Option<f64>,
    /// Largest residual norm inside the numeric cluster.
    pub max_residual: Option<f64>,
    pub status: RowStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub sequence: JSequence,
    pub level: usize,
    pub options: CompareOptions,
    pub h: f64,
    pub dimension: usize,
    pub trust_cutoff: f64,
    /// Eigenvalues asked of the solver (one past the compared ones, to
    /// close the last cluster).
    pub k_solved: usize,
    pub k_converged: usize,
    pub method: Method,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn failures(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| r.status != RowStatus::Match && r.status != RowStatus::Untrusted)
    }

    pub fn multiplicity_mismatches(&self) -> usize {
        self.rows.iter().filter(|r| r.status == RowStatus::MultiplicityMismatch).count()
    }

    pub fn passed(&self) -> bool {
        self.k_converged == self.k_solved && self.failures().next().is_none()
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.10e}"));
        let mut out = String::from("analytic,analytic_multiplicity,numeric,numeric_multiplicity,relative_error,residual,status\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                opt(r.analytic),
                r.analytic_multiplicity.map_or(String::new(), |m| m.to_string()),
                opt(r.numeric),
                r.numeric_multiplicity.map_or(String::new(), |m| m.to_string()),
                opt(r.relative_error),
                opt(r.max_residual),
                serde_json::to_value(r.status).unwrap().as_str().unwrap(),
            ));
        }
        out
    }
}

fn rel_err(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / analytic.abs().max(1.0)
}

pub fn compare(seq: &JSequence, n: usize, opts: &CompareOptions) -> Result<ComparisonReport> {
    if !(opts.rel_gap > 0.0 && opts.rel_gap < 0.5) {
        return Err(Error::validation(format!("rel_gap must lie in (0, 0.5), got {}", opts.rel_gap)));
    }
    if !(opts.value_tol > 0.0) {
        return Err(Error::validation("value tolerance must be positive"));
    }
    let exec = opts.solver.exec;
    let graph = build_graph(seq, n)?;
    let disc = discretize_with(&graph, opts.points_per_edge, exec)?;
    let dim = disc.dimension();
    let cutoff = disc.trust_cutoff();

    let trusted = level_spectrum_with(seq, n, cutoff, exec)?;
    let trusted_count: u64 = trusted.multiplicities().iter().sum();
    let k = if opts.k == 0 { trusted_count as usize } else { opts.k };
    if k == 0 || k >= dim {
        return Err(Error::validation(format!("need 1 <= k < {dim} eigenvalues, got {k}")));
    }
    let k_solved = k + 1;
    let result = if k_solved < dim {
        lowest_eigenvalues_with(&disc.operator, k_solved, &opts.solver)?
    } else {
        // Every eigenvalue: only the dense path can deliver all of them.
        let dense = SolverOptions { method: Method::Dense, ..opts.solver.clone() };
        lowest_eigenvalues_with(&disc.operator, dim - 1, &dense)?
    };

    // Clusters that end before the sentinel value are complete.
    let clusters = cluster_values(&result.values, opts.rel_gap)?.clusters;
    let mut numeric = Vec::new();
    let mut start = 0;
    for c in clusters {
        let end = start + c.multiplicity;
        if end <= k {
            let res = result.residual_norms[start..end].iter().copied().fold(0.0, f64::max);
            numeric.push((c.value, c.multiplicity, res));
        }
        start = end;
    }

    // Analytic values over the range the numeric clusters cover.
    let top = numeric.last().map_or(0.0, |c| c.0) * (1.0 + opts.value_tol) + 1.0;
    let analytic = level_spectrum(seq, n, top.max(cutoff))?;
    let analytic: Vec<(f64, u64)> = analytic
        .entries
        .iter()
        .map(|e| (e.value, e.multiplicity.to_u64().unwrap_or(u64::MAX)))
        .collect();

    let mut rows = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < analytic.len() || j < numeric.len() {
        let a = analytic.get(i).copied();
        let nc = numeric.get(j).copied();
        let row = match (a, nc) {
            (Some((av, am)), Some((nv, nm, res))) if rel_err(nv, av) <= opts.value_tol => {
                i += 1;
                j += 1;
                let status = if av > cutoff {
                    RowStatus::Untrusted
                } else if am != nm as u64 {
                    RowStatus::MultiplicityMismatch
                } else {
                    RowStatus::Match
                };
                ComparisonRow {
                    analytic: Some(av),
                    analytic_multiplicity: Some(am),
                    numeric: Some(nv),
                    numeric_multiplicity: Some(nm),
                    relative_error: Some(rel_err(nv, av)),
                    max_residual: Some(res),
                    status,
                }
            }
            (Some((av, am)), nc) if nc.is_none_or(|(nv, _, _)| av < nv) => {
                i += 1;
                // Past the last cluster only an automatic k promises coverage.
                if nc.is_none() && (av > cutoff || opts.k != 0) {
                    continue;
                }
                ComparisonRow {
                    analytic: Some(av),
                    analytic_multiplicity: Some(am),
                    numeric: None,
                    numeric_multiplicity: None,
                    relative_error: None,
                    max_residual: None,
                    status: if av > cutoff { RowStatus::Untrusted } else { RowStatus::Missing },
                }
            }
            (_, Some((nv, nm, res))) => {
                j += 1;
                ComparisonRow {
                    analytic: None,
                    analytic_multiplicity: None,
                    numeric: Some(nv),
                    numeric_multiplicity: Some(nm),
                    relative_error: None,
                    max_residual: Some(res),
                    status: if nv > cutoff { RowStatus::Untrusted } else { RowStatus::Spurious },
                }
            }
            (_, None) => unreachable!(),
        };
        rows.push(row);
    }

    Ok(ComparisonReport {
        sequence: seq.clone(),
        level: n,
        options: opts.clone(),
        h: disc.h,
        dimension: dim,
        trust_cutoff: cutoff,
        k_solved: result.k_requested,
        k_converged: result.k_converged,
        method: result.method,
        rows,
    })
}

/// Smallest number of interior points per edge for which the trust cutoff
/// of the discretized `F_n` exceeds the `count`-th distinct eigenvalue of
/// `level_spectrum(seq, n)`.
pub fn mesh_for_trusted(seq: &JSequence, n: usize, count: usize) -> Result<usize> {
    if count == 0 {
        return Err(Error::validation("count must be at least 1"));
    }
    let table = crate::spectrum::first_distinct(seq, Some(n), count)?;
    let lambda = table.entries.last().map_or(0.0, |e| e.value);
    let cell = level_info(seq, n)?.cell_length();
    // (0.1 (m + 1) / cell)² > λ
    let m = (10.0 * cell * lambda.sqrt()).floor() as usize;
    Ok(m)
}
