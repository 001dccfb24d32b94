//! Reference eigenvalue tables shipped with the crate (`data/*.csv`) and a
//! diff against computed spectra.

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::spectrum::SpectrumTable;

const TABLE1_CSV: &str = include_str!("../data/table1.csv");
const TABLE2_CSV: &str = include_str!("../data/table2.csv");

/// Sequence the first table was computed for.
pub const TABLE1_SEQUENCE: &str = "2,3";
/// Levels of the computed columns of the first table.
pub const TABLE1_LEVELS: [usize; 5] = [3, 4, 5, 6, 7];
/// Sequences of the columns of the second table.
pub const TABLE2_SEQUENCES: [&str; 4] = ["2,3", "3,2", "3,4", "4,3"];

/// A printed number together with the precision it was printed with.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Printed {
    pub text: String,
    pub value: f64,
}

impl Printed {
    fn parse(text: &str) -> Option<Printed> {
        let text = text.trim();
        if text.is_empty() {
            return None;
        }
        Some(Printed { text: text.to_string(), value: text.parse().ok()? })
    }

    /// One unit in the last printed digit.
    pub fn tolerance(&self) -> f64 {
        let decimals = self.text.split_once('.').map_or(0, |(_, frac)| frac.len());
        10f64.powi(-(decimals as i32))
    }

    pub fn matches(&self, x: f64) -> bool {
        // Slack for the binary representation of the printed decimal.
        (x - self.value).abs() <= self.tolerance() * (1.0 + 1e-9)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Row {
    pub k: u32,
    pub expected: Printed,
    pub multiplicity: u64,
    /// Printed values for the levels in [`TABLE1_LEVELS`].
    pub levels: [Option<Printed>; 5],
    /// `(level, recomputed value)` for printed values flagged as typos.
    pub flagged: Vec<(usize, f64)>,
}

impl Table1Row {
    pub fn is_flagged(&self, level: usize) -> bool {
        self.flagged.iter().any(|&(n, _)| n == level)
    }
}

fn data_lines(csv: &str) -> impl Iterator<Item = Vec<&str>> {
    csv.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').collect())
}

pub fn table1() -> Vec<Table1Row> {
    data_lines(TABLE1_CSV)
        .map(|f| {
            let levels = std::array::from_fn(|i| Printed::parse(f[3 + i]));
            let flagged = f[8]
                .split(';')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    let (col, val) = s.split_once('=').expect("flag is column=value");
                    (col.trim_start_matches('n').parse().unwrap(), val.parse().unwrap())
                })
                .collect();
            Table1Row {
                k: f[0].parse().unwrap(),
                expected: Printed::parse(f[1]).unwrap(),
                multiplicity: f[2].parse().unwrap(),
                levels,
                flagged,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Cell {
    /// Kept as printed; one source cell is not a valid number.
    pub lambda_text: String,
    pub lambda: Option<f64>,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table2Row {
    /// The eigenvalue is `(x π)²`.
    pub x: f64,
    /// Cells for [`TABLE2_SEQUENCES`].
    pub cells: [Option<Table2Cell>; 4],
}

pub fn table2() -> Vec<Table2Row> {
    data_lines(TABLE2_CSV)
        .map(|f| {
            let cells = std::array::from_fn(|i| {
                let (lam, m) = (f[1 + 2 * i].trim(), f[2 + 2 * i].trim());
                (!m.is_empty()).then(|| Table2Cell {
                    lambda_text: lam.to_string(),
                    lambda: lam.parse().ok(),
                    multiplicity: m.parse().unwrap(),
                })
            });
            Table2Row { x: f[0].parse().unwrap(), cells }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Diff {
    pub k: u32,
    pub field: &'static str,
    pub expected: String,
    pub got: String,
}

/// Compare the first 20 distinct eigenvalues of `table` against the
/// reference values and multiplicities. An empty result means a match.
pub fn diff_table1(table: &SpectrumTable) -> Vec<Table1Diff> {
    let mut diffs = Vec::new();
    for row in table1() {
        let Some(entry) = table.entries.get(row.k as usize) else {
            diffs.push(Table1Diff {
                k: row.k,
                field: "missing",
                expected: row.expected.text.clone(),
                got: "-".into(),
            });
            continue;
        };
        if !row.expected.matches(entry.value) {
            diffs.push(Table1Diff {
                k: row.k,
                field: "lambda",
                expected: row.expected.text.clone(),
                got: format!("{:.4}", entry.value),
            });
        }
        let m = entry.multiplicity.to_u64();
        if m != Some(row.multiplicity) {
            diffs.push(Table1Diff {
                k: row.k,
                field: "multiplicity",
                expected: row.multiplicity.to_string(),
                got: entry.multiplicity.to_string(),
            });
        }
    }
    diffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table1_parses() {
        let rows = table1();
        assert_eq!(rows.len(), 20);
        assert_eq!(rows[18].multiplicity, 86);
        assert_eq!(rows[6].levels[0].as_ref().unwrap().value, 288.0);
        assert!(rows[10].levels[0].is_none());
        assert!(rows[2].is_flagged(3));
        assert_eq!(rows[7].flagged, vec![(4, 468.7579)]);
    }

    #[test]
    fn printed_tolerance() {
        let p = Printed::parse("1668.0").unwrap();
        assert_eq!(p.tolerance(), 0.1);
        assert!(p.matches(1667.946));
        assert!(!Printed::parse("355.31").unwrap().matches(355.2));
        assert_eq!(Printed::parse("144").unwrap().tolerance(), 1.0);
    }

    #[test]
    fn table2_parses() {
        let rows = table2();
        assert_eq!(rows.len(), 25);
        let odd = rows.iter().find(|r| r.x == 4.5).unwrap();
        let b = odd.cells[1].as_ref().unwrap();
        assert_eq!((b.lambda_text.as_str(), b.lambda), ("199.85.3", None));
        assert!(odd.cells[0].is_none());
    }
}
