//! Serialization of profiles, solution sets, scans, branches, degree tables,
//! and verification reports. Operates on the `f64` aliases.
//!
//! Numeric CSV columns use `.` decimals with 17 significant digits, which
//! round-trips `f64` exactly; JSON numbers round-trip through serde_json's
//! shortest representation. Index sets appear in CSV as `{1;2}` so the cell
//! needs no quoting.

use crate::classify::{DegreeTable, VerificationReport};
use crate::continuation::Branch;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridProfile, ProfileSource};
use crate::index_set::IndexSet;
use crate::shooting::{ScanPoint, SolutionSet};
use serde::{Deserialize, Serialize};

fn fmt(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn set_cell(s: &IndexSet) -> String {
    let inner: Vec<String> = s.members().iter().map(|i| i.to_string()).collect();
    format!("{{{}}}", inner.join(";"))
}

/// JSON form of a [`GridProfile`]: `{"lambda": .., "N": .., "values": [..]}`
/// with `values` holding all `N + 2` nodes, boundary entries included.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ProfileJson {
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub values: Vec<f64>,
}

pub fn profile_to_json(p: &GridProfile<f64>) -> String {
    let doc = ProfileJson {
        lambda: p.lambda(),
        n: p.grid().n_interior(),
        values: p.values().to_vec(),
    };
    serde_json::to_string(&doc).expect("profile serialization")
}

pub fn profile_from_json(text: &str, length: f64) -> Result<GridProfile<f64>> {
    let doc: ProfileJson = serde_json::from_str(text)
        .map_err(|e| Error::InvalidSpec(format!("profile JSON: {e}")))?;
    if doc.values.len() != doc.n + 2 {
        return Err(Error::InvalidSpec(format!(
            "profile JSON has {} values for N = {}",
            doc.values.len(),
            doc.n
        )));
    }
    let grid = Grid::new(doc.n, length)?;
    GridProfile::new(grid, doc.values, doc.lambda, 0.0, ProfileSource::Newton)
}

/// CSV export of one profile with columns `x,u`.
pub fn profile_to_csv(p: &GridProfile<f64>) -> String {
    let mut out = String::from("x,u\n");
    for (j, &v) in p.values().iter().enumerate() {
        out.push_str(&fmt(p.grid().node(j)));
        out.push(',');
        out.push_str(&fmt(v));
        out.push('\n');
    }
    out
}

/// Scan report CSV: `s,S,blew_up,sup_I1,..,sup_In`.
pub fn scan_to_csv(points: &[ScanPoint<f64>], n_humps: usize) -> String {
    let mut out = String::from("s,S,blew_up");
    for i in 1..=n_humps {
        out.push_str(&format!(",sup_I{i}"));
    }
    out.push('\n');
    for pt in points {
        out.push_str(&fmt(pt.s));
        out.push(',');
        out.push_str(&fmt(pt.terminal));
        out.push(',');
        out.push_str(if pt.blew_up { "1" } else { "0" });
        for &s in &pt.per_interval_sup {
            out.push(',');
            out.push_str(&fmt(s));
        }
        out.push('\n');
    }
    out
}

/// Per-solution manifest entry.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct SolutionManifestEntry {
    pub index_set: Option<Vec<usize>>,
    pub sup_norms: Vec<f64>,
    pub residual: f64,
    pub slope_left: f64,
    pub slope_right: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shooting_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shooting_index: Option<i8>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct SolutionManifest {
    pub lambda: f64,
    pub count: usize,
    pub solutions: Vec<SolutionManifestEntry>,
    pub warnings: Vec<String>,
}

pub fn solution_manifest(set: &SolutionSet<f64>) -> SolutionManifest {
    SolutionManifest {
        lambda: set.lambda,
        count: set.entries.len(),
        solutions: set
            .entries
            .iter()
            .map(|e| SolutionManifestEntry {
                index_set: e.index_set.as_ref().map(|s| s.members().to_vec()),
                sup_norms: e.per_interval_sup.clone(),
                residual: e.profile.residual_norm(),
                slope_left: e.slope_left,
                slope_right: e.slope_right,
                shooting_slope: e.shooting_slope,
                shooting_index: e.shooting_index,
            })
            .collect(),
        warnings: set.warnings.clone(),
    }
}

/// Branch CSV for plotting: `lambda,sup_norm,fold_flag`.
pub fn branch_to_csv(branch: &Branch<f64>) -> String {
    let mut out = String::from("lambda,sup_norm,fold_flag\n");
    for (k, pt) in branch.points.iter().enumerate() {
        let is_fold = branch.fold.as_ref().is_some_and(|f| f.index == k);
        out.push_str(&fmt(pt.lambda));
        out.push(',');
        out.push_str(&fmt(pt.amplitude));
        out.push(',');
        out.push_str(if is_fold { "1" } else { "0" });
        out.push('\n');
    }
    out
}

/// Degree table CSV: `index_set,degree` for the boxes, then the unions.
pub fn degree_table_to_csv(table: &DegreeTable<f64>) -> String {
    let mut out = String::from("family,index_set,degree\n");
    for (s, d) in &table.boxes {
        out.push_str(&format!("box,{},{d}\n", set_cell(s)));
    }
    for (s, d) in &table.unions {
        out.push_str(&format!("union,{},{d}\n", set_cell(s)));
    }
    out
}

/// Verification summary CSV: `check,lambda,pass,margin`.
pub fn reports_summary_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from("check,lambda,pass,margin\n");
    for r in reports {
        let lam = r.lambda_grid.first().copied().unwrap_or(f64::NAN);
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.check,
            fmt(lam),
            if r.passed() { "1" } else { "0" },
            r.min_margin.map(fmt).unwrap_or_else(|| "".into()),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn profile_json_round_trips() {
        let grid = Grid::new(5, 1.0).unwrap();
        let p = GridProfile::new(
            grid,
            vec![0.0, 0.5, 1.25e-3, 3.0, 0.1, -0.25, 0.0],
            -80.0,
            0.0,
            ProfileSource::Newton,
        )
        .unwrap();
        let text = profile_to_json(&p);
        let q = profile_from_json(&text, 1.0).unwrap();
        assert_eq!(p.values(), q.values());
        assert_eq!(p.lambda(), q.lambda());
        // byte-stable re-serialization
        assert_eq!(text, profile_to_json(&q));
    }

    #[test]
    fn csv_has_17_significant_digits() {
        let grid = Grid::new(3, 1.0).unwrap();
        let p = GridProfile::new(
            grid,
            vec![0.0, std::f64::consts::PI, 2.0 / 3.0, 0.1, 0.0],
            -1.0,
            0.0,
            ProfileSource::Newton,
        )
        .unwrap();
        let csv = profile_to_csv(&p);
        let line = csv.lines().nth(2).unwrap();
        let u: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(u, std::f64::consts::PI);
    }

    proptest! {
        #[test]
        fn profile_values_round_trip_exactly(
            vals in proptest::collection::vec(-1e6f64..1e6, 3..40),
            lambda in -400.0f64..-0.1,
        ) {
            let n = vals.len();
            let grid = Grid::new(n, 1.0).unwrap();
            let mut values = vec![0.0];
            values.extend(vals);
            values.push(0.0);
            let p = GridProfile::new(grid, values, lambda, 0.0, ProfileSource::Shooting).unwrap();
            let q = profile_from_json(&profile_to_json(&p), 1.0).unwrap();
            prop_assert_eq!(p.values(), q.values());
            prop_assert_eq!(p.lambda(), q.lambda());
            // CSV cells parse back to the exact doubles
            let csv = profile_to_csv(&p);
            for (j, line) in csv.lines().skip(1).enumerate() {
                let mut cells = line.split(',');
                let x: f64 = cells.next().unwrap().parse().unwrap();
                let u: f64 = cells.next().unwrap().parse().unwrap();
                prop_assert_eq!(x, p.grid().node(j));
                prop_assert_eq!(u, p.values()[j]);
            }
        }
    }
}
