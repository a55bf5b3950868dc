//! Tabular output: comma- or tab-separated, header row, `\n` line endings,
//! decimals printed with 17 significant digits so they round-trip.

use std::fmt::Write as _;
use std::path::Path;

use crate::bounds::{
    bgpv_deviation, clip_threshold_alpha, gamma_term, heuristic_std, thm_kl_bound,
    variance_lower_bound, BoundInputs,
};
use crate::error::{invalid, Error, Result};
use crate::harness::{Figure1Row, TrialSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Tsv,
}

impl Format {
    fn sep(self) -> char {
        match self {
            Format::Csv => ',',
            Format::Tsv => '\t',
        }
    }
}

/// A header and rows of optional numbers; `None` prints as an empty cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

/// Shortest text for integers, otherwise scientific with 17 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.16e}")
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        let sep = format.sep();
        let mut out = String::new();
        out.push_str(&self.header.join(&sep.to_string()));
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(sep);
                }
                if let Some(v) = cell {
                    let _ = write!(out, "{}", format_number(*v));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses text produced by [`Table::render`] (or any simple numeric
    /// table). Empty cells become `None`; other cells must be numbers.
    pub fn parse(text: &str, format: Format, origin: &Path) -> Result<Table> {
        let sep = format.sep();
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, head) = lines.next().ok_or(Error::Empty)?;
        let header: Vec<String> = head.split(sep).map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let cells: Vec<&str> = line.split(sep).collect();
            if cells.len() != header.len() {
                return Err(Error::LengthMismatch(header.len(), cells.len()));
            }
            let row = cells
                .iter()
                .map(|c| {
                    let c = c.trim();
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                            path: origin.to_path_buf(),
                            line: idx + 1,
                            text: c.to_string(),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| invalid("column", format!("no column named {name:?}")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub const SIMULATE_HEADER: [&str; 12] = [
    "k",
    "n",
    "reps",
    "t",
    "mean_kl",
    "var_kl",
    "std_kl",
    "q50",
    "q90",
    "q99",
    "exceed_frac",
    "t_delta",
];

/// One-row table of a trial summary. Wall-clock time is left out so the
/// output is a pure function of the configuration.
pub fn simulate_table(s: &TrialSummary) -> Table {
    let mut t = Table::new(&SIMULATE_HEADER);
    let q = s.quantiles;
    t.push(vec![
        Some(s.k as f64),
        Some(s.n as f64),
        Some(s.reps as f64),
        Some(s.t),
        Some(s.mean_kl),
        Some(s.var_kl),
        Some(s.std_kl),
        q.map(|q| q.q50),
        q.map(|q| q.q90),
        q.map(|q| q.q99),
        s.exceed_frac(),
        s.t_delta,
    ]);
    t
}

pub const FIGURE1_HEADER: [&str; 4] = ["k", "sample_std", "heuristic_std", "ratio"];

pub fn figure1_table(rows: &[Figure1Row]) -> Table {
    let mut t = Table::new(&FIGURE1_HEADER);
    for r in rows {
        t.push(vec![
            Some(r.k as f64),
            Some(r.sample_std),
            Some(r.heuristic_std),
            r.ratio,
        ]);
    }
    t
}

pub const BOUNDS_HEADER: [&str; 6] = [
    "thm_kl_bound",
    "bgpv_deviation",
    "variance_lb",
    "heuristic_std",
    "gamma",
    "alpha",
];

/// All closed-form quantities at `(k, n, delta)`. The variance bound is
/// blank when `n < 10k` and the earlier deviation rate when `n < 2`.
pub fn bounds_table(b: &BoundInputs) -> Table {
    let (k, n) = (b.k(), b.n());
    let mut t = Table::new(&BOUNDS_HEADER);
    t.push(vec![
        Some(thm_kl_bound(b)),
        bgpv_deviation(b).ok(),
        variance_lower_bound(k, n).ok(),
        Some(heuristic_std(k, n)),
        Some(gamma_term(k, n)),
        Some(clip_threshold_alpha(b)),
    ]);
    t
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            9.765625e-5,
            6.02e23,
            -2.5e-300,
            1e-310,
            12345.0,
        ] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_number(10240.0), "10240");
        assert_eq!(format_number(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn blank_cells_and_parse() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Some(1.0), None]);
        t.push(vec![Some(0.25), Some(f64::INFINITY)]);
        let text = t.render(Format::Csv);
        assert_eq!(text, "a,b\n1,\n2.5000000000000000e-1,inf\n");
        let back = Table::parse(&text, Format::Csv, Path::new("x")).unwrap();
        assert_eq!(back, t);
        let tsv = t.render(Format::Tsv);
        assert!(tsv.starts_with("a\tb\n"));
        assert_eq!(back.column("b").unwrap(), vec![None, Some(f64::INFINITY)]);
        assert!(back.column("c").is_err());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(Table::parse("", Format::Csv, Path::new("x")).is_err());
        assert!(Table::parse("a,b\n1\n", Format::Csv, Path::new("x")).is_err());
        assert!(Table::parse("a\nxyz\n", Format::Csv, Path::new("x")).is_err());
    }

    #[test]
    fn bounds_blank_cells() {
        let t = bounds_table(&BoundInputs::new(10, 50, 0.1).unwrap());
        assert_eq!(t.rows[0][2], None);
        let t = bounds_table(&BoundInputs::new(100, 1_000_000, 0.1).unwrap());
        assert!(t.rows[0].iter().all(Option::is_some));
        let t = bounds_table(&BoundInputs::new(1, 1, 0.5).unwrap());
        assert_eq!(t.rows[0][1], None);
        assert_eq!(t.rows[0][2], None);
    }
}
