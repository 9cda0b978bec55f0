//! CSV and JSON formats shared by the command-line tool.

use std::io::{Read, Write};

use crate::allocation::DivisionalSample;
use crate::balance::{BalanceScenarios, BalanceSheetModel};
use crate::error::{Error, Result};
use crate::rng::RNG_NAME;
use crate::sample::{WeightedSample, Weights};

/// Parses a decimal or a percentage such as `0.5%`.
pub fn parse_fraction(s: &str) -> Result<f64> {
    let t = s.trim();
    let (num, scale) = match t.strip_suffix('%') {
        Some(n) => (n.trim(), 0.01),
        None => (t, 1.0),
    };
    let v: f64 = num.parse().map_err(|_| Error::Parse(format!("not a number: '{s}'")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("not a finite number: '{s}'")));
    }
    Ok(v * scale)
}

/// `start:end:count` (inclusive, evenly spaced) or a comma-separated list.
/// Entries may carry a `%` suffix.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => s.split(',').filter(|p| !p.trim().is_empty()).map(parse_fraction).collect(),
        3 => {
            let (a, b) = (parse_fraction(parts[0])?, parse_fraction(parts[1])?);
            let n: usize = parts[2].trim().parse().map_err(|_| Error::Parse(format!("bad grid count in '{s}'")))?;
            match n {
                0 => Err(Error::Parse(format!("grid '{s}' has no points"))),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()),
            }
        }
        _ => Err(Error::Parse(format!("grid '{s}' must be start:end:count or a list"))),
    }
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> =
            rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("row {}: '{f}' is not a number", line + 1))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self { headers, rows })
    }

    fn find(&self, names: &[&str]) -> Option<usize> {
        self.headers.iter().position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
    }

    fn require(&self, names: &[&str]) -> Result<usize> {
        self.find(names).ok_or_else(|| Error::Parse(format!("missing column {}", names.join(" or "))))
    }

    fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    fn weights(&self) -> Result<Weights> {
        match self.find(&["weight"]) {
            None => Ok(Weights::Uniform),
            Some(j) => weights_from_column(self.column(j)),
        }
    }

    /// Columns `<prefix>1`, `<prefix>2`, … in order.
    fn numbered(&self, prefix: &str) -> Vec<usize> {
        let mut out = Vec::new();
        for k in 1.. {
            match self.find(&[&format!("{prefix}{k}")]) {
                Some(j) => out.push(j),
                None => break,
            }
        }
        out
    }
}

/// Explicit weights that are all equal are treated as uniform, so that the
/// cumulative weights at order statistics are exact.
pub fn weights_from_column(w: Vec<f64>) -> Result<Weights> {
    let n = w.len();
    let explicit = Weights::Explicit(w);
    explicit.validate(n)?;
    match &explicit {
        Weights::Explicit(v) if v.iter().all(|&x| x == v[0]) => Ok(Weights::Uniform),
        _ => Ok(explicit),
    }
}

/// Scenario file with columns `weight,x,y` (weight optional). The simulator's
/// `weight,deltaE,L,A` layout is accepted with deltaE as x and L as y.
pub fn read_scenarios<R: Read>(reader: R) -> Result<WeightedSample> {
    let t = Table::read(reader)?;
    let xj = t.require(&["x", "deltaE"])?;
    let yj = t.require(&["y", "L"])?;
    WeightedSample::new(t.column(xj), t.column(yj), t.weights()?)
}

/// Asset/liability view of a simulator file: (A, L).
pub fn read_asset_scenarios<R: Read>(reader: R) -> Result<WeightedSample> {
    let t = Table::read(reader)?;
    let aj = t.require(&["A"])?;
    let lj = t.require(&["L"])?;
    WeightedSample::new(t.column(aj), t.column(lj), t.weights()?)
}

pub fn write_scenarios<W: Write>(writer: W, sample: &WeightedSample) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["weight", "x", "y"]).map_err(io)?;
    for i in 0..sample.len() {
        w.write_record([fmt(sample.weight(i)), fmt(sample.x()[i]), fmt(sample.y()[i])]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn write_simulated<W: Write>(
    mut writer: W,
    scen: &BalanceScenarios,
    model: &BalanceSheetModel,
    seed: u64,
) -> Result<()> {
    let json = serde_json::to_string(model).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(writer, "# model={json} seed={seed} rng={RNG_NAME}").map_err(|e| Error::Io(e.to_string()))?;
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["weight", "deltaE", "L", "A"]).map_err(io)?;
    let weight = fmt(1.0 / scen.len() as f64);
    for i in 0..scen.len() {
        w.write_record([weight.clone(), fmt(scen.delta_e[i]), fmt(scen.liabilities[i]), fmt(scen.assets[i])])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Divisional file `weight,dE_1..dE_N,L_1..L_N`. A simulator file is read as
/// a single division.
pub fn read_divisional<R: Read>(reader: R) -> Result<DivisionalSample> {
    let t = Table::read(reader)?;
    let mut de = t.numbered("dE_");
    let mut l = t.numbered("L_");
    if de.is_empty() {
        de = vec![t.require(&["deltaE", "x"])?];
        l = vec![t.require(&["L", "y"])?];
    }
    if de.len() != l.len() {
        return Err(Error::Parse(format!("{} dE columns but {} L columns", de.len(), l.len())));
    }
    DivisionalSample::new(
        t.weights()?,
        de.iter().map(|&j| t.column(j)).collect(),
        l.iter().map(|&j| t.column(j)).collect(),
    )
}

/// Scenario returns of a portfolio problem.
#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioScenarios {
    pub weights: Weights,
    /// Asset-major: `returns[k][m]`.
    pub returns: Vec<Vec<f64>>,
    pub liability: Vec<f64>,
}

/// Problem file `weight,R_1..R_K,Z` (weight optional).
pub fn read_portfolio<R: Read>(reader: R) -> Result<PortfolioScenarios> {
    let t = Table::read(reader)?;
    let rs = t.numbered("R_");
    if rs.is_empty() {
        return Err(Error::Parse("missing columns R_1..R_K".into()));
    }
    let zj = t.require(&["Z"])?;
    Ok(PortfolioScenarios {
        weights: t.weights()?,
        returns: rs.iter().map(|&j| t.column(j)).collect(),
        liability: t.column(zj),
    })
}

/// Shortest representation that parses back to the same value.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}
