//! Records CSV and two-column plot files.
//!
//! Floats are written in Rust's shortest round-trip scientific form
//! (`{:e}`), which is locale independent and parses back to the same bits.
//! Budget columns hold `NaN` at records without both neighbours.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::virial::{DiagRecord, EnergyBudget, MassBudget};

pub const COLUMNS: [&str; 21] = [
    "t",
    "I1",
    "I2",
    "E",
    "L1",
    "lambda",
    "F",
    "a1",
    "a2",
    "a3",
    "a4",
    "mass_residual",
    "b1",
    "b2",
    "b3",
    "d31",
    "d32",
    "d321",
    "d322",
    "b4",
    "energy_residual",
];

/// One records row, the diagnostics followed by both budgets.
#[derive(Clone, Copy, Debug)]
pub struct RecordRow {
    pub diag: DiagRecord,
    pub a: [f64; 4],
    pub mass_residual: f64,
    pub b: [f64; 4],
    pub d: [f64; 4],
    pub energy_residual: f64,
}

impl RecordRow {
    pub fn new(diag: DiagRecord, mass: Option<&MassBudget>, energy: Option<&EnergyBudget>) -> RecordRow {
        let nan = f64::NAN;
        let (a, mass_residual) = match mass {
            Some(m) => ([m.a1, m.a2, m.a3, m.a4], m.residual),
            None => ([nan; 4], nan),
        };
        let (b, d, energy_residual) = match energy {
            Some(e) => (
                [e.b1, e.b2, e.b3, e.b4],
                [e.d31, e.d32, e.d321, e.d322],
                e.residual,
            ),
            None => ([nan; 4], [nan; 4], nan),
        };
        RecordRow {
            diag,
            a,
            mass_residual,
            b,
            d,
            energy_residual,
        }
    }

    pub fn has_budgets(&self) -> bool {
        !self.mass_residual.is_nan()
    }

    /// Values in [`COLUMNS`] order.
    pub fn values(&self) -> [f64; 21] {
        let g = &self.diag;
        [
            g.t,
            g.i1,
            g.i2,
            g.energy,
            g.l1,
            g.lambda,
            g.f,
            self.a[0],
            self.a[1],
            self.a[2],
            self.a[3],
            self.mass_residual,
            self.b[0],
            self.b[1],
            self.b[2],
            self.d[0],
            self.d[1],
            self.d[2],
            self.d[3],
            self.b[3],
            self.energy_residual,
        ]
    }

    pub fn from_values(v: [f64; 21]) -> RecordRow {
        RecordRow {
            diag: DiagRecord {
                t: v[0],
                i1: v[1],
                i2: v[2],
                energy: v[3],
                l1: v[4],
                lambda: v[5],
                f: v[6],
            },
            a: [v[7], v[8], v[9], v[10]],
            mass_residual: v[11],
            b: [v[12], v[13], v[14], v[19]],
            d: [v[15], v[16], v[17], v[18]],
            energy_residual: v[20],
        }
    }
}

/// Bitwise equality, so `NaN` rows compare equal to themselves.
impl PartialEq for RecordRow {
    fn eq(&self, other: &Self) -> bool {
        self.values()
            .iter()
            .zip(other.values().iter())
            .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub fn format_float(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_records<W: Write>(out: W, rows: &[RecordRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.values().iter().map(|&x| format_float(x)))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RecordRow>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(COLUMNS.iter().copied()) {
        return Err(Error::Records(format!(
            "header {:?} does not match the expected columns",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let mut v = [0.0; 21];
        for (j, field) in rec.iter().enumerate() {
            v[j] = field.trim().parse().map_err(|_| {
                Error::Records(format!(
                    "row {}: column {} = {field:?} is not a number",
                    i + 1,
                    COLUMNS[j]
                ))
            })?;
        }
        rows.push(RecordRow::from_values(v));
    }
    Ok(rows)
}

pub fn save_records(path: &Path, rows: &[RecordRow]) -> Result<()> {
    write_records(BufWriter::new(File::create(path)?), rows)
}

pub fn load_records(path: &Path) -> Result<Vec<RecordRow>> {
    read_records(File::open(path)?)
}

fn csv_err(err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Records(format!("{other:?}")),
    }
}

/// Two whitespace-separated columns, one point per line.
pub fn write_dat<W: Write>(mut out: W, points: impl IntoIterator<Item = (f64, f64)>) -> Result<()> {
    for (x, y) in points {
        writeln!(out, "{} {}", format_float(x), format_float(y))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `F.dat`, `mass_residual.dat`, `energy_residual.dat` and
/// `l1_loglog.dat` (natural logs of `<t>` and `L1`) into `dir`.
pub fn write_plots(dir: &Path, rows: &[RecordRow]) -> Result<()> {
    let open = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };
    write_dat(open("F.dat")?, rows.iter().map(|r| (r.diag.t, r.diag.f)))?;
    let budgets = || rows.iter().filter(|r| r.has_budgets());
    write_dat(
        open("mass_residual.dat")?,
        budgets().map(|r| (r.diag.t, r.mass_residual)),
    )?;
    write_dat(
        open("energy_residual.dat")?,
        budgets().map(|r| (r.diag.t, r.energy_residual)),
    )?;
    write_dat(
        open("l1_loglog.dat")?,
        rows.iter()
            .filter(|r| r.diag.l1 > 0.0)
            .map(|r| (crate::solver::japanese_bracket(r.diag.t).ln(), r.diag.l1.ln())),
    )?;
    Ok(())
}
