//! Text and binary snapshot dumps and CSV tables.
//!
//! A dump starts with the line `nx ny h t` followed by one line per `i2` (ascending),
//! each holding the `nx` values along `i1`. Floats use the shortest decimal that
//! round-trips.

use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use crate::diagnostics::{ConvergenceTable, SigmaScanRow};
use crate::error::{Error, Result};
use crate::grid::{Field, IndexSet, Support};
use crate::integrator::{FieldSnapshot, ProbeTrace};

/// Shortest decimal that parses back to the same `f64`, switching to exponent form for
/// very small or large magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn io_err(e: std::io::Error) -> Error {
    Error::Config(format!("i/o failure: {e}"))
}

/// Header line `nx ny h t`.
pub fn snapshot_header(u: &Field<f64>, h: f64, t: f64) -> String {
    let [a, b] = &u.support().axes;
    format!("{} {} {} {}", a.len(), b.len(), num(h), num(t))
}

pub fn write_snapshot_text(w: &mut impl Write, u: &Field<f64>, h: f64, t: f64) -> Result<()> {
    writeln!(w, "{}", snapshot_header(u, h, t)).map_err(io_err)?;
    let nx = u.support().axes[0].len().max(1);
    for row in u.data().chunks(nx) {
        let line: Vec<String> = row.iter().map(|&v| num(v)).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io_err)?;
    }
    Ok(())
}

/// Values as little-endian `f64` in the same order as the text dump.
pub fn write_snapshot_binary(w: &mut impl Write, u: &Field<f64>) -> Result<()> {
    for v in u.data() {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

/// A dump read back: values on a centred square index range.
#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub h: f64,
    pub t: f64,
    pub u: Field<f64>,
}

fn centred_support(nx: usize, ny: usize) -> Result<Arc<Support>> {
    if nx.is_multiple_of(2) || ny.is_multiple_of(2) {
        return Err(Error::Dimension(format!("dump of {nx} x {ny} nodes is not centred")));
    }
    let (a, b) = ((nx / 2) as i64, (ny / 2) as i64);
    Ok(Arc::new(Support::new(IndexSet::range(-a, a), IndexSet::range(-b, b))))
}

fn parse_header(line: &str) -> Result<(usize, usize, f64, f64)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let bad = || Error::Config(format!("malformed dump header '{line}'"));
    if parts.len() != 4 {
        return Err(bad());
    }
    Ok((
        parts[0].parse().map_err(|_| bad())?,
        parts[1].parse().map_err(|_| bad())?,
        parts[2].parse().map_err(|_| bad())?,
        parts[3].parse().map_err(|_| bad())?,
    ))
}

pub fn read_snapshot_text(r: impl BufRead) -> Result<Dump> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty dump".into()))?
        .map_err(io_err)?;
    let (nx, ny, h, t) = parse_header(&header)?;
    let mut data = Vec::with_capacity(nx * ny);
    for (row, line) in lines.enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad value '{tok}' on data row {}", row + 1)))?,
            );
        }
    }
    if data.len() != nx * ny {
        return Err(Error::Dimension(format!("dump holds {} values, header says {}", data.len(), nx * ny)));
    }
    Ok(Dump {
        h,
        t,
        u: Field::from_data(centred_support(nx, ny)?, data)?,
    })
}

/// Reads a binary dump given its header line.
pub fn read_snapshot_binary(header: &str, mut r: impl Read) -> Result<Dump> {
    let (nx, ny, h, t) = parse_header(header.trim())?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err)?;
    if bytes.len() != 8 * nx * ny {
        return Err(Error::Dimension(format!("binary dump holds {} bytes, expected {}", bytes.len(), 8 * nx * ny)));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Dump {
        h,
        t,
        u: Field::from_data(centred_support(nx, ny)?, data)?,
    })
}

/// Writes `header` followed by one line per row.
pub fn write_csv<R: AsRef<[f64]>>(w: &mut impl Write, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|&v| num(v)).collect();
        writeln!(w, "{}", cells.join(",")).map_err(io_err)?;
    }
    Ok(())
}

pub fn write_probe_csv(w: &mut impl Write, p: &ProbeTrace) -> Result<()> {
    write_csv(w, &["t", "u"], p.samples.iter().map(|&(t, u)| [t, u]))
}

pub fn write_energy_csv(w: &mut impl Write, trace: &[(f64, f64)]) -> Result<()> {
    write_csv(w, &["t", "E"], trace.iter().map(|&(t, e)| [t, e]))
}

pub fn write_reflection_csv(w: &mut impl Write, trace: &[(f64, f64)]) -> Result<()> {
    write_csv(w, &["t", "max_abs_diff"], trace.iter().map(|&(t, e)| [t, e]))
}

pub fn write_convergence_csv(w: &mut impl Write, table: &ConvergenceTable) -> Result<()> {
    write_csv(
        w,
        &["h", "err_l2", "err_max"],
        table.rows.iter().map(|r| [r.h, r.err_l2, r.err_max]),
    )
}

/// Missing reflections are written as empty cells.
pub fn write_sigma_scan_csv(w: &mut impl Write, rows: &[SigmaScanRow]) -> Result<()> {
    writeln!(w, "sigma0,kappa1,kappa2,abs_mu,reflection").map_err(io_err)?;
    for r in rows {
        let refl = r.reflection.map(num).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{}",
            num(r.sigma0),
            num(r.kappa[0]),
            num(r.kappa[1]),
            num(r.abs_mu),
            refl
        )
        .map_err(io_err)?;
    }
    Ok(())
}

/// Snapshot file name for step `step`.
pub fn snapshot_name(s: &FieldSnapshot, binary: bool) -> String {
    format!("u_{:06}.{}", s.step, if binary { "bin" } else { "txt" })
}
