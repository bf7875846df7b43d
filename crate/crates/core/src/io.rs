//! CSV exchange formats for decay curves and spectra.
//!
//! Decay curves: header `t_s,population` with an optional `weight` column.
//! Spectra: header `freq_hz,psd`. Floats are written in shortest round-trip
//! form so that output is byte-stable.

use std::io::{Read, Write};
use std::path::Path;

use crate::noise::DecayCurve;
use crate::numerics::Spectrum;
use crate::{Error, Result};

fn headers<R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<String>> {
    Ok(rdr.headers()?.iter().map(|h| h.trim().to_string()).collect())
}

fn parse(field: &str, line: u64, column: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Csv(format!("line {line}: column {column}: not a number: {field:?}")))
}

pub fn read_decay_curve<R: Read>(reader: R) -> Result<DecayCurve> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let h = headers(&mut rdr)?;
    let weighted = match h.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["t_s", "population"] => false,
        ["t_s", "population", "weight"] => true,
        _ => {
            return Err(Error::Csv(format!(
                "expected header t_s,population[,weight], got {}",
                h.join(",")
            )))
        }
    };
    let (mut t, mut p, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        t.push(parse(&rec[0], line, "t_s")?);
        p.push(parse(&rec[1], line, "population")?);
        if weighted {
            w.push(parse(&rec[2], line, "weight")?);
        }
    }
    DecayCurve::new(t, p, weighted.then_some(w))
}

pub fn write_decay_curve<W: Write>(writer: W, curve: &DecayCurve) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    match curve.weights() {
        Some(w) => {
            wtr.write_record(["t_s", "population", "weight"])?;
            for ((t, p), w) in curve.iter().zip(w) {
                wtr.write_record([t.to_string(), p.to_string(), w.to_string()])?;
            }
        }
        None => {
            wtr.write_record(["t_s", "population"])?;
            for (t, p) in curve.iter() {
                wtr.write_record([t.to_string(), p.to_string()])?;
            }
        }
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn read_spectrum<R: Read>(reader: R) -> Result<Spectrum> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let h = headers(&mut rdr)?;
    if h != ["freq_hz", "psd"] {
        return Err(Error::Csv(format!("expected header freq_hz,psd, got {}", h.join(","))));
    }
    let (mut f, mut s) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        f.push(parse(&rec[0], line, "freq_hz")?);
        s.push(parse(&rec[1], line, "psd")?);
    }
    Ok(Spectrum { frequencies: f, psd: s })
}

pub fn write_spectrum<W: Write>(writer: W, spectrum: &Spectrum) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    wtr.write_record(["freq_hz", "psd"])?;
    for (f, s) in spectrum.frequencies.iter().zip(&spectrum.psd) {
        wtr.write_record([f.to_string(), s.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn load_decay_curve(path: impl AsRef<Path>) -> Result<DecayCurve> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
    read_decay_curve(file)
}

pub fn save_decay_curve(path: impl AsRef<Path>, curve: &DecayCurve) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path)
        .map_err(|e| Error::Csv(format!("{}: {e}", path.display())))?;
    write_decay_curve(std::io::BufWriter::new(file), curve)
}
