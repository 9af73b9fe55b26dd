//! CSV and JSON forms of tables, lattice functions, kernels and spectrum
//! reports.
//!
//! Every JSON document carries `schema_version`. CSV layouts:
//!
//! | artifact | columns |
//! |---|---|
//! | mode table | `sign,s,x,n,value_re,value_im` |
//! | lattice function | `sign,s,x,re,im,rescaled[,low_confidence]` |
//! | kernel | `tau,q,n_max,variant,row_sign,row_s,col_sign,col_s,re,im` |
//! | spectrum | `sign,s,lambda,error` (unmatched rows leave `sign,s,error` empty) |
//!
//! Signs are written as `+` and `-`.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{EvolutionKernel, KernelVariant};
use crate::fock::SpectrumReport;
use crate::hilbert::LatticeFunction;
use crate::qhermite::{Kind, LatticePoint, ModeTable, Sign};

pub const SCHEMA_VERSION: u32 = 1;

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Domain(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Domain(format!("serialization: {e}"))
}

fn sign_str(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

fn parse_sign(s: &str) -> Result<Sign> {
    match s.trim() {
        "+" | "1" | "+1" => Ok(Sign::Plus),
        "-" | "-1" => Ok(Sign::Minus),
        other => Err(Error::Domain(format!("invalid sign `{other}`"))),
    }
}

fn write_json<T: Serialize>(value: &T, out: impl Write) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, value).map_err(io_err)?;
    out.write_all(b"\n").map_err(io_err)
}

#[derive(Serialize)]
struct ModeEntry {
    sign: &'static str,
    s: usize,
    x: f64,
    n: usize,
    value_re: f64,
    value_im: f64,
}

fn mode_entries(table: &ModeTable) -> impl Iterator<Item = ModeEntry> + '_ {
    (0..table.degrees()).flat_map(move |n| {
        table.points.iter().enumerate().map(move |(j, p)| {
            let v = table.value(n, j);
            ModeEntry {
                sign: sign_str(p.sign()),
                s: p.level(),
                x: p.value(),
                n,
                value_re: v.re,
                value_im: v.im,
            }
        })
    })
}

pub fn write_mode_table(table: &ModeTable, q: f64, format: Format, out: impl Write) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for e in mode_entries(table) {
                w.serialize(e).map_err(io_err)?;
            }
            w.flush().map_err(io_err)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                schema_version: u32,
                kind: Kind,
                q: f64,
                degrees: usize,
                points: usize,
                entries: Vec<ModeEntry>,
            }
            write_json(
                &Doc {
                    schema_version: SCHEMA_VERSION,
                    kind: table.kind,
                    q,
                    degrees: table.degrees(),
                    points: table.points.len(),
                    entries: mode_entries(table).collect(),
                },
                out,
            )
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FunctionRow {
    sign: String,
    s: usize,
    x: f64,
    re: f64,
    im: f64,
    rescaled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    low_confidence: Option<bool>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FunctionDoc {
    schema_version: u32,
    kind: Kind,
    q: f64,
    rescaled: bool,
    points: Vec<FunctionRow>,
}

fn function_rows(f: &LatticeFunction, flags: Option<&[bool]>) -> Vec<FunctionRow> {
    f.points
        .iter()
        .zip(&f.values)
        .enumerate()
        .map(|(i, (p, v))| FunctionRow {
            sign: sign_str(p.sign()).to_string(),
            s: p.level(),
            x: p.value(),
            re: v.re,
            im: v.im,
            rescaled: f.rescaled,
            low_confidence: flags.map(|fl| fl[i]),
        })
        .collect()
}

/// Write a lattice function; `low_confidence` adds a per-point flag column.
pub fn write_lattice_function(
    f: &LatticeFunction,
    q: f64,
    low_confidence: Option<&[bool]>,
    format: Format,
    out: impl Write,
) -> Result<()> {
    if let Some(flags) = low_confidence {
        if flags.len() != f.len() {
            return Err(Error::DimensionMismatch {
                left: f.len(),
                right: flags.len(),
            });
        }
    }
    let rows = function_rows(f, low_confidence);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(io_err)?;
            }
            w.flush().map_err(io_err)
        }
        Format::Json => write_json(
            &FunctionDoc {
                schema_version: SCHEMA_VERSION,
                kind: f.kind,
                q,
                rescaled: f.rescaled,
                points: rows,
            },
            out,
        ),
    }
}

fn rows_to_function(kind: Kind, rows: Vec<FunctionRow>, q: f64) -> Result<LatticeFunction> {
    if rows.is_empty() {
        return Err(Error::Domain("lattice function has no points".into()));
    }
    let rescaled = rows[0].rescaled;
    let mut points = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (line, r) in rows.iter().enumerate() {
        if r.rescaled != rescaled {
            return Err(Error::Domain(format!("row {}: mixed rescaled flags", line + 1)));
        }
        let pt = LatticePoint::new(parse_sign(&r.sign)?, r.s, q);
        if (pt.value() - r.x).abs() > 1e-12 * pt.value().abs() {
            return Err(Error::Domain(format!(
                "row {}: x = {} does not match {}q^{} at q = {q}",
                line + 1,
                r.x,
                sign_str(pt.sign()),
                r.s
            )));
        }
        if points.contains(&pt) {
            return Err(Error::Domain(format!("row {}: duplicate lattice point", line + 1)));
        }
        points.push(pt);
        values.push(Complex64::new(r.re, r.im));
    }
    LatticeFunction::new(kind, points, values, rescaled)
}

/// Read a lattice function, checking each `x` against `±qˢ`.
pub fn read_lattice_function(input: impl Read, kind: Kind, q: f64, format: Format) -> Result<LatticeFunction> {
    match format {
        Format::Csv => {
            let mut r = csv::Reader::from_reader(input);
            let rows = r
                .deserialize()
                .collect::<std::result::Result<Vec<FunctionRow>, _>>()
                .map_err(io_err)?;
            rows_to_function(kind, rows, q)
        }
        Format::Json => {
            let doc: FunctionDoc = serde_json::from_reader(input).map_err(io_err)?;
            if doc.schema_version != SCHEMA_VERSION {
                return Err(Error::Domain(format!("unsupported schema_version {}", doc.schema_version)));
            }
            if (doc.q - q).abs() > 1e-15 {
                return Err(Error::Domain(format!("file was written for q = {}, not {q}", doc.q)));
            }
            if doc.kind != kind {
                return Err(Error::KindMismatch {
                    expected: kind.name(),
                    found: doc.kind.name(),
                });
            }
            rows_to_function(kind, doc.points, q)
        }
    }
}

#[derive(Serialize)]
struct KernelEntry {
    row_sign: &'static str,
    row_s: usize,
    col_sign: &'static str,
    col_s: usize,
    re: f64,
    im: f64,
}

fn kernel_entries(k: &EvolutionKernel) -> impl Iterator<Item = KernelEntry> + '_ {
    let m = k.dim();
    (0..m).flat_map(move |i| {
        (0..m).map(move |j| {
            let v = k.matrix[(i, j)];
            KernelEntry {
                row_sign: sign_str(k.points[i].sign()),
                row_s: k.points[i].level(),
                col_sign: sign_str(k.points[j].sign()),
                col_s: k.points[j].level(),
                re: v.re,
                im: v.im,
            }
        })
    })
}

pub fn write_kernel(k: &EvolutionKernel, format: Format, out: impl Write) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record([
                "tau", "q", "n_max", "variant", "row_sign", "row_s", "col_sign", "col_s", "re", "im",
            ])
            .map_err(io_err)?;
            let variant = match k.variant {
                KernelVariant::RawK => "raw_k",
                KernelVariant::RescaledPhi => "rescaled_phi",
            };
            for e in kernel_entries(k) {
                w.write_record([
                    k.tau.to_string(),
                    k.q.to_string(),
                    k.n_max.to_string(),
                    variant.to_string(),
                    e.row_sign.to_string(),
                    e.row_s.to_string(),
                    e.col_sign.to_string(),
                    e.col_s.to_string(),
                    e.re.to_string(),
                    e.im.to_string(),
                ])
                .map_err(io_err)?;
            }
            w.flush().map_err(io_err)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc {
                schema_version: u32,
                tau: f64,
                q: f64,
                n_max: usize,
                variant: KernelVariant,
                lattice_tail: f64,
                level_defects: Vec<f64>,
                entries: Vec<KernelEntry>,
            }
            write_json(
                &Doc {
                    schema_version: SCHEMA_VERSION,
                    tau: k.tau,
                    q: k.q,
                    n_max: k.n_max,
                    variant: k.variant,
                    lattice_tail: k.lattice_tail,
                    level_defects: k.level_defects.clone(),
                    entries: kernel_entries(k).collect(),
                },
                out,
            )
        }
    }
}

pub fn write_spectrum(report: &SpectrumReport, format: Format, out: impl Write) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["sign", "s", "lambda", "error"]).map_err(io_err)?;
            for m in &report.matched {
                w.write_record([
                    sign_str(m.sign).to_string(),
                    m.s.to_string(),
                    m.lambda.to_string(),
                    m.error.to_string(),
                ])
                .map_err(io_err)?;
            }
            for v in &report.unmatched {
                w.write_record(["", "", &v.to_string(), ""]).map_err(io_err)?;
            }
            w.flush().map_err(io_err)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                schema_version: u32,
                #[serde(flatten)]
                report: &'a SpectrumReport,
            }
            write_json(
                &Doc {
                    schema_version: SCHEMA_VERSION,
                    report,
                },
                out,
            )
        }
    }
}
