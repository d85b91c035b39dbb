//! Field files, reports, CSV and plot data. Every float is written with
//! 17 significant digits; non-finite values become `null`.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use ckn_lab::{Field, FsParameters, Grid};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, CliResult};

/// `{:.16e}` floats on top of serde_json's pretty layout.
struct Digits17<'a>(PrettyFormatter<'a>);

impl Formatter for Digits17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{}", fmt_f64(v))
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Same floats, no whitespace.
struct CompactDigits17;

impl Formatter for CompactDigits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{}", fmt_f64(v))
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("serializing to memory");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn to_json_compact<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CompactDigits17);
    value.serialize(&mut ser).expect("serializing to memory");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ParamsBlock {
    pub d: usize,
    pub p: f64,
    pub a: f64,
    pub b: f64,
    pub lambda_fs: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GridBlock {
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub max_mode: usize,
    pub n_phi: usize,
    pub d: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FieldFile {
    pub params: ParamsBlock,
    pub grid: GridBlock,
    pub modes: Vec<Vec<f64>>,
}

impl FieldFile {
    pub fn from_field(f: &Field) -> Self {
        let g = f.grid();
        let p = g.params();
        FieldFile {
            params: ParamsBlock { d: p.d, p: p.p, a: p.a, b: p.b, lambda_fs: p.lambda_fs },
            grid: GridBlock {
                t_min: g.t_min(),
                t_max: g.t_max(),
                n_t: g.n_t(),
                max_mode: g.max_mode(),
                n_phi: g.n_phi(),
                d: g.d(),
            },
            modes: f.modes().to_vec(),
        }
    }

    pub fn into_field(self) -> CliResult<Field> {
        let bad = |m: String| CliError::Input(m);
        if self.params.d != self.grid.d {
            return Err(bad(format!("params.d = {} but grid.d = {}", self.params.d, self.grid.d)));
        }
        let params = FsParameters::new(self.params.d, self.params.p).map_err(|e| bad(e.to_string()))?;
        for (name, stored, derived) in
            [("a", self.params.a, params.a), ("b", self.params.b, params.b), ("lambda_fs", self.params.lambda_fs, params.lambda_fs)]
        {
            if (stored - derived).abs() > 1e-12 * derived.abs().max(1.0) {
                return Err(bad(format!("params.{name} = {stored} disagrees with (d, p), expected {derived}")));
            }
        }
        let g = &self.grid;
        let grid = Grid::with_n_phi(params, g.t_min, g.t_max, g.n_t, g.max_mode, g.n_phi).map_err(|e| bad(e.to_string()))?;
        if self.modes.len() != grid.n_modes() || self.modes.iter().any(|m| m.len() != grid.n_t()) {
            return Err(bad(format!("modes must be {} arrays of length {}", grid.n_modes(), grid.n_t())));
        }
        Field::from_modes(&grid, self.modes).map_err(|e| bad(e.to_string()))
    }
}

pub fn write_field(path: &Path, f: &Field) -> CliResult<()> {
    write_text(path, &to_json_compact(&FieldFile::from_field(f)))
}

pub fn read_field(path: &Path) -> CliResult<Field> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let file: FieldFile = serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    })?;
    file.into_field()
}

/// CSV with the given header; each row is already formatted.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing memory")).expect("csv writes UTF-8")
}

/// Two columns `ln x  ln y`.
pub fn loglog_dat(x_name: &str, y_name: &str, pts: &[(f64, f64)]) -> String {
    let mut s = format!("# ln({x_name}) ln({y_name})\n");
    for (x, y) in pts {
        s.push_str(&format!("{} {}\n", fmt_f64(x.ln()), fmt_f64(y.ln())));
    }
    s
}
