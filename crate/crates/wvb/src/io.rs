//! On-disk formats: JSON config, campaign CSVs, analysis tables.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use wvb_core::analysis::{
    CampaignAnalysis, CommutatorRow, ProbabilityEstimate, WeakValueErrors, WeakValueEstimate,
};
use wvb_core::campaign::{BinnedCounts, Channel, ExperimentConfig};

use crate::CliError;

pub const DATA_HEADER: [&str; 5] = ["chi_rad", "channel", "bin_center_s", "counts", "exposure"];
pub const WEAK_VALUE_HEADER: [&str; 6] = ["chi_rad", "re", "im", "sigma_re", "sigma_im", "excluded"];
pub const COMMUTATOR_HEADER: [&str; 6] = ["chi_rad", "lhs", "sigma_lhs", "rhs", "sigma_rhs", "theory"];
pub const POSTSELECTION_HEADER: [&str; 5] = ["chi_rad", "p_x", "sigma_p_x", "p_y", "sigma_p_y"];
pub const FITS_HEADER: [&str; 10] = [
    "chi_rad",
    "offset",
    "sin_coeff",
    "cos_coeff",
    "amplitude",
    "phase",
    "sigma_offset",
    "sigma_amplitude",
    "sigma_phase",
    "reduced_chi2",
];
pub const CORRECTED_HEADER: [&str; 4] = ["chi_rad", "bin_center_s", "intensity", "sigma"];

pub const SINGLE_FILE: &str = "campaign.csv";

/// 17 significant digits, round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Whole counts print as integers; noiseless expectations keep full precision.
pub fn fmt_count(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 9.0e15 {
        format!("{}", c as i64)
    } else {
        fmt_f64(c)
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes through a sibling temp file and renames, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{}: not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

// ---------------------------------------------------------------- JSON

/// Pretty printer that writes floats in `{:.16e}` form.
struct SciFormatter(PrettyFormatter<'static>);

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{}", fmt_f64(v))
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

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    out.push(b'\n');
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, &to_json(value))
}

/// Line of the first occurrence of `"key"` in a JSON document, 1-based.
fn line_of_key(text: &str, field: &str) -> Option<usize> {
    let key = field.rsplit('.').next()?;
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Parses and validates a config. A run manifest is accepted too; its
/// config snapshot is used.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?;
    let is_manifest = value.get("tool").is_some() && value.get("config").is_some();
    let parsed = if is_manifest {
        serde_json::from_value::<ExperimentConfig>(value["config"].clone())
            .map_err(|e| CliError::Config(format!("{origin}: config snapshot: {e}")))?
    } else {
        // reparse from text so serde_json reports positions
        serde_json::from_str::<ExperimentConfig>(text)
            .map_err(|e| CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column())))?
    };
    parsed.validate().map_err(|e| {
        let line = line_of_key(text, &e.field).map(|l| format!("{l}:")).unwrap_or_default();
        CliError::Config(format!("{origin}:{line} field `{}`: {}", e.field, e.message))
    })?;
    Ok(parsed)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_config(&text, &path.display().to_string())
}

// ---------------------------------------------------------------- campaign CSV

pub fn counts_csv(data: &[&BinnedCounts]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DATA_HEADER).expect("in-memory csv");
    for d in data {
        for (t, c) in d.bin_centers.iter().zip(&d.counts) {
            w.write_record([
                fmt_f64(d.chi),
                d.channel.name().to_string(),
                fmt_f64(*t),
                fmt_count(*c),
                fmt_f64(d.exposure),
            ])
            .expect("in-memory csv");
        }
    }
    w.into_inner().expect("in-memory csv")
}

/// Layout of a campaign on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Layout {
    /// One `<channel>.csv` per channel.
    PerChannel,
    /// Everything in `campaign.csv`.
    Single,
}

/// Writes the campaign and returns the file names written.
pub fn write_campaign(dir: &Path, data: &[BinnedCounts], layout: Layout) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    match layout {
        Layout::Single => {
            let path = dir.join(SINGLE_FILE);
            write_atomic(&path, &counts_csv(&data.iter().collect::<Vec<_>>()))?;
            written.push(path);
        }
        Layout::PerChannel => {
            for channel in Channel::ALL {
                let rows: Vec<&BinnedCounts> = data.iter().filter(|d| d.channel == channel).collect();
                if rows.is_empty() {
                    continue;
                }
                let path = dir.join(format!("{}.csv", channel.name()));
                write_atomic(&path, &counts_csv(&rows))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

fn check_header(path: &Path, rdr: &mut csv::Reader<fs::File>, expected: &[&str]) -> Result<(), CliError> {
    let header = rdr.headers().map_err(|e| io_err(path, e))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(CliError::Io(format!(
            "{}: header `{}`, expected `{}`",
            path.display(),
            header.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

fn parse_f64(path: &Path, line: u64, col: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Io(format!("{}:{line}: `{col}` is not a number: {s:?}", path.display())))
}

fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<fs::File>, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    check_header(path, &mut rdr, header)?;
    Ok(rdr)
}

/// Reads one data CSV into histograms, grouped by (χ, channel) in file order.
pub fn read_counts_csv(path: &Path) -> Result<Vec<BinnedCounts>, CliError> {
    let mut rdr = open_csv(path, &DATA_HEADER)?;
    let mut out: Vec<BinnedCounts> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let chi = parse_f64(path, line, "chi_rad", &rec[0])?;
        let channel = Channel::from_name(rec[1].trim())
            .ok_or_else(|| CliError::Io(format!("{}:{line}: unknown channel {:?}", path.display(), &rec[1])))?;
        let t = parse_f64(path, line, "bin_center_s", &rec[2])?;
        let c = parse_f64(path, line, "counts", &rec[3])?;
        let exposure = parse_f64(path, line, "exposure", &rec[4])?;
        match out
            .iter_mut()
            .find(|d| d.channel == channel && d.chi.to_bits() == chi.to_bits())
        {
            Some(d) => {
                d.bin_centers.push(t);
                d.counts.push(c);
            }
            None => out.push(BinnedCounts {
                chi,
                channel,
                bin_centers: vec![t],
                counts: vec![c],
                exposure,
            }),
        }
    }
    for d in &out {
        d.check()
            .map_err(|e| CliError::Io(format!("{}: {} at χ={}: {e}", path.display(), d.channel, d.chi)))?;
    }
    Ok(out)
}

/// Reads a campaign directory in either layout.
pub fn read_campaign(dir: &Path) -> Result<Vec<BinnedCounts>, CliError> {
    if !dir.is_dir() {
        return Err(CliError::MissingData(format!("{}: no such directory", dir.display())));
    }
    let mut files: Vec<PathBuf> = Vec::new();
    let single = dir.join(SINGLE_FILE);
    if single.is_file() {
        files.push(single);
    }
    for c in Channel::ALL {
        let p = dir.join(format!("{}.csv", c.name()));
        if p.is_file() {
            files.push(p);
        }
    }
    if files.is_empty() {
        return Err(CliError::MissingData(format!(
            "{}: no campaign data ({SINGLE_FILE} or <channel>.csv)",
            dir.display()
        )));
    }
    let mut data = Vec::new();
    for f in files {
        data.extend(read_counts_csv(&f)?);
    }
    Ok(data)
}

// ---------------------------------------------------------------- analysis tables

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn weak_values_csv(values: &[WeakValueEstimate]) -> Vec<u8> {
    table(
        &WEAK_VALUE_HEADER,
        values.iter().map(|w| {
            vec![
                fmt_f64(w.chi),
                fmt_f64(w.re),
                fmt_f64(w.im),
                fmt_f64(w.sigma_re),
                fmt_f64(w.sigma_im),
                w.excluded.to_string(),
            ]
        }),
    )
}

pub fn fits_csv(analysis: &CampaignAnalysis) -> Vec<u8> {
    table(
        &FITS_HEADER,
        analysis.fits.iter().map(|f| {
            let s = &f.fit;
            vec![
                fmt_f64(f.chi),
                fmt_f64(s.offset),
                fmt_f64(s.sin_coeff),
                fmt_f64(s.cos_coeff),
                fmt_f64(s.amplitude),
                fmt_f64(s.phase),
                fmt_f64(s.sigma_offset()),
                fmt_f64(s.sigma_amplitude()),
                fmt_f64(s.sigma_phase()),
                fmt_f64(s.reduced_chi2),
            ]
        }),
    )
}

pub fn corrected_csv(analysis: &CampaignAnalysis) -> Vec<u8> {
    table(
        &CORRECTED_HEADER,
        analysis.fits.iter().flat_map(|f| {
            let s = &f.corrected;
            s.times
                .iter()
                .zip(&s.values)
                .zip(&s.sigmas)
                .map(|((t, v), e)| vec![fmt_f64(f.chi), fmt_f64(*t), fmt_f64(*v), fmt_f64(*e)])
                .collect::<Vec<_>>()
        }),
    )
}

pub fn postselection_csv(px: &[ProbabilityEstimate], py: &[ProbabilityEstimate]) -> Vec<u8> {
    table(
        &POSTSELECTION_HEADER,
        px.iter().zip(py).map(|(x, y)| {
            vec![
                fmt_f64(x.chi),
                fmt_f64(x.p),
                fmt_f64(x.sigma),
                fmt_f64(y.p),
                fmt_f64(y.sigma),
            ]
        }),
    )
}

pub fn commutator_csv(rows: &[CommutatorRow]) -> Vec<u8> {
    table(
        &COMMUTATOR_HEADER,
        rows.iter().filter(|r| !r.excluded).map(|r| {
            vec![
                fmt_f64(r.chi),
                fmt_f64(r.lhs),
                fmt_f64(r.sigma_lhs),
                fmt_f64(r.rhs),
                fmt_f64(r.sigma_rhs),
                fmt_f64(r.theory),
            ]
        }),
    )
}

fn required(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingData(format!("{}: missing", path.display())))
    }
}

pub fn read_weak_values(path: &Path) -> Result<Vec<WeakValueEstimate>, CliError> {
    required(path)?;
    let mut rdr = open_csv(path, &WEAK_VALUE_HEADER)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| parse_f64(path, line, WEAK_VALUE_HEADER[i], &rec[i]);
        let excluded = match rec[5].trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(CliError::Io(format!("{}:{line}: bad `excluded` {other:?}", path.display())));
            }
        };
        out.push(WeakValueEstimate {
            chi: num(0)?,
            re: num(1)?,
            im: num(2)?,
            sigma_re: num(3)?,
            sigma_im: num(4)?,
            errors: WeakValueErrors::default(),
            postselection_prob: f64::NAN,
            excluded,
        });
    }
    Ok(out)
}

pub fn read_postselection(path: &Path) -> Result<(Vec<ProbabilityEstimate>, Vec<ProbabilityEstimate>), CliError> {
    required(path)?;
    let mut rdr = open_csv(path, &POSTSELECTION_HEADER)?;
    let (mut px, mut py) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| io_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| parse_f64(path, line, POSTSELECTION_HEADER[i], &rec[i]);
        let chi = num(0)?;
        px.push(ProbabilityEstimate { chi, p: num(1)?, sigma: num(2)? });
        py.push(ProbabilityEstimate { chi, p: num(3)?, sigma: num(4)? });
    }
    Ok((px, py))
}
