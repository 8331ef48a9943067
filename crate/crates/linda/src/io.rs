//! Delimited-text readers and writers.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use linda_core::inference::{LindaResult, TaxonResult};
use linda_core::matrix::Matrix;
use linda_core::simulate::TaxonParams;
use linda_core::{CountTable, MetadataTable, Variable};

use crate::error::{Error, Result};
use crate::number::{format_f64, format_opt, parse_opt};

/// Tab unless the file name ends in `.csv`.
pub fn delimiter_for(path: &Path, override_delim: Option<u8>) -> u8 {
    if let Some(d) = override_delim {
        return d;
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => b',',
        _ => b'\t',
    }
}

/// Parses a delimiter flag value: `tab`, `comma`, `\t`, or one character.
pub fn parse_delimiter(s: &str) -> std::result::Result<u8, String> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        "comma" | "," => Ok(b','),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("unsupported delimiter `{s}`")),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn grid_reader<R: Read>(reader: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

fn next_record<R: Read>(rdr: &mut csv::Reader<R>, source: &str) -> Result<Option<csv::StringRecord>> {
    let mut rec = csv::StringRecord::new();
    match rdr.read_record(&mut rec) {
        Ok(true) => Ok(Some(rec)),
        Ok(false) => Ok(None),
        Err(e) => Err(Error::parse(source, e.to_string())),
    }
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Reads a taxa x samples count grid: the first row holds sample ids, the
/// first column taxon ids.
pub fn read_count_table<R: Read>(reader: R, delimiter: u8, source: &str) -> Result<CountTable> {
    let mut rdr = grid_reader(reader, delimiter);
    let header = next_record(&mut rdr, source)?.ok_or_else(|| Error::parse(source, "empty input"))?;
    let samples: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if samples.is_empty() {
        return Err(Error::parse(source, "no sample columns"));
    }
    let n = samples.len();
    let mut taxa = Vec::new();
    let mut counts = Vec::new();
    while let Some(rec) = next_record(&mut rdr, source)? {
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let line = line_of(&rec);
        if rec.len() != n + 1 {
            return Err(Error::parse(
                source,
                format!("line {line}: expected {} fields, found {}", n + 1, rec.len()),
            ));
        }
        let taxon = rec[0].to_string();
        for (col, cell) in rec.iter().skip(1).enumerate() {
            counts.push(parse_count(cell).map_err(|kind| {
                let at = format!("({taxon}, {})", samples[col]);
                let msg = match kind {
                    CountError::Negative => format!("negative count at {at}"),
                    CountError::Invalid => {
                        format!("invalid count `{cell}` at {at} [line {line}, column {}]", col + 2)
                    }
                };
                Error::parse(source, msg)
            })?);
        }
        taxa.push(taxon);
    }
    if taxa.is_empty() {
        return Err(Error::parse(source, "no taxa rows"));
    }
    Ok(CountTable::new(taxa, samples, counts)?)
}

enum CountError {
    Negative,
    Invalid,
}

/// Non-negative integers; integral decimals such as `12.0` are accepted.
fn parse_count(cell: &str) -> std::result::Result<u64, CountError> {
    if let Ok(v) = cell.parse::<u64>() {
        return Ok(v);
    }
    match cell.parse::<f64>() {
        Ok(v) if v < 0.0 => Err(CountError::Negative),
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v < 2f64.powi(63) => Ok(v as u64),
        _ if cell.starts_with('-') && cell[1..].parse::<u64>().is_ok() => Err(CountError::Negative),
        _ => Err(CountError::Invalid),
    }
}

pub fn read_count_table_path(path: &Path, delimiter: Option<u8>) -> Result<CountTable> {
    let d = delimiter_for(path, delimiter);
    read_count_table(open(path)?, d, &path.display().to_string())
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan" | "." | "null")
}

/// Reads sample metadata: one row per sample, first column sample ids,
/// remaining columns named variables.
pub fn read_metadata<R: Read>(reader: R, delimiter: u8, source: &str) -> Result<MetadataTable> {
    let mut rdr = grid_reader(reader, delimiter);
    let header = next_record(&mut rdr, source)?.ok_or_else(|| Error::parse(source, "empty input"))?;
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    for (i, name) in names.iter().enumerate() {
        if name.is_empty() {
            return Err(Error::parse(source, format!("column {} has no name", i + 2)));
        }
        if names[..i].contains(name) {
            return Err(Error::parse(source, format!("duplicate variable `{name}`")));
        }
    }
    let mut ids = Vec::new();
    let mut columns: Vec<Vec<Option<String>>> = vec![Vec::new(); names.len()];
    while let Some(rec) = next_record(&mut rdr, source)? {
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != names.len() + 1 {
            return Err(Error::parse(
                source,
                format!("line {}: expected {} fields, found {}", line_of(&rec), names.len() + 1, rec.len()),
            ));
        }
        ids.push(rec[0].to_string());
        for (col, cell) in columns.iter_mut().zip(rec.iter().skip(1)) {
            col.push((!is_missing(cell)).then(|| cell.to_string()));
        }
    }
    if ids.is_empty() {
        return Err(Error::parse(source, "no sample rows"));
    }
    let vars = names.into_iter().zip(columns).map(|(n, c)| Variable::infer(n, c)).collect();
    Ok(MetadataTable::new(ids, vars)?)
}

pub fn read_metadata_path(path: &Path, delimiter: Option<u8>) -> Result<MetadataTable> {
    let d = delimiter_for(path, delimiter);
    read_metadata(open(path)?, d, &path.display().to_string())
}

/// Per-taxon results, as stored in the result TSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub taxon: String,
    pub coefficient: f64,
    pub coefficient_log2: f64,
    pub stderr: Option<f64>,
    pub t_stat: Option<f64>,
    pub df: f64,
    pub pvalue: Option<f64>,
    pub padj: Option<f64>,
    pub reject: bool,
    pub flags: Vec<String>,
}

impl From<&TaxonResult> for ResultRow {
    fn from(t: &TaxonResult) -> Self {
        ResultRow {
            taxon: t.taxon_id.clone(),
            coefficient: t.alpha_hat,
            coefficient_log2: t.alpha_hat / std::f64::consts::LN_2,
            stderr: t.stderr,
            t_stat: t.t_stat,
            df: t.df,
            pvalue: t.p,
            padj: t.p_adj,
            reject: t.reject,
            flags: t.flags.clone(),
        }
    }
}

pub const RESULT_COLUMNS: [&str; 10] =
    ["taxon", "coefficient", "coefficient_log2", "stderr", "t_stat", "df", "pvalue", "padj", "reject", "flags"];

/// Parsed result file: `# key: value` header lines plus rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultFile {
    pub header: Vec<(String, String)>,
    pub rows: Vec<ResultRow>,
}

impl ResultFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// The shift added by bias correction (0 when it was off).
    pub fn bias_shift(&self) -> Result<f64> {
        match self.get("bias") {
            None => Err(Error::parse("results", "missing `bias` header line")),
            Some(v) => Ok(parse_opt(v).map_err(|m| Error::parse("results", m))?.unwrap_or(0.0)),
        }
    }
}

/// Header lines describing a run.
pub fn result_header(result: &LindaResult) -> Vec<(String, String)> {
    let m = &result.meta;
    let mut h: Vec<(String, String)> = vec![
        ("method".into(), m.method.as_str().into()),
        ("n".into(), m.n.to_string()),
        ("m".into(), m.m.to_string()),
        ("d".into(), m.d.to_string()),
        ("df".into(), format_f64(m.df)),
        ("groups".into(), m.n_groups.map_or("NA".into(), |g| g.to_string())),
        ("rho_hat".into(), format_opt(m.rho_hat)),
        ("zero_handling".into(), m.zero_handling.as_str().into()),
        ("libsize_test_p".into(), format_opt(m.libsize_test_p)),
        ("bias".into(), format_opt(m.bias.as_ref().map(|b| b.alpha_tilde_shift))),
        ("bandwidth".into(), format_opt(m.bias.as_ref().and_then(|b| b.bandwidth))),
        ("mode".into(), format_opt(m.bias.as_ref().map(|b| b.mode_location))),
    ];
    if let Some(b) = &m.bias {
        h.push((
            "kde_grid".into(),
            format!("{},{},{}", format_f64(b.grid_lo), format_f64(b.grid_hi), b.grid_points),
        ));
    }
    h.push(("target_fdr".into(), format_f64(m.target_fdr)));
    for w in &m.warnings {
        h.push(("warning".into(), w.clone()));
    }
    h
}

/// Writes the result TSV. `extra` header lines follow the standard ones.
pub fn write_results<W: Write>(mut w: W, result: &LindaResult, extra: &[(String, String)]) -> std::io::Result<()> {
    writeln!(w, "# linda {}", env!("CARGO_PKG_VERSION"))?;
    for (k, v) in result_header(result).iter().chain(extra) {
        writeln!(w, "# {k}: {v}")?;
    }
    let rows: Vec<ResultRow> = result.taxa.iter().map(ResultRow::from).collect();
    write_rows(w, &rows)
}

fn write_rows<W: Write>(w: W, rows: &[ResultRow]) -> std::io::Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    wtr.write_record(RESULT_COLUMNS)?;
    for r in rows {
        wtr.write_record([
            r.taxon.clone(),
            format_f64(r.coefficient),
            format_f64(r.coefficient_log2),
            format_opt(r.stderr),
            format_opt(r.t_stat),
            format_f64(r.df),
            format_opt(r.pvalue),
            format_opt(r.padj),
            if r.reject { "1".into() } else { "0".into() },
            r.flags.join(","),
        ])?;
    }
    wtr.flush()
}

pub fn parse_results<R: Read>(mut reader: R, source: &str) -> Result<ResultFile> {
    let mut text = String::new();
    reader.read_to_string(&mut text).map_err(|e| Error::parse(source, e.to_string()))?;
    let mut header = Vec::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim_start().split_once(": ") {
                header.push((k.to_string(), v.to_string()));
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').has_headers(true).from_reader(body.as_bytes());
    let cols = rdr.headers().map_err(|e| Error::parse(source, e.to_string()))?.clone();
    if cols.iter().ne(RESULT_COLUMNS) {
        return Err(Error::parse(source, "unexpected result columns"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(source, e.to_string()))?;
        let line = line_of(&rec) + header.len() as u64 + 1;
        let bad = |m: String| Error::parse(source, format!("line {line}: {m}"));
        let num = |i: usize| -> Result<Option<f64>> { parse_opt(&rec[i]).map_err(bad) };
        let req = |i: usize| -> Result<f64> {
            num(i)?.ok_or_else(|| Error::parse(source, format!("line {line}: `{}` is required", RESULT_COLUMNS[i])))
        };
        rows.push(ResultRow {
            taxon: rec[0].to_string(),
            coefficient: req(1)?,
            coefficient_log2: req(2)?,
            stderr: num(3)?,
            t_stat: num(4)?,
            df: req(5)?,
            pvalue: num(6)?,
            padj: num(7)?,
            reject: match &rec[8] {
                "1" => true,
                "0" => false,
                other => return Err(bad(format!("reject must be 0 or 1, got `{other}`"))),
            },
            flags: if rec[9].is_empty() { Vec::new() } else { rec[9].split(',').map(str::to_string).collect() },
        });
    }
    Ok(ResultFile { header, rows })
}

pub fn read_results_path(path: &Path) -> Result<ResultFile> {
    parse_results(open(path)?, &path.display().to_string())
}

/// One line of simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub setting: String,
    pub design: String,
    pub m: usize,
    pub n: usize,
    pub gamma: f64,
    pub effect_index: usize,
    pub mu: f64,
    pub method: String,
    pub zero_handling: String,
    pub bias: bool,
    pub q: f64,
    pub replicates: usize,
    pub completed: usize,
    pub failures: usize,
    pub fdr: f64,
    pub tpr: f64,
    pub fdr_ci: f64,
}

pub const METRICS_COLUMNS: [&str; 17] = [
    "setting", "design", "m", "n", "gamma", "effect_index", "mu", "method", "zero_handling", "bias", "q",
    "replicates", "completed", "failures", "fdr", "tpr", "fdr_ci",
];

pub fn write_metrics<W: Write>(w: W, rows: &[MetricsRow]) -> std::io::Result<()> {
    let mut wtr = csv::WriterBuilder::new().delimiter(b'\t').from_writer(w);
    wtr.write_record(METRICS_COLUMNS)?;
    for r in rows {
        wtr.write_record([
            r.setting.clone(),
            r.design.clone(),
            r.m.to_string(),
            r.n.to_string(),
            format_f64(r.gamma),
            r.effect_index.to_string(),
            format_f64(r.mu),
            r.method.clone(),
            r.zero_handling.clone(),
            if r.bias { "on".into() } else { "off".into() },
            format_f64(r.q),
            r.replicates.to_string(),
            r.completed.to_string(),
            r.failures.to_string(),
            format_f64(r.fdr),
            format_f64(r.tpr),
            format_f64(r.fdr_ci),
        ])?;
    }
    wtr.flush()
}

pub fn parse_metrics<R: Read>(reader: R, source: &str) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(source, e.to_string()))?;
        let bad = |i: usize| Error::parse(source, format!("bad `{}` value `{}`", METRICS_COLUMNS[i], &rec[i]));
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(i));
        let real = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(i));
        out.push(MetricsRow {
            setting: rec[0].to_string(),
            design: rec[1].to_string(),
            m: int(2)?,
            n: int(3)?,
            gamma: real(4)?,
            effect_index: int(5)?,
            mu: real(6)?,
            method: rec[7].to_string(),
            zero_handling: rec[8].to_string(),
            bias: match &rec[9] {
                "on" => true,
                "off" => false,
                _ => return Err(bad(9)),
            },
            q: real(10)?,
            replicates: int(11)?,
            completed: int(12)?,
            failures: int(13)?,
            fdr: real(14)?,
            tpr: real(15)?,
            fdr_ci: real(16)?,
        });
    }
    Ok(out)
}

/// Reads simulation parameters: a header naming `beta0` and `sigma2`
/// columns, optionally `conf1` and `conf2`; other columns are ignored.
pub fn read_params<R: Read>(reader: R, delimiter: u8, source: &str) -> Result<TaxonParams> {
    let mut rdr = grid_reader(reader, delimiter);
    let header = next_record(&mut rdr, source)?.ok_or_else(|| Error::parse(source, "empty input"))?;
    let find = |name: &str| header.iter().position(|h| h.eq_ignore_ascii_case(name));
    let beta_col = find("beta0").ok_or_else(|| Error::parse(source, "missing `beta0` column"))?;
    let sigma_col = find("sigma2").ok_or_else(|| Error::parse(source, "missing `sigma2` column"))?;
    let conf_cols = match (find("conf1"), find("conf2")) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err(Error::parse(source, "confounder coefficients need both `conf1` and `conf2`")),
    };
    let (mut beta0, mut sigma2, mut conf) = (Vec::new(), Vec::new(), Vec::new());
    while let Some(rec) = next_record(&mut rdr, source)? {
        let line = line_of(&rec);
        if rec.len() != header.len() {
            return Err(Error::parse(
                source,
                format!("line {line}: expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let num = |i: usize| {
            rec[i].parse::<f64>().map_err(|_| {
                Error::parse(source, format!("line {line}: `{}` is not a number in column `{}`", &rec[i], &header[i]))
            })
        };
        beta0.push(num(beta_col)?);
        sigma2.push(num(sigma_col)?);
        if let Some((a, b)) = conf_cols {
            conf.push(num(a)?);
            conf.push(num(b)?);
        }
    }
    let m = beta0.len();
    let conf = conf_cols.map(|_| Matrix::from_vec(m, 2, conf));
    Ok(TaxonParams::new(beta0, sigma2, conf)?)
}

pub fn read_params_path(path: &Path, delimiter: Option<u8>) -> Result<TaxonParams> {
    let d = delimiter_for(path, delimiter);
    read_params(open(path)?, d, &path.display().to_string())
}
