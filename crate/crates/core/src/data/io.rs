//! Record, annotation and header file formats.
//!
//! A record is a pair of files: a `key=value` text header and a signal
//! payload that is either one decimal per line (`csv`) or raw little-endian
//! 32-bit floats (`f32le`).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::signal::Record;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Csv,
    F32Le,
}

impl SampleFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SampleFormat::Csv => "csv",
            SampleFormat::F32Le => "f32le",
        }
    }
}

impl FromStr for SampleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(SampleFormat::Csv),
            "f32le" => Ok(SampleFormat::F32Le),
            other => Err(Error::Config(format!("unknown sample format '{other}'"))),
        }
    }
}

impl fmt::Display for SampleFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

/// Parses `key=value` lines; blank lines and `#` comments are ignored.
/// Keys keep their first-seen order in the returned vector.
pub fn parse_key_values(text: &str, origin: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(origin, i + 1, format!("expected key=value, got '{line}'")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::parse(origin, i + 1, "empty key"));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::parse(origin, i + 1, format!("duplicate key '{k}'")));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_id: String,
    pub lead_name: String,
    pub sampling_rate: f64,
    pub sample_format: SampleFormat,
    pub num_samples: usize,
    /// Any further keys, e.g. a record-level `label`.
    pub extra: BTreeMap<String, String>,
}

impl RecordHeader {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut map: BTreeMap<String, String> = parse_key_values(text, origin)?.into_iter().collect();
        let mut take =
            |key: &str| map.remove(key).ok_or_else(|| Error::parse(origin, 0, format!("missing header key '{key}'")));
        let record_id = take("record_id")?;
        let lead_name = take("lead_name")?;
        let rate = take("sampling_rate")?;
        let format = take("sample_format")?;
        let count = take("num_samples")?;
        let sampling_rate: f64 =
            rate.parse().map_err(|_| Error::parse(origin, 0, format!("bad sampling_rate '{rate}'")))?;
        if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
            return Err(Error::parse(origin, 0, format!("sampling_rate {rate} must be positive")));
        }
        let num_samples = count.parse().map_err(|_| Error::parse(origin, 0, format!("bad num_samples '{count}'")))?;
        Ok(RecordHeader {
            record_id,
            lead_name,
            sampling_rate,
            sample_format: format.parse()?,
            num_samples,
            extra: map,
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "record_id={}\nlead_name={}\nsampling_rate={}\nsample_format={}\nnum_samples={}\n",
            self.record_id, self.lead_name, self.sampling_rate, self.sample_format, self.num_samples
        );
        for (k, v) in &self.extra {
            s.push_str(&format!("{k}={v}\n"));
        }
        s
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_header(path: &Path) -> Result<RecordHeader> {
    RecordHeader::parse(&read_text(path)?, &path.display().to_string())
}

fn parse_samples(bytes: &[u8], format: SampleFormat, origin: &Path) -> Result<Vec<f64>> {
    let name = origin.display().to_string();
    let samples = match format {
        SampleFormat::F32Le => {
            if !bytes.len().is_multiple_of(4) {
                return Err(Error::parse(
                    &name,
                    0,
                    format!("{} bytes is not a whole number of f32 samples", bytes.len()),
                ));
            }
            bytes.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))).collect()
        }
        SampleFormat::Csv => {
            let text = std::str::from_utf8(bytes).map_err(|_| Error::parse(&name, 0, "not UTF-8"))?;
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() {
                    continue;
                }
                let v: f64 =
                    line.parse().map_err(|_| Error::parse(&name, i + 1, format!("unparsable sample '{line}'")))?;
                out.push(v);
            }
            out
        }
    };
    if samples.is_empty() {
        return Err(Error::Empty(format!("{name} contains no samples")));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::parse(&name, i + 1, "non-finite sample"));
    }
    Ok(samples)
}

pub fn load_record(signal_path: &Path, header_path: &Path) -> Result<Record> {
    let header = read_header(header_path)?;
    let samples = parse_samples(&read(signal_path)?, header.sample_format, signal_path)?;
    if samples.len() != header.num_samples {
        return Err(Error::parse(
            signal_path.display(),
            0,
            format!("header declares {} samples, file holds {}", header.num_samples, samples.len()),
        ));
    }
    Record::new(header.record_id, header.lead_name, header.sampling_rate, samples)
}

/// Paths of the signal and header file for a record id inside `dir`, in
/// the argument order of [`load_record`].
pub fn record_paths(dir: &Path, record_id: &str, format: SampleFormat) -> (PathBuf, PathBuf) {
    (dir.join(format!("{record_id}.{}", format.extension())), dir.join(format!("{record_id}.hdr")))
}

pub fn encode_samples(samples: &[f64], format: SampleFormat) -> Vec<u8> {
    match format {
        SampleFormat::F32Le => samples.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect(),
        SampleFormat::Csv => {
            let mut s = String::with_capacity(samples.len() * 12);
            for v in samples {
                s.push_str(&format!("{v}\n"));
            }
            s.into_bytes()
        }
    }
}

/// Writes the payload and `{record_id}.hdr` into `dir`; returns (signal, header) paths.
pub fn write_record(
    record: &Record,
    dir: &Path,
    format: SampleFormat,
    extra: &BTreeMap<String, String>,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let header = RecordHeader {
        record_id: record.record_id.clone(),
        lead_name: record.lead_name.clone(),
        sampling_rate: record.sampling_rate,
        sample_format: format,
        num_samples: record.len(),
        extra: extra.clone(),
    };
    let (sig, hdr) = record_paths(dir, &record.record_id, format);
    fs::write(&hdr, header.to_text()).map_err(|e| Error::io(&hdr, e))?;
    fs::write(&sig, encode_samples(&record.samples, format)).map_err(|e| Error::io(&sig, e))?;
    Ok((sig, hdr))
}

/// One beat annotation at an R-peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub sample_index: usize,
    pub symbol: char,
}

pub fn parse_annotations(text: &str, origin: &str) -> Result<Vec<Annotation>> {
    let mut out: Vec<Annotation> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("sample_index")) {
            continue;
        }
        let malformed = || Error::parse(origin, i + 1, format!("expected 'sample_index,symbol', got '{line}'"));
        let (idx, sym) = line.split_once(',').ok_or_else(malformed)?;
        let sample_index: usize = idx.trim().parse().map_err(|_| malformed())?;
        let mut chars = sym.trim().chars();
        let symbol = chars.next().ok_or_else(malformed)?;
        if chars.next().is_some() {
            return Err(malformed());
        }
        if let Some(prev) = out.last() {
            if sample_index <= prev.sample_index {
                return Err(Error::parse(
                    origin,
                    i + 1,
                    format!("sample index {sample_index} does not increase (previous {})", prev.sample_index),
                ));
            }
        }
        out.push(Annotation { sample_index, symbol });
    }
    Ok(out)
}

pub fn load_annotations(path: &Path) -> Result<Vec<Annotation>> {
    parse_annotations(&read_text(path)?, &path.display().to_string())
}

pub fn write_annotations(annotations: &[Annotation], path: &Path) -> Result<()> {
    let mut s = String::new();
    for a in annotations {
        s.push_str(&format!("{},{}\n", a.sample_index, a.symbol));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotation_lines() {
        let a = parse_annotations("77,N\n370,V", "t").unwrap();
        assert_eq!(
            a,
            vec![Annotation { sample_index: 77, symbol: 'N' }, Annotation { sample_index: 370, symbol: 'V' }]
        );
        assert!(parse_annotations("", "t").unwrap().is_empty());
    }

    #[test]
    fn malformed_annotation_names_line() {
        let err = parse_annotations("1,N\nabc,N\n", "ann.csv").unwrap_err();
        assert!(err.to_string().contains("ann.csv:2"), "{err}");
        assert!(parse_annotations("5,N\n5,V\n", "t").is_err());
        assert!(parse_annotations("9,N\n5,V\n", "t").is_err());
    }

    #[test]
    fn header_requires_all_keys() {
        let ok = "record_id=100\nlead_name=MLII\nsampling_rate=360\nsample_format=csv\nnum_samples=3\nlabel=0\n";
        let h = RecordHeader::parse(ok, "h").unwrap();
        assert_eq!(h.sampling_rate, 360.0);
        assert_eq!(h.extra.get("label").map(String::as_str), Some("0"));
        assert_eq!(RecordHeader::parse(&h.to_text(), "h").unwrap(), h);

        let missing = "record_id=100\nlead_name=MLII\nsample_format=csv\nnum_samples=3\n";
        let err = RecordHeader::parse(missing, "h").unwrap_err();
        assert!(err.to_string().contains("sampling_rate"));
    }

    #[test]
    fn csv_samples_reject_garbage() {
        let err = parse_samples(b"1.0\n2.5\nxyz\n", SampleFormat::Csv, Path::new("s.csv")).unwrap_err();
        assert!(err.to_string().contains("s.csv:3"));
        assert!(matches!(parse_samples(b"", SampleFormat::F32Le, Path::new("s")), Err(Error::Empty(_))));
    }
}
