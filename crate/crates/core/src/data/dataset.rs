use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::BeatWindow;

use super::io::{encode_samples, parse_key_values, SampleFormat};

/// Labelled beat windows of uniform length.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub windows: Vec<BeatWindow>,
    pub class_names: Vec<String>,
}

pub const WINDOWS_FILE: &str = "windows.f32le";
pub const LABELS_FILE: &str = "labels.csv";
pub const META_FILE: &str = "dataset.cfg";

impl Dataset {
    pub fn new(windows: Vec<BeatWindow>, class_names: Vec<String>) -> Result<Self> {
        let ds = Dataset { windows, class_names };
        ds.validate()?;
        Ok(ds)
    }

    pub fn empty_like(&self) -> Self {
        Dataset { windows: Vec::new(), class_names: self.class_names.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_names.is_empty() {
            return Err(Error::Config("dataset has no classes".into()));
        }
        let len = self.window_len();
        for (i, w) in self.windows.iter().enumerate() {
            if w.label >= self.num_classes() {
                return Err(Error::Config(format!(
                    "window {i} has label {} but only {} classes exist",
                    w.label,
                    self.num_classes()
                )));
            }
            if Some(w.samples.len()) != len {
                return Err(Error::Shape(format!(
                    "window {i} has {} samples, expected {}",
                    w.samples.len(),
                    len.unwrap_or(0)
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn window_len(&self) -> Option<usize> {
        self.windows.first().map(|w| w.samples.len())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for w in &self.windows {
            counts[w.label] += 1;
        }
        counts
    }

    /// Indices of the windows carrying `label`, in dataset order.
    pub fn indices_of(&self, label: usize) -> Vec<usize> {
        self.windows.iter().enumerate().filter(|(_, w)| w.label == label).map(|(i, _)| i).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            windows: indices.iter().map(|&i| self.windows[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }

    /// Writes `windows.f32le`, `labels.csv` and `dataset.cfg` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let window_len = self.window_len().unwrap_or(0);
        let mut payload = Vec::with_capacity(self.len() * window_len * 4);
        let mut labels = String::from("label,record_id,r_peak_offset\n");
        for w in &self.windows {
            payload.extend(encode_samples(&w.samples, SampleFormat::F32Le));
            labels.push_str(&format!("{},{},{}\n", w.label, w.source_record, w.r_peak_offset));
        }
        let meta = format!("window_len={window_len}\nclass_names={}\n", self.class_names.join(","));
        for (name, bytes) in
            [(WINDOWS_FILE, payload), (LABELS_FILE, labels.into_bytes()), (META_FILE, meta.into_bytes())]
        {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(META_FILE);
        let meta_text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta = parse_key_values(&meta_text, &meta_path.display().to_string())?;
        let get = |key: &str| {
            meta.iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::parse(meta_path.display(), 0, format!("missing key '{key}'")))
        };
        let window_len: usize =
            get("window_len")?.parse().map_err(|_| Error::parse(meta_path.display(), 0, "bad window_len"))?;
        let class_names: Vec<String> = get("class_names")?.split(',').map(|s| s.trim().to_string()).collect();

        let labels_path = dir.join(LABELS_FILE);
        let labels_text = fs::read_to_string(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
        let windows_path = dir.join(WINDOWS_FILE);
        let payload = fs::read(&windows_path).map_err(|e| Error::io(&windows_path, e))?;

        let rows: Vec<(usize, &str)> =
            labels_text.lines().enumerate().skip(1).filter(|(_, l)| !l.trim().is_empty()).collect();
        if payload.len() != rows.len() * window_len * 4 {
            return Err(Error::parse(
                windows_path.display(),
                0,
                format!("{} bytes do not hold {} windows of {window_len} samples", payload.len(), rows.len()),
            ));
        }
        let mut windows = Vec::with_capacity(rows.len());
        for (k, (line_no, line)) in rows.into_iter().enumerate() {
            let bad = || Error::parse(labels_path.display(), line_no + 1, format!("malformed row '{line}'"));
            let mut parts = line.split(',');
            let label: usize = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
            let source_record = parts.next().ok_or_else(bad)?.trim().to_string();
            let r_peak_offset: usize = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
            let bytes = &payload[k * window_len * 4..(k + 1) * window_len * 4];
            let samples =
                bytes.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]]))).collect();
            windows.push(BeatWindow { samples, r_peak_offset, label, source_record });
        }
        Dataset::new(windows, class_names)
    }
}
