use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::LabError;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:?}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// RFC-4180 writer with LF record terminators.
pub struct Table {
    w: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, LabError> {
        let file = BufWriter::new(File::create(path)?);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        w.write_record(header)?;
        Ok(Self { w })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), LabError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), LabError> {
        self.w.flush()?;
        Ok(())
    }
}

/// Newline-delimited JSON run log.
pub struct EventLog {
    w: BufWriter<File>,
}

impl EventLog {
    pub fn create(path: &Path) -> Result<Self, LabError> {
        Ok(Self {
            w: BufWriter::new(File::create(path)?),
        })
    }

    pub fn emit(&mut self, event: &str, body: Value) -> Result<(), LabError> {
        let mut obj = Map::new();
        obj.insert("event".into(), json!(event));
        if let Value::Object(fields) = body {
            obj.extend(fields);
        }
        serde_json::to_writer(&mut self.w, &Value::Object(obj))?;
        self.w.write_all(b"\n")?;
        self.w.flush()?;
        Ok(())
    }

    pub fn start(&mut self, cfg: &RunConfig) -> Result<(), LabError> {
        let config: Map<String, Value> = cfg
            .entries()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        self.emit(
            "start",
            json!({ "command": cfg.command.name(), "config": config }),
        )
    }
}

/// Output paths for one run: `<out>/<command>.csv` and `<out>/<command>.ndjson`.
pub struct Outputs {
    pub csv: PathBuf,
    pub log: PathBuf,
}

impl Outputs {
    pub fn new(dir: &Path, cfg: &RunConfig) -> Result<Self, LabError> {
        std::fs::create_dir_all(dir)?;
        let stem = cfg.command.name();
        Ok(Self {
            csv: dir.join(format!("{stem}.csv")),
            log: dir.join(format!("{stem}.ndjson")),
        })
    }
}
