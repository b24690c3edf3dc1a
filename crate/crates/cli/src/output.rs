//! Run directory: append-only CSV files, numbered field files and a
//! manifest with one `[[runs]]` entry per invocation.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use mvmc_core::Field;

use crate::config::ExperimentConfig;
use crate::Failure;

pub const MANIFEST: &str = "manifest.toml";

pub struct RunDir {
    root: PathBuf,
    /// `r000`, `r001`, … in invocation order.
    pub id: String,
    written: Vec<String>,
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    id: &'a str,
    command: &'a str,
    version: &'a str,
    status: &'a str,
    outputs: &'a [String],
    summary: &'a [String],
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct ManifestChunk<'a> {
    runs: [ManifestEntry<'a>; 1],
}

impl RunDir {
    /// Opens (and creates) `root`; the run id counts the entries already
    /// recorded in its manifest.
    pub fn open(root: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(root)?;
        let previous = match fs::read_to_string(root.join(MANIFEST)) {
            Ok(text) => text.lines().filter(|l| l.trim() == "[[runs]]").count(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => 0,
            Err(e) => return Err(e.into()),
        };
        Ok(Self { root: root.to_path_buf(), id: format!("r{previous:03}"), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn note(&mut self, name: &str) {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
    }

    /// Appends rows to `name`, writing `header` first if the file is new.
    /// An existing file must carry the same header.
    pub fn append_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        let path = self.path(name);
        let fresh = !path.exists() || fs::metadata(&path)?.len() == 0;
        if !fresh {
            let mut reader = csv::Reader::from_path(&path)?;
            let existing: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
            if existing != header {
                return Err(Failure::Runtime(format!(
                    "{} has columns {existing:?}, expected {header:?}",
                    path.display()
                )));
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        if fresh {
            w.write_record(header)?;
        }
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
        self.note(name);
        Ok(())
    }

    /// Writes `<id>-<name>.field`.
    pub fn write_field(&mut self, name: &str, field: &Field) -> Result<(), Failure> {
        let file_name = format!("{}-{name}.field", self.id);
        let mut out = BufWriter::new(File::create(self.path(&file_name))?);
        field.write_to(&mut out)?;
        out.flush()?;
        self.note(&file_name);
        Ok(())
    }

    /// Appends this run's manifest entry.
    pub fn finish(&self, command: &str, status: &str, config: &ExperimentConfig, summary: &[String]) -> Result<(), Failure> {
        let chunk = ManifestChunk {
            runs: [ManifestEntry {
                id: &self.id,
                command,
                version: env!("CARGO_PKG_VERSION"),
                status,
                outputs: &self.written,
                summary,
                config,
            }],
        };
        let text = toml::to_string(&chunk).map_err(|e| Failure::Runtime(e.to_string()))?;
        let mut file = OpenOptions::new().create(true).append(true).open(self.path(MANIFEST))?;
        writeln!(file, "{text}")?;
        Ok(())
    }
}

/// Shortest round-trip text of a float.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// The field file of the most recent run in `dir` that wrote `<id>-<name>.field`.
pub fn latest_field(dir: &Path, name: &str) -> Result<(String, Field), Failure> {
    let suffix = format!("-{name}.field");
    let mut best: Option<String> = None;
    for entry in fs::read_dir(dir)? {
        let file = entry?.file_name().to_string_lossy().into_owned();
        if file.starts_with('r') && file.ends_with(&suffix) && best.as_ref().map_or(true, |b| &file > b) {
            best = Some(file);
        }
    }
    let file = best.ok_or_else(|| Failure::Config(format!("no *{suffix} file in {}", dir.display())))?;
    let reader = std::io::BufReader::new(File::open(dir.join(&file))?);
    Ok((file.trim_end_matches(&suffix).to_string(), Field::read_from(reader)?))
}

/// Rows of a CSV file as string records keyed by header.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), Failure> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
    let header = reader.headers()?.iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

/// Column index of `name`, or a config error naming the file.
pub fn column(header: &[String], name: &str, path: &Path) -> Result<usize, Failure> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Failure::Config(format!("{} has no column {name}", path.display())))
}
