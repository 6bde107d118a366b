use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const TOOL: &str = "spectra";

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything a run produced. Identical inputs and seeds give identical bytes
/// unless `--timing` adds the wall clock.
#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub inputs: Vec<InputFile>,
    pub parameters: BTreeMap<String, Value>,
    pub seeds: BTreeMap<String, u64>,
    pub verdict: String,
    pub falsified: bool,
    pub evidence: Value,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u128>,
}

impl ReportEnvelope {
    pub fn new(subcommand: &str) -> Self {
        ReportEnvelope {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            inputs: Vec::new(),
            parameters: BTreeMap::new(),
            seeds: BTreeMap::new(),
            verdict: String::new(),
            falsified: false,
            evidence: Value::Null,
            artifacts: Vec::new(),
            wall_clock_ms: None,
        }
    }

    /// Reads an input file, recording its hash.
    pub fn read_input(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        self.inputs.push(InputFile {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        String::from_utf8(bytes).map_err(|_| CliError::Usage(format!("{} is not UTF-8", path.display())))
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn evidence(&mut self, value: impl Serialize) -> Result<(), CliError> {
        self.evidence = serde_json::to_value(value)?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Where reports and CSV files go.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::Io(d.clone(), e))?;
        }
        Ok(Sink { dir })
    }

    /// Writes a CSV with `#`-prefixed comment lines above the header. Without
    /// an output directory nothing is written.
    pub fn csv(
        &self,
        env: &mut ReportEnvelope,
        name: &str,
        comments: &[String],
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        let mut file = fs::File::create(&path).map_err(|e| CliError::Io(path.clone(), e))?;
        for c in comments {
            writeln!(file, "# {c}").map_err(|e| CliError::Io(path.clone(), e))?;
        }
        let mut w = csv::Writer::from_writer(file);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| CliError::Io(path.clone(), e))?;
        env.artifacts.push(name.to_string());
        Ok(())
    }

    /// Prints the envelope and, with an output directory, saves it as
    /// `<subcommand>.json`.
    pub fn finish(&self, env: &ReportEnvelope) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(env)?;
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.json", env.subcommand.replace(' ', "-")));
            fs::write(&path, format!("{text}\n")).map_err(|e| CliError::Io(path, e))?;
        }
        println!("{text}");
        Ok(())
    }
}

pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}
