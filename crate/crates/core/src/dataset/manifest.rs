//! JSON-lines dataset manifest.
//!
//! One [`DatasetRecord`] per line. Field names:
//!
//! | field    | meaning                                              |
//! |----------|------------------------------------------------------|
//! | `id`     | record index, unique within a dataset                |
//! | `file`   | signal path relative to the manifest directory       |
//! | `split`  | `train`, `val` or `test`                             |
//! | `M`      | subharmonic period label                             |
//! | `fo`     | fundamental frequency (Hz)                           |
//! | `shr_db` | ground-truth SHR (dB), present only when `M > 1`      |
//! | `seed`   | seed the parameter record was drawn from             |
//! | `attempt`| number of replaced draws before this one succeeded   |
//! | `params` | full synthesis parameter record                      |

use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SynthParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::Dataset(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: u64,
    pub file: PathBuf,
    pub split: Split,
    #[serde(rename = "M")]
    pub m: u32,
    pub fo: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shr_db: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub attempt: u32,
    pub params: SynthParams,
}

/// Records plus the directory their relative file paths resolve against.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub records: Vec<DatasetRecord>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, records: Vec<DatasetRecord>) -> Self {
        DatasetManifest {
            root: root.into(),
            records,
        }
    }

    pub fn path_of(&self, rec: &DatasetRecord) -> PathBuf {
        self.root.join(&rec.file)
    }

    pub fn split(&self, split: Split) -> Vec<&DatasetRecord> {
        self.records.iter().filter(|r| r.split == split).collect()
    }

    /// Serializes the records, one JSON object per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(root: impl Into<PathBuf>, text: &str) -> Result<Self> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<DatasetRecord>, _>>()?;
        Ok(DatasetManifest::new(root, records))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a manifest; file paths resolve against the manifest's directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut records = Vec::new();
        for (n, line) in std::io::BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = serde_json::from_str(&line).map_err(|e| {
                Error::Dataset(format!("{}:{}: {e}", path.display(), n + 1))
            })?;
            records.push(rec);
        }
        Ok(DatasetManifest::new(root, records))
    }
}
