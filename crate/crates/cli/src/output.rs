//! Provenance headers, output files and instance discovery.

use std::fs;
use std::path::{Path, PathBuf};

use falqon_core::graph::GraphInstance;
use falqon_core::{Error, Result};

/// Comment lines identifying the tool, the command and its full argument set.
#[derive(Debug, Clone)]
pub struct Provenance {
    lines: Vec<String>,
}

impl Provenance {
    pub fn new(command: &str, args: &impl serde::Serialize) -> Result<Self> {
        Ok(Self {
            lines: vec![
                format!("falqon {} {command}", env!("CARGO_PKG_VERSION")),
                format!("config: {}", serde_json::to_string(args)?),
            ],
        })
    }

    /// A copy with one more comment line.
    pub fn with(&self, line: impl Into<String>) -> Self {
        let mut lines = self.lines.clone();
        lines.push(line.into());
        Self { lines }
    }

    /// The comment lines without the `# ` prefix, as curve files take them.
    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    /// The lines as a `# `-prefixed block.
    pub fn block(&self) -> String {
        self.lines.iter().map(|l| format!("# {l}\n")).collect()
    }
}

/// Output directory handle; creates the directory on first use.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `body` preceded by the provenance block.
    pub fn write_with_header(&self, name: &str, prov: &Provenance, body: &str) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, prov.block() + body)?;
        Ok(path)
    }
}

/// An instance file and the stem its outputs are named after.
#[derive(Debug, Clone)]
pub struct InstanceFile {
    pub stem: String,
    pub path: PathBuf,
}

impl InstanceFile {
    pub fn read(&self) -> Result<GraphInstance> {
        GraphInstance::read(&self.path).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", self.path.display())),
            other => other,
        })
    }
}

fn instance_stem(name: &str) -> Option<&str> {
    if name == "manifest.json" || name.ends_with(".scalars.json") || name.contains("provenance") {
        return None;
    }
    name.strip_suffix(".instance.json").or_else(|| name.strip_suffix(".json"))
}

/// Expands files and directories into instance files sorted by stem.
///
/// Inside a directory, `*.json` files count as instances except dataset
/// manifests and scalar sidecars; `NAME.instance.json` and `NAME.json` both
/// get the stem `NAME`.
pub fn collect_instances(inputs: &[PathBuf]) -> Result<Vec<InstanceFile>> {
    let mut found = Vec::new();
    for input in inputs {
        if input.is_dir() {
            for entry in fs::read_dir(input)? {
                let path = entry?.path();
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                if let Some(stem) = instance_stem(name) {
                    found.push(InstanceFile { stem: stem.to_string(), path: path.clone() });
                }
            }
        } else if input.is_file() {
            let name = input.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            let stem = name.strip_suffix(".instance.json").or_else(|| name.strip_suffix(".json")).unwrap_or(name);
            found.push(InstanceFile { stem: stem.to_string(), path: input.clone() });
        } else {
            return Err(missing(input));
        }
    }
    found.sort_by(|a, b| a.stem.cmp(&b.stem));
    if let Some(w) = found.windows(2).find(|w| w[0].stem == w[1].stem) {
        return Err(Error::InvalidArgument(format!("two inputs share the name {:?}", w[0].stem)));
    }
    if found.is_empty() {
        return Err(Error::InvalidArgument("no instance files found".into()));
    }
    Ok(found)
}

fn missing(path: &Path) -> Error {
    Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("no such file or directory: {}", path.display())))
}

/// Locates the curve for `stem` when `source` is a directory; a file is used as is.
pub fn curve_path(source: &Path, stem: &str, suffixes: &[&str]) -> Result<PathBuf> {
    if source.is_file() {
        return Ok(source.to_path_buf());
    }
    if !source.is_dir() {
        return Err(missing(source));
    }
    suffixes
        .iter()
        .map(|s| source.join(format!("{stem}{s}")))
        .find(|p| p.is_file())
        .ok_or_else(|| Error::InvalidArgument(format!("no curve for {stem:?} in {}", source.display())))
}
