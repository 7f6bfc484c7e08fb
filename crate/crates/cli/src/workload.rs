//! Workload sources: Matrix Market files or seeded generators.

use std::path::{Path, PathBuf};

use overbook_core::generate::{generate, GeneratorSpec};
use overbook_core::SparseMatrix;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::mtx;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    File(PathBuf),
    Generator(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workload {
    pub name: String,
    #[serde(flatten)]
    pub source: Source,
}

impl Workload {
    /// Parse a command-line workload: a generator shorthand such as
    /// `banded:4000x1000:250:0.03:0.001` (optionally `@seed`), or a path.
    pub fn parse(arg: &str) -> Result<Self, CliError> {
        let source = match parse_generator(arg)? {
            Some(spec) => Source::Generator(spec),
            None => Source::File(PathBuf::from(arg)),
        };
        Ok(Self { name: arg.to_string(), source })
    }

    pub fn load(&self, data_dir: Option<&Path>) -> Result<SparseMatrix, CliError> {
        match &self.source {
            Source::Generator(spec) => {
                generate(spec).map_err(|e| CliError::core(format!("workload {}", self.name), e))
            }
            Source::File(path) => mtx::read_mtx(&resolve(path, data_dir)?),
        }
    }
}

/// Existing paths win; otherwise relative paths are looked up under the
/// data directory.
pub fn resolve(path: &Path, data_dir: Option<&Path>) -> Result<PathBuf, CliError> {
    if path.exists() {
        return Ok(path.to_path_buf());
    }
    if let Some(dir) = data_dir.filter(|_| path.is_relative()) {
        let joined = dir.join(path);
        if joined.exists() {
            return Ok(joined);
        }
    }
    Err(CliError::WorkloadNotFound(path.display().to_string()))
}

fn parse_generator(arg: &str) -> Result<Option<GeneratorSpec>, CliError> {
    let Some((kind, rest)) = arg.split_once(':') else {
        return Ok(None);
    };
    if !matches!(kind, "uniform" | "banded" | "power-law") {
        return Ok(None);
    }
    let bad = |why: &str| CliError::InvalidSpec(format!("generator {arg:?}: {why}"));
    let (body, seed) = match rest.rsplit_once('@') {
        Some((body, seed)) => (body, seed.parse::<u64>().map_err(|_| bad("seed must be an integer"))?),
        None => (rest, 0),
    };
    let mut parts = body.split(':');
    let dims = parts.next().unwrap_or_default();
    let (rows, cols) = dims
        .split_once('x')
        .and_then(|(r, c)| Some((r.parse::<usize>().ok()?, c.parse::<usize>().ok()?)))
        .ok_or_else(|| bad("expected ROWSxCOLS"))?;
    let nums: Vec<f64> = parts
        .map(|p| p.parse::<f64>().map_err(|_| bad("parameters must be numbers")))
        .collect::<Result<_, _>>()?;
    let spec = match (kind, nums.as_slice()) {
        ("uniform", &[d]) => GeneratorSpec::uniform(rows, cols, d, seed),
        ("banded", &[hw, inb, off]) if hw >= 0.0 && hw.fract() == 0.0 => {
            GeneratorSpec::banded(rows, cols, hw as usize, inb, off, seed)
        }
        ("power-law", &[d, exp]) => GeneratorSpec::power_law(rows, cols, d, exp, seed),
        ("uniform", _) => return Err(bad("expected uniform:RxC:DENSITY")),
        ("banded", _) => return Err(bad("expected banded:RxC:HALF_WIDTH:IN_BAND:OFF_BAND")),
        _ => return Err(bad("expected power-law:RxC:DENSITY:EXPONENT")),
    };
    Ok(Some(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_shorthand() {
        let w = Workload::parse("banded:40x30:3:0.5:0.01@7").unwrap();
        assert_eq!(w.source, Source::Generator(GeneratorSpec::banded(40, 30, 3, 0.5, 0.01, 7)));
        let w = Workload::parse("uniform:10x10:0.2").unwrap();
        assert_eq!(w.source, Source::Generator(GeneratorSpec::uniform(10, 10, 0.2, 0)));
        assert!(Workload::parse("power-law:10x10:0.2").is_err());
        assert!(Workload::parse("uniform:10by10:0.2").is_err());
        assert_eq!(Workload::parse("data/m.mtx").unwrap().source, Source::File("data/m.mtx".into()));
    }

    #[test]
    fn missing_file_is_reported() {
        let w = Workload::parse("definitely/not/here.mtx").unwrap();
        assert!(matches!(w.load(None), Err(CliError::WorkloadNotFound(_))));
    }
}
