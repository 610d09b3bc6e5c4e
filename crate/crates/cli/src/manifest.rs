//! On-disk system description: a TOML manifest pointing at Matrix Market files.

use std::fs;
use std::path::{Path, PathBuf};

use hankelred::io::{self, Layout};
use hankelred::DescriptorSystem;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemManifest {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// Index hint; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub files: Files,
}

/// Paths relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Files {
    pub e: PathBuf,
    pub a: PathBuf,
    pub b: PathBuf,
    pub c: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<PathBuf>,
}

fn format_error(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Format(format!("{}: {msg}", path.display()))
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn load(path: &Path) -> Result<DMatrix<f64>, CliError> {
    io::load_matrix(path).map_err(|e| match e {
        io::MmError::Io { .. } => CliError::Io(e.to_string()),
        io::MmError::Format { .. } => CliError::Format(e.to_string()),
    })
}

fn check_shape(path: &Path, m: &DMatrix<f64>, shape: (usize, usize)) -> Result<(), CliError> {
    if m.shape() != shape {
        return Err(format_error(path, format!("expected a {}x{} matrix, found {}x{}", shape.0, shape.1, m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Reads the manifest and every matrix it references.
pub fn load_system(path: &Path) -> Result<(SystemManifest, DescriptorSystem<f64>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let man: SystemManifest = toml::from_str(&text).map_err(|e| format_error(path, e))?;
    if man.schema != SCHEMA {
        return Err(format_error(path, format!("unsupported schema {} (expected {SCHEMA})", man.schema)));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let (n, m, p) = (man.n, man.m, man.p);
    let mut mats = Vec::new();
    for (rel, shape) in [(&man.files.e, (n, n)), (&man.files.a, (n, n)), (&man.files.b, (n, m)), (&man.files.c, (p, n))] {
        let full = dir.join(rel);
        let mat = load(&full)?;
        check_shape(&full, &mat, shape)?;
        mats.push(mat);
    }
    let d = match &man.files.d {
        Some(rel) => {
            let full = dir.join(rel);
            let mat = load(&full)?;
            check_shape(&full, &mat, (p, m))?;
            mat
        }
        None => DMatrix::zeros(p, m),
    };
    let c = mats.pop().unwrap();
    let b = mats.pop().unwrap();
    let a = mats.pop().unwrap();
    let e = mats.pop().unwrap();
    let sys = DescriptorSystem::new(e, a, b, c, d).map_err(|e| format_error(path, e))?;
    Ok((man, sys))
}

/// Writes `system.toml` plus `E.mtx` ... `D.mtx` into `dir`; returns the
/// manifest path.
pub fn save_system(dir: &Path, sys: &DescriptorSystem<f64>, name: Option<String>, index: Option<usize>) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let files = Files {
        e: "E.mtx".into(),
        a: "A.mtx".into(),
        b: "B.mtx".into(),
        c: "C.mtx".into(),
        d: Some("D.mtx".into()),
    };
    for (rel, mat) in [(&files.e, &sys.e), (&files.a, &sys.a), (&files.b, &sys.b), (&files.c, &sys.c)] {
        io::save_matrix(mat, Layout::Array, &dir.join(rel)).map_err(|e| CliError::Io(e.to_string()))?;
    }
    io::save_matrix(&sys.d, Layout::Array, &dir.join(files.d.as_ref().unwrap())).map_err(|e| CliError::Io(e.to_string()))?;
    let man = SystemManifest { schema: SCHEMA, name, n: sys.n(), m: sys.m(), p: sys.p(), index, files };
    let path = dir.join("system.toml");
    let text = toml::to_string(&man).map_err(|e| CliError::Format(e.to_string()))?;
    fs::write(&path, text).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let sys = hankelred::bench::gen_random_stable::<f64>(5, 2, 3, 9).unwrap();
        let path = save_system(dir.path(), &sys, Some("r".into()), None).unwrap();
        let (man, back) = load_system(&path).unwrap();
        assert_eq!((man.n, man.m, man.p), (5, 2, 3));
        for (x, y) in [(&sys.e, &back.e), (&sys.a, &back.a), (&sys.b, &back.b), (&sys.c, &back.c), (&sys.d, &back.d)] {
            assert!(x.iter().zip(y.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }

    #[test]
    fn missing_d_means_zero() {
        let dir = tempfile::tempdir().unwrap();
        let sys = hankelred::bench::gen_random_stable::<f64>(2, 1, 1, 1).unwrap();
        let path = save_system(dir.path(), &sys, None, None).unwrap();
        let text = fs::read_to_string(&path).unwrap().replace("d = \"D.mtx\"\n", "");
        fs::write(&path, text).unwrap();
        let (man, back) = load_system(&path).unwrap();
        assert!(man.files.d.is_none());
        assert_eq!(back.d, DMatrix::zeros(1, 1));
    }

    #[test]
    fn rejects_bad_schema_and_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let sys = hankelred::bench::gen_random_stable::<f64>(3, 1, 1, 2).unwrap();
        let path = save_system(dir.path(), &sys, None, None).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        fs::write(&path, text.replace("schema = 1", "schema = 7")).unwrap();
        assert!(matches!(load_system(&path), Err(CliError::Format(_))));
        fs::write(&path, text.replace("n = 3", "n = 4")).unwrap();
        assert!(matches!(load_system(&path), Err(CliError::Format(_))));
        fs::write(&path, text.replace("A.mtx", "missing.mtx")).unwrap();
        assert!(matches!(load_system(&path), Err(CliError::Io(_))));
    }
}
