//! Plain-text tensor and vector files, and the TOML problem manifest.
//!
//! Tensor file: a header line `l n`, then `n^l` whitespace-separated entries in
//! lexicographic index order. Vector file: a header line `n`, then `n` entries.
//! Values are written with 17 significant digits so a write/read cycle is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::GteProblem;
use crate::tensor::DenseTensor;

fn fmt_value(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

pub fn format_tensor(t: &DenseTensor) -> String {
    let mut out = format!("{} {}\n", t.order(), t.dim());
    for row in t.entries().chunks(t.dim()) {
        for (j, &v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            fmt_value(&mut out, v);
        }
        out.push('\n');
    }
    out
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = format!("{}\n", v.len());
    for &x in v {
        fmt_value(&mut out, x);
        out.push('\n');
    }
    out
}

struct Tokens<'a> {
    path: &'a Path,
    last_line: usize,
    iter: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str, path: &'a Path, skip_first: bool) -> Self {
        let iter = text
            .lines()
            .enumerate()
            .skip(usize::from(skip_first))
            .flat_map(|(i, line)| line.split_whitespace().map(move |tok| (i + 1, tok)));
        Self {
            path,
            last_line: text.lines().count().max(1),
            iter: Box::new(iter),
        }
    }

    fn err(&self, line: usize, message: String) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message,
        }
    }

    fn read_entries(mut self, expected: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(expected);
        for (line, tok) in self.iter.by_ref() {
            if out.len() == expected {
                return Err(Error::Parse {
                    path: self.path.to_path_buf(),
                    line,
                    message: format!("too many entries: expected {expected}"),
                });
            }
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                path: self.path.to_path_buf(),
                line,
                message: format!("cannot parse `{tok}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: self.path.to_path_buf(),
                    line,
                    message: format!("non-finite entry `{tok}`"),
                });
            }
            out.push(v);
        }
        if out.len() != expected {
            return Err(self.err(
                self.last_line,
                format!("expected {expected} entries, found {}", out.len()),
            ));
        }
        Ok(out)
    }
}

fn header<'a>(text: &'a str, path: &Path) -> Result<Vec<&'a str>> {
    let first = text.lines().next().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: "empty file".into(),
    })?;
    Ok(first.split_whitespace().collect())
}

fn parse_usize(tok: &str, path: &Path, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: 1,
        message: format!("cannot parse {what} `{tok}`"),
    })
}

pub fn parse_tensor(text: &str, path: &Path) -> Result<DenseTensor> {
    let head = header(text, path)?;
    if head.len() != 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("header must be `order dim`, got {} fields", head.len()),
        });
    }
    let order = parse_usize(head[0], path, "order")?;
    let dim = parse_usize(head[1], path, "dimension")?;
    let expected = DenseTensor::zeros(order, dim)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: e.to_string(),
        })?
        .len();
    let entries = Tokens::new(text, path, true).read_entries(expected)?;
    DenseTensor::new(order, dim, entries)
}

pub fn parse_vector(text: &str, path: &Path) -> Result<Vec<f64>> {
    let head = header(text, path)?;
    if head.len() != 1 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("header must be the length `n`, got {} fields", head.len()),
        });
    }
    let n = parse_usize(head[0], path, "length")?;
    Tokens::new(text, path, true).read_entries(n)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    parse_tensor(&read_text(path)?, path)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    write_text(path.as_ref(), &format_tensor(t))
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    parse_vector(&read_text(path)?, path)
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    write_text(path.as_ref(), &format_vector(v))
}

/// On-disk description of a problem. File paths are relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemManifest {
    pub dim: usize,
    /// Coefficient tensor files in decreasing-order sequence.
    pub coeffs: Vec<String>,
    pub rhs: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct LoadedProblem {
    pub problem: GteProblem,
    pub x_star: Option<Vec<f64>>,
    pub manifest: ProblemManifest,
}

fn resolve(base: &Path, rel: &str) -> PathBuf {
    base.join(rel)
}

pub fn load_problem(manifest_path: impl AsRef<Path>) -> Result<LoadedProblem> {
    let manifest_path = manifest_path.as_ref();
    let text = read_text(manifest_path)?;
    let manifest: ProblemManifest = toml::from_str(&text).map_err(|e| Error::Parse {
        path: manifest_path.to_path_buf(),
        line: e
            .span()
            .map(|s| text[..s.start].lines().count().max(1))
            .unwrap_or(1),
        message: e.message().to_string(),
    })?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let coeffs = manifest
        .coeffs
        .iter()
        .map(|f| read_tensor(resolve(base, f)))
        .collect::<Result<Vec<_>>>()?;
    for (f, a) in manifest.coeffs.iter().zip(&coeffs) {
        if a.dim() != manifest.dim {
            return Err(Error::InvalidProblem(format!(
                "{f}: dimension {} does not match manifest dim {}",
                a.dim(),
                manifest.dim
            )));
        }
    }
    let rhs = read_vector(resolve(base, &manifest.rhs))?;
    Error::check_dim(manifest.dim, rhs.len())?;
    let x_star = match &manifest.x_star {
        Some(f) => {
            let v = read_vector(resolve(base, f))?;
            Error::check_dim(manifest.dim, v.len())?;
            Some(v)
        }
        None => None,
    };
    let problem = GteProblem::new(coeffs, rhs)?;
    Ok(LoadedProblem {
        problem,
        x_star,
        manifest,
    })
}

/// Writes `problem.toml`, `a1.tensor`, `a2.tensor`, ..., `b.vec` (and
/// `x_star.vec` when given) into `dir`. Returns the manifest path.
pub fn save_problem(
    dir: impl AsRef<Path>,
    problem: &GteProblem,
    x_star: Option<&[f64]>,
    omega: Option<f64>,
    kind: Option<&str>,
    seed: Option<u64>,
) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut coeffs = Vec::new();
    for (k, a) in problem.coeffs().iter().enumerate() {
        let name = format!("a{}.tensor", k + 1);
        write_tensor(dir.join(&name), a)?;
        coeffs.push(name);
    }
    write_vector(dir.join("b.vec"), problem.rhs())?;
    let x_star = match x_star {
        Some(v) => {
            write_vector(dir.join("x_star.vec"), v)?;
            Some("x_star.vec".to_string())
        }
        None => None,
    };
    let manifest = ProblemManifest {
        dim: problem.dim(),
        coeffs,
        rhs: "b.vec".into(),
        x_star,
        omega,
        kind: kind.map(str::to_string),
        seed,
    };
    let path = dir.join("problem.toml");
    let text = toml::to_string(&manifest).map_err(|e| Error::Format(e.to_string()))?;
    write_text(&path, &text)?;
    Ok(path)
}
