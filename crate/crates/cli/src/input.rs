//! Space and element files.
//!
//! Complex numbers are `[re, im]` pairs and matrices are lists of rows.
//! Unknown fields are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shilov_core::matcore::{CMatrix, LevelCoeffs, C64};
use shilov_core::stargen::MatrixSpace;

pub const FORMAT_VERSION: &str = "1";

pub type Complex = [f64; 2];

#[derive(Debug)]
pub enum ParseError {
    Io(String),
    /// Syntax or schema error; the message carries line and column.
    Json(String),
    Field { field: String, message: String },
    ElementNotInSpace { entry: (usize, usize), expected: usize, found: usize },
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::Io(m) => write!(f, "{m}"),
            ParseError::Json(m) => write!(f, "{m}"),
            ParseError::Field { field, message } => write!(f, "field `{field}`: {message}"),
            ParseError::ElementNotInSpace { entry, expected, found } => write!(
                f,
                "element not in space: entry {entry:?} has {found} coordinates, the space has {expected} generators"
            ),
        }
    }
}

impl std::error::Error for ParseError {}

fn json_error(e: serde_json::Error) -> ParseError {
    ParseError::Json(e.to_string())
}

fn field(field: &str, message: impl Into<String>) -> ParseError {
    ParseError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Matrix,
    Function,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Generators {
    Matrices(Vec<Vec<Vec<Complex>>>),
    Functions(Vec<Vec<Complex>>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceFile {
    pub format_version: String,
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ambient_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    pub generators: Generators,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpaceFile {
    format_version: String,
    kind: Kind,
    #[serde(default)]
    ambient_dim: Option<usize>,
    #[serde(default)]
    points: Option<usize>,
    generators: serde_json::Value,
}

fn check_version(v: &str) -> Result<(), ParseError> {
    if v != FORMAT_VERSION {
        return Err(field("format_version", format!("unsupported version {v:?}, expected {FORMAT_VERSION:?}")));
    }
    Ok(())
}

fn check_finite(name: &str, z: &Complex) -> Result<(), ParseError> {
    if !z[0].is_finite() || !z[1].is_finite() {
        return Err(field(name, "non-finite entry"));
    }
    Ok(())
}

fn to_c64(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

fn matrix_from_rows(name: &str, rows: &[Vec<Complex>], n: usize) -> Result<CMatrix, ParseError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(field(name, format!("expected a {n}×{n} matrix")));
    }
    let mut data = Vec::with_capacity(n * n);
    for z in rows.iter().flatten() {
        check_finite(name, z)?;
        data.push(to_c64(z));
    }
    Ok(CMatrix::new(n, n, data).expect("shape checked"))
}

impl SpaceFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let raw: RawSpaceFile = serde_json::from_str(text).map_err(json_error)?;
        check_version(&raw.format_version)?;
        let generators = match raw.kind {
            Kind::Matrix => {
                if raw.points.is_some() {
                    return Err(field("points", "not allowed for kind \"matrix\""));
                }
                let n = raw.ambient_dim.ok_or_else(|| field("ambient_dim", "required for kind \"matrix\""))?;
                let g: Vec<Vec<Vec<Complex>>> = serde_json::from_value(raw.generators)
                    .map_err(|e| field("generators", format!("expected a list of matrices of [re, im] pairs: {e}")))?;
                for (i, m) in g.iter().enumerate() {
                    matrix_from_rows(&format!("generators[{i}]"), m, n)?;
                }
                Generators::Matrices(g)
            }
            Kind::Function => {
                if raw.ambient_dim.is_some() {
                    return Err(field("ambient_dim", "not allowed for kind \"function\""));
                }
                let m = raw.points.ok_or_else(|| field("points", "required for kind \"function\""))?;
                let g: Vec<Vec<Complex>> = serde_json::from_value(raw.generators)
                    .map_err(|e| field("generators", format!("expected a list of vectors of [re, im] pairs: {e}")))?;
                for (i, v) in g.iter().enumerate() {
                    let name = format!("generators[{i}]");
                    if v.len() != m {
                        return Err(field(&name, format!("expected {m} values, found {}", v.len())));
                    }
                    v.iter().try_for_each(|z| check_finite(&name, z))?;
                }
                Generators::Functions(g)
            }
        };
        let count = match &generators {
            Generators::Matrices(g) => g.len(),
            Generators::Functions(g) => g.len(),
        };
        if count == 0 {
            return Err(field("generators", "at least one generator is required"));
        }
        Ok(Self {
            format_version: raw.format_version,
            kind: raw.kind,
            ambient_dim: raw.ambient_dim,
            points: raw.points,
            generators,
        })
    }

    pub fn read(path: &Path) -> Result<(Self, Vec<u8>), ParseError> {
        let bytes = std::fs::read(path).map_err(|e| ParseError::Io(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| ParseError::Io(format!("{}: {e}", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    /// Generators as matrices; functions become diagonal matrices.
    pub fn matrices(&self) -> Vec<CMatrix> {
        match &self.generators {
            Generators::Matrices(g) => {
                let n = self.ambient_dim.unwrap_or(0);
                g.iter().map(|m| matrix_from_rows("generators", m, n).expect("validated")).collect()
            }
            Generators::Functions(g) => g
                .iter()
                .map(|v| CMatrix::from_diag(&v.iter().map(to_c64).collect::<Vec<_>>()))
                .collect(),
        }
    }

    /// Generators as complex vectors, for kind `function`.
    pub fn functions(&self) -> Option<Vec<Vec<C64>>> {
        match &self.generators {
            Generators::Functions(g) => Some(g.iter().map(|v| v.iter().map(to_c64).collect()).collect()),
            Generators::Matrices(_) => None,
        }
    }
}

/// `v + A·1` at level `k`; `v[i][j]` lists coordinates over the
/// generators of the space file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementFile {
    pub format_version: String,
    pub level: usize,
    pub v: Vec<Vec<Vec<Complex>>>,
    pub a: Vec<Vec<Complex>>,
}

impl ElementFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let e: ElementFile = serde_json::from_str(text).map_err(json_error)?;
        check_version(&e.format_version)?;
        let k = e.level;
        if k == 0 {
            return Err(field("level", "must be at least 1"));
        }
        if e.v.len() != k || e.v.iter().any(|r| r.len() != k) {
            return Err(field("v", format!("expected a {k}×{k} grid of coordinate lists")));
        }
        for z in e.v.iter().flatten().flatten() {
            check_finite("v", z)?;
        }
        matrix_from_rows("a", &e.a, k)?;
        Ok(e)
    }

    pub fn read(path: &Path) -> Result<(Self, Vec<u8>), ParseError> {
        let bytes = std::fs::read(path).map_err(|e| ParseError::Io(format!("{}: {e}", path.display())))?;
        let text = std::str::from_utf8(&bytes).map_err(|e| ParseError::Io(format!("{}: {e}", path.display())))?;
        Ok((Self::parse(text)?, bytes))
    }

    /// Coordinates of `v` in the orthonormal basis of `space`, and `A`.
    pub fn resolve(&self, generators: &[CMatrix], space: &MatrixSpace) -> Result<(LevelCoeffs, CMatrix), ParseError> {
        let k = self.level;
        let mut v = LevelCoeffs::zeros(k, space.dim());
        for i in 0..k {
            for j in 0..k {
                let c = &self.v[i][j];
                if c.len() != generators.len() {
                    return Err(ParseError::ElementNotInSpace {
                        entry: (i, j),
                        expected: generators.len(),
                        found: c.len(),
                    });
                }
                let n = space.ambient_dim();
                let mut m = CMatrix::zeros(n, n);
                for (z, g) in c.iter().zip(generators) {
                    m.axpy(to_c64(z), g);
                }
                let (coords, _) = space.coords(&m);
                v.get_mut(i, j).copy_from_slice(&coords);
            }
        }
        Ok((v, matrix_from_rows("a", &self.a, k)?))
    }
}
