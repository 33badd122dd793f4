//! Target-transformation generators and the fixed-shift polynomial-filter
//! baseline.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// The averaging matrix: every entry `1/n`. Applying it drives all node
/// values to the average of the inputs.
pub fn consensus_matrix(n: usize) -> DMatrix<f64> {
    assert!(n >= 1, "consensus target needs at least one node");
    DMatrix::from_element(n, n, 1.0 / n as f64)
}

/// Draws an `n x r` matrix with orthonormal columns, deterministically
/// from `seed`: a standard-normal draw followed by a QR factorization.
/// Redraws on the measure-zero rank-deficient event.
pub fn random_subspace_basis(n: usize, r: usize, seed: u64) -> Result<DMatrix<f64>> {
    if r == 0 || r > n {
        return Err(Error::InvalidParameter(format!(
            "subspace dimension must satisfy 1 <= r <= n, got r={r}, n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..16 {
        let draw: DMatrix<f64> = DMatrix::from_fn(n, r, |_, _| StandardNormal.sample(&mut rng));
        let qr = draw.qr();
        let rmat = qr.r();
        let diag_max = (0..r).map(|i| rmat[(i, i)].abs()).fold(0.0f64, f64::max);
        let diag_min = (0..r)
            .map(|i| rmat[(i, i)].abs())
            .fold(f64::INFINITY, f64::min);
        if diag_min > n as f64 * f64::EPSILON * diag_max {
            return Ok(qr.q());
        }
    }
    Err(Error::NonFinite("rank-deficient basis draw"))
}

/// The orthogonal projector onto the column span of an orthonormal basis.
pub fn projection_from_basis(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis * basis.transpose()
}

/// A random rank-`r` orthogonal projector, `U U^T` for a seeded
/// orthonormal `U`.
pub fn random_projection(n: usize, r: usize, seed: u64) -> Result<DMatrix<f64>> {
    Ok(projection_from_basis(&random_subspace_basis(n, r, seed)?))
}

/// Least-squares fit of polynomial-filter coefficients in a fixed shift.
#[derive(Debug, Clone)]
pub struct GfBaselineFit {
    /// Coefficients `c_0 .. c_{L-1}` of `sum_l c_l S^l`.
    pub coeffs: DVector<f64>,
    /// Frobenius residual of the fitted polynomial against the target.
    pub residual: f64,
}

/// Fits `c` minimizing `|vec(H) - [vec(S^0) ... vec(S^{L-1})] c|`,
/// minimum-norm on rank deficiency. The baseline uses a single fixed
/// shift; it is the comparison point for the successive-operator design.
pub fn gf_baseline_fit(
    shift: &DMatrix<f64>,
    target: &DMatrix<f64>,
    len: usize,
) -> Result<GfBaselineFit> {
    let n = shift.nrows();
    if shift.ncols() != n || target.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "shift is {}x{}, target is {}x{}",
            shift.nrows(),
            shift.ncols(),
            target.nrows(),
            target.ncols()
        )));
    }
    if len == 0 {
        return Err(Error::InvalidParameter(
            "filter length must be at least 1".into(),
        ));
    }
    let mut basis = DMatrix::zeros(n * n, len);
    let mut power = DMatrix::identity(n, n);
    for l in 0..len {
        basis.set_column(l, &DVector::from_column_slice(power.as_slice()));
        if l + 1 < len {
            power = shift * power;
        }
    }
    let y = DVector::from_column_slice(target.as_slice());
    let coeffs = linalg::lstsq(&basis, &y, 0.0)?;
    let recon = &basis * &coeffs;
    let residual = (y - recon).norm();
    Ok(GfBaselineFit { coeffs, residual })
}

/// How a target transformation is obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Consensus,
    Projection { r: usize, seed: u64 },
    File(PathBuf),
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetKind::Consensus => write!(f, "consensus"),
            TargetKind::Projection { r, .. } => write!(f, "projection:{r}"),
            TargetKind::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    /// Accepts `consensus`, `projection:R`, `file:PATH`.
    /// The projection seed is filled in at resolution time.
    fn from_str(s: &str) -> Result<Self> {
        if s == "consensus" {
            return Ok(TargetKind::Consensus);
        }
        if let Some(r) = s.strip_prefix("projection:") {
            let r: usize = r
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("invalid projection rank `{r}`")))?;
            return Ok(TargetKind::Projection { r, seed: 0 });
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(TargetKind::File(PathBuf::from(path)));
        }
        Err(Error::InvalidParameter(format!(
            "unknown target `{s}` (expected consensus | projection:R | file:PATH)"
        )))
    }
}

/// A resolved target: the kind it came from plus the dense matrix.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub resolved: DMatrix<f64>,
}

impl TargetSpec {
    /// Resolves a target kind against a known network size, validating
    /// the projector identities for generated projections and squareness
    /// plus size for file-loaded matrices.
    pub fn resolve(kind: TargetKind, n: usize) -> Result<Self> {
        let resolved = match &kind {
            TargetKind::Consensus => consensus_matrix(n),
            TargetKind::Projection { r, seed } => {
                let p = random_projection(n, *r, *seed)?;
                debug_assert!((&p * &p - &p).norm() <= 1e-10);
                debug_assert!((&p - p.transpose()).norm() <= 1e-12);
                debug_assert!((p.trace() - *r as f64).abs() <= 1e-8);
                p
            }
            TargetKind::File(path) => {
                let m = load_matrix(path)?;
                if m.nrows() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "target from {} is {}x{} but the graph has {} vertices",
                        path.display(),
                        m.nrows(),
                        m.ncols(),
                        n
                    )));
                }
                m
            }
        };
        Ok(TargetSpec { kind, resolved })
    }
}

/// Reads a square matrix from the whitespace-separated text format, one
/// row per line. Rejects ragged and non-square input.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("invalid number `{tok}`"),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!(
                        "ragged row: expected {} values, got {}",
                        first.len(),
                        row.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "empty matrix file".into(),
        });
    }
    if rows.len() != rows[0].len() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: rows.len(),
            msg: format!(
                "non-square matrix: {} rows x {} columns",
                rows.len(),
                rows[0].len()
            ),
        });
    }
    let n = rows.len();
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

/// Writes a matrix in the text format read by [`load_matrix`]: one row
/// per line, 17 significant digits, so values round-trip bit-identically.
pub fn save_matrix(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(' ');
            }
            write!(out, "{:.16e}", m[(r, c)]).expect("string write");
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
