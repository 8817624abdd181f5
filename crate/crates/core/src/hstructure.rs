//! Hypercomplex structures `(I, J, K)` on `R^4m`.
//!
//! Only constant (parallel) structures are represented, which is the
//! hyperkähler case on flat space.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::Matrix;

/// Tolerance for every quaternion axiom.
pub const AXIOM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StructureTag {
    I,
    J,
    K,
}

impl StructureTag {
    pub const ALL: [StructureTag; 3] = [StructureTag::I, StructureTag::J, StructureTag::K];

    pub fn as_str(self) -> &'static str {
        match self {
            StructureTag::I => "I",
            StructureTag::J => "J",
            StructureTag::K => "K",
        }
    }
}

impl fmt::Display for StructureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypercomplexStructure {
    dim: usize,
    i: Matrix,
    j: Matrix,
    k: Matrix,
}

/// Max-entry residual of each axiom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub residuals: BTreeMap<String, f64>,
    pub passed: bool,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.values().copied().fold(0.0, f64::max)
    }
}

/// On-disk form: dimension plus three row-major matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub dim: usize,
    #[serde(rename = "I")]
    pub i: Vec<f64>,
    #[serde(rename = "J")]
    pub j: Vec<f64>,
    #[serde(rename = "K")]
    pub k: Vec<f64>,
}

impl HypercomplexStructure {
    /// Builds a structure without checking the axioms (see [`Self::validate`]).
    pub fn new(i: Matrix, j: Matrix, k: Matrix) -> Result<Self> {
        let dim = i.nrows();
        for (name, m) in [("I", &i), ("J", &j), ("K", &k)] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if dim == 0 || dim % 4 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "hypercomplex structures live on R^4m, got R^{dim}"
            )));
        }
        Ok(HypercomplexStructure { dim, i, j, k })
    }

    /// The standard structure: block-diagonal with one 4×4 block per
    /// quaternionic coordinate `(x_{4k+1}, …, x_{4k+4})`.
    pub fn canonical(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::DimensionMismatch("m must be at least 1".into()));
        }
        let n = 4 * m;
        let mut i = Matrix::zeros(n, n);
        let mut j = Matrix::zeros(n, n);
        let mut k = Matrix::zeros(n, n);
        // (target row, source column, sign) within one block: R e_src = sign · e_target
        const I_BLOCK: [(usize, usize, f64); 4] = [(1, 0, 1.0), (0, 1, -1.0), (3, 2, 1.0), (2, 3, -1.0)];
        const J_BLOCK: [(usize, usize, f64); 4] = [(2, 0, 1.0), (3, 1, -1.0), (0, 2, -1.0), (1, 3, 1.0)];
        const K_BLOCK: [(usize, usize, f64); 4] = [(3, 0, 1.0), (2, 1, 1.0), (1, 2, -1.0), (0, 3, -1.0)];
        for b in 0..m {
            let o = 4 * b;
            for (mat, block) in [(&mut i, I_BLOCK), (&mut j, J_BLOCK), (&mut k, K_BLOCK)] {
                for (r, c, s) in block {
                    mat[(o + r, o + c)] = s;
                }
            }
        }
        HypercomplexStructure::new(i, j, k)
    }

    pub fn from_file(file: &StructureFile) -> Result<Self> {
        let n = file.dim;
        let mat = |name: &str, v: &[f64]| -> Result<Matrix> {
            if v.len() != n * n {
                return Err(Error::DimensionMismatch(format!(
                    "{name} has {} entries, expected {}",
                    v.len(),
                    n * n
                )));
            }
            Ok(Matrix::from_row_slice(n, n, v))
        };
        HypercomplexStructure::new(mat("I", &file.i)?, mat("J", &file.j)?, mat("K", &file.k)?)
    }

    pub fn from_json(document: &str) -> Result<Self> {
        let file: StructureFile =
            serde_json::from_str(document).map_err(|e| Error::Spec(e.to_string()))?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> StructureFile {
        let flat = |m: &Matrix| m.transpose().iter().copied().collect::<Vec<_>>();
        StructureFile {
            dim: self.dim,
            i: flat(&self.i),
            j: flat(&self.j),
            k: flat(&self.k),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, tag: StructureTag) -> &Matrix {
        match tag {
            StructureTag::I => &self.i,
            StructureTag::J => &self.j,
            StructureTag::K => &self.k,
        }
    }

    /// `(Q I Qᵀ, Q J Qᵀ, Q K Qᵀ)`; preserves the axioms for orthogonal `Q`.
    pub fn conjugated(&self, q: &Matrix) -> Result<Self> {
        let c = |m: &Matrix| q * m * q.transpose();
        HypercomplexStructure::new(c(&self.i), c(&self.j), c(&self.k))
    }

    pub fn validate(&self) -> AxiomReport {
        let n = self.dim;
        let id = Matrix::identity(n, n);
        let (i, j, k) = (&self.i, &self.j, &self.k);
        let mut residuals = BTreeMap::new();
        let mut put = |name: &str, m: Matrix| {
            residuals.insert(name.to_string(), m.amax());
        };
        for tag in StructureTag::ALL {
            let r = self.get(tag);
            put(&format!("{tag}^2 = -id"), r * r + &id);
            put(&format!("{tag}^T {tag} = id"), r.transpose() * r - &id);
            put(&format!("{tag}^T = -{tag}"), r.transpose() + r);
        }
        put("IJ = K", i * j - k);
        put("JI = -K", j * i + k);
        put("JK = I", j * k - i);
        put("KJ = -I", k * j + i);
        put("KI = J", k * i - j);
        put("IK = -J", i * k + j);
        let passed = residuals.values().all(|&r| r <= AXIOM_TOL);
        AxiomReport { residuals, passed }
    }
}
