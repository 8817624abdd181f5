use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::expr::Expr;
use super::field::VectorFieldExpr;
use super::parser::parse_expr;
use crate::error::{Error, Result};
use crate::hstructure::StructureTag;
use crate::numkernel::{self, Hessian3Tensor, Matrix, Vector};

/// A smooth map `R^D → R^n` given by one bound expression per output.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothMap {
    name: String,
    domain_dim: usize,
    components: Vec<Expr>,
    params: BTreeMap<String, f64>,
}

impl SmoothMap {
    /// Builds a map from parsed (possibly parametrized) components and binds
    /// every parameter; fails on unbound parameters or out-of-range variables.
    pub fn new(
        name: impl Into<String>,
        domain_dim: usize,
        components: Vec<Expr>,
        params: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if domain_dim == 0 {
            return Err(Error::DimensionMismatch("domain dimension must be positive".into()));
        }
        let mut bound = Vec::with_capacity(components.len());
        for (i, c) in components.iter().enumerate() {
            if c.max_var() > domain_dim {
                return Err(Error::DimensionMismatch(format!(
                    "component {} uses x{} but the domain is R^{domain_dim}",
                    i + 1,
                    c.max_var()
                )));
            }
            bound.push(c.bind(&params)?);
        }
        Ok(SmoothMap {
            name: name.into(),
            domain_dim,
            components: bound,
            params,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Every component is syntactically affine, so the Jacobian (and with
    /// it every distribution derived from it) is constant.
    pub fn is_affine(&self) -> bool {
        self.components.iter().all(Expr::is_affine)
    }

    pub fn eval(&self, p: &Vector) -> Result<Vector> {
        self.check_point(p)?;
        numkernel::eval_components(&self.components, p)
    }

    pub fn jacobian(&self, p: &Vector) -> Result<Matrix> {
        self.check_point(p)?;
        numkernel::jacobian_of(&self.components, p)
    }

    pub fn hessian(&self, p: &Vector) -> Result<Hessian3Tensor> {
        self.check_point(p)?;
        numkernel::hessian_of(&self.components, p)
    }

    fn check_point(&self, p: &Vector) -> Result<()> {
        if p.len() != self.domain_dim {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates, map domain is R^{}",
                p.len(),
                self.domain_dim
            )));
        }
        Ok(())
    }

    /// `x ↦ F(A x)` for a square matrix `A`.
    pub fn precompose_linear(&self, a: &Matrix) -> Result<SmoothMap> {
        if a.nrows() != self.domain_dim || a.ncols() != self.domain_dim {
            return Err(Error::DimensionMismatch("precomposition needs a square matrix".into()));
        }
        let rows: Vec<Expr> = (0..self.domain_dim)
            .map(|i| Expr::linear_form(&a.row(i).iter().copied().collect::<Vec<_>>()))
            .collect();
        Ok(SmoothMap {
            name: self.name.clone(),
            domain_dim: self.domain_dim,
            components: self.components.iter().map(|c| c.substitute(&rows)).collect(),
            params: self.params.clone(),
        })
    }
}

/// Hypercube `[lo, hi]^D` used for random sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleBox(pub f64, pub f64);

/// User-supplied smooth frame fields, each a list of component strings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    #[serde(default)]
    pub vertical: Vec<Vec<String>>,
    #[serde(default)]
    pub horizontal: Vec<Vec<String>>,
    #[serde(default)]
    pub d1: BTreeMap<StructureTag, Vec<Vec<String>>>,
    #[serde(default)]
    pub d2: BTreeMap<StructureTag, Vec<Vec<String>>>,
}

/// Parsed frame fields, ready to evaluate.
#[derive(Debug, Clone, Default)]
pub struct FrameSet {
    pub vertical: Vec<VectorFieldExpr>,
    pub horizontal: Vec<VectorFieldExpr>,
    pub d1: BTreeMap<StructureTag, Vec<VectorFieldExpr>>,
    pub d2: BTreeMap<StructureTag, Vec<VectorFieldExpr>>,
}

impl FrameSpec {
    pub fn build(&self, dim: usize, params: &BTreeMap<String, f64>) -> Result<FrameSet> {
        let list = |fields: &[Vec<String>]| -> Result<Vec<VectorFieldExpr>> {
            fields
                .iter()
                .map(|f| VectorFieldExpr::parse(dim, f, params))
                .collect()
        };
        let per_tag = |m: &BTreeMap<StructureTag, Vec<Vec<String>>>| -> Result<_> {
            m.iter()
                .map(|(t, f)| Ok((*t, list(f)?)))
                .collect::<Result<BTreeMap<_, _>>>()
        };
        Ok(FrameSet {
            vertical: list(&self.vertical)?,
            horizontal: list(&self.horizontal)?,
            d1: per_tag(&self.d1)?,
            d2: per_tag(&self.d2)?,
        })
    }
}

/// The map-specification document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub domain_dim: usize,
    pub codomain_dim: usize,
    pub components: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<SampleBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<FrameSpec>,
}

impl MapSpec {
    pub fn from_json(document: &str) -> Result<Self> {
        serde_json::from_str(document).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn build(&self) -> Result<SmoothMap> {
        if self.components.len() != self.codomain_dim {
            return Err(Error::DimensionMismatch(format!(
                "codomain_dim is {} but {} components were given",
                self.codomain_dim,
                self.components.len()
            )));
        }
        let parsed = self
            .components
            .iter()
            .map(|c| parse_expr(c))
            .collect::<Result<Vec<_>>>()?;
        if let Some(points) = &self.sample_points {
            if let Some(bad) = points.iter().find(|p| p.len() != self.domain_dim) {
                return Err(Error::DimensionMismatch(format!(
                    "sample point with {} coordinates in R^{}",
                    bad.len(),
                    self.domain_dim
                )));
            }
        }
        if let Some(SampleBox(lo, hi)) = self.sample_box {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Spec(format!("empty sample box [{lo}, {hi}]")));
            }
        }
        let name = if self.name.is_empty() { "map" } else { &self.name };
        SmoothMap::new(name, self.domain_dim, parsed, self.params.clone())
    }

    /// Like [`MapSpec::build`], additionally requiring a domain of dimension 4m.
    pub fn build_for_structure(&self) -> Result<SmoothMap> {
        if self.domain_dim % 4 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "structure analysis needs a domain of dimension 4m, got {}",
                self.domain_dim
            )));
        }
        self.build()
    }

    pub fn frame_set(&self) -> Result<Option<FrameSet>> {
        self.frames
            .as_ref()
            .map(|f| f.build(self.domain_dim, &self.params))
            .transpose()
    }
}

/// Parses a map-spec document and returns the fully bound map.
pub fn load_map_spec(document: &str) -> Result<SmoothMap> {
    MapSpec::from_json(document)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_on_r4() {
        let doc = r#"{"domain_dim": 4, "codomain_dim": 4, "components": ["x1","x2","x3","x4"]}"#;
        let f = load_map_spec(doc).unwrap();
        assert_eq!(f.codomain_dim(), 4);
        assert_eq!(f.components()[2], Expr::Var(3));
    }

    #[test]
    fn parameters_are_bound() {
        let doc = r#"{"domain_dim": 12, "codomain_dim": 5,
            "components": ["x6", "(x1 - x3)/sqrt(2)", "c", "x4", "(x5 - x7)/sqrt(2)"],
            "params": {"c": 3.5}}"#;
        let f = load_map_spec(doc).unwrap();
        assert_eq!(f.components()[2], Expr::Const(3.5));
        assert_eq!(f.params()["c"], 3.5);
    }

    #[test]
    fn rejects_bad_documents() {
        let unbound = r#"{"domain_dim": 4, "codomain_dim": 1, "components": ["a*x1"]}"#;
        assert!(matches!(load_map_spec(unbound), Err(Error::UnboundParameter(_))));
        let arity = r#"{"domain_dim": 4, "codomain_dim": 2, "components": ["x1"]}"#;
        assert!(matches!(load_map_spec(arity), Err(Error::DimensionMismatch(_))));
        let range = r#"{"domain_dim": 4, "codomain_dim": 1, "components": ["x5"]}"#;
        assert!(matches!(load_map_spec(range), Err(Error::DimensionMismatch(_))));
        let parse = r#"{"domain_dim": 4, "codomain_dim": 1, "components": ["x1 +"]}"#;
        assert!(matches!(load_map_spec(parse), Err(Error::Syntax { .. })));
        assert!(matches!(load_map_spec("{"), Err(Error::Spec(_))));
        let odd = MapSpec::from_json(r#"{"domain_dim": 3, "codomain_dim": 1, "components": ["x1"]}"#)
            .unwrap();
        assert!(matches!(odd.build_for_structure(), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn precomposition_substitutes_linear_forms() {
        let doc = r#"{"domain_dim": 2, "codomain_dim": 1, "components": ["x1*x2"]}"#;
        let f = load_map_spec(doc).unwrap();
        let a = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        let g = f.precompose_linear(&a).unwrap();
        let p = Vector::from_vec(vec![3.0, 5.0]);
        assert_eq!(g.eval(&p).unwrap()[0], 5.0 * 6.0);
    }
}
