use crate::error::{Error, Result};
use crate::numkernel::{self, Matrix, Vector};

use super::expr::Expr;
use super::parser::parse_expr;

/// A smooth vector field on `R^D` that can be evaluated and differentiated
/// exactly at a point.
pub trait Field: Send + Sync + std::fmt::Debug {
    fn dim(&self) -> usize;
    fn value(&self, q: &Vector) -> Result<Vector>;
    /// `∂Y^i/∂x^j`.
    fn jacobian(&self, q: &Vector) -> Result<Matrix>;

    /// Flat covariant derivative `∇_dir Y = (DY) dir`.
    fn derivative(&self, q: &Vector, dir: &Vector) -> Result<Vector> {
        Ok(self.jacobian(q)? * dir)
    }
}

/// A field whose components are fixed vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantField(pub Vector);

impl Field for ConstantField {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn value(&self, _q: &Vector) -> Result<Vector> {
        Ok(self.0.clone())
    }
    fn jacobian(&self, _q: &Vector) -> Result<Matrix> {
        Ok(Matrix::zeros(self.0.len(), self.0.len()))
    }
    fn derivative(&self, _q: &Vector, _dir: &Vector) -> Result<Vector> {
        Ok(Vector::zeros(self.0.len()))
    }
}

/// A vector field given by one expression per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldExpr {
    domain_dim: usize,
    components: Vec<Expr>,
}

impl VectorFieldExpr {
    pub fn new(domain_dim: usize, components: Vec<Expr>) -> Result<Self> {
        if components.len() != domain_dim {
            return Err(Error::DimensionMismatch(format!(
                "vector field on R^{domain_dim} needs {domain_dim} components, got {}",
                components.len()
            )));
        }
        if let Some(bad) = components.iter().find(|e| e.max_var() > domain_dim) {
            return Err(Error::DimensionMismatch(format!(
                "field component `{bad}` uses x{} outside R^{domain_dim}",
                bad.max_var()
            )));
        }
        if let Some(p) = components.iter().flat_map(|e| e.params()).next() {
            return Err(Error::UnboundParameter(p));
        }
        Ok(VectorFieldExpr {
            domain_dim,
            components,
        })
    }

    /// Parses component strings, binding parameters from `params`.
    pub fn parse(
        domain_dim: usize,
        texts: &[String],
        params: &std::collections::BTreeMap<String, f64>,
    ) -> Result<Self> {
        let comps = texts
            .iter()
            .map(|t| parse_expr(t)?.bind(params))
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain_dim, comps)
    }

    /// The linear field `x ↦ A x`.
    pub fn linear(a: &Matrix) -> Self {
        let comps = (0..a.nrows())
            .map(|i| Expr::linear_form(a.row(i).iter().copied().collect::<Vec<_>>().as_slice()))
            .collect();
        VectorFieldExpr {
            domain_dim: a.ncols(),
            components: comps,
        }
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

impl Field for VectorFieldExpr {
    fn dim(&self) -> usize {
        self.domain_dim
    }

    fn value(&self, q: &Vector) -> Result<Vector> {
        numkernel::eval_components(&self.components, q)
    }

    fn jacobian(&self, q: &Vector) -> Result<Matrix> {
        numkernel::jacobian_of(&self.components, q)
    }
}

/// Lie bracket on flat space: `[X, Y] = (DY) X − (DX) Y`.
pub fn bracket(x: &dyn Field, y: &dyn Field, p: &Vector) -> Result<Vector> {
    let xv = x.value(p)?;
    let yv = y.value(p)?;
    Ok(y.jacobian(p)? * xv - x.jacobian(p)? * yv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(texts: &[&str]) -> VectorFieldExpr {
        let t: Vec<String> = texts.iter().map(|s| s.to_string()).collect();
        VectorFieldExpr::parse(t.len(), &t, &Default::default()).unwrap()
    }

    #[test]
    fn constant_fields_commute() {
        let x = ConstantField(Vector::from_vec(vec![1.0, 2.0, 0.0, -1.0]));
        let y = field(&["3", "0", "1", "0.5"]);
        let p = Vector::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(bracket(&x, &y, &p).unwrap().amax(), 0.0);
    }

    #[test]
    fn bracket_of_shear_with_coordinate_field() {
        // X = x2 ∂1, Y = ∂2 ⇒ [X, Y] = −∂1
        let x = field(&["x2", "0", "0", "0"]);
        let y = field(&["0", "1", "0", "0"]);
        let p = Vector::from_vec(vec![0.3, -0.7, 1.1, 2.0]);
        let b = bracket(&x, &y, &p).unwrap();
        assert_eq!(b, Vector::from_vec(vec![-1.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let x = field(&["-x2", "x1", "0", "0"]);
        let y = field(&["-x4", "0", "0", "x1"]);
        let p = Vector::from_vec(vec![0.9, -0.4, 0.25, 1.5]);
        let xy = bracket(&x, &y, &p).unwrap();
        let yx = bracket(&y, &x, &p).unwrap();
        assert!((xy + yx).amax() < 1e-15);
    }

    #[test]
    fn field_rejects_wrong_arity_and_unbound_params() {
        let t = vec!["x1".to_string()];
        assert!(matches!(
            VectorFieldExpr::parse(2, &t, &Default::default()),
            Err(Error::DimensionMismatch(_))
        ));
        let t = vec!["a*x1".to_string()];
        assert!(matches!(
            VectorFieldExpr::parse(1, &t, &Default::default()),
            Err(Error::UnboundParameter(_))
        ));
    }
}
