//! Driving vector fields `H_k(x, y)` and their derivative families.
//!
//! The flow solver needs `H` together with the partials up to third order
//! that appear in the variational equations: `H_x, H_y, H_xx, H_xy, H_yy,
//! H_yyy, H_xyy, H_xxy`. Implementors may supply analytic derivatives; the
//! trait defaults fall back to central finite differences of `h`.

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

const FD_STEP: f64 = 1e-4;

/// One scalar driving field `H_k: ℝ × ℝ → ℝ` (spatial dimension 1).
pub trait VectorField: Send + Sync {
    fn h(&self, x: f64, y: f64) -> f64;

    fn h_x(&self, x: f64, y: f64) -> f64 {
        (self.h(x + FD_STEP, y) - self.h(x - FD_STEP, y)) / (2.0 * FD_STEP)
    }
    fn h_y(&self, x: f64, y: f64) -> f64 {
        (self.h(x, y + FD_STEP) - self.h(x, y - FD_STEP)) / (2.0 * FD_STEP)
    }
    fn h_xx(&self, x: f64, y: f64) -> f64 {
        (self.h(x + FD_STEP, y) - 2.0 * self.h(x, y) + self.h(x - FD_STEP, y)) / (FD_STEP * FD_STEP)
    }
    fn h_xy(&self, x: f64, y: f64) -> f64 {
        (self.h_y(x + FD_STEP, y) - self.h_y(x - FD_STEP, y)) / (2.0 * FD_STEP)
    }
    fn h_yy(&self, x: f64, y: f64) -> f64 {
        (self.h(x, y + FD_STEP) - 2.0 * self.h(x, y) + self.h(x, y - FD_STEP)) / (FD_STEP * FD_STEP)
    }
    fn h_yyy(&self, x: f64, y: f64) -> f64 {
        (self.h_yy(x, y + FD_STEP) - self.h_yy(x, y - FD_STEP)) / (2.0 * FD_STEP)
    }
    fn h_xyy(&self, x: f64, y: f64) -> f64 {
        (self.h_yy(x + FD_STEP, y) - self.h_yy(x - FD_STEP, y)) / (2.0 * FD_STEP)
    }
    fn h_xxy(&self, x: f64, y: f64) -> f64 {
        (self.h_xy(x + FD_STEP, y) - self.h_xy(x - FD_STEP, y)) / (2.0 * FD_STEP)
    }
}

/// `H ≡ c`.
pub struct ConstField(pub f64);

impl VectorField for ConstField {
    fn h(&self, _x: f64, _y: f64) -> f64 {
        self.0
    }
    fn h_x(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_y(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xx(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_yy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_yyy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xyy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xxy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// `H(x, y) = c·y`.
pub struct LinearYField(pub f64);

impl VectorField for LinearYField {
    fn h(&self, _x: f64, y: f64) -> f64 {
        self.0 * y
    }
    fn h_x(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_y(&self, _: f64, _: f64) -> f64 {
        self.0
    }
    fn h_xx(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_yy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_yyy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xyy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xxy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// `H(x, y) = c·x·y`.
pub struct ProductXYField(pub f64);

impl VectorField for ProductXYField {
    fn h(&self, x: f64, y: f64) -> f64 {
        self.0 * x * y
    }
    fn h_x(&self, _x: f64, y: f64) -> f64 {
        self.0 * y
    }
    fn h_y(&self, x: f64, _y: f64) -> f64 {
        self.0 * x
    }
    fn h_xx(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xy(&self, _: f64, _: f64) -> f64 {
        self.0
    }
    fn h_yy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_yyy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xyy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
    fn h_xxy(&self, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// `H(x, y) = c·sin(x + y)`.
pub struct SinXPlusYField(pub f64);

impl VectorField for SinXPlusYField {
    fn h(&self, x: f64, y: f64) -> f64 {
        self.0 * (x + y).sin()
    }
    fn h_x(&self, x: f64, y: f64) -> f64 {
        self.0 * (x + y).cos()
    }
    fn h_y(&self, x: f64, y: f64) -> f64 {
        self.0 * (x + y).cos()
    }
    fn h_xx(&self, x: f64, y: f64) -> f64 {
        -self.0 * (x + y).sin()
    }
    fn h_xy(&self, x: f64, y: f64) -> f64 {
        -self.0 * (x + y).sin()
    }
    fn h_yy(&self, x: f64, y: f64) -> f64 {
        -self.0 * (x + y).sin()
    }
    fn h_yyy(&self, x: f64, y: f64) -> f64 {
        -self.0 * (x + y).cos()
    }
    fn h_xyy(&self, x: f64, y: f64) -> f64 {
        -self.0 * (x + y).cos()
    }
    fn h_xxy(&self, x: f64, y: f64) -> f64 {
        -self.0 * (x + y).cos()
    }
}

/// Field defined by a closure, derivatives by the trait's finite differences.
pub struct ClosureField<F: Fn(f64, f64) -> f64 + Send + Sync>(pub F);

impl<F: Fn(f64, f64) -> f64 + Send + Sync> VectorField for ClosureField<F> {
    fn h(&self, x: f64, y: f64) -> f64 {
        (self.0)(x, y)
    }
}

/// The family `H = (H_1, …, H_d)` together with the declared regularity
/// bound `C_H`.
///
/// Construction cross-checks every supplied derivative against central
/// finite differences of `h` on a sample grid (relative tolerance `1e-4`).
#[derive(Clone)]
pub struct VectorFieldFamily {
    fields: Vec<Arc<dyn VectorField>>,
    c_h: f64,
}

impl fmt::Debug for VectorFieldFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldFamily")
            .field("d", &self.fields.len())
            .field("c_h", &self.c_h)
            .finish()
    }
}

impl VectorFieldFamily {
    pub fn new(fields: Vec<Arc<dyn VectorField>>, c_h: f64) -> Result<Self> {
        if fields.is_empty() {
            return Err(Error::Dimension("vector field family must have d >= 1".into()));
        }
        if !(c_h > 0.0) {
            return Err(Error::Assumption("C_H must be strictly positive".into()));
        }
        let fam = Self { fields, c_h };
        fam.check_derivatives()?;
        Ok(fam)
    }

    /// `H ≡ 0` in the given driver dimension.
    pub fn zero(d: usize) -> Self {
        let fields: Vec<Arc<dyn VectorField>> =
            (0..d).map(|_| Arc::new(ConstField(0.0)) as Arc<dyn VectorField>).collect();
        Self { fields, c_h: 1.0 }
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    pub fn component(&self, k: usize) -> &dyn VectorField {
        self.fields[k].as_ref()
    }

    fn check_derivatives(&self) -> Result<()> {
        let sample: [f64; 5] = [-2.0, -0.7, 0.0, 0.9, 2.0];
        let rel_tol = 1e-4;
        for (k, f) in self.fields.iter().enumerate() {
            for &x in &sample {
                for &y in &sample {
                    let checks: [(&str, f64, f64); 5] = [
                        ("h_x", f.h_x(x, y), fd_x(f.as_ref(), x, y)),
                        ("h_y", f.h_y(x, y), fd_y(f.as_ref(), x, y)),
                        ("h_xx", f.h_xx(x, y), fd_xx(f.as_ref(), x, y)),
                        ("h_xy", f.h_xy(x, y), fd_xy(f.as_ref(), x, y)),
                        ("h_yy", f.h_yy(x, y), fd_yy(f.as_ref(), x, y)),
                    ];
                    for (name, analytic, numeric) in checks {
                        let scale = 1.0 + analytic.abs().max(numeric.abs());
                        if (analytic - numeric).abs() > rel_tol * scale {
                            return Err(Error::DerivativeMismatch(format!(
                                "component {k}, {name} at ({x}, {y}): analytic {analytic}, finite-difference {numeric}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn fd_x(f: &dyn VectorField, x: f64, y: f64) -> f64 {
    (f.h(x + FD_STEP, y) - f.h(x - FD_STEP, y)) / (2.0 * FD_STEP)
}
fn fd_y(f: &dyn VectorField, x: f64, y: f64) -> f64 {
    (f.h(x, y + FD_STEP) - f.h(x, y - FD_STEP)) / (2.0 * FD_STEP)
}
fn fd_xx(f: &dyn VectorField, x: f64, y: f64) -> f64 {
    (f.h(x + FD_STEP, y) - 2.0 * f.h(x, y) + f.h(x - FD_STEP, y)) / (FD_STEP * FD_STEP)
}
fn fd_yy(f: &dyn VectorField, x: f64, y: f64) -> f64 {
    (f.h(x, y + FD_STEP) - 2.0 * f.h(x, y) + f.h(x, y - FD_STEP)) / (FD_STEP * FD_STEP)
}
fn fd_xy(f: &dyn VectorField, x: f64, y: f64) -> f64 {
    (f.h(x + FD_STEP, y + FD_STEP) - f.h(x + FD_STEP, y - FD_STEP) - f.h(x - FD_STEP, y + FD_STEP)
        + f.h(x - FD_STEP, y - FD_STEP))
        / (4.0 * FD_STEP * FD_STEP)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_fields_pass_construction_check() {
        for field in [
            Arc::new(ConstField(2.0)) as Arc<dyn VectorField>,
            Arc::new(LinearYField(1.0)),
            Arc::new(ProductXYField(0.5)),
            Arc::new(SinXPlusYField(1.0)),
        ] {
            VectorFieldFamily::new(vec![field], 1.0).unwrap();
        }
    }

    #[test]
    fn wrong_derivative_is_caught() {
        struct Broken;
        impl VectorField for Broken {
            fn h(&self, x: f64, y: f64) -> f64 {
                x * y
            }
            fn h_x(&self, _x: f64, _y: f64) -> f64 {
                0.0 // wrong on purpose
            }
        }
        let r = VectorFieldFamily::new(vec![Arc::new(Broken)], 1.0);
        assert!(matches!(r, Err(Error::DerivativeMismatch(_))));
    }

    #[test]
    fn closure_field_defaults_are_consistent() {
        let f = ClosureField(|x: f64, y: f64| (x * y).cos());
        let fam = VectorFieldFamily::new(vec![Arc::new(f)], 1.0).unwrap();
        let g = fam.component(0);
        // third derivatives exist through nested differencing
        let v = g.h_yyy(0.3, -0.2);
        assert!(v.is_finite());
    }
}
