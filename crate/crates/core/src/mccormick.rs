//! Four-inequality envelope of a product of two bounded variables.

use crate::BuildError;

/// `coef_x * x + coef_y * y + coef_e * e (>= | <=) rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeRow {
    pub coef_x: f64,
    pub coef_y: f64,
    pub coef_e: f64,
    pub rhs: f64,
    pub upper: bool,
}

impl EnvelopeRow {
    pub fn holds(&self, x: f64, y: f64, e: f64, tol: f64) -> bool {
        let lhs = self.coef_x * x + self.coef_y * y + self.coef_e * e;
        if self.upper {
            lhs <= self.rhs + tol
        } else {
            lhs >= self.rhs - tol
        }
    }
}

/// Envelope of `e = x * y` on `[xl, xu] x [yl, yu]`: two under- and two
/// over-estimators, all written with `e` on the left.
pub fn mccormick_envelope(x: (f64, f64), y: (f64, f64)) -> Result<[EnvelopeRow; 4], BuildError> {
    let (xl, xu) = x;
    let (yl, yu) = y;
    if ![xl, xu, yl, yu].iter().all(|v| v.is_finite()) {
        return Err(BuildError::Dimension("McCormick bounds must be finite".into()));
    }
    if xl > xu || yl > yu {
        return Err(BuildError::Dimension("McCormick bounds are inverted".into()));
    }
    // e >= xl*y + yl*x - xl*yl ; e >= xu*y + yu*x - xu*yu
    // e <= xu*y + yl*x - xu*yl ; e <= xl*y + yu*x - xl*yu
    let row = |cx: f64, cy: f64, c0: f64, upper: bool| EnvelopeRow {
        coef_x: -cx,
        coef_y: -cy,
        coef_e: 1.0,
        rhs: c0,
        upper,
    };
    Ok([
        row(yl, xl, -xl * yl, false),
        row(yu, xu, -xu * yu, false),
        row(yl, xu, -xu * yl, true),
        row(yu, xl, -xl * yu, true),
    ])
}

/// Range of `e` admitted by the envelope at a given `(x, y)`.
pub fn envelope_range(rows: &[EnvelopeRow; 4], x: f64, y: f64) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for r in rows {
        let v = r.rhs - r.coef_x * x - r.coef_y * y;
        if r.upper {
            hi = hi.min(v);
        } else {
            lo = lo.max(v);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_at_bound_is_exact() {
        let env = mccormick_envelope((0.0, 1.0), (0.0, 1.0)).unwrap();
        let (lo, hi) = envelope_range(&env, 1.0, 0.3);
        assert!((lo - 0.3).abs() < 1e-12 && (hi - 0.3).abs() < 1e-12);
        let env = mccormick_envelope((0.0, 50.0), (0.0, 800.0)).unwrap();
        let (lo, hi) = envelope_range(&env, 0.0, 123.0);
        assert_eq!((lo, hi), (0.0, 0.0));
    }

    #[test]
    fn interior_point_range() {
        // Hand evaluation at (0.5, 0.5) on the unit box:
        // e >= 0, e >= 0.5 + 0.5 - 1 = 0, e <= 0.5, e <= 0.5.
        let env = mccormick_envelope((0.0, 1.0), (0.0, 1.0)).unwrap();
        let (lo, hi) = envelope_range(&env, 0.5, 0.5);
        assert!((lo - 0.0).abs() < 1e-12 && (hi - 0.5).abs() < 1e-12);
        assert!(env.iter().all(|r| r.holds(0.5, 0.5, 0.25, 0.0)));
    }

    #[test]
    fn unbounded_rejected() {
        assert!(mccormick_envelope((0.0, f64::INFINITY), (0.0, 1.0)).is_err());
        assert!(mccormick_envelope((2.0, 1.0), (0.0, 1.0)).is_err());
    }
}
