//! Problem containers: a linear program with named rows and columns, and a
//! mixed-integer wrapper that marks a subset of columns as binary.

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

/// A constraint `lower <= sum(coeffs) <= upper`. Equality rows have
/// `lower == upper`, one-sided rows carry an infinite side.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub coeffs: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub name: String,
    pub sense: Sense,
    pub objective_offset: f64,
    pub(crate) cols: Vec<Column>,
    pub(crate) rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(name: impl Into<String>, sense: Sense) -> Self {
        Self {
            name: name.into(),
            sense,
            objective_offset: 0.0,
            cols: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_col(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.cols.push(Column {
            name: name.into(),
            lower,
            upper,
            cost,
        });
        self.cols.len() - 1
    }

    /// Adds a row; duplicate column entries are merged and explicit zeros dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
    ) -> usize {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (c, v) in coeffs {
            match merged.iter_mut().find(|(k, _)| *k == c) {
                Some(entry) => entry.1 += v,
                None => merged.push((c, v)),
            }
        }
        merged.retain(|(_, v)| *v != 0.0);
        self.rows.push(Row {
            name: name.into(),
            lower,
            upper,
            coeffs: merged,
        });
        self.rows.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> &[Column] {
        &self.cols
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn col_mut(&mut self, j: usize) -> &mut Column {
        &mut self.cols[j]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut Row {
        &mut self.rows[i]
    }

    pub fn set_cost(&mut self, j: usize, cost: f64) {
        self.cols[j].cost = cost;
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.cols[j].lower = lower;
        self.cols[j].upper = upper;
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    /// Objective value of `x`, offset included.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.cols.iter().zip(x).map(|(c, v)| c.cost * v).sum::<f64>()
    }

    pub fn row_activity(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (c, &v) in self.cols.iter().zip(x) {
            worst = worst.max(c.lower - v).max(v - c.upper);
        }
        for (r, act) in self.rows.iter().zip(self.row_activity(x)) {
            worst = worst.max(r.lower - act).max(act - r.upper);
        }
        worst
    }

    /// Checks dimensions, index ranges, NaNs and bound ordering.
    pub fn validate(&self) -> Result<(), ModelError> {
        for c in &self.cols {
            if c.lower.is_nan() || c.upper.is_nan() || !c.cost.is_finite() {
                return Err(ModelError::NonFinite(c.name.clone()));
            }
            if c.lower > c.upper {
                return Err(ModelError::InvertedBounds(c.name.clone()));
            }
        }
        for r in &self.rows {
            if r.lower.is_nan() || r.upper.is_nan() {
                return Err(ModelError::NonFinite(r.name.clone()));
            }
            if r.lower > r.upper {
                return Err(ModelError::InvertedBounds(r.name.clone()));
            }
            for &(j, a) in &r.coeffs {
                if j >= self.cols.len() {
                    return Err(ModelError::ColumnOutOfRange {
                        row: r.name.clone(),
                        col: j,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite(r.name.clone()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedIntegerProgram {
    pub lp: LinearProgram,
    binaries: Vec<usize>,
}

impl MixedIntegerProgram {
    pub fn new(lp: LinearProgram) -> Self {
        Self {
            lp,
            binaries: Vec::new(),
        }
    }

    /// Adds a binary column with bounds `[0, 1]`.
    pub fn add_binary(&mut self, name: impl Into<String>, cost: f64) -> usize {
        let j = self.lp.add_col(name, 0.0, 1.0, cost);
        self.binaries.push(j);
        j
    }

    /// Marks an existing column binary, intersecting its bounds with `[0, 1]`.
    pub fn mark_binary(&mut self, j: usize) {
        let c = &mut self.lp.cols[j];
        c.lower = c.lower.max(0.0);
        c.upper = c.upper.min(1.0);
        if !self.binaries.contains(&j) {
            self.binaries.push(j);
        }
    }

    pub fn binaries(&self) -> &[usize] {
        &self.binaries
    }

    pub fn is_binary(&self, j: usize) -> bool {
        self.binaries.contains(&j)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.lp.validate()?;
        for &j in &self.binaries {
            let Some(c) = self.lp.cols.get(j) else {
                return Err(ModelError::BinaryOutOfRange(j));
            };
            if c.lower < 0.0 || c.upper > 1.0 {
                return Err(ModelError::BinaryBounds(c.name.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_row_merges_duplicates_and_drops_zeros() {
        let mut lp = LinearProgram::new("t", Sense::Minimize);
        let x = lp.add_col("x", 0.0, 1.0, 1.0);
        let y = lp.add_col("y", 0.0, 1.0, 1.0);
        lp.add_row("r", 0.0, 1.0, [(x, 1.0), (y, 2.0), (x, 0.5), (y, -2.0)]);
        assert_eq!(lp.rows()[0].coeffs, vec![(x, 1.5)]);
    }

    #[test]
    fn validate_rejects_inverted_bounds_and_bad_index() {
        let mut lp = LinearProgram::new("t", Sense::Minimize);
        lp.add_col("x", 2.0, 1.0, 0.0);
        assert!(matches!(lp.validate(), Err(ModelError::InvertedBounds(_))));
        let mut lp = LinearProgram::new("t", Sense::Minimize);
        lp.add_col("x", 0.0, 1.0, 0.0);
        lp.add_row("r", 0.0, 1.0, [(3, 1.0)]);
        assert!(matches!(lp.validate(), Err(ModelError::ColumnOutOfRange { .. })));
    }

    #[test]
    fn binary_bounds_are_clipped() {
        let mut lp = LinearProgram::new("t", Sense::Minimize);
        let z = lp.add_col("z", -5.0, 5.0, 0.0);
        let mut mip = MixedIntegerProgram::new(lp);
        mip.mark_binary(z);
        assert_eq!((mip.lp.cols()[z].lower, mip.lp.cols()[z].upper), (0.0, 1.0));
        assert!(mip.validate().is_ok());
    }
}
