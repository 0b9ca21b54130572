//! Solver-agnostic mixed-integer linear program.

use std::collections::HashSet;
use std::fmt;

use crate::linearize::LinearizationMode;
use crate::scalar::LpFloat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarType {
    Continuous,
    Binary,
    Integer,
}

impl VarType {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarType::Continuous)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable<F> {
    pub name: String,
    pub lower: F,
    pub upper: F,
    pub kind: VarType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row<F> {
    pub name: String,
    pub sense: Sense,
    pub coeffs: Vec<(usize, F)>,
    pub rhs: F,
}

impl<F: LpFloat> Row<F> {
    pub fn activity(&self, x: &[F]) -> F {
        self.coeffs.iter().fold(F::zero(), |acc, &(j, c)| acc + c * x[j])
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[F]) -> F {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(F::zero()),
            Sense::Ge => (self.rhs - a).max(F::zero()),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata {
    pub instance_id: Option<String>,
    pub mode: Option<LinearizationMode>,
}

/// Minimisation problem `min c'x` over bounded, possibly integral variables
/// and sparse linear rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpProblem<F> {
    pub name: String,
    pub vars: Vec<Variable<F>>,
    pub rows: Vec<Row<F>>,
    pub objective: Vec<(usize, F)>,
    pub metadata: Metadata,
}

impl<F: LpFloat> MilpProblem<F> {
    pub fn new(name: impl Into<String>) -> Self {
        MilpProblem {
            name: name.into(),
            vars: Vec::new(),
            rows: Vec::new(),
            objective: Vec::new(),
            metadata: Metadata::default(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: F, upper: F, kind: VarType) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        self.vars.len() - 1
    }

    pub fn add_row(&mut self, name: impl Into<String>, sense: Sense, coeffs: Vec<(usize, F)>, rhs: F) -> usize {
        self.rows.push(Row {
            name: name.into(),
            sense,
            coeffs,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn objective_value(&self, x: &[F]) -> F {
        self.objective.iter().fold(F::zero(), |acc, &(j, c)| acc + c * x[j])
    }

    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    pub fn integer_vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.vars.iter().enumerate().filter(|(_, v)| v.kind.is_integral()).map(|(j, _)| j)
    }

    /// Checks names, references, binary bounds and finiteness of data.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut names = HashSet::new();
        for v in &self.vars {
            if !names.insert(v.name.as_str()) {
                return Err(format!("duplicate variable name {}", v.name));
            }
            if v.lower.is_nan() || v.upper.is_nan() || v.lower == F::infinity() || v.upper == F::neg_infinity() {
                return Err(format!("invalid bounds on {}", v.name));
            }
            if v.kind == VarType::Binary && (v.lower != F::zero() || v.upper != F::one()) {
                return Err(format!("binary variable {} must have bounds [0,1]", v.name));
            }
        }
        let mut row_names = HashSet::new();
        for r in &self.rows {
            if !row_names.insert(r.name.as_str()) {
                return Err(format!("duplicate row name {}", r.name));
            }
            if !r.rhs.is_finite() {
                return Err(format!("non-finite right side in row {}", r.name));
            }
            for &(j, c) in &r.coeffs {
                if j >= self.vars.len() {
                    return Err(format!("row {} references unknown variable {j}", r.name));
                }
                if !c.is_finite() {
                    return Err(format!("non-finite coefficient in row {}", r.name));
                }
            }
        }
        for &(j, c) in &self.objective {
            if j >= self.vars.len() || !c.is_finite() {
                return Err("invalid objective entry".into());
            }
        }
        Ok(())
    }

    /// Largest bound, row, or integrality violation of `x`.
    pub fn max_violation(&self, x: &[F], int_tol: F) -> F {
        let mut worst = F::zero();
        for (v, &xv) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
            if v.kind.is_integral() && (xv - xv.round()).abs() > int_tol {
                worst = worst.max((xv - xv.round()).abs());
            }
        }
        self.rows.iter().fold(worst, |w, r| w.max(r.violation(x)))
    }

    pub fn is_feasible(&self, x: &[F], tol: F) -> bool {
        x.len() == self.vars.len() && self.max_violation(x, tol) <= tol
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariants_catch_bad_binary_and_duplicates() {
        let mut p = MilpProblem::<f64>::new("t");
        p.add_var("a", 0.0, 2.0, VarType::Binary);
        assert!(p.check_invariants().is_err());
        p.vars[0].upper = 1.0;
        p.add_var("a", 0.0, 1.0, VarType::Continuous);
        assert!(p.check_invariants().unwrap_err().contains("duplicate"));
    }

    #[test]
    fn violation_measures() {
        let mut p = MilpProblem::<f64>::new("t");
        let x = p.add_var("x", 0.0, 5.0, VarType::Integer);
        p.add_row("r", Sense::Le, vec![(x, 1.0)], 3.0);
        assert!(p.is_feasible(&[3.0], 1e-9));
        assert_eq!(p.max_violation(&[4.0], 1e-9), 1.0);
        assert!((p.max_violation(&[2.5], 1e-9) - 0.5).abs() < 1e-12);
    }
}
