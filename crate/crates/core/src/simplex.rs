//! Phase-1 simplex over exact rationals.
//!
//! Callers describe rows over nonnegative variables; slack, surplus and
//! artificial columns are added here. The pivot rule is Bland's (lowest
//! eligible entering column, lowest basic index among ratio ties), so the
//! search terminates and the returned vertex is a pure function of the input.

use std::fmt;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Eq => Relation::Eq,
        }
    }

    pub fn holds<T: Scalar>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Eq => lhs == rhs,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

/// One row `sum(coeff * x[var]) relation rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T: Scalar> Row<T> {
    pub fn lhs(&self, x: &[T]) -> T {
        self.coeffs
            .iter()
            .fold(T::zero(), |acc, (v, a)| acc + a.clone() * x[*v].clone())
    }
}

/// Rows over `variables` nonnegative unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandardForm<T> {
    variables: usize,
    rows: Vec<Row<T>>,
}

impl<T: Scalar> StandardForm<T> {
    pub fn new(variables: usize) -> Self {
        Self { variables, rows: Vec::new() }
    }

    /// Panics if a coefficient names a variable outside the form.
    pub fn add_row(&mut self, coeffs: Vec<(usize, T)>, relation: Relation, rhs: T) {
        assert!(
            coeffs.iter().all(|(v, _)| *v < self.variables),
            "coefficient names a variable outside the form"
        );
        self.rows.push(Row { coeffs, relation, rhs });
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn rows(&self) -> &[Row<T>] {
        &self.rows
    }

    /// Exact check of every row and of nonnegativity.
    pub fn satisfied_by(&self, x: &[T]) -> bool {
        x.len() == self.variables
            && x.iter().all(|v| !v.is_negative())
            && self.rows.iter().all(|r| r.relation.holds(&r.lhs(x), &r.rhs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility<T> {
    /// A vertex of the feasible region.
    Feasible(Vec<T>),
    /// The phase-1 optimum: the least total violation, which is positive.
    Infeasible(T),
}

impl<T> Feasibility<T> {
    pub fn point(self) -> Option<Vec<T>> {
        match self {
            Feasibility::Feasible(x) => Some(x),
            Feasibility::Infeasible(_) => None,
        }
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// Reduced costs of the phase-1 objective.
    cost: Vec<T>,
    /// Negated objective value.
    cost_rhs: T,
}

impl<T: Scalar> Tableau<T> {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        if !p.is_one() {
            for v in self.rows[row].iter_mut() {
                if !v.is_zero() {
                    *v = v.clone() / p.clone();
                }
            }
            self.rhs[row] = self.rhs[row].clone() / p;
        }
        let pivot_row = self.rows[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        let eliminate = |target: &mut Vec<T>, target_rhs: &mut T| {
            let factor = target[col].clone();
            if factor.is_zero() {
                return;
            }
            for (t, p) in target.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *t = t.clone() - factor.clone() * p.clone();
                }
            }
            *target_rhs = target_rhs.clone() - factor * pivot_rhs.clone();
        };
        for k in 0..self.rows.len() {
            if k != row {
                let (mut r, mut b) = (std::mem::take(&mut self.rows[k]), self.rhs[k].clone());
                eliminate(&mut r, &mut b);
                self.rows[k] = r;
                self.rhs[k] = b;
            }
        }
        let (mut c, mut b) = (std::mem::take(&mut self.cost), self.cost_rhs.clone());
        eliminate(&mut c, &mut b);
        self.cost = c;
        self.cost_rhs = b;
        self.basis[row] = col;
    }

    /// Bland's rule: lowest column with negative reduced cost enters; among
    /// rows attaining the minimum ratio, the one whose basic column is lowest
    /// leaves.
    fn run(&mut self) {
        while let Some(col) = self.cost.iter().position(|d| d.is_negative()) {
            let mut leave: Option<(usize, T)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][col];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs[r].clone() / a.clone();
                let better = match &leave {
                    None => true,
                    Some((best, best_ratio)) => {
                        ratio < *best_ratio || (ratio == *best_ratio && self.basis[r] < self.basis[*best])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            // Phase 1 is bounded below by zero, so an entering column always
            // has a positive entry.
            let (row, _) = leave.expect("phase-1 objective is bounded");
            self.pivot(row, col);
        }
    }
}

/// Finds a vertex of `{x >= 0 : rows}` or reports infeasibility.
pub fn feasible_basic_point<T: Scalar>(sf: &StandardForm<T>) -> Feasibility<T> {
    let n = sf.variables;
    // rows with nonnegative right-hand side
    let rows: Vec<Row<T>> = sf
        .rows
        .iter()
        .map(|r| {
            if r.rhs.is_negative() {
                Row {
                    coeffs: r.coeffs.iter().map(|(v, a)| (*v, -a.clone())).collect(),
                    relation: r.relation.flipped(),
                    rhs: -r.rhs.clone(),
                }
            } else {
                r.clone()
            }
        })
        .collect();
    let slacks = rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let artificials = rows.iter().filter(|r| r.relation != Relation::Le).count();
    let width = n + slacks + artificials;
    let first_artificial = n + slacks;

    let mut tab = Tableau {
        rows: Vec::with_capacity(rows.len()),
        rhs: Vec::with_capacity(rows.len()),
        basis: Vec::with_capacity(rows.len()),
        cost: vec![T::zero(); width],
        cost_rhs: T::zero(),
    };
    let (mut next_slack, mut next_artificial) = (n, first_artificial);
    for r in &rows {
        let mut dense = vec![T::zero(); width];
        for (v, a) in &r.coeffs {
            dense[*v] = dense[*v].clone() + a.clone();
        }
        match r.relation {
            Relation::Le => {
                dense[next_slack] = T::one();
                tab.basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                dense[next_slack] = -T::one();
                next_slack += 1;
                dense[next_artificial] = T::one();
                tab.basis.push(next_artificial);
                next_artificial += 1;
            }
            Relation::Eq => {
                dense[next_artificial] = T::one();
                tab.basis.push(next_artificial);
                next_artificial += 1;
            }
        }
        tab.rows.push(dense);
        tab.rhs.push(r.rhs.clone());
    }
    // reduced costs of `minimize sum(artificials)` with artificials basic
    for col in first_artificial..width {
        tab.cost[col] = T::one();
    }
    for r in 0..tab.rows.len() {
        if tab.basis[r] >= first_artificial {
            for col in 0..width {
                if !tab.rows[r][col].is_zero() {
                    tab.cost[col] = tab.cost[col].clone() - tab.rows[r][col].clone();
                }
            }
            tab.cost_rhs = tab.cost_rhs.clone() - tab.rhs[r].clone();
        }
    }

    tab.run();
    let optimum = -tab.cost_rhs.clone();
    if optimum.is_positive() {
        return Feasibility::Infeasible(optimum);
    }

    // Drive zero-valued artificials out of the basis. A row with no usable
    // pivot is a redundant combination of the others and carries no variable.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= first_artificial {
            if let Some(col) = (0..first_artificial).find(|&c| !tab.rows[r][c].is_zero()) {
                tab.pivot(r, col);
            } else {
                tab.rows.remove(r);
                tab.rhs.remove(r);
                tab.basis.remove(r);
                continue;
            }
        }
        r += 1;
    }

    let mut x = vec![T::zero(); n];
    for (row, &col) in tab.basis.iter().enumerate() {
        if col < n {
            x[col] = tab.rhs[row].clone();
        }
    }
    debug_assert!(sf.satisfied_by(&x));
    Feasibility::Feasible(x)
}
