//! The LinPro pipeline: the threshold feasibility program, a binary search on
//! its scaling constant `c`, and rounding of an extreme point to an
//! allocation.
//!
//! For references `r_i <= 0` and a constant `c`, agent `i` gets threshold
//! and floor `t_i = w_i = c * r_i`, may only receive chores in
//! `M_i = { j : V_ij >= t_i }`, and the program asks for fractional
//! `x_ij >= 0` with `sum_j V_ij x_ij >= w_i` for every agent and
//! `sum_i x_ij = 1` for every chore.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::algos::wmms_prime;
use crate::format::format_rational;
use crate::model::{Allocation, Instance};
use crate::scalar::Scalar;
use crate::simplex::{feasible_basic_point, Feasibility, Relation, StandardForm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(String),
    #[error("the instance has no agents")]
    NoAgents,
    #[error("expected {expected} reference values, got {got}")]
    WrongReferenceCount { expected: usize, got: usize },
    #[error("reference value {value} for agent {agent} is positive")]
    PositiveReference { agent: usize, value: String },
    #[error("UpperBoundInfeasible: the program is infeasible at c = {0}")]
    UpperBoundInfeasible(String),
    #[error("RoundingInvariantViolation: {0}")]
    RoundingInvariantViolation(String),
}

/// The threshold program at one value of `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProgram<T> {
    c: T,
    thresholds: Vec<T>,
    floors: Vec<T>,
    eligible: Vec<Vec<usize>>,
    eligible_agents: Vec<Vec<usize>>,
    variables: Vec<(usize, usize)>,
    coefficients: Vec<T>,
}

impl<T: Scalar> LpProgram<T> {
    /// Builds the program with `t_i = w_i = c * refs[i]`.
    pub fn build(inst: &Instance<T>, c: &T, refs: &[T]) -> Result<Self, LpError> {
        let scaled: Vec<T> = refs.iter().map(|r| c.clone() * r.clone()).collect();
        Self::with_bounds(inst, c, scaled.clone(), scaled)
    }

    /// Builds the program with separate thresholds and floors, both
    /// nonpositive. `c` is only recorded.
    pub fn with_bounds(inst: &Instance<T>, c: &T, thresholds: Vec<T>, floors: Vec<T>) -> Result<Self, LpError> {
        for refs in [&thresholds, &floors] {
            if refs.len() != inst.agents() {
                return Err(LpError::WrongReferenceCount {
                    expected: inst.agents(),
                    got: refs.len(),
                });
            }
            if let Some(agent) = refs.iter().position(|r| r.is_positive()) {
                return Err(LpError::PositiveReference {
                    agent,
                    value: format_rational(&refs[agent]),
                });
            }
        }
        let mut eligible = vec![Vec::new(); inst.agents()];
        let mut eligible_agents = vec![Vec::new(); inst.chores()];
        let mut variables = Vec::new();
        let mut coefficients = Vec::new();
        for (i, t) in thresholds.iter().enumerate() {
            for (j, v) in inst.row(i).iter().enumerate() {
                if v >= t {
                    eligible[i].push(j);
                    eligible_agents[j].push(i);
                    variables.push((i, j));
                    coefficients.push(v.clone());
                }
            }
        }
        Ok(Self {
            c: c.clone(),
            floors,
            thresholds,
            eligible,
            eligible_agents,
            variables,
            coefficients,
        })
    }

    pub fn c(&self) -> &T {
        &self.c
    }

    pub fn agents(&self) -> usize {
        self.thresholds.len()
    }

    pub fn chores(&self) -> usize {
        self.eligible_agents.len()
    }

    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }

    pub fn floors(&self) -> &[T] {
        &self.floors
    }

    /// `M_i`, in chore order.
    pub fn eligible(&self, agent: usize) -> &[usize] {
        &self.eligible[agent]
    }

    /// `N_j`, in agent order.
    pub fn eligible_agents(&self, chore: usize) -> &[usize] {
        &self.eligible_agents[chore]
    }

    /// The `(agent, chore)` pairs that carry a variable, agent-major.
    pub fn variables(&self) -> &[(usize, usize)] {
        &self.variables
    }

    /// True when some chore has no eligible agent.
    pub fn trivially_infeasible(&self) -> bool {
        self.eligible_agents.iter().any(Vec::is_empty)
    }

    fn value_of(&self, agent: usize, chore: usize) -> Option<&T> {
        self.variables
            .binary_search(&(agent, chore))
            .ok()
            .map(|k| &self.coefficients[k])
    }

    /// Agent rows first, then chore rows.
    pub fn standard_form(&self) -> StandardForm<T> {
        let mut sf = StandardForm::new(self.variables.len());
        let mut agent_rows = vec![Vec::new(); self.agents()];
        let mut chore_rows = vec![Vec::new(); self.chores()];
        for (k, &(i, j)) in self.variables.iter().enumerate() {
            agent_rows[i].push((k, self.coefficients[k].clone()));
            chore_rows[j].push((k, T::one()));
        }
        for (i, coeffs) in agent_rows.into_iter().enumerate() {
            sf.add_row(coeffs, Relation::Ge, self.floors[i].clone());
        }
        for coeffs in chore_rows {
            sf.add_row(coeffs, Relation::Eq, T::one());
        }
        sf
    }

    /// Exact check of every constraint against `point`.
    pub fn satisfied_by(&self, point: &LpPoint<T>) -> bool {
        if point.values.iter().any(|(&(i, j), v)| {
            v.is_negative() || v > &T::one() || self.value_of(i, j).is_none()
        }) {
            return false;
        }
        let mut agent_sums = vec![T::zero(); self.agents()];
        let mut chore_sums = vec![T::zero(); self.chores()];
        for (&(i, j), x) in &point.values {
            let v = self.value_of(i, j).expect("checked above");
            agent_sums[i] = agent_sums[i].clone() + v.clone() * x.clone();
            chore_sums[j] = chore_sums[j].clone() + x.clone();
        }
        agent_sums.iter().zip(&self.floors).all(|(s, w)| s >= w) && chore_sums.iter().all(|s| s.is_one())
    }

    /// Plain-text constraint listing, with `point` appended when given.
    pub fn dump(&self, point: Option<&LpPoint<T>>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "program c = {}", format_rational(&self.c));
        let var = |i: usize, j: usize| format!("x[{i},{j}]");
        for i in 0..self.agents() {
            let terms: Vec<String> = self.eligible[i]
                .iter()
                .map(|&j| {
                    let v = self.value_of(i, j).expect("eligible pair has a variable");
                    format!("{} {}", format_rational(v), var(i, j))
                })
                .collect();
            let lhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            let _ = writeln!(
                out,
                "agent {i}: t = {}, w = {}: {lhs} >= {}",
                format_rational(&self.thresholds[i]),
                format_rational(&self.floors[i]),
                format_rational(&self.floors[i]),
            );
        }
        for j in 0..self.chores() {
            let terms: Vec<String> = self.eligible_agents[j].iter().map(|&i| var(i, j)).collect();
            let lhs = if terms.is_empty() { "0".to_string() } else { terms.join(" + ") };
            let _ = writeln!(out, "chore {j}: {lhs} = 1");
        }
        if let Some(p) = point {
            let _ = writeln!(out, "point{}:", if p.basic { " (basic)" } else { "" });
            for (&(i, j), v) in &p.values {
                let _ = writeln!(out, "  {} = {}", var(i, j), format_rational(v));
            }
        }
        out
    }
}

/// A fractional assignment; only nonzero entries are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpPoint<T> {
    pub values: BTreeMap<(usize, usize), T>,
    pub basic: bool,
}

impl<T: Scalar> LpPoint<T> {
    /// The integral point of an allocation.
    pub fn from_allocation(alloc: &Allocation) -> Self {
        Self {
            values: alloc.owner.iter().enumerate().map(|(j, &i)| ((i, j), T::one())).collect(),
            basic: false,
        }
    }

    pub fn get(&self, agent: usize, chore: usize) -> T {
        self.values.get(&(agent, chore)).cloned().unwrap_or_else(T::zero)
    }

    pub fn nonzeros(&self) -> usize {
        self.values.len()
    }

    pub fn is_integral(&self) -> bool {
        self.values.values().all(|v| v.is_one())
    }
}

/// Connected component of an [`AssignmentGraph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub agents: Vec<usize>,
    pub chores: Vec<usize>,
    pub edges: usize,
}

impl Component {
    /// A tree or a tree plus one edge.
    pub fn is_pseudotree(&self) -> bool {
        self.edges <= self.agents.len() + self.chores.len()
    }
}

/// Bipartite support graph of a point: agents on one side, chores on the
/// other, an edge wherever `x_ij > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentGraph {
    agents: usize,
    chores: usize,
    edges: Vec<(usize, usize)>,
    components: Vec<Component>,
}

impl AssignmentGraph {
    pub fn new<T: Scalar>(agents: usize, chores: usize, point: &LpPoint<T>) -> Self {
        let edges: Vec<(usize, usize)> = point
            .values
            .iter()
            .filter(|(_, v)| v.is_positive())
            .map(|(&e, _)| e)
            .collect();
        // union-find over agents 0..n then chores n..n+m
        let mut parent: Vec<usize> = (0..agents + chores).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(i, j) in &edges {
            let (a, b) = (find(&mut parent, i), find(&mut parent, agents + j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut by_root: BTreeMap<usize, Component> = BTreeMap::new();
        let blank = || Component { agents: vec![], chores: vec![], edges: 0 };
        for node in 0..agents + chores {
            let root = find(&mut parent, node);
            let comp = by_root.entry(root).or_insert_with(blank);
            if node < agents {
                comp.agents.push(node);
            } else {
                comp.chores.push(node - agents);
            }
        }
        for &(i, _) in &edges {
            let root = find(&mut parent, i);
            by_root.get_mut(&root).expect("root recorded").edges += 1;
        }
        Self {
            agents,
            chores,
            edges,
            components: by_root.into_values().collect(),
        }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_pseudoforest(&self) -> bool {
        self.components.iter().all(Component::is_pseudotree)
    }

    pub fn chore_degree(&self, chore: usize) -> usize {
        self.edges.iter().filter(|&&(_, j)| j == chore).count()
    }

    fn agents(&self) -> usize {
        self.agents
    }

    fn chores(&self) -> usize {
        self.chores
    }
}

/// A basic feasible point of the program, or `None` if it is infeasible.
pub fn check_feasible<T: Scalar>(p: &LpProgram<T>) -> Option<LpPoint<T>> {
    if p.trivially_infeasible() {
        return None;
    }
    match feasible_basic_point(&p.standard_form()) {
        Feasibility::Feasible(x) => {
            let values = p
                .variables
                .iter()
                .zip(x)
                .filter(|(_, v)| !v.is_zero())
                .map(|(&e, v)| (e, v))
                .collect();
            Some(LpPoint { values, basic: true })
        }
        Feasibility::Infeasible(_) => None,
    }
}

fn augment(
    chore: usize,
    adjacency: &[Vec<usize>],
    matched_to: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for &agent in &adjacency[chore] {
        if seen[agent] {
            continue;
        }
        seen[agent] = true;
        let free = match matched_to[agent] {
            None => true,
            Some(other) => augment(other, adjacency, matched_to, seen),
        };
        if free {
            matched_to[agent] = Some(chore);
            return true;
        }
    }
    false
}

/// Rounds a basic feasible point to an allocation meeting the doubled floor
/// `w_i + t_i`.
///
/// Chores whose only support edge carries the full unit are assigned along
/// it. The chores left are fractional, each with at least two support edges;
/// they are matched to distinct agents by augmenting paths (chores in index
/// order, agents in index order), so every agent gains at most one chore
/// beyond its integral ones, and that chore is worth at least `t_i`.
pub fn round_extreme_point<T: Scalar>(p: &LpProgram<T>, x: &LpPoint<T>) -> Result<Allocation, LpError> {
    let violation = |msg: String| Err(LpError::RoundingInvariantViolation(msg));
    if !p.satisfied_by(x) {
        return violation("the point does not satisfy the program".into());
    }
    let graph = AssignmentGraph::new(p.agents(), p.chores(), x);
    if !graph.is_pseudoforest() {
        return violation("the support graph is not a pseudoforest".into());
    }
    let mut adjacency = vec![Vec::new(); graph.chores()];
    for &(i, j) in graph.edges() {
        adjacency[j].push(i);
    }
    let mut owner: Vec<Option<usize>> = vec![None; graph.chores()];
    // Removing a chore never changes another chore's degree, so one sweep
    // reaches the fixed point of the peeling.
    let mut peeled = true;
    while peeled {
        peeled = false;
        for j in 0..graph.chores() {
            if owner[j].is_none() && adjacency[j].len() == 1 {
                owner[j] = Some(adjacency[j][0]);
                peeled = true;
            }
        }
    }
    let mut matched_to: Vec<Option<usize>> = vec![None; graph.agents()];
    for (j, slot) in owner.iter().enumerate() {
        if slot.is_some() {
            continue;
        }
        let mut seen = vec![false; graph.agents()];
        if !augment(j, &adjacency, &mut matched_to, &mut seen) {
            return violation(format!("fractional chore {j} cannot be matched"));
        }
    }
    for (agent, chore) in matched_to.iter().enumerate() {
        if let Some(j) = chore {
            owner[*j] = Some(agent);
        }
    }
    let owner: Vec<usize> = match owner.into_iter().collect::<Option<Vec<_>>>() {
        Some(o) => o,
        None => return violation("some chore has no support edge".into()),
    };
    let alloc = Allocation::new(owner);
    let mut sums = vec![T::zero(); p.agents()];
    for (j, &i) in alloc.owner.iter().enumerate() {
        match p.value_of(i, j) {
            Some(v) => sums[i] = sums[i].clone() + v.clone(),
            None => return violation(format!("chore {j} went to ineligible agent {i}")),
        }
    }
    for (i, s) in sums.iter().enumerate() {
        let floor = p.floors[i].clone() + p.thresholds[i].clone();
        if *s < floor {
            return violation(format!(
                "agent {i} gets {} below the floor {}",
                format_rational(s),
                format_rational(&floor)
            ));
        }
    }
    Ok(alloc)
}

/// `ceil(log2(4(n-1)/eps))`, the most halvings the search can take; 0 when
/// the interval starts at most `eps/4` wide.
pub fn iteration_bound<T: Scalar>(agents: usize, epsilon: &T) -> u32 {
    let width = T::from_usize_exact(agents.saturating_sub(1));
    let quarter = epsilon.clone() / T::from_usize_exact(4);
    let mut k = 0;
    let mut span = width;
    while span > quarter {
        span = span / T::from_usize_exact(2);
        k += 1;
    }
    k
}

/// Outcome of [`lin_pro`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinProResult<T> {
    pub allocation: Allocation,
    /// The upper end `u` of the search, at which the program was solved.
    pub c: T,
    /// The lower end `l` of the search.
    pub lower: T,
    pub iterations: u32,
    /// Each probed `c` with its feasibility, in search order.
    pub probes: Vec<(T, bool)>,
    /// References used for thresholds.
    pub wmms_prime: Vec<T>,
    pub program: LpProgram<T>,
    pub point: LpPoint<T>,
}

fn check_epsilon<T: Scalar>(epsilon: &T) -> Result<(), LpError> {
    if epsilon.is_positive() {
        Ok(())
    } else {
        Err(LpError::InvalidEpsilon(format_rational(epsilon)))
    }
}

/// LinPro with references `algos::wmms_prime`.
pub fn lin_pro<T: Scalar>(inst: &Instance<T>, epsilon: &T) -> Result<LinProResult<T>, LpError> {
    check_epsilon(epsilon)?;
    if inst.agents() == 0 {
        return Err(LpError::NoAgents);
    }
    let refs = wmms_prime(inst);
    let quarter = epsilon.clone() / T::from_usize_exact(4);
    let mut upper = T::from_usize_exact(inst.agents());
    let mut lower = T::one();
    let mut found: Option<(LpProgram<T>, LpPoint<T>)> = None;
    let mut iterations = 0;
    let mut probes = Vec::new();
    while upper.clone() - lower.clone() > quarter {
        let c = (upper.clone() + lower.clone()) / T::from_usize_exact(2);
        let program = LpProgram::build(inst, &c, &refs)?;
        iterations += 1;
        let point = check_feasible(&program);
        probes.push((c.clone(), point.is_some()));
        match point {
            Some(point) => {
                upper = c;
                found = Some((program, point));
            }
            None => lower = c,
        }
    }
    let (program, point) = match found {
        Some(found) => found,
        None => {
            let program = LpProgram::build(inst, &upper, &refs)?;
            match check_feasible(&program) {
                Some(point) => (program, point),
                None => return Err(LpError::UpperBoundInfeasible(format_rational(&upper))),
            }
        }
    };
    let allocation = round_extreme_point(&program, &point)?;
    Ok(LinProResult {
        allocation,
        c: upper,
        lower,
        iterations,
        probes,
        wmms_prime: refs,
        program,
        point,
    })
}

/// Feasibility of the program at `c` for the given references.
pub fn feasible_at<T: Scalar>(inst: &Instance<T>, c: &T, refs: &[T]) -> Result<bool, LpError> {
    Ok(check_feasible(&LpProgram::build(inst, c, refs)?).is_some())
}

/// Bracket `(lower, upper)` around the least feasible `c` in `[0, n]`:
/// `upper` is feasible, `lower` is infeasible or 0, and
/// `upper - lower <= tolerance`.
pub fn min_feasible_c<T: Scalar>(inst: &Instance<T>, refs: &[T], tolerance: &T) -> Result<(T, T), LpError> {
    check_epsilon(tolerance)?;
    if inst.agents() == 0 {
        return Err(LpError::NoAgents);
    }
    let mut upper = T::from_usize_exact(inst.agents());
    if !feasible_at(inst, &upper, refs)? {
        return Err(LpError::UpperBoundInfeasible(format_rational(&upper)));
    }
    let mut lower = T::zero();
    if feasible_at(inst, &lower, refs)? {
        return Ok((lower.clone(), lower));
    }
    while upper.clone() - lower.clone() > *tolerance {
        let c = (upper.clone() + lower.clone()) / T::from_usize_exact(2);
        if feasible_at(inst, &c, refs)? {
            upper = c;
        } else {
            lower = c;
        }
    }
    Ok((lower, upper))
}
