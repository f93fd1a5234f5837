//! Dense-tableau simplex for feasibility of `{x | A x <= b, E x = f}` with free `x`.
//!
//! Rows are scaled to unit max-abs coefficient before solving, so tolerances are
//! measured in those units and the feasibility status does not depend on the
//! scale of individual constraints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, AffineMap, LinearSolveStructure, Matrix};

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-7;

const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-10;
const RATIO_TIE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityProblem {
    a_ineq: Matrix,
    b_ineq: Vec<f64>,
    a_eq: Matrix,
    b_eq: Vec<f64>,
}

impl FeasibilityProblem {
    pub fn new(a_ineq: Matrix, b_ineq: Vec<f64>, a_eq: Matrix, b_eq: Vec<f64>) -> Result<Self> {
        if a_ineq.rows() != b_ineq.len() {
            return Err(Error::dims("inequality rhs", a_ineq.rows(), b_ineq.len()));
        }
        if a_eq.rows() != b_eq.len() {
            return Err(Error::dims("equality rhs", a_eq.rows(), b_eq.len()));
        }
        if a_eq.rows() > 0 && a_ineq.rows() > 0 && a_eq.cols() != a_ineq.cols() {
            return Err(Error::dims("constraint columns", a_ineq.cols(), a_eq.cols()));
        }
        if b_ineq.iter().chain(&b_eq).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("constraint right-hand side"));
        }
        let n = a_ineq.cols().max(a_eq.cols());
        let a_ineq = if a_ineq.rows() == 0 { Matrix::zeros(0, n) } else { a_ineq };
        let a_eq = if a_eq.rows() == 0 { Matrix::zeros(0, n) } else { a_eq };
        Ok(Self {
            a_ineq,
            b_ineq,
            a_eq,
            b_eq,
        })
    }

    pub fn inequalities(a: Matrix, b: Vec<f64>) -> Result<Self> {
        let n = a.cols();
        Self::new(a, b, Matrix::zeros(0, n), Vec::new())
    }

    pub fn num_vars(&self) -> usize {
        self.a_ineq.cols()
    }

    pub fn a_ineq(&self) -> &Matrix {
        &self.a_ineq
    }

    pub fn b_ineq(&self) -> &[f64] {
        &self.b_ineq
    }

    pub fn a_eq(&self) -> &Matrix {
        &self.a_eq
    }

    pub fn b_eq(&self) -> &[f64] {
        &self.b_eq
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityResult {
    pub status: FeasibilityStatus,
    /// Present iff feasible.
    pub witness: Option<Vec<f64>>,
    /// Worst scaled constraint violation of the witness; for infeasible
    /// problems, the optimal phase-one objective.
    pub residual: f64,
}

impl FeasibilityResult {
    pub fn is_feasible(&self) -> bool {
        self.status == FeasibilityStatus::Feasible
    }

    fn infeasible(residual: f64) -> Self {
        Self {
            status: FeasibilityStatus::Infeasible,
            witness: None,
            residual,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    /// Eliminate equality rows through a pseudo-inverse and null-space basis
    /// before running the simplex.
    pub presolve: bool,
    /// Pivot cap is `factor * (rows + columns)` of the tableau.
    pub pivot_cap_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_FEASIBILITY_TOL,
            presolve: true,
            pivot_cap_factor: 50,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

pub fn solve_feasibility(p: &FeasibilityProblem, tol: f64) -> Result<FeasibilityResult> {
    solve_feasibility_with(p, &SolverOptions::with_tol(tol))
}

pub fn solve_feasibility_with(
    p: &FeasibilityProblem,
    opts: &SolverOptions,
) -> Result<FeasibilityResult> {
    check_tol(opts.tol)?;
    let ineq = ScaledRows::new(&p.a_ineq, &p.b_ineq);
    let eq = ScaledRows::new(&p.a_eq, &p.b_eq);
    let n = p.num_vars();
    let result = if opts.presolve && eq.len() > 0 {
        let structure = LinearSolveStructure::new(&eq.matrix(n));
        let reduced_a = reduce_rows(&ineq.rows, &structure.null_basis);
        solve_with_structure(&ineq, &reduced_a, &eq, &structure, opts)?
    } else {
        run_phase_one(&ineq, &eq, n, opts)?
    };
    Ok(result)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be finite and >= 0, got {tol}")));
    }
    Ok(())
}

/// Rows divided by their max-abs coefficient. Zero rows are kept separately
/// as plain sign checks on the right-hand side.
#[derive(Clone, Debug)]
struct ScaledRows {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    scale: Vec<f64>,
    /// Right-hand sides of all-zero rows.
    zero_rhs: Vec<f64>,
    /// Position of each kept row in the original matrix (zero rows are dropped).
    zero_index: Vec<usize>,
}

impl ScaledRows {
    fn new(a: &Matrix, b: &[f64]) -> Self {
        let mut out = ScaledRows {
            rows: Vec::new(),
            rhs: Vec::new(),
            scale: Vec::new(),
            zero_rhs: Vec::new(),
            zero_index: Vec::new(),
        };
        for (i, &bi) in b.iter().enumerate() {
            let row = a.row(i);
            let s = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if s == 0.0 {
                out.zero_rhs.push(bi);
                out.zero_index.push(i);
            } else {
                out.rows.push(row.iter().map(|v| v / s).collect());
                out.rhs.push(bi / s);
                out.scale.push(s);
            }
        }
        out
    }

    fn len(&self) -> usize {
        self.rows.len()
    }

    fn matrix(&self, n: usize) -> Matrix {
        if self.rows.is_empty() {
            Matrix::zeros(0, n)
        } else {
            Matrix::from_rows(&self.rows).expect("scaled rows are finite")
        }
    }

    fn ineq_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, &b)| dot(r, x) - b);
        let zeros = self.zero_rhs.iter().map(|&b| -b);
        rows.chain(zeros).fold(0.0f64, f64::max)
    }

    fn eq_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .zip(&self.rhs)
            .map(|(r, &b)| (dot(r, x) - b).abs());
        let zeros = self.zero_rhs.iter().map(|b| b.abs());
        rows.chain(zeros).fold(0.0f64, f64::max)
    }
}

fn reduce_rows(rows: &[Vec<f64>], basis: &Matrix) -> Vec<Vec<f64>> {
    let k = basis.cols();
    rows.iter()
        .map(|r| {
            (0..k)
                .map(|c| r.iter().enumerate().map(|(i, v)| v * basis.get(i, c)).sum())
                .collect()
        })
        .collect()
}

fn verify(
    ineq: &ScaledRows,
    eq: &ScaledRows,
    x: Vec<f64>,
    tol: f64,
    pivots: usize,
) -> Result<FeasibilityResult> {
    let residual = ineq.ineq_violation(&x).max(eq.eq_violation(&x));
    // roundoff allowance on top of the user tolerance
    if residual > tol * (1.0 + 1e-6) + 1e-11 {
        return Err(Error::SolverStall {
            pivots,
            context: format!(": witness fails substitution check (violation {residual:.3e})"),
        });
    }
    Ok(FeasibilityResult {
        status: FeasibilityStatus::Feasible,
        witness: Some(x),
        residual,
    })
}

fn run_phase_one(
    ineq: &ScaledRows,
    eq: &ScaledRows,
    n: usize,
    opts: &SolverOptions,
) -> Result<FeasibilityResult> {
    let zero_worst = ineq
        .zero_rhs
        .iter()
        .map(|&b| -b)
        .chain(eq.zero_rhs.iter().map(|b| b.abs()))
        .fold(0.0f64, f64::max);
    if zero_worst > opts.tol {
        return Ok(FeasibilityResult::infeasible(zero_worst));
    }
    let mut t = Tableau::phase_one(&ineq.rows, &ineq.rhs, &eq.rows, &eq.rhs, n, opts);
    t.optimize()?;
    let objective = t.objective();
    if objective > opts.tol {
        return Ok(FeasibilityResult::infeasible(objective));
    }
    let x = t.primal(n);
    let pivots = t.pivots;
    verify(ineq, eq, x, opts.tol, pivots)
}

/// Equality rows are handled through `structure` (built from the scaled
/// equality matrix); `reduced_a` is the scaled inequality matrix times the
/// null-space basis.
fn solve_with_structure(
    ineq: &ScaledRows,
    reduced_a: &[Vec<f64>],
    eq: &ScaledRows,
    structure: &LinearSolveStructure,
    opts: &SolverOptions,
) -> Result<FeasibilityResult> {
    let x0 = structure
        .pinv
        .matvec(&eq.rhs)
        .expect("pseudo-inverse dimensions");
    let eq_res = eq.eq_violation(&x0);
    if eq_res > opts.tol {
        return Ok(FeasibilityResult::infeasible(eq_res));
    }
    let nullity = structure.null_basis.cols();
    if nullity == 0 {
        let v = ineq.ineq_violation(&x0);
        if v > opts.tol {
            return Ok(FeasibilityResult::infeasible(v));
        }
        return verify(ineq, eq, x0, opts.tol, 0);
    }
    let shifted: Vec<f64> = ineq
        .rows
        .iter()
        .zip(&ineq.rhs)
        .map(|(r, &b)| b - dot(r, &x0))
        .collect();
    // rows of the reduced system are not rescaled, so their units match the
    // original inequality rows
    let zero_worst = ineq.zero_rhs.iter().map(|&b| -b).fold(0.0f64, f64::max);
    if zero_worst > opts.tol {
        return Ok(FeasibilityResult::infeasible(zero_worst));
    }
    let mut t = Tableau::phase_one(reduced_a, &shifted, &[], &[], nullity, opts);
    t.optimize()?;
    let objective = t.objective();
    if objective > opts.tol {
        return Ok(FeasibilityResult::infeasible(objective));
    }
    let z = t.primal(nullity);
    let mut x = x0;
    for (i, xi) in x.iter_mut().enumerate() {
        *xi += (0..nullity)
            .map(|c| structure.null_basis.get(i, c) * z[c])
            .sum::<f64>();
    }
    let pivots = t.pivots;
    verify(ineq, eq, x, opts.tol, pivots)
}

/// Feasibility of `{x | A x <= b, M x + c = t}` for a fixed polyhedron and
/// affine map and many targets `t`. The factorisation of `M` is computed once.
#[derive(Clone, Debug)]
pub struct PreimageProblem {
    ineq: ScaledRows,
    offset: Vec<f64>,
    eq_template: ScaledRows,
    structure: LinearSolveStructure,
    reduced_a: Vec<Vec<f64>>,
    opts: SolverOptions,
}

impl PreimageProblem {
    pub fn new(a: &Matrix, b: &[f64], map: &AffineMap, opts: SolverOptions) -> Result<Self> {
        check_tol(opts.tol)?;
        if a.rows() != b.len() {
            return Err(Error::dims("inequality rhs", a.rows(), b.len()));
        }
        if a.cols() != map.input_dim() {
            return Err(Error::dims("preimage map input", a.cols(), map.input_dim()));
        }
        let ineq = ScaledRows::new(a, b);
        let eq_template = ScaledRows::new(map.linear(), &vec![0.0; map.output_dim()]);
        let structure = LinearSolveStructure::new(&eq_template.matrix(a.cols()));
        let reduced_a = reduce_rows(&ineq.rows, &structure.null_basis);
        Ok(Self {
            ineq,
            offset: map.offset().to_vec(),
            eq_template,
            structure,
            reduced_a,
            opts,
        })
    }

    pub fn target_dim(&self) -> usize {
        self.offset.len()
    }

    /// Rank of the linear part.
    pub fn rank(&self) -> usize {
        self.structure.rank
    }

    pub fn solve(&self, target: &[f64]) -> Result<FeasibilityResult> {
        if target.len() != self.offset.len() {
            return Err(Error::dims("preimage target", self.offset.len(), target.len()));
        }
        let mut eq = self.eq_template.clone();
        let mut kept = 0;
        let mut zero = 0;
        for (i, (&t, &c)) in target.iter().zip(&self.offset).enumerate() {
            let rhs = t - c;
            if eq.zero_index.get(zero) == Some(&i) {
                eq.zero_rhs[zero] = rhs;
                zero += 1;
            } else {
                eq.rhs[kept] = rhs / eq.scale[kept];
                kept += 1;
            }
        }
        let zero_worst = eq.zero_rhs.iter().map(|b| b.abs()).fold(0.0f64, f64::max);
        if zero_worst > self.opts.tol {
            return Ok(FeasibilityResult::infeasible(zero_worst));
        }
        solve_with_structure(&self.ineq, &self.reduced_a, &eq, &self.structure, &self.opts)
    }
}

/// Minimise `c . x` over `{x | A x <= b}`, returning the optimal value and a
/// minimiser. Errors with [`Error::Unbounded`] when the objective is unbounded
/// below and [`Error::InvalidArgument`] when the set is empty.
pub fn minimize(c: &[f64], a: &Matrix, b: &[f64], opts: &SolverOptions) -> Result<(f64, Vec<f64>)> {
    check_tol(opts.tol)?;
    if a.rows() != b.len() {
        return Err(Error::dims("inequality rhs", a.rows(), b.len()));
    }
    if c.len() != a.cols() {
        return Err(Error::dims("objective length", a.cols(), c.len()));
    }
    let n = c.len();
    let ineq = ScaledRows::new(a, b);
    if ineq.zero_rhs.iter().any(|&v| -v > opts.tol) {
        return Err(Error::InvalidArgument("minimize over an empty polyhedron".into()));
    }
    let mut t = Tableau::phase_one(&ineq.rows, &ineq.rhs, &[], &[], n, opts);
    t.optimize()?;
    if t.objective() > opts.tol {
        return Err(Error::InvalidArgument("minimize over an empty polyhedron".into()));
    }
    t.start_phase_two(c);
    t.optimize()?;
    let x = t.primal(n);
    Ok((dot(c, &x), x))
}

/// Standard-form tableau over `u, v >= 0` (x = u - v), slacks and artificials.
struct Tableau {
    rows: usize,
    width: usize,
    t: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    allowed: Vec<bool>,
    first_artificial: usize,
    pivots: usize,
    cap: usize,
}

impl Tableau {
    fn phase_one(
        a: &[Vec<f64>],
        b: &[f64],
        e: &[Vec<f64>],
        f: &[f64],
        n: usize,
        opts: &SolverOptions,
    ) -> Self {
        let mi = a.len();
        let rows = mi + e.len();
        let needs_art: Vec<bool> = b
            .iter()
            .map(|&v| v < 0.0)
            .chain(e.iter().map(|_| true))
            .collect();
        let n_art = needs_art.iter().filter(|&&x| x).count();
        let first_slack = 2 * n;
        let first_artificial = first_slack + mi;
        let cols = first_artificial + n_art;
        let width = cols + 1;
        let mut t = vec![0.0; rows * width];
        let mut basis = vec![0; rows];
        let mut art = first_artificial;
        for r in 0..rows {
            let (coeffs, rhs, slack) = if r < mi {
                (&a[r], b[r], Some(first_slack + r))
            } else {
                (&e[r - mi], f[r - mi], None)
            };
            let sign = if needs_art[r] && rhs < 0.0 { -1.0 } else { 1.0 };
            let row = &mut t[r * width..(r + 1) * width];
            for (j, &v) in coeffs.iter().enumerate() {
                row[j] = sign * v;
                row[n + j] = -sign * v;
            }
            if let Some(s) = slack {
                row[s] = sign;
            }
            row[cols] = sign * rhs;
            if needs_art[r] {
                row[art] = 1.0;
                basis[r] = art;
                art += 1;
            } else {
                basis[r] = slack.expect("inequality row");
            }
        }
        let mut obj = vec![0.0; width];
        for r in 0..rows {
            if needs_art[r] {
                for c in 0..width {
                    obj[c] -= t[r * width + c];
                }
            }
        }
        for o in obj.iter_mut().take(cols).skip(first_artificial) {
            *o = 0.0;
        }
        Self {
            rows,
            width,
            t,
            obj,
            basis,
            allowed: vec![true; cols],
            first_artificial,
            pivots: 0,
            cap: opts.pivot_cap_factor.max(1) * (rows + width),
        }
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    /// Current objective value.
    fn objective(&self) -> f64 {
        -self.obj[self.rhs_col()]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let inv = 1.0 / self.t[r * w + e];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.t[r * w + e] = 1.0;
        let prow = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + e];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
                row[e] = 0.0;
                if row[w - 1] < 0.0 && row[w - 1] > -1e-13 {
                    row[w - 1] = 0.0;
                }
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (v, p) in self.obj.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    /// Bland's rule: lowest-index improving column enters; ratio ties leave by
    /// lowest basic-variable index.
    fn optimize(&mut self) -> Result<()> {
        let w = self.width;
        let rhs = self.rhs_col();
        loop {
            let Some(e) = (0..rhs).find(|&j| self.allowed[j] && self.obj[j] < -COST_EPS) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for r in 0..self.rows {
                let a = self.t[r * w + e];
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.t[r * w + rhs].max(0.0) / a;
                let bv = self.basis[r];
                best = match best {
                    None => Some((ratio, bv, r)),
                    Some((br, bb, rr)) => {
                        if ratio < br - RATIO_TIE || (ratio <= br + RATIO_TIE && bv < bb) {
                            Some((ratio, bv, r))
                        } else {
                            Some((br, bb, rr))
                        }
                    }
                };
            }
            let Some((_, _, r)) = best else {
                return Err(Error::Unbounded);
            };
            if self.pivots >= self.cap {
                return Err(Error::SolverStall {
                    pivots: self.pivots,
                    context: String::new(),
                });
            }
            self.pivot(r, e);
        }
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut vals = vec![0.0; 2 * n];
        let rhs = self.rhs_col();
        for (r, &bv) in self.basis.iter().enumerate() {
            if bv < 2 * n {
                vals[bv] = self.t[r * self.width + rhs];
            }
        }
        (0..n).map(|i| vals[i] - vals[n + i]).collect()
    }

    fn start_phase_two(&mut self, c: &[f64]) {
        let n = c.len();
        let w = self.width;
        // drive zero-level artificials out of the basis
        for r in 0..self.rows {
            if self.basis[r] >= self.first_artificial {
                if let Some(e) = (0..self.first_artificial).find(|&j| self.t[r * w + j].abs() > PIVOT_EPS) {
                    self.pivot(r, e);
                }
            }
        }
        for j in self.first_artificial..self.allowed.len() {
            self.allowed[j] = false;
        }
        let mut obj = vec![0.0; w];
        obj[..n].copy_from_slice(c);
        for (j, &cj) in c.iter().enumerate() {
            obj[n + j] = -cj;
        }
        for r in 0..self.rows {
            let cb = obj[self.basis[r]];
            if cb != 0.0 {
                for col in 0..w {
                    obj[col] -= cb * self.t[r * w + col];
                }
            }
        }
        self.obj = obj;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn unit_interval_feasible() {
        let p = FeasibilityProblem::inequalities(m(&[&[-1.0], &[1.0]]), vec![0.0, 1.0]).unwrap();
        let r = solve_feasibility(&p, 1e-7).unwrap();
        assert!(r.is_feasible());
        let w = r.witness.unwrap()[0];
        assert!((-1e-7..=1.0 + 1e-7).contains(&w));
    }

    #[test]
    fn contradictory_bounds_infeasible() {
        let p = FeasibilityProblem::inequalities(m(&[&[1.0], &[-1.0]]), vec![-1.0, -1.0]).unwrap();
        let r = solve_feasibility(&p, 1e-7).unwrap();
        assert_eq!(r.status, FeasibilityStatus::Infeasible);
        assert!(r.witness.is_none());
    }

    #[test]
    fn abs_net_image_match() {
        // region x >= 0 in the box, image equation -x = ... written as x = 0.5
        let a = m(&[&[-1.0], &[1.0], &[-1.0]]);
        let b = vec![0.0, 100.0, 100.0];
        let p = FeasibilityProblem::new(a.clone(), b.clone(), m(&[&[-1.0]]), vec![-0.5]).unwrap();
        for presolve in [true, false] {
            let opts = SolverOptions {
                presolve,
                ..SolverOptions::default()
            };
            let r = solve_feasibility_with(&p, &opts).unwrap();
            assert!(r.is_feasible());
            assert!((r.witness.unwrap()[0] - 0.5).abs() < 1e-9);
        }
        let p = FeasibilityProblem::new(a, b, m(&[&[1.0]]), vec![-0.5]).unwrap();
        assert!(!solve_feasibility(&p, 1e-7).unwrap().is_feasible());
    }

    #[test]
    fn equality_with_null_space() {
        // x + y = 1, x >= 2, y >= 0 is infeasible; with y >= -1 feasible
        let e = m(&[&[1.0, 1.0]]);
        let p = FeasibilityProblem::new(m(&[&[-1.0, 0.0], &[0.0, -1.0]]), vec![-2.0, 0.0], e.clone(), vec![1.0]).unwrap();
        for presolve in [true, false] {
            let opts = SolverOptions { presolve, ..Default::default() };
            assert!(!solve_feasibility_with(&p, &opts).unwrap().is_feasible());
        }
        let p = FeasibilityProblem::new(m(&[&[-1.0, 0.0], &[0.0, -1.0]]), vec![-2.0, 1.0], e, vec![1.0]).unwrap();
        for presolve in [true, false] {
            let opts = SolverOptions { presolve, ..Default::default() };
            let r = solve_feasibility_with(&p, &opts).unwrap();
            assert!(r.is_feasible());
            let w = r.witness.unwrap();
            assert!((w[0] + w[1] - 1.0).abs() < 1e-9 && w[0] >= 2.0 - 1e-9);
        }
    }

    #[test]
    fn zero_rows_and_empty_problems() {
        let p = FeasibilityProblem::inequalities(m(&[&[0.0, 0.0]]), vec![-1.0]).unwrap();
        assert!(!solve_feasibility(&p, 1e-7).unwrap().is_feasible());
        let p = FeasibilityProblem::inequalities(Matrix::zeros(0, 3), vec![]).unwrap();
        let r = solve_feasibility(&p, 1e-7).unwrap();
        assert_eq!(r.witness, Some(vec![0.0; 3]));
    }

    #[test]
    fn bad_tolerance_rejected() {
        let p = FeasibilityProblem::inequalities(m(&[&[1.0]]), vec![1.0]).unwrap();
        assert!(solve_feasibility(&p, f64::NAN).is_err());
        assert!(solve_feasibility(&p, -1.0).is_err());
    }

    #[test]
    fn minimize_box_corner() {
        let a = m(&[&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0], &[1.0, 1.0]]);
        let b = vec![2.0, 1.0, 3.0, 0.5, 4.0];
        let (v, x) = minimize(&[-1.0, -1.0], &a, &b, &SolverOptions::default()).unwrap();
        assert!((v + 4.0).abs() < 1e-9);
        assert!((x[0] + x[1] - 4.0).abs() < 1e-9);
        let (v, _) = minimize(&[1.0, 0.0], &a, &b, &SolverOptions::default()).unwrap();
        assert!((v + 1.0).abs() < 1e-9);
        let half = m(&[&[1.0, 0.0]]);
        assert!(matches!(
            minimize(&[1.0, 0.0], &half, &[0.0], &SolverOptions::default()),
            Err(Error::Unbounded)
        ));
    }

    #[test]
    fn preimage_matches_direct_problem() {
        let a = m(&[&[-1.0, 0.0], &[0.0, -1.0], &[1.0, 1.0]]);
        let b = vec![0.0, 0.0, 1.0];
        let map = AffineMap::new(m(&[&[1.0, 0.0], &[0.0, 0.0]]), vec![0.0, 0.5]).unwrap();
        let pre = PreimageProblem::new(&a, &b, &map, SolverOptions::default()).unwrap();
        assert_eq!(pre.rank(), 1);
        assert!(pre.solve(&[0.3, 0.5]).unwrap().is_feasible());
        assert!(!pre.solve(&[0.3, 0.6]).unwrap().is_feasible());
        assert!(!pre.solve(&[1.3, 0.5]).unwrap().is_feasible());
        assert!(pre.solve(&[0.3]).is_err());
    }
}
