//! Maximum-margin linear separators via interior-point QP.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};

/// A separating hyperplane `w . x + b`, scaled so the closest correctly
/// classified point sits at distance `margin = 1 / ||w||`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatingPlane {
    pub w: Vec<f64>,
    pub b: f64,
    pub margin: f64,
    /// Sample indices with `y_i (w . x_i + b) <= 0` (soft-margin case only).
    pub misclassified: Vec<usize>,
}

impl SeparatingPlane {
    pub fn is_separable(&self) -> bool {
        self.misclassified.is_empty()
    }

    pub fn decide(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b
    }
}

const SOFT_MARGIN_C: f64 = 1000.0;
// A hard-margin solution classifies every training point with functional
// margin >= 1; anything this close to the boundary means the QP only
// "succeeded" numerically.
const SEPARATION_SLACK: f64 = 1e-6;

/// Trains `min 1/2 ||w||^2  s.t.  y_i (w . x_i + b) >= 1`. When the classes
/// are not linearly separable, refits with slack penalties and reports which
/// samples the best soft plane still gets wrong.
pub fn max_margin_plane(
    pos: &[Vec<f64>],
    neg: &[Vec<f64>],
) -> Result<SeparatingPlane> {
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::TrainingFailure {
            stage: "svm".into(),
            detail: "both classes need at least one sample".into(),
        });
    }
    let dim = pos[0].len();
    if pos.iter().chain(neg).any(|x| x.len() != dim) {
        return Err(Error::Dimension(format!("mixed sample widths, expected {dim}")));
    }

    if let Some(plane) = solve_hard(pos, neg, dim)? {
        // Belt and braces: interior-point "Solved" can still be marginal.
        let ok = pos.iter().all(|x| plane.decide(x) >= SEPARATION_SLACK)
            && neg.iter().all(|x| plane.decide(x) <= -SEPARATION_SLACK);
        if ok {
            return Ok(plane);
        }
    }
    solve_soft(pos, neg, dim)
}

/// Variables z = (w[0..dim], b). Constraints: -y_i (x_i . w + b) <= -1.
fn solve_hard(pos: &[Vec<f64>], neg: &[Vec<f64>], dim: usize) -> Result<Option<SeparatingPlane>> {
    let nvar = dim + 1;
    let m = pos.len() + neg.len();

    let p = quadratic_cost(nvar, dim);
    let q = vec![0.0; nvar];
    let mut rows = Vec::with_capacity(m);
    for x in pos {
        rows.push(constraint_row(x, 1.0, nvar, None));
    }
    for x in neg {
        rows.push(constraint_row(x, -1.0, nvar, None));
    }
    let a = dense_to_csc(&rows, nvar);
    let bvec = vec![-1.0; m];
    let cones = [SupportedConeT::NonnegativeConeT(m)];

    let settings = qp_settings();
    let mut solver = DefaultSolver::new(&p, &q, &a, &bvec, &cones, settings)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            let z = &solver.solution.x;
            Ok(Some(plane_from(z[..dim].to_vec(), z[dim], &[])))
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => Ok(None),
        other => Err(Error::Solver(format!("hard-margin QP ended with status {other:?}"))),
    }
}

/// Soft margin: z = (w, b, s[0..m]), cost 1/2||w||^2 + C sum(s),
/// constraints -y_i(x_i . w + b) - s_i <= -1 and -s_i <= 0.
fn solve_soft(pos: &[Vec<f64>], neg: &[Vec<f64>], dim: usize) -> Result<SeparatingPlane> {
    let m = pos.len() + neg.len();
    let nvar = dim + 1 + m;

    let p = quadratic_cost(nvar, dim);
    let mut q = vec![0.0; nvar];
    for s in q.iter_mut().skip(dim + 1) {
        *s = SOFT_MARGIN_C;
    }
    let mut rows = Vec::with_capacity(2 * m);
    let samples: Vec<(&Vec<f64>, f64)> = pos
        .iter()
        .map(|x| (x, 1.0))
        .chain(neg.iter().map(|x| (x, -1.0)))
        .collect();
    for (i, (x, y)) in samples.iter().enumerate() {
        rows.push(constraint_row(x, *y, nvar, Some(dim + 1 + i)));
    }
    for i in 0..m {
        let mut row = vec![0.0; nvar];
        row[dim + 1 + i] = -1.0;
        rows.push(row);
    }
    let a = dense_to_csc(&rows, nvar);
    let mut bvec = vec![-1.0; m];
    bvec.extend(std::iter::repeat(0.0).take(m));
    let cones = [SupportedConeT::NonnegativeConeT(2 * m)];

    let settings = qp_settings();
    let mut solver = DefaultSolver::new(&p, &q, &a, &bvec, &cones, settings)
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    solver.solve();
    if !matches!(solver.solution.status, SolverStatus::Solved | SolverStatus::AlmostSolved) {
        return Err(Error::Solver(format!(
            "soft-margin QP ended with status {:?}",
            solver.solution.status
        )));
    }
    let z = &solver.solution.x;
    let w = z[..dim].to_vec();
    let b = z[dim];
    let mut mis = Vec::new();
    for (i, (x, y)) in samples.iter().enumerate() {
        let f: f64 = w.iter().zip(x.iter()).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
        if *y * f <= 0.0 {
            mis.push(i);
        }
    }
    Ok(plane_from(w, b, &mis))
}

fn plane_from(w: Vec<f64>, b: f64, mis: &[usize]) -> SeparatingPlane {
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    SeparatingPlane {
        w,
        b,
        margin: if norm > 0.0 { 1.0 / norm } else { f64::INFINITY },
        misclassified: mis.to_vec(),
    }
}

/// P is the identity on the w block, zero elsewhere (Clarabel wants the
/// upper triangle of the cost matrix).
fn quadratic_cost(nvar: usize, dim: usize) -> CscMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..nvar)
        .map(|i| {
            let mut r = vec![0.0; nvar];
            if i < dim {
                r[i] = 1.0;
            }
            r
        })
        .collect();
    dense_to_csc(&rows, nvar)
}

fn constraint_row(x: &[f64], y: f64, nvar: usize, slack: Option<usize>) -> Vec<f64> {
    let mut row = vec![0.0; nvar];
    for (j, &xj) in x.iter().enumerate() {
        row[j] = -y * xj;
    }
    row[x.len()] = -y; // bias column
    if let Some(si) = slack {
        row[si] = -1.0;
    }
    row
}

fn dense_to_csc(rows: &[Vec<f64>], ncols: usize) -> CscMatrix<f64> {
    let nrows = rows.len();
    let mut colptr = Vec::with_capacity(ncols + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for j in 0..ncols {
        for (i, row) in rows.iter().enumerate() {
            if row[j] != 0.0 {
                rowval.push(i);
                nzval.push(row[j]);
            }
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(nrows, ncols, colptr, rowval, nzval)
}

fn qp_settings() -> DefaultSettings<f64> {
    DefaultSettings {
        verbose: false,
        tol_gap_abs: 1e-10,
        tol_gap_rel: 1e-10,
        tol_feas: 1e-10,
        max_iter: 200,
        ..DefaultSettings::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_midpoint() {
        // {3} vs {1}: optimal plane is x - 2, margin 1.
        let plane = max_margin_plane(&[vec![3.0]], &[vec![1.0]]).unwrap();
        assert!(plane.is_separable());
        assert!((plane.w[0] - 1.0).abs() < 1e-6);
        assert!((plane.b + 2.0).abs() < 1e-6);
        assert!((plane.margin - 1.0).abs() < 1e-6);
    }

    #[test]
    fn separable_diagonal() {
        // Points on either side of x + y = 0 at distance sqrt(2)/2.
        let pos = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let neg = vec![vec![-1.0, 0.0], vec![0.0, -1.0]];
        let plane = max_margin_plane(&pos, &neg).unwrap();
        assert!(plane.is_separable());
        let ratio = plane.w[1] / plane.w[0];
        assert!((ratio - 1.0).abs() < 1e-6, "w = {:?}", plane.w);
        assert!(plane.b.abs() < 1e-6);
        assert!((plane.margin - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-6);
    }

    #[test]
    fn closest_point_at_unit_score() {
        let pos = vec![vec![2.0, 1.0], vec![3.0, 3.0], vec![4.0, 0.0]];
        let neg = vec![vec![-1.0, 0.0], vec![0.0, -2.0]];
        let plane = max_margin_plane(&pos, &neg).unwrap();
        let min_score = pos
            .iter()
            .map(|x| plane.decide(x))
            .chain(neg.iter().map(|x| -plane.decide(x)))
            .fold(f64::INFINITY, f64::min);
        assert!((min_score - 1.0).abs() < 1e-6, "min functional margin {min_score}");
    }

    #[test]
    fn xor_reports_misclassified() {
        let pos = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        let neg = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let plane = max_margin_plane(&pos, &neg).unwrap();
        assert!(!plane.is_separable());
        // Any plane gets at least one of the four XOR points wrong.
        assert!(!plane.misclassified.is_empty() && plane.misclassified.len() < 4);
    }

    #[test]
    fn symmetric_integerizable_weights() {
        // sign(x_i - x_j) structure: separate e_0-indexed patterns from
        // e_1-indexed ones in 3 dims; expect w proportional to (1, -1, 0).
        let pos = vec![vec![1.0, 0.0, 0.5], vec![1.0, 0.0, -0.5]];
        let neg = vec![vec![0.0, 1.0, 0.5], vec![0.0, 1.0, -0.5]];
        let plane = max_margin_plane(&pos, &neg).unwrap();
        assert!(plane.is_separable());
        let s = plane.w[0];
        assert!((plane.w[1] / s + 1.0).abs() < 1e-6);
        assert!((plane.w[2] / s).abs() < 1e-6);
        assert!((plane.b / s).abs() < 1e-6);
    }
}
