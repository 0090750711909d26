//! Minimum enclosing balls of weighted points under a power distance.
//!
//! Both formulations reduce to the concave dual
//!
//! ```text
//! maximize  g(lambda) = sum_i lambda_i b_i - lambda^T G lambda
//! over the probability simplex,
//! ```
//!
//! where `G` holds inner products of the points and `b_i = G_ii - w_i`. In
//! coordinate mode `G` comes from explicit (centered) coordinates; in Gram
//! mode it is the kernel matrix, so the lifted points are never formed. The
//! optimal value is the squared power radius and the optimal `lambda` gives
//! the center as a convex combination of the support.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::points::{dot, sq_dist, Points};

/// Largest vertex count solved by support enumeration.
pub const EXACT_MAX_VERTICES: usize = 10;
pub const FRANK_WOLFE_TOL: f64 = 1e-12;
pub const FRANK_WOLFE_MAX_ITER: usize = 100_000;

const SIMPLEX_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct MebSolution {
    /// Squared power radius. Negative values are legal.
    pub radius_sq: f64,
    /// Convex coefficients; exactly zero off the support.
    pub lambda: Vec<f64>,
    /// Indices with positive coefficient, increasing.
    pub support: Vec<usize>,
    /// Explicit center, coordinate mode only.
    pub center: Option<Vec<f64>>,
}

/// How the dual is solved.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum MebSolver {
    /// Enumeration up to [`EXACT_MAX_VERTICES`] vertices, Frank-Wolfe above.
    #[default]
    Auto,
    Exact,
    /// Away-step Frank-Wolfe from the given start (uniform if `None`).
    FrankWolfe { init: Option<Vec<f64>> },
}

struct Dual {
    k: usize,
    gram: Vec<f64>,
    linear: Vec<f64>,
}

impl Dual {
    fn g(&self, i: usize, j: usize) -> f64 {
        self.gram[i * self.k + j]
    }

    fn gram_times(&self, lambda: &[f64]) -> Vec<f64> {
        (0..self.k)
            .map(|i| (0..self.k).map(|j| self.g(i, j) * lambda[j]).sum())
            .collect()
    }

    fn value(&self, lambda: &[f64]) -> f64 {
        let gl = self.gram_times(lambda);
        dot(&self.linear, lambda) - dot(lambda, &gl)
    }

    /// Power distance from the center `sum lambda_i p_i` to every vertex.
    fn power_from_center(&self, lambda: &[f64]) -> Vec<f64> {
        let gl = self.gram_times(lambda);
        let quad = dot(lambda, &gl);
        (0..self.k)
            .map(|i| self.linear[i] - 2.0 * gl[i] + quad)
            .collect()
    }

    fn primal_value(&self, lambda: &[f64]) -> f64 {
        self.power_from_center(lambda)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Solves the equality-constrained stationarity system on one support.
    fn solve_support(&self, support: &[usize]) -> Option<Vec<f64>> {
        let m = support.len();
        let mut a = DMatrix::<f64>::zeros(m + 1, m + 1);
        let mut rhs = DVector::<f64>::zeros(m + 1);
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                a[(r, c)] = 2.0 * self.g(i, j);
            }
            a[(r, m)] = 1.0;
            a[(m, r)] = 1.0;
            rhs[r] = self.linear[i];
        }
        rhs[m] = 1.0;
        let sol = a.lu().solve(&rhs)?;
        let mut lambda = vec![0.0; self.k];
        for (r, &i) in support.iter().enumerate() {
            let v = sol[r];
            if !v.is_finite() || v < -1e-12 {
                return None;
            }
            lambda[i] = v.max(0.0);
        }
        let total: f64 = lambda.iter().sum();
        if total <= 0.0 {
            return None;
        }
        lambda.iter_mut().for_each(|v| *v /= total);
        Some(lambda)
    }

    /// Best feasible candidate over all supports. Any feasible `lambda` is a
    /// lower bound on the optimum and the optimal support is among the
    /// candidates, so the maximum is the optimum. Near-ties resolve to the
    /// lexicographically smallest support.
    fn solve_exact(&self) -> Vec<f64> {
        let mut candidates: Vec<(Vec<usize>, Vec<f64>, f64)> = Vec::new();
        for mask in 1u32..(1u32 << self.k) {
            let support: Vec<usize> = (0..self.k).filter(|i| mask & (1 << i) != 0).collect();
            if let Some(lambda) = self.solve_support(&support) {
                let support: Vec<usize> = (0..self.k).filter(|&i| lambda[i] > 0.0).collect();
                let v = self.value(&lambda);
                candidates.push((support, lambda, v));
            }
        }
        let best = candidates
            .iter()
            .map(|c| c.2)
            .fold(f64::NEG_INFINITY, f64::max);
        let tol = TIE_TOL * best.abs().max(1.0);
        let chosen = candidates
            .into_iter()
            .filter(|c| c.2 >= best - tol)
            .min_by(|a, b| a.0.cmp(&b.0))
            .expect("singleton supports are always feasible");
        let lambda = chosen.1;
        let gap = self.primal_value(&lambda) - self.value(&lambda);
        if gap > 1e-9 * best.abs().max(1.0) {
            // ill-conditioned supports; polish iteratively
            return self.solve_frank_wolfe(lambda, FRANK_WOLFE_TOL, FRANK_WOLFE_MAX_ITER);
        }
        lambda
    }

    /// Away-step Frank-Wolfe with exact line search. The Frank-Wolfe gap
    /// equals primal minus dual value, so the stopping rule bounds the
    /// radius error directly.
    fn solve_frank_wolfe(&self, init: Vec<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
        let k = self.k;
        let mut lambda = init;
        let mut gl = self.gram_times(&lambda);
        for _ in 0..max_iter {
            let quad = dot(&lambda, &gl);
            let grad: Vec<f64> = (0..k).map(|i| self.linear[i] - 2.0 * gl[i]).collect();
            let at = dot(&grad, &lambda);
            let (s, gs) = argmax(&grad);
            let fw_gap = gs - at;
            let scale = (dot(&self.linear, &lambda) - quad).abs().max(1.0);
            if fw_gap <= tol * scale {
                break;
            }
            let (a, ga) = (0..k)
                .filter(|&i| lambda[i] > 0.0)
                .map(|i| (i, grad[i]))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("lambda has support");
            let away_gap = at - ga;
            // direction d, slope grad.d, curvature d^T G d, and G d
            let (toward, gamma_max, slope, curv, gd): (bool, f64, f64, f64, Vec<f64>) =
                if fw_gap >= away_gap || lambda[a] >= 1.0 {
                    let gd: Vec<f64> = (0..k).map(|i| self.g(i, s) - gl[i]).collect();
                    let curv = self.g(s, s) - 2.0 * gl[s] + quad;
                    (true, 1.0, fw_gap, curv, gd)
                } else {
                    let gd: Vec<f64> = (0..k).map(|i| gl[i] - self.g(i, a)).collect();
                    let curv = quad - 2.0 * gl[a] + self.g(a, a);
                    (false, lambda[a] / (1.0 - lambda[a]), away_gap, curv, gd)
                };
            let gamma = if curv > 0.0 {
                (slope / (2.0 * curv)).min(gamma_max)
            } else {
                gamma_max
            };
            if gamma <= 0.0 {
                break;
            }
            if toward {
                lambda.iter_mut().for_each(|v| *v *= 1.0 - gamma);
                lambda[s] += gamma;
            } else {
                lambda.iter_mut().for_each(|v| *v *= 1.0 + gamma);
                lambda[a] -= gamma;
                if gamma == gamma_max {
                    lambda[a] = 0.0;
                }
            }
            lambda.iter_mut().for_each(|v| {
                if *v < 0.0 {
                    *v = 0.0
                }
            });
            for (g, d) in gl.iter_mut().zip(&gd) {
                *g += gamma * d;
            }
        }
        let total: f64 = lambda.iter().sum();
        lambda.iter_mut().for_each(|v| *v /= total);
        lambda
    }

    fn solve(&self, solver: &MebSolver) -> Result<Vec<f64>> {
        let k = self.k;
        if k == 1 {
            return Ok(vec![1.0]);
        }
        match solver {
            MebSolver::Auto if k <= EXACT_MAX_VERTICES => Ok(self.solve_exact()),
            MebSolver::Exact => {
                if k > EXACT_MAX_VERTICES + 6 {
                    return Err(Error::invalid(format!(
                        "exact enumeration over {k} vertices is too large"
                    )));
                }
                Ok(self.solve_exact())
            }
            MebSolver::Auto => Ok(self.solve_frank_wolfe(
                vec![1.0 / k as f64; k],
                FRANK_WOLFE_TOL,
                FRANK_WOLFE_MAX_ITER,
            )),
            MebSolver::FrankWolfe { init } => {
                let start = match init {
                    Some(l) => {
                        check_simplex(l)?;
                        check_dim(k, l.len())?;
                        l.iter().map(|v| v.max(0.0)).collect()
                    }
                    None => vec![1.0 / k as f64; k],
                };
                Ok(self.solve_frank_wolfe(start, FRANK_WOLFE_TOL, FRANK_WOLFE_MAX_ITER))
            }
        }
    }
}

fn argmax(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best })
}

fn support_of(lambda: &[f64]) -> Vec<usize> {
    (0..lambda.len()).filter(|&i| lambda[i] > 0.0).collect()
}

fn check_weights(k: usize, weights: &[f64]) -> Result<()> {
    if k == 0 {
        return Err(Error::Empty("simplex"));
    }
    check_dim(k, weights.len())?;
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("weights must be finite"));
    }
    Ok(())
}

pub(crate) fn check_simplex(lambda: &[f64]) -> Result<()> {
    if lambda.is_empty() {
        return Err(Error::NotInSimplex("no coefficients".into()));
    }
    if let Some(v) = lambda.iter().find(|v| !v.is_finite() || **v < -SIMPLEX_TOL) {
        return Err(Error::NotInSimplex(format!("coefficient {v} is negative")));
    }
    let total: f64 = lambda.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::NotInSimplex(format!("coefficients sum to {total}")));
    }
    Ok(())
}

/// Minimum enclosing power ball of explicit points (`k × t`) with weights.
pub fn meb_coordinates(points: &Points, weights: &[f64]) -> Result<MebSolution> {
    meb_coordinates_with(points, weights, &MebSolver::Auto)
}

pub fn meb_coordinates_with(
    points: &Points,
    weights: &[f64],
    solver: &MebSolver,
) -> Result<MebSolution> {
    let k = points.n();
    check_weights(k, weights)?;
    if k == 1 {
        return Ok(MebSolution {
            radius_sq: -weights[0],
            lambda: vec![1.0],
            support: vec![0],
            center: Some(points.row(0).to_vec()),
        });
    }
    let dim = points.dim();
    let mut mean = vec![0.0; dim];
    for row in points.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / k as f64;
        }
    }
    let centered: Vec<Vec<f64>> = points
        .rows()
        .map(|r| r.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut gram = vec![0.0; k * k];
    for i in 0..k {
        for j in i..k {
            let v = dot(&centered[i], &centered[j]);
            gram[i * k + j] = v;
            gram[j * k + i] = v;
        }
    }
    let linear = (0..k).map(|i| gram[i * k + i] - weights[i]).collect();
    let dual = Dual { k, gram, linear };
    let lambda = dual.solve(solver)?;
    let mut center = mean;
    for (l, q) in lambda.iter().zip(&centered) {
        for (c, v) in center.iter_mut().zip(q) {
            *c += l * v;
        }
    }
    let radius_sq = points
        .rows()
        .zip(weights)
        .map(|(p, w)| sq_dist(&center, p) - w)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(MebSolution {
        radius_sq,
        support: support_of(&lambda),
        lambda,
        center: Some(center),
    })
}

/// Minimum enclosing power ball in the kernel's feature space, from a `k × k`
/// Gram submatrix (row-major) with unit diagonal.
pub fn meb_gram(gram: &[f64], weights: &[f64]) -> Result<MebSolution> {
    meb_gram_with(gram, weights, &MebSolver::Auto)
}

pub fn meb_gram_with(gram: &[f64], weights: &[f64], solver: &MebSolver) -> Result<MebSolution> {
    let k = weights.len();
    check_weights(k, weights)?;
    if gram.len() != k * k {
        return Err(Error::InvalidGram(format!(
            "expected {} entries for {k} vertices, found {}",
            k * k,
            gram.len()
        )));
    }
    for i in 0..k {
        if (gram[i * k + i] - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidGram(format!(
                "diagonal entry {i} is {}",
                gram[i * k + i]
            )));
        }
        for j in (i + 1)..k {
            if (gram[i * k + j] - gram[j * k + i]).abs() > 1e-12 {
                return Err(Error::InvalidGram(format!("entry ({i}, {j}) is not symmetric")));
            }
        }
    }
    if k == 1 {
        return Ok(MebSolution {
            radius_sq: -weights[0],
            lambda: vec![1.0],
            support: vec![0],
            center: None,
        });
    }
    let linear = weights.iter().map(|w| 1.0 - w).collect();
    let dual = Dual {
        k,
        gram: gram.to_vec(),
        linear,
    };
    let lambda = dual.solve(solver)?;
    let quad = dot(&lambda, &dual.gram_times(&lambda));
    let radius_sq = 1.0 - dot(&lambda, weights) - quad;
    Ok(MebSolution {
        radius_sq,
        support: support_of(&lambda),
        lambda,
        center: None,
    })
}

/// `(1/2) lambda^T P lambda` for a `k × k` power distance matrix `P`
/// (row-major, diagonal `-2 w_i`).
pub fn decomposition_radius(lambda: &[f64], pairwise_power: &[f64]) -> Result<f64> {
    check_simplex(lambda)?;
    let k = lambda.len();
    if pairwise_power.len() != k * k {
        return Err(Error::DimensionMismatch {
            expected: k * k,
            found: pairwise_power.len(),
        });
    }
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            total += lambda[i] * lambda[j] * pairwise_power[i * k + j];
        }
    }
    Ok(0.5 * total)
}

/// Power distance matrix `|p_i - p_j|^2 - w_i - w_j` of explicit points.
pub fn euclidean_power_matrix(points: &Points, weights: &[f64]) -> Result<Vec<f64>> {
    check_dim(points.n(), weights.len())?;
    let k = points.n();
    let mut out = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let d = if i == j { 0.0 } else { sq_dist(points.row(i), points.row(j)) };
            out[i * k + j] = d - weights[i] - weights[j];
        }
    }
    Ok(out)
}

/// Barycenter `sum lambda_i p_i`.
pub fn barycenter(points: &Points, lambda: &[f64]) -> Result<Vec<f64>> {
    check_dim(points.n(), lambda.len())?;
    let mut c = vec![0.0; points.dim()];
    for (l, p) in lambda.iter().zip(points.rows()) {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += l * pi;
        }
    }
    Ok(c)
}

/// `sum_i lambda_i |c - p_i|^2` about the barycenter `c`.
pub fn variance_about_barycenter(points: &Points, lambda: &[f64]) -> Result<f64> {
    let c = barycenter(points, lambda)?;
    Ok(lambda.iter().zip(points.rows()).map(|(l, p)| l * sq_dist(&c, p)).sum())
}

/// `(1/2) sum_ij lambda_i lambda_j |p_i - p_j|^2`.
pub fn half_pairwise_dispersion(points: &Points, lambda: &[f64]) -> Result<f64> {
    check_dim(points.n(), lambda.len())?;
    let mut total = 0.0;
    for (i, p) in points.rows().enumerate() {
        for (j, q) in points.rows().enumerate() {
            total += lambda[i] * lambda[j] * sq_dist(p, q);
        }
    }
    Ok(0.5 * total)
}

pub const ORACLE_MAX_VERTICES: usize = 8;
pub const ORACLE_MAX_DIM: usize = 4;

/// Approximate ball from [`meb_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBall {
    pub radius_sq: f64,
    pub center: Vec<f64>,
}

/// Brute-force minimizer of `F(x) = max_i (|x - p_i|^2 - w_i)` over the
/// bounding box of the points, independent of the dual solver.
///
/// `F` is convex and so is every partial minimum of it, so the search runs
/// one axis at a time: a five-node grid on the current bracket, shrunk to the
/// two cells around the best node. For a convex function of one variable the
/// minimizer always lies in that bracket.
pub fn meb_oracle(points: &Points, weights: &[f64]) -> Result<OracleBall> {
    let k = points.n();
    check_weights(k, weights)?;
    if k > ORACLE_MAX_VERTICES || points.dim() > ORACLE_MAX_DIM {
        return Err(Error::ScaleLimit(format!(
            "oracle handles at most {ORACLE_MAX_VERTICES} vertices in {ORACLE_MAX_DIM} dimensions, got {k} in {}",
            points.dim()
        )));
    }
    let dim = points.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for row in points.rows() {
        for a in 0..dim {
            lo[a] = lo[a].min(row[a]);
            hi[a] = hi[a].max(row[a]);
        }
    }
    let search = AxisSearch {
        points,
        weights,
        lo,
        hi,
    };
    let mut x = search.lo.clone();
    let radius_sq = search.minimize(&mut x, 0);
    Ok(OracleBall {
        radius_sq,
        center: x,
    })
}

struct AxisSearch<'a> {
    points: &'a Points,
    weights: &'a [f64],
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisSearch<'_> {
    const ROUNDS: usize = 60;
    const REL_WIDTH: f64 = 1e-11;

    fn objective(&self, x: &[f64]) -> f64 {
        self.points
            .rows()
            .zip(self.weights)
            .map(|(p, w)| sq_dist(x, p) - w)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Minimizes over axes `axis..` with earlier coordinates fixed, leaving
    /// the minimizer in `x`.
    fn minimize(&self, x: &mut [f64], axis: usize) -> f64 {
        if axis == x.len() {
            return self.objective(x);
        }
        let eval = |x: &mut [f64], v: f64| {
            x[axis] = v;
            self.minimize(x, axis + 1)
        };
        let (mut left, mut right) = (self.lo[axis], self.hi[axis]);
        let width0 = right - left;
        let mut nodes: Vec<(f64, f64)> = (0..5)
            .map(|i| {
                let v = left + width0 * i as f64 / 4.0;
                (v, eval(x, v))
            })
            .collect();
        for _ in 0..Self::ROUNDS {
            if right - left <= Self::REL_WIDTH * (width0 + left.abs() + right.abs()) {
                break;
            }
            let b = (0..5)
                .min_by(|&i, &j| nodes[i].1.total_cmp(&nodes[j].1))
                .expect("five nodes");
            let (l, m, r) = match b {
                0 => {
                    let mid = 0.5 * (nodes[0].0 + nodes[1].0);
                    (nodes[0], (mid, eval(x, mid)), nodes[1])
                }
                4 => {
                    let mid = 0.5 * (nodes[3].0 + nodes[4].0);
                    (nodes[3], (mid, eval(x, mid)), nodes[4])
                }
                _ => (nodes[b - 1], nodes[b], nodes[b + 1]),
            };
            let q1 = 0.5 * (l.0 + m.0);
            let q3 = 0.5 * (m.0 + r.0);
            nodes = vec![l, (q1, eval(x, q1)), m, (q3, eval(x, q3)), r];
            left = l.0;
            right = r.0;
        }
        let best = nodes
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("five nodes");
        x[axis] = best.0;
        self.minimize(x, axis + 1);
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeededRng;
    use proptest::prelude::*;

    fn pts(rows: &[&[f64]]) -> Points {
        Points::from_rows(rows).unwrap()
    }

    fn random_instance(rng: &mut SeededRng, k: usize, dim: usize) -> (Points, Vec<f64>) {
        let data = (0..k * dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let weights = (0..k).map(|_| rng.uniform_in(-1.0, 0.0)).collect();
        (Points::from_flat(data, dim).unwrap(), weights)
    }

    #[test]
    fn single_point() {
        let s = meb_coordinates(&pts(&[&[0.3, -1.0]]), &[-0.25]).unwrap();
        assert_eq!(s.radius_sq, 0.25);
        assert_eq!(s.center.unwrap(), vec![0.3, -1.0]);
        assert_eq!(s.support, vec![0]);
        let g = meb_gram(&[1.0], &[-0.7]).unwrap();
        assert_eq!(g.radius_sq, 0.7);
    }

    #[test]
    fn two_points_unequal_weights() {
        // s = (d^2 + w1 - w2) / (2 d) = 0, so the center sits on the first point
        let s = meb_coordinates(&pts(&[&[0.0], &[1.0]]), &[0.0, 1.0]).unwrap();
        assert!(s.radius_sq.abs() < 1e-15);
        assert!(s.center.unwrap()[0].abs() < 1e-15);
    }

    #[test]
    fn two_points_equal_weights() {
        let (d, w) = (1.6f64, -0.3);
        let s = meb_coordinates(&pts(&[&[0.0, 0.0], &[d, 0.0]]), &[w, w]).unwrap();
        assert!((s.radius_sq - (d * d / 4.0 - w)).abs() < 1e-14);
        let c = s.center.unwrap();
        assert!((c[0] - d / 2.0).abs() < 1e-14 && c[1].abs() < 1e-14);
        assert_eq!(s.lambda, vec![0.5, 0.5]);
    }

    #[test]
    fn clamped_two_point_closed_form() {
        // one heavy point swallows the other: center clamps to it
        let s = meb_coordinates(&pts(&[&[0.0], &[1.0]]), &[0.0, 3.0]).unwrap();
        assert_eq!(s.support, vec![0]);
        assert!(s.radius_sq.abs() < 1e-15);
    }

    #[test]
    fn gram_cases() {
        let s = meb_gram(&[1.0; 4], &[0.0, 0.0]).unwrap();
        assert!(s.radius_sq.abs() < 1e-15);
        let kb = 0.4;
        let s = meb_gram(&[1.0, kb, kb, 1.0], &[0.0, 0.0]).unwrap();
        assert!((s.lambda[0] - 0.5).abs() < 1e-15);
        assert!((s.radius_sq - (1.0 - kb) / 2.0).abs() < 1e-15);
        assert!(s.center.is_none());
    }

    #[test]
    fn gram_validation() {
        assert!(matches!(meb_gram(&[1.0, 0.2, 0.3, 1.0], &[0.0, 0.0]), Err(Error::InvalidGram(_))));
        assert!(matches!(meb_gram(&[1.0, 0.2, 0.2], &[0.0, 0.0]), Err(Error::InvalidGram(_))));
        assert!(matches!(meb_gram(&[2.0], &[0.0]), Err(Error::InvalidGram(_))));
        assert!(matches!(meb_gram(&[], &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn empty_simplex_rejected() {
        let empty = Points::from_flat(vec![], 2).unwrap();
        assert!(matches!(meb_coordinates(&empty, &[]), Err(Error::Empty(_))));
    }

    #[test]
    fn equilateral_circumradius() {
        let h = 3f64.sqrt() / 2.0;
        let s = meb_coordinates(&pts(&[&[0.0, 0.0], &[1.0, 0.0], &[0.5, h]]), &[0.0; 3]).unwrap();
        assert!((s.radius_sq - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(s.support, vec![0, 1, 2]);
    }

    #[test]
    fn decomposition_cases() {
        let (w, d2) = (-0.2, 0.9);
        let p = [-2.0 * w, d2 - 2.0 * w, d2 - 2.0 * w, -2.0 * w];
        assert!((decomposition_radius(&[1.0, 0.0], &p).unwrap() + w).abs() < 1e-15);
        let v = decomposition_radius(&[0.5, 0.5], &p).unwrap();
        assert!((v - (d2 / 4.0 - w)).abs() < 1e-15);
        let z = decomposition_radius(&[0.5, 0.5], &[0.0, d2, d2, 0.0]).unwrap();
        assert!((z - d2 / 4.0).abs() < 1e-15);
        assert!(matches!(
            decomposition_radius(&[0.7, 0.7], &p),
            Err(Error::NotInSimplex(_))
        ));
        assert!(matches!(
            decomposition_radius(&[1.2, -0.2], &p),
            Err(Error::NotInSimplex(_))
        ));
    }

    #[test]
    fn solver_invariants_on_random_instances() {
        let mut rng = SeededRng::new(2024);
        for _ in 0..300 {
            let k = 1 + rng.below(8);
            let dim = 1 + rng.below(5);
            let (p, w) = random_instance(&mut rng, k, dim);
            let s = meb_coordinates(&p, &w).unwrap();
            let scale = s.radius_sq.abs().max(1.0);
            check_simplex(&s.lambda).unwrap();
            assert_eq!(s.support, support_of(&s.lambda));
            let c = s.center.clone().unwrap();
            let bary = barycenter(&p, &s.lambda).unwrap();
            for (a, b) in c.iter().zip(&bary) {
                assert!((a - b).abs() < 1e-8);
            }
            for (i, wi) in w.iter().enumerate() {
                let pd = sq_dist(&c, p.row(i)) - wi;
                assert!(pd <= s.radius_sq + 1e-12 * scale);
                if s.support.contains(&i) {
                    assert!((pd - s.radius_sq).abs() <= 1e-8 * scale);
                }
            }
            let m = euclidean_power_matrix(&p, &w).unwrap();
            let dec = decomposition_radius(&s.lambda, &m).unwrap();
            assert!((dec - s.radius_sq).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn frank_wolfe_agrees_from_many_starts() {
        let mut rng = SeededRng::new(99);
        for _ in 0..40 {
            let k = 2 + rng.below(7);
            let dim = 1 + rng.below(4);
            let (p, w) = random_instance(&mut rng, k, dim);
            let exact = meb_coordinates_with(&p, &w, &MebSolver::Exact).unwrap();
            let ce = exact.center.clone().unwrap();
            for _ in 0..5 {
                let mut init: Vec<f64> = (0..k).map(|_| rng.uniform() + 1e-3).collect();
                let t: f64 = init.iter().sum();
                init.iter_mut().for_each(|v| *v /= t);
                let fw = meb_coordinates_with(&p, &w, &MebSolver::FrankWolfe { init: Some(init) })
                    .unwrap();
                assert!((fw.radius_sq - exact.radius_sq).abs() <= 1e-8, "{} vs {}", fw.radius_sq, exact.radius_sq);
                let cf = fw.center.unwrap();
                assert!(sq_dist(&cf, &ce).sqrt() <= 1e-6);
            }
        }
    }

    #[test]
    fn large_simplex_uses_frank_wolfe() {
        let mut rng = SeededRng::new(5);
        let (p, w) = random_instance(&mut rng, 14, 3);
        let auto = meb_coordinates(&p, &w).unwrap();
        let exact = meb_coordinates_with(&p, &w, &MebSolver::Exact).unwrap();
        assert!((auto.radius_sq - exact.radius_sq).abs() < 1e-9);
    }

    #[test]
    fn gram_matches_coordinates_on_unit_vectors() {
        let mut rng = SeededRng::new(31);
        for _ in 0..50 {
            let k = 1 + rng.below(6);
            let dim = 2 + rng.below(4);
            let mut data: Vec<f64> = (0..k * dim).map(|_| rng.normal(0.0, 1.0)).collect();
            for row in data.chunks_mut(dim) {
                let n = dot(row, row).sqrt();
                row.iter_mut().for_each(|v| *v /= n);
            }
            let p = Points::from_flat(data, dim).unwrap();
            let w: Vec<f64> = (0..k).map(|_| rng.uniform_in(-0.5, 0.0)).collect();
            let mut g = vec![0.0; k * k];
            for i in 0..k {
                for j in 0..k {
                    g[i * k + j] = if i == j { 1.0 } else { dot(p.row(i), p.row(j)) };
                }
            }
            let a = meb_coordinates(&p, &w).unwrap();
            let b = meb_gram(&g, &w).unwrap();
            assert!((a.radius_sq - b.radius_sq).abs() < 1e-10);
        }
    }

    #[test]
    fn duplicate_vertices_are_handled() {
        let p = pts(&[&[0.0, 0.0], &[0.0, 0.0], &[2.0, 0.0]]);
        let s = meb_coordinates(&p, &[0.0; 3]).unwrap();
        assert!((s.radius_sq - 1.0).abs() < 1e-14);
        // lexicographically smallest optimal support
        assert_eq!(s.support, vec![0, 2]);
    }

    #[test]
    fn oracle_cases() {
        let o = meb_oracle(&pts(&[&[0.4, 0.1]]), &[-0.3]).unwrap();
        assert_eq!(o.radius_sq, 0.3);
        let (d, w) = (1.2f64, -0.1);
        let o = meb_oracle(&pts(&[&[0.0, 0.0], &[d, 0.0]]), &[w, w]).unwrap();
        assert!((o.radius_sq - (d * d / 4.0 - w)).abs() < 1e-8);
        let big = Points::from_flat(vec![0.0; 9 * 2], 2).unwrap();
        assert!(matches!(meb_oracle(&big, &[0.0; 9]), Err(Error::ScaleLimit(_))));
        let wide = Points::from_flat(vec![0.0; 5], 5).unwrap();
        assert!(matches!(meb_oracle(&wide, &[0.0]), Err(Error::ScaleLimit(_))));
    }

    #[test]
    fn oracle_matches_solver() {
        let mut rng = SeededRng::new(8);
        for _ in 0..20 {
            let k = 1 + rng.below(6);
            let dim = 1 + rng.below(3);
            let (p, w) = random_instance(&mut rng, k, dim);
            let s = meb_coordinates(&p, &w).unwrap();
            let o = meb_oracle(&p, &w).unwrap();
            assert!((s.radius_sq - o.radius_sq).abs() <= 1e-4 * s.radius_sq.abs().max(1e-12));
        }
    }

    fn instance() -> impl Strategy<Value = (Points, Vec<f64>)> {
        (1usize..=8, 1usize..=5).prop_flat_map(|(k, dim)| {
            (
                prop::collection::vec(-1.0f64..1.0, k * dim),
                prop::collection::vec(-1.0f64..=0.0, k),
            )
                .prop_map(move |(data, w)| (Points::from_flat(data, dim).unwrap(), w))
        })
    }

    proptest! {
        #[test]
        fn decomposition_consistency((p, w) in instance()) {
            let s = meb_coordinates(&p, &w).unwrap();
            let d = euclidean_power_matrix(&p, &w).unwrap();
            let dec = decomposition_radius(&s.lambda, &d).unwrap();
            prop_assert!((s.radius_sq - dec).abs() <= 1e-8 * s.radius_sq.abs().max(1.0));
        }

        #[test]
        fn support_attains_max_and_center_is_barycenter((p, w) in instance()) {
            let s = meb_coordinates(&p, &w).unwrap();
            let c = s.center.clone().unwrap();
            for (a, b) in c.iter().zip(barycenter(&p, &s.lambda).unwrap()) {
                prop_assert!((a - b).abs() <= 1e-8);
            }
            let scale = s.radius_sq.abs().max(1.0);
            for (i, wi) in w.iter().enumerate() {
                let pd = sq_dist(&c, p.row(i)) - wi;
                prop_assert!(pd <= s.radius_sq + 1e-8 * scale);
                if s.support.contains(&i) {
                    prop_assert!((pd - s.radius_sq).abs() <= 1e-8 * scale);
                }
            }
        }

        #[test]
        fn unique_from_many_starts((p, w) in instance(), seed in any::<u64>()) {
            let exact = meb_coordinates(&p, &w).unwrap();
            let mut rng = SeededRng::new(seed);
            for _ in 0..5 {
                let raw: Vec<f64> = (0..p.n()).map(|_| rng.uniform() + 1e-3).collect();
                let total: f64 = raw.iter().sum();
                let init = raw.into_iter().map(|x| x / total).collect();
                let fw = meb_coordinates_with(&p, &w, &MebSolver::FrankWolfe { init: Some(init) }).unwrap();
                prop_assert!((fw.radius_sq - exact.radius_sq).abs() <= 1e-8);
                for (a, b) in fw.center.unwrap().iter().zip(exact.center.as_ref().unwrap()) {
                    prop_assert!((a - b).abs() <= 1e-6);
                }
            }
        }

        #[test]
        fn variance_identity((p, _) in instance(), raw in prop::collection::vec(0.0f64..1.0, 8)) {
            let mut lambda: Vec<f64> = raw[..p.n()].iter().map(|x| x + 1e-6).collect();
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|x| *x /= total);
            let lhs = variance_about_barycenter(&p, &lambda).unwrap();
            let rhs = half_pairwise_dispersion(&p, &lambda).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10);
        }
    }
}
