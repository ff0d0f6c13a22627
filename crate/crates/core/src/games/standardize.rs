//! Conversion of raw decision sets to standard form.
//!
//! A decision with losses `(x, y)` maps to exp-coordinates
//! `(u, v) = (e^{−ηx}, e^{−ηy})`. The η-mixture closure of the decision set
//! corresponds to the convex hull of its exp-image, and the standard-form
//! pair `(a_p, b_p)` — the minimizer of `p·y + (1−p)·x` over the closure —
//! is the maximizer of the concave objective `p·ln v + (1−p)·ln u` over the
//! hull. That maximum lives on the northeast frontier of the hull, and along
//! each frontier edge the stationarity condition is linear in the edge
//! parameter, so the per-edge optimum has a closed form.

use alloc::vec::Vec;

use super::{DecisionSet, Game, GameError, Tabulated};
use crate::math;

/// Builds the standard-form game generated by `decisions` under η-mixing,
/// tabulated on a uniform grid of `grid_size` points over `[0,1]`.
pub fn standardize(
    decisions: &DecisionSet,
    eta: f64,
    grid_size: usize,
) -> Result<Game, GameError> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(GameError::InvalidEta(eta));
    }
    if grid_size < 2 {
        return Err(GameError::InvalidGrid(grid_size));
    }
    let (u, v) = standardize_exp_nodes(decisions, eta, grid_size)?;
    let name = alloc::format!("standardized(eta={eta})");
    Ok(Game::from_tabulated(
        name,
        eta,
        Tabulated::from_exp(eta, u, v),
    ))
}

/// The exp-coordinate grid values `(u_i, v_i)` of the standardized game.
pub(crate) fn standardize_exp_nodes(
    decisions: &DecisionSet,
    eta: f64,
    grid_size: usize,
) -> Result<(Vec<f64>, Vec<f64>), GameError> {
    let mut exp_pts = Vec::with_capacity(decisions.len());
    for &(x, y) in decisions.points() {
        let u = math::exp(-eta * x);
        let v = math::exp(-eta * y);
        if u <= 0.0 || v <= 0.0 {
            return Err(GameError::EtaOverflow {
                eta,
                loss: x.max(y),
            });
        }
        exp_pts.push((u, v));
    }
    let frontier = ne_frontier(&convex_hull(&mut exp_pts));

    let mut us = Vec::with_capacity(grid_size);
    let mut vs = Vec::with_capacity(grid_size);
    // The maximizer slides monotonically from the max-u end of the frontier
    // toward the max-v end as p increases.
    let mut idx = frontier.len() - 1;
    for i in 0..grid_size {
        let p = i as f64 / (grid_size - 1) as f64;
        let objective = |&(u, v): &(f64, f64)| -> f64 {
            // p·ln v + (1−p)·ln u, with the degenerate weights handled so
            // that 0·ln never contributes.
            let mut f = 0.0;
            if p > 0.0 {
                f += p * math::ln(v);
            }
            if p < 1.0 {
                f += (1.0 - p) * math::ln(u);
            }
            f
        };
        while idx > 0 && objective(&frontier[idx - 1]) >= objective(&frontier[idx]) {
            idx -= 1;
        }
        let mut best = frontier[idx];
        let mut best_f = objective(&best);
        for edge in [idx.checked_sub(1).map(|j| (j, idx)), Some((idx, idx + 1))]
            .into_iter()
            .flatten()
        {
            let (ja, jb) = edge;
            if jb >= frontier.len() {
                continue;
            }
            if let Some(z) = edge_optimum(frontier[ja], frontier[jb], p) {
                let f = objective(&z);
                if f > best_f {
                    best_f = f;
                    best = z;
                }
            }
        }
        us.push(best.0);
        vs.push(best.1);
    }
    Ok((us, vs))
}

/// Interior stationary point of `p·ln v + (1−p)·ln u` on the segment from
/// `a` to `b`, if it exists: the stationarity equation is linear in the
/// segment parameter `s`.
#[inline]
fn edge_optimum(a: (f64, f64), b: (f64, f64), p: f64) -> Option<(f64, f64)> {
    let du = b.0 - a.0;
    let dv = b.1 - a.1;
    if du == 0.0 || dv == 0.0 {
        return None;
    }
    let s = -(p * dv * a.0 + (1.0 - p) * du * a.1) / (du * dv);
    if s > 0.0 && s < 1.0 {
        Some((a.0 + s * du, a.1 + s * dv))
    } else {
        None
    }
}

/// Counterclockwise convex hull by monotone chain with exact orientation
/// predicates. Returns the input point for singleton/degenerate sets.
pub(crate) fn convex_hull(points: &mut [(f64, f64)]) -> Vec<(f64, f64)> {
    points.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite exp-coordinates"));
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points.iter() {
        if pts.last() != Some(&p) {
            pts.push(p);
        }
    }
    let n = pts.len();
    if n <= 2 {
        return pts;
    }
    let orient = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| -> f64 {
        robust::orient2d(
            robust::Coord { x: o.0, y: o.1 },
            robust::Coord { x: a.0, y: a.1 },
            robust::Coord { x: b.0, y: b.1 },
        )
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    for &p in pts.iter() {
        while hull.len() >= 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len
            && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Northeast frontier of a CCW convex hull: the boundary chain from the
/// max-u vertex to the max-v vertex, returned with u strictly increasing.
/// Every other hull point is dominated by this chain in both coordinates.
pub(crate) fn ne_frontier(hull: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if hull.len() <= 1 {
        return hull.to_vec();
    }
    let right = (0..hull.len())
        .max_by(|&i, &j| {
            (hull[i].0, hull[i].1)
                .partial_cmp(&(hull[j].0, hull[j].1))
                .unwrap()
        })
        .unwrap();
    let top = (0..hull.len())
        .max_by(|&i, &j| {
            (hull[i].1, hull[i].0)
                .partial_cmp(&(hull[j].1, hull[j].0))
                .unwrap()
        })
        .unwrap();
    let mut chain = Vec::new();
    let mut i = right;
    chain.push(hull[i]);
    while i != top {
        i = (i + 1) % hull.len();
        chain.push(hull[i]);
    }
    chain.reverse(); // u increasing, v decreasing
    chain
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::Outcome;

    fn quadratic_decisions(n: usize) -> DecisionSet {
        let pts = (0..n)
            .map(|i| {
                let g = i as f64 / (n - 1) as f64;
                (g * g, (g - 1.0) * (g - 1.0))
            })
            .collect();
        DecisionSet::new(pts).unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = quadratic_decisions(11);
        assert!(matches!(
            standardize(&d, 0.0, 64),
            Err(GameError::InvalidEta(_))
        ));
        assert!(matches!(
            standardize(&d, -1.0, 64),
            Err(GameError::InvalidEta(_))
        ));
        assert!(matches!(
            standardize(&d, 1.0, 1),
            Err(GameError::InvalidGrid(1))
        ));
    }

    #[test]
    fn hull_of_square_with_interior_point() {
        let mut pts = alloc::vec![
            (0.0, 0.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (0.0, 1.0),
            (0.5, 0.5),
        ];
        let hull = convex_hull(&mut pts);
        assert_eq!(hull.len(), 4);
        assert!(!hull.contains(&(0.5, 0.5)));
    }

    #[test]
    fn frontier_of_concave_cloud_keeps_curve() {
        // points on u + v = 1 plus dominated interior points
        let mut pts: Vec<(f64, f64)> = (0..=10)
            .map(|i| {
                let u = 0.05 + 0.9 * i as f64 / 10.0;
                (u, 1.0 - u)
            })
            .collect();
        pts.push((0.3, 0.3));
        pts.push((0.1, 0.5));
        let hull = convex_hull(&mut pts.clone());
        let fr = ne_frontier(&hull);
        // the extremes survive and the chain is strictly ordered
        assert!((fr.first().unwrap().0 - 0.05).abs() < 1e-12);
        assert!((fr.last().unwrap().0 - 0.95).abs() < 1e-12);
        for w in fr.windows(2) {
            assert!(w[0].0 < w[1].0);
            assert!(w[0].1 > w[1].1);
        }
    }

    #[test]
    fn quadratic_standard_form_is_reproduced() {
        // (a_p, b_p) of the quadratic game is (p², (1−p)²); the tabulated
        // approximation converges at least quadratically in the grid step.
        let d = quadratic_decisions(100_001);
        for &grid in &[129usize, 257] {
            let g = standardize(&d, 2.0, grid).unwrap();
            let bound = 4.0 / (grid as f64 * grid as f64);
            for k in 0..=500 {
                let p = k as f64 / 500.0;
                let a = g.loss(Outcome::Zero, p);
                let b = g.loss(Outcome::One, p);
                assert!(
                    (a - p * p).abs() < bound,
                    "grid {grid}: a_p off by {} at p={p}",
                    (a - p * p).abs()
                );
                assert!(
                    (b - (1.0 - p) * (1.0 - p)).abs() < bound,
                    "grid {grid}: b_p off by {} at p={p}",
                    (b - (1.0 - p) * (1.0 - p)).abs()
                );
            }
        }
    }

    #[test]
    fn quadratic_point_values() {
        let d = quadratic_decisions(20_001);
        let g = standardize(&d, 2.0, 1025).unwrap();
        // analytic minimizer of p·y + (1−p)·x over the curve is g = p
        assert!((g.loss(Outcome::Zero, 0.3) - 0.09).abs() < 1e-4);
        assert!((g.loss(Outcome::One, 0.3) - 0.49).abs() < 1e-4);
        // symmetry of the quadratic game at p = 1/2
        let a = g.loss(Outcome::Zero, 0.5);
        let b = g.loss(Outcome::One, 0.5);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn hull_argmin_matches_sampled_mixture_oracle() {
        // independent oracle: minimize p·y + (1−p)·x directly over pure
        // decisions and 10^5 random two-point exp-space mixtures
        use rand::{Rng, SeedableRng};
        let eta = 2.0;
        let d = quadratic_decisions(2001);
        let exp_pts: Vec<(f64, f64)> = d
            .points()
            .iter()
            .map(|&(x, y)| (math::exp(-eta * x), math::exp(-eta * y)))
            .collect();
        let game = standardize(&d, eta, 1025).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for p in [0.1, 0.3, 0.5, 0.9] {
            let objective = |x: f64, y: f64| p * y + (1.0 - p) * x;
            let mut oracle = d
                .points()
                .iter()
                .map(|&(x, y)| objective(x, y))
                .fold(f64::INFINITY, f64::min);
            for _ in 0..100_000 {
                let (ua, va) = exp_pts[rng.random_range(0..exp_pts.len())];
                let (ub, vb) = exp_pts[rng.random_range(0..exp_pts.len())];
                let alpha: f64 = rng.random();
                let u = alpha * ua + (1.0 - alpha) * ub;
                let v = alpha * va + (1.0 - alpha) * vb;
                oracle = oracle.min(objective(-math::ln(u) / eta, -math::ln(v) / eta));
            }
            let ours = objective(game.loss(Outcome::Zero, p), game.loss(Outcome::One, p));
            // agreement to combined sampling + interpolation accuracy
            assert!(
                (ours - oracle).abs() < 1e-6,
                "p={p}: hull argmin {ours} vs sampled oracle {oracle}"
            );
        }
    }

    #[test]
    fn two_point_log_like_set_mixes_to_ln2() {
        let m = 30.0;
        let d = DecisionSet::new(alloc::vec![(0.0, m), (m, 0.0)]).unwrap();
        let g = standardize(&d, 1.0, 257).unwrap();
        let ln2 = core::f64::consts::LN_2;
        assert!((g.loss(Outcome::Zero, 0.5) - ln2).abs() < 1e-9);
        assert!((g.loss(Outcome::One, 0.5) - ln2).abs() < 1e-9);
    }

    #[test]
    fn single_point_set_is_constant() {
        let d = DecisionSet::new(alloc::vec![(0.4, 0.4)]).unwrap();
        let g = standardize(&d, 3.0, 65).unwrap();
        for k in 0..=64 {
            let p = k as f64 / 64.0;
            assert!((g.loss(Outcome::Zero, p) - 0.4).abs() < 1e-12);
            assert!((g.loss(Outcome::One, p) - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn shifting_losses_shifts_standard_form() {
        let d = quadratic_decisions(2001);
        let shifted = DecisionSet::new(
            d.points().iter().map(|&(x, y)| (x + 1.0, y + 1.0)).collect(),
        )
        .unwrap();
        let g0 = standardize(&d, 2.0, 257).unwrap();
        let g1 = standardize(&shifted, 2.0, 257).unwrap();
        for k in 0..=100 {
            let p = k as f64 / 100.0;
            for w in [Outcome::Zero, Outcome::One] {
                let base = g0.loss(w, p);
                let moved = g1.loss(w, p);
                assert!(
                    (moved - base - 1.0).abs() < 1e-9,
                    "shift broken at p={p}: {moved} vs {base}+1"
                );
            }
        }
    }

    #[test]
    fn eta_overflow_reported() {
        let d = DecisionSet::new(alloc::vec![(0.0, 30.0), (30.0, 0.0)]).unwrap();
        assert!(matches!(
            standardize(&d, 30.0, 65),
            Err(GameError::EtaOverflow { .. })
        ));
    }
}
