//! Training losses and the epoch-dependent weight schedule.

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Probabilities are clamped to `[ε, 1-ε]` before taking logs.
pub const PROB_EPS: f64 = 1e-12;
pub const FOCAL_GAMMA: f64 = 2.0;
pub const FOCAL_ALPHA: f64 = 0.25;
/// Epoch at which the exponential ramp reaches full weight and stops.
pub const SCHEDULE_EPOCHS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub g_coord: f64,
    pub direct: f64,
    pub connect: f64,
    pub g_reconstruction: f64,
    pub l_coord: f64,
    pub prob: f64,
    pub l_reconstruction: f64,
    pub epoch: u32,
}

/// Direction and connection weights ramp as `2e^(epoch-100)` and
/// `5e^(epoch-100)`, held at 2 and 5 from epoch 100 on.
pub fn schedule(epoch: u32) -> LossWeights {
    let ramp = (f64::from(epoch.min(SCHEDULE_EPOCHS)) - f64::from(SCHEDULE_EPOCHS)).exp();
    LossWeights {
        g_coord: 2.0,
        direct: 2.0 * ramp,
        connect: 5.0 * ramp,
        g_reconstruction: 1.0,
        l_coord: 2.0,
        prob: 5.0,
        l_reconstruction: 1.0,
        epoch,
    }
}

fn check_len(what: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape {
            what,
            expected: a,
            got: b,
        });
    }
    Ok(())
}

/// Mean absolute deviation. Empty input has zero loss.
pub fn l1_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len("l1 target", pred.len(), target.len())?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum();
    Ok(sum / pred.len() as f64)
}

/// L1 over every x and y component.
pub fn coord_l1_loss(pred: &[Point], target: &[Point]) -> Result<f64> {
    check_len("coordinate target", pred.len(), target.len())?;
    let flat = |ps: &[Point]| ps.iter().flat_map(|p| [p.x, p.y]).collect::<Vec<_>>();
    l1_loss(&flat(pred), &flat(target))
}

/// Mean over bins of `-α (1-p_t)^γ ln(p_t)`, `p_t` the probability assigned
/// to the true class. The same `α` weights both classes.
pub fn focal_loss(pred: &[f64], target: &[f64], gamma: f64, alpha: f64) -> Result<f64> {
    check_len("focal target", pred.len(), target.len())?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            let pt = if y >= 0.5 { p } else { 1.0 - p };
            -alpha * (1.0 - pt).powf(gamma) * pt.ln()
        })
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Mean binary cross-entropy on probabilities.
pub fn bce_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_len("bce target", pred.len(), target.len())?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_EPS, 1.0 - PROB_EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(sum / pred.len() as f64)
}

/// Numerically stable BCE of one logit.
pub fn bce_with_logit(x: f64, y: f64) -> f64 {
    x.max(0.0) - x * y + (-x.abs()).exp().ln_1p()
}

pub fn bce_with_logits_loss(logits: &[f64], target: &[f64]) -> Result<f64> {
    check_len("bce-with-logits target", logits.len(), target.len())?;
    if logits.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = logits
        .iter()
        .zip(target)
        .map(|(&x, &y)| bce_with_logit(x, y))
        .sum();
    Ok(sum / logits.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlobalLossParts {
    pub coord: f64,
    pub direct: f64,
    pub connect: f64,
    pub reconstruction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalLossParts {
    pub coord: f64,
    pub prob: f64,
    pub reconstruction: f64,
}

pub fn combined_global_loss(parts: GlobalLossParts, w: &LossWeights) -> f64 {
    w.g_coord * parts.coord
        + w.direct * parts.direct
        + w.connect * parts.connect
        + w.g_reconstruction * parts.reconstruction
}

pub fn combined_local_loss(parts: LocalLossParts, w: &LossWeights) -> f64 {
    w.l_coord * parts.coord + w.prob * parts.prob + w.l_reconstruction * parts.reconstruction
}

/// Reconstruction loss of denoised global-stage queries with known
/// correspondence: coordinate, direction and category terms under the
/// global-stage weights.
pub fn global_reconstruction_loss(
    coords: (&[Point], &[Point]),
    directions: (&[f64], &[f64]),
    category: (&[f64], &[f64]),
    w: &LossWeights,
) -> Result<f64> {
    Ok(w.g_coord * coord_l1_loss(coords.0, coords.1)?
        + w.direct * focal_loss(directions.0, directions.1, FOCAL_GAMMA, FOCAL_ALPHA)?
        + w.prob * l1_loss(category.0, category.1)?)
}

/// Reconstruction loss of denoised local-stage queries: coordinate and
/// category terms under the local-stage weights.
pub fn local_reconstruction_loss(
    coords: (&[Point], &[Point]),
    category: (&[f64], &[f64]),
    w: &LossWeights,
) -> Result<f64> {
    Ok(w.l_coord * coord_l1_loss(coords.0, coords.1)? + w.prob * l1_loss(category.0, category.1)?)
}

/// Largest problem solved by exhaustive search in [`assign`].
pub const EXHAUSTIVE_ASSIGNMENT_LIMIT: usize = 10;

/// Matches each target to a distinct prediction, minimizing total L1 cost.
///
/// Exhaustive branch-and-bound when both sides have at most
/// [`EXHAUSTIVE_ASSIGNMENT_LIMIT`] points; greedy nearest pair otherwise.
/// Returns `assignment[target] = Some(pred)`; targets beyond the number of
/// predictions stay unassigned.
pub fn assign(pred: &[Point], target: &[Point]) -> Vec<Option<usize>> {
    let cost =
        |t: usize, p: usize| (pred[p].x - target[t].x).abs() + (pred[p].y - target[t].y).abs();
    if pred.len().max(target.len()) <= EXHAUSTIVE_ASSIGNMENT_LIMIT {
        if pred.len() >= target.len() {
            let mut best = (f64::INFINITY, vec![]);
            let mut current = Vec::with_capacity(target.len());
            let mut used = vec![false; pred.len()];
            search(
                0,
                0.0,
                target.len(),
                pred.len(),
                &cost,
                &mut used,
                &mut current,
                &mut best,
            );
            return best.1.into_iter().map(Some).collect();
        }
        // More targets than predictions: solve the transposed problem.
        let transposed = assign(target, pred);
        let mut out = vec![None; target.len()];
        for (p, t) in transposed.into_iter().enumerate() {
            if let Some(t) = t {
                out[t] = Some(p);
            }
        }
        return out;
    }
    let mut pairs: Vec<(f64, usize, usize)> = (0..target.len())
        .flat_map(|t| (0..pred.len()).map(move |p| (t, p)))
        .map(|(t, p)| (cost(t, p), t, p))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut out = vec![None; target.len()];
    let mut used = vec![false; pred.len()];
    for (_, t, p) in pairs {
        if out[t].is_none() && !used[p] {
            out[t] = Some(p);
            used[p] = true;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn search(
    t: usize,
    acc: f64,
    n_target: usize,
    n_pred: usize,
    cost: &impl Fn(usize, usize) -> f64,
    used: &mut [bool],
    current: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    if acc >= best.0 {
        return;
    }
    if t == n_target {
        *best = (acc, current.clone());
        return;
    }
    for p in 0..n_pred {
        if used[p] {
            continue;
        }
        used[p] = true;
        current.push(p);
        search(
            t + 1,
            acc + cost(t, p),
            n_target,
            n_pred,
            cost,
            used,
            current,
            best,
        );
        current.pop();
        used[p] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn schedule_values() {
        let w = schedule(100);
        assert_eq!((w.direct, w.connect), (2.0, 5.0));
        assert_relative_eq!(schedule(0).direct, 2.0 * (-100.0f64).exp());
        assert!((schedule(0).direct - 7.44e-44).abs() < 1e-46);
        assert!((schedule(98).direct - 2.0 * (-2.0f64).exp()).abs() <= 1e-12);
        assert_eq!(
            schedule(250),
            LossWeights {
                epoch: 250,
                ..schedule(100)
            }
        );
        let c = schedule(37);
        assert_eq!(
            (
                c.g_coord,
                c.g_reconstruction,
                c.l_coord,
                c.prob,
                c.l_reconstruction
            ),
            (2.0, 1.0, 2.0, 5.0, 1.0)
        );
    }

    #[test]
    fn schedule_is_monotone() {
        let mut prev = schedule(0);
        for e in 1..=150 {
            let w = schedule(e);
            assert!(w.direct >= prev.direct && w.connect >= prev.connect);
            prev = w;
        }
    }

    #[test]
    fn l1_examples() {
        let t = [Point::new(1.0, 2.0), Point::new(3.0, 4.0)];
        assert_eq!(coord_l1_loss(&t, &t).unwrap(), 0.0);
        let shifted: Vec<Point> = t.iter().map(|p| Point::new(p.x + 1.0, p.y + 1.0)).collect();
        assert_eq!(coord_l1_loss(&shifted, &t).unwrap(), 1.0);
        assert!(l1_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn focal_examples() {
        let half = focal_loss(&[0.5], &[1.0], 2.0, 0.25).unwrap();
        assert_relative_eq!(half, 0.25 * 0.25 * 2f64.ln(), epsilon = 1e-15);
        assert!((half - 0.0433).abs() < 5e-5);
        let perfect = focal_loss(&[1.0, 0.0], &[1.0, 0.0], 2.0, 0.25).unwrap();
        assert!(perfect < 1e-20);
        let p = [0.1, 0.7, 0.999, 0.3];
        let y = [0.0, 1.0, 1.0, 0.0];
        assert_relative_eq!(
            focal_loss(&p, &y, 0.0, 1.0).unwrap(),
            bce_loss(&p, &y).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn bce_with_logits_matches_probability_form() {
        assert_relative_eq!(bce_with_logit(0.0, 1.0), 2f64.ln());
        assert_relative_eq!(bce_with_logit(0.0, 0.0), 2f64.ln());
        assert!(bce_with_logit(50.0, 1.0) < 1e-20);
        assert!(bce_with_logit(-800.0, 0.0).is_finite());
        for x in [-3.0f64, -0.2, 0.7, 4.0] {
            let p = 1.0 / (1.0 + (-x).exp());
            assert_relative_eq!(
                bce_with_logit(x, 1.0),
                bce_loss(&[p], &[1.0]).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn combined_losses() {
        let w = schedule(100);
        let ones = GlobalLossParts {
            coord: 1.0,
            direct: 1.0,
            connect: 1.0,
            reconstruction: 1.0,
        };
        assert_eq!(combined_global_loss(ones, &w), 10.0);
        assert_eq!(combined_global_loss(GlobalLossParts::default(), &w), 0.0);
        let coord_only = GlobalLossParts {
            coord: 1.0,
            ..Default::default()
        };
        assert_eq!(combined_global_loss(coord_only, &schedule(3)), 2.0);

        let l = |c, p, r| {
            combined_local_loss(
                LocalLossParts {
                    coord: c,
                    prob: p,
                    reconstruction: r,
                },
                &w,
            )
        };
        assert_eq!(l(1.0, 1.0, 1.0), 8.0);
        assert_eq!(l(0.0, 0.0, 0.0), 0.0);
        assert!((l(0.5, 0.2, 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_uses_stage_weights() {
        let w = schedule(100);
        let gt = [Point::new(0.0, 0.0)];
        let moved = [Point::new(1.0, 1.0)];
        let r = local_reconstruction_loss((&moved, &gt), (&[0.5], &[1.0]), &w).unwrap();
        assert_relative_eq!(r, 2.0 * 1.0 + 5.0 * 0.5);
        let g =
            global_reconstruction_loss((&gt, &gt), (&[1.0], &[1.0]), (&[1.0], &[1.0]), &w).unwrap();
        assert!(g < 1e-20);
    }

    #[test]
    fn assignment_exhaustive_beats_greedy_trap() {
        // Greedy takes (t0, p0) at cost 1, leaving t1 -> p1 at cost 5.
        // The optimum crosses: t0 -> p1 (2) and t1 -> p0 (2).
        let pred = [Point::new(1.0, 0.0), Point::new(-2.0, 0.0)];
        let target = [Point::new(0.0, 0.0), Point::new(3.0, 0.0)];
        assert_eq!(assign(&pred, &target), vec![Some(1), Some(0)]);
        let short = assign(&pred[..1], &target);
        assert_eq!(short.iter().flatten().count(), 1);
    }

    #[test]
    fn assignment_greedy_for_large_sets() {
        let target: Vec<Point> = (0..12).map(|i| Point::new(i as f64 * 10.0, 0.0)).collect();
        let pred: Vec<Point> = target
            .iter()
            .rev()
            .map(|p| Point::new(p.x + 0.5, 1.0))
            .collect();
        let a = assign(&pred, &target);
        for (t, p) in a.iter().enumerate() {
            assert_eq!(p.unwrap(), 11 - t);
        }
    }
}
