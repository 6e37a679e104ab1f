use nalgebra::DMatrix;

/// Stopping rules for [`nelder_mead`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Largest allowed distance (max norm) between any vertex and the best one.
    pub x_tol: f64,
    /// Largest allowed objective spread, relative to `1 + |f_best|`.
    pub f_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 4000,
            x_tol: 1e-10,
            f_tol: 1e-14,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final vertices, best first.
    pub simplex: Vec<Vec<f64>>,
}

impl SimplexResult {
    /// Squared ratio of the largest to smallest singular value of the final
    /// simplex edges. Near a minimum the simplex stretches along flat
    /// directions, so this tracks the condition number of the Hessian.
    pub fn condition(&self) -> f64 {
        let n = self.x.len();
        if n == 0 {
            return 1.0;
        }
        let best = &self.simplex[0];
        let edges = DMatrix::from_fn(n, n, |i, j| self.simplex[i + 1][j] - best[j]);
        let sv = edges.singular_values();
        let max = sv.max();
        let min = sv.min();
        if min > 0.0 {
            (max / min).powi(2)
        } else {
            f64::INFINITY
        }
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Nelder-Mead minimization inside the box `[lower, upper]`.
///
/// Every trial point is projected onto the box before it is evaluated.
/// `step` sets the size of the initial simplex along each coordinate; a step
/// that would leave the box is taken in the opposite direction.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(
        step.len() == n && lower.len() == n && upper.len() == n,
        "dimension mismatch"
    );
    let mut start = x0.to_vec();
    project(&mut start, lower, upper);

    let mut pts = vec![start.clone()];
    for i in 0..n {
        let mut p = start.clone();
        p[i] = if p[i] + step[i] <= upper[i] {
            p[i] + step[i]
        } else {
            p[i] - step[i]
        };
        project(&mut p, lower, upper);
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let x_spread = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_spread = vals[n] - vals[0];
        if x_spread <= opts.x_tol && f_spread <= opts.f_tol * (1.0 + vals[0].abs()) {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |coef: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&pts[n]).map(|(c, w)| c + coef * (c - w)).collect();
            project(&mut p, lower, upper);
            p
        };

        let xr = toward(alpha);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = toward(gamma);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = toward(rho);
            let fc = f(&xc);
            (xc, fc)
        } else {
            let xc = toward(-rho);
            let fc = f(&xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let mut p: Vec<f64> = pts[0].iter().zip(&pts[i]).map(|(b, x)| b + sigma * (x - b)).collect();
            project(&mut p, lower, upper);
            vals[i] = f(&p);
            pts[i] = p;
        }
    }

    SimplexResult {
        x: pts[0].clone(),
        value: vals[0],
        iterations,
        converged,
        simplex: pts,
    }
}

/// Minimizes a one-dimensional function on `[lo, hi]`: a grid scan
/// picks the basin, golden-section search refines it.
pub(crate) fn minimize_scalar<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let h = (hi - lo) / grid as f64;
    let (mut best_i, mut best_v) = (0, f64::INFINITY);
    for i in 0..=grid {
        let v = f(lo + i as f64 * h);
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let mut a = (lo + (best_i as f64 - 1.0) * h).max(lo);
    let mut b = (lo + (best_i as f64 + 1.0) * h).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x);
    if v <= best_v {
        (x, v)
    } else {
        (lo + best_i as f64 * h, best_v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(
            f,
            &[-1.2, 1.0],
            &[0.5, 0.5],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &SimplexOptions::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn respects_bounds() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + (x[1] + 1.0).powi(2);
        let r = nelder_mead(
            f,
            &[0.0, 0.0],
            &[0.3, 0.3],
            &[-1.0, 0.0],
            &[1.0, 1.0],
            &SimplexOptions::default(),
        );
        assert!((r.x[0] - 1.0).abs() < 1e-8 && r.x[1].abs() < 1e-8, "{:?}", r.x);
    }

    #[test]
    fn condition_tracks_anisotropy() {
        let round = nelder_mead(
            |x: &[f64]| x[0] * x[0] + x[1] * x[1],
            &[1.0, 1.0],
            &[0.2, 0.2],
            &[-9.0; 2],
            &[9.0; 2],
            &SimplexOptions::default(),
        );
        let flat = nelder_mead(
            |x: &[f64]| x[0] * x[0] + 1e-4 * x[1] * x[1],
            &[1.0, 1.0],
            &[0.2, 0.2],
            &[-9.0; 2],
            &[9.0; 2],
            &SimplexOptions {
                x_tol: 1e-6,
                ..SimplexOptions::default()
            },
        );
        assert!(
            flat.condition() > 10.0 * round.condition(),
            "{} {}",
            flat.condition(),
            round.condition()
        );
    }

    #[test]
    fn scalar_minimum() {
        let (x, v) = minimize_scalar(|x| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 40);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-14);
        let (edge, _) = minimize_scalar(|x| x, 0.0, 1.0, 10);
        assert!(edge.abs() < 1e-12);
    }
}
