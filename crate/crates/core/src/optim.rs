//! Derivative-free Nelder-Mead minimization on an unconstrained space.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once the spread of objective values across the simplex falls
    /// below this.
    pub f_tol: f64,
    /// ...and every vertex is within this distance of the best one.
    pub x_tol: f64,
    pub initial_step: f64,
    /// Fresh simplices built around the optimum after the first
    /// convergence, to guard against collapsed simplices.
    pub restarts: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iterations: 2000,
            f_tol: 1e-9,
            x_tol: 1e-8,
            initial_step: 0.25,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0`. Non-finite objective values are treated as
/// `+inf`, so they are never accepted as improvements.
pub fn minimize<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut best = x0.to_vec();
    let mut best_value = eval(&best);
    let mut iterations = 0;
    let mut converged = false;

    for round in 0..=opts.restarts {
        let budget = opts.max_iterations.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let step = if round == 0 {
            opts.initial_step
        } else {
            opts.initial_step * 0.2
        };
        let run = run_simplex(&eval, &best, best_value, step, budget, opts);
        iterations += run.iterations;
        let improved = best_value - run.value;
        if run.value <= best_value {
            best = run.x;
            best_value = run.value;
        }
        converged = run.converged;
        if !run.converged || (round > 0 && improved <= opts.f_tol) {
            break;
        }
    }

    Minimum {
        x: best,
        value: best_value,
        iterations,
        converged,
    }
}

fn run_simplex<F>(
    eval: &F,
    x0: &[f64],
    f0: f64,
    step: f64,
    budget: usize,
    opts: &NelderMeadOptions,
) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if has_converged(&simplex, opts) {
            converged = true;
            break;
        }
        iterations += 1;

        let worst = simplex[dim].clone();
        let second_worst = simplex[dim - 1].1;
        let best = simplex[0].1;

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(REFLECT);
        let fr = eval(&reflected);
        if fr < best {
            let expanded = along(EXPAND);
            let fe = eval(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst.1 {
            let x = along(CONTRACT * REFLECT);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-CONTRACT);
            let v = eval(&x);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            simplex[dim] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            for (xi, a) in vertex.0.iter_mut().zip(&anchor) {
                *xi = a + SHRINK * (*xi - a);
            }
            vertex.1 = eval(&vertex.0);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        converged,
    }
}

fn has_converged(sorted: &[(Vec<f64>, f64)], opts: &NelderMeadOptions) -> bool {
    let best = &sorted[0];
    let worst = &sorted[sorted.len() - 1];
    if !best.1.is_finite() || (worst.1 - best.1).abs() > opts.f_tol {
        return false;
    }
    sorted[1..].iter().all(|(x, _)| {
        x.iter()
            .zip(&best.0)
            .all(|(a, b)| (a - b).abs() <= opts.x_tol)
    })
}

/// Quasi-Newton (BFGS) refinement of a point found by [`minimize`], using
/// the analytic gradient. Never returns a worse point than `x0`.
pub fn polish<F, G>(f: F, grad: G, x0: &[f64], f0: f64, max_iterations: usize, g_tol: f64) -> Minimum
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let dim = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut g = grad(&x);
    let mut h = identity(dim);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iterations {
        if norm(&g) <= g_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            // Lost descent; fall back to steepest descent.
            h = identity(dim);
            d = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-12 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            break;
        };
        let g_new = grad(&x_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 {
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..dim {
                for j in 0..dim {
                    h[i][j] += (sy + yhy) * s[i] * s[j] / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let stalled = norm(&s) <= 1e-15 * (1.0 + norm(&x));
        x = x_new;
        fx = f_new;
        g = g_new;
        if stalled {
            converged = norm(&g) <= g_tol;
            break;
        }
    }

    Minimum {
        x,
        value: fx,
        iterations,
        converged,
    }
}

fn identity(dim: usize) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
