//! Nelder-Mead simplex search on the unit box `[0, 1]^n`.
//!
//! Trial points are clamped coordinate-wise onto the box. Coefficients follow
//! the dimension-adaptive choice of Gao and Han, which behaves better than the
//! classic (1, 2, 0.5, 0.5) set beyond a handful of dimensions.
//!
//! Clamping can flatten the simplex against a face of the box, so a converged
//! simplex is rebuilt around its best vertex a few times, shrinking the
//! rebuild whenever it fails to improve.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iters: usize,
    /// Stop once the objective spread across the simplex is below this,
    pub f_tol: f64,
    /// or once every vertex is within this distance (max-norm) of the best.
    pub x_tol: f64,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
    /// Simplex rebuilds after convergence. A rebuild that fails to improve
    /// the objective makes the next one a quarter of the size.
    pub rebuilds: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            f_tol: 1e-10,
            x_tol: 1e-7,
            initial_step: 0.15,
            rebuilds: 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iters: usize,
    pub evals: usize,
    pub converged: bool,
}

fn clamp_unit(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimize `f` over the unit box starting from `x0`.
pub fn minimize<F>(f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let mut evals = 0usize;
    let mut eval = |x: &[f64]| {
        evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut start = x0.to_vec();
    clamp_unit(&mut start);
    let mut iters = 0;
    let (mut best_x, mut best_f, mut converged) = descend(&mut eval, &start, opts.initial_step, opts, &mut iters);
    let mut step = opts.initial_step;
    for _ in 0..opts.rebuilds {
        if !converged || iters >= opts.max_iters {
            break;
        }
        let (x, fx, conv) = descend(&mut eval, &best_x, step, opts, &mut iters);
        if fx < best_f - opts.f_tol {
            best_x = x;
            best_f = fx;
        } else {
            if fx <= best_f {
                best_x = x;
                best_f = fx;
            }
            step *= 0.25;
        }
        converged = conv;
    }

    NelderMeadResult {
        x: best_x,
        f: best_f,
        iters,
        evals,
        converged,
    }
}

fn descend<E>(
    eval: &mut E,
    start: &[f64],
    step: f64,
    opts: &NelderMeadOptions,
    iters: &mut usize,
) -> (Vec<f64>, f64, bool)
where
    E: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), eval(start)));
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] = if v[i] + step <= 1.0 { v[i] + step } else { v[i] - step };
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let mut converged = false;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];

    while *iters < opts.max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let spread = simplex[n].1 - best.1;
        let diam = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread.abs() <= opts.f_tol || diam <= opts.x_tol {
            converged = true;
            break;
        }
        *iters += 1;

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / nf;
            }
        }

        let worst = simplex[n].0.clone();
        let f_worst = simplex[n].1;
        let f_second = simplex[n - 1].1;
        let f_best = simplex[0].1;

        let point = |coef: f64, out: &mut Vec<f64>| {
            for ((o, c), w) in out.iter_mut().zip(&centroid).zip(&worst) {
                *o = c + coef * (c - w);
            }
            clamp_unit(out);
        };

        point(alpha, &mut trial);
        let reflected = trial.clone();
        let f_ref = eval(&reflected);

        if f_ref < f_best {
            point(alpha * gamma, &mut trial);
            let f_exp = eval(&trial);
            simplex[n] = if f_exp < f_ref {
                (trial.clone(), f_exp)
            } else {
                (reflected, f_ref)
            };
            continue;
        }
        if f_ref < f_second {
            simplex[n] = (reflected, f_ref);
            continue;
        }
        // Contraction, outside if the reflection improved on the worst vertex.
        let (coef, target) = if f_ref < f_worst {
            (alpha * rho, f_ref)
        } else {
            (-rho, f_worst)
        };
        point(coef, &mut trial);
        let f_con = eval(&trial);
        if f_con <= target {
            simplex[n] = (trial.clone(), f_con);
            continue;
        }
        // Shrink towards the best vertex.
        let anchor = simplex[0].0.clone();
        for (v, fv) in simplex.iter_mut().skip(1) {
            for (x, a) in v.iter_mut().zip(&anchor) {
                *x = a + sigma * (*x - a);
            }
            *fv = eval(v);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    (x, fx, converged)
}
