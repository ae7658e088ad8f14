//! Derivative-free minimizers: Nelder–Mead simplex and golden-section search.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            tol: 1e-8,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `x0` with an initial simplex of per-coordinate `steps`.
/// Stops when the simplex diameter (relative to the best vertex) and the
/// spread of function values both fall below `tol`. Non-finite values are
/// treated as `+∞`; a simplex with no finite vertex is abandoned at once.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let d = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x);
        simplex.push((x, v));
    }
    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| {
                x.iter()
                    .zip(&best.0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        let scale = 1.0 + best.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !best.1.is_finite() {
            break;
        }
        let spread = simplex[d].1 - best.1;
        if diameter <= opts.tol * scale && spread <= opts.tol * (1.0 + best.1.abs()) {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / d as f64;
            }
        }
        let worst = simplex[d].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(rho);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(-rho);
            let v = eval(&x);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            simplex[d] = (xc, fc);
            continue;
        }
        let best_x = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = best_x
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + shrink * (v - b))
                .collect();
            let v = eval(&x);
            *vertex = (x, v);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Minimum {
        x,
        f,
        iterations,
        converged,
    }
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + c.abs().max(d.abs())) {
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
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
