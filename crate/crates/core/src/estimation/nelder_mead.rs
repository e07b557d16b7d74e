//! Derivative-free simplex minimizer.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    /// Stop once every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    pub max_evals: usize,
    /// Edge length of the initial simplex.
    pub initial_step: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        SimplexConfig {
            diameter_tol: 1e-8,
            max_evals: 10_000,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(p, _)| {
            p.iter()
                .zip(best)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn toward(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `f` from `start`. Non-finite values are treated as `+inf`, so
/// `f` may signal infeasible points that way. The returned value never
/// exceeds `f(start)`.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    cfg: &SimplexConfig,
) -> SimplexResult {
    let dim = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let v0 = eval(start, &mut evals);
    simplex.push((start.to_vec(), v0));
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += cfg.initial_step;
        let v = eval(&p, &mut evals);
        simplex.push((p, v));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if diameter(&simplex) < cfg.diameter_tol {
            return SimplexResult {
                point: simplex[0].0.clone(),
                value: simplex[0].1,
                evaluations: evals,
                converged: true,
            };
        }
        if evals >= cfg.max_evals {
            return SimplexResult {
                point: simplex[0].0.clone(),
                value: simplex[0].1,
                evaluations: evals,
                converged: false,
            };
        }

        let mut centroid = vec![0.0; dim];
        for (p, _) in &simplex[..dim] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let reflected = toward(&centroid, &worst.0, -alpha);
        let fr = eval(&reflected, &mut evals);

        if fr < simplex[0].1 {
            let expanded = toward(&centroid, &worst.0, -gamma);
            let fe = eval(&expanded, &mut evals);
            simplex[dim] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let (target, ft) = if fr < worst.1 {
                (reflected.as_slice(), fr)
            } else {
                (worst.0.as_slice(), worst.1)
            };
            let contracted = toward(&centroid, target, rho);
            let fc = eval(&contracted, &mut evals);
            if fc < ft {
                simplex[dim] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let p = toward(&best, &vertex.0, sigma);
                    let v = eval(&p, &mut evals);
                    *vertex = (p, v);
                }
            }
        }
    }
}
