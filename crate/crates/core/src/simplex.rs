//! Derivative-free Nelder–Mead minimization.

pub const REFLECTION: f64 = 1.0;
pub const EXPANSION: f64 = 2.0;
pub const CONTRACTION: f64 = 0.5;
pub const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop once `f(worst) − f(best)` falls below this...
    pub tolerance: f64,
    /// ...and every vertex lies within this distance (per coordinate) of the best.
    pub x_tolerance: f64,
    /// Initial simplex vertex `i + 1` is `x0 + steps[i]·ê_i`.
    pub steps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

fn lerp(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + t * (b - a)).collect()
}

/// Minimizes `f` starting from `x0`. A non-finite value at any vertex ends the
/// run with `converged = false`, returning the best finite vertex seen.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert_eq!(opts.steps.len(), n, "one initial step per coordinate");

    let f0 = f(x0);
    let mut simplex = vec![Vertex { x: x0.to_vec(), f: f0 }];
    let abort = |simplex: &mut Vec<Vertex>, iterations| {
        simplex.retain(|v| v.f.is_finite());
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        let best = simplex.first().map(|v| (v.x.clone(), v.f));
        let (x, value) = best.unwrap_or_else(|| (x0.to_vec(), f64::NAN));
        SimplexOutcome {
            x,
            value,
            iterations,
            converged: false,
        }
    };
    if !f0.is_finite() {
        return abort(&mut simplex, 0);
    }
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.steps[i];
        let fx = f(&x);
        simplex.push(Vertex { x, f: fx });
        if !fx.is_finite() {
            return abort(&mut simplex, 0);
        }
    }

    let mut iterations = 0;
    loop {
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        let spread = simplex[1..]
            .iter()
            .flat_map(|v| v.x.iter().zip(&simplex[0].x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if simplex[n].f - simplex[0].f < opts.tolerance && spread <= opts.x_tolerance {
            let best = &simplex[0];
            return SimplexOutcome {
                x: best.x.clone(),
                value: best.f,
                iterations,
                converged: true,
            };
        }
        if iterations >= opts.max_iterations {
            let best = &simplex[0];
            return SimplexOutcome {
                x: best.x.clone(),
                value: best.f,
                iterations,
                converged: false,
            };
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(&v.x) {
                *c += x / n as f64;
            }
        }
        let worst = &simplex[n];

        let xr = lerp(&centroid, &worst.x, -REFLECTION);
        let fr = f(&xr);
        if !fr.is_finite() {
            return abort(&mut simplex, iterations);
        }

        let replacement = if fr < simplex[0].f {
            let xe = lerp(&centroid, &xr, EXPANSION);
            let fe = f(&xe);
            if !fe.is_finite() {
                return abort(&mut simplex, iterations);
            }
            if fe < fr {
                Some(Vertex { x: xe, f: fe })
            } else {
                Some(Vertex { x: xr, f: fr })
            }
        } else if fr < simplex[n - 1].f {
            Some(Vertex { x: xr, f: fr })
        } else {
            let outside = fr < worst.f;
            let xc = if outside {
                lerp(&centroid, &xr, CONTRACTION)
            } else {
                lerp(&centroid, &worst.x, CONTRACTION)
            };
            let fc = f(&xc);
            if !fc.is_finite() {
                return abort(&mut simplex, iterations);
            }
            let accepted = if outside { fc <= fr } else { fc < worst.f };
            accepted.then_some(Vertex { x: xc, f: fc })
        };

        match replacement {
            Some(v) => simplex[n] = v,
            None => {
                let best = simplex[0].x.clone();
                for v in simplex.iter_mut().skip(1) {
                    v.x = lerp(&best, &v.x, SHRINK);
                    v.f = f(&v.x);
                    if !v.f.is_finite() {
                        return abort(&mut simplex, iterations);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convex_one_dimensional() {
        let opts = SimplexOptions {
            max_iterations: 1000,
            tolerance: 1e-16,
            x_tolerance: 1e-8,
            steps: vec![0.25],
        };
        let out = minimize(|x| (x[0] - 2.0).powi(2), &[0.0], &opts);
        assert!(out.converged);
        assert!((out.x[0] - 2.0).abs() < 1e-6, "{:?}", out);
    }

    #[test]
    fn rosenbrock() {
        let opts = SimplexOptions {
            max_iterations: 5000,
            tolerance: 1e-20,
            x_tolerance: 1e-10,
            steps: vec![0.25, 0.25],
        };
        let rosen = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let out = minimize(rosen, &[-1.2, 1.0], &opts);
        assert!((out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] - 1.0).abs() < 1e-4, "{:?}", out);
    }

    #[test]
    fn best_value_never_exceeds_start() {
        let opts = SimplexOptions {
            max_iterations: 50,
            tolerance: 1e-12,
            x_tolerance: 1e-6,
            steps: vec![0.3; 3],
        };
        let f = |x: &[f64]| x.iter().map(|v| v.sin() + 0.1 * v * v).sum::<f64>();
        let x0 = [1.0, -2.0, 0.5];
        let out = minimize(f, &x0, &opts);
        assert!(out.value <= f(&x0));
        assert!(out.iterations <= 50);
    }

    #[test]
    fn non_finite_vertex_aborts() {
        let opts = SimplexOptions {
            max_iterations: 100,
            tolerance: 1e-12,
            x_tolerance: 1e-6,
            steps: vec![1.0],
        };
        let out = minimize(|x| if x[0] > 0.5 { f64::NAN } else { x[0] * x[0] }, &[0.0], &opts);
        assert!(!out.converged);
        assert_eq!(out.x, vec![0.0]);
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let opts = SimplexOptions {
            max_iterations: 3,
            tolerance: 0.0,
            x_tolerance: 1e-6,
            steps: vec![0.1, 0.1],
        };
        let out = minimize(|x| x[0].powi(2) + x[1].powi(2), &[5.0, 5.0], &opts);
        assert_eq!(out.iterations, 3);
        assert!(!out.converged);
    }
}
