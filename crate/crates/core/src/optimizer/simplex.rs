//! Nelder–Mead downhill simplex with the standard coefficients
//! (reflection 1, expansion 2, contraction 1/2, shrink 1/2).

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexSettings {
    pub max_iterations: usize,
    /// Spread of objective values across the simplex at which to stop.
    pub f_tolerance: f64,
    /// Largest vertex distance from the best vertex at which to stop.
    pub x_tolerance: f64,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        SimplexSettings {
            max_iterations: 200,
            f_tolerance: 1e-9,
            x_tolerance: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Minimizes `f` from `start`, building the initial simplex by stepping each
/// coordinate by the matching entry of `steps`. Non-finite objective values
/// are treated as `+inf`.
pub fn minimize<F>(f: F, start: &[f64], steps: &[f64], settings: &SimplexSettings) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = start.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut vertices: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    vertices.push(start.to_vec());
    for (i, step) in steps.iter().enumerate() {
        let mut v = start.to_vec();
        v[i] += step;
        vertices.push(v);
    }
    let mut values: Vec<f64> = vertices.iter().map(|v| eval(v)).collect();
    let mut evaluations = n + 1;
    let mut iterations = 0;
    let mut converged = false;

    let mut order: Vec<usize> = (0..=n).collect();
    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);

        let spread = values[worst] - values[best];
        let size = vertices
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&vertices[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if values[best].is_finite()
            && spread <= settings.f_tolerance
            && size <= settings.x_tolerance
        {
            converged = true;
            break;
        }
        if iterations >= settings.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, x) in centroid.iter_mut().zip(&vertices[i]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&vertices[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = along(1.0);
        let f_reflected = eval(&reflected);
        evaluations += 1;

        if f_reflected < values[best] {
            let expanded = along(2.0);
            let f_expanded = eval(&expanded);
            evaluations += 1;
            if f_expanded < f_reflected {
                vertices[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                vertices[worst] = reflected;
                values[worst] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[second] {
            vertices[worst] = reflected;
            values[worst] = f_reflected;
            continue;
        }

        let (contracted, f_contracted) = if f_reflected < values[worst] {
            let c = along(0.5);
            let fc = eval(&c);
            (c, fc)
        } else {
            let c = along(-0.5);
            let fc = eval(&c);
            (c, fc)
        };
        evaluations += 1;
        if f_contracted < values[worst].min(f_reflected) {
            vertices[worst] = contracted;
            values[worst] = f_contracted;
            continue;
        }

        let anchor = vertices[best].clone();
        for &i in &order[1..] {
            for (x, a) in vertices[i].iter_mut().zip(&anchor) {
                *x = a + 0.5 * (*x - a);
            }
            values[i] = eval(&vertices[i]);
            evaluations += 1;
        }
    }

    let best = order[0];
    SimplexResult {
        x: vertices[best].clone(),
        value: values[best],
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2) + 0.25;
        let r = minimize(f, &[0.0, 0.0], &[0.3, 0.3], &SimplexSettings::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.5).abs() < 1e-4);
        assert!((r.x[1] + 0.5).abs() < 1e-4);
        assert!((r.value - 0.25).abs() < 1e-9);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let settings = SimplexSettings {
            max_iterations: 2000,
            f_tolerance: 1e-14,
            x_tolerance: 1e-9,
        };
        let r = minimize(f, &[-1.2, 1.0], &[0.1, 0.1], &settings);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 0.2).powi(2) + x[1] * x[1]
            }
        };
        let r = minimize(f, &[1.0, 1.0], &[0.5, 0.5], &SimplexSettings::default());
        assert!(r.value < 1e-8);
    }

    #[test]
    fn iteration_cap() {
        let f = |x: &[f64]| x[0].abs() + x[1].abs();
        let settings = SimplexSettings {
            max_iterations: 3,
            ..SimplexSettings::default()
        };
        let r = minimize(f, &[10.0, 10.0], &[1.0, 1.0], &settings);
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }
}
