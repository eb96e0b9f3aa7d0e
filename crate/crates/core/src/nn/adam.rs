use super::config::CnnConfig;
use super::model::CnnParams;
use crate::scalar::Scalar;

/// First and second moment estimates for every parameter, plus the step
/// counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: CnnParams<T>,
    pub v: CnnParams<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(cfg: &CnnConfig) -> Self {
        AdamState {
            m: CnnParams::zeros(cfg),
            v: CnnParams::zeros(cfg),
            t: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl From<&CnnConfig> for AdamHyper {
    fn from(c: &CnnConfig) -> Self {
        AdamHyper {
            learning_rate: c.learning_rate,
            beta1: c.beta1,
            beta2: c.beta2,
            epsilon: c.epsilon,
        }
    }
}

/// Bias-corrected Adam update of a single tensor.
pub fn adam_update<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    m: &mut [T],
    v: &mut [T],
    t: u64,
    hyper: AdamHyper,
) {
    debug_assert!(t >= 1);
    let b1 = T::from_f64_lossy(hyper.beta1);
    let b2 = T::from_f64_lossy(hyper.beta2);
    let one_minus_b1 = T::from_f64_lossy(1.0 - hyper.beta1);
    let one_minus_b2 = T::from_f64_lossy(1.0 - hyper.beta2);
    let t = i32::try_from(t).unwrap_or(i32::MAX);
    let correct1 = T::from_f64_lossy(1.0 - hyper.beta1.powi(t));
    let correct2 = T::from_f64_lossy(1.0 - hyper.beta2.powi(t));
    let lr = T::from_f64_lossy(hyper.learning_rate);
    let eps = T::from_f64_lossy(hyper.epsilon);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(m.iter_mut())
        .zip(v.iter_mut())
    {
        *m = b1 * *m + one_minus_b1 * g;
        *v = b2 * *v + one_minus_b2 * g * g;
        let m_hat = *m / correct1;
        let v_hat = *v / correct2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    }
}

/// One Adam step over every parameter tensor; increments `state.t`.
pub fn adam_step<T: Scalar>(
    params: &mut CnnParams<T>,
    grads: &CnnParams<T>,
    state: &mut AdamState<T>,
    hyper: AdamHyper,
) {
    state.t += 1;
    let t = state.t;
    for (((p, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grads.tensors())
        .zip(state.m.tensors_mut())
        .zip(state.v.tensors_mut())
    {
        adam_update(p, g, m, v, t, hyper);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper() -> AdamHyper {
        AdamHyper::from(&CnnConfig::default())
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut p = [0.5f64, -1.0];
        let (mut m, mut v) = ([0.0; 2], [0.0; 2]);
        adam_update(&mut p, &[0.0, 0.0], &mut m, &mut v, 1, hyper());
        assert_eq!(p, [0.5, -1.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m = 0.1, v = 0.001; corrected both to 1 -> step = lr / (1 + eps).
        let mut p = [0.0f64];
        let (mut m, mut v) = ([0.0], [0.0]);
        adam_update(&mut p, &[1.0], &mut m, &mut v, 1, hyper());
        let want = -0.001 / (1.0 + 1e-8);
        assert!((p[0] - want).abs() < 1e-15, "{}", p[0]);
        assert!((m[0] - 0.1).abs() < 1e-15);
        assert!((v[0] - 0.001).abs() < 1e-15);
    }

    #[test]
    fn update_magnitudes_over_several_steps() {
        // Constant g = 1: bias correction gives mhat = vhat = 1 at every t,
        // so each step is exactly lr / (1 + eps).
        let mut p = [0.0f64];
        let (mut m, mut v) = ([0.0], [0.0]);
        let mut steps = Vec::new();
        for t in 1..=4 {
            let before = p[0];
            adam_update(&mut p, &[1.0], &mut m, &mut v, t, hyper());
            steps.push(before - p[0]);
        }
        for s in &steps {
            assert!((s - 0.001 / (1.0 + 1e-8)).abs() < 1e-12);
        }
        // Gradient halves each step: update magnitudes decrease monotonically.
        let mut p = [0.0f64];
        let (mut m, mut v) = ([0.0], [0.0]);
        let mut prev = f64::INFINITY;
        for t in 1..=5 {
            let g = 0.5f64.powi(t as i32 - 1);
            let before = p[0];
            adam_update(&mut p, &[g], &mut m, &mut v, t, hyper());
            let step = before - p[0];
            assert!(step < prev, "step {t}: {step} >= {prev}");
            prev = step;
        }
    }
}
