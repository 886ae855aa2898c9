use crate::diffcore::{NdArray, Real};

/// First and second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
}

/// Bias-corrected adaptive-moment optimizer over a fixed list of tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: u64,
    state: Vec<AdamState<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(sizes: &[usize], learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            t: 0,
            state: sizes
                .iter()
                .map(|&n| AdamState { m: vec![T::zero(); n], v: vec![T::zero(); n] })
                .collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// Starts a new step; call before the [`Self::apply`] calls of that step.
    pub fn tick(&mut self) {
        self.t += 1;
    }

    /// Descent update of tensor `slot` with the current step's bias
    /// correction: `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn apply(&mut self, slot: usize, param: &mut NdArray<T>, grad: &NdArray<T>) {
        assert!(self.t > 0, "apply before tick");
        let s = &mut self.state[slot];
        assert_eq!(param.len(), grad.len());
        assert_eq!(param.len(), s.m.len());
        let t = self.t as i32;
        let b1 = T::from_f64_lossy(self.beta1);
        let b2 = T::from_f64_lossy(self.beta2);
        let c1 = T::from_f64_lossy(1.0 - self.beta1.powi(t));
        let c2 = T::from_f64_lossy(1.0 - self.beta2.powi(t));
        let lr = T::from_f64_lossy(self.learning_rate);
        let eps = T::from_f64_lossy(self.epsilon);
        let one = T::one();
        let p = param.as_mut_slice();
        for (i, &gi) in grad.as_slice().iter().enumerate() {
            s.m[i] = b1 * s.m[i] + (one - b1) * gi;
            s.v[i] = b2 * s.v[i] + (one - b2) * gi * gi;
            let mh = s.m[i] / c1;
            let vh = s.v[i] / c2;
            p[i] = p[i] - lr * mh / (vh.sqrt() + eps);
        }
    }

    /// `tick` followed by `apply` on every slot in order.
    pub fn step(&mut self, params: &mut [&mut NdArray<T>], grads: &[&NdArray<T>]) {
        assert_eq!(params.len(), self.state.len());
        assert_eq!(grads.len(), self.state.len());
        self.tick();
        for (slot, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            self.apply(slot, p, g);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut opt = Adam::<f64>::new(&[3], 0.1, 0.5, 0.999, 1e-12);
        let mut p = NdArray::from_vec(&[3], vec![1.0, 2.0, 3.0]);
        let g = NdArray::from_vec(&[3], vec![4.0, -0.5, 0.0]);
        opt.step(&mut [&mut p], &[&g]);
        let want = [0.9, 2.1, 3.0];
        for (a, b) in p.as_slice().iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut opt = Adam::<f64>::new(&[1], 0.05, 0.5, 0.999, 1e-8);
        let mut p = NdArray::from_vec(&[1], vec![3.0]);
        for _ in 0..2000 {
            let g = p.map(|x| 2.0 * (x - 1.0));
            opt.step(&mut [&mut p], &[&g]);
        }
        assert!((p.item() - 1.0).abs() < 1e-2);
    }
}
