use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// Adam with bias correction. Moment buffers are allocated on the first
/// step from the tensor lengths.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    learning_rate: T,
    beta1: T,
    beta2: T,
    epsilon: T,
    step: i32,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate: T::lit(learning_rate),
            beta1: T::lit(ADAM_BETA1),
            beta2: T::lit(ADAM_BETA2),
            epsilon: T::lit(ADAM_EPSILON),
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> i32 {
        self.step
    }

    pub fn step(&mut self, params: Vec<&mut [T]>, grads: &[&[T]]) -> Result<()> {
        let shape_error = || Error::InvalidArgument("parameter/gradient layout changed".into());
        if params.len() != grads.len() {
            return Err(shape_error());
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![T::zero(); g.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != grads.len() {
            return Err(shape_error());
        }
        self.step += 1;
        let c1 = T::one() - self.beta1.powi(self.step);
        let c2 = T::one() - self.beta2.powi(self.step);
        for (((p, &g), m), v) in params
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            if p.len() != g.len() || m.len() != g.len() {
                return Err(shape_error());
            }
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (T::one() - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (T::one() - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut adam = Adam::new(0.1);
        let mut p = vec![1.0f64, -2.0];
        adam.step(vec![&mut p], &[&[0.5, -3.0]]).unwrap();
        // bias-corrected first step is lr · g/|g| (up to epsilon)
        assert!((p[0] - 0.9).abs() < 1e-7);
        assert!((p[1] + 1.9).abs() < 1e-7);
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut adam = Adam::new(0.0);
        let mut p = vec![0.25, 4.0];
        for _ in 0..5 {
            adam.step(vec![&mut p], &[&[1.0, -1.0]]).unwrap();
        }
        assert_eq!(p, vec![0.25, 4.0]);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut adam = Adam::new(0.05);
        let mut p = vec![3.0f64];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.0)];
            adam.step(vec![&mut p], &[&g]).unwrap();
        }
        assert!((p[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn layout_changes_are_errors() {
        let mut adam = Adam::new(0.1);
        let mut p = vec![0.0];
        adam.step(vec![&mut p], &[&[1.0]]).unwrap();
        let mut q = vec![0.0, 0.0];
        assert!(adam.step(vec![&mut q], &[&[1.0, 1.0]]).is_err());
    }
}
