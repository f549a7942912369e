//! Gradient buffers and the Adam optimizer with decoupled weight decay.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Per-slot gradient storage aligned with a model's parameter slots.
///
/// A slot that received no gradient since the last [`GradBuffer::clear`] is
/// untouched and the optimizer skips it entirely, weight decay included.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    grads: Vec<Vec<f64>>,
    touched: Vec<bool>,
}

impl GradBuffer {
    pub fn new(sizes: &[usize]) -> Self {
        GradBuffer {
            grads: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            touched: vec![false; sizes.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Mutable access to one slot; marks it as touched.
    pub fn slot_mut(&mut self, slot: usize) -> &mut [f64] {
        self.touched[slot] = true;
        &mut self.grads[slot]
    }

    pub fn slot(&self, slot: usize) -> Option<&[f64]> {
        if self.touched[slot] {
            Some(&self.grads[slot])
        } else {
            None
        }
    }

    pub fn is_touched(&self, slot: usize) -> bool {
        self.touched[slot]
    }

    pub fn scale(&mut self, factor: f64) {
        for (g, &t) in self.grads.iter_mut().zip(&self.touched) {
            if t {
                g.iter_mut().for_each(|x| *x *= factor);
            }
        }
    }

    pub fn clear(&mut self) {
        for (g, t) in self.grads.iter_mut().zip(self.touched.iter_mut()) {
            if *t {
                g.iter_mut().for_each(|x| *x = 0.0);
                *t = false;
            }
        }
    }

    pub fn any_touched(&self) -> bool {
        self.touched.iter().any(|&t| t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamWConfig {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        AdamWConfig {
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
struct SlotState {
    m: Vec<f64>,
    v: Vec<f64>,
    beta1_pow: f64,
    beta2_pow: f64,
}

/// Adam with decoupled weight decay. Moments and bias-correction counters
/// are kept per slot, so slots skipped on some steps stay consistent.
#[derive(Debug, Clone)]
pub struct AdamW {
    cfg: AdamWConfig,
    state: Vec<Option<SlotState>>,
}

impl AdamW {
    pub fn new(cfg: AdamWConfig, slots: usize) -> Self {
        AdamW {
            cfg,
            state: vec![None; slots],
        }
    }

    /// Applies one update to every touched slot.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &GradBuffer) {
        debug_assert_eq!(params.len(), self.state.len());
        let c = self.cfg;
        for (i, p) in params.iter_mut().enumerate() {
            let Some(g) = grads.slot(i) else { continue };
            let st = self.state[i].get_or_insert_with(|| SlotState {
                m: vec![0.0; g.len()],
                v: vec![0.0; g.len()],
                beta1_pow: 1.0,
                beta2_pow: 1.0,
            });
            st.beta1_pow *= c.beta1;
            st.beta2_pow *= c.beta2;
            let bc1 = 1.0 - st.beta1_pow;
            let bc2 = 1.0 - st.beta2_pow;
            let decay = 1.0 - c.learning_rate * c.weight_decay;
            for j in 0..p.len() {
                p[j] *= decay;
                st.m[j] = c.beta1 * st.m[j] + (1.0 - c.beta1) * g[j];
                st.v[j] = c.beta2 * st.v[j] + (1.0 - c.beta2) * g[j] * g[j];
                let m_hat = st.m[j] / bc1;
                let v_hat = st.v[j] / bc2;
                p[j] -= c.learning_rate * m_hat / (math::sqrt(v_hat) + c.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untouched_slots_are_skipped() {
        let mut a = vec![1.0, 2.0];
        let mut b = vec![3.0];
        let mut grads = GradBuffer::new(&[2, 1]);
        grads.slot_mut(0).copy_from_slice(&[0.5, -0.5]);
        let mut opt = AdamW::new(AdamWConfig::new(0.1, 0.01), 2);
        opt.step(&mut [&mut a, &mut b], &grads);
        assert_eq!(b, [3.0]);
        // First Adam step moves each coordinate by ~lr against the gradient sign.
        assert!((a[0] - (1.0 * (1.0 - 0.001) - 0.1)).abs() < 1e-6);
        assert!((a[1] - (2.0 * (1.0 - 0.001) + 0.1)).abs() < 1e-6);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let mut a = vec![1.0, -2.0];
        let mut grads = GradBuffer::new(&[2]);
        grads.slot_mut(0).copy_from_slice(&[3.0, 4.0]);
        let mut opt = AdamW::new(AdamWConfig::new(0.0, 0.1), 1);
        opt.step(&mut [&mut a], &grads);
        assert_eq!(a, [1.0, -2.0]);
    }

    #[test]
    fn clear_resets_touch_flags() {
        let mut grads = GradBuffer::new(&[1, 1]);
        grads.slot_mut(1)[0] = 2.0;
        grads.scale(0.5);
        assert_eq!(grads.slot(1), Some(&[1.0][..]));
        grads.clear();
        assert!(!grads.any_touched());
        assert_eq!(grads.slot(1), None);
    }
}
