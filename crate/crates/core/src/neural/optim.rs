//! Momentum SGD with L2 weight cost and a delayed linear learning-rate decay.

/// Learning rate held at `initial` for the first `delay` fraction of
/// `total` iterations, then decayed linearly so that it would reach zero at
/// iteration `total`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Schedule {
    pub initial: f64,
    pub delay: f64,
    pub total: usize,
}

impl Schedule {
    pub fn rate(&self, t: usize) -> f64 {
        let start = (self.delay * self.total as f64).floor() as usize;
        if t < start || self.total <= start {
            self.initial
        } else {
            self.initial * (self.total - t.min(self.total)) as f64 / (self.total - start) as f64
        }
    }
}

/// A mutable parameter tensor and whether the L2 cost applies to it.
pub(crate) struct Param<'a> {
    pub values: &'a mut [f64],
    pub decay: bool,
}

pub(crate) struct Momentum {
    velocity: Vec<Vec<f64>>,
    momentum: f64,
    l2: f64,
}

impl Momentum {
    pub fn new(sizes: &[usize], momentum: f64, l2: f64) -> Momentum {
        Momentum { velocity: sizes.iter().map(|&n| vec![0.0; n]).collect(), momentum, l2 }
    }

    /// `v ← μv − η(g + λw)`, `w ← w + v`.
    pub fn step(&mut self, params: Vec<Param<'_>>, grads: &[&[f64]], rate: f64) {
        debug_assert_eq!(params.len(), grads.len());
        for ((p, g), v) in params.into_iter().zip(grads).zip(&mut self.velocity) {
            let l2 = if p.decay { self.l2 } else { 0.0 };
            for ((w, &g), v) in p.values.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
                *v = self.momentum * *v - rate * (g + l2 * *w);
                *w += *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_shape() {
        let s = Schedule { initial: 1.0, delay: 0.5, total: 10 };
        assert_eq!(s.rate(0), 1.0);
        assert_eq!(s.rate(4), 1.0);
        assert_eq!(s.rate(5), 1.0);
        assert_eq!(s.rate(6), 0.8);
        assert_eq!(s.rate(9), 0.2);
        let flat = Schedule { initial: 0.3, delay: 1.0, total: 10 };
        assert!((0..10).all(|t| flat.rate(t) == 0.3));
        let from_start = Schedule { initial: 1.0, delay: 0.0, total: 4 };
        assert_eq!((0..4).map(|t| from_start.rate(t)).collect::<Vec<_>>(), vec![1.0, 0.75, 0.5, 0.25]);
    }

    #[test]
    fn momentum_accumulates() {
        let mut w = vec![1.0];
        let mut opt = Momentum::new(&[1], 0.5, 0.0);
        opt.step(vec![Param { values: &mut w, decay: true }], &[&[1.0]], 0.1);
        assert!((w[0] - 0.9).abs() < 1e-15);
        opt.step(vec![Param { values: &mut w, decay: true }], &[&[1.0]], 0.1);
        assert!((w[0] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn l2_only_on_weights() {
        let (mut w, mut b) = (vec![2.0], vec![2.0]);
        let mut opt = Momentum::new(&[1, 1], 0.0, 0.5);
        opt.step(vec![Param { values: &mut w, decay: true }, Param { values: &mut b, decay: false }], &[&[0.0], &[0.0]], 0.1);
        assert_eq!((w[0], b[0]), (1.9, 2.0));
    }
}
