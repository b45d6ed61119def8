use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::math::{sigmoid, softplus};
use crate::neural::Dense;
use crate::rng;

/// Largest `n_visible + n_hidden` that [`exact_partition`] will enumerate.
pub const MAX_ENUMERATION: usize = 20;

/// Binary RBM with energy `−bᵀh − cᵀv − hᵀWv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rbm {
    /// hidden × visible.
    pub w: Array2<f64>,
    /// Hidden offsets.
    pub b: Array1<f64>,
    /// Visible offsets.
    pub c: Array1<f64>,
}

impl Rbm {
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Rbm {
        Rbm { w: Array2::zeros((n_hidden, n_visible)), b: Array1::zeros(n_hidden), c: Array1::zeros(n_visible) }
    }

    /// Weights `uniform(±1/√n_visible)`, zero offsets.
    pub fn init(n_visible: usize, n_hidden: usize, rng: &mut rng::Rng) -> Rbm {
        let d = Dense::init(n_visible, n_hidden, rng);
        Rbm { w: d.w, b: d.b, c: Array1::zeros(n_visible) }
    }

    pub fn n_visible(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_hidden(&self) -> usize {
        self.w.nrows()
    }

    /// `P(h = 1 | v)` for each row of `v`.
    pub fn hidden_probs(&self, v: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim(self.n_visible(), v.ncols())?;
        let mut p = v.dot(&self.w.t()) + &self.b;
        p.mapv_inplace(sigmoid);
        Ok(p)
    }

    /// `P(v = 1 | h)` for each row of `h`.
    pub fn visible_probs(&self, h: ArrayView2<f64>) -> Result<Array2<f64>> {
        check_dim(self.n_hidden(), h.ncols())?;
        let mut p = h.dot(&self.w) + &self.c;
        p.mapv_inplace(sigmoid);
        Ok(p)
    }
}

pub fn energy(rbm: &Rbm, v: ArrayView1<f64>, h: ArrayView1<f64>) -> Result<f64> {
    check_dim(rbm.n_visible(), v.len())?;
    check_dim(rbm.n_hidden(), h.len())?;
    Ok(-rbm.b.dot(&h) - rbm.c.dot(&v) - h.dot(&rbm.w.dot(&v)))
}

/// `F(v) = −cᵀv − Σᵢ softplus(bᵢ + Wᵢ·v)`, so that `P(v) = e^{−F(v)} / Z`.
pub fn free_energy(rbm: &Rbm, v: ArrayView1<f64>) -> Result<f64> {
    check_dim(rbm.n_visible(), v.len())?;
    let act = rbm.w.dot(&v) + &rbm.b;
    Ok(-rbm.c.dot(&v) - act.iter().map(|&a| softplus(a)).sum::<f64>())
}

fn check_enumerable(rbm: &Rbm) -> Result<()> {
    let size = rbm.n_visible() + rbm.n_hidden();
    if size > MAX_ENUMERATION {
        return Err(Error::EnumerationTooLarge(size, MAX_ENUMERATION));
    }
    Ok(())
}

/// Binary vector of the low `n` bits of `state`.
pub fn bits(state: u32, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |i| f64::from((state >> i) & 1))
}

/// `−Energy(v, h)` for every joint state.
fn neg_energies(rbm: &Rbm) -> Result<Vec<f64>> {
    check_enumerable(rbm)?;
    let (nv, nh) = (rbm.n_visible(), rbm.n_hidden());
    let hs: Vec<Array1<f64>> = (0..1u32 << nh).map(|s| bits(s, nh)).collect();
    let mut terms = Vec::with_capacity(1 << (nv + nh));
    for sv in 0..1u32 << nv {
        let v = bits(sv, nv);
        for h in &hs {
            terms.push(-energy(rbm, v.view(), h.view())?);
        }
    }
    Ok(terms)
}

/// `Z = Σ_{v,h} e^{−Energy(v,h)}` by visiting every joint state.
pub fn exact_partition(rbm: &Rbm) -> Result<f64> {
    Ok(neg_energies(rbm)?.into_iter().map(f64::exp).sum())
}

/// `ln Z` by enumeration, accumulated with log-sum-exp.
pub fn log_partition(rbm: &Rbm) -> Result<f64> {
    let terms = neg_energies(rbm)?;
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
}

/// Mean exact log-probability of the binary rows of `data`.
pub fn log_likelihood(rbm: &Rbm, data: ArrayView2<f64>) -> Result<f64> {
    let log_z = log_partition(rbm)?;
    let mut total = 0.0;
    for v in data.rows() {
        total += -free_energy(rbm, v)? - log_z;
    }
    Ok(total / data.nrows().max(1) as f64)
}

fn bernoulli(p: &Array2<f64>, rng: &mut rng::Rng) -> Array2<f64> {
    p.mapv(|p| f64::from(u8::from(rng.random::<f64>() < p)))
}

pub(crate) fn sample_h_batch(rbm: &Rbm, v: ArrayView2<f64>, rng: &mut rng::Rng) -> Result<(Array2<f64>, Array2<f64>)> {
    let p = rbm.hidden_probs(v)?;
    let s = bernoulli(&p, rng);
    Ok((p, s))
}

pub(crate) fn sample_v_batch(rbm: &Rbm, h: ArrayView2<f64>, rng: &mut rng::Rng) -> Result<(Array2<f64>, Array2<f64>)> {
    let p = rbm.visible_probs(h)?;
    let s = bernoulli(&p, rng);
    Ok((p, s))
}

/// `hᵢ ~ Bernoulli(sigmoid(bᵢ + Wᵢ·v))`, independently.
pub fn sample_h_given_v(rbm: &Rbm, v: ArrayView1<f64>, seed: u64) -> Result<Array1<f64>> {
    let (_, s) = sample_h_batch(rbm, v.insert_axis(Axis(0)), &mut rng::seeded(seed))?;
    Ok(s.row(0).to_owned())
}

/// `vⱼ ~ Bernoulli(sigmoid(cⱼ + Wᵀⱼ·h))`, independently.
pub fn sample_v_given_h(rbm: &Rbm, h: ArrayView1<f64>, seed: u64) -> Result<Array1<f64>> {
    let (_, s) = sample_v_batch(rbm, h.insert_axis(Axis(0)), &mut rng::seeded(seed))?;
    Ok(s.row(0).to_owned())
}

/// Mean reconstruction cross-entropy `v → P(h|v) → P(v|h)` per row.
pub fn reconstruction_cross_entropy(rbm: &Rbm, v: ArrayView2<f64>) -> Result<f64> {
    let pv = rbm.visible_probs(rbm.hidden_probs(v)?.view())?;
    let tiny = f64::MIN_POSITIVE;
    let total: f64 =
        v.iter().zip(pv.iter()).map(|(&t, &p)| -(t * p.max(tiny).ln() + (1.0 - t) * (1.0 - p).max(tiny).ln())).sum();
    Ok(total / v.nrows().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    pub(crate) fn random_rbm(nv: usize, nh: usize, seed: u64) -> Rbm {
        let mut r = rng::seeded(seed);
        Rbm {
            w: Array2::from_shape_simple_fn((nh, nv), || r.random_range(-1.0..1.0)),
            b: Array1::from_shape_simple_fn(nh, || r.random_range(-1.0..1.0)),
            c: Array1::from_shape_simple_fn(nv, || r.random_range(-1.0..1.0)),
        }
    }

    fn energy_loops(rbm: &Rbm, v: &Array1<f64>, h: &Array1<f64>) -> f64 {
        let mut e = 0.0;
        for i in 0..h.len() {
            e -= rbm.b[i] * h[i];
            for j in 0..v.len() {
                e -= h[i] * rbm.w[[i, j]] * v[j];
            }
        }
        for j in 0..v.len() {
            e -= rbm.c[j] * v[j];
        }
        e
    }

    #[test]
    fn energy_cases() {
        let zero = Rbm::zeros(3, 2);
        assert_eq!(energy(&zero, array![1.0, 0.0, 1.0].view(), array![1.0, 1.0].view()).unwrap(), 0.0);
        let one = Rbm { w: array![[2.0]], b: array![1.0], c: array![-1.0] };
        assert_eq!(energy(&one, array![1.0].view(), array![1.0].view()).unwrap(), -2.0);
        assert!(energy(&one, array![1.0, 0.0].view(), array![1.0].view()).is_err());
        let rbm = random_rbm(5, 4, 3);
        for s in 0..512u32 {
            let (v, h) = (bits(s, 5), bits(s >> 5, 4));
            assert!((energy(&rbm, v.view(), h.view()).unwrap() - energy_loops(&rbm, &v, &h)).abs() < 1e-12);
        }
    }

    #[test]
    fn free_energy_cases() {
        let zero = Rbm::zeros(3, 4);
        let f = free_energy(&zero, array![1.0, 0.0, 1.0].view()).unwrap();
        assert!((f + 4.0 * 2f64.ln()).abs() < 1e-15);
        let hot = Rbm { w: array![[0.0]], b: array![700.0], c: array![0.0] };
        assert!(free_energy(&hot, array![1.0].view()).unwrap().is_finite());
    }

    #[test]
    fn marginal_by_enumeration() {
        let rbm = random_rbm(4, 3, 5);
        let z = exact_partition(&rbm).unwrap();
        let mut total = 0.0;
        for sv in 0..16u32 {
            let v = bits(sv, 4);
            let from_f = (-free_energy(&rbm, v.view()).unwrap()).exp() / z;
            let brute: f64 = (0..8u32).map(|sh| (-energy(&rbm, v.view(), bits(sh, 3).view()).unwrap()).exp()).sum::<f64>() / z;
            assert!((from_f - brute).abs() < 1e-10);
            total += from_f;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partition_cases() {
        assert_eq!(exact_partition(&Rbm::zeros(2, 2)).unwrap(), 16.0);
        assert!(matches!(exact_partition(&Rbm::zeros(12, 9)), Err(Error::EnumerationTooLarge(21, 20))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn partition_equals_free_energy_sum(nv in 1usize..8, nh in 1usize..7, seed: u64) {
            let rbm = random_rbm(nv, nh, seed);
            let z = exact_partition(&rbm).unwrap();
            let via_f: f64 = (0..1u32 << nv).map(|s| (-free_energy(&rbm, bits(s, nv).view()).unwrap()).exp()).sum();
            prop_assert!((z - via_f).abs() <= 1e-10 * z.max(1.0));
            let mut joint = 0.0;
            for sv in 0..1u32 << nv {
                for sh in 0..1u32 << nh {
                    let p = (-energy(&rbm, bits(sv, nv).view(), bits(sh, nh).view()).unwrap()).exp() / z;
                    prop_assert!(p >= 0.0);
                    joint += p;
                }
            }
            prop_assert!((joint - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling() {
        let zero = Rbm::zeros(3, 4);
        let v = array![1.0, 0.0, 1.0];
        let mut r = rng::seeded(1);
        let batch = Array2::from_shape_fn((10_000, 3), |(_, j)| v[j]);
        let (_, h) = sample_h_batch(&zero, batch.view(), &mut r).unwrap();
        for m in h.mean_axis(Axis(0)).unwrap() {
            assert!((m - 0.5).abs() < 0.02, "{m}");
        }
        let hot = Rbm { w: Array2::zeros((2, 3)), b: array![1e6, 1e6], c: Array1::zeros(3) };
        assert_eq!(sample_h_given_v(&hot, v.view(), 4).unwrap(), array![1.0, 1.0]);
        let rbm = random_rbm(3, 4, 2);
        assert_eq!(sample_h_given_v(&rbm, v.view(), 9).unwrap(), sample_h_given_v(&rbm, v.view(), 9).unwrap());
        let h = array![1.0, 0.0, 0.0, 1.0];
        assert_eq!(sample_v_given_h(&rbm, h.view(), 9).unwrap(), sample_v_given_h(&rbm, h.view(), 9).unwrap());
    }
}
