//! Seeded sampling of exact rational parameter points.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::ParameterPoint;
use crate::models::CompiledModel;
use crate::Rational;

/// Sampled coordinates are multiples of `2^-DEFAULT_DENOMINATOR_BITS`.
pub const DEFAULT_DENOMINATOR_BITS: u32 = 16;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
    denom: u64,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self::with_denominator_bits(seed, DEFAULT_DENOMINATOR_BITS)
    }

    pub fn with_denominator_bits(seed: u64, bits: u32) -> Self {
        assert!((2..=62).contains(&bits));
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            denom: 1 << bits,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn frac(&self, k: u64) -> Rational {
        Rational::new(BigInt::from(k), BigInt::from(self.denom))
    }

    /// Uniform on the grid in `[0, 1]`.
    pub fn unit(&mut self) -> Rational {
        let k = self.rng.gen_range(0..=self.denom);
        self.frac(k)
    }

    /// Uniform on the grid in `[lo, hi]`, or in the open interval.
    pub fn between(&mut self, lo: &Rational, hi: &Rational, open: bool) -> Rational {
        let k = if open && self.denom > 2 {
            self.rng.gen_range(1..self.denom)
        } else {
            self.rng.gen_range(0..=self.denom)
        };
        lo + (hi - lo) * self.frac(k)
    }

    /// A point of the `(k-1)`-simplex. Interior points have distinct cut
    /// points, so every coordinate is positive; otherwise repeats and,
    /// occasionally, a vertex are produced.
    pub fn simplex(&mut self, k: usize, interior: bool) -> Vec<Rational> {
        if k == 0 {
            return Vec::new();
        }
        if !interior && self.rng.gen_ratio(1, 8) {
            let hit = self.rng.gen_range(0..k);
            return (0..k)
                .map(|i| if i == hit { Rational::one() } else { Rational::zero() })
                .collect();
        }
        let mut cuts: Vec<u64> = if interior {
            assert!((k as u64) < self.denom, "simplex dimension exceeds grid");
            let mut pool: Vec<u64> = Vec::with_capacity(k - 1);
            while pool.len() < k - 1 {
                let c = self.rng.gen_range(1..self.denom);
                if !pool.contains(&c) {
                    pool.push(c);
                }
            }
            pool
        } else {
            (0..k - 1).map(|_| self.rng.gen_range(0..=self.denom)).collect()
        };
        cuts.sort_unstable();
        let mut prev = 0;
        let mut out = Vec::with_capacity(k);
        for c in cuts.into_iter().chain(std::iter::once(self.denom)) {
            out.push(self.frac(c - prev));
            prev = c;
        }
        out
    }

    /// A point of the saturated parameter space: every live block on its
    /// simplex and every auxiliary within bounds. Extra equalities of the
    /// model are not enforced here.
    pub fn point(&mut self, model: &CompiledModel, interior: bool) -> ParameterPoint {
        let mut point = ParameterPoint::default();
        for b in &model.blocks {
            let active = model.active_vars(b);
            for (v, x) in active.iter().zip(self.simplex(active.len(), interior)) {
                point.set(*v, x);
            }
        }
        for a in &model.aux {
            let x = self.between(&a.lower, &a.upper, interior);
            point.set(a.var, x);
        }
        point
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }
}
