//! Seeded random streams and small geometric samplers.

use rand::{Rng, SeedableRng};
use serde::Serialize;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A Monte-Carlo or quadrature value with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0 }
    }

    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            if self.stderr == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.stderr / self.value.abs()
        }
    }
}

/// Independent stream for task `index` under `seed`.
pub fn task_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Two-level task index, for nested loops that each need their own stream.
pub fn task_index(outer: u64, inner: u64) -> u64 {
    outer.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ inner
}

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    let mut v = if k % 2 == 0 { 1.0 } else { 2.0 };
    let mut j = if k % 2 == 0 { 2 } else { 3 };
    while j <= k {
        v *= 2.0 * std::f64::consts::PI / j as f64;
        j += 2;
    }
    v
}

pub fn ball_volume(k: usize, radius: f64) -> f64 {
    unit_ball_volume(k) * radius.powi(k as i32)
}

/// Fills `out` with a uniform point of the open ball of `radius` centred at 0.
pub fn fill_in_ball<R: Rng + ?Sized>(rng: &mut R, radius: f64, out: &mut [f64]) {
    let k = out.len();
    if k == 0 {
        return;
    }
    if k == 1 {
        out[0] = radius * (2.0 * rng.random::<f64>() - 1.0);
        return;
    }
    let mut norm2 = 0.0;
    while norm2 == 0.0 {
        norm2 = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            norm2 += *x * *x;
        }
    }
    let scale = radius * rng.random::<f64>().powf(1.0 / k as f64) / norm2.sqrt();
    for x in out.iter_mut() {
        *x *= scale;
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
