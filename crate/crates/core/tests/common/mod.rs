//! Reference evolutions written independently of the engine.
#![allow(dead_code)]

use num_complex::Complex64 as C64;

/// Row-major `2N x 2N` complex matrix. Basis index `2n` is `|n, R⟩` and
/// `2n + 1` is `|n, L⟩`.
pub struct Dense {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl Dense {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, C64::new(1.0, 0.0));
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.dim + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.dim + c] = v;
    }

    pub fn mul(&self, other: &Dense) -> Dense {
        let n = self.dim;
        let mut out = Dense::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.at(i, j) * v[j]).sum())
            .collect()
    }

    /// Largest entry of `|U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..n {
                    s += self.at(k, i).conj() * self.at(k, j);
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }
}

/// Block-diagonal coin `[[cos, sin], [sin, -cos]]` with one angle per site.
pub fn coin_matrix(theta: &[f64]) -> Dense {
    let mut m = Dense::zeros(2 * theta.len());
    for (n, &th) in theta.iter().enumerate() {
        let (s, c) = th.sin_cos();
        m.set(2 * n, 2 * n, C64::new(c, 0.0));
        m.set(2 * n, 2 * n + 1, C64::new(s, 0.0));
        m.set(2 * n + 1, 2 * n, C64::new(s, 0.0));
        m.set(2 * n + 1, 2 * n + 1, C64::new(-c, 0.0));
    }
    m
}

/// Open-boundary conditional shift: `|n, R⟩ → |n+1, R⟩`, `|n, L⟩ → |n-1, L⟩`.
/// Amplitude leaving the lattice is dropped, so tests must keep it inside.
pub fn shift_matrix(num_sites: usize) -> Dense {
    let mut m = Dense::zeros(2 * num_sites);
    for n in 0..num_sites {
        if n + 1 < num_sites {
            m.set(2 * (n + 1), 2 * n, C64::new(1.0, 0.0));
        }
        if n > 0 {
            m.set(2 * (n - 1) + 1, 2 * n + 1, C64::new(1.0, 0.0));
        }
    }
    m
}

/// One linear step, shift after coin.
pub fn step_matrix(theta: &[f64]) -> Dense {
    shift_matrix(theta.len()).mul(&coin_matrix(theta))
}

/// `(|R⟩ + i|L⟩)/√2` at `origin`, interleaved.
pub fn initial_vector(num_sites: usize, origin: usize) -> Vec<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![C64::new(0.0, 0.0); 2 * num_sites];
    v[2 * origin] = C64::new(h, 0.0);
    v[2 * origin + 1] = C64::new(0.0, h);
    v
}

/// Straightforward nonlinear walk on interleaved amplitudes: phase each
/// component by `2πχ|ψ|²`, mix with the coin, then shift into a fresh buffer.
pub fn naive_nonlinear_step(v: &[C64], theta: &[f64], chi: f64) -> Vec<C64> {
    let n_sites = theta.len();
    let mut mixed = vec![C64::new(0.0, 0.0); 2 * n_sites];
    for n in 0..n_sites {
        let phase = |z: C64| z * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * chi * z.norm_sqr());
        let r = phase(v[2 * n]);
        let l = phase(v[2 * n + 1]);
        let (s, c) = theta[n].sin_cos();
        mixed[2 * n] = r * c + l * s;
        mixed[2 * n + 1] = r * s - l * c;
    }
    let mut out = vec![C64::new(0.0, 0.0); 2 * n_sites];
    for n in 0..n_sites {
        if n + 1 < n_sites {
            out[2 * (n + 1)] = mixed[2 * n];
        }
        if n > 0 {
            out[2 * (n - 1) + 1] = mixed[2 * n + 1];
        }
    }
    out
}

pub fn site_probabilities(v: &[C64]) -> Vec<f64> {
    v.chunks(2).map(|p| p[0].norm_sqr() + p[1].norm_sqr()).collect()
}

/// Largest absolute difference between engine amplitudes and an interleaved
/// reference vector.
pub fn max_amplitude_error(right: &[C64], left: &[C64], reference: &[C64]) -> f64 {
    right
        .iter()
        .zip(left)
        .enumerate()
        .map(|(n, (r, l))| (r - reference[2 * n]).norm().max((l - reference[2 * n + 1]).norm()))
        .fold(0.0, f64::max)
}

/// Small deterministic generator for test fields (SplitMix64).
pub struct TestRng(pub u64);

impl TestRng {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}
