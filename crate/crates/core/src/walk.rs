//! Walker state and the single-step kernel of the nonlinear walk.
//!
//! One step maps the state through three norm-preserving factors, in order:
//! the Kerr-like phase `exp(i 2πχ |ψ_{n,s}|²)` applied to each coin component
//! separately, the coin `C(θ) = cos θ Z + sin θ X` applied per site, and the
//! conditional shift that moves `|R⟩` one site right and `|L⟩` one site left.
//!
//! The state keeps track of the window of sites that can hold nonzero
//! amplitude. The window grows by at most one site per side per step, so a
//! step costs time proportional to the populated support rather than to the
//! allocated lattice.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::ops::RangeInclusive;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Extra sites allocated on each side beyond the light cone.
pub const LATTICE_MARGIN: usize = 2;

/// Number of sites needed so that `steps` steps from the central site never
/// touch the open boundary.
pub fn lattice_size_for(steps: u64) -> usize {
    2 * steps as usize + 2 * LATTICE_MARGIN + 1
}

/// Coin angle in radians. Any finite value is allowed; no wrapping is done.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct CoinAngle(pub f64);

impl CoinAngle {
    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn gate(self) -> CoinGate {
        CoinGate::new(self.0)
    }
}

/// Strength of the intensity-dependent phase. Zero gives the linear walk.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct NonlinearStrength(pub f64);

impl NonlinearStrength {
    pub fn new(chi: f64) -> Result<Self> {
        if chi.is_finite() && chi >= 0.0 {
            Ok(Self(chi))
        } else {
            Err(Error::Config(format!("chi must be finite and >= 0, got {chi}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_linear(self) -> bool {
        self.0 == 0.0
    }
}

/// The real symmetric coin matrix `[[cos θ, sin θ], [sin θ, -cos θ]]`, stored
/// as its two entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoinGate {
    pub cos: f64,
    pub sin: f64,
}

impl CoinGate {
    pub fn new(theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        Self { cos, sin }
    }

    #[inline(always)]
    pub fn apply(self, right: C64, left: C64) -> (C64, C64) {
        (
            right * self.cos + left * self.sin,
            right * self.sin - left * self.cos,
        )
    }
}

/// Coin gates for one step: the same gate everywhere, or one per site.
#[derive(Clone, Copy, Debug)]
pub enum Coin<'a> {
    Uniform(CoinGate),
    PerSite(&'a [CoinGate]),
}

impl Coin<'_> {
    pub fn uniform(theta: f64) -> Coin<'static> {
        Coin::Uniform(CoinGate::new(theta))
    }

    #[inline(always)]
    fn at(&self, n: usize) -> CoinGate {
        match self {
            Coin::Uniform(g) => *g,
            Coin::PerSite(gates) => gates[n],
        }
    }

    fn check_covers(&self, window: &RangeInclusive<usize>) -> Result<()> {
        if let Coin::PerSite(gates) = self {
            if *window.end() >= gates.len() {
                return Err(Error::OutOfRange {
                    what: "per-site coin field",
                    index: *window.end(),
                    len: gates.len(),
                });
            }
        }
        Ok(())
    }
}

#[inline(always)]
fn kerr(amp: C64, two_pi_chi: f64) -> C64 {
    let p = amp.norm_sqr();
    // Half the window is exactly zero at any step (sublattice parity).
    if p == 0.0 {
        return amp;
    }
    let (s, c) = (two_pi_chi * p).sin_cos();
    amp * C64::new(c, s)
}

/// Spinor amplitudes `(a_n, b_n)` of the walker on a finite open lattice.
///
/// `right[n]` is the `|R⟩` amplitude `a_n`, `left[n]` the `|L⟩` amplitude `b_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkerState {
    right: Vec<C64>,
    left: Vec<C64>,
    origin: usize,
    t: u64,
    // Inclusive bounds of the sites that may carry nonzero amplitude.
    lo: usize,
    hi: usize,
}

impl WalkerState {
    /// The symmetric initial state `(|R⟩ + i|L⟩)/√2 ⊗ |n_origin⟩`.
    pub fn new(num_sites: usize, origin: usize) -> Result<Self> {
        if origin >= num_sites {
            return Err(Error::Config(format!(
                "origin {origin} is outside a lattice of {num_sites} sites"
            )));
        }
        let mut right = vec![C64::new(0.0, 0.0); num_sites];
        let mut left = right.clone();
        right[origin] = C64::new(FRAC_1_SQRT_2, 0.0);
        left[origin] = C64::new(0.0, FRAC_1_SQRT_2);
        Ok(Self {
            right,
            left,
            origin,
            t: 0,
            lo: origin,
            hi: origin,
        })
    }

    /// Initial state on a lattice sized for `steps` steps, walker at the centre.
    pub fn centered(steps: u64) -> Self {
        let num_sites = lattice_size_for(steps);
        Self::new(num_sites, num_sites / 2).expect("centre is always in range")
    }

    /// Builds a state from explicit amplitudes. The amplitudes are used as
    /// given; callers that need a normalized state must normalize them.
    pub fn from_amplitudes(right: Vec<C64>, left: Vec<C64>, origin: usize) -> Result<Self> {
        if right.len() != left.len() || right.is_empty() {
            return Err(Error::Config(format!(
                "amplitude arrays must be nonempty and equal in length ({} vs {})",
                right.len(),
                left.len()
            )));
        }
        if origin >= right.len() {
            return Err(Error::Config(format!(
                "origin {origin} is outside a lattice of {} sites",
                right.len()
            )));
        }
        let zero = C64::new(0.0, 0.0);
        let occupied = |n: &usize| right[*n] != zero || left[*n] != zero;
        let lo = (0..right.len()).find(occupied).unwrap_or(origin);
        let hi = (0..right.len()).rev().find(occupied).unwrap_or(origin);
        Ok(Self {
            right,
            left,
            origin,
            t: 0,
            lo: lo.min(origin),
            hi: hi.max(origin),
        })
    }

    pub fn num_sites(&self) -> usize {
        self.right.len()
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Number of steps taken so far.
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn right(&self) -> &[C64] {
        &self.right
    }

    pub fn left(&self) -> &[C64] {
        &self.left
    }

    /// Sites that may hold nonzero amplitude. Everything outside is exactly zero.
    pub fn window(&self) -> RangeInclusive<usize> {
        self.lo..=self.hi
    }

    pub fn norm_sqr(&self) -> f64 {
        self.window()
            .map(|n| self.right[n].norm_sqr() + self.left[n].norm_sqr())
            .sum()
    }

    /// Multiplies each component by `exp(i 2πχ |component|²)`.
    pub fn apply_kerr_phase(&mut self, chi: NonlinearStrength) {
        if chi.is_linear() {
            return;
        }
        let g = TAU * chi.value();
        for n in self.window() {
            self.right[n] = kerr(self.right[n], g);
            self.left[n] = kerr(self.left[n], g);
        }
    }

    /// Applies the coin on every populated site.
    pub fn apply_coin(&mut self, coin: Coin<'_>) -> Result<()> {
        coin.check_covers(&self.window())?;
        for n in self.window() {
            let (r, l) = coin.at(n).apply(self.right[n], self.left[n]);
            self.right[n] = r;
            self.left[n] = l;
        }
        Ok(())
    }

    /// Moves `|R⟩` amplitudes one site right and `|L⟩` amplitudes one site left.
    ///
    /// Fails with [`Error::BoundaryReached`] if a nonzero amplitude sits on the
    /// edge it would be pushed past; the state is left untouched in that case.
    pub fn apply_shift(&mut self) -> Result<()> {
        let last = self.num_sites() - 1;
        let zero = C64::new(0.0, 0.0);
        if self.hi == last && self.right[last] != zero {
            return Err(self.boundary(last));
        }
        if self.lo == 0 && self.left[0] != zero {
            return Err(self.boundary(0));
        }
        // Right movers: sites lo..=hi_r go to lo+1..=hi_r+1.
        let hi_r = self.hi.min(last.saturating_sub(1));
        if self.lo <= hi_r && hi_r < last {
            self.right.copy_within(self.lo..=hi_r, self.lo + 1);
        }
        self.right[self.lo] = zero;
        // Left movers: sites lo_l..=hi go to lo_l-1..=hi-1.
        let lo_l = self.lo.max(1);
        if lo_l <= self.hi {
            self.left.copy_within(lo_l..=self.hi, lo_l - 1);
        }
        self.left[self.hi] = zero;

        self.lo = lo_l - 1;
        self.hi = (hi_r + 1).min(last);
        Ok(())
    }

    /// One full step: Kerr phase, coin, then shift; advances `t` by one.
    ///
    /// Equivalent to calling [`apply_kerr_phase`](Self::apply_kerr_phase),
    /// [`apply_coin`](Self::apply_coin) and [`apply_shift`](Self::apply_shift)
    /// in order, with the first two fused into a single pass.
    pub fn step(&mut self, chi: NonlinearStrength, coin: Coin<'_>) -> Result<()> {
        coin.check_covers(&self.window())?;
        let g = TAU * chi.value();
        let (lo, hi) = (self.lo, self.hi);
        let right = &mut self.right[lo..=hi];
        let left = &mut self.left[lo..=hi];
        if chi.is_linear() {
            for (k, (r, l)) in right.iter_mut().zip(left.iter_mut()).enumerate() {
                (*r, *l) = coin.at(lo + k).apply(*r, *l);
            }
        } else {
            for (k, (r, l)) in right.iter_mut().zip(left.iter_mut()).enumerate() {
                (*r, *l) = coin.at(lo + k).apply(kerr(*r, g), kerr(*l, g));
            }
        }
        self.apply_shift()?;
        self.t += 1;
        Ok(())
    }

    fn boundary(&self, site: usize) -> Error {
        Error::BoundaryReached {
            step: self.t,
            site,
            num_sites: self.num_sites(),
        }
    }
}
