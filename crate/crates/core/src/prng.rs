//! Linear congruential generator with logarithmic-time jump-ahead.
//!
//! The whole simulation draws from one shared sequence. Workers never share a
//! generator object; each holds a cheap copy that has been fast-forwarded to
//! the global draw index it needs.

/// `minstd_rand` multiplier.
pub const MINSTD_MULTIPLIER: u64 = 48_271;
/// `minstd_rand0` multiplier, accepted as an alternative configuration.
pub const MINSTD0_MULTIPLIER: u64 = 16_807;
/// Mersenne prime 2^31 - 1.
pub const MINSTD_MODULUS: u64 = (1 << 31) - 1;

/// Largest modulus accepted by [`LcgState::new`]. Keeping `m <= 2^32` means
/// `a * s + c` always fits in a `u64`.
pub const MAX_MODULUS: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LcgError {
    #[error("modulus {0} outside [2, 2^32]")]
    Modulus(u64),
    #[error("multiplier {a} must satisfy 0 < a < m = {m}")]
    Multiplier { a: u64, m: u64 },
    #[error("increment {c} must satisfy 0 <= c < m = {m}")]
    Increment { c: u64, m: u64 },
}

/// Generator constants plus current state.
///
/// `draws` is the global index of the next draw, i.e. how far along the shared
/// sequence this copy has been advanced (sequential draws and jumps both
/// count).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LcgState {
    a: u64,
    c: u64,
    m: u64,
    s: u64,
    draws: u64,
}

/// Affine map `s -> (A s + C) mod m` equivalent to `span` sequential draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JumpCoefficients {
    pub mul: u64,
    pub add: u64,
    pub span: u64,
}

#[inline(always)]
fn mul_add_mod(x: u64, y: u64, z: u64, m: u64) -> u64 {
    // x, y, z < m <= 2^32, so x * y + z < 2^64.
    let t = x * y + z;
    if m == MINSTD_MODULUS {
        // t < 2^62; two folds bring it below 2m.
        let r = (t & MINSTD_MODULUS) + (t >> 31);
        let r = (r & MINSTD_MODULUS) + (r >> 31);
        if r >= MINSTD_MODULUS {
            r - MINSTD_MODULUS
        } else {
            r
        }
    } else {
        t % m
    }
}

impl LcgState {
    /// Generator with arbitrary constants. The state is reduced mod `m`; a
    /// multiplicative generator (`c == 0`) never starts at zero.
    pub fn new(a: u64, c: u64, m: u64, seed: u64) -> Result<Self, LcgError> {
        if !(2..=MAX_MODULUS).contains(&m) {
            return Err(LcgError::Modulus(m));
        }
        if a == 0 || a >= m {
            return Err(LcgError::Multiplier { a, m });
        }
        if c >= m {
            return Err(LcgError::Increment { c, m });
        }
        let mut s = seed % m;
        if c == 0 && s == 0 {
            s = 1;
        }
        Ok(LcgState {
            a,
            c,
            m,
            s,
            draws: 0,
        })
    }

    /// `minstd_rand` seeded as `seed mod m`, with zero mapped to 1.
    pub fn seeded(seed: u64) -> Self {
        Self::with_multiplier(MINSTD_MULTIPLIER, seed)
    }

    /// Multiplicative generator modulo 2^31 - 1 with a chosen multiplier.
    ///
    /// Panics if the multiplier is not in `(0, 2^31 - 1)`.
    pub fn with_multiplier(a: u64, seed: u64) -> Self {
        Self::new(a, 0, MINSTD_MODULUS, seed).expect("multiplier out of range")
    }

    pub fn multiplier(&self) -> u64 {
        self.a
    }

    pub fn increment(&self) -> u64 {
        self.c
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }

    pub fn state(&self) -> u64 {
        self.s
    }

    /// Global index of the next draw.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    /// Advances one draw and returns the new state as the raw draw.
    #[inline]
    pub fn next_raw(&mut self) -> u64 {
        self.s = mul_add_mod(self.a, self.s, self.c, self.m);
        self.draws += 1;
        self.s
    }

    /// Advances one draw and maps it to `draw / m` in binary64.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        let raw = self.next_raw();
        raw as f64 / self.m as f64
    }

    /// Coefficients of the jump over `k` draws, by binary doubling.
    pub fn jump_coefficients(&self, k: u64) -> JumpCoefficients {
        let m = self.m;
        // Accumulated jump, starts as identity.
        let (mut acc_mul, mut acc_add) = (1 % m, 0);
        // Jump of 2^bit draws.
        let (mut pow_mul, mut pow_add) = (self.a, self.c);
        let mut rest = k;
        while rest > 0 {
            if rest & 1 == 1 {
                // apply acc first, then pow
                acc_add = mul_add_mod(pow_mul, acc_add, pow_add, m);
                acc_mul = mul_add_mod(pow_mul, acc_mul, 0, m);
            }
            pow_add = mul_add_mod(pow_mul, pow_add, pow_add, m);
            pow_mul = mul_add_mod(pow_mul, pow_mul, 0, m);
            rest >>= 1;
        }
        JumpCoefficients {
            mul: acc_mul,
            add: acc_add,
            span: k,
        }
    }

    /// Applies precomputed coefficients.
    #[inline]
    pub fn apply(&mut self, jump: &JumpCoefficients) {
        self.s = mul_add_mod(jump.mul, self.s, jump.add, self.m);
        self.draws += jump.span;
    }

    /// State after exactly `k` further draws.
    pub fn jump(&mut self, k: u64) {
        if k == 0 {
            return;
        }
        let coeffs = self.jump_coefficients(k);
        self.apply(&coeffs);
    }

    /// Non-mutating form of [`LcgState::jump`].
    pub fn jumped(mut self, k: u64) -> Self {
        self.jump(k);
        self
    }
}

impl Default for LcgState {
    fn default() -> Self {
        Self::seeded(1)
    }
}

impl JumpCoefficients {
    /// Jump equivalent to `self` followed by `then`.
    pub fn then(&self, then: &JumpCoefficients, m: u64) -> JumpCoefficients {
        JumpCoefficients {
            mul: mul_add_mod(then.mul, self.mul, 0, m),
            add: mul_add_mod(then.mul, self.add, then.add, m),
            span: self.span + then.span,
        }
    }
}
