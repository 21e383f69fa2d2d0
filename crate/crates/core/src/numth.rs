//! Number-theoretic predicates and constructions that decide election
//! feasibility and parameterize the exact-d capture algorithm.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on `n` and `m`. Desk-scale tool; with the cap every product
/// formed here stays far inside checked 64-bit range.
pub const MAX_PARAM: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamsError {
    #[error("{field} must be at least 1")]
    Zero { field: &'static str },
    #[error("{field} = {value} exceeds the supported maximum {max}")]
    TooLarge {
        field: &'static str,
        value: u64,
        max: u64,
    },
    #[error("d = {d} exceeds n = {n}")]
    LeaderBoundTooLarge { d: u64, n: u64 },
}

/// System parameters: `n` processes, `m` registers, leader bound `d`.
///
/// `d` normally lies in `1..=n-1`; `d = n` is accepted for the degenerate
/// configuration where every process must be elected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Params {
    pub n: u64,
    pub m: u64,
    pub d: u64,
}

impl Params {
    pub fn new(n: u64, m: u64, d: u64) -> Result<Self, ParamsError> {
        let p = Self { n, m, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        for (field, value) in [("n", self.n), ("m", self.m), ("d", self.d)] {
            if value == 0 {
                return Err(ParamsError::Zero { field });
            }
            if value > MAX_PARAM {
                return Err(ParamsError::TooLarge {
                    field,
                    value,
                    max: MAX_PARAM,
                });
            }
        }
        if self.d > self.n {
            return Err(ParamsError::LeaderBoundTooLarge {
                d: self.d,
                n: self.n,
            });
        }
        Ok(())
    }

    pub fn gcd_mn(&self) -> u64 {
        gcd(self.m, self.n)
    }
}

/// Greatest common divisor by Euclid's algorithm.
pub fn gcd(a: u64, b: u64) -> u64 {
    debug_assert!(a >= 1 && b >= 1);
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// True iff `b` is a multiple of `a`.
pub fn divides(a: u64, b: u64) -> bool {
    debug_assert!(a >= 1);
    b % a == 0
}

/// Membership in the feasibility set `M(n, d) = { k : gcd(l, k) <= d for
/// every l with 1 < l <= n }`.
///
/// This is the region of register counts for which d-election is solvable
/// without required participation. For `n = 1` the quantifier is vacuous and
/// every `m` qualifies.
pub fn in_m(m: u64, n: u64, d: u64) -> bool {
    (2..=n).all(|l| gcd(l, m) <= d)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InfeasibleParams {
    #[error("gcd({m}, {n}) = {gcd} does not divide d = {d}")]
    GcdDoesNotDivide { n: u64, m: u64, d: u64, gcd: u64 },
    #[error("gcd({m}, {n}) = {gcd} exceeds d = {d}")]
    GcdExceedsD { n: u64, m: u64, d: u64, gcd: u64 },
}

/// Positive coefficients of the identity `u*m = v*n + d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BezoutPair {
    pub u: u64,
    pub v: u64,
}

/// Smallest positive pair `(u, v)` with `u*m = v*n + d`.
///
/// A solution exists iff `gcd(m, n)` divides `d`. The search iterates
/// `u = 1, 2, ...` and accepts the first `u` for which `u*m - d` is a
/// positive multiple of `n`; `v = 0` candidates are rejected. Since `v` is
/// determined by `u`, the minimal `u` also gives the lexicographically
/// smallest pair.
pub fn bezout_pair(p: &Params) -> Result<BezoutPair, InfeasibleParams> {
    let g = gcd(p.m, p.n);
    if !divides(g, p.d) {
        return Err(InfeasibleParams::GcdDoesNotDivide {
            n: p.n,
            m: p.m,
            d: p.d,
            gcd: g,
        });
    }
    let mut u = 1u64;
    loop {
        let lhs = u.checked_mul(p.m).expect("parameters are capped");
        if lhs > p.d && (lhs - p.d) % p.n == 0 {
            return Ok(BezoutPair {
                u,
                v: (lhs - p.d) / p.n,
            });
        }
        u += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_identity_and_hand_checked() {
        for k in 1..=20 {
            assert_eq!(gcd(1, k), 1);
        }
        assert_eq!(gcd(6, 4), 2);
        assert_eq!(gcd(4, 6), 2);
        assert_eq!(gcd(12, 18), 6);
    }

    #[test]
    fn in_m_examples() {
        // m = 1 is in M(n, 1) for every n: gcd(l, 1) = 1.
        for n in 1..=12 {
            assert!(in_m(1, n, 1));
        }
        // gcd(2, 6) = 2 > 1.
        assert!(!in_m(6, 3, 1));
        // 5 is coprime to 2, 3, 4.
        assert!(in_m(5, 4, 1));
    }

    #[test]
    fn divides_examples() {
        for d in 1..=10 {
            assert!(divides(1, d));
        }
        assert!(divides(2, 4));
        assert!(!divides(2, 3));
        assert!(divides(gcd(4, 6), 2));
    }

    #[test]
    fn bezout_examples() {
        let p = Params::new(5, 3, 1).unwrap();
        assert_eq!(bezout_pair(&p).unwrap(), BezoutPair { u: 2, v: 1 });

        let p = Params::new(6, 4, 2).unwrap();
        assert_eq!(bezout_pair(&p).unwrap(), BezoutPair { u: 2, v: 1 });

        let p = Params::new(5, 5, 3).unwrap();
        assert!(matches!(
            bezout_pair(&p),
            Err(InfeasibleParams::GcdDoesNotDivide { gcd: 5, .. })
        ));
    }

    #[test]
    fn bezout_identity_holds_on_small_grid() {
        for n in 1..=16 {
            for m in 1..=16 {
                for d in 1..=n {
                    let p = Params::new(n, m, d).unwrap();
                    match bezout_pair(&p) {
                        Ok(b) => {
                            assert!(b.u >= 1 && b.v >= 1);
                            assert_eq!(b.u * m, b.v * n + d, "n={n} m={m} d={d}");
                        }
                        Err(_) => assert!(!divides(gcd(m, n), d)),
                    }
                }
            }
        }
    }

    #[test]
    fn in_m_with_d1_is_coprimality() {
        for n in 1..=24 {
            for m in 1..=24 {
                let coprime = (2..=n).all(|l| gcd(l, m) == 1);
                assert_eq!(in_m(m, n, 1), coprime);
            }
        }
    }

    #[test]
    fn in_m_implies_gcd_bound() {
        for n in 1..=24u64 {
            for m in 1..=24 {
                for d in 1..=n {
                    if in_m(m, n, d) {
                        assert!(gcd(m, n) <= d);
                    }
                }
            }
        }
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(3, 5, 1).is_ok());
        assert!(Params::new(3, 5, 3).is_ok()); // d = n accepted
        assert!(matches!(
            Params::new(3, 5, 4),
            Err(ParamsError::LeaderBoundTooLarge { .. })
        ));
        assert!(matches!(
            Params::new(0, 5, 1),
            Err(ParamsError::Zero { field: "n" })
        ));
        assert!(matches!(
            Params::new(3, 0, 1),
            Err(ParamsError::Zero { field: "m" })
        ));
        assert!(Params::new(20_000, 1, 1).is_err());
    }
}
