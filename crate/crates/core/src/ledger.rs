//! Constants derived from an affine control `ρ(t) = Kt + H₀` and the
//! approximation defects `H(3)`, `H(4)`, `H(5)`.

use serde_json::{json, Value};

use crate::scalar::Scalar;

/// Default depth for the recursively defined constants.
pub const DEFAULT_DEPTH: usize = 4;

/// `αt + β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine<S> {
    pub slope: S,
    pub offset: S,
}

impl<S: Scalar> Affine<S> {
    pub fn eval(&self, t: S) -> S {
        self.slope * t + self.offset
    }

    fn to_json(self) -> Value {
        json!({"slope": self.slope.to_json(), "offset": self.offset.to_json()})
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantLedger<S> {
    pub k: S,
    pub h0: S,
    pub h3: S,
    pub h4: S,
    pub h5: S,
    pub kappa0: S,
    pub kappa4: S,
    pub kappa5: S,
    /// `ρₙ` for `n = 1..=depth`.
    pub rho_n: Vec<Affine<S>>,
    /// `Hₙ` as a function of `L`, for `n = 1..=depth`.
    pub h_n: Vec<Affine<S>>,
    /// `Cₙ` for `n = 1..=depth`.
    pub c_n: Vec<S>,
    /// `Dₙ` for `n = 1..=depth`.
    pub d_n: Vec<S>,
    /// Slope and offset of the logarithmic interval bound.
    pub log_c1: S,
    pub log_c2: S,
}

impl<S: Scalar> ConstantLedger<S> {
    pub fn new(k: S, h0: S, h3: S, h4: S, h5: S) -> Self {
        Self::with_depth(k, h0, h3, h4, h5, DEFAULT_DEPTH)
    }

    pub fn with_depth(k: S, h0: S, h3: S, h4: S, h5: S, depth: usize) -> Self {
        let depth = depth.max(1);
        let rho = |t: S| k * t + h0;
        let two = S::one() + S::one();
        let three = two + S::one();
        let kappa0 = two * rho(three * h3) + two * h3;
        let kappa4 = two * rho(h4) + two * h4;
        let kappa5 = rho(h5) + rho(two * h5) + two * h5;

        let mut rho_n = vec![Affine {
            slope: S::one(),
            offset: S::zero(),
        }];
        let mut h_n = vec![Affine {
            slope: S::zero(),
            offset: S::zero(),
        }];
        let mut c_n = vec![kappa5];
        let mut d_n = vec![S::zero()];
        for n in 2..=depth {
            let prev = rho_n[n - 2];
            rho_n.push(Affine {
                slope: k * (prev.slope + S::one()),
                offset: k * prev.offset + h0,
            });
            let prev = h_n[n - 2];
            h_n.push(if n == 2 {
                Affine {
                    slope: S::one(),
                    offset: S::zero(),
                }
            } else {
                Affine {
                    slope: k * prev.slope + S::one(),
                    offset: k * prev.offset + h0,
                }
            });
            c_n.push(rho(c_n[n - 2]) + kappa5);
            d_n.push(rho(d_n[n - 2]) + two * rho(kappa5) + two * kappa5);
        }
        ConstantLedger {
            k,
            h0,
            h3,
            h4,
            h5,
            kappa0,
            kappa4,
            kappa5,
            rho_n,
            h_n,
            c_n,
            d_n,
            log_c1: two * h4,
            log_c2: k + h0 - two * h4,
        }
    }

    pub fn rho(&self, t: S) -> S {
        self.k * t + self.h0
    }

    pub fn depth(&self) -> usize {
        self.c_n.len()
    }

    /// `ζ′ = 2H(4) + ζ`.
    pub fn zeta_prime(&self, zeta: S) -> S {
        self.h4 + self.h4 + zeta
    }

    pub fn to_json(&self) -> Value {
        let list = |v: &[S]| v.iter().map(|x| x.to_json()).collect::<Vec<_>>();
        let affine = |v: &[Affine<S>]| v.iter().map(|a| a.to_json()).collect::<Vec<_>>();
        json!({
            "inputs": {
                "K": self.k.to_json(),
                "H0": self.h0.to_json(),
                "H3": self.h3.to_json(),
                "H4": self.h4.to_json(),
                "H5": self.h5.to_json(),
            },
            "kappa0": self.kappa0.to_json(),
            "kappa4": self.kappa4.to_json(),
            "kappa5": self.kappa5.to_json(),
            "rho_n": affine(&self.rho_n),
            "H_n": affine(&self.h_n),
            "C_n": list(&self.c_n),
            "D_n": list(&self.d_n),
            "log_bound": {"C1": self.log_c1.to_json(), "C2": self.log_c2.to_json()},
            "zeta_prime_offset": (self.h4 + self.h4).to_json(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;

    #[test]
    fn unit_control_values() {
        let l = ConstantLedger::new(1.0, 0.0, 1.0, 2.0, 1.0);
        assert_eq!((l.kappa0, l.kappa4, l.kappa5), (8.0, 8.0, 5.0));
        assert_eq!(l.rho_n[1], Affine { slope: 2.0, offset: 0.0 });
        assert_eq!(l.c_n[..2], [5.0, 10.0]);
        assert_eq!(l.d_n[..2], [0.0, 20.0]);
        assert_eq!(l.h_n[2].eval(3.0), 6.0);
        assert_eq!((l.log_c1, l.log_c2), (4.0, -3.0));
        assert_eq!(l.zeta_prime(1.5), 5.5);
        assert_eq!(l.depth(), 4);
    }

    #[test]
    fn rational_inputs_stay_exact() {
        let q = |n, d| Exact::new(n, d);
        let l = ConstantLedger::new(q(3, 2), q(1, 3), q(0, 1), q(1, 2), q(1, 4));
        // ρ(t) = 3t/2 + 1/3; κ₅ = ρ(1/4) + ρ(1/2) + 1/2.
        assert_eq!(l.kappa5, q(3, 8) + q(1, 3) + q(3, 4) + q(1, 3) + q(1, 2));
        assert_eq!(l.c_n[1], l.rho(l.kappa5) + l.kappa5);
        assert_eq!(l.rho_n[2].eval(q(1, 1)), l.rho(l.rho_n[1].eval(q(1, 1)) + q(1, 1)));
    }
}
