//! Two agents `x` (poor, `phi_x < 1`) and `y` (rich, `phi_y > 1`) joined by
//! one edge, with `phi_x + phi_y < 2` so that somebody dies almost surely.
//! Under perfect cooperation the fortunes stay within one coin of each other
//! and the first death leaves the pair in one of four boundary states.
//!
//! [`two_person_exit_probs`] is the published closed form built on a
//! seven-state chain ([`seven_state_solver`]). That chain treats the
//! states below `(1,1)` as if `(1,1)` were never revisited, which is not the
//! law of the actual dynamics; [`two_person_exact_exit_probs`] and
//! [`two_person_chain_exit_probs`] give the exit law of the dynamics itself.

use nalgebra::{DMatrix, Matrix3, Matrix3x4};
use serde::{Deserialize, Serialize};

use crate::dynamics::Mu;
use crate::error::{Error, Result};
use crate::numeric::one_minus_pow_neg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPersonSpec {
    pub phi_x: f64,
    pub phi_y: f64,
    pub c: u64,
}

impl TwoPersonSpec {
    pub fn new(phi_x: f64, phi_y: f64, c: u64) -> TwoPersonSpec {
        TwoPersonSpec { phi_x, phi_y, c }
    }

    pub fn in_region(&self) -> bool {
        self.phi_x > 0.0 && self.phi_x + self.phi_y < 2.0 && self.phi_x < 1.0 && self.phi_y > 1.0
    }

    pub fn check_region(&self) -> Result<()> {
        if self.in_region() {
            Ok(())
        } else {
            Err(Error::OutsideRegion {
                phi_x: self.phi_x,
                phi_y: self.phi_y,
            })
        }
    }

    pub fn swapped(&self) -> TwoPersonSpec {
        TwoPersonSpec::new(self.phi_y, self.phi_x, self.c)
    }

    fn psi(&self) -> f64 {
        8.0 + 2.0 * self.phi_x + 2.0 * self.phi_y
    }
}

/// Law of the pair `(X, Y)` at the first death.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitProbs {
    /// `(0, -1)`
    pub y_dead_x0: f64,
    /// `(-1, 0)`
    pub x_dead_y0: f64,
    /// `(1, -1)`
    pub y_dead_x1: f64,
    /// `(-1, 1)`
    pub x_dead_y1: f64,
}

impl ExitProbs {
    /// Boundary states in the customary order `(0,-1), (-1,0), (1,-1), (-1,1)`:
    /// the two exits next to `(0,0)`, then the exit next to `(1,0)`, then the
    /// one next to `(0,1)`.
    pub const STATES: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, -1), (-1, 1)];

    pub fn ordered(&self) -> [f64; 4] {
        [self.y_dead_x0, self.x_dead_y0, self.y_dead_x1, self.x_dead_y1]
    }

    pub fn from_ordered(p: [f64; 4]) -> ExitProbs {
        ExitProbs {
            y_dead_x0: p[0],
            x_dead_y0: p[1],
            y_dead_x1: p[2],
            x_dead_y1: p[3],
        }
    }

    /// Index into [`STATES`](Self::STATES) of a terminal configuration.
    pub fn index_of(x: i64, y: i64) -> Option<usize> {
        Self::STATES.iter().position(|&s| s == (x, y))
    }

    pub fn sum(&self) -> f64 {
        self.ordered().iter().sum()
    }

    /// Probability that `y` outlives `x` and is never ruined afterwards.
    pub fn expected_survivors(&self, phi_y: f64) -> f64 {
        self.x_dead_y0 * one_minus_pow_neg(phi_y, 1.0) + self.x_dead_y1 * one_minus_pow_neg(phi_y, 2.0)
    }
}

/// Closed forms with `Psi = 8 + 2 phi_x + 2 phi_y`: `2/Psi` for both exits
/// next to `(0,0)`, `phi_x/Psi + 1/4` for `(1,-1)` and `phi_y/Psi + 1/4`
/// for `(-1,1)`.
pub fn two_person_exit_probs(spec: &TwoPersonSpec) -> Result<ExitProbs> {
    spec.check_region()?;
    let psi = spec.psi();
    Ok(ExitProbs {
        y_dead_x0: 2.0 / psi,
        x_dead_y0: 2.0 / psi,
        y_dead_x1: spec.phi_x / psi + 0.25,
        x_dead_y1: spec.phi_y / psi + 0.25,
    })
}

/// Absorption probabilities of the seven-state chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SevenStateSolution {
    /// Exit law started half from `(1,0)`, half from `(0,1)`.
    pub exits: ExitProbs,
    /// Row `j` is the exit law from transient state `TRANSIENT[j]`, columns in
    /// [`ExitProbs::STATES`] order.
    pub from_state: [[f64; 4]; 3],
}

impl SevenStateSolution {
    pub const TRANSIENT: [(i64, i64); 3] = [(0, 0), (1, 0), (0, 1)];
}

/// First-step solve of the seven-state chain: from `(0,0)` spend to either
/// boundary at rate 1 each, earn to `(1,0)` or `(0,1)` at rates
/// `phi_x`, `phi_y`; from `(1,0)` and `(0,1)` either back to `(0,0)` or to
/// the adjacent boundary, at rate 1 each.
pub fn seven_state_solver(spec: &TwoPersonSpec) -> Result<SevenStateSolution> {
    spec.check_region()?;
    let (px, py) = (spec.phi_x, spec.phi_y);
    // Jump probabilities of the embedded chain.
    let r0 = 2.0 + px + py;
    #[rustfmt::skip]
    let q = Matrix3::new(
        0.0, px / r0, py / r0,
        0.5, 0.0,     0.0,
        0.5, 0.0,     0.0,
    );
    #[rustfmt::skip]
    let b = Matrix3x4::new(
        1.0 / r0, 1.0 / r0, 0.0, 0.0,
        0.0,      0.0,      0.5, 0.0,
        0.0,      0.0,      0.0, 0.5,
    );
    let a = Matrix3::identity() - q;
    let x = a.lu().solve(&b).ok_or(Error::Singular)?;
    let row = |j: usize| [x[(j, 0)], x[(j, 1)], x[(j, 2)], x[(j, 3)]];
    let from_state = [row(0), row(1), row(2)];
    let mut start = [0.0; 4];
    for (k, s) in start.iter_mut().enumerate() {
        *s = 0.5 * (from_state[1][k] + from_state[2][k]);
    }
    Ok(SevenStateSolution {
        exits: ExitProbs::from_ordered(start),
        from_state,
    })
}

/// Exit law of the perfect-cooperation dynamics started from `(c,c)` with
/// `c >= 1`. With `s = phi_x + phi_y` and `R = 2 + s`:
/// each exit next to `(0,0)` has probability `1/(R+2)`, `(1,-1)` has
/// `(R^2 - s + 2 phi_x) / (2R(R+2))` and `(-1,1)` has
/// `(R^2 - s + 2 phi_y) / (2R(R+2))`.
pub fn two_person_exact_exit_probs(spec: &TwoPersonSpec) -> Result<ExitProbs> {
    spec.check_region()?;
    if spec.c == 0 {
        return two_person_chain_exit_probs(spec);
    }
    let s = spec.phi_x + spec.phi_y;
    let r = 2.0 + s;
    let denom = 2.0 * r * (r + 2.0);
    Ok(ExitProbs {
        y_dead_x0: 1.0 / (r + 2.0),
        x_dead_y0: 1.0 / (r + 2.0),
        y_dead_x1: (r * r - s + 2.0 * spec.phi_x) / denom,
        x_dead_y1: (r * r - s + 2.0 * spec.phi_y) / denom,
    })
}

/// States of the balanced pair holding `k` coins in total.
fn level(k: usize) -> Vec<(i64, i64)> {
    let h = (k / 2) as i64;
    if k % 2 == 0 {
        vec![(h, h)]
    } else {
        vec![(h + 1, h), (h, h + 1)]
    }
}

fn balance(a: i64, b: i64) -> (i64, i64) {
    if a >= b + 2 {
        (a - 1, b + 1)
    } else if b >= a + 2 {
        (a + 1, b - 1)
    } else {
        (a, b)
    }
}

/// Exit law from `(c,c)` by solving the full perfect-cooperation chain,
/// truncated where reaching the top level has negligible probability.
/// The chain is block tridiagonal in the total fortune, solved level by
/// level.
pub fn two_person_chain_exit_probs(spec: &TwoPersonSpec) -> Result<ExitProbs> {
    spec.check_region()?;
    let (px, py) = (spec.phi_x, spec.phi_y);
    let r = 2.0 + px + py;
    let drift = (0.5 * (px + py)).ln();
    let extra = ((40.0 / -drift).ceil() as usize).max(200);
    let top = 2 * spec.c as usize + extra;

    // Per level: lower coupling L (d_k x d_{k-1}), upper coupling U
    // (d_k x d_{k+1}) and absorbing right-hand side B (d_k x 4).
    let mut forward_u: Vec<DMatrix<f64>> = Vec::with_capacity(top + 1);
    let mut forward_b: Vec<DMatrix<f64>> = Vec::with_capacity(top + 1);
    for k in 0..=top {
        let here = level(k);
        let below = if k > 0 { level(k - 1) } else { Vec::new() };
        let above = if k < top { level(k + 1) } else { Vec::new() };
        let d = here.len();
        let mut lower = DMatrix::zeros(d, below.len());
        let mut upper = DMatrix::zeros(d, above.len());
        let mut rhs = DMatrix::zeros(d, 4);
        for (i, &(a, b)) in here.iter().enumerate() {
            let moves = [(1.0, (a - 1, b)), (1.0, (a, b - 1)), (px, (a + 1, b)), (py, (a, b + 1))];
            for (rate, (na, nb)) in moves {
                if na < 0 || nb < 0 {
                    let j = ExitProbs::index_of(na.max(-1), nb.max(-1)).expect("boundary state");
                    rhs[(i, j)] += rate;
                    continue;
                }
                let t = balance(na, nb);
                if let Some(j) = below.iter().position(|&s| s == t) {
                    lower[(i, j)] -= rate;
                } else if let Some(j) = above.iter().position(|&s| s == t) {
                    upper[(i, j)] -= rate;
                }
                // Anything else leaves through the truncation.
            }
        }
        let mut m = DMatrix::identity(d, d) * r;
        let mut bk = rhs;
        if k > 0 {
            m -= &lower * &forward_u[k - 1];
            bk -= &lower * &forward_b[k - 1];
        }
        let lu = m.lu();
        let uk = lu.solve(&upper).ok_or(Error::Singular)?;
        let bk = lu.solve(&bk).ok_or(Error::Singular)?;
        forward_u.push(uk);
        forward_b.push(bk);
    }
    let mut u = forward_b[top].clone();
    let start = 2 * spec.c as usize;
    for k in (start..top).rev() {
        u = &forward_b[k] - &forward_u[k] * &u;
    }
    // Level 2c holds the single state (c, c).
    Ok(ExitProbs::from_ordered([u[(0, 0)], u[(0, 1)], u[(0, 2)], u[(0, 3)]]))
}

/// Expected number of permanent survivors. Perfect cooperation uses the
/// closed-form exit law (independent of `c`); no cooperation gives
/// `1 - phi_y^-(c+1)` since `x` dies almost surely.
pub fn expected_survivors(spec: &TwoPersonSpec, mu: Mu) -> Result<f64> {
    spec.check_region()?;
    match mu {
        Mu::Infinite => Ok(two_person_exit_probs(spec)?.expected_survivors(spec.phi_y)),
        Mu::Finite(m) if m == 0.0 => Ok(one_minus_pow_neg(spec.phi_y, spec.c as f64 + 1.0)),
        Mu::Finite(m) => Err(Error::InvalidParameter(format!(
            "no closed form for finite cooperation rate {m}"
        ))),
    }
}

/// Perfect-cooperation expected survivors from the exact exit law.
pub fn expected_survivors_exact(spec: &TwoPersonSpec) -> Result<f64> {
    Ok(two_person_exact_exit_probs(spec)?.expected_survivors(spec.phi_y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SPEC: TwoPersonSpec = TwoPersonSpec {
        phi_x: 0.5,
        phi_y: 1.25,
        c: 3,
    };

    fn random_region_point(rng: &mut ChaCha8Rng) -> TwoPersonSpec {
        loop {
            let px = rng.random_range(0.01..1.0);
            let py = rng.random_range(1.0..2.0);
            let s = TwoPersonSpec::new(px, py, rng.random_range(1..20));
            if s.in_region() {
                return s;
            }
        }
    }

    #[test]
    fn closed_form_values() {
        let p = two_person_exit_probs(&SPEC).unwrap();
        assert!((p.y_dead_x0 - 2.0 / 11.5).abs() < 1e-15);
        assert!((p.x_dead_y0 - 0.173913).abs() < 1e-6);
        assert!((p.y_dead_x1 - 0.293478).abs() < 1e-6);
        assert!((p.x_dead_y1 - 0.358696).abs() < 1e-6);
        assert!((p.sum() - 1.0).abs() < 1e-15);

        let q = two_person_exit_probs(&TwoPersonSpec::new(0.9, 1.05, 2)).unwrap();
        assert!((q.sum() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn region_checks() {
        assert!(two_person_exit_probs(&TwoPersonSpec::new(1.2, 1.5, 1)).is_err());
        assert!(two_person_exit_probs(&TwoPersonSpec::new(0.8, 0.8, 1)).is_err());
        assert!(two_person_exit_probs(&TwoPersonSpec::new(0.9, 1.2, 1)).is_err());
        assert!(matches!(
            seven_state_solver(&TwoPersonSpec::new(1.0, 1.0, 1)),
            Err(Error::OutsideRegion { .. })
        ));
    }

    #[test]
    fn seven_state_conditionals() {
        let sol = seven_state_solver(&SPEC).unwrap();
        let s = SPEC.phi_x + SPEC.phi_y;
        let [from_00, from_10, from_01] = sol.from_state;
        assert!((from_00[0] - 2.0 / (4.0 + s)).abs() < 1e-14);
        assert!((from_10[0] - 0.5 * from_00[0]).abs() < 1e-14);
        assert!((from_01[0] - 0.5 * from_00[0]).abs() < 1e-14);
        assert!((from_00[2] - SPEC.phi_x / (4.0 + s)).abs() < 1e-14);
        assert!((from_10[2] - (0.5 + SPEC.phi_x / (8.0 + 2.0 * s))).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_seven_state_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let s = random_region_point(&mut rng);
            let a = two_person_exit_probs(&s).unwrap().ordered();
            let b = seven_state_solver(&s).unwrap().exits.ordered();
            for k in 0..4 {
                assert!((a[k] - b[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn swap_symmetry() {
        // Outside the region after swapping, so compare the formulas directly.
        let p = two_person_exit_probs(&SPEC).unwrap();
        let psi = SPEC.psi();
        assert_eq!(psi, SPEC.swapped().psi());
        assert!((p.x_dead_y1 - (SPEC.swapped().phi_x / psi + 0.25)).abs() < 1e-15);
        assert_eq!(p.y_dead_x0, p.x_dead_y0);
    }

    #[test]
    fn exact_law_matches_full_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let s = random_region_point(&mut rng);
            let exact = two_person_exact_exit_probs(&s).unwrap().ordered();
            let chain = two_person_chain_exit_probs(&s).unwrap().ordered();
            for k in 0..4 {
                assert!((exact[k] - chain[k]).abs() < 1e-10, "{s:?}: {exact:?} vs {chain:?}");
            }
            assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let e = two_person_exact_exit_probs(&SPEC).unwrap();
        assert!((e.x_dead_y1 - 0.343478).abs() < 1e-6);
        assert!((e.y_dead_x1 - 0.308696).abs() < 1e-6);
    }

    #[test]
    fn exact_law_is_c_independent() {
        for c in [1, 3, 10] {
            let s = TwoPersonSpec { c, ..SPEC };
            let a = two_person_chain_exit_probs(&s).unwrap().ordered();
            let b = two_person_exact_exit_probs(&SPEC).unwrap().ordered();
            for k in 0..4 {
                assert!((a[k] - b[k]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn survivors() {
        let e_inf = expected_survivors(&SPEC, Mu::Infinite).unwrap();
        assert!((e_inf - 0.163913).abs() < 1e-6);
        let e0 = expected_survivors(&TwoPersonSpec { c: 1, ..SPEC }, Mu::Finite(0.0)).unwrap();
        assert!((e0 - 0.36).abs() < 1e-15);
        assert!(e_inf < e0);
        assert!(expected_survivors(&SPEC, Mu::Finite(1.0)).is_err());
        let exact = expected_survivors_exact(&SPEC).unwrap();
        assert!((exact - (0.173913 * 0.2 + 0.343478 * 0.36)).abs() < 1e-5);

        let near = TwoPersonSpec::new(0.5, 1.0 + 1e-9, 3);
        assert!(expected_survivors(&near, Mu::Infinite).unwrap() < 1e-8);
        assert!(expected_survivors(&near, Mu::Finite(0.0)).unwrap() < 1e-8);
    }

    #[test]
    fn strict_comparison_over_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = random_region_point(&mut rng);
            let e_inf = expected_survivors(&s, Mu::Infinite).unwrap();
            let e0 = expected_survivors(&s, Mu::Finite(0.0)).unwrap();
            assert!(e_inf < e0, "{s:?}");
        }
    }
}
