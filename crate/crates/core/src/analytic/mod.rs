//! Closed-form survival and ruin probabilities, with numeric solvers that
//! check them.

pub mod ruin;
pub mod two_person;

pub use ruin::{
    find_c0, ln_failure_bound_infinite_mu, ln_failure_no_cooperation, never_hit, ruin_two_sided,
    ruin_two_sided_numeric, survival_bound_infinite_mu, survival_no_cooperation, RuinSpec,
};
pub use two_person::{
    expected_survivors, expected_survivors_exact, seven_state_solver, two_person_chain_exit_probs,
    two_person_exact_exit_probs, two_person_exit_probs, ExitProbs, SevenStateSolution, TwoPersonSpec,
};
