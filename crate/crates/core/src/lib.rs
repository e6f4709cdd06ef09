//! Networks with activations `{sigma, floor}`, one integer weight and a fixed
//! architecture, approximating continuous functions on `[0, 1]^d`.
//!
//! * [`highprec`]: certified fractional parts of `q * 2^(i/D)`.
//! * [`network`]: the activation `sigma`, the grid index and the forward pass.
//! * [`kronecker`]: the weight bound and the search for a weight `q` that puts
//!   `frac(q * 2^(i/(N+1)))` within `eps` of given torus targets.
//! * [`approximator`]: the constructive sup-norm approximation of Hölder functions.
//! * [`regression`]: least-squares fitting over the one-parameter class and rate studies.

pub mod approximator;
pub mod exact;
pub mod functions;
pub mod highprec;
pub mod kronecker;
pub mod network;
pub mod regression;
pub mod scan;
