//! Taylor polynomials of the optimal Lyapunov function of a polynomial ODE
//! `ẋ = f(x)` with an exponentially stable origin, grid-certified sublevel
//! estimates of the domain of attraction, and a trajectory-integration oracle
//! that checks them.

pub mod linalg;
pub mod series;
pub mod spectral;
pub mod lyap;
pub mod systems;
pub mod region;
pub mod oracle;
pub mod convergence;
