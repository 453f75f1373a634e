//! Quadrature, root finding, fixed-step ODE integration and eigensolvers.
//!
//! Every reduction runs in a fixed order so results do not depend on thread
//! count.

mod eigen;
mod ode;
mod quadrature;
mod roots;

pub use eigen::{
    grid_operator_from_couplings, min_eigen_grid, min_eigen_sturm_liouville, GridOperator, SturmLiouville,
};
pub use ode::{solve_ivp, solve_ivp_until, Trajectory};
pub use quadrature::{integrate, integrate_pieces, Tolerance};
pub use roots::{find_root, maximize_golden, sup_scan, Supremum, SCAN_POINTS};
