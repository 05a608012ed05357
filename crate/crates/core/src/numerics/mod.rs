//! Special functions and root finders shared by the solvers.

mod kernel;
mod lambert;
mod roots;

pub use kernel::{energy_time_kernel, energy_time_kernel_deriv, snr_for_time, time_per_bit};
pub(crate) use kernel::{kernel, kernel_d1};
pub use lambert::{lambert_w0, lambert_w_minus1};
pub use roots::{bisect, safeguarded_newton, RootBracket};
