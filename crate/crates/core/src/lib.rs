pub mod error;
pub mod ode;
pub mod model;
pub mod singular;
pub mod cycle;
pub mod simulate;
pub mod scaling;
pub mod blowup;
