pub mod error;
pub mod gaussian;
pub mod padic;
pub mod report;
pub mod scalar;
pub mod solenoid;
pub mod harmonic;
pub mod partition;
pub mod dynamics;
pub mod cover;
pub mod lonely;
pub mod cli;

use num_rational::BigRational;

pub type Point = solenoid::SolenoidPoint<f64>;
pub type Point32 = solenoid::SolenoidPoint<f32>;
pub type DdPoint = solenoid::SolenoidPoint<scalar::Dd>;
pub type ExactPoint = solenoid::SolenoidPoint<BigRational>;
pub type FloatInterval = cover::Interval<f64>;
pub type ExactInterval = cover::Interval<BigRational>;
