pub mod analysis;
pub mod bath;
pub mod error;
pub mod generators;
pub mod linalg;
pub mod models;
pub mod quadrature;
pub mod rates;
