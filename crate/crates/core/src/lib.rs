pub mod chainoptics;
pub mod linkgeom;
pub mod ratemodels;
pub mod scenarios;
pub mod turbulence;
pub mod wavefield;
