pub mod frontend;
pub mod hdc;
pub mod ir;
pub mod dataio;
pub mod backend;
pub mod driver;
