//! Library side of the qknn binary: argument handling, configuration files, and the
//! run orchestration, kept callable so tests and fuzz targets can reach them.

pub mod app;
pub mod config;
