#![allow(dead_code)]

pub mod kmeans_oracle;
