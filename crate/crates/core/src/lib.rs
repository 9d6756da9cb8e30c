pub mod allocation;
pub mod backtest;
pub mod features;
pub mod learners;
pub mod marketdata;
pub mod views;
