//! Return datasets and backtest statistics.

mod io;
mod matrix;
mod stats;

pub use io::{format_returns, load_dataset, load_returns, load_tickers, parse_returns, save_returns};
pub use matrix::{ReturnRange, ReturnsMatrix};
pub use stats::{accumulated_wealth, annual_return, annual_volatility, log_wealth, PortfolioStats, TRADING_DAYS};
