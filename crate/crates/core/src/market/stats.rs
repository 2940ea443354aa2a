use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::market::ReturnsMatrix;
use crate::portfolio::Portfolio;
use crate::scalar::Scalar;

/// Trading days per year.
pub const TRADING_DAYS: usize = 252;

/// `sum_t ln <nu, r_t>`.
pub fn log_wealth<T: Scalar>(nu: &Portfolio<T>, returns: &ReturnsMatrix<T>) -> Result<T> {
    nu.check_dim(returns.cols())?;
    let mut total = T::zero();
    for row in returns.iter_rows() {
        let p = nu.dot(row);
        if !(p > T::zero()) {
            return Err(domain(format!("portfolio return {p} must be positive")));
        }
        total = total + p.ln();
    }
    Ok(total)
}

/// Wealth `X_n = prod_t <nu, r_t>` of a constantly rebalanced portfolio,
/// computed in log space.
pub fn accumulated_wealth<T: Scalar>(nu: &Portfolio<T>, returns: &ReturnsMatrix<T>) -> Result<T> {
    Ok(log_wealth(nu, returns)?.exp())
}

/// `X_n^(252/n)`.
pub fn annual_return<T: Scalar>(wealth: T, n: usize) -> Result<T> {
    if !(wealth > T::zero()) || n == 0 {
        return Err(domain("annual return needs positive wealth and n >= 1"));
    }
    Ok(wealth.powf(T::lit(TRADING_DAYS as f64 / n as f64)))
}

/// Sample standard deviation (divisor `n - 1`) of the daily portfolio
/// returns, scaled by `sqrt(252)`.
pub fn annual_volatility<T: Scalar>(nu: &Portfolio<T>, returns: &ReturnsMatrix<T>) -> Result<T> {
    nu.check_dim(returns.cols())?;
    let n = returns.rows();
    if n < 2 {
        return Err(domain("annual volatility needs at least two rows"));
    }
    let daily: Vec<T> = returns.iter_rows().map(|r| nu.dot(r)).collect();
    let mean = daily.iter().copied().sum::<T>() / T::lit(n as f64);
    let ss = daily.iter().map(|&p| (p - mean) * (p - mean)).sum::<T>();
    Ok((ss / T::lit((n - 1) as f64)).sqrt() * T::lit(TRADING_DAYS as f64).sqrt())
}

/// Backtest summary used in the dataset tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PortfolioStats {
    pub portfolio: Vec<f64>,
    pub wealth: f64,
    pub annual_return: f64,
    pub annual_volatility: f64,
}

impl PortfolioStats {
    pub fn compute<T: Scalar>(nu: &Portfolio<T>, returns: &ReturnsMatrix<T>) -> Result<Self> {
        let wealth = accumulated_wealth(nu, returns)?;
        Ok(Self {
            portfolio: nu.weights().iter().map(|w| w.as_f64()).collect(),
            wealth: wealth.as_f64(),
            annual_return: annual_return(wealth, returns.rows())?.as_f64(),
            annual_volatility: annual_volatility(nu, returns)?.as_f64(),
        })
    }
}
