use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// 2×2 counts `[[a, b], [c, d]]`: rows are groups, columns are outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable(pub [[u64; 2]; 2]);

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn row_sums(&self) -> [u64; 2] {
        [self.0[0][0] + self.0[0][1], self.0[1][0] + self.0[1][1]]
    }

    pub fn column_sums(&self) -> [u64; 2] {
        [self.0[0][0] + self.0[1][0], self.0[0][1] + self.0[1][1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson chi-square test of independence on a 2×2 table, one degree of
/// freedom, no continuity correction.
///
/// Uses the closed form `n (ad − bc)² / (r₁ r₂ c₁ c₂)`; the chi-square(1)
/// survival function is `erfc(√(x/2))`.
pub fn chi_square(table: &ContingencyTable) -> Result<ChiSquare> {
    let rows = table.row_sums();
    let cols = table.column_sums();
    if rows.contains(&0) || cols.contains(&0) {
        return Err(Error::DegenerateTable);
    }
    let [[a, b], [c, d]] = table.0.map(|r| r.map(|x| x as f64));
    let n = table.total() as f64;
    let cross = a * d - b * c;
    let denom = rows[0] as f64 * rows[1] as f64 * cols[0] as f64 * cols[1] as f64;
    let statistic = n * cross * cross / denom;
    let p_value = erfc((statistic / 2.0).sqrt()).clamp(0.0, 1.0);
    Ok(ChiSquare { statistic, p_value })
}
