use rayon::prelude::*;

use super::utility::Utility;
use crate::error::{Error, Result};
use crate::values::{digest_str, DataValues, Method};

/// Leave-one-out values `U(all) - U(all \ {k})`.
pub fn loo_values(utility: &dyn Utility, ids: &[String]) -> Result<DataValues> {
    let n = check_players(utility, ids)?;
    let all: Vec<usize> = (0..n).collect();
    let full = utility.evaluate(&all)?;
    let values = (0..n)
        .into_par_iter()
        .map(|k| {
            let rest: Vec<usize> = (0..n).filter(|&i| i != k).collect();
            Ok(full - utility.evaluate(&rest)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut dv = DataValues::new(ids.to_vec(), values, Method::Loo)?;
    dv.config_digest = digest_str(&format!("loo|{}", utility.describe()));
    Ok(dv)
}

pub(super) fn check_players(utility: &dyn Utility, ids: &[String]) -> Result<usize> {
    let n = utility.players();
    if n == 0 {
        return Err(Error::Empty("source set"));
    }
    if ids.len() != n {
        return Err(Error::DimensionMismatch {
            what: "sample ids",
            expected: n,
            actual: ids.len(),
        });
    }
    Ok(n)
}
