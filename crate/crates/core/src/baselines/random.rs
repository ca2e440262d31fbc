use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from;
use crate::values::{digest_str, DataValues, Method};

/// I.i.d. uniform `[0, 1)` values; the null model.
pub fn random_values(ids: &[String], seed: u64) -> Result<DataValues> {
    if ids.is_empty() {
        return Err(Error::Empty("source set"));
    }
    let mut rng = rng_from(seed);
    let values = (0..ids.len()).map(|_| rng.random::<f64>()).collect();
    let mut dv = DataValues::new(ids.to_vec(), values, Method::Random)?;
    dv.config_digest = digest_str("random");
    dv.seeds = vec![seed];
    Ok(dv)
}
