//! Comparison weight policies: fresh random weights and the plain average.

use rand::Rng;

use crate::model::WeightVector;

/// Free weights uniform in `[0, 1]`, `w_pdr` derived.
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R) -> WeightVector {
    let w_rssi = rng.random::<f64>();
    let w_aoa = rng.random::<f64>();
    WeightVector::derive(w_rssi, w_aoa)
}

pub fn equal_weights() -> WeightVector {
    WeightVector::equal()
}
