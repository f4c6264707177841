//! Conversions between the on-disk clinical units and SI.

pub const MMHG_TO_PA: f64 = 133.322_387_415;
pub const LITER_TO_M3: f64 = 1.0e-3;
pub const ML_TO_M3: f64 = 1.0e-6;
pub const MPA_S_PER_M3_TO_SI: f64 = 1.0e6;
pub const PICOWATT: f64 = 1.0e-12;

#[inline]
pub fn l_per_min_to_si(q: f64) -> f64 {
    q * LITER_TO_M3 / 60.0
}

#[inline]
pub fn si_to_l_per_min(q: f64) -> f64 {
    q * 60.0 / LITER_TO_M3
}

#[inline]
pub fn ml_to_si(v: f64) -> f64 {
    v * ML_TO_M3
}

#[inline]
pub fn si_to_ml(v: f64) -> f64 {
    v / ML_TO_M3
}

#[inline]
pub fn mmhg_to_si(p: f64) -> f64 {
    p * MMHG_TO_PA
}

#[inline]
pub fn si_to_mmhg(p: f64) -> f64 {
    p / MMHG_TO_PA
}

#[inline]
pub fn mpa_resistance_to_si(r: f64) -> f64 {
    r * MPA_S_PER_M3_TO_SI
}

#[inline]
pub fn si_to_mpa_resistance(r: f64) -> f64 {
    r / MPA_S_PER_M3_TO_SI
}
