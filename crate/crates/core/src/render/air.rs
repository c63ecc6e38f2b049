//! Atmospheric absorption of sound (ISO 9613-1 pure-tone model).

use alloc::vec::Vec;

use num_traits::Float;

use crate::scene::RoomSpec;

const REFERENCE_PRESSURE_KPA: f64 = 101.325;
const REFERENCE_TEMPERATURE_K: f64 = 293.15;
const TRIPLE_POINT_K: f64 = 273.16;

/// Attenuation in dB per meter at frequency `f` (Hz) for temperature `t`
/// (Celsius), relative humidity `rh` (percent) and pressure `p` (kPa).
pub fn air_absorption_db_per_m(f: f64, t: f64, rh: f64, p: f64) -> f64 {
    if f <= 0.0 {
        return 0.0;
    }
    let temp = t + 273.15;
    let pa = p / REFERENCE_PRESSURE_KPA;
    let tr = temp / REFERENCE_TEMPERATURE_K;

    // molar concentration of water vapour, percent
    let psat = 10.0.powf(-6.8346 * (TRIPLE_POINT_K / temp).powf(1.261) + 4.6151);
    let h = rh * psat / pa;

    let fr_o = pa * (24.0 + 4.04e4 * h * (0.02 + h) / (0.391 + h));
    let fr_n = pa * tr.powf(-0.5) * (9.0 + 280.0 * h * (-4.170 * (tr.powf(-1.0 / 3.0) - 1.0)).exp());

    let f2 = f * f;
    let classical = 1.84e-11 / pa * tr.sqrt();
    let oxygen = 0.01275 * (-2239.1 / temp).exp() / (fr_o + f2 / fr_o);
    let nitrogen = 0.1068 * (-3352.0 / temp).exp() / (fr_n + f2 / fr_n);
    8.686 * f2 * (classical + tr.powf(-2.5) * (oxygen + nitrogen))
}

/// Per-band attenuation (dB/m) for the room's atmosphere.
pub fn band_air_absorption(room: &RoomSpec, band_centers: &[f64]) -> Vec<f64> {
    band_centers
        .iter()
        .map(|&f| air_absorption_db_per_m(f, room.temperature, room.humidity, room.pressure))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // ISO 9613-1 Table 1 excerpt, 20 C / 70 % RH / 101.325 kPa, dB per km.
    const TABLE_20C_70: [(f64, f64); 5] = [(250.0, 1.13), (500.0, 2.80), (1000.0, 4.98), (2000.0, 9.02), (4000.0, 22.9)];

    #[test]
    fn matches_published_table() {
        for (f, db_km) in TABLE_20C_70 {
            let got = air_absorption_db_per_m(f, 20.0, 70.0, 101.325) * 1000.0;
            assert!((got / db_km - 1.0).abs() < 0.05, "{f} Hz: {got} vs {db_km}");
        }
    }

    #[test]
    fn vanishes_at_dc() {
        assert_eq!(air_absorption_db_per_m(0.0, 20.0, 50.0, 101.325), 0.0);
        assert!(air_absorption_db_per_m(1e-3, 20.0, 50.0, 101.325) < 1e-12);
    }

    #[test]
    fn non_decreasing_in_frequency() {
        let mut last = 0.0;
        let mut f = 125.0;
        while f <= 8000.0 {
            let a = air_absorption_db_per_m(f, 20.0, 50.0, 101.325);
            assert!(a >= last);
            last = a;
            f *= 1.05;
        }
    }
}
