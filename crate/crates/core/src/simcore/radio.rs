//! Log-distance path loss with an additive noise floor.

use crate::error::{Error, Result};

/// A transmitter as seen from one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission {
    /// Watts.
    pub power: f64,
    /// Meters between transmitter and receiver.
    pub distance: f64,
    pub path_loss_exponent: f64,
}

impl Emission {
    pub fn new(power: f64, distance: f64, path_loss_exponent: f64) -> Self {
        Emission {
            power,
            distance,
            path_loss_exponent,
        }
    }

    /// `P / d^α`, with `d` clamped to at least `min_distance`.
    pub fn received_power(&self, min_distance: f64) -> f64 {
        let d = self.distance.max(min_distance);
        self.power / d.powf(self.path_loss_exponent)
    }
}

/// SNIR = signal / (noise floor + Σ interference), all in watts.
///
/// `interferers` should only contain concurrent transmissions on the
/// receiver's channel.
pub fn compute_snir(
    signal: &Emission,
    interferers: &[Emission],
    noise_floor: f64,
    min_distance: f64,
) -> Result<f64> {
    if !(signal.power > 0.0) {
        return Err(Error::config("tx_power", format!("transmitter power must be > 0, got {}", signal.power)));
    }
    let wanted = signal.received_power(min_distance);
    let denominator = noise_floor
        + interferers
            .iter()
            .map(|e| e.received_power(min_distance))
            .sum::<f64>();
    if !(denominator > 0.0) {
        return Err(Error::Numeric(
            "SNIR with zero noise floor and no interference (division by zero)".into(),
        ));
    }
    let snir = wanted / denominator;
    if !snir.is_finite() {
        return Err(Error::Numeric(format!("SNIR evaluated to {snir}")));
    }
    Ok(snir)
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        ((a - b) / b).abs() < 1e-12
    }

    #[test]
    fn free_space_exponent() {
        let snir = compute_snir(&Emission::new(7.0, 1000.0, 2.0), &[], 1e-10, 1.0).unwrap();
        assert!(close(snir, 7e4), "{snir}");
    }

    #[test]
    fn rain_exponent_falls_below_threshold() {
        let snir = compute_snir(&Emission::new(7.0, 1000.0, 4.0), &[], 1e-10, 1.0).unwrap();
        assert!(close(snir, 0.07), "{snir}");
        assert!(snir < 10.0);
    }

    #[test]
    fn interference_adds_to_the_denominator() {
        let jammer = Emission::new(12.0, 2000.0, 2.0);
        let snir = compute_snir(&Emission::new(7.0, 1000.0, 2.0), &[jammer], 1e-10, 1.0).unwrap();
        let expected = 7e-6 / (1e-10 + 12.0 / 4e6);
        assert!(close(snir, expected));
    }

    #[test]
    fn zero_distance_is_clamped() {
        let snir = compute_snir(&Emission::new(7.0, 0.0, 2.0), &[], 1e-10, 1.0).unwrap();
        assert!(close(snir, 7e10));
    }

    #[test]
    fn no_noise_no_interference_is_an_error() {
        assert!(matches!(
            compute_snir(&Emission::new(7.0, 10.0, 2.0), &[], 0.0, 1.0),
            Err(Error::Numeric(_))
        ));
        assert!(compute_snir(&Emission::new(0.0, 10.0, 2.0), &[], 1e-10, 1.0).is_err());
    }
}
