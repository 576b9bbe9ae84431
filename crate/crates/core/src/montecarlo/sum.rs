/// Fixed-point accumulator with 2⁻⁶⁴ resolution.
///
/// Every addend is rounded once onto the grid and then summed in integer
/// arithmetic, so the total is independent of summation order and of how
/// the trials were split between workers or runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExactSum(i128);

const SCALE: f64 = 18_446_744_073_709_551_616.0; // 2^64

impl ExactSum {
    /// Panics on non-finite input or magnitudes of 2^62 and beyond.
    pub fn add(&mut self, x: f64) {
        assert!(x.is_finite() && x.abs() < 4.611_686_018_427_388e18, "addend {x} out of range");
        self.0 = self
            .0
            .checked_add((x * SCALE).round() as i128)
            .expect("exact sum overflow");
    }

    pub fn merge(self, other: Self) -> Self {
        Self(self.0.checked_add(other.0).expect("exact sum overflow"))
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / SCALE
    }
}
