use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use super::{RandomStream, Scenario, SpreadingMatrix};
use crate::Result;

/// Dense F×K complex matrix, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, f: usize, k: usize) -> Complex64 {
        self.data[k * self.rows + f]
    }

    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.rows..(k + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }
}

/// Small-scale fading `G`: i.i.d. standard complex Gaussian entries whose
/// real and imaginary parts each have variance 1/2.
///
/// Normals come from `rand_distr::StandardNormal` (ziggurat) on the stream's
/// ChaCha8 generator, drawn real part first, column by column. Every entry is
/// drawn whatever the spreading matrix, so two matrices evaluated on the same
/// stream see the same fading.
pub fn sample_fading(rows: usize, cols: usize, rng: RandomStream) -> ChannelMatrix {
    let mut rng = rng.rng();
    let data = (0..rows * cols)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        })
        .collect();
    ChannelMatrix { rows, cols, data }
}

/// Effective channel `h[f,k] = a_k sqrt(v[f,k]) g[f,k]` for given fading.
///
/// Only `v` enters, never the signs of the underlying code: flipping the
/// sign of `w[f,k]` maps `g[f,k]` to `-g[f,k]`, which has the same law.
pub fn channel_from_fading(
    scn: &Scenario,
    v: &SpreadingMatrix,
    fading: &ChannelMatrix,
) -> Result<ChannelMatrix> {
    v.check_conforms(scn)?;
    if fading.rows != v.rows() || fading.cols != v.cols() {
        return Err(crate::Error::DimensionMismatch {
            expected: format!("{}x{} fading", v.rows(), v.cols()),
            actual: format!("{}x{}", fading.rows, fading.cols),
        });
    }
    let rows = v.rows();
    let mut data = vec![Complex64::new(0.0, 0.0); rows * v.cols()];
    for k in 0..v.cols() {
        let amp = scn.gain(k).sqrt();
        for (f, &p) in v.column(k).iter().enumerate() {
            if p > 0.0 {
                data[k * rows + f] = fading.get(f, k) * (amp * p.sqrt());
            }
        }
    }
    Ok(ChannelMatrix {
        rows,
        cols: v.cols(),
        data,
    })
}

/// One channel realisation for spreading `v`.
pub fn sample_channel(scn: &Scenario, v: &SpreadingMatrix, rng: RandomStream) -> Result<ChannelMatrix> {
    v.check_conforms(scn)?;
    channel_from_fading(scn, v, &sample_fading(v.rows(), v.cols(), rng))
}
