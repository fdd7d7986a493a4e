use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use parking_lot::Mutex;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanKey = (usize, bool);

/// Process-wide plan cache. Plans are immutable once built, so handing out
/// `Arc` clones is safe under concurrent lookup.
fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let key = (len, matches!(direction, FftDirection::Forward));
    let mut cache = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock();
    cache
        .entry(key)
        .or_insert_with(|| FftPlanner::new().plan_fft(len, direction))
        .clone()
}

/// Unnormalized multi-dimensional complex FFT over a row-major cube.
pub(crate) struct NdFft {
    n: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for NdFft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NdFft")
            .field("n", &self.n)
            .field("dim", &self.dim)
            .finish()
    }
}

impl NdFft {
    pub(crate) fn new(n: usize, dim: usize) -> Self {
        Self {
            n,
            dim,
            forward: plan(n, FftDirection::Forward),
            inverse: plan(n, FftDirection::Inverse),
        }
    }

    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let len = data.len();
        debug_assert_eq!(len, n.pow(self.dim as u32));
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];

        // Last axis is contiguous.
        fft.process_with_scratch(data, &mut scratch);
        if self.dim == 1 {
            return;
        }

        let mut lines = vec![Complex64::default(); len];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let outer = len / (n * stride);
            // Gather every line along `axis` into contiguous storage.
            let mut w = 0;
            for o in 0..outer {
                let base = o * n * stride;
                for i in 0..stride {
                    for k in 0..n {
                        lines[w] = data[base + k * stride + i];
                        w += 1;
                    }
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            let mut r = 0;
            for o in 0..outer {
                let base = o * n * stride;
                for i in 0..stride {
                    for k in 0..n {
                        data[base + k * stride + i] = lines[r];
                        r += 1;
                    }
                }
            }
        }
    }
}
