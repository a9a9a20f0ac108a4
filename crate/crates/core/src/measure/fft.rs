//! Exact integer correlation of 0/1 grids through real FFTs.
//!
//! Both operands are zero-padded per axis to a 7-smooth length large enough
//! that circular wrap-around never reaches the cropped output, transformed
//! with a real-to-complex pass along x and complex passes along y and z,
//! multiplied, and transformed back. Each output is rounded to the nearest
//! integer and the largest pre-rounding distance is reported.

use std::sync::Arc;

use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::voxel::VoxelGrid;

/// Pre-rounding deviation at which transform output is rejected.
pub const DEVIATION_LIMIT: f64 = 0.25;

/// Integer correlation values over the operand frame plus the audit margin.
#[derive(Debug, Clone)]
pub(crate) struct Correlation {
    pub values: Vec<u32>,
    pub max_deviation: f64,
}

/// Smallest `n ≥ target` whose only prime factors are 2, 3, 5 and 7.
pub(crate) fn next_fast_len(target: usize) -> usize {
    let mut n = target.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5, 7] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

struct Plans {
    len: [usize; 3],
    half: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: [Arc<dyn Fft<f64>>; 2],
    inv: [Arc<dyn Fft<f64>>; 2],
}

impl Plans {
    fn new(len: [usize; 3]) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Plans {
            len,
            half: len[0] / 2 + 1,
            r2c: real.plan_fft_forward(len[0]),
            c2r: real.plan_fft_inverse(len[0]),
            fwd: [cplx.plan_fft_forward(len[1]), cplx.plan_fft_forward(len[2])],
            inv: [cplx.plan_fft_inverse(len[1]), cplx.plan_fft_inverse(len[2])],
        }
    }

    fn spectrum_len(&self) -> usize {
        self.half * self.len[1] * self.len[2]
    }

    /// Forward transform of a padded real array (x fastest).
    fn forward(&self, mut real: Vec<f64>) -> Vec<Complex<f64>> {
        let [lx, ly, lz] = self.len;
        let h = self.half;
        let mut spec = vec![Complex::new(0.0, 0.0); self.spectrum_len()];
        real.par_chunks_mut(lx)
            .zip(spec.par_chunks_mut(h))
            .for_each_init(
                || self.r2c.make_scratch_vec(),
                |scratch, (row, out)| {
                    self.r2c
                        .process_with_scratch(row, out, scratch)
                        .expect("row lengths match the plan");
                },
            );
        drop(real);
        self.along_y(&mut spec, &self.fwd[0]);
        self.along_z(&mut spec, &self.fwd[1], ly, lz);
        spec
    }

    /// Inverse transform back to a real array, unnormalized.
    fn inverse(&self, mut spec: Vec<Complex<f64>>) -> Vec<f64> {
        let [lx, ly, lz] = self.len;
        let h = self.half;
        self.along_z(&mut spec, &self.inv[1], ly, lz);
        self.along_y(&mut spec, &self.inv[0]);
        let mut real = vec![0.0; lx * ly * lz];
        spec.par_chunks_mut(h)
            .zip(real.par_chunks_mut(lx))
            .for_each_init(
                || self.c2r.make_scratch_vec(),
                |scratch, (row, out)| {
                    // The DC (and Nyquist) bins of a real signal's spectrum are
                    // real up to round-off; the inverse plan rejects anything else.
                    row[0].im = 0.0;
                    if lx % 2 == 0 {
                        row[h - 1].im = 0.0;
                    }
                    self.c2r
                        .process_with_scratch(row, out, scratch)
                        .expect("row lengths match the plan");
                },
            );
        real
    }

    fn along_y(&self, spec: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        let ly = self.len[1];
        if ly == 1 {
            return;
        }
        let h = self.half;
        spec.par_chunks_mut(h * ly).for_each_init(
            || (vec![Complex::new(0.0, 0.0); h * ly], vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()]),
            |(buf, scratch), plane| {
                for y in 0..ly {
                    for x in 0..h {
                        buf[x * ly + y] = plane[y * h + x];
                    }
                }
                plan.process_with_scratch(buf, scratch);
                for y in 0..ly {
                    for x in 0..h {
                        plane[y * h + x] = buf[x * ly + y];
                    }
                }
            },
        );
    }

    fn along_z(&self, spec: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>, ly: usize, lz: usize) {
        if lz == 1 {
            return;
        }
        let h = self.half;
        let plane = h * ly;
        // Work on blocks of x-columns so each gathered buffer stays small.
        let mut scratch = vec![Complex::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let mut buf = vec![Complex::new(0.0, 0.0); h * lz];
        for y in 0..ly {
            for z in 0..lz {
                let row = &spec[z * plane + y * h..z * plane + y * h + h];
                for x in 0..h {
                    buf[x * lz + z] = row[x];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for z in 0..lz {
                let row = &mut spec[z * plane + y * h..z * plane + y * h + h];
                for x in 0..h {
                    row[x] = buf[x * lz + z];
                }
            }
        }
    }
}

fn padded_len(n: usize, m: usize, anchor: usize) -> usize {
    next_fast_len(n + anchor.max(m - 1 - anchor))
}

/// `out(t) = Σ_k K(k) · A(t + k − anchor)` for every `t` in `a`'s frame.
pub(crate) fn correlate_fft(a: &VoxelGrid, kernel: &VoxelGrid, anchor: [usize; 3]) -> Result<Correlation> {
    let n = a.dims();
    let m = kernel.dims();
    let len = [0, 1, 2].map(|i| padded_len(n[i], m[i], anchor[i]));
    let plans = Plans::new(len);
    let [lx, ly, lz] = len;
    let total = lx * ly * lz;

    let mut pa = vec![0.0f64; total];
    for [x, y, z] in a.occupied_coords() {
        pa[x + lx * (y + ly * z)] = 1.0;
    }
    let mut pk = vec![0.0f64; total];
    for k in kernel.occupied_coords() {
        let s = [0, 1, 2].map(|i| (anchor[i] + len[i] - k[i]) % len[i]);
        pk[s[0] + lx * (s[1] + ly * s[2])] = 1.0;
    }

    let mut spec = plans.forward(pa);
    let kspec = plans.forward(pk);
    spec.par_iter_mut().zip(kspec.par_iter()).for_each(|(s, k)| *s *= *k);
    drop(kspec);
    let real = plans.inverse(spec);

    let scale = 1.0 / total as f64;
    let bound = kernel.count() as f64;
    let [nx, ny, nz] = n;
    let rows: Vec<(Vec<u32>, f64, bool)> = (0..nz)
        .into_par_iter()
        .flat_map_iter(|z| (0..ny).map(move |y| (y, z)))
        .map(|(y, z)| {
            let base = lx * (y + ly * z);
            let mut out = Vec::with_capacity(nx);
            let mut dev = 0.0f64;
            let mut in_range = true;
            for x in 0..nx {
                let v = real[base + x] * scale;
                let r = v.round();
                dev = dev.max((v - r).abs());
                in_range &= (-0.0..=bound).contains(&r) || r == 0.0;
                out.push(r.max(0.0) as u32);
            }
            (out, dev, in_range)
        })
        .collect();

    let mut values = Vec::with_capacity(a.frame().len());
    let mut max_deviation = 0.0f64;
    let mut in_range = true;
    for (row, dev, ok) in rows {
        values.extend_from_slice(&row);
        max_deviation = max_deviation.max(dev);
        in_range &= ok;
    }
    if max_deviation >= DEVIATION_LIMIT || !in_range {
        return Err(Error::Precision { deviation: max_deviation, limit: DEVIATION_LIMIT });
    }
    Ok(Correlation { values, max_deviation })
}

/// Same sum by explicit displacement, for verification and small inputs.
pub(crate) fn correlate_direct(a: &VoxelGrid, kernel: &VoxelGrid, anchor: [usize; 3]) -> Vec<u32> {
    let offsets: Vec<[i64; 3]> = kernel
        .occupied_coords()
        .map(|k| [0, 1, 2].map(|i| k[i] as i64 - anchor[i] as i64))
        .collect();
    let f = *a.frame();
    (0..f.len())
        .into_par_iter()
        .map(|t| {
            let p = f.coords(t).map(|v| v as i64);
            offsets
                .iter()
                .filter(|o| a.get_signed([p[0] + o[0], p[1] + o[1], p[2] + o[2]]))
                .count() as u32
        })
        .collect()
}
