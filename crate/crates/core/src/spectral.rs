//! 2D FFT helpers: periodic Poisson solves and zero-padded linear convolution.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// In-place 2D FFT on a row-major `nx × ny` array (index = j·nx + i).
pub(crate) fn fft2(data: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let row = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    for chunk in data.chunks_exact_mut(nx) {
        row.process(chunk);
    }
    let col = if inverse {
        planner.plan_fft_inverse(ny)
    } else {
        planner.plan_fft_forward(ny)
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            buf[j] = data[j * nx + i];
        }
        col.process(&mut buf);
        for j in 0..ny {
            data[j * nx + i] = buf[j];
        }
    }
    if inverse {
        let scale = 1.0 / (nx * ny) as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }
}

/// Solves `−Δ_h u = f − mean(f)` with periodic closure (5-point Laplacian);
/// the returned `u` has zero mean.
pub(crate) fn poisson_periodic(f: &[f64], nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let mut data: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, nx, ny, false);
    let sx: Vec<f64> = (0..nx)
        .map(|k| (std::f64::consts::PI * k as f64 / nx as f64).sin().powi(2))
        .collect();
    let sy: Vec<f64> = (0..ny)
        .map(|l| (std::f64::consts::PI * l as f64 / ny as f64).sin().powi(2))
        .collect();
    for (l, syl) in sy.iter().enumerate() {
        for (k, sxk) in sx.iter().enumerate() {
            let idx = l * nx + k;
            if k == 0 && l == 0 {
                data[idx] = Complex64::new(0.0, 0.0);
                continue;
            }
            let lambda = 4.0 / (h * h) * (sxk + syl);
            data[idx] /= lambda;
        }
    }
    fft2(&mut data, nx, ny, true);
    data.iter().map(|z| z.re).collect()
}

/// Linear (non-circular) convolution `out[a] = Σ_b src[b]·kernel(a − b)` of a
/// row-major `nx × ny` source with a kernel given on offsets
/// `(−(nx−1)..nx) × (−(ny−1)..ny)`.
pub(crate) fn convolve_offsets(
    src: &[f64],
    nx: usize,
    ny: usize,
    kernel: impl Fn(isize, isize) -> f64,
) -> Vec<f64> {
    let px = (2 * nx).next_power_of_two();
    let py = (2 * ny).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); px * py];
    let mut k = vec![Complex64::new(0.0, 0.0); px * py];
    for j in 0..ny {
        for i in 0..nx {
            a[j * px + i] = Complex64::new(src[j * nx + i], 0.0);
        }
    }
    for dj in -(ny as isize - 1)..(ny as isize) {
        for di in -(nx as isize - 1)..(nx as isize) {
            let ii = di.rem_euclid(px as isize) as usize;
            let jj = dj.rem_euclid(py as isize) as usize;
            k[jj * px + ii] = Complex64::new(kernel(di, dj), 0.0);
        }
    }
    fft2(&mut a, px, py, false);
    fft2(&mut k, px, py, false);
    for (x, y) in a.iter_mut().zip(&k) {
        *x *= *y;
    }
    fft2(&mut a, px, py, true);
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            out[j * nx + i] = a[j * px + i].re;
        }
    }
    out
}
