//! Exact squared Euclidean distance transform (Felzenszwalb–Huttenlocher).

const INF: f64 = 1e20;
const NEG_INF: f64 = -1e30;

fn transform_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0;
    v[0] = 0;
    z[0] = NEG_INF;
    z[1] = INF;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            // z[0] = −∞ stops the loop at k = 0
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = INF;
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Squared distance, in cell units, from each cell to the nearest cell where
/// `inside` is false. Cells outside the grid count as "not inside".
pub fn squared_distance_to_complement(inside: &[bool], nx: usize, ny: usize) -> Vec<f64> {
    // pad by one ring of background cells so the grid exterior is the complement
    let (px, py) = (nx + 2, ny + 2);
    let mut g = vec![0.0; px * py];
    for j in 0..ny {
        for i in 0..nx {
            if inside[j * nx + i] {
                g[(j + 1) * px + i + 1] = INF;
            }
        }
    }
    let m = px.max(py);
    let (mut f, mut d) = (vec![0.0; m], vec![0.0; m]);
    let (mut v, mut z) = (vec![0usize; m], vec![0.0; m + 1]);
    for i in 0..px {
        for j in 0..py {
            f[j] = g[j * px + i];
        }
        transform_1d(&f[..py], &mut d[..py], &mut v, &mut z);
        for j in 0..py {
            g[j * px + i] = d[j];
        }
    }
    for j in 0..py {
        f[..px].copy_from_slice(&g[j * px..(j + 1) * px]);
        transform_1d(&f[..px], &mut d[..px], &mut v, &mut z);
        g[j * px..(j + 1) * px].copy_from_slice(&d[..px]);
    }
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            out[j * nx + i] = g[(j + 1) * px + i + 1];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_brute_force() {
        let (nx, ny) = (13, 9);
        let inside: Vec<bool> = (0..nx * ny)
            .map(|k| {
                let (i, j) = ((k % nx) as i64, (k / nx) as i64);
                (i - 6) * (i - 6) + (j - 4) * (j - 4) < 14 || (i == 1 && j == 1)
            })
            .collect();
        let fast = squared_distance_to_complement(&inside, nx, ny);
        for j in 0..ny as i64 {
            for i in 0..nx as i64 {
                let mut best = f64::INFINITY;
                for b in -1..=ny as i64 {
                    for a in -1..=nx as i64 {
                        let outside = a < 0
                            || b < 0
                            || a >= nx as i64
                            || b >= ny as i64
                            || !inside[(b as usize) * nx + a as usize];
                        if outside {
                            best = best.min(((a - i).pow(2) + (b - j).pow(2)) as f64);
                        }
                    }
                }
                assert_eq!(fast[j as usize * nx + i as usize], best, "cell {i},{j}");
            }
        }
    }
}
