mod common;

use ndarray::Array2;
use pat_atten::wavefield::*;
use std::f64::consts::PI;

fn circle(radius: f64, count: usize) -> SensorArray {
    SensorArray::new(Geometry::Circle { radius, count }).unwrap()
}

fn raster(n: usize, half_extent: f64, f: impl Fn(f64, f64) -> f64) -> Phantom {
    let spacing = 2.0 * half_extent / n as f64;
    let o = -half_extent + 0.5 * spacing;
    Phantom {
        spacing,
        origin: [o, o],
        values: Array2::from_shape_fn((n, n), |(iy, ix)| f(o + ix as f64 * spacing, o + iy as f64 * spacing)),
        ellipses: None,
    }
}

/// J_0(x) = (1/π)∫_0^π cos(x sin θ) dθ; the trapezoid rule on this periodic
/// integrand converges geometrically once the node count exceeds x/2.
fn bessel_j0(x: f64) -> f64 {
    let m = 64 + x.abs().ceil() as usize;
    let h = PI / m as f64;
    let s: f64 = (0..m).map(|i| (x * (i as f64 * h).sin()).cos()).sum();
    s / m as f64
}

/// Free-space solution for h = e^{−r²/(2s²)}: p(t, r) = s²∫ e^{−s²k²/2}cos(kt)J_0(kr) k dk.
fn gaussian_pressure(s: f64, t: f64, r: f64) -> f64 {
    let k_max = 12.0 / s;
    let m = 6000;
    let dk = k_max / m as f64;
    let mut acc = 0.0;
    for i in 1..=m {
        let k = i as f64 * dk;
        let w = if i == m { 0.5 } else { 1.0 };
        acc += w * (-0.5 * s * s * k * k).exp() * (k * t).cos() * bessel_j0(k * r) * k;
    }
    s * s * acc * dk
}

#[test]
fn gaussian_traces_match_hankel_solution() {
    let s = 0.15;
    let ph = raster(128, 1.0, |x, y| (-(x * x + y * y) / (2.0 * s * s)).exp());
    let time = TimeGrid::new(3.0, 60).unwrap();
    let sensors = circle(1.2, 8);
    let p = spectral_forward(&ph, &time, &sensors, ForwardOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..time.n {
        let want = gaussian_pressure(s, time.t(i), 1.2);
        peak = peak.max(want.abs());
        for j in [0, 3] {
            worst = worst.max((p.values[[i, j]] - want).abs());
        }
    }
    // the only approximation left is bilinear sampling between grid nodes
    assert!(worst <= 5e-3 * peak, "max deviation {worst:e} vs peak {peak:e}");
}

#[test]
fn eight_sensor_traces_share_the_disk_symmetry() {
    let ph = make_disk(0.5, 1.0, 96, 1.0).unwrap();
    let time = TimeGrid::new(3.0, 120).unwrap();
    let p = spectral_forward(&ph, &time, &circle(1.3, 8), ForwardOptions::default()).unwrap();
    let scale = p.max_abs();
    // axis sensors (0, 2, 4, 6) and diagonal sensors (1, 3, 5, 7) are each one orbit of the square's symmetry group
    for orbit in [[0usize, 2, 4, 6], [1, 3, 5, 7]] {
        for &j in &orbit[1..] {
            for i in 0..time.n {
                let d = (p.values[[i, j]] - p.values[[i, orbit[0]]]).abs();
                assert!(d <= 1e-8 * scale, "sensor {j} row {i}: {d:e}");
            }
        }
    }
}

#[test]
fn energy_is_conserved() {
    let ph = make_shepp_logan(64, 1.0).unwrap();
    let e0 = spectral_energy(&ph.values, ph.spacing, 0.0).unwrap();
    for t in [0.3, 1.7, 5.0] {
        let e = spectral_energy(&ph.values, ph.spacing, t).unwrap();
        assert!((e - e0).abs() <= 1e-10 * e0, "t = {t}");
    }
}

#[test]
fn propagate_at_zero_is_identity() {
    let ph = make_disk(0.4, 2.0, 32, 1.0).unwrap();
    let (p, q) = propagate(&ph.values, ph.spacing, 0.0).unwrap();
    for (a, b) in p.iter().zip(ph.values.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(q.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn signal_respects_finite_speed() {
    let r0 = 0.3;
    let ph = raster(128, 1.0, |x, y| {
        let u = 1.0 - (x * x + y * y) / (r0 * r0);
        if u > 0.0 {
            u.powi(8)
        } else {
            0.0
        }
    });
    let time = TimeGrid::new(3.0, 300).unwrap();
    let p = spectral_forward(&ph, &time, &circle(1.5, 8), ForwardOptions::default()).unwrap();
    let scale = p.max_abs();
    let arrival = 1.5 - r0;
    for i in 0..time.n {
        if time.t(i) < arrival - 0.05 {
            for j in 0..8 {
                assert!(p.values[[i, j]].abs() <= 1e-4 * scale, "t = {} sensor {j}", time.t(i));
            }
        }
    }
    assert!(scale > 0.0);
}

#[test]
fn padding_keeps_wraparound_out_of_the_window() {
    let ph = make_disk(0.3, 1.0, 64, 1.0).unwrap();
    let time = TimeGrid::new(6.0, 100).unwrap();
    let sensors = circle(1.7, 16);
    let n = padded_grid_size(&ph, &time, &sensors, 4);
    let side = n as f64 * ph.spacing;
    assert!(side > time.t_final() + 1.7 + ph.support_radius());
    // a larger grid changes nothing once no periodic image arrives in time
    let a = spectral_forward(&ph, &time, &sensors, ForwardOptions::default()).unwrap();
    let b = spectral_forward(
        &ph,
        &time,
        &sensors,
        ForwardOptions {
            grid_size: Some(n + 64),
            ..Default::default()
        },
    )
    .unwrap();
    let d = a
        .values
        .iter()
        .zip(b.values.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(d <= 1e-3 * a.max_abs(), "{d:e}");
}

#[test]
fn sensor_outside_the_domain_is_rejected() {
    let ph = make_disk(0.3, 1.0, 32, 1.0).unwrap();
    let time = TimeGrid::new(1.0, 10).unwrap();
    let r = spectral_forward(
        &ph,
        &time,
        &circle(5.0, 8),
        ForwardOptions {
            grid_size: Some(40),
            ..Default::default()
        },
    );
    assert!(r.is_err());
}

#[test]
fn ball_oracle_integrates_its_pressure() {
    let (r0, d) = (0.6, 1.7);
    let m = 20_000;
    let dt = 3.0 / m as f64;
    let mut acc = 0.0;
    let mut prev = ball_nwave_pressure(r0, d, 0.0);
    for i in 1..=m {
        let t = i as f64 * dt;
        let cur = ball_nwave_pressure(r0, d, t);
        acc += 0.5 * (prev + cur) * dt;
        prev = cur;
        if i % 1000 == 0 {
            assert!((acc - ball_nwave_integrated(r0, d, t)).abs() < 1e-4, "t = {t}");
        }
    }
}

#[test]
fn fibonacci_weights_cover_the_sphere() {
    let s = fibonacci_sphere(2.0, 500);
    let area: f64 = s.weights.iter().sum();
    assert!((area - 16.0 * PI).abs() < 1e-10);
    let mean: [f64; 3] = (0..3)
        .map(|c| s.normals.iter().map(|n| n[c]).sum::<f64>() / 500.0)
        .collect::<Vec<_>>()
        .try_into()
        .unwrap();
    assert!(mean.iter().all(|m| m.abs() < 1e-2));
}
