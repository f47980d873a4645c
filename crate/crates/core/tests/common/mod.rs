//! Shared helpers for the integration tests: an adaptive Runge–Kutta oracle
//! for the recombination kinetics and the simulation windows used by the
//! reference runs.

#![allow(dead_code)]

use phcomm_core::analytic::{self, ImpulseSpec};
use phcomm_core::chem::{ChannelParams, IonPair, Species};
use phcomm_core::fdm::{Grid1D, IonField};

/// Default grid spacing, cm.
pub const DX: f64 = 1e-3;

/// Receiver distances, cm.
pub const NEAR: f64 = 0.09;
pub const FAR: f64 = 0.2;

/// Flow velocities, cm/s.
pub const VELOCITIES: [f64; 3] = [0.0, 1e-3, 5e-3];

/// Domain and duration wide enough that the Dirichlet ends do not disturb
/// the receiver for a release at x = 0.
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub distance: f64,
    pub velocity: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub t_end: f64,
}

impl Window {
    pub fn grid(&self, dx: f64) -> Grid1D {
        Grid1D::new(self.x_min, self.x_max, dx).unwrap()
    }
}

pub fn window(distance: f64, velocity: f64) -> Window {
    let (x_min, x_max, t_end) = match (distance == NEAR, velocity) {
        (true, 0.0) => (-0.3, 0.5, 200.0),
        (true, v) if v <= 1e-3 => (-0.3, 0.8, 200.0),
        (true, _) => (-0.3, 1.5, 200.0),
        (false, 0.0) => (-0.6, 1.0, 600.0),
        (false, v) if v <= 1e-3 => (-0.5, 1.4, 600.0),
        (false, _) => (-0.3, 2.2, 300.0),
    };
    Window {
        distance,
        velocity,
        x_min,
        x_max,
        t_end,
    }
}

/// Field holding the free-space profile of an acid pulse `elapsed` seconds
/// after a point release at x = 0.
pub fn analytic_acid_field(grid: &Grid1D, params: &ChannelParams, moles: f64, elapsed: f64) -> IonField {
    let spec = ImpulseSpec::for_species(Species::Acid, moles, 1.0, params).unwrap();
    let profile = analytic::spatial_profile(&spec, elapsed).unwrap();
    let bg = params.background();
    let mut field = IonField::background(grid, params);
    for (j, c) in field.c_h.iter_mut().enumerate() {
        *c = bg + analytic::molar_from_density(profile.density(grid.x(j)), 1, params.cross_section);
    }
    field
}

pub fn gaussian(x: f64, center: f64, sigma: f64, peak: f64) -> f64 {
    let z = (x - center) / sigma;
    peak * (-0.5 * z * z).exp()
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `y' = f(t, y)` from `t0` to `t1` with step-size control on the
/// componentwise error `|e_i| ≤ atol + rtol·|y_i|`.
pub fn dopri45<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t1: f64,
    rtol: f64,
    atol: f64,
) -> [f64; N] {
    let mut t = t0;
    let mut y = y0;
    let mut h = (t1 - t0) * 1e-6;
    let mut steps = 0usize;
    while t < t1 {
        h = h.min(t1 - t);
        let mut k = [[0.0; N]; 7];
        k[0] = f(t, &y);
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                ys[i] += h * (0..s).map(|m| A[s][m] * k[m][i]).sum::<f64>();
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let inc5: f64 = (0..7).map(|s| B5[s] * k[s][i]).sum();
            let inc4: f64 = (0..7).map(|s| B4[s] * k[s][i]).sum();
            y5[i] += h * inc5;
            let scale = atol + rtol * y[i].abs().max(y5[i].abs());
            err = err.max((h * (inc5 - inc4)).abs() / scale);
        }
        if err <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        steps += 1;
        assert!(steps < 10_000_000, "oracle failed to converge");
    }
    y
}

/// Reference solution of `dh/dt = do/dt = −k_f·h·o + k_r` over `dt`.
pub fn reaction_oracle(state: IonPair, dt: f64, params: &ChannelParams) -> IonPair {
    let (k_f, k_r) = (params.k_f, params.k_r);
    let rhs = |_t: f64, y: &[f64; 2]| {
        let rate = -k_f * y[0] * y[1] + k_r;
        [rate, rate]
    };
    let [c_h, c_oh] = dopri45(rhs, 0.0, [state.c_h, state.c_oh], dt, 1e-13, 1e-300);
    IonPair { c_h, c_oh }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
