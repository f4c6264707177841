//! Dormand–Prince 5(4) with step-size control, for small fixed-size systems.

pub(crate) const N: usize = 3;
pub(crate) type State = [f64; N];

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Underflow {
    pub t: f64,
    pub y: State,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates from `t0` to `t1` landing exactly on `t1`. `h` carries the
/// step-size guess in and the last accepted size out.
pub(crate) fn integrate<F>(mut f: F, t0: f64, t1: f64, y0: State, h: &mut f64, tol: Tolerance) -> Result<State, Underflow>
where
    F: FnMut(f64, &State) -> State,
{
    let span = t1 - t0;
    if span <= 0.0 {
        return Ok(y0);
    }
    let min_step = 1e-12 * span.max(t1.abs());
    let mut t = t0;
    let mut y = y0;
    let mut step = h.min(tol.max_step).min(span).max(min_step);
    let mut k: [State; 7] = [[0.0; N]; 7];
    k[0] = f(t, &y);
    loop {
        let last = t + step >= t1 - 1e-12 * span;
        if last {
            step = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += step * a * kj[i];
                    }
                }
            }
            k[s] = f(t + C[s] * step, &ys);
        }
        let mut y_new = y;
        let mut err = 0.0;
        for i in 0..N {
            let mut hi = 0.0;
            let mut lo = 0.0;
            for s in 0..7 {
                hi += B[s] * k[s][i];
                lo += B_LOW[s] * k[s][i];
            }
            y_new[i] = y[i] + step * hi;
            let scale = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            let e = step * (hi - lo) / scale;
            err += e * e;
        }
        let err = (err / N as f64).sqrt();
        if err <= 1.0 && y_new.iter().all(|v| v.is_finite()) {
            t = if last { t1 } else { t + step };
            y = y_new;
            *h = step;
            if last {
                return Ok(y);
            }
            k[0] = k[6];
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            step = (step * grow).min(tol.max_step);
        } else {
            let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            step *= shrink;
            if step < min_step {
                return Err(Underflow { t, y });
            }
        }
    }
}
