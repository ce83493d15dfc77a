//! Low-threshold-spiking neuron dynamics.
//!
//! The neuron is hyperpolarized while a stimulus is present and rebounds
//! after it ends, driven by the slow adaptation variable:
//!
//! ```text
//! tau_m * dV/dt       = -V + q + g * I_stim
//! (tau_m/eps) * dq/dt = -q + f(V),   f(V) = alpha_n * V  (V < 0)
//!                                           alpha_p      (V >= 0)
//! ```
//!
//! Integrated with explicit forward Euler; both variables update from
//! pre-step values, so a layer of neurons can be stepped in any order.

/// Core dynamics constants. The three presets carry the published values
/// for each data regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtsParams {
    pub tau_m_ms: f64,
    pub epsilon: f64,
    pub alpha_n: f64,
    pub alpha_p: f64,
    pub g: f64,
    pub dt_ms: f64,
}

impl LtsParams {
    pub fn artificial() -> Self {
        Self {
            tau_m_ms: 15.0,
            epsilon: 0.001,
            alpha_n: -200.0,
            alpha_p: -10.0,
            g: 100.0,
            dt_ms: 1.0,
        }
    }

    pub fn vowel() -> Self {
        Self {
            epsilon: 0.01,
            ..Self::artificial()
        }
    }

    pub fn neural() -> Self {
        Self {
            tau_m_ms: 50.0,
            ..Self::artificial()
        }
    }
}

pub const TH_MIN: f64 = 20.0;
pub const TH_MAX: f64 = 3500.0;

/// Per-neuron state: membrane potential, adaptation, threshold, and the
/// voltage change of the most recent step (the WTA "steepness" readout).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtsNeuronState {
    pub v: f64,
    pub q: f64,
    pub th: f64,
    pub last_dv: f64,
}

impl LtsNeuronState {
    pub fn new() -> Self {
        Self {
            v: 0.0,
            q: 0.0,
            th: TH_MIN,
            last_dv: 0.0,
        }
    }
}

impl Default for LtsNeuronState {
    fn default() -> Self {
        Self::new()
    }
}

fn f_of_v(v: f64, p: &LtsParams) -> f64 {
    if v < 0.0 {
        p.alpha_n * v
    } else {
        p.alpha_p
    }
}

/// One Euler step from pre-step values.
pub fn lts_step(state: &LtsNeuronState, i_stim: f64, p: &LtsParams) -> LtsNeuronState {
    let dv = p.dt_ms / p.tau_m_ms * (-state.v + state.q + p.g * i_stim);
    let dq = p.dt_ms * p.epsilon / p.tau_m_ms * (-state.q + f_of_v(state.v, p));
    let v = state.v + dv;
    LtsNeuronState {
        v,
        q: state.q + dq,
        th: state.th,
        // rounded difference of the stored values, so the WTA readout is
        // exactly v_new - v_old
        last_dv: v - state.v,
    }
}

/// Post-spike reset: membrane and adaptation to zero, threshold untouched.
pub fn lts_reset(state: &LtsNeuronState) -> LtsNeuronState {
    LtsNeuronState {
        v: 0.0,
        q: 0.0,
        th: state.th,
        last_dv: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Classical RK4 on the same right-hand side, used as a fine-step
    /// reference trajectory.
    fn rk4_step(v: f64, q: f64, i_stim: f64, p: &LtsParams, h: f64) -> (f64, f64) {
        let rhs = |v: f64, q: f64| {
            (
                (-v + q + p.g * i_stim) / p.tau_m_ms,
                p.epsilon / p.tau_m_ms * (-q + f_of_v(v, p)),
            )
        };
        let (k1v, k1q) = rhs(v, q);
        let (k2v, k2q) = rhs(v + 0.5 * h * k1v, q + 0.5 * h * k1q);
        let (k3v, k3q) = rhs(v + 0.5 * h * k2v, q + 0.5 * h * k2q);
        let (k4v, k4q) = rhs(v + h * k3v, q + h * k3q);
        (
            v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
            q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
        )
    }

    #[test]
    fn quiescent_step_takes_positive_branch_at_zero() {
        // v = 0, q = 0, i = 0: f(0) = alpha_p, so q moves by
        // dt*eps/tau * alpha_p and v stays put.
        let p = LtsParams::artificial();
        let s = lts_step(&LtsNeuronState::new(), 0.0, &p);
        assert_eq!(s.v, 0.0);
        let expected_q = p.dt_ms * p.epsilon / p.tau_m_ms * p.alpha_p;
        assert!((s.q - expected_q).abs() < 1e-15);
        assert_eq!(s.last_dv, 0.0);
    }

    #[test]
    fn constant_inhibition_reaches_analytic_fixed_point() {
        // dV = 0 and dq = 0 with v < 0 give v* = g*i/(1 - alpha_n),
        // q* = alpha_n * v*.
        let p = LtsParams::artificial();
        let i = -1.0;
        let v_star = p.g * i / (1.0 - p.alpha_n);
        let q_star = p.alpha_n * v_star;
        assert!((v_star - (-100.0 / 201.0)).abs() < 1e-12);
        let mut s = LtsNeuronState::new();
        for _ in 0..100_000 {
            s = lts_step(&s, i, &p);
        }
        assert!(
            (s.v - v_star).abs() / v_star.abs() < 0.01,
            "v = {}, v* = {v_star}",
            s.v
        );
        assert!((s.q - q_star).abs() / q_star.abs() < 0.01);
    }

    #[test]
    fn rebound_after_inhibition_crosses_zero_upward() {
        let p = LtsParams::artificial();
        let mut s = LtsNeuronState::new();
        // >= 5 tau_m of constant negative drive
        for _ in 0..(10.0 * p.tau_m_ms) as usize {
            s = lts_step(&s, -1.0, &p);
        }
        assert!(s.v < 0.0);
        assert!(s.q > 0.0, "adaptation must be positive to drive a rebound");
        let mut crossed = false;
        for _ in 0..(10.0 * p.tau_m_ms) as usize {
            let prev = s.v;
            s = lts_step(&s, 0.0, &p);
            if prev < 0.0 && s.v >= 0.0 {
                crossed = true;
                break;
            }
        }
        assert!(crossed, "no upward zero crossing within 10 tau_m");
    }

    /// Runs the Euler trajectory at `dt` against RK4 at h = dt/100 and
    /// returns (v error, q error), each sup-normalized by its trajectory
    /// scale, measured from `skip` steps onward.
    fn euler_vs_rk4(dt: f64, steps: usize, skip: usize) -> (f64, f64) {
        let p = LtsParams {
            dt_ms: dt,
            ..LtsParams::artificial()
        };
        let h = dt / 100.0;
        let mut euler = LtsNeuronState::new();
        let (mut v_ref, mut q_ref) = (0.0f64, 0.0f64);
        let (mut max_dv, mut max_dq) = (0.0f64, 0.0f64);
        let (mut v_scale, mut q_scale) = (0.0f64, 0.0f64);
        for n in 0..steps {
            euler = lts_step(&euler, -1.0, &p);
            for _ in 0..100 {
                let (nv, nq) = rk4_step(v_ref, q_ref, -1.0, &p, h);
                v_ref = nv;
                q_ref = nq;
            }
            v_scale = v_scale.max(v_ref.abs());
            q_scale = q_scale.max(q_ref.abs());
            if n >= skip {
                max_dv = max_dv.max((euler.v - v_ref).abs());
                max_dq = max_dq.max((euler.q - q_ref).abs());
            }
        }
        (max_dv / v_scale, max_dq / q_scale)
    }

    #[test]
    fn euler_matches_fine_rk4_within_one_percent() {
        // 1000-step inhibition trajectory at dt = 1 ms vs RK4 at h = 0.01 ms,
        // measured once the 3*tau_m startup layer has washed out. The
        // adaptation variable is held to 1% over the whole trajectory.
        let p = LtsParams::artificial();
        let skip = (3.0 * p.tau_m_ms) as usize;
        let (v_err, q_err) = euler_vs_rk4(1.0, 1000, skip);
        assert!(v_err <= 0.01, "v error {v_err}");
        assert!(q_err <= 0.01, "q error {q_err}");
        let (_, q_full) = euler_vs_rk4(1.0, 1000, 0);
        assert!(q_full <= 0.01, "full-range q error {q_full}");
    }

    #[test]
    fn euler_error_shrinks_with_the_step() {
        // first-order convergence: halving dt roughly halves the full-range
        // error, and at dt = 0.25 ms even the startup layer is within 1%
        let (e1, _) = euler_vs_rk4(1.0, 1000, 0);
        let (e05, _) = euler_vs_rk4(0.5, 2000, 0);
        let (e025, _) = euler_vs_rk4(0.25, 4000, 0);
        assert!(e05 < e1 && e025 < e05, "{e1} {e05} {e025}");
        assert!(e025 <= 0.01, "dt=0.25 error {e025}");
    }

    #[test]
    fn linear_regime_matches_eigen_solution() {
        // While v stays negative the system is linear:
        //   x' = A (x - x*) with x = (v, q).
        // Solve by eigendecomposition and compare the Euler trajectory.
        let p = LtsParams::artificial();
        let i = -1.0;
        let a11 = -1.0 / p.tau_m_ms;
        let a12 = 1.0 / p.tau_m_ms;
        let a21 = p.epsilon * p.alpha_n / p.tau_m_ms;
        let a22 = -p.epsilon / p.tau_m_ms;
        let v_star = p.g * i / (1.0 - p.alpha_n);
        let q_star = p.alpha_n * v_star;
        // eigenvalues of [[a11, a12], [a21, a22]]
        let tr = a11 + a22;
        let det = a11 * a22 - a12 * a21;
        let disc = tr * tr - 4.0 * det;
        assert!(disc > 0.0, "artificial preset has real eigenvalues");
        let l1 = (tr + disc.sqrt()) / 2.0;
        let l2 = (tr - disc.sqrt()) / 2.0;
        // eigenvectors (a12, l - a11)
        let ev1 = (a12, l1 - a11);
        let ev2 = (a12, l2 - a11);
        // initial offset from the fixed point: x0 = (0,0)
        let (dv0, dq0) = (-v_star, -q_star);
        // solve c1*ev1 + c2*ev2 = (dv0, dq0)
        let det_e = ev1.0 * ev2.1 - ev2.0 * ev1.1;
        let c1 = (dv0 * ev2.1 - ev2.0 * dq0) / det_e;
        let c2 = (ev1.0 * dq0 - dv0 * ev1.1) / det_e;

        let mut euler = LtsNeuronState::new();
        let mut max_err_v = 0.0f64;
        let mut scale_v = 0.0f64;
        let skip = (3.0 * p.tau_m_ms) as usize;
        for n in 1..=1000 {
            euler = lts_step(&euler, i, &p);
            assert!(euler.v < 0.0, "trajectory must stay in the linear regime");
            let t = n as f64 * p.dt_ms;
            let e1 = (l1 * t).exp();
            let e2 = (l2 * t).exp();
            let v_exact = v_star + c1 * ev1.0 * e1 + c2 * ev2.0 * e2;
            scale_v = scale_v.max(v_exact.abs());
            if n >= skip {
                max_err_v = max_err_v.max((euler.v - v_exact).abs());
            }
        }
        assert!(
            max_err_v / scale_v < 0.01,
            "relative error {}",
            max_err_v / scale_v
        );
    }

    #[test]
    fn bounded_over_a_million_steps() {
        for p in [
            LtsParams::artificial(),
            LtsParams::vowel(),
            LtsParams::neural(),
        ] {
            let mut s = LtsNeuronState::new();
            for n in 0..1_000_000usize {
                // bounded, sign-varying stimulus
                let i = if (n / 500) % 3 == 0 { -2.0 } else { 0.0 };
                s = lts_step(&s, i, &p);
                assert!(s.v.is_finite() && s.q.is_finite());
                assert!(s.v.abs() < 1e6 && s.q.abs() < 1e6);
            }
        }
    }

    #[test]
    fn last_dv_is_exact_difference() {
        let p = LtsParams::vowel();
        let mut s = LtsNeuronState::new();
        for n in 0..200 {
            let prev_v = s.v;
            s = lts_step(&s, if n % 2 == 0 { -0.5 } else { 0.0 }, &p);
            assert_eq!(s.last_dv, s.v - prev_v);
        }
    }

    #[test]
    fn reset_zeroes_dynamics_and_keeps_threshold() {
        let p = LtsParams::artificial();
        let mut s = LtsNeuronState::new();
        s.th = 157.3;
        for _ in 0..50 {
            s = lts_step(&s, -1.0, &p);
        }
        let r = lts_reset(&s);
        assert_eq!((r.v, r.q, r.last_dv), (0.0, 0.0, 0.0));
        assert_eq!(r.th, 157.3);
        assert_eq!(lts_reset(&r), r, "reset is idempotent");
    }
}
