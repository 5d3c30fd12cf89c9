#include "iepb/controllers.hpp"

#include <cmath>
#include <stdexcept>

#include "iepb/filters.hpp"
#include "iepb/observer.hpp"

namespace iepb {

double upper_smc(const UpperInputs& in, const VehicleParams& vp,
                 const UpperGains& g, UpperState& st, double dt) {
    const double e = in.lambda_r - in.lambda_rd;
    const double s = e + g.c_slip * st.integral;
    const double jr = vp.wheel_inertia_rear;
    const double rr = vp.wheel_radius_rear_m;

    // Holding a slip ratio while the car decelerates means the wheel must
    // spin down with it, so the body-deceleration coupling adds to the
    // equilibrium torque rather than subtracting.
    const double raw =
        rr * in.f_xr_model +
        (jr / (rr * vp.mass_kg)) * (1.0 - in.lambda_r) * in.sum_fx_model +
        (jr * in.v_x / rr) *
            (in.dlambda_rd - g.k_d * (in.dlambda_r - in.dlambda_rd) -
             g.c_slip * e - g.eps1 * s - g.eps2 * saturation(s, g.phi_s));

    const double cmd = clamp(raw, 0.0, g.t_max);
    st.clamped = cmd != raw;
    // Integrate unless that would push the command further into a limit:
    // a negative slip error raises the command through -eps1*s.
    const bool windup = (raw > g.t_max && e < 0.0) || (raw < 0.0 && e > 0.0);
    if (!windup) st.integral = clamp(st.integral + e * dt, -g.i_max, g.i_max);
    st.s_r = s;
    return cmd;
}

LowerConstants LowerConstants::from(const ActuatorParams& p) {
    const MotorParams& m = p.motor;
    LowerConstants c;
    c.q1 = m.k_t * m.v_a / m.r_a;
    c.q2_fwd = (m.k_t * m.k_e + p.c_n(1.0) * m.r_a) / m.r_a;
    c.q2_bwd = (m.k_t * m.k_e + p.c_n(-1.0) * m.r_a) / m.r_a;
    c.j_n_fwd = p.j_n(1.0);
    c.j_n_bwd = p.j_n(-1.0);
    c.k_fwd = p.map.mu_b_r / p.map.a_fwd;
    c.k_bwd = p.map.mu_b_r / p.map.a_bwd;
    c.brk_fwd = std::fabs(p.map.a_fwd) * p.screw.f_s / c.q1;
    c.brk_bwd = std::fabs(p.map.a_bwd) * p.screw.f_s / c.q1;
    if (std::fabs(c.q1 * c.k_fwd) < 1e-9 || std::fabs(c.q1 * c.k_bwd) < 1e-9)
        throw std::invalid_argument(
            "degenerate actuator geometry: torque-to-duty branch denominator");
    return c;
}

double lower_smc(const LowerInputs& in, const LowerConstants& c,
                 const LowerGains& g, LowerState& st, double dt) {
    const double e = in.t_hat - in.t_d;
    const double s = g.c_torque * e + st.integral;

    // The feedback always scales by the forward branch magnitude: the
    // motion gain from duty to torque rate is the same both ways, and the
    // self-locking release branch constant would weaken it several-fold.
    const double k_f = std::fabs(c.k_fwd);
    const double fb = (-g.c_torque * (in.dt_hat - in.dt_d) - g.eps3 * s -
                       g.eps4 * saturation(s, g.phi_t)) /
                      (c.q1 * k_f);

    // Self-locking screw: feedback below the level a hold_band torque
    // error would produce parks the motor, the mechanism holds the clamp
    // at zero current. Stalling against the holding feedforward instead
    // would creep and dither around the target.
    const double db = g.eps3 * g.c_torque * g.hold_band / (c.q1 * k_f);
    if (std::fabs(fb) <= db) {
        st.saturated = false;
        st.s_t = s;
        return 0.0;
    }

    // Direction of intended motion picks the branch for the equivalent
    // control; measured speed is unusable here since the motor parks
    // between corrections.
    const bool fwd = fb >= 0.0;
    const double k = fwd ? c.k_fwd : c.k_bwd;
    const double q2 = fwd ? c.q2_fwd : c.q2_bwd;
    const double jn = fwd ? c.j_n_fwd : c.j_n_bwd;

    // The holding feedforward keeps the motor at stall; a correction has
    // to break the screw's static friction on top of that or small bursts
    // never move at low clamp loads and the error builds into a violent
    // one.
    const double brk = fwd ? c.brk_fwd : -c.brk_bwd;
    const double raw = (in.t_d / k +
                        g.ff_speed * (q2 * in.omega_m + jn * in.domega_m)) /
                           c.q1 +
                       brk + fb;

    const double duty = clamp(raw, -1.0, 1.0);
    st.saturated = duty != raw;
    const bool windup = (raw > 1.0 && e < 0.0) || (raw < -1.0 && e > 0.0);
    if (!windup) st.integral = clamp(st.integral + e * dt, -g.i_max, g.i_max);
    st.s_t = s;
    return duty;
}

double pid_baseline(double lambda_r, double lambda_rd, const PidGains& g,
                    PidState& st, double dt) {
    const double e = lambda_rd - lambda_r;
    double de = 0.0;
    if (st.has_prev) de = (e - st.e_prev) / dt;
    st.e_prev = e;
    st.has_prev = true;
    st.d_filt += dt / (g.d_tau + dt) * (de - st.d_filt);

    const double raw = g.kp * e + g.ki * st.integral + g.kd * st.d_filt;
    const double cmd = clamp(raw, 0.0, g.t_max);
    const bool windup = (raw > g.t_max && e > 0.0) || (raw < 0.0 && e < 0.0);
    if (!windup) st.integral += e * dt;
    return cmd;
}

SupervisorMode supervisor(double v_x) {
    if (v_x < kSpeedEps) return SupervisorMode::kStop;
    if (v_x < 1.0) return SupervisorMode::kQuit;
    return SupervisorMode::kActive;
}

}  // namespace iepb
