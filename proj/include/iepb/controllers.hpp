#pragma once

#include "iepb/actuator.hpp"
#include "iepb/vehicle.hpp"

namespace iepb {

/// Slip-loop sliding-mode gains. Surface s_r = e + c_slip * integral(e).
struct UpperGains {
    double c_slip = 4.0;   ///< 1/s
    double eps1 = 40.0;    ///< 1/s, proportional reaching gain
    double eps2 = 1.5;     ///< 1/s, switching gain
    double phi_s = 0.05;   ///< boundary-layer width in slip units
    /// Slip-rate damping weight, s. The actuator takes tens of ms to
    /// slew or reverse, so pure slip-error feedback crosses the target
    /// with momentum; braking against the measured slip rate arrests
    /// that. The rate filter is deliberately slower than the actuator
    /// loop: at a weight above one, an unfiltered rate term would close a
    /// resonant loop with it.
    double k_d = 0.85;
    /// Damping weight used at crawl speeds, where the divergence is
    /// fastest and the correction cycle can no longer resonate within the
    /// remaining stopping time.
    double k_d_lo = 1.5;
    double i_max = 1.0;    ///< slip-error integral clamp, s
    double t_max = 1400.0; ///< actuator torque command ceiling, N m
};

struct UpperState {
    double integral = 0.0;
    double s_r = 0.0;      ///< last surface value, for the trace
    bool clamped = false;  ///< last command hit a limit
};

struct UpperInputs {
    double lambda_r = 0.0;
    double lambda_rd = 0.0;
    double dlambda_r = 0.0;   ///< filtered measured slip rate
    double dlambda_rd = 0.0;  ///< filtered target derivative
    double v_x = 0.0;
    double f_xr_model = 0.0;  ///< model rear tyre force per wheel, N
    double sum_fx_model = 0.0;  ///< model total longitudinal force, N
};

/// Slip-error to brake-torque command; the equivalent-control terms use
/// the controller-side tyre model, the reaching terms the surface.
/// Output clamped to [0, t_max] with conditional integration.
double upper_smc(const UpperInputs& in, const VehicleParams& vp,
                 const UpperGains& g, UpperState& st, double dt);

/// Torque-loop sliding-mode gains. Surface s_T = c_torque * e + integral(e).
struct LowerGains {
    double c_torque = 0.3;   ///< s
    double eps3 = 100.0;     ///< 1/s
    double eps4 = 5.0;       ///< N m scale switching gain
    double phi_t = 5.0;      ///< boundary-layer width, N m
    double i_max = 3.0;      ///< torque-error integral clamp, N m s
    /// Torque errors inside this band park the motor: the self-locking
    /// screw holds the clamp at zero current, while stalling against the
    /// holding feedforward would creep and dither around the target.
    double hold_band = 7.0;  ///< N m
    /// Weight of the measured-speed feedforward k(Q2 w + Jn dw). At 1 it
    /// cancels the armature's back-EMF damping, which leaves the loop a
    /// marginally damped double integrator; 0 keeps the natural damping.
    double ff_speed = 0.0;
};

struct LowerState {
    double integral = 0.0;
    double s_t = 0.0;
    bool saturated = false;
};

/// Branch constants of the quasi-steady motor-to-brake-torque map
/// (armature inductance neglected), shared with the plant's load map.
struct LowerConstants {
    double q1 = 0.0;     ///< k_t V_a / R_a
    double q2_fwd = 0.0; ///< (k_t k_e + c_n R_a) / R_a, forward c_n
    double q2_bwd = 0.0;
    double j_n_fwd = 0.0, j_n_bwd = 0.0;
    double k_fwd = 0.0;  ///< brake torque per motor load torque, apply
    double k_bwd = 0.0;  ///< release branch; negative
    /// Duty equivalent of the screw's static breakaway friction per
    /// direction; a correction burst adds it so the motor actually moves.
    double brk_fwd = 0.0, brk_bwd = 0.0;

    static LowerConstants from(const ActuatorParams& p);
};

struct LowerInputs {
    double t_hat = 0.0;     ///< observed brake torque, N m
    double t_d = 0.0;       ///< desired brake torque, N m
    double dt_d = 0.0;      ///< filtered derivative of the target
    double dt_hat = 0.0;    ///< filtered derivative of the observed torque
    double omega_m = 0.0;
    double domega_m = 0.0;  ///< filtered motor acceleration
};

/// Torque-error to PWM duty in [-1, 1], branch chosen on motor direction.
double lower_smc(const LowerInputs& in, const LowerConstants& c,
                 const LowerGains& g, LowerState& st, double dt);

/// Baseline PID on slip error for the controller comparison.
struct PidGains {
    double kp = 3000.0;  ///< N m per unit slip error
    double ki = 8000.0;
    double kd = 30.0;
    double d_tau = 0.01;   ///< derivative filter time constant, s
    double t_max = 1400.0;
};

struct PidState {
    double integral = 0.0;
    double d_filt = 0.0;
    double e_prev = 0.0;
    bool has_prev = false;
};

double pid_baseline(double lambda_r, double lambda_rd, const PidGains& g,
                    PidState& st, double dt);

/// ABS supervision: slip control below 1 m/s is forced to quit (full
/// apply, wheel lock permitted); below kSpeedEps the run stops.
enum class SupervisorMode { kActive, kQuit, kStop };

SupervisorMode supervisor(double v_x);

}  // namespace iepb
