#pragma once

#include <cmath>

namespace iepb {

/// Brushed DC motor electrical and mechanical constants. The back-EMF and
/// torque constants are equal in SI units; defaults reproduce the rated
/// point 12 V / 4.34 A / 8944 rpm.
struct MotorParams {
    double v_a = 12.0;      ///< battery voltage, V
    double r_a = 0.365;     ///< armature resistance, ohm
    double l_a = 8.3e-4;    ///< armature inductance, H
    double k_e = 0.011;     ///< back-EMF constant, V s/rad
    double k_t = 0.011;     ///< torque constant, N m/A
    double j_m = 4.21e-6;   ///< rotor inertia, kg m^2
    double c_m = 5.0e-5;    ///< viscous damping, N m s/rad
};

/// Reduction chain from motor shaft to screw: belt stage plus two
/// planetary stages, lumped per stage. Efficiencies divide in the
/// forward (apply) direction and multiply in the backward direction.
struct DrivetrainParams {
    double i12 = 3.0;  ///< belt ratio
    double i35 = 6.0;  ///< first planetary ratio
    double i68 = 8.0;  ///< second planetary ratio
    double eta12 = 0.95, eta35 = 0.90, eta68 = 0.90;  ///< forward
    double eta21 = 0.90, eta53 = 0.90, eta86 = 0.90;  ///< backward
    double eta89 = 0.50;  ///< screw pair efficiency

    double j1 = 2.0e-6;       ///< motor-shaft side inertia, kg m^2
    double j_stage2 = 4.0e-6; ///< lumped inertia after the belt stage
    double j_stage3 = 1.0e-5; ///< lumped inertia after the first planetary
    double j_out = 2.0e-5;    ///< screw/output shaft inertia
    double c1 = 1.0e-5, c2 = 1.0e-5, c3 = 1.0e-4;  ///< bearing damping

    double i18() const { return i12 * i35 * i68; }
    double eta_fwd() const { return eta12 * eta35 * eta68; }
    double eta_bwd() const { return eta21 * eta53 * eta86; }
};

/// Lead screw / nut pair. Self-locking requires u_s > tan(gamma).
struct ScrewParams {
    double p_h = 0.002;     ///< lead, m
    double d = 0.008;       ///< mean diameter, m
    double u_s = 0.15;      ///< sliding friction coefficient
    double f_s = 300.0;     ///< max static friction force, N
    double preload_n = 50.0;  ///< seal/guide drag as an axial preload, N

    double lead_angle() const { return std::atan(p_h / (M_PI * d)); }
};

struct CaliperParams {
    double k_c = 1.0e8;    ///< contact stiffness, N/m
    double b_c = 1.0e4;    ///< contact damping, N s/m
    double s_mc = 1.0e-4;  ///< pad-to-disc clearance, m
    double mu_b = 0.35;    ///< pad/disc friction coefficient
    double r = 0.2;        ///< effective disc radius, m
    double s_max = 3.0e-3; ///< nut travel hard stop, m
};

/// Equivalent inertia and damping reflected to the motor shaft, one value
/// per rotation direction.
struct Reduction {
    double j_eq_fwd = 0.0, j_eq_bwd = 0.0;
    double c_eq_fwd = 0.0, c_eq_bwd = 0.0;
};

/// Reflects the lumped stage inertias and dampings to the motor shaft.
/// Throws std::invalid_argument on a nonpositive result.
Reduction reduce_drivetrain(const DrivetrainParams& p);

/// Affine map between clamp force and motor-shaft load torque, pinned once
/// and shared by the plant and the observer-side brake-torque
/// reconstruction so the two agree by construction.
struct LoadTorqueMap {
    double a_fwd = 0.0;   ///< N m per N of axial load, forward (apply)
    double a_bwd = 0.0;   ///< backward (release); negative: the clamp resists
    double preload_n = 0.0;
    double mu_b_r = 0.0;  ///< brake torque per N of clamp force

    static LoadTorqueMap from(const ScrewParams& s, const DrivetrainParams& d,
                              const CaliperParams& c);

    double motor_load(double f_q, double omega_m) const {
        const double ax = f_q + preload_n;
        return omega_m >= 0.0 ? a_fwd * ax : a_bwd * ax;
    }
    double clamp_force_from_load(double t_r) const {
        const double f = t_r / a_fwd - preload_n;
        return f > 0.0 ? f : 0.0;
    }
    double brake_torque_from_load(double t_r) const {
        return mu_b_r * clamp_force_from_load(t_r);
    }
};

struct ActuatorParams {
    MotorParams motor;
    DrivetrainParams drivetrain;
    ScrewParams screw;
    CaliperParams caliper;
    Reduction reduction;   ///< derived, see make_actuator_params
    LoadTorqueMap map;     ///< derived

    double j_n(double omega_m) const {
        return motor.j_m + (omega_m >= 0.0 ? reduction.j_eq_fwd
                                           : reduction.j_eq_bwd);
    }
    double c_n(double omega_m) const {
        return motor.c_m + (omega_m >= 0.0 ? reduction.c_eq_fwd
                                           : reduction.c_eq_bwd);
    }
};

ActuatorParams make_actuator_params(const MotorParams& m,
                                    const DrivetrainParams& d,
                                    const ScrewParams& s,
                                    const CaliperParams& c);

struct ActuatorState {
    double theta_m = 0.0;  ///< motor angle, rad
    double omega_m = 0.0;  ///< motor speed, rad/s
    double i_a = 0.0;      ///< armature current, A
};

struct ScrewOutputs {
    double s_nut = 0.0;   ///< nut position, m
    double f_q = 0.0;     ///< clamp force, N, >= 0
    double t_r = 0.0;     ///< load torque at the motor shaft, N m
    bool travel_limited = false;
};

/// Kinematics plus clamp force and motor-shaft load torque.
ScrewOutputs screw_chain(double omega_m, double theta_m, const ScrewParams& s,
                         const DrivetrainParams& d, const CaliperParams& c);

/// Brake torque from clamp force: T = mu_b * r * F_Q.
double brake_torque(double f_q, const CaliperParams& c);

/// Screw/nut friction force cases: sliding, static hold, breakaway.
double screw_friction(double v, double f_fm, double f_s, double f_sliding);

struct ActuatorDerivs {
    double dtheta = 0.0;
    double domega = 0.0;
    double di = 0.0;
    ScrewOutputs screw;
    double t_epb = 0.0;
};

/// State derivatives at PWM duty u in [-1, 1]. A motor at rest stays at
/// rest while the drive torque is inside the static breakaway band
/// (screw self-locking).
ActuatorDerivs actuator_derivatives(const ActuatorParams& p,
                                    const ActuatorState& s, double duty);

/// One RK4 step of the motor state equations with a held load torque.
/// dt must resolve the electrical time constant (dt <= 1e-4 s).
ActuatorState motor_step(const MotorParams& p, double j_n, double c_n,
                         const ActuatorState& s, double duty, double t_r,
                         double dt);

}  // namespace iepb
