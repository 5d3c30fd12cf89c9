#include "iepb/actuator.hpp"

#include <cmath>
#include <stdexcept>

namespace iepb {

Reduction reduce_drivetrain(const DrivetrainParams& p) {
    const double r2 = p.i12 * p.i12;
    const double r3 = (p.i12 * p.i35) * (p.i12 * p.i35);
    const double r4 = p.i18() * p.i18();

    Reduction out;
    out.j_eq_fwd =
        p.j1 + (1.0 / p.eta12) *
                   (p.j_stage2 / r2 +
                    (1.0 / p.eta35) *
                        (p.j_stage3 / r3 + (1.0 / p.eta68) * p.j_out / r4));
    out.j_eq_bwd =
        p.j1 + p.eta21 * (p.j_stage2 / r2 +
                          p.eta53 * (p.j_stage3 / r3 + p.eta86 * p.j_out / r4));
    out.c_eq_fwd = p.c1 + p.c2 / (p.eta12 * r2) +
                   p.c3 / (p.eta12 * p.eta35 * p.eta68 * r4);
    out.c_eq_bwd = p.c1 + p.eta21 * p.c2 / r2 +
                   p.eta21 * p.eta53 * p.eta86 * p.c3 / r4;
    if (!(out.j_eq_fwd > 0.0) || !(out.j_eq_bwd > 0.0) ||
        !(out.c_eq_fwd > 0.0) || !(out.c_eq_bwd > 0.0))
        throw std::invalid_argument("drivetrain reduction is nonpositive");
    return out;
}

LoadTorqueMap LoadTorqueMap::from(const ScrewParams& s,
                                  const DrivetrainParams& d,
                                  const CaliperParams& c) {
    const double g = s.lead_angle();
    const double sg = std::sin(g), cg = std::cos(g);
    if (!(s.u_s > std::tan(g)))
        throw std::invalid_argument("screw is not self-locking (u_s <= tan(gamma))");

    // Drive-to-load force ratio while sliding, from the inclined-plane
    // equilibrium; the friction force then scales with the axial load.
    const double rho_f = (sg + s.u_s * cg) / (cg - s.u_s * sg);
    const double rho_b = (sg - s.u_s * cg) / (cg + s.u_s * sg);
    const double f_fwd = s.u_s * (rho_f * sg + cg);  // F_f / F_axial, apply
    const double f_bwd = s.u_s * (rho_b * sg + cg);  // release

    LoadTorqueMap m;
    m.a_fwd = (M_PI * s.d * f_fwd + s.p_h) /
              (2.0 * M_PI * d.i18() * d.eta_fwd() * d.eta89);
    m.a_bwd = d.eta_bwd() * (-M_PI * s.d * f_bwd + s.p_h) /
              (2.0 * M_PI * d.i18() * d.eta89);
    m.preload_n = s.preload_n;
    m.mu_b_r = c.mu_b * c.r;
    if (!(m.a_fwd > 0.0))
        throw std::invalid_argument("degenerate screw geometry: forward load map");
    return m;
}

ActuatorParams make_actuator_params(const MotorParams& m,
                                    const DrivetrainParams& d,
                                    const ScrewParams& s,
                                    const CaliperParams& c) {
    ActuatorParams p;
    p.motor = m;
    p.drivetrain = d;
    p.screw = s;
    p.caliper = c;
    p.reduction = reduce_drivetrain(d);
    p.map = LoadTorqueMap::from(s, d, c);
    return p;
}

ScrewOutputs screw_chain(double omega_m, double theta_m, const ScrewParams& s,
                         const DrivetrainParams& d, const CaliperParams& c) {
    const double lead_per_rad = s.p_h / (2.0 * M_PI * d.i18());
    ScrewOutputs out;
    out.s_nut = theta_m * lead_per_rad;
    if (out.s_nut > c.s_max) {
        out.s_nut = c.s_max;
        out.travel_limited = true;
    }
    const double s_dot = omega_m * lead_per_rad;
    out.f_q = c.k_c * (out.s_nut - c.s_mc) + c.b_c * s_dot;
    if (out.f_q < 0.0) out.f_q = 0.0;
    out.t_r = LoadTorqueMap::from(s, d, c).motor_load(out.f_q, omega_m);
    return out;
}

double brake_torque(double f_q, const CaliperParams& c) {
    return c.mu_b * c.r * f_q;
}

double screw_friction(double v, double f_fm, double f_s, double f_sliding) {
    if (v != 0.0) return f_sliding;
    if (std::fabs(f_fm) < f_s) return f_fm;
    return f_s * (f_fm >= 0.0 ? 1.0 : -1.0);
}

ActuatorDerivs actuator_derivatives(const ActuatorParams& p,
                                    const ActuatorState& s, double duty) {
    const MotorParams& m = p.motor;
    ActuatorDerivs d;

    const double lead_per_rad = p.screw.p_h / (2.0 * M_PI * p.drivetrain.i18());
    d.screw.s_nut = s.theta_m * lead_per_rad;
    if (d.screw.s_nut > p.caliper.s_max) {
        d.screw.s_nut = p.caliper.s_max;
        d.screw.travel_limited = true;
    }
    const double s_dot = s.omega_m * lead_per_rad;
    d.screw.f_q =
        p.caliper.k_c * (d.screw.s_nut - p.caliper.s_mc) + p.caliper.b_c * s_dot;
    if (d.screw.f_q < 0.0) d.screw.f_q = 0.0;
    d.screw.t_r = p.map.motor_load(d.screw.f_q, s.omega_m);
    d.t_epb = brake_torque(d.screw.f_q, p.caliper);

    d.dtheta = s.omega_m;
    d.di = (duty * m.v_a - m.k_e * s.omega_m - m.r_a * s.i_a) / m.l_a;

    const double drive = m.k_t * s.i_a;
    if (s.omega_m == 0.0) {
        // Static friction band at rest: [backward breakaway, forward
        // breakaway]. Inside it the self-locking screw holds.
        const double fwd = p.map.motor_load(d.screw.f_q, 1.0);
        const double bwd = p.map.motor_load(d.screw.f_q, -1.0);
        if (drive <= fwd && drive >= bwd) {
            d.domega = 0.0;
            return d;
        }
    }
    if (d.screw.travel_limited && s.omega_m >= 0.0) {
        d.domega = s.omega_m > 0.0 ? -s.omega_m * 1e4 : 0.0;  // hard stop
        return d;
    }
    d.domega =
        (drive - p.c_n(s.omega_m) * s.omega_m - d.screw.t_r) / p.j_n(s.omega_m);
    if (!std::isfinite(d.domega) || !std::isfinite(d.di))
        throw std::runtime_error("non-finite actuator derivative");
    return d;
}

ActuatorState motor_step(const MotorParams& p, double j_n, double c_n,
                         const ActuatorState& s, double duty, double t_r,
                         double dt) {
    if (!(dt > 0.0) || dt > 1.0e-4)
        throw std::invalid_argument(
            "motor_step dt must be in (0, 1e-4] s to resolve the electrical pole");

    auto deriv = [&](const ActuatorState& y, double* out) {
        out[0] = y.omega_m;
        out[1] = (p.k_t * y.i_a - c_n * y.omega_m - t_r) / j_n;
        out[2] = (duty * p.v_a - p.k_e * y.omega_m - p.r_a * y.i_a) / p.l_a;
    };
    auto advance = [](const ActuatorState& y, const double* k, double h) {
        ActuatorState out = y;
        out.theta_m += h * k[0];
        out.omega_m += h * k[1];
        out.i_a += h * k[2];
        return out;
    };

    double k1[3], k2[3], k3[3], k4[3];
    deriv(s, k1);
    deriv(advance(s, k1, dt / 2), k2);
    deriv(advance(s, k2, dt / 2), k3);
    deriv(advance(s, k3, dt), k4);
    ActuatorState out = s;
    out.theta_m += dt / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    out.omega_m += dt / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    out.i_a += dt / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]);
    if (!std::isfinite(out.omega_m) || !std::isfinite(out.i_a))
        throw std::runtime_error("non-finite motor state");
    return out;
}

}  // namespace iepb
