#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace iepb {

/// Below this vehicle speed the run is treated as stopped.
inline constexpr double kSpeedEps = 0.1;  // m/s

/// Wheel indexing used throughout: fl, fr, rl, rr.
enum Wheel { kFL = 0, kFR = 1, kRL = 2, kRR = 3 };

struct VehicleParams {
    double mass_kg = 2100.0;
    double cg_to_front_m = 1.16;   ///< a, front axle to centre of gravity
    double cg_to_rear_m = 1.64;    ///< b, centre of gravity to rear axle
    double cg_height_m = 0.55;
    double wheel_radius_front_m = 0.327;
    double wheel_radius_rear_m = 0.327;
    double wheel_inertia_front = 1.7;  ///< kg m^2
    double wheel_inertia_rear = 1.7;   ///< kg m^2
    double gravity = 9.81;

    double wheelbase_m() const { return cg_to_front_m + cg_to_rear_m; }
    double radius(int wheel) const {
        return wheel < 2 ? wheel_radius_front_m : wheel_radius_rear_m;
    }
    double inertia(int wheel) const {
        return wheel < 2 ? wheel_inertia_front : wheel_inertia_rear;
    }
};

struct VehicleState {
    double v_x = 0.0;  ///< m/s, >= 0
    double x = 0.0;    ///< m
    std::array<double, 4> omega{};  ///< rad/s, >= 0
    double a_x_prev = 0.0;  ///< previous-step acceleration, breaks the load loop
};

struct AxleLoads {
    double fzf = 0.0;  ///< N per front wheel
    double fzr = 0.0;  ///< N per rear wheel
    bool clamped = false;  ///< a negative load was clamped to zero
};

/// Quasi-static per-wheel axle loads at signed acceleration a_x (v_dot).
AxleLoads axle_loads(const VehicleParams& p, double a_x);

/// Slip ratio in [0, 1]; braking and driving branches, with both speeds
/// below kSpeedEps mapping to zero.
double slip_ratio(double v_x, double omega, double radius);

struct WheelTorques {
    double t_b = 0.0;    ///< hydraulic brake torque, N m
    double t_w = 0.0;    ///< drive torque (front wheels), N m
    double t_epb = 0.0;  ///< parking-brake actuator torque (rear wheels), N m
};

struct VehicleDerivs {
    double dv_x = 0.0;
    double dx = 0.0;
    std::array<double, 4> domega{};
    std::array<double, 4> fx{};      ///< road forces, N, positive when braking
    std::array<double, 4> slip{};
    AxleLoads loads;
};

/// Plant derivatives. Forces and torques are magnitudes; this assembly is
/// the single place braking signs are applied: the road force decelerates
/// the body and spins the wheel up, brake torques spin it down.
/// TyreFn signature: double(double slip, double fz_n, double mu).
template <class TyreFn>
VehicleDerivs vehicle_derivatives(const VehicleParams& p, const VehicleState& s,
                                  const std::array<WheelTorques, 4>& torques,
                                  TyreFn&& tyre, double mu_front,
                                  double mu_rear) {
    VehicleDerivs d;
    d.loads = axle_loads(p, s.a_x_prev);
    double sum_fx = 0.0;
    for (int w = 0; w < 4; ++w) {
        const bool front = w < 2;
        const double r = p.radius(w);
        const double fz = front ? d.loads.fzf : d.loads.fzr;
        const double lam = slip_ratio(s.v_x, s.omega[w], r);
        // Branch sign: under braking slip the road force decelerates the
        // body and spins the wheel toward synchronous speed; under driving
        // slip (wheel faster than ground) both effects reverse.
        const double sgn = s.v_x >= s.omega[w] * r ? 1.0 : -1.0;
        const double fx = sgn * tyre(lam, fz, front ? mu_front : mu_rear);
        d.slip[w] = lam;
        d.fx[w] = fx;
        sum_fx += fx;

        const double brake = torques[w].t_b + (front ? 0.0 : torques[w].t_epb);
        const double drive = front ? torques[w].t_w : 0.0;
        double dom = (fx * r - brake + drive) / p.inertia(w);
        // Wheel stiction: a stopped wheel stays stopped while the brake
        // torque covers the road torque.
        if (s.omega[w] <= 0.0 && dom < 0.0) dom = 0.0;
        d.domega[w] = dom;
        if (!std::isfinite(dom))
            throw std::runtime_error("non-finite wheel acceleration");
    }
    d.dv_x = -sum_fx / p.mass_kg;
    if (s.v_x <= 0.0 && d.dv_x < 0.0) d.dv_x = 0.0;
    d.dx = s.v_x;
    if (!std::isfinite(d.dv_x))
        throw std::runtime_error("non-finite vehicle acceleration");
    return d;
}

}  // namespace iepb
