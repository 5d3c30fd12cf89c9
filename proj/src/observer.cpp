#include "iepb/observer.hpp"

#include <cmath>
#include <stdexcept>

namespace iepb {

double saturation(double s, double phi) {
    if (!(phi > 0.0)) throw std::invalid_argument("saturation: phi must be > 0");
    if (s < -phi) return -1.0;
    if (s > phi) return 1.0;
    return s / phi;
}

ObserverState smo_step(const ObserverGains& gains, const ObserverState& state,
                       double omega_meas, double i_meas, double j_n,
                       double c_n, double k_t, double dt) {
    if (!std::isfinite(omega_meas) || !std::isfinite(i_meas)) {
        ObserverState frozen = state;
        frozen.flagged = true;
        return frozen;
    }
    ObserverState next = state;
    next.flagged = false;
    const double e1 = state.omega_hat - omega_meas;
    const double u = gains.k * saturation(e1, gains.phi);
    next.omega_hat += dt * ((k_t * i_meas - c_n * state.omega_hat -
                             state.t_r_hat) / j_n + u);
    if (std::fabs(omega_meas) >= gains.omega_min) {
        next.t_r_hat += dt * gains.g * u;
        next.dir = omega_meas >= 0.0 ? 1.0 : -1.0;
    }
    return next;
}

double brake_torque_from_load(const ObserverState& state,
                              const LoadTorqueMap& map) {
    const double a = state.dir >= 0.0 ? map.a_fwd : map.a_bwd;
    const double f = state.t_r_hat / a - map.preload_n;
    return map.mu_b_r * (f > 0.0 ? f : 0.0);
}

}  // namespace iepb
