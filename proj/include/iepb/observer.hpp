#pragma once

#include "iepb/actuator.hpp"

namespace iepb {

/// Sliding-mode observer gains. The correction term is
/// U = k * sat(e1 / phi) with e1 the speed estimate error; k < 0 drives
/// e1 to zero and g < 0 makes the torque error decay at rate |g| / J_n
/// once sliding. Defaults are sized so that |k| exceeds the largest
/// plausible torque error over J_n and the boundary-layer pole k/phi
/// stays inside the 1 ms Euler stability region.
struct ObserverGains {
    double k = -6.0e4;    ///< sliding gain, rad/s^2
    double g = -5.4e-4;   ///< feedback gain; |g|/J_n ~ 80 1/s
    double phi = 33.0;    ///< boundary-layer width, rad/s
    double omega_min = 2.0;  ///< rad/s; below this the load is unobservable
    double t_ctrl = 1e-3; ///< control period, s
};

struct ObserverState {
    double omega_hat = 0.0;  ///< estimated motor speed, rad/s
    double t_r_hat = 0.0;    ///< estimated load torque, N m
    double dir = 1.0;        ///< sign of the last observable motion
    bool flagged = false;    ///< last sample was non-finite; state held
};

/// Piecewise-linear saturation: -1 below -phi, s/phi inside, +1 above.
double saturation(double s, double phi);

/// One forward-Euler observer update from measured motor speed and
/// current. Non-finite measurements freeze the state and flag the sample.
/// Below omega_min the screw self-locks and the armature current no longer
/// reflects the clamp load, so the load estimate is held.
ObserverState smo_step(const ObserverGains& gains, const ObserverState& state,
                       double omega_meas, double i_meas, double j_n,
                       double c_n, double k_t, double dt);

/// Brake torque reconstructed from the estimated load torque through the
/// same clamp-force map the plant uses; the branch follows the direction
/// the estimate was formed in.
double brake_torque_from_load(const ObserverState& state,
                              const LoadTorqueMap& map);

}  // namespace iepb
