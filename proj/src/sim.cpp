#include "iepb/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

#include "iepb/filters.hpp"

namespace iepb {

void ScenarioSpec::validate() const {
    auto fail = [](const std::string& what) {
        throw std::invalid_argument("scenario: " + what);
    };
    if (!(v0_mps >= 0.0) || !std::isfinite(v0_mps)) fail("v0_mps must be >= 0");
    if (!(duration_s > 0.0)) fail("duration_s must be > 0");
    if (road.empty()) fail("road schedule must have at least one segment");
    if (road.front().t_s != 0.0) fail("road: first segment must start at t_s = 0");
    for (std::size_t i = 0; i < road.size(); ++i) {
        if (i > 0 && !(road[i].t_s > road[i - 1].t_s))
            fail("road: segment times must be strictly increasing");
        if (!(road[i].mu >= 0.05 && road[i].mu <= 1.2))
            fail("road: mu must be within [0.05, 1.2]");
    }
    if (!(dt_plant_s > 0.0) || !(t_ctrl_s > 0.0))
        fail("dt_plant_s and t_ctrl_s must be > 0");
    const double ratio = t_ctrl_s / dt_plant_s;
    if (std::fabs(ratio - std::round(ratio)) > 1e-9 * ratio)
        fail("dt_plant_s must divide t_ctrl_s exactly");
    if (!(vehicle.mass_kg > 0.0)) fail("vehicle.mass_kg must be > 0");
    if (!(vehicle.cg_to_front_m > 0.0 && vehicle.cg_to_rear_m > 0.0))
        fail("vehicle geometry: cg distances must be > 0");
    if (!(vehicle.cg_height_m > 0.0)) fail("vehicle.cg_height_m must be > 0");
    if (!(observer.g < 0.0)) fail("observer.g must be < 0");
    if (!(observer.phi > 0.0)) fail("observer.phi must be > 0");
    if (!(upper.eps1 >= 0.0 && upper.eps2 >= 0.0))
        fail("upper gains eps1, eps2 must be >= 0");
    if (!(lower.eps3 >= 0.0 && lower.eps4 >= 0.0))
        fail("lower gains eps3, eps4 must be >= 0");
    if (!(screw.u_s > std::tan(screw.lead_angle())))
        fail("screw must be self-locking: u_s > tan(lead angle)");
}

double road_mu(const std::vector<RoadSegment>& schedule, double t) {
    double mu = schedule.front().mu;
    for (const auto& seg : schedule) {
        if (t >= seg.t_s) mu = seg.mu;
        else break;
    }
    return mu;
}

namespace {

constexpr int kNumAct = 2;  // rear-left, rear-right

/// Minimum inverted clamp force for the observer trim, N. The load map's
/// force sensitivity degrades toward low loads, where seal preload and
/// observer ripple are a large fraction of the signal; trimming there
/// injects more position error than it removes.
constexpr double kTrimMinForce = 5.0e3;

struct PlantState {
    VehicleState veh;
    std::array<ActuatorState, kNumAct> act;
};

struct PlantOutputs {
    VehicleDerivs veh;
    std::array<ScrewOutputs, kNumAct> screw;
    std::array<double, kNumAct> t_epb{};
};

PlantOutputs plant_outputs(const ScenarioSpec& spec, const ActuatorParams& ap,
                           const PlantState& s, double mu) {
    PlantOutputs o;
    std::array<WheelTorques, 4> tq{};
    for (int a = 0; a < kNumAct; ++a) {
        const ActuatorDerivs d = actuator_derivatives(ap, s.act[a], 0.0);
        o.screw[a] = d.screw;
        o.t_epb[a] = d.t_epb;
        tq[kRL + a].t_epb = o.t_epb[a];
    }
    o.veh = vehicle_derivatives(
        spec.vehicle, s.veh, tq,
        [&](double slip, double fz, double m) {
            return tyre_force(spec.tyre, slip, fz, m);
        },
        mu, mu);
    return o;
}

struct PlantDerivs {
    VehicleDerivs veh;
    std::array<ActuatorDerivs, kNumAct> act;
};

PlantDerivs plant_derivs(const ScenarioSpec& spec, const ActuatorParams& ap,
                         const PlantState& s,
                         const std::array<double, kNumAct>& duty,
                         const std::array<bool, kNumAct>& stuck, double mu) {
    PlantDerivs d;
    std::array<WheelTorques, 4> tq{};
    for (int a = 0; a < kNumAct; ++a) {
        d.act[a] = actuator_derivatives(ap, s.act[a], duty[a]);
        if (stuck[a]) {
            d.act[a].dtheta = 0.0;
            d.act[a].domega = 0.0;
        }
        tq[kRL + a].t_epb = d.act[a].t_epb;
    }
    d.veh = vehicle_derivatives(
        spec.vehicle, s.veh, tq,
        [&](double slip, double fz, double m) {
            return tyre_force(spec.tyre, slip, fz, m);
        },
        mu, mu);
    return d;
}

PlantState plant_advance(const PlantState& s, const PlantDerivs& d, double h) {
    PlantState out = s;
    out.veh.v_x += h * d.veh.dv_x;
    out.veh.x += h * d.veh.dx;
    for (int w = 0; w < 4; ++w) out.veh.omega[w] += h * d.veh.domega[w];
    for (int a = 0; a < kNumAct; ++a) {
        out.act[a].theta_m += h * d.act[a].dtheta;
        out.act[a].omega_m += h * d.act[a].domega;
        out.act[a].i_a += h * d.act[a].di;
    }
    return out;
}

PlantState combine_rk4(const PlantState& s, const PlantDerivs& k1,
                       const PlantDerivs& k2, const PlantDerivs& k3,
                       const PlantDerivs& k4, double dt) {
    PlantState out = s;
    auto mix = [&](double a, double b, double c, double d) {
        return dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
    };
    out.veh.v_x += mix(k1.veh.dv_x, k2.veh.dv_x, k3.veh.dv_x, k4.veh.dv_x);
    out.veh.x += mix(k1.veh.dx, k2.veh.dx, k3.veh.dx, k4.veh.dx);
    for (int w = 0; w < 4; ++w)
        out.veh.omega[w] += mix(k1.veh.domega[w], k2.veh.domega[w],
                                k3.veh.domega[w], k4.veh.domega[w]);
    for (int a = 0; a < kNumAct; ++a) {
        out.act[a].theta_m += mix(k1.act[a].dtheta, k2.act[a].dtheta,
                                  k3.act[a].dtheta, k4.act[a].dtheta);
        out.act[a].omega_m += mix(k1.act[a].domega, k2.act[a].domega,
                                  k3.act[a].domega, k4.act[a].domega);
        out.act[a].i_a +=
            mix(k1.act[a].di, k2.act[a].di, k3.act[a].di, k4.act[a].di);
    }
    return out;
}

// Per-actuator control-side state.
struct ActuatorLoop {
    ObserverState smo;
    LowerState lower;
    double f_hat = 0.0;  ///< clamp-force estimate, N
    double s_hat = 0.0;  ///< nut-position estimate, m
    int fwd_samples = 0; ///< consecutive observable forward-motion samples
    FilteredDerivative d_omega{0.003};
    FilteredDerivative d_t_hat{0.003};
    FilteredDerivative d_f_smo{0.003};
};

}  // namespace

RunResult run(const ScenarioSpec& spec) {
    spec.validate();
    RunResult res;

    const ActuatorParams ap = make_actuator_params(spec.motor, spec.drivetrain,
                                                   spec.screw, spec.caliper);
    const LowerConstants lc = LowerConstants::from(ap);
    const TyreCurve curve = build_default_lookup(spec.tyre);
    const AxleLoads static_loads = axle_loads(spec.vehicle, 0.0);

    EstimatorConfig est_cfg = spec.estimator;
    est_cfg.t_ctrl = spec.t_ctrl_s;
    if (est_cfg.k1 <= 0.0) {
        const EstimatorConfig d =
            EstimatorConfig::from_tyre(curve, static_loads.fzr);
        est_cfg.k1 = d.k1;
        est_cfg.delta1 = d.delta1;
        est_cfg.delta2 = d.delta2;
        est_cfg.delta3 = d.delta3;
        est_cfg.delta4 = d.delta4;
    }
    FrictionEstimator estimator(est_cfg);

    const int n_upper = spec.per_wheel_control ? kNumAct : 1;
    std::array<UpperState, kNumAct> upper_st{};
    std::array<PidState, kNumAct> pid_st{};
    std::array<ActuatorLoop, kNumAct> loops{};
    FilteredDerivative d_vx(0.01);
    FilteredDerivative d_lambda_d(0.01);
    // Slow filter for the measured-force anchor in the holding
    // feedforward: only its DC level is wanted, a fast path would couple
    // the slip oscillation straight back into the torque command. The
    // held value decays on its own time constant so that a slip dip,
    // which momentarily reads as lost deceleration, cannot feed a matching
    // dip back into the command; a genuine surface change still bleeds
    // off within a few tenths of a second.
    LowPass fx_anchor(0.2);
    double fx_anchor_held = 0.0;
    // Two slip-rate filters, blended on speed. The wheel diverges beyond
    // the force peak at a rate that grows as speed drops, so near the end
    // of a stop the damping term needs the fast estimate or it lags the
    // divergence it is supposed to arrest. At speed the divergence is
    // slow and the fast estimate instead resonates with the actuator
    // correction cycle, so the slow one takes over.
    std::array<FilteredDerivative, kNumAct> d_lambda_fast{
        FilteredDerivative(0.006), FilteredDerivative(0.006)};
    std::array<FilteredDerivative, kNumAct> d_lambda_slow{
        FilteredDerivative(0.03), FilteredDerivative(0.03)};

    std::array<FilteredDerivative, kNumAct> d_t_cmd{FilteredDerivative(0.003),
                                                    FilteredDerivative(0.003)};

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const bool noisy = spec.noise_vx_std > 0.0 || spec.noise_omega_std > 0.0;

    PlantState plant;
    plant.veh.v_x = spec.v0_mps;
    for (int w = 0; w < 4; ++w)
        plant.veh.omega[w] = spec.v0_mps / spec.vehicle.radius(w);

    const int substeps =
        static_cast<int>(std::llround(spec.t_ctrl_s / spec.dt_plant_s));
    const long n_ctrl =
        static_cast<long>(std::llround(spec.duration_s / spec.t_ctrl_s));
    const double dt = spec.dt_plant_s;

    std::array<double, kNumAct> duty{0.0, 0.0};
    std::array<double, kNumAct> t_cmd{0.0, 0.0};
    std::array<double, kNumAct> t_hat{0.0, 0.0};

    try {
        for (long k = 0; k <= n_ctrl; ++k) {
            const double t = static_cast<double>(k) * spec.t_ctrl_s;
            const double mu = road_mu(spec.road, t);

            // --- measurements ---
            double v_meas = plant.veh.v_x;
            std::array<double, 4> omega_meas = plant.veh.omega;
            if (noisy) {
                v_meas += spec.noise_vx_std * gauss(rng);
                for (auto& w : omega_meas)
                    w += spec.noise_omega_std * gauss(rng);
            }
            const double dv = d_vx.update(v_meas, spec.t_ctrl_s);

            std::array<double, 4> lam{};
            for (int w = 0; w < 4; ++w)
                lam[w] =
                    slip_ratio(v_meas, omega_meas[w], spec.vehicle.radius(w));
            const double lambda_r = 0.5 * (lam[kRL] + lam[kRR]);

            // --- observer per actuator ---
            const double lead =
                ap.screw.p_h / (2.0 * M_PI * ap.drivetrain.i18());
            const double f_cap =
                ap.caliper.k_c * (ap.caliper.s_max - ap.caliper.s_mc);
            std::array<double, kNumAct> dt_hat_f{};
            std::array<double, kNumAct> domega_f{};
            for (int a = 0; a < kNumAct; ++a) {
                auto& lp = loops[a];
                const double wm = plant.act[a].omega_m;
                lp.smo = smo_step(spec.observer, lp.smo, wm, plant.act[a].i_a,
                                  ap.j_n(wm), ap.c_n(wm), ap.motor.k_t,
                                  spec.t_ctrl_s);
                // Clamp-force estimate: the nut position follows from the
                // counted motor angle through the screw kinematics, which
                // handles the clearance crossing exactly; the load observer
                // trims slow drift while the motor moves forward (the only
                // branch with usable sensitivity).
                const double f_smo =
                    ap.map.clamp_force_from_load(lp.smo.t_r_hat);
                lp.s_hat = clamp(lp.s_hat + lead * wm * spec.t_ctrl_s, 0.0,
                                 ap.caliper.s_max);
                // The load estimate needs a few time constants to reconverge
                // after a reversal, so the trim waits out sustained forward
                // motion instead of snapping to a stale value. While moving,
                // the first-order load adaptation lags the ramping clamp
                // force by its time constant J_n/|g|; state + tau*rate
                // reconstructs the tracked input. The ramp rate comes from
                // the screw kinematics, which is smooth, rather than from a
                // differentiated observer output.
                const double f_rate = ap.caliper.k_c * lead * wm;
                const double tau_smo =
                    ap.j_n(wm) / std::fabs(spec.observer.g);
                lp.fwd_samples =
                    wm >= spec.observer.omega_min ? lp.fwd_samples + 1 : 0;
                if (lp.fwd_samples * spec.t_ctrl_s >= 0.03 &&
                    lp.s_hat > ap.caliper.s_mc && f_smo > kTrimMinForce) {
                    const double s_smo =
                        ap.caliper.s_mc +
                        (f_smo + tau_smo * f_rate) / ap.caliper.k_c;
                    lp.s_hat += 0.02 * (s_smo - lp.s_hat);
                }
                lp.f_hat = clamp(
                    ap.caliper.k_c * (lp.s_hat - ap.caliper.s_mc), 0.0, f_cap);
                t_hat[a] = brake_torque(lp.f_hat, ap.caliper);
                dt_hat_f[a] = lp.d_t_hat.update(t_hat[a], spec.t_ctrl_s);
                domega_f[a] = lp.d_omega.update(wm, spec.t_ctrl_s);
            }

            // --- friction estimator ---
            // Rear tyre force reconstructed from the measured deceleration:
            // the front wheels are unbraked and carry no slip, so the body
            // force is the rear-axle force.
            const AxleLoads est_loads = axle_loads(spec.vehicle, dv);
            const double fx_rear_meas =
                std::max(0.0, -dv) * spec.vehicle.mass_kg / 2.0;
            fx_anchor.update(fx_rear_meas, spec.t_ctrl_s);
            fx_anchor_held = std::max(
                fx_anchor.value(),
                fx_anchor_held * (1.0 - spec.t_ctrl_s / 0.5));
            estimator.step(fx_rear_meas, est_loads.fzr, lambda_r);
            const double mu_hat = estimator.mu_hat();
            const double lambda_d = estimator.lambda_d();
            const double dlam_d = d_lambda_d.update(lambda_d, spec.t_ctrl_s);

            // --- supervision + upper loop ---
            const SupervisorMode mode = supervisor(plant.veh.v_x);
            std::uint32_t flags = 0;
            if (estimator.state().flagged) flags |= kFlagFzGuard;

            const double mu_model = clamp(mu_hat, 0.05, 1.2);
            for (int u = 0; u < n_upper; ++u) {
                const double lam_u =
                    spec.per_wheel_control ? lam[kRL + u] : lambda_r;
                const double dlam_fast =
                    d_lambda_fast[u].update(lam_u, spec.t_ctrl_s);
                const double dlam_slow =
                    d_lambda_slow[u].update(lam_u, spec.t_ctrl_s);
                const double w_fast = clamp((4.0 - v_meas) / 2.0, 0.0, 1.0);
                const double dlam_u =
                    w_fast * dlam_fast + (1.0 - w_fast) * dlam_slow;
                UpperGains ug = spec.upper;
                ug.k_d += w_fast * (spec.upper.k_d_lo - spec.upper.k_d);

                if (mode == SupervisorMode::kActive) {
                    if (spec.controller == ControllerKind::kSmc) {
                        UpperInputs in;
                        in.lambda_r = lam_u;
                        in.lambda_rd = lambda_d;
                        in.dlambda_r = dlam_u;

                        in.dlambda_rd = dlam_d;
                        in.v_x = v_meas;
                        // The holding feedforward is evaluated at the target
                        // slip, not the measured one: around the flat force
                        // peak a measured-slip feedforward is self-consistent
                        // at any slip and the loop loses its DC stiffness.
                        // The friction estimate reads utilized friction and
                        // sits a few percent under the peak, so the model
                        // force is floored at the measured rear-axle force;
                        // that anchor removes the standing shortfall the
                        // integral term would otherwise have to carry, which
                        // matters once its authority shrinks with speed.
                        in.f_xr_model =
                            std::max(tyre_force(spec.tyre, lambda_d,
                                                est_loads.fzr, mu_model),
                                     fx_anchor_held);
                        in.sum_fx_model =
                            tyre_force(spec.tyre, lam[kFL], est_loads.fzf, mu_model) +
                            tyre_force(spec.tyre, lam[kFR], est_loads.fzf, mu_model) +
                            tyre_force(spec.tyre, lam[kRL], est_loads.fzr, mu_model) +
                            tyre_force(spec.tyre, lam[kRR], est_loads.fzr, mu_model);
                        t_cmd[u] = upper_smc(in, spec.vehicle, ug,
                                             upper_st[u], spec.t_ctrl_s);
                        if (upper_st[u].clamped) flags |= kFlagUpperClamp;
                    } else {
                        t_cmd[u] = pid_baseline(lam_u, lambda_d, spec.pid,
                                                pid_st[u], spec.t_ctrl_s);
                    }
                } else {
                    t_cmd[u] = spec.upper.t_max;  // forced full apply
                    flags |= kFlagQuit;
                }
            }
            if (n_upper == 1) t_cmd[1] = t_cmd[0];

            // --- lower loop per actuator ---
            for (int a = 0; a < kNumAct; ++a) {
                const int u = spec.per_wheel_control ? a : 0;
                const double dtd =
                    d_t_cmd[a].update(t_cmd[u], spec.t_ctrl_s);
                if (mode == SupervisorMode::kActive) {
                    LowerInputs in;
                    in.t_hat = t_hat[a];
                    in.t_d = t_cmd[u];
                    in.dt_d = dtd;
                    in.dt_hat = dt_hat_f[a];
                    in.omega_m = plant.act[a].omega_m;
                    in.domega_m = domega_f[a];
                    // The slip loop's correction requests shrink with speed
                    // (they scale with J v / R), so the parking band shrinks
                    // with them or it would swallow the low-speed commands.
                    LowerGains lg = spec.lower;
                    lg.hold_band *= clamp(v_meas / 10.0, 0.1, 1.0);
                    duty[a] = lower_smc(in, lc, lg, loops[a].lower,
                                        spec.t_ctrl_s);
                    if (loops[a].lower.saturated) flags |= kFlagDutySat;
                } else {
                    duty[a] = 1.0;
                }
            }

            // --- trace ---
            const PlantOutputs out = plant_outputs(spec, ap, plant, mu);
            if (out.veh.loads.clamped) flags |= kFlagLoadClamp;
            for (int a = 0; a < kNumAct; ++a)
                if (out.screw[a].travel_limited) flags |= kFlagTravelLimit;
            const bool locked =
                std::min(plant.veh.omega[kRL], plant.veh.omega[kRR]) <= 0.5 &&
                plant.veh.v_x > 1.0;
            if (locked) flags |= kFlagLock;

            TraceRecord rec;
            rec.t = t;
            rec.v_x = plant.veh.v_x;
            rec.x = plant.veh.x;
            rec.omega_rl = plant.veh.omega[kRL];
            rec.omega_rr = plant.veh.omega[kRR];
            rec.lambda_r = lambda_r;
            rec.lambda_rd = lambda_d;
            rec.mu_true = mu;
            rec.mu_hat = mu_hat;
            rec.t_cmd = t_cmd[0];
            rec.t_act = out.t_epb[0];
            rec.t_hat = t_hat[0];
            rec.f_q = out.screw[0].f_q;
            rec.i_a = plant.act[0].i_a;
            rec.omega_m = plant.act[0].omega_m;
            rec.duty = duty[0];
            rec.s_r = spec.controller == ControllerKind::kSmc ? upper_st[0].s_r
                                                              : 0.0;
            rec.s_t = loops[0].lower.s_t;
            rec.flags = flags;
            res.trace.push_back(rec);

            if (mode == SupervisorMode::kStop || k == n_ctrl) break;

            // --- plant integration over one control period ---
            for (int sub = 0; sub < substeps; ++sub) {
                const double mu_sub =
                    road_mu(spec.road, t + sub * dt);
                std::array<bool, kNumAct> stuck{};
                for (int a = 0; a < kNumAct; ++a) {
                    const auto& st = plant.act[a];
                    if (st.omega_m == 0.0) {
                        const auto d0 = actuator_derivatives(ap, st, duty[a]);
                        stuck[a] = d0.domega == 0.0;
                    }
                }
                const double v_before = plant.veh.v_x;
                const PlantDerivs k1 =
                    plant_derivs(spec, ap, plant, duty, stuck, mu_sub);
                const PlantDerivs k2 = plant_derivs(
                    spec, ap, plant_advance(plant, k1, dt / 2), duty, stuck,
                    mu_sub);
                const PlantDerivs k3 = plant_derivs(
                    spec, ap, plant_advance(plant, k2, dt / 2), duty, stuck,
                    mu_sub);
                const PlantDerivs k4 = plant_derivs(
                    spec, ap, plant_advance(plant, k3, dt), duty, stuck,
                    mu_sub);
                PlantState next = combine_rk4(plant, k1, k2, k3, k4, dt);

                // state constraints and stiction snapping
                if (next.veh.v_x < 0.0) next.veh.v_x = 0.0;
                for (int w = 0; w < 4; ++w)
                    if (next.veh.omega[w] < 0.0) next.veh.omega[w] = 0.0;
                for (int a = 0; a < kNumAct; ++a) {
                    auto& st = next.act[a];
                    if (stuck[a]) {
                        st.theta_m = plant.act[a].theta_m;
                        st.omega_m = 0.0;
                    } else if (plant.act[a].omega_m != 0.0 &&
                               st.omega_m * plant.act[a].omega_m < 0.0) {
                        st.omega_m = 0.0;  // zero crossing; stiction recheck
                    }
                    if (st.theta_m < 0.0) {  // home hard stop
                        st.theta_m = 0.0;
                        if (st.omega_m < 0.0) st.omega_m = 0.0;
                    }
                }
                next.veh.a_x_prev = (next.veh.v_x - v_before) / dt;
                plant = next;
            }
        }
    } catch (const std::exception& e) {
        res.aborted = true;
        res.abort_reason = e.what();
    }

    res.metrics = compute_metrics(res.trace, spec);
    return res;
}

namespace {

struct Window {
    std::size_t begin = 0, end = 0;  // record index range
    bool valid() const { return end > begin; }
};

}  // namespace

RunMetrics compute_metrics(const std::vector<TraceRecord>& trace,
                           const ScenarioSpec& spec) {
    RunMetrics m;
    if (trace.empty()) return m;

    m.stopping_distance_m = trace.back().x;
    m.stop_time_s = trace.back().t;
    m.stopped = trace.back().v_x < kSpeedEps;

    const double dt = spec.t_ctrl_s;
    const long hold_n = std::lround(0.2 / dt);

    // lock onsets while v > 1
    bool was_locked = false;
    for (const auto& r : trace) {
        const bool locked = (r.flags & kFlagLock) != 0;
        if (locked && !was_locked) ++m.lock_events;
        was_locked = locked;
    }

    // segment boundaries from the road schedule
    std::vector<double> bounds;
    for (const auto& seg : spec.road)
        if (seg.t_s <= trace.back().t) bounds.push_back(seg.t_s);
    bounds.push_back(trace.back().t + dt);

    double worst_duty_rev = 0.0;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b) {
        SegmentMetrics sm;
        sm.t_start = bounds[b];
        sm.t_end = bounds[b + 1];
        sm.mu = road_mu(spec.road, sm.t_start);

        // Steady-state windows end where slip-control authority ends: the
        // wheel's divergence rate beyond the force peak grows as 1/v and
        // passes the actuator-plus-filter loop bandwidth near 1.5 m/s, so
        // the last moments before the low-speed quit are a terminal
        // transient, not steady state.
        constexpr double kSteadyVmin = 1.5;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < trace.size(); ++i) {
            const auto& r = trace[i];
            if (r.t >= sm.t_start && r.t < sm.t_end &&
                !(r.flags & kFlagQuit) && r.v_x >= kSteadyVmin)
                idx.push_back(i);
        }
        if (idx.size() < 50) {
            m.segments.push_back(sm);
            continue;
        }

        // slip-error band over the last 20% of the segment
        double band = 0.0;
        const std::size_t tail = idx.size() / 5;
        for (std::size_t j = idx.size() - tail; j < idx.size(); ++j) {
            const auto& r = trace[idx[j]];
            band += std::fabs(r.lambda_r - r.lambda_rd);
        }
        band /= static_cast<double>(tail);
        const double thresh = std::max(2.0 * band, 1e-3);

        // transient end: error stays below the threshold for 0.2 s
        std::size_t start_j = idx.size();
        long run_len = 0;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const auto& r = trace[idx[j]];
            if (std::fabs(r.lambda_r - r.lambda_rd) < thresh)
                ++run_len;
            else
                run_len = 0;
            if (run_len >= hold_n) {
                start_j = j - static_cast<std::size_t>(hold_n) + 1;
                break;
            }
        }
        if (start_j >= idx.size()) start_j = idx.size() - idx.size() / 3;
        else sm.has_steady = true;
        sm.transient_end_s = trace[idx[start_j]].t;

        double slip_err = 0.0, mu_err = 0.0, tq_err = 0.0, smo_err = 0.0;
        int reversals = 0;
        double prev_duty = 0.0;
        bool have_duty = false;
        for (std::size_t j = start_j; j < idx.size(); ++j) {
            const auto& r = trace[idx[j]];
            if (r.lambda_rd > 1e-6)
                slip_err = std::max(
                    slip_err, std::fabs(r.lambda_r - r.lambda_rd) / r.lambda_rd);
            if (r.mu_true > 1e-6)
                mu_err = std::max(mu_err,
                                  std::fabs(r.mu_hat - r.mu_true) / r.mu_true);
            if (r.t_cmd > 50.0)
                tq_err = std::max(tq_err,
                                  std::fabs(r.t_act - r.t_cmd) / r.t_cmd);
            if (r.t_act > 50.0)
                smo_err = std::max(smo_err,
                                   std::fabs(r.t_hat - r.t_act) / r.t_act);
            if (std::fabs(r.duty) > 0.02) {
                if (have_duty && r.duty * prev_duty < 0.0) ++reversals;
                prev_duty = r.duty;
                have_duty = true;
            }
        }
        sm.steady_slip_err_rel = slip_err;
        sm.steady_mu_err_rel = mu_err;
        sm.steady_torque_err_rel = tq_err;
        sm.steady_smo_err_rel = smo_err;
        const double steady_span =
            trace[idx.back()].t - trace[idx[start_j]].t;
        if (steady_span > 0.0)
            worst_duty_rev =
                std::max(worst_duty_rev, reversals / steady_span);

        // mu re-convergence after the segment start
        const double target = sm.mu;
        const long hold_mu = std::lround(0.1 / dt);
        long run_mu = 0;
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const auto& r = trace[idx[j]];
            if (std::fabs(r.mu_hat - target) / target <= 0.10)
                ++run_mu;
            else
                run_mu = 0;
            if (run_mu >= hold_mu) {
                sm.mu_reconv_s =
                    trace[idx[j - static_cast<std::size_t>(hold_mu) + 1]].t -
                    sm.t_start;
                break;
            }
        }

        if (sm.has_steady) {
            m.steady_slip_err_rel =
                std::max(m.steady_slip_err_rel, sm.steady_slip_err_rel);
            m.steady_mu_err_rel =
                std::max(m.steady_mu_err_rel, sm.steady_mu_err_rel);
            m.steady_torque_err_rel =
                std::max(m.steady_torque_err_rel, sm.steady_torque_err_rel);
            m.steady_smo_err_rel =
                std::max(m.steady_smo_err_rel, sm.steady_smo_err_rel);
        }
        m.segments.push_back(sm);
    }
    m.duty_reversals_per_s = worst_duty_rev;

    // max slip error over active control
    for (const auto& r : trace)
        if (!(r.flags & kFlagQuit))
            m.max_slip_err =
                std::max(m.max_slip_err, std::fabs(r.lambda_r - r.lambda_rd));

    // Lyapunov decrease checks over active unclamped samples: inside the
    // boundary layer the reaching condition holds trivially, outside it
    // s * s_dot must be non-positive. Samples where the command clamps or
    // the duty saturates are excluded (the reaching law assumes its output
    // is realized), as is the low-speed terminal transient.
    auto lyap = [&](auto surf, double phi, std::uint32_t clamp_flag) {
        constexpr double kSteadyVmin = 1.5;
        long active = 0, violations = 0;
        for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
            const auto& a = trace[i];
            const auto& b = trace[i + 1];
            if ((a.flags | b.flags) & (kFlagQuit | kFlagDutySat | clamp_flag))
                continue;
            if (a.v_x < kSteadyVmin) continue;
            ++active;
            const double s = surf(a);
            if (std::fabs(s) <= phi) continue;
            const double sdot = (surf(b) - s) / dt;
            if (s * sdot > 1e-12) ++violations;
        }
        return active > 0 ? static_cast<double>(violations) / active : 0.0;
    };
    if (spec.controller == ControllerKind::kSmc)
        m.lyap_violation_upper =
            lyap([](const TraceRecord& r) { return r.s_r; }, spec.upper.phi_s,
                 kFlagUpperClamp);
    m.lyap_violation_lower =
        lyap([](const TraceRecord& r) { return r.s_t; }, spec.lower.phi_t,
             kFlagDutySat);
    return m;
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
    std::string out =
        "t,v_x,x,omega_rl,omega_rr,lambda_r,lambda_rd,mu_true,mu_hat,"
        "t_cmd,t_act,t_hat,f_q,i_a,omega_m,duty,s_r,s_t,flags\n";
    char buf[512];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof(buf),
                      "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                      "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%u\n",
                      r.t, r.v_x, r.x, r.omega_rl, r.omega_rr, r.lambda_r,
                      r.lambda_rd, r.mu_true, r.mu_hat, r.t_cmd, r.t_act,
                      r.t_hat, r.f_q, r.i_a, r.omega_m, r.duty, r.s_r, r.s_t,
                      r.flags);
        out += buf;
    }
    return out;
}

std::string metrics_text(const RunMetrics& m) {
    std::ostringstream os;
    os.precision(9);
    os << "stopping_distance_m = " << m.stopping_distance_m << "\n"
       << "stop_time_s = " << m.stop_time_s << "\n"
       << "stopped = " << (m.stopped ? 1 : 0) << "\n"
       << "max_slip_err = " << m.max_slip_err << "\n"
       << "steady_slip_err_rel = " << m.steady_slip_err_rel << "\n"
       << "steady_mu_err_rel = " << m.steady_mu_err_rel << "\n"
       << "steady_torque_err_rel = " << m.steady_torque_err_rel << "\n"
       << "steady_smo_err_rel = " << m.steady_smo_err_rel << "\n"
       << "lock_events = " << m.lock_events << "\n"
       << "lyap_violation_upper = " << m.lyap_violation_upper << "\n"
       << "lyap_violation_lower = " << m.lyap_violation_lower << "\n"
       << "duty_reversals_per_s = " << m.duty_reversals_per_s << "\n";
    for (std::size_t i = 0; i < m.segments.size(); ++i) {
        const auto& s = m.segments[i];
        os << "segment." << i << ".mu = " << s.mu << "\n"
           << "segment." << i << ".t_start_s = " << s.t_start << "\n"
           << "segment." << i << ".steady_slip_err_rel = "
           << s.steady_slip_err_rel << "\n"
           << "segment." << i << ".steady_mu_err_rel = " << s.steady_mu_err_rel
           << "\n"
           << "segment." << i << ".steady_torque_err_rel = "
           << s.steady_torque_err_rel << "\n"
           << "segment." << i << ".steady_smo_err_rel = "
           << s.steady_smo_err_rel << "\n"
           << "segment." << i << ".mu_reconv_s = " << s.mu_reconv_s << "\n"
           << "segment." << i << ".transient_end_s = " << s.transient_end_s
           << "\n";
    }
    return os.str();
}

}  // namespace iepb
