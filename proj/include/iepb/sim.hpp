#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "iepb/actuator.hpp"
#include "iepb/controllers.hpp"
#include "iepb/friction_estimator.hpp"
#include "iepb/observer.hpp"
#include "iepb/tyre.hpp"
#include "iepb/vehicle.hpp"

namespace iepb {

enum class ControllerKind { kSmc, kPid };

struct RoadSegment {
    double t_s = 0.0;
    double mu = 0.8;
};

/// Full description of one deterministic run: initial conditions, road
/// friction schedule, controller selection and every parameter set.
struct ScenarioSpec {
    double v0_mps = 17.0;
    double duration_s = 10.0;
    std::vector<RoadSegment> road{{0.0, 0.8}};
    ControllerKind controller = ControllerKind::kSmc;
    double dt_plant_s = 5e-5;
    double t_ctrl_s = 1e-3;
    bool per_wheel_control = false;
    std::uint64_t seed = 0;
    double noise_vx_std = 0.0;      ///< m/s, additive on the speed source
    double noise_omega_std = 0.0;   ///< rad/s, additive on wheel speeds

    VehicleParams vehicle;
    TyreParams tyre;
    MotorParams motor;
    DrivetrainParams drivetrain;
    ScrewParams screw;
    CaliperParams caliper;
    ObserverGains observer;
    EstimatorConfig estimator;     ///< k1/bands <= 0 mean "derive from tyre"
    UpperGains upper;
    LowerGains lower;
    PidGains pid;

    void validate() const;  ///< throws std::invalid_argument naming the field
};

/// One row per control period; column order is the CSV order.
struct TraceRecord {
    double t = 0.0;
    double v_x = 0.0;
    double x = 0.0;
    double omega_rl = 0.0;
    double omega_rr = 0.0;
    double lambda_r = 0.0;
    double lambda_rd = 0.0;
    double mu_true = 0.0;
    double mu_hat = 0.0;
    double t_cmd = 0.0;   ///< desired brake torque, N m
    double t_act = 0.0;   ///< plant brake torque (rear-left), N m
    double t_hat = 0.0;   ///< observer brake torque, N m
    double f_q = 0.0;     ///< clamp force, N
    double i_a = 0.0;
    double omega_m = 0.0;
    double duty = 0.0;
    double s_r = 0.0;
    double s_t = 0.0;
    std::uint32_t flags = 0;
};

// TraceRecord flag bits.
inline constexpr std::uint32_t kFlagQuit = 1u << 0;        // supervisor quit
inline constexpr std::uint32_t kFlagUpperClamp = 1u << 1;  // torque cmd clamped
inline constexpr std::uint32_t kFlagDutySat = 1u << 2;
inline constexpr std::uint32_t kFlagFzGuard = 1u << 3;     // estimator load guard
inline constexpr std::uint32_t kFlagLock = 1u << 4;        // rear wheel locked
inline constexpr std::uint32_t kFlagTravelLimit = 1u << 5;
inline constexpr std::uint32_t kFlagLoadClamp = 1u << 6;   // axle load clamped

struct SegmentMetrics {
    double t_start = 0.0, t_end = 0.0;
    double mu = 0.0;
    double steady_slip_err_rel = 0.0;   ///< max |e|/lambda_d over steady window
    double steady_mu_err_rel = 0.0;
    double steady_torque_err_rel = 0.0;
    double steady_smo_err_rel = 0.0;
    double mu_reconv_s = -1.0;  ///< time to stay within 10% after segment start
    double transient_end_s = 0.0;
    bool has_steady = false;
};

struct RunMetrics {
    double stopping_distance_m = 0.0;
    double stop_time_s = 0.0;
    bool stopped = false;
    double max_slip_err = 0.0;   ///< absolute, over active control
    double steady_slip_err_rel = 0.0;  ///< worst segment
    double steady_mu_err_rel = 0.0;
    double steady_torque_err_rel = 0.0;
    double steady_smo_err_rel = 0.0;
    int lock_events = 0;  ///< rear lock onsets while v_x > 1 m/s
    double lyap_violation_upper = 0.0;  ///< fraction of eligible samples
    double lyap_violation_lower = 0.0;
    double duty_reversals_per_s = 0.0;  ///< in the worst steady window
    std::vector<SegmentMetrics> segments;
};

struct RunResult {
    std::vector<TraceRecord> trace;
    RunMetrics metrics;
    bool aborted = false;
    std::string abort_reason;
};

/// Road friction as a right-continuous step function of time.
double road_mu(const std::vector<RoadSegment>& schedule, double t);

/// Executes a scenario: RK4 plant at dt_plant, control stack at t_ctrl
/// with zero-order-hold commands, until the vehicle stops or the duration
/// elapses. Deterministic for a given spec.
RunResult run(const ScenarioSpec& spec);

RunMetrics compute_metrics(const std::vector<TraceRecord>& trace,
                           const ScenarioSpec& spec);

std::string trace_csv(const std::vector<TraceRecord>& trace);
std::string metrics_text(const RunMetrics& m);

}  // namespace iepb
