// Command-line front end: single runs, controller comparison, the canonical
// scenario suite and parameter sweeps. CSV is the interchange surface.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iepb/scenario_io.hpp"
#include "iepb/sim.hpp"

namespace fs = std::filesystem;
using iepb::ControllerKind;
using iepb::RunResult;
using iepb::ScenarioSpec;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct CommonOpts {
    std::string scenario_path;
    std::string out_dir = "out";
    std::string controller;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--scenario", o.scenario_path, "Scenario file (JSON)");
    cmd->add_option("--out", o.out_dir, "Output directory");
    cmd->add_option("--controller", o.controller, "Controller")
        ->check(CLI::IsMember({"smc", "pid"}));
    cmd->add_option("--set", o.overrides,
                    "Parameter override, key=value (repeatable)");
}

ScenarioSpec build_spec(const CommonOpts& o) {
    ScenarioSpec spec;
    if (!o.scenario_path.empty()) spec = iepb::load_scenario(o.scenario_path);
    if (o.controller == "smc") spec.controller = ControllerKind::kSmc;
    if (o.controller == "pid") spec.controller = ControllerKind::kPid;
    for (const auto& kv : o.overrides) iepb::apply_override(spec, kv);
    spec.validate();
    return spec;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

nlohmann::json metrics_json(const iepb::RunMetrics& m) {
    nlohmann::json j;
    j["stopping_distance_m"] = m.stopping_distance_m;
    j["stop_time_s"] = m.stop_time_s;
    j["stopped"] = m.stopped;
    j["max_slip_err"] = m.max_slip_err;
    j["steady_slip_err_rel"] = m.steady_slip_err_rel;
    j["steady_mu_err_rel"] = m.steady_mu_err_rel;
    j["steady_torque_err_rel"] = m.steady_torque_err_rel;
    j["steady_smo_err_rel"] = m.steady_smo_err_rel;
    j["lock_events"] = m.lock_events;
    j["lyap_violation_upper"] = m.lyap_violation_upper;
    j["lyap_violation_lower"] = m.lyap_violation_lower;
    j["duty_reversals_per_s"] = m.duty_reversals_per_s;
    j["segments"] = nlohmann::json::array();
    for (const auto& s : m.segments)
        j["segments"].push_back({{"t_start_s", s.t_start},
                                 {"t_end_s", s.t_end},
                                 {"mu", s.mu},
                                 {"steady_slip_err_rel", s.steady_slip_err_rel},
                                 {"steady_mu_err_rel", s.steady_mu_err_rel},
                                 {"steady_torque_err_rel", s.steady_torque_err_rel},
                                 {"steady_smo_err_rel", s.steady_smo_err_rel},
                                 {"mu_reconv_s", s.mu_reconv_s},
                                 {"transient_end_s", s.transient_end_s},
                                 {"has_steady", s.has_steady}});
    return j;
}

/// Runs one scenario and writes trace.csv, metrics.txt, metrics.json and the
/// scenario echo into dir. Returns the result; a partial trace is still
/// written on numerical abort.
RunResult run_into(const ScenarioSpec& spec, const fs::path& dir) {
    fs::create_directories(dir);
    const RunResult res = iepb::run(spec);
    write_file(dir / "trace.csv", iepb::trace_csv(res.trace));
    write_file(dir / "metrics.txt", iepb::metrics_text(res.metrics));
    write_file(dir / "metrics.json", metrics_json(res.metrics).dump(2) + "\n");
    write_file(dir / "scenario.json",
               iepb::scenario_to_json(spec).dump(2) + "\n");
    return res;
}

/// Closed-form deceleration when only the rear axle brakes at peak
/// friction: the rear load shrinks with the forward weight transfer, so
/// a = mu g a_cg / (L + mu h_g).
double rear_only_decel(const iepb::VehicleParams& v, double mu) {
    return mu * v.gravity * v.cg_to_front_m /
           (v.wheelbase_m() + mu * v.cg_height_m);
}

int cmd_simulate(const CommonOpts& o) {
    const ScenarioSpec spec = build_spec(o);
    const RunResult res = run_into(spec, o.out_dir);
    if (res.aborted) {
        std::cerr << "numerical abort: " << res.abort_reason << "\n";
        return kExitNumerical;
    }
    std::cout << iepb::metrics_text(res.metrics);
    return kExitOk;
}

int cmd_compare(const CommonOpts& o) {
    ScenarioSpec spec = build_spec(o);
    spec.controller = ControllerKind::kSmc;
    const RunResult smc = run_into(spec, fs::path(o.out_dir) / "smc");
    spec.controller = ControllerKind::kPid;
    const RunResult pid = run_into(spec, fs::path(o.out_dir) / "pid");
    if (smc.aborted || pid.aborted) {
        std::cerr << "numerical abort: "
                  << (smc.aborted ? smc.abort_reason : pid.abort_reason)
                  << "\n";
        return kExitNumerical;
    }
    const double dd = pid.metrics.stopping_distance_m -
                      smc.metrics.stopping_distance_m;
    const double dt = pid.metrics.stop_time_s - smc.metrics.stop_time_s;
    std::ostringstream rep;
    rep.precision(6);
    rep << "distance_smc_m = " << smc.metrics.stopping_distance_m << "\n"
        << "distance_pid_m = " << pid.metrics.stopping_distance_m << "\n"
        << "delta_distance_m = " << dd << "\n"
        << "delta_stop_time_s = " << dt << "\n"
        << "max_slip_err_smc = " << smc.metrics.max_slip_err << "\n"
        << "max_slip_err_pid = " << pid.metrics.max_slip_err << "\n"
        << "ordering_smc_not_longer = " << (dd >= 0.0 ? "pass" : "fail")
        << "\n";
    write_file(fs::path(o.out_dir) / "compare.txt", rep.str());
    std::cout << rep.str();
    return kExitOk;
}

struct SuiteCase {
    std::string name;
    std::vector<iepb::RoadSegment> road;
};

int cmd_paper_suite(const CommonOpts& o) {
    ScenarioSpec base = build_spec(o);
    const std::vector<SuiteCase> cases = {
        {"high_mu", {{0.0, 0.8}}},
        {"high_to_low", {{0.0, 0.8}, {2.0, 0.2}}},
        {"low_to_high", {{0.0, 0.2}, {2.0, 0.8}}},
        {"estimator_schedule", {{0.0, 0.2}, {1.3, 0.8}, {2.7, 0.5}}},
    };

    std::ostringstream rep;
    rep.precision(6);
    bool any_abort = false;
    for (const auto& c : cases) {
        ScenarioSpec spec = base;
        spec.road = c.road;
        const RunResult res = run_into(spec, fs::path(o.out_dir) / c.name);
        rep << "[" << c.name << "]\n" << iepb::metrics_text(res.metrics);
        if (res.aborted) {
            rep << "aborted = " << res.abort_reason << "\n";
            any_abort = true;
            continue;
        }
        const auto& m = res.metrics;
        auto line = [&rep](const char* what, bool ok) {
            rep << what << " = " << (ok ? "pass" : "fail") << "\n";
        };
        line("check.slip_tracking_10pct", m.steady_slip_err_rel <= 0.10);
        line("check.no_lock_above_1mps", m.lock_events == 0);
        line("check.torque_tracking_12pct", m.steady_torque_err_rel <= 0.12);
        line("check.smo_tracking_5pct", m.steady_smo_err_rel <= 0.05);
        line("check.mu_tracking_10pct", m.steady_mu_err_rel <= 0.10);
        line("check.duty_reversals_5hz", m.duty_reversals_per_s <= 5.0);
        if (c.name == "high_mu") {
            // Reference distance from the rear-only braking fixed point of
            // the load-transfer equations; quoted figures that assume a
            // larger deceleration are not reachable with rear-only braking.
            const double a = rear_only_decel(spec.vehicle, 0.8);
            const double d_ref = spec.v0_mps * spec.v0_mps / (2.0 * a);
            rep << "reference_distance_m = " << d_ref << "\n";
            line("check.distance_within_10pct",
                 std::fabs(m.stopping_distance_m - d_ref) <= 0.10 * d_ref);
        }
        if (c.name == "estimator_schedule") {
            bool reconv = !m.segments.empty();
            for (std::size_t i = 1; i < m.segments.size(); ++i)
                reconv = reconv && m.segments[i].mu_reconv_s >= 0.0 &&
                         m.segments[i].mu_reconv_s < 0.3;
            line("check.mu_reconvergence_300ms", reconv);
        }
        rep << "\n";
    }
    write_file(fs::path(o.out_dir) / "report.txt", rep.str());
    std::cout << rep.str();
    return any_abort ? kExitNumerical : kExitOk;
}

int cmd_sweep(const CommonOpts& o, const std::string& param,
              const std::vector<double>& values, int jobs) {
    const ScenarioSpec base = build_spec(o);
    // validate the axis up front so a bad parameter name is a clean error
    for (double v : values) {
        if (!std::isfinite(v))
            throw std::invalid_argument("sweep values must be finite");
        ScenarioSpec probe = base;
        iepb::apply_override(probe, param + "=" + std::to_string(v));
    }

    std::vector<RunResult> results(values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= values.size()) return;
            ScenarioSpec spec = base;
            iepb::apply_override(spec, param + "=" + std::to_string(values[i]));
            std::ostringstream name;
            name << param << "=" << values[i];
            results[i] = run_into(spec, fs::path(o.out_dir) / name.str());
        }
    };
    std::vector<std::thread> pool;
    const int n = std::max(1, std::min<int>(jobs, values.size()));
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ostringstream csv;
    csv.precision(9);
    csv << param
        << ",stopping_distance_m,stop_time_s,max_slip_err,lock_events,"
           "aborted\n";
    bool any_abort = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto& m = results[i].metrics;
        csv << values[i] << ',' << m.stopping_distance_m << ','
            << m.stop_time_s << ',' << m.max_slip_err << ',' << m.lock_events
            << ',' << (results[i].aborted ? 1 : 0) << "\n";
        any_abort = any_abort || results[i].aborted;
    }
    fs::create_directories(o.out_dir);
    write_file(fs::path(o.out_dir) / "sweep.csv", csv.str());
    std::cout << csv.str();
    return any_abort ? kExitNumerical : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rear-axle parking-brake ABS simulation lab"};
    app.require_subcommand(1);

    CommonOpts sim_o, cmp_o, suite_o, sweep_o;
    std::string sweep_param;
    std::vector<double> sweep_values;
    int jobs = 1;

    auto* sim = app.add_subcommand("simulate", "Run one scenario");
    add_common(sim, sim_o);
    auto* cmp = app.add_subcommand("compare", "Run the scenario under smc and pid");
    add_common(cmp, cmp_o);
    auto* suite =
        app.add_subcommand("paper-suite", "Run the four canonical scenarios");
    add_common(suite, suite_o);
    auto* sweep = app.add_subcommand("sweep", "Sweep one parameter");
    add_common(sweep, sweep_o);
    sweep->add_option("--param", sweep_param, "Dotted parameter path")
        ->required();
    sweep->add_option("--values", sweep_values, "Axis values")
        ->required()
        ->delimiter(',');
    sweep->add_option("--jobs", jobs, "Parallel runs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return cmd_simulate(sim_o);
        if (cmp->parsed()) return cmd_compare(cmp_o);
        if (suite->parsed()) return cmd_paper_suite(suite_o);
        if (sweep->parsed())
            return cmd_sweep(sweep_o, sweep_param, sweep_values, jobs);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}
