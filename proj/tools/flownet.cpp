// flownet command-line tool.
//
//   flownet validate FILE
//   flownet simulate FILE [--x0 a,b,...] [--flows] [--dt] [--horizon] [--out]
//   flownet equilibrium FILE [--method auto|closed-form|from-zero]
//   flownet check-monotone FILE [--samples] [--seed] [--box-hi]
//   flownet mincut FILE
//   flownet margin FILE [--empirical] [--cells 1,2] [--family demand|inflow] [--tol]
//   flownet dual-ascent FILE
//
// Results go to stdout (or --out) as JSON; errors go to stderr as JSON.
// Exit status: 0 ok, 1 domain error, 2 usage/parse/schema/I-O error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <flownet/flownet.hpp>

using namespace flownet;

namespace {

struct Options {
    std::string file;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<double> tol;
    std::uint64_t seed = 1;
    std::size_t samples = 200;
    double box_hi = 5.0;
    std::string out;
    std::vector<double> x0;
    bool flows = false;
    std::string method = "auto";
    bool empirical = false;
    std::vector<long> cells;
    std::string family = "demand";
};

std::shared_ptr<spdlog::logger> make_logger()
{
    auto log = spdlog::stderr_color_mt("flownet");
    log->set_pattern("[%l] %v");
    log->set_level(spdlog::level::warn);
    if (const char *env = std::getenv("FLOWNET_LOG")) {
        const auto level = spdlog::level::from_str(env);
        // from_str maps unknown names to off; only accept "off" when spelled out.
        if (level != spdlog::level::off || std::string(env) == "off") {
            log->set_level(level);
        } else {
            log->warn("ignoring FLOWNET_LOG={}", env);
        }
    }
    return log;
}

void emit(const Options &opt, const json &doc)
{
    const auto text = doc.dump(2) + "\n";
    if (opt.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream os(opt.out, std::ios::binary);
    if (!os) {
        throw Error(ErrorCode::IoError, "cannot open " + opt.out + " for writing");
    }
    os << text;
}

json envelope(const char *command, json config, json result)
{
    json doc;
    doc["tool"] = "flownet";
    doc["version"] = version;
    doc["command"] = command;
    doc["config"] = std::move(config);
    doc["result"] = std::move(result);
    return doc;
}

json base_config(const Options &opt)
{
    json c;
    c["file"] = opt.file;
    c["out"] = opt.out.empty() ? json(nullptr) : json(opt.out);
    return c;
}

void require_positive(const char *name, double v)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::InvalidConfig, std::string(name) + " must be positive and finite");
    }
}

std::vector<CellIndex> zero_based(const std::vector<long> &ids, std::size_t n)
{
    std::vector<CellIndex> out;
    for (auto id : ids) {
        if (id < 1 || static_cast<std::size_t>(id) > n) {
            throw Error(ErrorCode::IndexOutOfRange, "cell " + std::to_string(id) + " outside 1.." + std::to_string(n));
        }
        out.push_back(static_cast<CellIndex>(id - 1));
    }
    return out;
}

int cmd_validate(const Options &opt, spdlog::logger &log)
{
    const auto file = load_network(opt.file);
    const auto &m = file.model;
    const auto &t = m.topology();
    json diagnostics = json::array();
    const bool out_conn = outflow_connectivity(t).all;
    const bool in_conn = inflow_connectivity(t).all;
    if (!out_conn) {
        diagnostics.push_back("not outflow-connected: some cells cannot reach an outflow cell");
    }
    if (!in_conn) {
        diagnostics.push_back("not inflow-connected: some cells are unreachable from inflow cells");
    }
    log.info("{}: {} cells, policy {}", opt.file, m.size(), policy_kind(m.policy()));
    json r;
    r["name"] = file.name;
    r["cells"] = m.size();
    r["policy"] = policy_kind(m.policy());
    r["outflow_connected"] = out_conn;
    r["inflow_connected"] = in_conn;
    r["diagnostics"] = std::move(diagnostics);
    emit(opt, envelope("validate", base_config(opt), r));
    return 0;
}

int cmd_simulate(const Options &opt, spdlog::logger &log)
{
    const auto file = load_network(opt.file);
    const auto &m = file.model;
    SimulationConfig config;
    config.dt = opt.dt.value_or(config.dt);
    config.horizon = opt.horizon.value_or(config.horizon);
    config.record_flows = opt.flows;
    require_positive("dt", config.dt);
    require_positive("horizon", config.horizon);

    Vector x0 = Vector::Zero(static_cast<Eigen::Index>(m.size()));
    if (!opt.x0.empty()) {
        if (opt.x0.size() != m.size()) {
            throw Error(ErrorCode::InvalidConfig, "--x0 needs " + std::to_string(m.size()) + " values");
        }
        x0 = Eigen::Map<const Vector>(opt.x0.data(), static_cast<Eigen::Index>(opt.x0.size()));
    }
    log.info("simulating {} steps", detail::step_count(config.horizon, config.dt));
    const auto traj = simulate(m, x0, config);
    if (traj.max_clamp > 1e-6) {
        log.warn("largest clamp correction {:.3g}; consider a smaller dt", traj.max_clamp);
    }

    if (opt.out.empty()) {
        write_trajectory_csv(std::cout, traj, opt.flows);
        return 0;
    }
    {
        std::ofstream os(opt.out, std::ios::binary);
        if (!os) {
            throw Error(ErrorCode::IoError, "cannot open " + opt.out + " for writing");
        }
        write_trajectory_csv(os, traj, opt.flows);
    }
    json c = base_config(opt);
    c["dt"] = config.dt;
    c["horizon"] = config.horizon;
    c["x0"] = to_json(x0);
    c["flows"] = opt.flows;
    json r;
    r["steps"] = traj.steps();
    r["final_state"] = to_json(traj.states.back());
    r["max_clamp"] = traj.max_clamp;
    // The CSV owns --out; the summary goes to stdout.
    std::cout << envelope("simulate", c, r).dump(2) << "\n";
    return 0;
}

int cmd_equilibrium(const Options &opt, spdlog::logger &log)
{
    const auto file = load_network(opt.file);
    const auto &m = file.model;
    EquilibriumConfig config;
    config.dt = opt.dt.value_or(config.dt);
    config.horizon = opt.horizon.value_or(config.horizon);
    config.eq_tol = opt.tol.value_or(config.eq_tol);
    require_positive("dt", config.dt);
    require_positive("horizon", config.horizon);
    require_positive("tol", config.eq_tol);

    std::string method = opt.method;
    if (method == "auto") {
        method = std::holds_alternative<ConstantRoutingPolicy>(m.policy()) ? "closed-form" : "from-zero";
    }
    json c = base_config(opt);
    c["method"] = method;
    json r;
    if (method == "closed-form") {
        r = to_json(equilibrium_closed_form(m));
        r["bounded"] = true;
    } else {
        c["dt"] = config.dt;
        c["horizon"] = config.horizon;
        c["tol"] = config.eq_tol;
        const auto search = equilibrium_from_zero(m, config);
        if (search.equilibrium) {
            r = to_json(*search.equilibrium);
        }
        r["bounded"] = search.bounded;
        r["detection"] = to_json(search.detection);
        if (!search.bounded) {
            log.warn("trajectory from zero is unbounded");
        }
    }
    emit(opt, envelope("equilibrium", c, r));
    return 0;
}

int cmd_check_monotone(const Options &opt, spdlog::logger &log)
{
    const auto file = load_network(opt.file);
    MonotoneCheckConfig config;
    config.samples = opt.samples;
    config.seed = opt.seed;
    config.box_hi = opt.box_hi;
    config.tol = opt.tol.value_or(config.tol);
    require_positive("tol", config.tol);
    const auto report = check_monotone(file.model, config);
    if (report.passed < report.samples) {
        log.warn("{} of {} samples violate the certificate", report.samples - report.passed, report.samples);
    }
    json c = base_config(opt);
    c["samples"] = config.samples;
    c["seed"] = config.seed;
    c["box"] = json::array({config.box_lo, config.box_hi});
    c["tol"] = config.tol;
    json r = to_json(report);
    r["certified"] = report.passed == report.samples;
    emit(opt, envelope("check-monotone", c, r));
    return 0;
}

int cmd_mincut(const Options &opt, spdlog::logger &)
{
    const auto file = load_network(opt.file);
    emit(opt, envelope("mincut", base_config(opt), to_json(upper_bound_min_cut(file.model))));
    return 0;
}

int cmd_margin(const Options &opt, spdlog::logger &log)
{
    const auto file = load_network(opt.file);
    const auto &m = file.model;
    EmpiricalMarginConfig config;
    config.tol = opt.tol.value_or(config.tol);
    config.detector.dt = opt.dt.value_or(config.detector.dt);
    config.detector.horizon = opt.horizon.value_or(config.detector.horizon);
    require_positive("tol", config.tol);
    require_positive("dt", config.detector.dt);
    require_positive("horizon", config.detector.horizon);

    EquilibriumConfig eq;
    eq.dt = config.detector.dt;
    eq.horizon = config.detector.horizon;

    MarginReport report;
    report.min_cut = upper_bound_min_cut(m);
    std::vector<std::string> notes;
    try {
        report.formula = formula_margin(m, eq);
    } catch (const Error &e) {
        // Without --empirical there is nothing else to report.
        if (!opt.empirical) {
            throw;
        }
        notes.push_back(std::string("formula unavailable: ") + e.what());
    }
    if (!report.formula) {
        notes.push_back("no closed-form margin for policy " + std::string(policy_kind(m.policy())));
    }

    json c = base_config(opt);
    c["empirical"] = opt.empirical;
    bool complete = true;
    if (opt.empirical) {
        PerturbationFamily family = default_family(report.formula, *report.min_cut);
        if (!opt.cells.empty()) {
            family.cells = zero_based(opt.cells, m.size());
        }
        if (opt.family == "inflow") {
            family.kind = PerturbationFamily::Kind::InflowIncrease;
        }
        log.info("bisecting {} over cells of size {}", to_string(family.kind), family.cells.size());
        auto formula = report.formula;
        auto cut = report.min_cut;
        report = empirical_margin(m, family, config);
        report.formula = std::move(formula);
        report.min_cut = std::move(cut);
        complete = report.complete;
        c["tol"] = config.tol;
        c["dt"] = config.detector.dt;
        c["horizon"] = config.detector.horizon;
        c["horizon_factors"] = config.horizon_factors;
        c["max_probes"] = config.max_probes;
    }
    report.notes.insert(report.notes.begin(), notes.begin(), notes.end());
    json r = to_json(report);
    if (!opt.empirical) {
        r.erase("bracket");
        r.erase("tol");
        r.erase("complete");
        r.erase("inconclusive_delta");
        r.erase("witness");
        r.erase("probes");
        r.erase("family");
    }
    emit(opt, envelope("margin", c, r));
    if (!complete) {
        throw Error(ErrorCode::InconclusiveProbe, "bracket did not narrow to tol; see the report's notes");
    }
    return 0;
}

int cmd_dual_ascent(const Options &opt, spdlog::logger &)
{
    const auto file = load_network(opt.file);
    const auto &m = file.model;
    const auto *policy = std::get_if<DualAscentPolicy>(&m.policy());
    if (!policy) {
        throw Error(ErrorCode::PreconditionViolated, "dual-ascent needs a dual_ascent policy");
    }
    DualAscentConfig config;
    config.dt = opt.dt.value_or(config.dt);
    config.horizon = opt.horizon.value_or(config.horizon);
    config.eq_tol = opt.tol.value_or(config.eq_tol);
    require_positive("dt", config.dt);
    require_positive("horizon", config.horizon);
    require_positive("tol", config.eq_tol);
    const auto sol = dual_ascent_solve(m.topology(), policy->costs, m.inflow(), config);
    json c = base_config(opt);
    c["dt"] = config.dt;
    c["horizon"] = config.horizon;
    c["tol"] = config.eq_tol;
    emit(opt, envelope("dual-ascent", c, to_json(sol)));
    return 0;
}

void report_error(const Error &e)
{
    json err;
    err["error"] = to_string(e.code());
    err["message"] = e.detail();
    if (const auto *in = dynamic_cast<const InputError *>(&e)) {
        err["line"] = in->line();
        err["column"] = in->column();
        err["pointer"] = in->pointer();
    }
    std::cerr << err.dump() << "\n";
}

} // namespace

int main(int argc, char **argv)
{
    auto log = make_logger();
    CLI::App app{"Simulation and analysis of dynamical flow networks", "flownet"};
    app.set_version_flag("--version", version);
    app.require_subcommand(1);

    Options opt;
    using Handler = int (*)(const Options &, spdlog::logger &);
    std::vector<std::pair<CLI::App *, Handler>> commands;

    auto add = [&](const char *name, const char *about, Handler handler) {
        auto *sub = app.add_subcommand(name, about);
        sub->add_option("file", opt.file, "network JSON file")->required();
        sub->add_option("--out", opt.out, "write output here instead of stdout");
        commands.emplace_back(sub, handler);
        return sub;
    };
    auto integration = [&](CLI::App *sub) {
        sub->add_option("--dt", opt.dt, "RK4 step size");
        sub->add_option("--horizon", opt.horizon, "integration horizon");
    };

    add("validate", "parse and check a network file", cmd_validate);

    auto *simulate_cmd = add("simulate", "integrate from x0 and write a CSV trajectory", cmd_simulate);
    integration(simulate_cmd);
    simulate_cmd->add_option("--x0", opt.x0, "initial state, comma-separated (default 0)")->delimiter(',');
    simulate_cmd->add_flag("--flows", opt.flows, "append total outflow columns z_i");

    auto *eq_cmd = add("equilibrium", "equilibrium in closed form or as the limit from zero", cmd_equilibrium);
    integration(eq_cmd);
    eq_cmd->add_option("--tol", opt.tol, "equilibrium tolerance on |dx/dt|");
    eq_cmd->add_option("--method", opt.method, "auto, closed-form or from-zero")
        ->check(CLI::IsMember({"auto", "closed-form", "from-zero"}));

    auto *mono_cmd = add("check-monotone", "sample the Jacobian sign certificate", cmd_check_monotone);
    mono_cmd->add_option("--samples", opt.samples, "number of sample points");
    mono_cmd->add_option("--seed", opt.seed, "sampler seed");
    mono_cmd->add_option("--box-hi", opt.box_hi, "sample in [0, box-hi]^n");
    mono_cmd->add_option("--tol", opt.tol, "sign tolerance");

    add("mincut", "min-cut residual capacity", cmd_mincut);

    auto *margin_cmd = add("margin", "margin of resilience", cmd_margin);
    integration(margin_cmd);
    margin_cmd->add_flag("--empirical", opt.empirical, "bracket the margin by bisection");
    margin_cmd->add_option("--cells", opt.cells, "cells of the perturbation family (1-based)")->delimiter(',');
    margin_cmd->add_option("--family", opt.family, "demand or inflow")->check(CLI::IsMember({"demand", "inflow"}));
    margin_cmd->add_option("--tol", opt.tol, "bracket width");

    auto *dual_cmd = add("dual-ascent", "solve the convex flow problem by dual ascent", cmd_dual_ascent);
    integration(dual_cmd);
    dual_cmd->add_option("--tol", opt.tol, "equilibrium tolerance on |dx/dt|");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (const auto &[sub, handler] : commands) {
            if (sub->parsed()) {
                return handler(opt, *log);
            }
        }
    } catch (const Error &e) {
        report_error(e);
        return is_input_error(e.code()) ? 2 : 1;
    } catch (const std::exception &e) {
        std::cerr << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return 1;
}
