#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "thermobox.hpp"

namespace thermobox::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kOracleFail = 3 };

/// Bad flags, config values or paths. Raised before any computation.
class ValidationError : public DomainError {
public:
    using DomainError::DomainError;
};

struct Output {
    std::string path;  // empty: stdout
    std::string text;
};

struct ReservoirFlags {
    std::optional<double> TL, TR, muL, muR, betaL, betaR;

    void add(CLI::App* sub) {
        sub->add_option("--TL", TL, "left temperature");
        sub->add_option("--TR", TR, "right temperature");
        sub->add_option("--betaL", betaL, "left inverse temperature");
        sub->add_option("--betaR", betaR, "right inverse temperature");
        sub->add_option("--muL", muL, "left chemical potential");
        sub->add_option("--muR", muR, "right chemical potential");
    }

    ReservoirPair resolve() const {
        const bool temps = TL || TR, betas = betaL || betaR;
        if (temps && betas) throw ValidationError("use either --TL/--TR or --betaL/--betaR, not both");
        if (!temps && !betas) throw ValidationError("reservoirs need --TL/--TR or --betaL/--betaR");
        if (!muL || !muR) throw ValidationError("reservoirs need --muL and --muR");
        const auto a = temps ? TL : betaL, b = temps ? TR : betaR;
        const char* name = temps ? "temperatures" : "inverse temperatures";
        if (!a || !b) throw ValidationError(std::string("both ") + name + " are required");
        for (double v : {*a, *b})
            if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(name) + " must be finite and positive");
        for (double v : {*muL, *muR})
            if (!std::isfinite(v)) throw ValidationError("chemical potentials must be finite");
        return temps ? ReservoirPair::from_temperatures(*a, *b, *muL, *muR) : ReservoirPair(*a, *b, *muL, *muR);
    }
};

inline double need(const std::optional<double>& v, const char* flag) {
    if (!v) throw ValidationError(std::string(flag) + " is required");
    if (!std::isfinite(*v)) throw ValidationError(std::string(flag) + " must be finite");
    return *v;
}

inline void check_finite(double v, const char* flag) {
    if (!std::isfinite(v)) throw ValidationError(std::string(flag) + " must be finite");
}

inline void check_positive(double v, const char* flag) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(flag) + " must be finite and positive");
}

/// Fills options not given on the command line from a flat JSON object
/// whose keys are long flag names without the leading dashes.
inline void apply_config(CLI::App* sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file " + path);
    io::Json cfg;
    try {
        cfg = io::Json::parse(in);
    } catch (const io::Json::parse_error& e) {
        throw ValidationError("config " + path + ": " + e.what());
    }
    if (!cfg.is_object()) throw ValidationError("config must be a JSON object");
    auto scalar = [](const io::Json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_float()) return io::format_double(v.get<double>());
        return v.dump();
    };
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        if (it.key() == "config") throw ValidationError("config files cannot nest");
        CLI::Option* opt = sub->get_option_no_throw("--" + it.key());
        if (!opt) throw ValidationError("unknown config key '" + it.key() + "' for " + sub->get_name());
        if (opt->count() > 0) continue;
        const auto& v = it.value();
        if (v.is_array() && opt->get_items_expected_max() > 1) {
            for (const auto& e : v) opt->add_result(scalar(e));
        } else {
            opt->add_result(scalar(v));
        }
        try {
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw ValidationError("config key '" + it.key() + "': " + e.what());
        }
    }
}

/// Fails before computing if the output cannot be placed.
inline void check_output_path(const std::string& path) {
    if (path.empty()) return;
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent))
        throw ValidationError("output directory does not exist: " + parent.string());
    if (std::filesystem::is_directory(path)) throw ValidationError("output path is a directory: " + path);
}

inline void emit(const Output& o, std::ostream& out) {
    if (o.path.empty()) {
        out << o.text;
        out.flush();
        return;
    }
    std::ofstream f(o.path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + o.path);
    f << o.text;
}

struct Common {
    std::string config, output;
    std::optional<unsigned> threads;

    void add(CLI::App* sub) {
        sub->add_option("--config", config, "JSON config; flags override its values");
        sub->add_option("-o,--output", output, "output file (default: stdout)");
        sub->add_option("--threads", threads, "worker threads (default: THERMOBOX_THREADS or all cores)");
    }

    unsigned thread_count() const {
        if (threads && *threads == 0) throw ValidationError("--threads must be positive");
        return threads ? *threads : 0;
    }
};

struct Command {
    CLI::App* app = nullptr;
    Common common;
};

inline Transmission eval_transmission(const std::optional<std::string>& boxcar, const std::optional<std::string>& model,
                                      const std::optional<std::string>& table, std::optional<double> gamma,
                                      std::optional<double> omega_c, double omega, io::Json& desc) {
    const int sources = (boxcar ? 1 : 0) + (model ? 1 : 0) + (table ? 1 : 0);
    if (sources != 1) throw ValidationError("give exactly one of --boxcar, --model, --table");
    if (boxcar) {
        BoxcarSet b = io::parse_boxcar(*boxcar);
        desc = {{"kind", "boxcar"}, {"boxcar", io::to_json(b)}};
        return b;
    }
    if (table) {
        desc = {{"kind", "table"}, {"path", *table}};
        try {
            return read_transmission_csv(*table);
        } catch (const DomainError& e) {
            throw ValidationError(e.what());
        }
    }
    if (*model == "zero") {
        desc = {{"kind", "model"}, {"name", "zero"}};
        return ClosedFormModel::zero();
    }
    if (*model == "unit") {
        desc = {{"kind", "model"}, {"name", "unit"}};
        return ClosedFormModel::unit();
    }
    if (*model == "dqd") {
        const double g = need(gamma, "--Gamma"), o = need(omega_c, "--Omega");
        check_finite(omega, "--omega");
        check_positive(g, "--Gamma");
        desc = {{"kind", "model"}, {"name", "dqd"}, {"Gamma", g}, {"Omega", o}, {"omega", omega}};
        return ClosedFormModel::double_dot(g, o, omega);
    }
    throw ValidationError("unknown model '" + *model + "' (zero, unit, dqd)");
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Variance-optimal boxcar transmissions for two-terminal thermoelectric transport"};
    app.name("thermobox");
    app.require_subcommand(1);

    std::vector<Command> commands;
    commands.reserve(6);  // options bind to members, so no reallocation

    // eval
    ReservoirFlags eval_res;
    std::optional<std::string> eval_boxcar, eval_model, eval_table;
    std::optional<double> eval_gamma, eval_omega_c;
    double eval_omega = 0.0;
    TransportOptions eval_topt;
    {
        Command& c = commands.emplace_back();
        c.app = app.add_subcommand("eval", "transport summary of a transmission");
        c.common.add(c.app);
        eval_res.add(c.app);
        c.app->add_option("--boxcar", eval_boxcar, "boxcar JSON, e.g. [[\"-inf\",0],[1,2]]");
        c.app->add_option("--model", eval_model, "closed-form model: zero, unit, dqd");
        c.app->add_option("--table", eval_table, "CSV file with header energy,transmission");
        c.app->add_option("--Gamma", eval_gamma, "dqd lead coupling");
        c.app->add_option("--Omega", eval_omega_c, "dqd interdot coupling");
        c.app->add_option("--omega", eval_omega, "dqd level energy");
        c.app->add_option("--quad-rel-tol", eval_topt.quad.rel_tol, "quadrature relative tolerance");
        c.app->add_option("--quad-abs-tol", eval_topt.quad.abs_tol, "quadrature absolute tolerance");
    }

    // optimize
    ReservoirFlags opt_res;
    std::optional<double> opt_I, opt_J;
    InverseOptions opt_inv;
    std::string opt_boxcar_out;
    {
        Command& c = commands.emplace_back();
        c.app = app.add_subcommand("optimize", "minimum-variance boxcar at target currents (I, J)");
        c.common.add(c.app);
        opt_res.add(c.app);
        c.app->add_option("--I", opt_I, "target particle current");
        c.app->add_option("--J", opt_J, "target energy current");
        c.app->add_option("--tol", opt_inv.tol, "relative tolerance on the currents");
        c.app->add_option("--boxcar-out", opt_boxcar_out, "also write the boxcar JSON here");
    }

    // region
    ReservoirFlags reg_res;
    RegionOptions reg_opt;
    std::string reg_dir;
    {
        Command& c = commands.emplace_back();
        c.app = app.add_subcommand("region", "feasible region, bifurcation curves and topology grid");
        c.common.add(c.app);
        reg_res.add(c.app);
        c.app->add_option("--grid-i", reg_opt.grid_i, "topology grid points along I");
        c.app->add_option("--grid-j", reg_opt.grid_j, "topology grid points along J");
        c.app->add_option("--boundary-points", reg_opt.boundary_points, "boundary polyline points");
        c.app->add_option("--bifurcation-points", reg_opt.bifurcation_points, "samples per bifurcation curve");
        c.app->add_option("--tol", reg_opt.inverse.tol, "inverse relative tolerance");
        c.app->add_option("--out-dir", reg_dir,
                          "write boundary.csv, bifurcations.csv, topology.csv and region.json here");
    }

    // sweep
    double sw_gamma = 0.1, sw_omega_c = 0.05, sw_omega = 0.0, sw_beta = 1.0;
    std::vector<double> sw_dmu;
    FanoSweepOptions sw_opt;
    {
        Command& c = commands.emplace_back();
        c.app = app.add_subcommand("sweep", "Fano factor of the double dot and the optimum versus bias");
        c.common.add(c.app);
        c.app->add_option("--Gamma", sw_gamma, "lead coupling")->capture_default_str();
        c.app->add_option("--Omega", sw_omega_c, "interdot coupling")->capture_default_str();
        c.app->add_option("--omega", sw_omega, "level energy")->capture_default_str();
        c.app->add_option("--beta", sw_beta, "common inverse temperature")->capture_default_str();
        c.app->add_option("--dmu", sw_dmu, "bias values (default: 0.05..1 linear, then geometric to 40)")
            ->delimiter(',');
        c.app->add_option("--tol", sw_opt.inverse.tol, "inverse relative tolerance");
    }

    // oracle
    ReservoirFlags or_res;
    std::optional<double> or_I, or_J, or_lo, or_hi;
    std::size_t or_N = 16;
    std::string or_mode = "auto";
    VerifyOptions or_opt;
    {
        Command& c = commands.emplace_back();
        c.app = app.add_subcommand("oracle", "check the continuous optimum against the discrete program");
        c.common.add(c.app);
        or_res.add(c.app);
        c.app->add_option("--I", or_I, "target particle current");
        c.app->add_option("--J", or_J, "target energy current");
        c.app->add_option("--N", or_N, "number of cells")->capture_default_str();
        c.app->add_option("--lo", or_lo, "window start (default: covers all but 1e-8 of the noise mass)");
        c.app->add_option("--hi", or_hi, "window end");
        c.app->add_option("--mode", or_mode, "auto, exhaustive or lp")->capture_default_str();
        c.app->add_option("--refinements", or_opt.refinements, "LP refinement levels")->capture_default_str();
        c.app->add_option("--tol", or_opt.inverse.tol, "inverse relative tolerance");
    }

    // linear
    LinearResponseFrame lin_frame;
    std::optional<std::string> lin_boxcar;
    {
        Command& c = commands.emplace_back();
        c.app = app.add_subcommand("linear", "linear-response TUR ratio of a boxcar");
        c.common.add(c.app);
        c.app->add_option("--beta", lin_frame.beta, "mean inverse temperature")->capture_default_str();
        c.app->add_option("--mu", lin_frame.mu, "mean chemical potential")->capture_default_str();
        c.app->add_option("--dbeta", lin_frame.d_beta, "inverse temperature gradient")->capture_default_str();
        c.app->add_option("--dbetamu", lin_frame.d_beta_mu, "gradient of beta*mu")->capture_default_str();
        c.app->add_option("--boxcar", lin_boxcar, "boxcar JSON");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kValidation;
    }

    Command* cmd = nullptr;
    for (auto& c : commands)
        if (c.app->parsed()) cmd = &c;

    // Validation and input loading; nothing is computed yet.
    ReservoirPair res(1.0, 1.0, 0.0, 0.0);
    Transmission eval_T;
    io::Json eval_desc;
    BoxcarSet lin_box;
    io::Json head;
    try {
        if (!cmd->common.config.empty()) apply_config(cmd->app, cmd->common.config);
        check_output_path(cmd->common.output);
        const unsigned threads = cmd->common.thread_count();
        const std::string name = cmd->app->get_name();
        head["command"] = name;
        if (name == "eval") {
            res = eval_res.resolve();
            check_positive(eval_topt.quad.rel_tol, "--quad-rel-tol");
            check_positive(eval_topt.quad.abs_tol, "--quad-abs-tol");
            eval_T = eval_transmission(eval_boxcar, eval_model, eval_table, eval_gamma, eval_omega_c, eval_omega,
                                       eval_desc);
        } else if (name == "optimize") {
            res = opt_res.resolve();
            need(opt_I, "--I");
            need(opt_J, "--J");
            check_positive(opt_inv.tol, "--tol");
            check_output_path(opt_boxcar_out);
        } else if (name == "region") {
            res = reg_res.resolve();
            if (res.identical()) throw ValidationError("identical reservoirs carry no current");
            if (reg_opt.grid_i < 1 || reg_opt.grid_j < 1) throw ValidationError("grid sizes must be positive");
            if (reg_opt.boundary_points < 2) throw ValidationError("--boundary-points must be at least 2");
            if (reg_opt.bifurcation_points < 1) throw ValidationError("--bifurcation-points must be positive");
            check_positive(reg_opt.inverse.tol, "--tol");
            reg_opt.threads = threads;
            if (!reg_dir.empty() && std::filesystem::exists(reg_dir) && !std::filesystem::is_directory(reg_dir))
                throw ValidationError("--out-dir exists and is not a directory");
        } else if (name == "sweep") {
            check_positive(sw_gamma, "--Gamma");
            check_finite(sw_omega_c, "--Omega");
            check_finite(sw_omega, "--omega");
            check_positive(sw_beta, "--beta");
            check_positive(sw_opt.inverse.tol, "--tol");
            for (double d : sw_dmu) check_finite(d, "--dmu");
            if (sw_dmu.empty()) sw_dmu = default_dmu_grid();
            sw_opt.threads = threads;
        } else if (name == "oracle") {
            res = or_res.resolve();
            if (res.identical()) throw ValidationError("identical reservoirs carry no current");
            need(or_I, "--I");
            need(or_J, "--J");
            if (or_N < 2) throw ValidationError("--N must be at least 2");
            if (or_lo.has_value() != or_hi.has_value()) throw ValidationError("give both --lo and --hi or neither");
            if (or_lo) {
                check_finite(*or_lo, "--lo");
                check_finite(*or_hi, "--hi");
                if (!(*or_hi > *or_lo)) throw ValidationError("--hi must exceed --lo");
                or_opt.window = std::pair{*or_lo, *or_hi};
            }
            if (or_mode == "auto")
                or_opt.discrete.mode = DiscreteMode::Auto;
            else if (or_mode == "exhaustive")
                or_opt.discrete.mode = DiscreteMode::Exhaustive;
            else if (or_mode == "lp")
                or_opt.discrete.mode = DiscreteMode::LP;
            else
                throw ValidationError("--mode must be auto, exhaustive or lp");
            if (or_opt.discrete.mode == DiscreteMode::Exhaustive && or_N > or_opt.discrete.exhaustive_limit)
                throw ValidationError("exhaustive mode is limited to N <= " +
                                      std::to_string(or_opt.discrete.exhaustive_limit));
            if (or_opt.refinements < 0) throw ValidationError("--refinements must be non-negative");
            check_positive(or_opt.inverse.tol, "--tol");
            or_opt.discrete.threads = threads;
        } else if (name == "linear") {
            lin_frame.validate();
            if (!lin_boxcar) throw ValidationError("--boxcar is required");
            lin_box = io::parse_boxcar(*lin_boxcar);
        }
    } catch (const DomainError& e) {
        err << "thermobox: " << e.what() << '\n';
        return kValidation;
    } catch (const SizeError& e) {
        err << "thermobox: " << e.what() << '\n';
        return kValidation;
    }

    std::vector<Output> outputs;
    int code = kOk;
    try {
        const std::string name = cmd->app->get_name();
        io::Json doc = head;
        if (name == "eval") {
            doc["reservoirs"] = io::to_json(res);
            doc["transmission"] = eval_desc;
            doc["summary"] = io::to_json(summary(eval_T, res, eval_topt));
        } else if (name == "optimize") {
            const auto s = solve_multipliers(res, *opt_I, *opt_J, opt_inv);
            doc["reservoirs"] = io::to_json(res);
            doc["target"] = io::Json{{"I", *opt_I}, {"J", *opt_J}};
            doc["solution"] = io::to_json(s);
            if (!opt_boxcar_out.empty()) outputs.push_back({opt_boxcar_out, io::dump(io::to_json(s.boxcar))});
        } else if (name == "region") {
            const RegionMap map = region_map(res, reg_opt);
            doc["reservoirs"] = io::to_json(res);
            const io::Json body = io::to_json(map);
            for (const auto& [k, v] : body.items()) doc[k] = v;
            for (const auto& n : map.notices) err << "thermobox: " << n << '\n';
            if (!reg_dir.empty()) {
                std::filesystem::create_directories(reg_dir);
                const std::filesystem::path dir(reg_dir);
                std::ostringstream b, f, t;
                io::write_boundary_csv(b, map);
                io::write_bifurcations_csv(f, map);
                io::write_topology_csv(t, map);
                outputs.push_back({(dir / "boundary.csv").string(), b.str()});
                outputs.push_back({(dir / "bifurcations.csv").string(), f.str()});
                outputs.push_back({(dir / "topology.csv").string(), t.str()});
                outputs.push_back({(dir / "region.json").string(), io::dump(doc)});
                doc = io::Json();
            }
        } else if (name == "sweep") {
            const auto rows = fano_sweep(sw_gamma, sw_omega_c, sw_omega, sw_beta, sw_dmu, sw_opt);
            std::ostringstream csv;
            io::write_sweep_csv(csv, rows);
            outputs.push_back({cmd->common.output, csv.str()});
            doc = io::Json();
        } else if (name == "oracle") {
            const VerifyReport rep = verify(res, *or_I, *or_J, or_N, or_opt);
            doc["reservoirs"] = io::to_json(res);
            const io::Json body = io::to_json(rep);
            for (const auto& [k, v] : body.items()) doc[k] = v;
            if (!rep.pass) {
                err << "thermobox: oracle FAIL: " << rep.verdict_reason << '\n';
                code = kOracleFail;
            }
        } else if (name == "linear") {
            const auto b = linear_tur_bound(lin_frame, lin_box);
            const auto res_lin = lin_frame.reservoirs();
            const auto s = summary(Transmission(lin_box), res_lin);
            doc["frame"] = io::Json{{"beta", lin_frame.beta},
                                    {"mu", lin_frame.mu},
                                    {"d_beta", lin_frame.d_beta},
                                    {"d_beta_mu", lin_frame.d_beta_mu}};
            doc["reservoirs"] = io::to_json(res_lin);
            doc["boxcar"] = io::to_json(lin_box);
            doc["linear"] = io::to_json(b);
            doc["nonlinear"] = io::to_json(s);
        }
        if (!doc.is_null()) outputs.insert(outputs.begin(), Output{cmd->common.output, io::dump(doc)});
    } catch (const DomainError& e) {
        err << "thermobox: " << e.what() << '\n';
        return kValidation;
    } catch (const SizeError& e) {
        err << "thermobox: " << e.what() << '\n';
        return kValidation;
    } catch (const Error& e) {
        err << "thermobox: " << e.what() << '\n';
        return kNumerical;
    }

    try {
        for (const auto& o : outputs) emit(o, out);
    } catch (const std::exception& e) {
        err << "thermobox: " << e.what() << '\n';
        return kValidation;
    }
    return code;
}

}  // namespace thermobox::cli
