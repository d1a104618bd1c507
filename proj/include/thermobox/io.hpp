#pragma once

// JSON and CSV serialization. Every floating value is written with 17
// significant digits.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "thermobox/analysis.hpp"
#include "thermobox/boxcar.hpp"
#include "thermobox/errors.hpp"
#include "thermobox/inverse.hpp"
#include "thermobox/oracle.hpp"
#include "thermobox/physics.hpp"
#include "thermobox/region.hpp"
#include "thermobox/transport.hpp"

namespace thermobox::io {

using Json = nlohmann::ordered_json;

inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline void write_string(std::ostream& os, const std::string& s) {
    os << Json(s).dump();
}

inline void write(std::ostream& os, const Json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << '{' << nl;
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) os << ',' << nl;
                first = false;
                os << pad;
                write_string(os, it.key());
                os << (indent > 0 ? ": " : ":");
                write(os, it.value(), indent, depth + 1);
            }
            os << nl << close << '}';
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // short arrays of scalars stay on one line
            bool flat = j.size() <= 4;
            for (const auto& v : j) flat = flat && v.is_primitive();
            if (flat) {
                os << '[';
                for (std::size_t k = 0; k < j.size(); ++k) {
                    if (k) os << ", ";
                    write(os, j[k], indent, depth + 1);
                }
                os << ']';
                return;
            }
            os << '[' << nl;
            for (std::size_t k = 0; k < j.size(); ++k) {
                if (k) os << ',' << nl;
                os << pad;
                write(os, j[k], indent, depth + 1);
            }
            os << nl << close << ']';
            return;
        }
        case Json::value_t::number_float: {
            const double x = j.get<double>();
            if (std::isfinite(x))
                os << format_double(x);
            else
                os << "null";
            return;
        }
        default:
            os << j.dump();
    }
}

}  // namespace detail

/// Pretty JSON with 17-digit floats; non-finite numbers become null.
inline void write_json(std::ostream& os, const Json& j, int indent = 2) {
    detail::write(os, j, indent, 0);
    os << '\n';
}

inline std::string dump(const Json& j, int indent = 2) {
    std::ostringstream os;
    write_json(os, j, indent);
    return os.str();
}

inline Json optional_number(const std::optional<double>& v) {
    return v ? Json(*v) : Json(nullptr);
}

// Boxcar sets: [[a, b], ...] with "-inf"/"inf" for infinite ends.

inline Json endpoint_json(double x) {
    if (x == -kInf) return "-inf";
    if (x == kInf) return "inf";
    return x;
}

inline Json to_json(const BoxcarSet& box) {
    Json out = Json::array();
    for (const auto& iv : box.intervals()) out.push_back(Json::array({endpoint_json(iv.a), endpoint_json(iv.b)}));
    return out;
}

inline double endpoint_from_json(const Json& j) {
    if (j.is_number()) {
        const double x = j.get<double>();
        if (!std::isfinite(x)) throw DomainError("boxcar endpoint must be finite or a sentinel");
        return x;
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "-inf") return -kInf;
        if (s == "inf" || s == "+inf") return kInf;
    }
    throw DomainError("boxcar endpoint must be a number, \"-inf\" or \"inf\"");
}

inline BoxcarSet boxcar_from_json(const Json& j) {
    if (!j.is_array()) throw DomainError("boxcar must be a JSON array of [a, b] pairs");
    std::vector<Interval> ivs;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2) throw DomainError("boxcar entries must be [a, b] pairs");
        ivs.push_back({endpoint_from_json(p[0]), endpoint_from_json(p[1])});
    }
    return BoxcarSet(std::move(ivs));
}

inline BoxcarSet parse_boxcar(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw DomainError(std::string("boxcar JSON: ") + e.what());
    }
    return boxcar_from_json(j);
}

inline Json to_json(const ReservoirPair& r) {
    return Json{{"beta_L", r.beta_l()},         {"beta_R", r.beta_r()},
                {"mu_L", r.mu_l()},             {"mu_R", r.mu_r()},
                {"delta_beta", r.delta_beta()}, {"delta_beta_mu", r.delta_beta_mu()},
                {"delta_mu", r.delta_mu()}};
}

inline Json to_json(const Multipliers& m) { return Json{{"lambda", m.lambda}, {"eta", m.eta}}; }

inline Json to_json(const TransportSummary& s) {
    return Json{{"I", s.I},
                {"J", s.J},
                {"var_I", s.var_I},
                {"sigma", s.sigma},
                {"P", s.P},
                {"J_Q_L", s.J_Q_L},
                {"J_Q_R", s.J_Q_R},
                {"eta_eff", optional_number(s.eta_eff)},
                {"fano", optional_number(s.fano)},
                {"tur_ratio", optional_number(s.tur_ratio)},
                {"errors", Json{{"I", s.I_error}, {"J", s.J_error}, {"var_I", s.var_error}}}};
}

inline Json to_json(const Signature& s) {
    return Json{{"count", s.count}, {"left_inf", s.left_infinite}, {"right_inf", s.right_infinite}};
}

inline Json to_json(const OptimalSolution& s) {
    return Json{{"I", s.I},
                {"J", s.J},
                {"var_opt", s.var_opt},
                {"multipliers", to_json(s.multipliers)},
                {"residual_norm", s.residual_norm},
                {"signature", to_json(signature_of(s.boxcar))},
                {"boxcar", to_json(s.boxcar)}};
}

inline Json to_json(const VerifyReport& r) {
    Json refined = Json::array();
    for (std::size_t k = 0; k < r.refined_N.size(); ++k)
        refined.push_back(Json{{"N", r.refined_N[k]}, {"Q", r.refined_Q[k]}});
    return Json{{"continuous_var", r.continuous_var},
                {"discrete_Q", r.discrete_Q},
                {"discrete_L", r.discrete_L},
                {"snapped_var", r.snapped_var},
                {"gaps",
                 Json{{"Q_minus_var", r.gaps.Q_minus_var},
                      {"L_minus_var", r.gaps.L_minus_var},
                      {"snapped_minus_var", r.gaps.snapped_minus_var},
                      {"Q_minus_L", r.gaps.Q_minus_L}}},
                {"N", r.N},
                {"window", Json::array({r.lo, r.hi})},
                {"verdict", r.verdict()},
                {"reason", r.verdict_reason},
                {"I", r.I},
                {"J", r.J},
                {"error_bound", r.error_bound},
                {"certified", r.certified},
                {"certification_tol", r.certification_tol},
                {"enumeration_tol", r.enumeration_tol},
                {"extrapolated_Q", optional_number(r.extrapolated_Q)},
                {"refined", refined},
                {"exhaustive", r.discrete.exhaustive},
                {"vertices", r.discrete.vertices},
                {"fractional", r.discrete.fractional},
                {"multipliers", to_json(r.multipliers)},
                {"boxcar", to_json(r.boxcar)},
                {"tau", r.discrete.tau}};
}

inline Json to_json(const RegionMap& m) {
    Json boundary = Json::array(), bif = Json::array(), topo = Json::array();
    for (const auto& b : m.boundary)
        boundary.push_back(Json{{"I", b.I}, {"J_min", b.J_min}, {"J_max", b.J_max}, {"eps1", b.eps1}});
    for (const auto& p : m.bifurcations.points)
        bif.push_back(Json{{"tag", p.tag}, {"lambda", p.lambda}, {"eta", p.eta}, {"I", p.I}, {"J", p.J}});
    for (const auto& s : m.topology) {
        Json row{{"I", s.I}, {"J", s.J}, {"solved", s.solved}};
        if (s.solved) {
            row["count"] = s.signature.count;
            row["left_inf"] = s.signature.left_infinite;
            row["right_inf"] = s.signature.right_infinite;
            row["var_opt"] = s.var_opt;
            row["multipliers"] = to_json(s.multipliers);
        } else {
            row["error"] = s.error;
        }
        topo.push_back(std::move(row));
    }
    Json notices = m.notices;
    for (const auto& n : m.bifurcations.notices) notices.push_back(n);
    return Json{{"I_min", m.I_min},       {"I_max", m.I_max},
                {"max_intervals", m.max_intervals},
                {"boundary", boundary},   {"bifurcations", bif},
                {"topology", topo},       {"notices", notices}};
}

inline Json to_json(const LinearTurBound& b) {
    return Json{{"ratio", b.ratio},
                {"I", b.I},
                {"J", b.J},
                {"var", b.var},
                {"sigma", b.sigma},
                {"theta", Json{{"theta0", b.theta.theta0}, {"theta1", b.theta.theta1}, {"theta2", b.theta.theta2}}}};
}

// CSV tables.

inline void csv_row(std::ostream& os, std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
        if (!first) os << ',';
        first = false;
        os << c;
    }
    os << '\n';
}

inline std::string fd(double x) { return format_double(x); }

inline void write_boundary_csv(std::ostream& os, const RegionMap& m) {
    os << "I,J_min,J_max,eps1\n";
    for (const auto& b : m.boundary) csv_row(os, {fd(b.I), fd(b.J_min), fd(b.J_max), fd(b.eps1)});
}

inline void write_bifurcations_csv(std::ostream& os, const RegionMap& m) {
    os << "tag,lambda,eta,I,J\n";
    for (const auto& p : m.bifurcations.points)
        csv_row(os, {p.tag, fd(p.lambda), fd(p.eta), fd(p.I), fd(p.J)});
}

/// Unsolved grid points are written with count -1.
inline void write_topology_csv(std::ostream& os, const RegionMap& m) {
    os << "I,J,count,left_inf,right_inf\n";
    for (const auto& s : m.topology) {
        const int count = s.solved ? s.signature.count : -1;
        csv_row(os, {fd(s.I), fd(s.J), std::to_string(count),
                     std::to_string(s.solved && s.signature.left_infinite ? 1 : 0),
                     std::to_string(s.solved && s.signature.right_infinite ? 1 : 0)});
    }
}

inline void write_sweep_csv(std::ostream& os, const std::vector<FanoRow>& rows) {
    os << "dmu,I,J,var_model,fano_model_scaled,var_opt,fano_opt_scaled\n";
    for (const auto& r : rows)
        csv_row(os, {fd(r.dmu), fd(r.I), fd(r.J), fd(r.var_model), fd(r.fano_model_scaled), fd(r.var_opt),
                     fd(r.fano_opt_scaled)});
}

}  // namespace thermobox::io
