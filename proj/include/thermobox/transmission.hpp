#pragma once

// Transmission functions T(ε) ∈ [0, 1]: boxcar unions, closed-form models
// and tabulated samples.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "thermobox/boxcar.hpp"
#include "thermobox/errors.hpp"

namespace thermobox {

/// Named closed-form transmissions.
struct ClosedFormModel {
    enum class Kind { Zero, Unit, DoubleDot };

    Kind kind = Kind::Zero;
    double gamma = 0.0;  // DoubleDot: lead coupling Γ
    double omega_c = 0.0;  // DoubleDot: interdot coupling Ω
    double omega = 0.0;  // DoubleDot: level energy ω

    static ClosedFormModel zero() { return {}; }
    static ClosedFormModel unit() { return {Kind::Unit}; }
    static ClosedFormModel double_dot(double gamma, double omega_c, double omega) {
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw DomainError("double_dot: Gamma must be finite and positive");
        if (!std::isfinite(omega_c) || !std::isfinite(omega))
            throw DomainError("double_dot: Omega and omega must be finite");
        return {Kind::DoubleDot, gamma, omega_c, omega};
    }

    double operator()(double eps) const noexcept {
        switch (kind) {
            case Kind::Zero: return 0.0;
            case Kind::Unit: return 1.0;
            case Kind::DoubleDot: {
                if (std::isinf(eps)) return 0.0;
                // Γ²Ω² / |(x + iΓ/2)² - Ω²|² with x = ε - ω; the squared modulus
                // expands to Γ²Ω² + (x² - Ω² + Γ²/4)².
                const double x = eps - omega;
                const double num = gamma * gamma * omega_c * omega_c;
                const double q = x * x - omega_c * omega_c + 0.25 * gamma * gamma;
                return num / (num + q * q);
            }
        }
        return 0.0;
    }
};

/// Piecewise-linear interpolation of sorted samples, zero outside the table.
class TabulatedSamples {
public:
    TabulatedSamples() = default;
    TabulatedSamples(std::vector<double> energy, std::vector<double> value)
        : energy_(std::move(energy)), value_(std::move(value)) {
        if (energy_.size() != value_.size())
            throw DomainError("tabulated transmission: energy/value length mismatch");
        if (energy_.size() < 2)
            throw DomainError("tabulated transmission: at least two samples required");
        for (std::size_t i = 0; i < energy_.size(); ++i) {
            if (!std::isfinite(energy_[i]) || !std::isfinite(value_[i]))
                throw DomainError("tabulated transmission: non-finite sample at index " +
                                  std::to_string(i));
            if (value_[i] < 0.0 || value_[i] > 1.0)
                throw DomainError("tabulated transmission: value outside [0,1] at index " +
                                  std::to_string(i));
            if (i > 0 && !(energy_[i] > energy_[i - 1]))
                throw DomainError("tabulated transmission: energies not strictly increasing at index " +
                                  std::to_string(i));
        }
    }

    const std::vector<double>& energy() const noexcept { return energy_; }
    const std::vector<double>& value() const noexcept { return value_; }

    double operator()(double eps) const noexcept {
        if (energy_.empty() || !(eps >= energy_.front()) || !(eps <= energy_.back())) return 0.0;
        const auto it = std::upper_bound(energy_.begin(), energy_.end(), eps);
        if (it == energy_.end()) return value_.back();
        const std::size_t j = static_cast<std::size_t>(it - energy_.begin());
        const double t = (eps - energy_[j - 1]) / (energy_[j] - energy_[j - 1]);
        return std::clamp(value_[j - 1] + t * (value_[j] - value_[j - 1]), 0.0, 1.0);
    }

private:
    std::vector<double> energy_, value_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace detail

/// Read `energy,transmission` CSV. Rows are numbered from 1 at the header.
inline TabulatedSamples read_transmission_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    auto fail = [&row](const std::string& what) {
        throw DomainError("transmission CSV row " + std::to_string(row) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++row;
        if (!detail::trim(line).empty()) break;
    }
    if (row == 0 || detail::trim(line).empty()) throw DomainError("transmission CSV: empty input");
    {
        std::string h;
        for (char c : line)
            if (c != ' ' && c != '\t' && c != '\r') h += c;
        if (h != "energy,transmission") fail("expected header 'energy,transmission'");
    }
    std::vector<double> e, v;
    while (std::getline(in, line)) {
        ++row;
        const std::string_view s = detail::trim(line);
        if (s.empty()) continue;
        const auto comma = s.find(',');
        if (comma == std::string_view::npos || s.find(',', comma + 1) != std::string_view::npos)
            fail("expected two comma-separated fields");
        double x, t;
        if (!detail::parse_double(s.substr(0, comma), x) || !std::isfinite(x))
            fail("energy is not a finite number");
        if (!detail::parse_double(s.substr(comma + 1), t) || !std::isfinite(t))
            fail("transmission is not a finite number");
        if (t < 0.0 || t > 1.0) fail("transmission outside [0,1]");
        if (!e.empty() && !(x > e.back())) fail("energies must be strictly increasing");
        e.push_back(x);
        v.push_back(t);
    }
    if (e.size() < 2) throw DomainError("transmission CSV: at least two data rows required");
    return TabulatedSamples(std::move(e), std::move(v));
}

inline TabulatedSamples read_transmission_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DomainError("cannot open transmission file '" + path + "'");
    return read_transmission_csv(f);
}

/// T(ε): a boxcar union, a closed-form model, or tabulated samples.
class Transmission {
public:
    using Variant = std::variant<BoxcarSet, ClosedFormModel, TabulatedSamples>;

    Transmission() : v_(ClosedFormModel::zero()) {}
    Transmission(BoxcarSet b) : v_(std::move(b)) {}
    Transmission(ClosedFormModel m) : v_(m) {}
    Transmission(TabulatedSamples t) : v_(std::move(t)) {}

    const Variant& variant() const noexcept { return v_; }
    const BoxcarSet* boxcar() const noexcept { return std::get_if<BoxcarSet>(&v_); }

    bool is_zero() const noexcept {
        if (auto b = std::get_if<BoxcarSet>(&v_)) return b->empty();
        if (auto m = std::get_if<ClosedFormModel>(&v_))
            return m->kind == ClosedFormModel::Kind::Zero;
        return false;
    }

    double operator()(double eps) const noexcept {
        return std::visit(
            [eps](const auto& t) -> double {
                using T = std::decay_t<decltype(t)>;
                if constexpr (std::is_same_v<T, BoxcarSet>)
                    return t.contains(eps) ? 1.0 : 0.0;
                else
                    return t(eps);
            },
            v_);
    }

    /// Energies where T is non-smooth or varies fastest.
    std::vector<double> breakpoints() const {
        std::vector<double> out;
        if (auto b = std::get_if<BoxcarSet>(&v_)) {
            for (const auto& iv : b->intervals()) {
                out.push_back(iv.a);
                out.push_back(iv.b);
            }
        } else if (auto m = std::get_if<ClosedFormModel>(&v_)) {
            if (m->kind == ClosedFormModel::Kind::DoubleDot) {
                const double o = std::abs(m->omega_c), g = m->gamma;
                for (double c : {-o, 0.0, o})
                    for (double k : {-4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0})
                        out.push_back(m->omega + c + k * g);
            }
        } else if (auto t = std::get_if<TabulatedSamples>(&v_)) {
            out = t->energy();
        }
        return out;
    }

private:
    Variant v_;
};

}  // namespace thermobox
