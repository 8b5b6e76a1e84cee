// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Fits ProjectionParams to measured correspondences between frame positions
// and incidence directions (from a gimbal rig or checkerboard geometry).
//
// Correspondence files are line based:
//
//   # s t dir_x dir_y dir_z [weight]
//   0.5 0.5 0 0 1
//   0.75 0.5 0.3826834 0 0.9238795 2.0
//
// s,t are frame texture coordinates (origin bottom-left), dir is the unit
// incidence vector (x right, y up, z along the optical axis).

#include <ldes/core.hpp>
#include <ldes/parallel.hpp>
#include <ldes/params_file.hpp>
#include <ldes/projection.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace ldes::calibrate {

struct Correspondence {
    TexCoord pixel;
    Vec3 direction;
    double weight = 1.0;
};

enum class ParamKind { Omega, K, KX, KYTop, KYBottom, Squeeze, C1, C2, P1, P2, Q1, Q2, RadialX, RadialY };

/// One adjustable scalar of ProjectionParams. `K` ties k_x, k_y_top and
/// k_y_bottom together; `index` selects the radial coefficient (0-based).
struct ParamId {
    ParamKind kind = ParamKind::Omega;
    int index = 0;

    bool operator==(const ParamId&) const = default;
};

inline std::string param_name(ParamId id)
{
    switch (id.kind) {
    case ParamKind::Omega: return "omega_deg";
    case ParamKind::K: return "k";
    case ParamKind::KX: return "k_x";
    case ParamKind::KYTop: return "k_y_top";
    case ParamKind::KYBottom: return "k_y_bottom";
    case ParamKind::Squeeze: return "squeeze";
    case ParamKind::C1: return "c1";
    case ParamKind::C2: return "c2";
    case ParamKind::P1: return "p1";
    case ParamKind::P2: return "p2";
    case ParamKind::Q1: return "q1";
    case ParamKind::Q2: return "q2";
    case ParamKind::RadialX: return "kx" + std::to_string(id.index + 1);
    case ParamKind::RadialY: return "ky" + std::to_string(id.index + 1);
    }
    return "?";
}

/// Parses a comma-separated list such as "omega,k,squeeze,kx1".
inline std::vector<ParamId> parse_free_list(std::string_view list)
{
    std::vector<ParamId> out;
    std::string item;
    std::istringstream in{std::string(list)};
    while (std::getline(in, item, ',')) {
        const std::string_view name = ldes::detail::trim(item);
        if (name.empty())
            continue;
        ParamId id;
        if (name == "omega" || name == "omega_deg") id.kind = ParamKind::Omega;
        else if (name == "k") id.kind = ParamKind::K;
        else if (name == "k_x") id.kind = ParamKind::KX;
        else if (name == "k_y_top") id.kind = ParamKind::KYTop;
        else if (name == "k_y_bottom") id.kind = ParamKind::KYBottom;
        else if (name == "squeeze") id.kind = ParamKind::Squeeze;
        else if (name == "c1") id.kind = ParamKind::C1;
        else if (name == "c2") id.kind = ParamKind::C2;
        else if (name == "p1") id.kind = ParamKind::P1;
        else if (name == "p2") id.kind = ParamKind::P2;
        else if (name == "q1") id.kind = ParamKind::Q1;
        else if (name == "q2") id.kind = ParamKind::Q2;
        else if ((name.starts_with("kx") || name.starts_with("ky")) && name.size() > 2) {
            id.kind = name[1] == 'x' ? ParamKind::RadialX : ParamKind::RadialY;
            int n = 0;
            const auto digits = name.substr(2);
            const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
            if (ec != std::errc() || ptr != digits.data() + digits.size() || n < 1 || n > 16)
                throw Error(ErrorCode::InvalidArgument, "unknown fit parameter '" + std::string(name) + "'");
            id.index = n - 1;
        }
        else {
            throw Error(ErrorCode::InvalidArgument, "unknown fit parameter '" + std::string(name) + "'");
        }
        if (std::find(out.begin(), out.end(), id) == out.end())
            out.push_back(id);
    }
    return out;
}

struct FitConfig {
    std::vector<ParamId> free_parameters;
    int max_iterations = 200;
    double tolerance = 1e-10;      // on the relative cost decrease of an accepted step
    double damping_init = 1e-3;
    double cost_floor = 1e-24;     // sum of squared residuals treated as an exact fit
};

struct FitReport {
    double rms = 0.0;  // weighted RMS residual, frame (ST) units
    int iterations = 0;
    bool converged = false;
    std::vector<std::pair<std::string, double>> values;
    std::vector<std::string> warnings;
    std::vector<double> cost_history;  // cost after the seed and after every accepted step
};

struct FitResult {
    ProjectionParams params;
    FitReport report;
};

namespace detail {

inline double get_param(const ProjectionParams& p, ParamId id)
{
    auto series = [&](const std::vector<double>& ks) {
        return id.index < static_cast<int>(ks.size()) ? ks[id.index] : 0.0;
    };
    switch (id.kind) {
    case ParamKind::Omega: return p.omega.omega();
    case ParamKind::K:
    case ParamKind::KX: return p.k_x;
    case ParamKind::KYTop: return p.k_y_top;
    case ParamKind::KYBottom: return p.k_y_bottom;
    case ParamKind::Squeeze: return p.squeeze;
    case ParamKind::C1: return p.bc.c1;
    case ParamKind::C2: return p.bc.c2;
    case ParamKind::P1: return p.bc.p1;
    case ParamKind::P2: return p.bc.p2;
    case ParamKind::Q1: return p.bc.q1;
    case ParamKind::Q2: return p.bc.q2;
    case ParamKind::RadialX: return series(p.bc.radial_x);
    case ParamKind::RadialY: return series(p.bc.radial_y);
    }
    return 0.0;
}

// Projects the value onto its admissible box before storing it.
inline void set_param(ProjectionParams& p, ParamId id, double value)
{
    auto series = [&](std::vector<double>& ks) {
        if (static_cast<int>(ks.size()) <= id.index)
            ks.resize(id.index + 1, 0.0);
        ks[id.index] = value;
    };
    switch (id.kind) {
    case ParamKind::Omega: p.omega = FovAngle(std::clamp(value, 1e-6, 2.0 * kPi)); break;
    case ParamKind::K: p.k_x = p.k_y_top = p.k_y_bottom = std::clamp(value, -1.0, 1.0); break;
    case ParamKind::KX: p.k_x = std::clamp(value, -1.0, 1.0); break;
    case ParamKind::KYTop: p.k_y_top = std::clamp(value, -1.0, 1.0); break;
    case ParamKind::KYBottom: p.k_y_bottom = std::clamp(value, -1.0, 1.0); break;
    case ParamKind::Squeeze: p.squeeze = std::max(value, 1e-6); break;
    case ParamKind::C1: p.bc.c1 = value; break;
    case ParamKind::C2: p.bc.c2 = value; break;
    case ParamKind::P1: p.bc.p1 = value; break;
    case ParamKind::P2: p.bc.p2 = value; break;
    case ParamKind::Q1: p.bc.q1 = value; break;
    case ParamKind::Q2: p.bc.q2 = value; break;
    case ParamKind::RadialX: series(p.bc.radial_x); break;
    case ParamKind::RadialY: series(p.bc.radial_y); break;
    }
}

/// Predicted frame position of an incidence direction, if the model reaches it.
inline std::optional<TexCoord> predict(Vec3 direction, const ProjectionParams& p) noexcept
{
    const auto v = projection::try_inverse_model(projection::SphericalDirection::from_vector(direction), p);
    if (!v)
        return std::nullopt;
    return tex_from_image(*v, p.aspect);
}

// Residual assigned to a correspondence the model cannot reach.
inline constexpr double kUnreachable = 10.0;

class Problem {
public:
    Problem(std::span<const Correspondence> data, ProjectionParams seed, std::vector<ParamId> free)
        : data_(data), base_(std::move(seed)), free_(std::move(free))
    {
    }

    int size() const noexcept { return static_cast<int>(free_.size()); }
    int residual_count() const noexcept { return 2 * static_cast<int>(data_.size()); }

    Eigen::VectorXd initial() const
    {
        Eigen::VectorXd x(size());
        for (int i = 0; i < size(); ++i)
            x[i] = get_param(base_, free_[i]);
        return x;
    }

    /// Params for x, or nullopt when x violates the model's domain.
    std::optional<ProjectionParams> params_at(const Eigen::VectorXd& x) const
    {
        ProjectionParams p = base_;
        try {
            for (int i = 0; i < size(); ++i)
                set_param(p, free_[i], x[i]);
            projection::validate(p);
        }
        catch (const Error&) {
            return std::nullopt;
        }
        return p;
    }

    /// Projected copy of x (the box constraints applied by set_param).
    Eigen::VectorXd project(const Eigen::VectorXd& x) const
    {
        ProjectionParams p = base_;
        Eigen::VectorXd out(size());
        for (int i = 0; i < size(); ++i) {
            try {
                set_param(p, free_[i], x[i]);
            }
            catch (const Error&) {
            }
            out[i] = get_param(p, free_[i]);
        }
        return out;
    }

    /// Weighted residuals; nullopt if the parameters are invalid.
    std::optional<Eigen::VectorXd> residuals(const Eigen::VectorXd& x) const
    {
        const auto p = params_at(x);
        if (!p)
            return std::nullopt;
        Eigen::VectorXd r(residual_count());
        parallel_for(static_cast<int>(data_.size()), [&](int i) {
            const Correspondence& c = data_[i];
            const double sw = std::sqrt(c.weight);
            if (const auto st = predict(c.direction, *p)) {
                r[2 * i] = sw * (st->s - c.pixel.s);
                r[2 * i + 1] = sw * (st->t - c.pixel.t);
            }
            else {
                r[2 * i] = r[2 * i + 1] = sw * kUnreachable;
            }
        });
        return r;
    }

    /// Central-difference Jacobian, step step_scale * max(1, |x_i|).
    std::optional<Eigen::MatrixXd> jacobian(const Eigen::VectorXd& x, double step_scale = 1e-6) const
    {
        Eigen::MatrixXd j(residual_count(), size());
        for (int i = 0; i < size(); ++i) {
            const double h = step_scale * std::max(1.0, std::abs(x[i]));
            Eigen::VectorXd xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            auto rp = residuals(xp);
            auto rm = residuals(xm);
            double width = 2.0 * h;
            // One-sided at a domain or box edge.
            if (!rp) {
                rp = residuals(x);
                width = h;
            }
            else if (!rm) {
                rm = residuals(x);
                width = h;
            }
            if (!rp || !rm)
                return std::nullopt;
            j.col(i) = (*rp - *rm) / width;
        }
        return j;
    }

    const std::vector<ParamId>& free() const noexcept { return free_; }

private:
    std::span<const Correspondence> data_;
    ProjectionParams base_;
    std::vector<ParamId> free_;
};

inline std::vector<std::string> degeneracy_warnings(const Eigen::MatrixXd& j, const std::vector<ParamId>& free)
{
    std::vector<std::string> out;
    const int n = static_cast<int>(j.cols());
    for (int a = 0; a < n; ++a) {
        const double na = j.col(a).norm();
        if (na == 0.0) {
            out.push_back("parameter " + param_name(free[a]) + " does not affect the residual");
            continue;
        }
        for (int b = a + 1; b < n; ++b) {
            const double nb = j.col(b).norm();
            if (nb == 0.0)
                continue;
            const double corr = std::abs(j.col(a).dot(j.col(b))) / (na * nb);
            if (corr > 0.9999)
                out.push_back("rank deficiency: " + param_name(free[a]) + " and " + param_name(free[b]) +
                              " are correlated (" + std::to_string(corr) + ")");
        }
    }
    return out;
}

}  // namespace detail

/// Damped least squares (Levenberg-Marquardt with adaptive damping and
/// central-difference Jacobians) over the selected parameters, minimizing
/// sum_i w_i |predict(direction_i) - pixel_i|^2 in frame units.
/// Non-convergence is reported in the result, never thrown.
inline FitResult fit(std::span<const Correspondence> data, const ProjectionParams& seed, const FitConfig& config)
{
    projection::validate(seed);
    if (config.max_iterations < 0 || !(config.tolerance >= 0.0) || !(config.damping_init > 0.0))
        throw Error(ErrorCode::InvalidArgument, "invalid fit configuration");
    for (const Correspondence& c : data) {
        if (std::abs(c.direction.norm() - 1.0) > 1e-9)
            throw Error(ErrorCode::NonUnitDirection, "correspondence direction is not unit length");
        if (!(c.weight > 0.0))
            throw Error(ErrorCode::InvalidArgument, "correspondence weight must be positive");
    }
    if (data.size() < config.free_parameters.size())
        throw Error(ErrorCode::InvalidArgument, "fewer correspondences than free parameters");

    detail::Problem problem(data, seed, config.free_parameters);
    FitResult result{seed, {}};
    FitReport& report = result.report;
    double weight_sum = 0.0;
    for (const Correspondence& c : data)
        weight_sum += c.weight;
    auto rms_of = [&](double cost) { return weight_sum > 0.0 ? std::sqrt(cost / weight_sum) : 0.0; };
    auto record_values = [&](const ProjectionParams& p) {
        report.values.clear();
        for (ParamId id : config.free_parameters) {
            const double v = detail::get_param(p, id);
            report.values.emplace_back(param_name(id), id.kind == ParamKind::Omega ? degrees(v) : v);
        }
    };

    Eigen::VectorXd x = problem.initial();
    const auto r0 = problem.residuals(x);
    if (!r0)
        throw Error(ErrorCode::Domain, "seed parameters are outside the model domain");
    double cost = r0->squaredNorm();
    report.cost_history.push_back(cost);
    report.rms = rms_of(cost);
    record_values(seed);

    if (problem.size() == 0 || cost <= config.cost_floor) {
        report.converged = true;
        return result;
    }

    double lambda = config.damping_init;
    Eigen::VectorXd r = *r0;
    bool first = true;
    while (report.iterations < config.max_iterations) {
        const auto j = problem.jacobian(x);
        if (!j)
            break;
        if (first) {
            report.warnings = detail::degeneracy_warnings(*j, problem.free());
            first = false;
        }
        const Eigen::MatrixXd a = j->transpose() * *j;
        const Eigen::VectorXd g = j->transpose() * r;

        bool accepted = false;
        bool stalled = false;
        while (!accepted) {
            Eigen::MatrixXd damped = a;
            for (int i = 0; i < problem.size(); ++i)
                damped(i, i) += lambda * std::max(a(i, i), 1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            const Eigen::VectorXd candidate = problem.project(x + step);
            const auto rc = problem.residuals(candidate);
            const double candidate_cost = rc ? rc->squaredNorm() : std::numeric_limits<double>::infinity();
            if (candidate_cost < cost) {
                const double decrease = (cost - candidate_cost) / cost;
                x = candidate;
                r = *rc;
                cost = candidate_cost;
                lambda = std::max(lambda * 0.1, 1e-15);
                ++report.iterations;
                report.cost_history.push_back(cost);
                accepted = true;
                if (decrease < config.tolerance || cost <= config.cost_floor)
                    report.converged = true;
            }
            else {
                lambda *= 10.0;
                // Stationary at working precision.
                if (lambda > 1e16 || (candidate - x).norm() <= 1e-15 * (1.0 + x.norm())) {
                    stalled = true;
                    report.converged = true;
                    break;
                }
            }
        }
        if (stalled || report.converged)
            break;
    }

    result.params = *problem.params_at(x);
    report.rms = rms_of(cost);
    record_values(result.params);
    return result;
}

inline FitResult fit(const std::vector<Correspondence>& data, const ProjectionParams& seed, const FitConfig& config)
{
    return fit(std::span<const Correspondence>(data), seed, config);
}

inline std::vector<Correspondence> parse_correspondences(std::string_view text)
{
    std::vector<Correspondence> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos)
            raw.resize(hash);
        std::istringstream fields(raw);
        std::vector<double> values;
        std::string token;
        while (fields >> token) {
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
            if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v))
                throw Error(ErrorCode::MalformedInput,
                            "line " + std::to_string(line_no) + ": '" + token + "' is not a number");
            values.push_back(v);
        }
        if (values.empty())
            continue;
        if (values.size() != 5 && values.size() != 6)
            throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line_no) +
                                                       ": expected 's t dir_x dir_y dir_z [weight]'");
        Correspondence c{{values[0], values[1]}, {values[2], values[3], values[4]}, 1.0};
        if (values.size() == 6)
            c.weight = values[5];
        if (!(c.weight > 0.0))
            throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + ": weight must be positive");
        const double len = c.direction.norm();
        if (std::abs(len - 1.0) > 1e-6)
            throw Error(ErrorCode::NonUnitDirection,
                        "line " + std::to_string(line_no) + ": direction length " + std::to_string(len));
        c.direction = c.direction * (1.0 / len);
        out.push_back(c);
    }
    return out;
}

inline std::vector<Correspondence> read_correspondences(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open correspondence file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_correspondences(text.str());
}

/// Flat key-value rendering of a fit report.
inline std::string format_report(const FitReport& report)
{
    std::ostringstream out;
    out << "rms = " << ldes::detail::format_double(report.rms) << '\n'
        << "iterations = " << report.iterations << '\n'
        << "converged = " << (report.converged ? "true" : "false") << '\n';
    for (const auto& [name, value] : report.values)
        out << name << " = " << ldes::detail::format_double(value) << '\n';
    for (std::size_t i = 0; i < report.warnings.size(); ++i)
        out << "warning" << i + 1 << " = " << report.warnings[i] << '\n';
    return out.str();
}

}  // namespace ldes::calibrate
