// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Flat key-value text form of ProjectionParams.
//
//   # comment
//   description = Cinerama1950
//   omega_deg   = 146
//   k_x         = 0.5
//   k_y_top     = -0.5
//   k_y_bottom  = 0
//   squeeze     = 1
//   aspect      = 1.7777777777777777
//   c1 = 0        c2 = 0          (one key per line)
//   kx1 = 0.1     kx2 = 0 ...     radial series along x, contiguous from 1
//   ky1 = 0.1     ...             radial series along y
//   p1, p2, q1, q2
//
// "k" is shorthand that sets k_x, k_y_top and k_y_bottom at once. Keys that
// are absent keep their defaults (spherical equidistant, 90 deg, aspect 1).

#include <ldes/core.hpp>
#include <ldes/projection.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

namespace ldes {

struct ParamsDocument {
    ProjectionParams params;
    std::string description;  // optional, used for output file names
    bool aspect_given = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view text, int line, std::string_view key)
{
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value))
        throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line) + ": value of '" +
                                                   std::string(key) + "' is not a finite number");
    return value;
}

// Shortest decimal that reads back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline void set_series(std::map<int, double>& series, std::string_view key, std::string_view digits,
                       double value, int line)
{
    int index = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || index < 1)
        throw Error(ErrorCode::MalformedInput,
                    "line " + std::to_string(line) + ": unknown key '" + std::string(key) + "'");
    series[index] = value;
}

inline std::vector<double> series_to_vector(const std::map<int, double>& series, char axis)
{
    std::vector<double> out;
    for (const auto& [index, value] : series) {
        if (index != static_cast<int>(out.size()) + 1)
            throw Error(ErrorCode::MalformedInput, std::string("radial series k") + axis +
                                                       " must be numbered contiguously from 1");
        out.push_back(value);
    }
    return out;
}

}  // namespace detail

inline ParamsDocument parse_params(std::string_view text)
{
    ParamsDocument doc;
    ProjectionParams& p = doc.params;
    std::map<int, double> kx;
    std::map<int, double> ky;
    double omega_deg = p.omega.degrees_value();

    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + ": expected key = value");
        const std::string_view key = detail::trim(line.substr(0, eq));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw Error(ErrorCode::MalformedInput, "line " + std::to_string(line_no) + ": expected key = value");

        if (key == "description") {
            doc.description = std::string(value);
            continue;
        }
        const double x = detail::parse_double(value, line_no, key);
        if (key == "omega_deg") omega_deg = x;
        else if (key == "k") p.k_x = p.k_y_top = p.k_y_bottom = x;
        else if (key == "k_x") p.k_x = x;
        else if (key == "k_y_top") p.k_y_top = x;
        else if (key == "k_y_bottom") p.k_y_bottom = x;
        else if (key == "squeeze") p.squeeze = x;
        else if (key == "aspect") {
            p.aspect = x;
            doc.aspect_given = true;
        }
        else if (key == "c1") p.bc.c1 = x;
        else if (key == "c2") p.bc.c2 = x;
        else if (key == "p1") p.bc.p1 = x;
        else if (key == "p2") p.bc.p2 = x;
        else if (key == "q1") p.bc.q1 = x;
        else if (key == "q2") p.bc.q2 = x;
        else if (key.starts_with("kx")) detail::set_series(kx, key, key.substr(2), x, line_no);
        else if (key.starts_with("ky")) detail::set_series(ky, key, key.substr(2), x, line_no);
        else
            throw Error(ErrorCode::MalformedInput,
                        "line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    p.omega = FovAngle::from_degrees(omega_deg);
    p.bc.radial_x = detail::series_to_vector(kx, 'x');
    p.bc.radial_y = detail::series_to_vector(ky, 'y');
    projection::validate(p);
    return doc;
}

inline std::string format_params(const ParamsDocument& doc)
{
    const ProjectionParams& p = doc.params;
    std::ostringstream out;
    if (!doc.description.empty())
        out << "description = " << doc.description << '\n';
    out << "omega_deg = " << detail::format_double(p.omega.degrees_value()) << '\n'
        << "k_x = " << detail::format_double(p.k_x) << '\n'
        << "k_y_top = " << detail::format_double(p.k_y_top) << '\n'
        << "k_y_bottom = " << detail::format_double(p.k_y_bottom) << '\n'
        << "squeeze = " << detail::format_double(p.squeeze) << '\n'
        << "aspect = " << detail::format_double(p.aspect) << '\n';
    if (!p.bc.is_identity()) {
        out << "c1 = " << detail::format_double(p.bc.c1) << '\n'
            << "c2 = " << detail::format_double(p.bc.c2) << '\n';
        for (std::size_t i = 0; i < p.bc.radial_x.size(); ++i)
            out << "kx" << i + 1 << " = " << detail::format_double(p.bc.radial_x[i]) << '\n';
        for (std::size_t i = 0; i < p.bc.radial_y.size(); ++i)
            out << "ky" << i + 1 << " = " << detail::format_double(p.bc.radial_y[i]) << '\n';
        out << "p1 = " << detail::format_double(p.bc.p1) << '\n'
            << "p2 = " << detail::format_double(p.bc.p2) << '\n'
            << "q1 = " << detail::format_double(p.bc.q1) << '\n'
            << "q2 = " << detail::format_double(p.bc.q2) << '\n';
    }
    return out.str();
}

inline ParamsDocument read_params(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::Io, "cannot open params file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_params(text.str());
}

inline void write_params(const ParamsDocument& doc, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorCode::Io, "cannot write params file '" + path + "'");
    out << format_params(doc);
    if (!out)
        throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

}  // namespace ldes
