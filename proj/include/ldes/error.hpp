// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldes {

enum class ErrorCode {
    InvalidArgument,
    Domain,            // ray or radius outside the projection's domain
    SingularDivision,  // Brown-Conrady radial polynomial <= 0
    NoConvergence,
    OutOfField,
    Mismatch,          // dimensions or FOV labels disagree
    EmptyMap,
    FovMissing,
    UnsupportedDepth,
    ChannelMismatch,
    NonConforming,     // filename does not follow the naming convention
    MalformedInput,
    NonUnitDirection,
    NonPositive,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::SingularDivision: return "singular division";
    case ErrorCode::NoConvergence: return "no convergence";
    case ErrorCode::OutOfField: return "out of field";
    case ErrorCode::Mismatch: return "mismatch";
    case ErrorCode::EmptyMap: return "empty map";
    case ErrorCode::FovMissing: return "FOV label missing";
    case ErrorCode::UnsupportedDepth: return "unsupported bit depth";
    case ErrorCode::ChannelMismatch: return "channel mismatch";
    case ErrorCode::NonConforming: return "non-conforming filename";
    case ErrorCode::MalformedInput: return "malformed input";
    case ErrorCode::NonUnitDirection: return "non-unit direction";
    case ErrorCode::NonPositive: return "non-positive value";
    case ErrorCode::Io: return "i/o error";
    }
    return "error";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ldes
