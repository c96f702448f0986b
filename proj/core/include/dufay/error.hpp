// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dufay
{

enum class ErrorCode
{
    InvalidArgument,
    DegenerateChromaticity,
    DegenerateColor,
    SpectralRangeMismatch,
    UndefinedDominantWavelength,
    AdaptationSingularity,
    UnsupportedCCT,
    ResolutionTooCoarse,
    GamutInfeasible,
    SingularSystem,
    ExtentMismatch,
    RegistrationFailed,
    InsufficientData,
    DimensionMismatch,
    EmptyInput,
    ParseError,
    IoError,
};

std::string_view to_string( ErrorCode code ) noexcept;

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error
{
public:
    Error( ErrorCode code, const std::string &message )
        : std::runtime_error( message ), code_( code )
    {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace dufay
