// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/error.hpp>

namespace dufay
{

std::string_view to_string( ErrorCode code ) noexcept
{
    switch ( code )
    {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DegenerateChromaticity: return "DegenerateChromaticity";
        case ErrorCode::DegenerateColor: return "DegenerateColor";
        case ErrorCode::SpectralRangeMismatch: return "SpectralRangeMismatch";
        case ErrorCode::UndefinedDominantWavelength: return "UndefinedDominantWavelength";
        case ErrorCode::AdaptationSingularity: return "AdaptationSingularity";
        case ErrorCode::UnsupportedCCT: return "UnsupportedCCT";
        case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
        case ErrorCode::GamutInfeasible: return "GamutInfeasible";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::ExtentMismatch: return "ExtentMismatch";
        case ErrorCode::RegistrationFailed: return "RegistrationFailed";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace dufay
