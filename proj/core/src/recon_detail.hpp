// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <dufay/reconstruct.hpp>

#include <array>
#include <cmath>

namespace dufay::recon::detail
{

inline std::array<double, 4> catmull_rom( double t ) noexcept
{
    double t2 = t * t, t3 = t2 * t;
    return { -0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0, -1.5 * t3 + 2.0 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2 };
}

/// Inverse by adjugate; returns false when |det| is negligible.
bool invert( const Matrix3 &m, Matrix3 &out ) noexcept;

/// 2-norm condition number.
double condition_number( const Matrix3 &m );

/// Scan channels unmixed into per-element light, normalised to [0, 1].
std::array<Plane, 3> label_planes( const synth::ScanImage &scan, const Matrix3 &response );

/// Gaussian blur with constant sigma; edges replicate.
Plane gaussian_blur( const Plane &in, double sigma );

} // namespace dufay::recon::detail
