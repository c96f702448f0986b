// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <dufay/colorimetry.hpp>

namespace dufay
{

/// Row-major 2-D array of pixels. Pixel (x, y) covers [x, x+1) x [y, y+1)
/// in continuous coordinates; its centre is (x + 0.5, y + 0.5).
template <typename T> struct Raster
{
    int            width  = 0;
    int            height = 0;
    std::vector<T> pixels;

    Raster() = default;
    Raster( int w, int h, const T &fill = T{} )
        : width( w ), height( h ), pixels( static_cast<std::size_t>( w ) * static_cast<std::size_t>( h ), fill )
    {}

    [[nodiscard]] bool        empty() const noexcept { return pixels.empty(); }
    [[nodiscard]] std::size_t size() const noexcept { return pixels.size(); }

    T &at( int x, int y ) noexcept
    {
        return pixels[static_cast<std::size_t>( y ) * static_cast<std::size_t>( width ) + static_cast<std::size_t>( x )];
    }
    const T &at( int x, int y ) const noexcept
    {
        return pixels[static_cast<std::size_t>( y ) * static_cast<std::size_t>( width ) + static_cast<std::size_t>( x )];
    }

    [[nodiscard]] bool same_shape( const Raster &o ) const noexcept
    {
        return width == o.width && height == o.height;
    }

    bool operator==( const Raster &o ) const = default;
};

struct Rgb8
{
    std::uint8_t r = 0, g = 0, b = 0;
    bool operator==( const Rgb8 & ) const = default;
};

using Plane     = Raster<double>;
using RGBImage  = Raster<color::RGB>;
using XYZImage  = Raster<color::XYZ>;
using Image8    = Raster<Rgb8>;
using Plane16   = Raster<std::uint16_t>;

} // namespace dufay
