// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include <dufay/colorimetry.hpp>
#include <dufay/image.hpp>

namespace dufay::reseau
{

/// Réseau element colours. The numeric value doubles as channel index.
enum class Element : std::uint8_t
{
    Red   = 0,
    Green = 1,
    Blue  = 2,
};

inline constexpr std::array<Element, 3> kElements = { Element::Red, Element::Green, Element::Blue };

inline constexpr int index( Element e ) noexcept
{
    return static_cast<int>( e );
}

const char *to_string( Element e ) noexcept;

// ---------------------------------------------------------------------------
// Primaries
// ---------------------------------------------------------------------------

struct PrimarySet
{
    color::XyY         red;
    color::XyY         green;
    color::XyY         blue;
    std::string        source_label;
    color::Illuminant  measurement_illuminant;

    [[nodiscard]] const color::XyY &primary( Element e ) const noexcept;
    [[nodiscard]] color::XYZ        primary_XYZ( Element e ) const;

    /// Area of the chromaticity triangle.
    [[nodiscard]] double triangle_area() const noexcept;
    [[nodiscard]] bool   is_collinear() const noexcept { return triangle_area() <= 1e-6; }

    /// TOML with [red]/[green]/[blue] tables holding x, y, Y, plus
    /// `source_label` and `measurement_illuminant`.
    static PrimarySet load( const std::filesystem::path &path, const color::CieTables &tables );
    static PrimarySet parse( std::string_view toml, const color::CieTables &tables );

    /// Bundled sets: "tab1", "tab2", "srgb".
    static PrimarySet bundled( std::string_view name, const color::CieTables &tables );
};

/// Primaries with per-element luminance multipliers.
struct BalancedPrimaries
{
    PrimarySet            base;
    std::array<double, 3> scale{ 1.0, 1.0, 1.0 };
    color::Chromaticity   target_whitepoint;

    [[nodiscard]] color::XYZ primary_XYZ( Element e ) const;

    /// Uniform rescale so that the mixture has Y = 1 without changing its
    /// chromaticity; the target becomes the mixture chromaticity.
    static BalancedPrimaries unbalanced( const PrimarySet &p, const struct AreaFractions &a );
};

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

/// Dufaycolor mosaic: red lines at print_angle_deg to the horizontal axis,
/// one red line per period; between red lines alternating green and blue
/// squares. Both print passes share the period 1000 / line_density µm.
struct ReseauGeometry
{
    double line_density      = 0.0; ///< lines per mm
    double print_angle_deg   = 0.0;
    double red_line_fraction = 0.0; ///< red line width / period
    double green_blue_ratio  = 0.0; ///< green square width / blue square width
    double square_width_um   = 0.0; ///< extent of a square across the red lines
    double second_pass_deviation_deg = 0.0;

    /// Throws InvalidArgument unless 0 < red_line_fraction < 1,
    /// green_blue_ratio > 0 and line_density > 0.
    void validate() const;

    [[nodiscard]] double pitch_um() const noexcept { return 1000.0 / line_density; }

    /// Green square width as a fraction of the period along the red lines.
    [[nodiscard]] double green_fraction_u() const noexcept
    {
        return green_blue_ratio / ( 1.0 + green_blue_ratio );
    }

    /// Smallest element dimension in µm.
    [[nodiscard]] double smallest_element_um() const noexcept;

    /// 42.1 / 26.5 / 31.4 % split with 28.9 µm squares at 23°.
    static ReseauGeometry nominal();

    static ReseauGeometry load( const std::filesystem::path &path );
    static ReseauGeometry parse( std::string_view toml );
};

struct AreaFractions
{
    double red   = 0.0;
    double green = 0.0;
    double blue  = 0.0;

    [[nodiscard]] double operator[]( Element e ) const noexcept
    {
        return e == Element::Red ? red : e == Element::Green ? green : blue;
    }

    /// Throws InvalidArgument unless each is in (0,1) and they sum to 1.
    void validate() const;
};

AreaFractions fractions_from_geometry( const ReseauGeometry &g );

/// Continuous réseau lattice coordinates. Cell (i, j) covers
/// u in [i, i+1), v in [j, j+1); within a cell v < red_line_fraction is red,
/// otherwise u < green_fraction_u is green and the rest blue.
struct GridPoint
{
    double u = 0.0;
    double v = 0.0;
};

/// Screen placement in the film plane (µm, y pointing down the raster).
class ScreenLayout
{
public:
    explicit ScreenLayout( const ReseauGeometry &g, double origin_x_um = 0.0, double origin_y_um = 0.0 );

    [[nodiscard]] GridPoint film_to_grid( double x_um, double y_um ) const noexcept;
    void grid_to_film( const GridPoint &g, double &x_um, double &y_um ) const noexcept;

    [[nodiscard]] const ReseauGeometry &geometry() const noexcept { return geometry_; }

    /// Basis vectors (µm) of one cell along u and v.
    [[nodiscard]] std::array<double, 4> basis() const noexcept
    {
        return { au_x_, au_y_, av_x_, av_y_ };
    }

private:
    ReseauGeometry geometry_;
    double         ox_, oy_;
    double         au_x_, au_y_, av_x_, av_y_;
    double         inv_[4];
};

/// Element containing the lattice point.
Element element_at( const GridPoint &g, const ReseauGeometry &geom ) noexcept;

/// Centre of the element inside its cell, in cell units.
GridPoint element_center( Element e, const ReseauGeometry &geom ) noexcept;

/// Element extent inside its cell: {u0, u1, v0, v1} in cell units.
std::array<double, 4> element_box( Element e, const ReseauGeometry &geom ) noexcept;

/// Analytic Fourier coefficient of an element's indicator over one cell,
/// for harmonic (m, n) of (u, v).
std::array<double, 2> element_fourier( Element e, const ReseauGeometry &geom, int m, int n ) noexcept;

struct ScreenMap
{
    ReseauGeometry        geometry;
    double                pixels_per_um = 1.0;
    Raster<std::uint8_t>  labels; ///< Element index per pixel

    [[nodiscard]] int width() const noexcept { return labels.width; }
    [[nodiscard]] int height() const noexcept { return labels.height; }
    [[nodiscard]] Element label( int x, int y ) const noexcept
    {
        return static_cast<Element>( labels.at( x, y ) );
    }
    [[nodiscard]] double extent_x_um() const noexcept { return labels.width / pixels_per_um; }
    [[nodiscard]] double extent_y_um() const noexcept { return labels.height / pixels_per_um; }

    /// Lattice coordinate of a pixel centre.
    [[nodiscard]] GridPoint grid_at( int x, int y ) const noexcept;

    [[nodiscard]] AreaFractions measured_fractions() const;
};

/// Throws ResolutionTooCoarse when the smallest element spans fewer than
/// 4 pixels. Zero extent yields an empty map.
ScreenMap build_screen( const ReseauGeometry &g, double pixels_per_um, double extent_x_um, double extent_y_um );

color::XYZ mixture_XYZ( const PrimarySet &p, const AreaFractions &a );
color::XYZ mixture_XYZ( const BalancedPrimaries &p, const AreaFractions &a );

/// Scales primary luminances so the area-weighted mixture has the target
/// chromaticity and Y = 1. Throws SingularSystem for collinear primaries and
/// GamutInfeasible when the target lies outside the primaries' triangle.
BalancedPrimaries white_balance( const PrimarySet &p, const AreaFractions &a, const color::Chromaticity &target );

PrimarySet primaries_from_spectra(
    const color::SpectralCurve    &red,
    const color::SpectralCurve    &green,
    const color::SpectralCurve    &blue,
    const color::Illuminant       &backlight,
    const color::StandardObserver &observer,
    std::string                    source_label = "spectral" );

struct RenderOptions
{
    /// Pull all three primaries toward the mixture white by a common amount
    /// until they fit the sRGB gamut. The area-weighted mean is unchanged.
    bool fit_gamut = true;
};

struct RenderResult
{
    Image8           image;
    double           desaturation = 0.0; ///< 0 = none, 1 = fully grey
    color::ClipStats clip;
    std::array<Rgb8, 3> colors{};
};

RenderResult render_reseau(
    const ScreenMap         &map,
    const BalancedPrimaries &p,
    const color::XYZ        &simulation_white,
    const RenderOptions     &options = {} );

RenderResult render_reseau(
    const ScreenMap     &map,
    const PrimarySet    &p,
    const color::XYZ    &simulation_white,
    const RenderOptions &options = {} );

} // namespace dufay::reseau
