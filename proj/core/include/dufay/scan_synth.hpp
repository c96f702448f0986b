// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include <dufay/element_field.hpp>
#include <dufay/image.hpp>
#include <dufay/reseau.hpp>

namespace dufay::synth
{

enum class Channel : int
{
    Red      = 0,
    Green    = 1,
    Blue     = 2,
    Infrared = 3,
};

/// Linear 16-bit scan with the infrared plane alongside R, G, B.
struct ScanImage
{
    std::array<Plane16, 4> planes;
    double                 pixels_per_um = 0.0;

    [[nodiscard]] int width() const noexcept { return planes[0].width; }
    [[nodiscard]] int height() const noexcept { return planes[0].height; }

    Plane16       &plane( Channel c ) noexcept { return planes[static_cast<std::size_t>( c )]; }
    const Plane16 &plane( Channel c ) const noexcept { return planes[static_cast<std::size_t>( c )]; }

    /// Throws DimensionMismatch unless all planes share one non-empty shape.
    void validate() const;
};

/// 2x2 matrix plus translation, in scan pixels, about the image centre.
struct AffineDistortion
{
    double a11 = 1.0, a12 = 0.0;
    double a21 = 0.0, a22 = 1.0;
    double tx = 0.0, ty = 0.0;

    [[nodiscard]] bool is_identity() const noexcept
    {
        return a11 == 1.0 && a12 == 0.0 && a21 == 0.0 && a22 == 1.0 && tx == 0.0 && ty == 0.0;
    }
};

struct DegradationSpec
{
    double           psf_sigma_center_px = 0.0;
    double           psf_sigma_corner_px = 0.0; ///< linear in distance from the centre
    AffineDistortion affine;
    double           displacement_px        = 0.0; ///< peak smooth displacement
    int              displacement_nodes     = 4;   ///< control points per axis
    double           noise_sigma            = 0.0; ///< fraction of full scale

    /// Throws InvalidArgument for negative sigmas or amplitudes.
    void validate() const;

    [[nodiscard]] double sigma_at( double x, double y, int width, int height ) const noexcept;

    static DegradationSpec none() { return {}; }
};

/// How element light reaches the scanner's RGB channels.
struct ScannerModel
{
    enum class Kind
    {
        Identity,  ///< channel k sees element k only
        Primaries, ///< channels are the linear sRGB of the balanced primaries
        Matrix,    ///< user-supplied response
    };

    Kind kind = Kind::Identity;
    /// response[channel][element]; used when kind == Matrix.
    std::array<std::array<double, 3>, 3> response{ { { 1, 0, 0 }, { 0, 1, 0 }, { 0, 0, 1 } } };

    [[nodiscard]] std::array<std::array<double, 3>, 3> resolve( const reseau::BalancedPrimaries &p ) const;

    static ScannerModel identity() { return {}; }
};

/// Known element transmittances of a synthetic film.
struct GroundTruth
{
    reseau::ReseauGeometry geometry;
    double                 film_pixels_per_um = 0.0;
    int                    film_width         = 0; ///< ScreenMap size in film pixels
    int                    film_height        = 0;
    reseau::ElementField   intensities;

    [[nodiscard]] double extent_x_um() const noexcept { return film_width / film_pixels_per_um; }
    [[nodiscard]] double extent_y_um() const noexcept { return film_height / film_pixels_per_um; }

    /// Intensity of the element under a lattice point; cells outside the
    /// block use the nearest stored cell, missing elements read as 0.
    [[nodiscard]] double intensity_at( const reseau::GridPoint &g ) const noexcept;
};

struct ScanSettings
{
    double        pixels_per_um = 0.2;
    int           width         = 0; ///< 0: cover the film extent
    int           height        = 0;
    std::uint64_t seed          = 0;
    int           supersample   = 4;
};

/// Maps scan pixel coordinates to film coordinates for a degradation.
class ScanWarp
{
public:
    ScanWarp( const DegradationSpec &deg, const ScanSettings &settings, int width, int height );

    /// Scan position (pixels, centre of pixel x at x + 0.5) to film µm.
    void scan_to_film( double x, double y, double &fx_um, double &fy_um ) const noexcept;

private:
    void displacement( double x, double y, double &ox, double &oy ) const noexcept;

    DegradationSpec     deg_;
    double              ppu_;
    double              cx_, cy_;
    int                 nodes_ = 0;
    double              step_x_ = 1.0, step_y_ = 1.0;
    std::vector<double> dx_, dy_; ///< displacement control values (px)
};

/// Element intensity = mean of the matching scene channel over the element
/// footprint. The scene must have the ScreenMap's dimensions.
GroundTruth expose( const RGBImage &scene, const reseau::ScreenMap &map );

ScanImage render_scan(
    const GroundTruth               &gt,
    const reseau::BalancedPrimaries &primaries,
    const DegradationSpec           &deg,
    const ScannerModel              &scanner,
    const ScanSettings              &settings );

/// Tiled patch scene covering the map: rows = floor(sqrt(n)),
/// cols = ceil(n / rows), row-major, unused tiles black.
RGBImage checker_target( const reseau::ScreenMap &map, const std::vector<color::RGB> &patch_colors );

/// Patch index of a film position for checker_target's layout, or -1.
int checker_patch_at( double fx_px, double fy_px, int film_width, int film_height, std::size_t patch_count ) noexcept;

/// Scene colour seen by each scan pixel centre (nearest film pixel).
RGBImage scene_in_scan( const RGBImage &scene, const GroundTruth &gt, const DegradationSpec &deg,
                        const ScanSettings &settings, int width, int height );

/// 24 patch colours in réseau-primary space: greys plus saturated and
/// mixed colours, all within [0.03, 0.95].
std::vector<color::RGB> default_patches();

/// Standard normal deviate determined by (seed, stream, x, y) alone.
double counter_normal( std::uint64_t seed, std::uint64_t stream, std::uint64_t x, std::uint64_t y ) noexcept;

/// Separable Gaussian blur with per-pixel sigma; edges replicate.
Plane blur( const Plane &in, const std::function<double( int, int )> &sigma_at );

} // namespace dufay::synth
