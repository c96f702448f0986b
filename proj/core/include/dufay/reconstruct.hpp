// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <dufay/element_field.hpp>
#include <dufay/error.hpp>
#include <dufay/image.hpp>
#include <dufay/reseau.hpp>
#include <dufay/scan_synth.hpp>

namespace dufay::recon
{

using Matrix3 = std::array<std::array<double, 3>, 3>;

inline constexpr Matrix3 kIdentity3{ { { 1, 0, 0 }, { 0, 1, 0 }, { 0, 0, 1 } } };

// ---------------------------------------------------------------------------
// Registration
// ---------------------------------------------------------------------------

/// Scan pixel to réseau lattice mapping:
///     (u, v) = B (x, y) + c + r(x, y)
/// where (x, y) are continuous pixel coordinates (centre of pixel i at
/// i + 0.5) and r is a smooth residual interpolated from a coarse mesh.
struct GridModel
{
    reseau::ReseauGeometry geometry;
    int                    width  = 0;
    int                    height = 0;

    std::array<double, 4> linear{ 1, 0, 0, 1 }; ///< B, row-major
    std::array<double, 2> offset{ 0, 0 };       ///< c

    int                            mesh_nx = 0; ///< residual control points per axis
    int                            mesh_ny = 0;
    double                         mesh_step_x = 1.0;
    double                         mesh_step_y = 1.0;
    std::vector<reseau::GridPoint> mesh; ///< residual (du, dv) per control point

    double mean_residual_px = 0.0; ///< fit error at the measurement nodes
    double max_residual_px  = 0.0;
    int    nodes_used       = 0;

    [[nodiscard]] reseau::GridPoint to_grid( double x, double y ) const noexcept;
    [[nodiscard]] reseau::GridPoint affine_to_grid( double x, double y ) const noexcept;

    /// Inverse mapping by fixed-point iteration on the residual.
    void to_pixel( const reseau::GridPoint &g, double &x, double &y ) const noexcept;

    /// Period in pixels along u and v, and the angle of the u axis (degrees).
    [[nodiscard]] double period_u_px() const noexcept;
    [[nodiscard]] double period_v_px() const noexcept;
    [[nodiscard]] double angle_deg() const noexcept;

    /// Determinant of d(u,v)/d(x,y) including the residual.
    [[nodiscard]] double jacobian( double x, double y ) const noexcept;

    /// True when the Jacobian keeps the sign of det(B) over the mesh.
    [[nodiscard]] bool is_invertible() const noexcept;

    /// Pure affine model for a synthetic scan: undistorted film mapped at
    /// the given resolution.
    static GridModel from_layout( const reseau::ReseauGeometry &g, double pixels_per_um, int width, int height );
};

struct RegistrationOptions
{
    /// 0: derive from the scan resolution and the geometry.
    double  expected_period_px = 0.0;
    /// Spectral peak over median power in the search annulus.
    double  min_peak_ratio     = 40.0;
    /// Gaussian demodulation window, in periods.
    double  window_periods     = 1.0;
    /// Spacing of phase measurement nodes (0: 1.5 periods).
    double  node_step_px       = 0.0;
    /// Spacing of the residual control mesh (0: 6 periods).
    double  mesh_step_px       = 0.0;
    Matrix3 scanner_response   = kIdentity3;
};

/// Throws RegistrationFailed when no periodic pattern is found or the fit
/// is not invertible.
GridModel register_grid(
    const synth::ScanImage &scan, const reseau::ReseauGeometry &geometry, const RegistrationOptions &options = {} );

// ---------------------------------------------------------------------------
// Dot spread
// ---------------------------------------------------------------------------

struct DotSpread
{
    int width     = 0;
    int height    = 0;
    int regions_x = 0;
    int regions_y = 0;

    std::vector<double>       sigma;     ///< per region, pixels
    std::vector<std::uint8_t> confident; ///< 0 where sigma was interpolated
    std::vector<Matrix3>      mixing;    ///< [element][label], rows sum to 1

    [[nodiscard]] double sigma_at( int rx, int ry ) const noexcept
    {
        return sigma[static_cast<std::size_t>( ry * regions_x + rx )];
    }
    [[nodiscard]] const Matrix3 &mixing_at( int rx, int ry ) const noexcept
    {
        return mixing[static_cast<std::size_t>( ry * regions_x + rx )];
    }

    static DotSpread identity( int width, int height );
};

struct ExtractionOptions
{
    double white_level = 65535.0;
    /// Footprint weights ramp from 0 to 1 between these distances (pixels)
    /// from the element edge.
    double edge_inner_px = 0.7;
    double edge_outer_px = 1.7;
};

struct DotSpreadOptions
{
    int               regions   = 4; ///< per axis
    double            max_sigma = 4.0;
    Matrix3           scanner_response = kIdentity3;
    ExtractionOptions extraction;
};

DotSpread estimate_dot_spread( const synth::ScanImage &scan, const GridModel &grid, const DotSpreadOptions &options = {} );

// ---------------------------------------------------------------------------
// Intensities and demosaicing
// ---------------------------------------------------------------------------

struct ElementIntensities
{
    reseau::ElementField field;
    GridModel            grid;
    std::size_t          missing  = 0; ///< elements without any footprint sample
    std::size_t          infilled = 0;
};

/// Footprint weight of a pixel inside an element, from its distance to the
/// nearest element edge. Red segments end at the cell boundary.
double footprint_weight( const reseau::GridPoint &g, reseau::Element e, const GridModel &grid,
                         const ExtractionOptions &options ) noexcept;

ElementIntensities extract_intensities( const Plane16 &ir, const GridModel &grid, const ExtractionOptions &options = {} );
ElementIntensities extract_intensities( const Plane &ir, const GridModel &grid, const ExtractionOptions &options = {} );

/// Fills missing elements from valid neighbours of the same colour.
/// Returns the number of filled elements.
std::size_t infill_missing( reseau::ElementField &field );

/// Catmull-Rom interpolation of each element lattice onto the grid raster.
/// Throws InsufficientData below 4x4 elements per plane.
RGBImage demosaic( const ElementIntensities &e );

struct CompensationStats
{
    std::size_t clamped          = 0;
    std::size_t total            = 0;
    int         fallback_regions = 0;

    [[nodiscard]] double clamp_fraction() const noexcept
    {
        return total == 0 ? 0.0 : static_cast<double>( clamped ) / static_cast<double>( total );
    }
};

RGBImage compensate_saturation( const RGBImage &img, const DotSpread &ds, CompensationStats *stats = nullptr );

// ---------------------------------------------------------------------------
// Colorimetry
// ---------------------------------------------------------------------------

struct ReconstructionParams
{
    reseau::BalancedPrimaries primaries;
    reseau::AreaFractions     fractions;
    color::Illuminant         simulation_illuminant;
    bool                      normalize_exposure    = true;
    bool                      compensate_saturation = true;
    std::array<double, 3>     gains{ 1.0, 1.0, 1.0 }; ///< manual per-channel balance

    RegistrationOptions registration;
    DotSpreadOptions    dot_spread;
    ExtractionOptions   extraction;

    void validate() const;
};

/// Columns are the area-weighted, balanced primary XYZs.
Matrix3 colorimetric_matrix( const ReconstructionParams &params );

XYZImage to_colorimetric( const RGBImage &img, const ReconstructionParams &params );

/// Whitepoint of the output: the réseau mixture of (1, 1, 1).
color::XYZ output_white( const ReconstructionParams &params );

/// sRGB-encoded rendering, Bradford-adapted from `white` to D65.
RGBImage to_srgb( const XYZImage &xyz, const color::XYZ &white, color::ClipStats *stats = nullptr );

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

struct RunReport
{
    bool        ok = false;
    std::string failed_stage;
    std::string error_code;
    std::string error_message;

    double                mean_residual_px = 0.0;
    double                max_residual_px  = 0.0;
    double                period_u_px      = 0.0;
    double                period_v_px      = 0.0;
    double                angle_deg        = 0.0;
    std::array<double, 4> affine{};
    std::array<double, 2> offset{};

    int                       sigma_regions_x = 0;
    int                       sigma_regions_y = 0;
    std::vector<double>       sigma_map;
    std::vector<std::uint8_t> sigma_confident;

    std::size_t elements_total    = 0;
    std::size_t elements_missing  = 0;
    std::size_t elements_infilled = 0;
    double      clamp_fraction    = 0.0;
    int         fallback_regions  = 0;

    std::vector<std::pair<std::string, double>> timings_ms;
};

struct PipelineResult
{
    XYZImage  xyz;
    RGBImage  rgb; ///< compensated réseau-primary image
    RunReport report;
};

/// Carries the report assembled up to the failing stage.
class PipelineFailure : public Error
{
public:
    PipelineFailure( const Error &cause, RunReport report )
        : Error( cause.code(), cause.what() ), report_( std::move( report ) )
    {}

    [[nodiscard]] const RunReport &report() const noexcept { return report_; }

private:
    RunReport report_;
};

PipelineResult run_pipeline(
    const synth::ScanImage &scan, const reseau::ReseauGeometry &geometry, const ReconstructionParams &params );

} // namespace dufay::recon
