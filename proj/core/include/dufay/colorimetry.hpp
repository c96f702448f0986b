// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dufay::color
{

/// CIE 1931 chromaticity coordinates.
struct Chromaticity
{
    double x = 0.0;
    double y = 0.0;

    /// x > 0, y > 0 and x + y < 1.
    [[nodiscard]] bool is_valid() const noexcept;
};

/// Relative tristimulus values. Scale is caller-defined: tables use 0-100,
/// the reconstruction pipeline uses Y = 1 for the réseau white.
struct XYZ
{
    double X = 0.0;
    double Y = 0.0;
    double Z = 0.0;

    XYZ &operator+=( const XYZ &o ) noexcept
    {
        X += o.X;
        Y += o.Y;
        Z += o.Z;
        return *this;
    }
    friend XYZ operator+( XYZ a, const XYZ &b ) noexcept { return a += b; }
    friend XYZ operator-( const XYZ &a, const XYZ &b ) noexcept
    {
        return { a.X - b.X, a.Y - b.Y, a.Z - b.Z };
    }
    friend XYZ operator*( double s, const XYZ &a ) noexcept
    {
        return { s * a.X, s * a.Y, s * a.Z };
    }
    friend XYZ operator*( const XYZ &a, double s ) noexcept { return s * a; }
};

struct XyY
{
    Chromaticity chroma;
    double       Y = 0.0;
};

struct Lab
{
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
};

struct RGB
{
    double r = 0.0;
    double g = 0.0;
    double b = 0.0;
};

// ---------------------------------------------------------------------------
// Spectral data
// ---------------------------------------------------------------------------

/// Sampled curve over wavelength (nm). Wavelengths strictly increasing and
/// inside [300, 830]; at least two samples; values finite and non-negative.
class SpectralCurve
{
public:
    SpectralCurve() = default;
    SpectralCurve( std::vector<double> wavelengths, std::vector<double> values );

    /// Linear interpolation; clamps to the end values outside the range.
    [[nodiscard]] double value_at( double wavelength_nm ) const;

    [[nodiscard]] std::span<const double> wavelengths() const noexcept { return wl_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return val_; }
    [[nodiscard]] std::size_t size() const noexcept { return wl_.size(); }
    [[nodiscard]] bool empty() const noexcept { return wl_.empty(); }
    [[nodiscard]] double min_wavelength() const { return wl_.front(); }
    [[nodiscard]] double max_wavelength() const { return wl_.back(); }

    /// Throws InvalidArgument unless every value is a plausible
    /// transmission, i.e. inside [0, 1.05].
    void require_transmission() const;

    /// Constant curve over [lo, hi].
    static SpectralCurve flat( double value, double lo = 300.0, double hi = 830.0 );

    /// Parses `wavelength_nm,value` CSV text. The header line is required.
    static SpectralCurve parse_csv( std::string_view text );
    static SpectralCurve load_csv( const std::filesystem::path &path );

    [[nodiscard]] std::string to_csv() const;

    /// Pointwise a*this + b*other on this curve's grid.
    [[nodiscard]] SpectralCurve combine( double a, const SpectralCurve &other, double b ) const;

private:
    std::vector<double> wl_;
    std::vector<double> val_;
};

/// CIE 1931 2 degree colour-matching functions on a shared wavelength grid.
struct StandardObserver
{
    SpectralCurve xbar;
    SpectralCurve ybar;
    SpectralCurve zbar;

    /// Throws unless the three curves share one grid with non-negative values.
    void validate() const;

    [[nodiscard]] std::span<const double> wavelengths() const noexcept
    {
        return xbar.wavelengths();
    }

    /// Chromaticity of the monochromatic stimulus at grid index i.
    [[nodiscard]] Chromaticity locus_point( std::size_t i ) const;
};

struct Illuminant
{
    std::string                  name;
    std::optional<SpectralCurve> spd;
    Chromaticity                 whitepoint;

    /// Whitepoint as XYZ with the requested luminance.
    [[nodiscard]] XYZ white_XYZ( double Y = 1.0 ) const;
};

/// Read-only bundle of the shipped tables. Safe to share across threads.
class CieTables
{
public:
    /// Loads `cie1931_2deg_{x,y,z}bar.csv` and `illuminant_{A,B,C,D65,E}.csv`
    /// from the given directory.
    explicit CieTables( const std::filesystem::path &data_dir );

    [[nodiscard]] const StandardObserver &observer() const noexcept { return observer_; }

    /// Names A, B, C, D65, E (case-insensitive); "D<cct>" or a plain number
    /// yields a daylight whitepoint without SPD.
    [[nodiscard]] Illuminant illuminant( std::string_view name ) const;

    [[nodiscard]] const std::filesystem::path &data_dir() const noexcept { return dir_; }

private:
    std::filesystem::path   dir_;
    StandardObserver        observer_;
    std::vector<Illuminant> illuminants_;
};

/// Data directory: $DUFAY_DATA_DIR if set, else the build-time default.
std::filesystem::path default_data_dir();

/// Lazily constructed tables from default_data_dir().
const CieTables &tables();

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

/// Throws DegenerateChromaticity when y == 0.
XYZ xyY_to_XYZ( const XyY &c );

/// Throws DegenerateColor when X + Y + Z == 0.
XyY XYZ_to_xyY( const XYZ &t );

XYZ chromaticity_to_XYZ( const Chromaticity &c, double Y = 1.0 );

/// Tristimulus values of a transmitting sample under the illuminant, scaled
/// so that a perfect transmitter has Y = 100. The transmission is resampled
/// onto the observer grid; the illuminant is resampled likewise.
XYZ spectrum_to_XYZ(
    const SpectralCurve    &transmission,
    const Illuminant       &illuminant,
    const StandardObserver &observer );

/// Dominant wavelength in nm; negative complementary wavelength when the ray
/// from the whitepoint through the sample leaves through the purple line.
double dominant_wavelength(
    const Chromaticity     &sample,
    const Chromaticity     &whitepoint,
    const StandardObserver &observer );

/// Linear Bradford chromatic adaptation.
XYZ bradford_adapt( const XYZ &color, const XYZ &src_white, const XYZ &dst_white );

/// Negative components are clamped to 0 first; each clamp increments
/// lab_clamp_count().
Lab XYZ_to_Lab( const XYZ &t, const XYZ &whitepoint );

/// Number of XYZ_to_Lab calls that had to clamp a negative input.
std::size_t lab_clamp_count() noexcept;
void        reset_lab_clamp_count() noexcept;

/// CIEDE2000 with kL = kC = kH = 1.
double delta_e_2000( const Lab &a, const Lab &b );

/// Out-of-gamut tally for sRGB encoding.
struct ClipStats
{
    std::size_t total   = 0;
    std::size_t clipped = 0;

    [[nodiscard]] double fraction() const noexcept
    {
        return total == 0 ? 0.0 : static_cast<double>( clipped ) / static_cast<double>( total );
    }
};

/// D65 white with Y = 1.
XYZ d65_white();

/// Linear sRGB (no clipping, no transfer curve) of a D65-referred XYZ.
RGB XYZ_to_linear_sRGB( const XYZ &t );
XYZ linear_sRGB_to_XYZ( const RGB &rgb );

/// Bradford-adapts from simulation_white to D65, converts to sRGB, clips to
/// [0,1] and applies the sRGB transfer curve.
RGB XYZ_to_sRGB( const XYZ &t, const XYZ &simulation_white, ClipStats *stats = nullptr );

double srgb_encode( double linear ) noexcept;
double srgb_decode( double encoded ) noexcept;

/// CIE daylight locus chromaticity, valid for 4000-25000 K.
Chromaticity daylight_whitepoint( double cct_kelvin );

} // namespace dufay::color
