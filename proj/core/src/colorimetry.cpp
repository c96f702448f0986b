// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/colorimetry.hpp>
#include <dufay/error.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include <spdlog/spdlog.h>

#ifndef DUFAY_DEFAULT_DATA_DIR
#    define DUFAY_DEFAULT_DATA_DIR "data"
#endif

namespace dufay::color
{

namespace
{

using Mat3 = std::array<std::array<double, 3>, 3>;

constexpr Mat3 kBradford = { { { 0.8951, 0.2664, -0.1614 },
                               { -0.7502, 1.7135, 0.0367 },
                               { 0.0389, -0.0685, 1.0296 } } };

// IEC 61966-2-1 matrices, D65 reference white.
constexpr Mat3 kXYZToSRGB = { { { 3.2404542, -1.5371385, -0.4985314 },
                                { -0.9692660, 1.8760108, 0.0415560 },
                                { 0.0556434, -0.2040259, 1.0572252 } } };

constexpr Mat3 kSRGBToXYZ = { { { 0.4124564, 0.3575761, 0.1804375 },
                                { 0.2126729, 0.7151522, 0.0721750 },
                                { 0.0193339, 0.1191920, 0.9503041 } } };

constexpr Chromaticity kD65 = { 0.31271, 0.32902 };

std::array<double, 3> mul( const Mat3 &m, const std::array<double, 3> &v ) noexcept
{
    std::array<double, 3> r{};
    for ( int i = 0; i < 3; ++i )
        r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    return r;
}

Mat3 inverse( const Mat3 &m ) noexcept
{
    double det = m[0][0] * ( m[1][1] * m[2][2] - m[1][2] * m[2][1] ) -
                 m[0][1] * ( m[1][0] * m[2][2] - m[1][2] * m[2][0] ) +
                 m[0][2] * ( m[1][0] * m[2][1] - m[1][1] * m[2][0] );
    Mat3 r{};
    for ( int i = 0; i < 3; ++i )
        for ( int j = 0; j < 3; ++j )
        {
            int i1 = ( j + 1 ) % 3, i2 = ( j + 2 ) % 3;
            int j1 = ( i + 1 ) % 3, j2 = ( i + 2 ) % 3;
            r[i][j] = ( m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1] ) / det;
        }
    return r;
}

const Mat3 &bradford_inverse() noexcept
{
    static const Mat3 inv = inverse( kBradford );
    return inv;
}

std::atomic<std::size_t> g_lab_clamps{ 0 };

std::string lower( std::string_view s )
{
    std::string out( s );
    std::transform( out.begin(), out.end(), out.begin(), []( unsigned char c ) {
        return static_cast<char>( std::tolower( c ) );
    } );
    return out;
}

bool parse_double( std::string_view s, double &out )
{
    while ( !s.empty() && ( s.front() == ' ' || s.front() == '\t' ) )
        s.remove_prefix( 1 );
    while ( !s.empty() && ( s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ) )
        s.remove_suffix( 1 );
    if ( s.empty() )
        return false;
    if ( s.front() == '+' )
        s.remove_prefix( 1 );
    auto [ptr, ec] = std::from_chars( s.data(), s.data() + s.size(), out );
    return ec == std::errc() && ptr == s.data() + s.size();
}

} // namespace

bool Chromaticity::is_valid() const noexcept
{
    return std::isfinite( x ) && std::isfinite( y ) && x > 0.0 && y > 0.0 && x + y < 1.0;
}

// ---------------------------------------------------------------------------
// SpectralCurve
// ---------------------------------------------------------------------------

SpectralCurve::SpectralCurve( std::vector<double> wavelengths, std::vector<double> values )
    : wl_( std::move( wavelengths ) ), val_( std::move( values ) )
{
    if ( wl_.size() != val_.size() )
        throw Error( ErrorCode::InvalidArgument, "spectral curve: wavelength/value count mismatch" );
    if ( wl_.size() < 2 )
        throw Error( ErrorCode::InvalidArgument, "spectral curve: need at least 2 samples" );
    for ( std::size_t i = 0; i < wl_.size(); ++i )
    {
        if ( !std::isfinite( wl_[i] ) || wl_[i] < 300.0 || wl_[i] > 830.0 )
            throw Error(
                ErrorCode::InvalidArgument,
                "spectral curve: wavelength outside [300, 830] nm: " + std::to_string( wl_[i] ) );
        if ( i > 0 && !( wl_[i] > wl_[i - 1] ) )
            throw Error(
                ErrorCode::InvalidArgument, "spectral curve: wavelengths must be strictly increasing" );
        if ( !std::isfinite( val_[i] ) || val_[i] < 0.0 )
            throw Error(
                ErrorCode::InvalidArgument, "spectral curve: values must be finite and non-negative" );
    }
}

double SpectralCurve::value_at( double wavelength_nm ) const
{
    if ( wavelength_nm <= wl_.front() )
        return val_.front();
    if ( wavelength_nm >= wl_.back() )
        return val_.back();
    auto   it = std::upper_bound( wl_.begin(), wl_.end(), wavelength_nm );
    size_t hi = static_cast<size_t>( it - wl_.begin() );
    size_t lo = hi - 1;
    double t  = ( wavelength_nm - wl_[lo] ) / ( wl_[hi] - wl_[lo] );
    return val_[lo] + t * ( val_[hi] - val_[lo] );
}

void SpectralCurve::require_transmission() const
{
    for ( double v: val_ )
        if ( v > 1.05 )
            throw Error(
                ErrorCode::InvalidArgument,
                "transmission curve value " + std::to_string( v ) + " exceeds 1.05" );
}

SpectralCurve SpectralCurve::flat( double value, double lo, double hi )
{
    return SpectralCurve( { lo, hi }, { value, value } );
}

SpectralCurve SpectralCurve::parse_csv( std::string_view text )
{
    std::vector<double> wl, val;
    std::size_t         line_no = 0;
    bool                header  = false;
    while ( !text.empty() )
    {
        auto             nl   = text.find( '\n' );
        std::string_view line = text.substr( 0, nl );
        text.remove_prefix( nl == std::string_view::npos ? text.size() : nl + 1 );
        ++line_no;
        if ( !line.empty() && line.back() == '\r' )
            line.remove_suffix( 1 );
        if ( line.empty() )
            continue;
        if ( !header )
        {
            if ( line.substr( 0, 13 ) != "wavelength_nm" )
                throw Error(
                    ErrorCode::ParseError, "spectral CSV: expected header 'wavelength_nm,value'" );
            header = true;
            continue;
        }
        auto comma = line.find( ',' );
        double w, v;
        if ( comma == std::string_view::npos || !parse_double( line.substr( 0, comma ), w ) ||
             !parse_double( line.substr( comma + 1 ), v ) )
            throw Error(
                ErrorCode::ParseError,
                "spectral CSV: malformed line " + std::to_string( line_no ) );
        wl.push_back( w );
        val.push_back( v );
    }
    if ( !header )
        throw Error( ErrorCode::ParseError, "spectral CSV: empty input" );
    return SpectralCurve( std::move( wl ), std::move( val ) );
}

SpectralCurve SpectralCurve::load_csv( const std::filesystem::path &path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
        throw Error( ErrorCode::IoError, "cannot open " + path.string() );
    std::stringstream ss;
    ss << in.rdbuf();
    try
    {
        return parse_csv( ss.str() );
    }
    catch ( const Error &e )
    {
        throw Error( e.code(), path.string() + ": " + e.what() );
    }
}

std::string SpectralCurve::to_csv() const
{
    std::string out = "wavelength_nm,value\n";
    char        buf[64];
    for ( std::size_t i = 0; i < wl_.size(); ++i )
    {
        auto n = std::snprintf( buf, sizeof buf, "%.10g,%.10g\n", wl_[i], val_[i] );
        out.append( buf, static_cast<std::size_t>( n ) );
    }
    return out;
}

SpectralCurve SpectralCurve::combine( double a, const SpectralCurve &other, double b ) const
{
    std::vector<double> v( wl_.size() );
    for ( std::size_t i = 0; i < wl_.size(); ++i )
        v[i] = a * val_[i] + b * other.value_at( wl_[i] );
    return SpectralCurve( wl_, std::move( v ) );
}

// ---------------------------------------------------------------------------
// Observer / illuminants
// ---------------------------------------------------------------------------

void StandardObserver::validate() const
{
    auto w = xbar.wavelengths();
    if ( w.empty() || !std::equal( w.begin(), w.end(), ybar.wavelengths().begin(), ybar.wavelengths().end() ) ||
         !std::equal( w.begin(), w.end(), zbar.wavelengths().begin(), zbar.wavelengths().end() ) )
        throw Error( ErrorCode::InvalidArgument, "observer: curves must share one wavelength grid" );
}

Chromaticity StandardObserver::locus_point( std::size_t i ) const
{
    double X = xbar.values()[i], Y = ybar.values()[i], Z = zbar.values()[i];
    double s = X + Y + Z;
    return { X / s, Y / s };
}

XYZ Illuminant::white_XYZ( double Y ) const
{
    return chromaticity_to_XYZ( whitepoint, Y );
}

CieTables::CieTables( const std::filesystem::path &data_dir ) : dir_( data_dir )
{
    observer_.xbar = SpectralCurve::load_csv( dir_ / "cie1931_2deg_xbar.csv" );
    observer_.ybar = SpectralCurve::load_csv( dir_ / "cie1931_2deg_ybar.csv" );
    observer_.zbar = SpectralCurve::load_csv( dir_ / "cie1931_2deg_zbar.csv" );
    observer_.validate();

    const std::array<std::pair<const char *, Chromaticity>, 5> known = { {
        { "A", { 0.44757, 0.40745 } },
        { "B", { 0.3485, 0.3517 } },
        { "C", { 0.31006, 0.31616 } },
        { "D65", kD65 },
        { "E", { 1.0 / 3.0, 1.0 / 3.0 } },
    } };
    for ( const auto &[name, wp]: known )
    {
        Illuminant ill{ name, SpectralCurve::load_csv( dir_ / ( std::string( "illuminant_" ) + name + ".csv" ) ), wp };
        XyY computed = XYZ_to_xyY( spectrum_to_XYZ( SpectralCurve::flat( 1.0 ), ill, observer_ ) );
        if ( std::abs( computed.chroma.x - wp.x ) > 1e-3 || std::abs( computed.chroma.y - wp.y ) > 1e-3 )
            throw Error(
                ErrorCode::InvalidArgument,
                std::string( "illuminant " ) + name + ": SPD disagrees with its whitepoint" );
        illuminants_.push_back( std::move( ill ) );
    }
}

Illuminant CieTables::illuminant( std::string_view name ) const
{
    std::string key = lower( name );
    for ( const auto &ill: illuminants_ )
        if ( lower( ill.name ) == key )
            return ill;

    std::string_view digits = name;
    if ( !digits.empty() && ( digits.front() == 'D' || digits.front() == 'd' ) )
        digits.remove_prefix( 1 );
    if ( !digits.empty() && ( digits.back() == 'K' || digits.back() == 'k' ) )
        digits.remove_suffix( 1 );
    double cct = 0.0;
    if ( parse_double( digits, cct ) )
    {
        // D50, D55 style names are in hundreds of kelvin.
        if ( cct < 400.0 && name.size() > 1 && ( name.front() == 'D' || name.front() == 'd' ) )
            cct *= 100.0 * 1.4388 / 1.438;
        return Illuminant{ std::string( name ), std::nullopt, daylight_whitepoint( cct ) };
    }
    throw Error( ErrorCode::InvalidArgument, "unknown illuminant '" + std::string( name ) + "'" );
}

std::filesystem::path default_data_dir()
{
    if ( const char *env = std::getenv( "DUFAY_DATA_DIR" ); env && *env )
        return env;
#ifdef DUFAY_INSTALL_DATA_DIR
    if ( !std::filesystem::exists( DUFAY_DEFAULT_DATA_DIR ) )
        return DUFAY_INSTALL_DATA_DIR;
#endif
    return DUFAY_DEFAULT_DATA_DIR;
}

const CieTables &tables()
{
    static const CieTables instance( default_data_dir() );
    return instance;
}

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

XYZ xyY_to_XYZ( const XyY &c )
{
    const auto [x, y] = c.chroma;
    if ( y == 0.0 )
        throw Error( ErrorCode::DegenerateChromaticity, "xyY_to_XYZ: y == 0" );
    return { x * c.Y / y, c.Y, ( 1.0 - x - y ) * c.Y / y };
}

XyY XYZ_to_xyY( const XYZ &t )
{
    double s = t.X + t.Y + t.Z;
    if ( s == 0.0 )
        throw Error( ErrorCode::DegenerateColor, "XYZ_to_xyY: X + Y + Z == 0" );
    return { { t.X / s, t.Y / s }, t.Y };
}

XYZ chromaticity_to_XYZ( const Chromaticity &c, double Y )
{
    return xyY_to_XYZ( { c, Y } );
}

XYZ spectrum_to_XYZ(
    const SpectralCurve    &transmission,
    const Illuminant       &illuminant,
    const StandardObserver &observer )
{
    if ( !illuminant.spd )
        throw Error(
            ErrorCode::InvalidArgument,
            "spectrum_to_XYZ: illuminant '" + illuminant.name + "' has no spectral data" );
    auto grid = observer.wavelengths();
    auto disjoint = [&]( const SpectralCurve &c ) {
        return c.max_wavelength() < grid.front() || c.min_wavelength() > grid.back();
    };
    if ( disjoint( transmission ) || disjoint( *illuminant.spd ) )
        throw Error(
            ErrorCode::SpectralRangeMismatch, "spectrum_to_XYZ: curve does not overlap the observer range" );

    auto xb = observer.xbar.values(), yb = observer.ybar.values(), zb = observer.zbar.values();
    XYZ  acc;
    double norm = 0.0;
    for ( std::size_t i = 0; i < grid.size(); ++i )
    {
        double s = illuminant.spd->value_at( grid[i] );
        double t = transmission.value_at( grid[i] );
        acc.X += s * t * xb[i];
        acc.Y += s * t * yb[i];
        acc.Z += s * t * zb[i];
        norm += s * yb[i];
    }
    if ( norm <= 0.0 )
        throw Error( ErrorCode::SpectralRangeMismatch, "spectrum_to_XYZ: illuminant has no energy" );
    return ( 100.0 / norm ) * acc;
}

double dominant_wavelength(
    const Chromaticity     &sample,
    const Chromaticity     &whitepoint,
    const StandardObserver &observer )
{
    const double dx = sample.x - whitepoint.x;
    const double dy = sample.y - whitepoint.y;
    if ( std::hypot( dx, dy ) <= 1e-6 )
        throw Error(
            ErrorCode::UndefinedDominantWavelength,
            "dominant_wavelength: sample coincides with the whitepoint" );

    auto grid = observer.wavelengths();

    // Intersect the line whitepoint + t*(dx,dy) with every locus segment;
    // keep the farthest hit in each direction.
    struct Hit
    {
        double t  = 0.0;
        double wl = 0.0;
        bool   ok = false;
    };
    Hit forward, backward;

    Chromaticity prev = observer.locus_point( 0 );
    for ( std::size_t i = 1; i < grid.size(); ++i )
    {
        Chromaticity cur = observer.locus_point( i );
        double       ex = cur.x - prev.x, ey = cur.y - prev.y;
        double       den = dx * ey - dy * ex;
        if ( std::abs( den ) > 1e-15 )
        {
            double wx = prev.x - whitepoint.x, wy = prev.y - whitepoint.y;
            double t  = ( wx * ey - wy * ex ) / den;
            double u  = ( wx * dy - wy * dx ) / den;
            if ( u >= 0.0 && u <= 1.0 )
            {
                double wl  = grid[i - 1] + u * ( grid[i] - grid[i - 1] );
                Hit   &dst = t > 0.0 ? forward : backward;
                if ( !dst.ok || std::abs( t ) > std::abs( dst.t ) )
                    dst = { t, wl, true };
            }
        }
        prev = cur;
    }

    // A forward hit only counts if the locus is reached before the purple
    // line closing the diagram.
    Chromaticity first = observer.locus_point( 0 );
    Chromaticity last  = observer.locus_point( grid.size() - 1 );
    double       px = last.x - first.x, py = last.y - first.y;
    double       pden = dx * py - dy * px;
    double       purple_t = -1.0;
    if ( std::abs( pden ) > 1e-15 )
    {
        double wx = first.x - whitepoint.x, wy = first.y - whitepoint.y;
        double t  = ( wx * py - wy * px ) / pden;
        double u  = ( wx * dy - wy * dx ) / pden;
        if ( u >= 0.0 && u <= 1.0 && t > 0.0 )
            purple_t = t;
    }

    if ( forward.ok && ( purple_t < 0.0 || forward.t >= purple_t ) )
        return forward.wl;
    if ( backward.ok )
        return -backward.wl;
    throw Error(
        ErrorCode::UndefinedDominantWavelength,
        "dominant_wavelength: whitepoint lies outside the spectral locus" );
}

XYZ bradford_adapt( const XYZ &color, const XYZ &src_white, const XYZ &dst_white )
{
    if ( !( src_white.Y > 0.0 ) || !( dst_white.Y > 0.0 ) )
        throw Error( ErrorCode::InvalidArgument, "bradford_adapt: whitepoints need Y > 0" );
    auto src = mul( kBradford, { src_white.X, src_white.Y, src_white.Z } );
    auto dst = mul( kBradford, { dst_white.X, dst_white.Y, dst_white.Z } );
    auto c   = mul( kBradford, { color.X, color.Y, color.Z } );
    for ( int i = 0; i < 3; ++i )
    {
        if ( src[i] == 0.0 )
            throw Error(
                ErrorCode::AdaptationSingularity, "bradford_adapt: zero cone response in source white" );
        c[i] *= dst[i] / src[i];
    }
    auto r = mul( bradford_inverse(), c );
    return { r[0], r[1], r[2] };
}

Lab XYZ_to_Lab( const XYZ &t, const XYZ &whitepoint )
{
    constexpr double eps   = 216.0 / 24389.0; // (6/29)^3
    constexpr double slope = 24389.0 / 27.0 / 116.0;
    auto f = [&]( double v ) {
        return v > eps ? std::cbrt( v ) : slope * v + 16.0 / 116.0;
    };
    XYZ c = t;
    if ( c.X < 0.0 || c.Y < 0.0 || c.Z < 0.0 )
    {
        c.X = std::max( c.X, 0.0 );
        c.Y = std::max( c.Y, 0.0 );
        c.Z = std::max( c.Z, 0.0 );
        g_lab_clamps.fetch_add( 1, std::memory_order_relaxed );
    }
    double fx = f( c.X / whitepoint.X );
    double fy = f( c.Y / whitepoint.Y );
    double fz = f( c.Z / whitepoint.Z );
    return { 116.0 * fy - 16.0, 500.0 * ( fx - fy ), 200.0 * ( fy - fz ) };
}

std::size_t lab_clamp_count() noexcept
{
    return g_lab_clamps.load( std::memory_order_relaxed );
}

void reset_lab_clamp_count() noexcept
{
    g_lab_clamps.store( 0, std::memory_order_relaxed );
}

double delta_e_2000( const Lab &lab1, const Lab &lab2 )
{
    using std::numbers::pi;
    constexpr double deg    = pi / 180.0;
    constexpr double pow257 = 6103515625.0; // 25^7

    double C1    = std::hypot( lab1.a, lab1.b );
    double C2    = std::hypot( lab2.a, lab2.b );
    double Cbar  = 0.5 * ( C1 + C2 );
    double Cbar7 = std::pow( Cbar, 7.0 );
    double G     = 0.5 * ( 1.0 - std::sqrt( Cbar7 / ( Cbar7 + pow257 ) ) );
    double a1p   = ( 1.0 + G ) * lab1.a;
    double a2p   = ( 1.0 + G ) * lab2.a;
    double C1p   = std::hypot( a1p, lab1.b );
    double C2p   = std::hypot( a2p, lab2.b );

    auto hue = []( double b, double ap ) {
        if ( b == 0.0 && ap == 0.0 )
            return 0.0;
        double h = std::atan2( b, ap ) / deg;
        return h < 0.0 ? h + 360.0 : h;
    };
    double h1p = hue( lab1.b, a1p );
    double h2p = hue( lab2.b, a2p );

    double dLp = lab2.L - lab1.L;
    double dCp = C2p - C1p;
    double dhp = 0.0;
    if ( C1p * C2p != 0.0 )
    {
        dhp = h2p - h1p;
        if ( dhp > 180.0 )
            dhp -= 360.0;
        else if ( dhp < -180.0 )
            dhp += 360.0;
    }
    double dHp = 2.0 * std::sqrt( C1p * C2p ) * std::sin( 0.5 * dhp * deg );

    double Lbarp = 0.5 * ( lab1.L + lab2.L );
    double Cbarp = 0.5 * ( C1p + C2p );
    double hbarp = h1p + h2p;
    if ( C1p * C2p != 0.0 )
    {
        if ( std::abs( h1p - h2p ) <= 180.0 )
            hbarp *= 0.5;
        else if ( h1p + h2p < 360.0 )
            hbarp = 0.5 * ( h1p + h2p + 360.0 );
        else
            hbarp = 0.5 * ( h1p + h2p - 360.0 );
    }

    double T = 1.0 - 0.17 * std::cos( ( hbarp - 30.0 ) * deg ) + 0.24 * std::cos( 2.0 * hbarp * deg ) +
               0.32 * std::cos( ( 3.0 * hbarp + 6.0 ) * deg ) -
               0.20 * std::cos( ( 4.0 * hbarp - 63.0 ) * deg );
    double dTheta = 30.0 * std::exp( -std::pow( ( hbarp - 275.0 ) / 25.0, 2.0 ) );
    double Cbarp7 = std::pow( Cbarp, 7.0 );
    double RC     = 2.0 * std::sqrt( Cbarp7 / ( Cbarp7 + pow257 ) );
    double L50    = ( Lbarp - 50.0 ) * ( Lbarp - 50.0 );
    double SL     = 1.0 + 0.015 * L50 / std::sqrt( 20.0 + L50 );
    double SC     = 1.0 + 0.045 * Cbarp;
    double SH     = 1.0 + 0.015 * Cbarp * T;
    double RT     = -std::sin( 2.0 * dTheta * deg ) * RC;

    double tL = dLp / SL;
    double tC = dCp / SC;
    double tH = dHp / SH;
    return std::sqrt( tL * tL + tC * tC + tH * tH + RT * tC * tH );
}

XYZ d65_white()
{
    return chromaticity_to_XYZ( kD65, 1.0 );
}

RGB XYZ_to_linear_sRGB( const XYZ &t )
{
    auto v = mul( kXYZToSRGB, { t.X, t.Y, t.Z } );
    return { v[0], v[1], v[2] };
}

XYZ linear_sRGB_to_XYZ( const RGB &rgb )
{
    auto v = mul( kSRGBToXYZ, { rgb.r, rgb.g, rgb.b } );
    return { v[0], v[1], v[2] };
}

double srgb_encode( double v ) noexcept
{
    return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow( v, 1.0 / 2.4 ) - 0.055;
}

double srgb_decode( double v ) noexcept
{
    return v <= 0.04045 ? v / 12.92 : std::pow( ( v + 0.055 ) / 1.055, 2.4 );
}

RGB XYZ_to_sRGB( const XYZ &t, const XYZ &simulation_white, ClipStats *stats )
{
    // Match luminance of the two whites so that only chromaticity adapts.
    XYZ d65     = d65_white() * simulation_white.Y;
    XYZ adapted = bradford_adapt( t, simulation_white, d65 );
    RGB lin     = XYZ_to_linear_sRGB( adapted );
    bool clipped = false;
    auto clip    = [&]( double v ) {
        if ( v < 0.0 || v > 1.0 || !std::isfinite( v ) )
        {
            clipped = true;
            return std::isfinite( v ) ? std::clamp( v, 0.0, 1.0 ) : 0.0;
        }
        return v;
    };
    RGB out{ srgb_encode( clip( lin.r ) ), srgb_encode( clip( lin.g ) ), srgb_encode( clip( lin.b ) ) };
    if ( stats )
    {
        ++stats->total;
        if ( clipped )
            ++stats->clipped;
    }
    return out;
}

Chromaticity daylight_whitepoint( double cct )
{
    if ( !( cct >= 4000.0 && cct <= 25000.0 ) )
        throw Error(
            ErrorCode::UnsupportedCCT,
            "daylight_whitepoint: " + std::to_string( cct ) + " K outside [4000, 25000]" );
    double t  = cct;
    double t2 = t * t, t3 = t2 * t;
    double x  = t <= 7000.0 ? -4.6070e9 / t3 + 2.9678e6 / t2 + 0.09911e3 / t + 0.244063
                            : -2.0064e9 / t3 + 1.9018e6 / t2 + 0.24748e3 / t + 0.237040;
    double y = -3.0 * x * x + 2.87 * x - 0.275;
    return { x, y };
}

} // namespace dufay::color
