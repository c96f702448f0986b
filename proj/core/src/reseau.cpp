// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/config.hpp>
#include <dufay/error.hpp>
#include <dufay/parallel.hpp>
#include <dufay/reseau.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iterator>
#include <numbers>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

namespace dufay::reseau
{

using color::Chromaticity;
using color::XYZ;

const char *to_string( Element e ) noexcept
{
    switch ( e )
    {
        case Element::Red: return "red";
        case Element::Green: return "green";
        case Element::Blue: return "blue";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Primaries
// ---------------------------------------------------------------------------

const color::XyY &PrimarySet::primary( Element e ) const noexcept
{
    return e == Element::Red ? red : e == Element::Green ? green : blue;
}

XYZ PrimarySet::primary_XYZ( Element e ) const
{
    return color::xyY_to_XYZ( primary( e ) );
}

double PrimarySet::triangle_area() const noexcept
{
    const auto &r = red.chroma, &g = green.chroma, &b = blue.chroma;
    return 0.5 * std::abs( ( g.x - r.x ) * ( b.y - r.y ) - ( b.x - r.x ) * ( g.y - r.y ) );
}

PrimarySet PrimarySet::parse( std::string_view toml, const color::CieTables &tables )
{
    auto       doc = config::Document::parse( toml );
    PrimarySet p;
    p.source_label = doc.string( "source_label" ).value_or( "custom" );
    p.measurement_illuminant =
        tables.illuminant( doc.string( "measurement_illuminant" ).value_or( "C" ) );
    for ( Element e: kElements )
    {
        std::string t = to_string( e );
        color::XyY  c{ { doc.require_number( t + ".x" ), doc.require_number( t + ".y" ) },
                      doc.require_number( t + ".Y" ) };
        if ( !c.chroma.is_valid() || !( c.Y > 0.0 ) )
            throw Error( ErrorCode::InvalidArgument, "primary set: invalid " + t + " primary" );
        ( e == Element::Red ? p.red : e == Element::Green ? p.green : p.blue ) = c;
    }
    return p;
}

PrimarySet PrimarySet::load( const std::filesystem::path &path, const color::CieTables &tables )
{
    auto doc_text = [&] {
        std::ifstream in( path, std::ios::binary );
        if ( !in )
            throw Error( ErrorCode::IoError, "cannot open " + path.string() );
        return std::string( std::istreambuf_iterator<char>( in ), {} );
    }();
    return parse( doc_text, tables );
}

PrimarySet PrimarySet::bundled( std::string_view name, const color::CieTables &tables )
{
    std::string key( name );
    std::transform( key.begin(), key.end(), key.begin(), []( unsigned char c ) {
        return static_cast<char>( std::tolower( c ) );
    } );
    if ( key != "tab1" && key != "tab2" && key != "srgb" )
        throw Error( ErrorCode::InvalidArgument, "unknown primary set '" + std::string( name ) + "'" );
    return load( tables.data_dir() / "primaries" / ( key + ".toml" ), tables );
}

XYZ BalancedPrimaries::primary_XYZ( Element e ) const
{
    return scale[static_cast<std::size_t>( index( e ) )] * base.primary_XYZ( e );
}

BalancedPrimaries BalancedPrimaries::unbalanced( const PrimarySet &p, const AreaFractions &a )
{
    XYZ mix = mixture_XYZ( p, a );
    if ( !( mix.Y > 0.0 ) )
        throw Error( ErrorCode::DegenerateColor, "primary mixture has zero luminance" );
    double s = 1.0 / mix.Y;
    return { p, { s, s, s }, color::XYZ_to_xyY( mix ).chroma };
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

void ReseauGeometry::validate() const
{
    if ( !( line_density > 0.0 ) || !std::isfinite( line_density ) )
        throw Error( ErrorCode::InvalidArgument, "geometry: line_density must be positive" );
    if ( !( red_line_fraction > 0.0 && red_line_fraction < 1.0 ) )
        throw Error( ErrorCode::InvalidArgument, "geometry: red_line_fraction must be in (0, 1)" );
    if ( !( green_blue_ratio > 0.0 ) || !std::isfinite( green_blue_ratio ) )
        throw Error( ErrorCode::InvalidArgument, "geometry: green_blue_ratio must be positive" );
    if ( !std::isfinite( print_angle_deg ) || !std::isfinite( second_pass_deviation_deg ) ||
         std::abs( second_pass_deviation_deg ) >= 45.0 )
        throw Error( ErrorCode::InvalidArgument, "geometry: invalid print angle" );
}

double ReseauGeometry::smallest_element_um() const noexcept
{
    double p  = pitch_um();
    double gu = green_fraction_u();
    return p * std::min( { red_line_fraction, 1.0 - red_line_fraction, gu, 1.0 - gu } );
}

ReseauGeometry ReseauGeometry::nominal()
{
    ReseauGeometry g;
    g.red_line_fraction = 0.421;
    g.green_blue_ratio  = 0.265 / 0.314;
    g.square_width_um   = 28.9;
    g.line_density      = 1000.0 * ( 1.0 - g.red_line_fraction ) / g.square_width_um;
    g.print_angle_deg   = 23.0;
    return g;
}

ReseauGeometry ReseauGeometry::parse( std::string_view toml )
{
    auto           doc = config::Document::parse( toml );
    ReseauGeometry g   = nominal();
    g.line_density      = doc.number( "line_density" ).value_or( g.line_density );
    g.print_angle_deg   = doc.number( "print_angle_deg" ).value_or( g.print_angle_deg );
    g.red_line_fraction = doc.number( "red_line_fraction" ).value_or( g.red_line_fraction );
    g.green_blue_ratio  = doc.number( "green_blue_ratio" ).value_or( g.green_blue_ratio );
    g.square_width_um   = doc.number( "square_width_um" ).value_or( ( 1.0 - g.red_line_fraction ) * g.pitch_um() );
    g.second_pass_deviation_deg = doc.number( "second_pass_deviation_deg" ).value_or( 0.0 );
    g.validate();
    double implied = ( 1.0 - g.red_line_fraction ) * g.pitch_um();
    if ( std::abs( implied - g.square_width_um ) > 0.1 * g.square_width_um )
        spdlog::warn(
            "geometry: square_width_um {:.2f} disagrees with density/red fraction ({:.2f} um)",
            g.square_width_um, implied );
    return g;
}

ReseauGeometry ReseauGeometry::load( const std::filesystem::path &path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
        throw Error( ErrorCode::IoError, "cannot open " + path.string() );
    return parse( std::string( std::istreambuf_iterator<char>( in ), {} ) );
}

void AreaFractions::validate() const
{
    for ( double f: { red, green, blue } )
        if ( !( f > 0.0 && f < 1.0 ) )
            throw Error( ErrorCode::InvalidArgument, "area fractions must lie in (0, 1)" );
    if ( std::abs( red + green + blue - 1.0 ) > 1e-9 )
        throw Error( ErrorCode::InvalidArgument, "area fractions must sum to 1" );
}

AreaFractions fractions_from_geometry( const ReseauGeometry &g )
{
    g.validate();
    double rest = 1.0 - g.red_line_fraction;
    double r    = g.green_blue_ratio;
    return { g.red_line_fraction, rest * r / ( 1.0 + r ), rest / ( 1.0 + r ) };
}

ScreenLayout::ScreenLayout( const ReseauGeometry &g, double origin_x_um, double origin_y_um )
    : geometry_( g ), ox_( origin_x_um ), oy_( origin_y_um )
{
    g.validate();
    const double p  = g.pitch_um();
    const double th = g.print_angle_deg * std::numbers::pi / 180.0;
    const double dv = ( g.print_angle_deg + g.second_pass_deviation_deg ) * std::numbers::pi / 180.0;
    au_x_ = p * std::cos( th );
    au_y_ = p * std::sin( th );
    av_x_ = -p * std::sin( dv );
    av_y_ = p * std::cos( dv );
    double det = au_x_ * av_y_ - av_x_ * au_y_;
    inv_[0]    = av_y_ / det;
    inv_[1]    = -av_x_ / det;
    inv_[2]    = -au_y_ / det;
    inv_[3]    = au_x_ / det;
}

GridPoint ScreenLayout::film_to_grid( double x_um, double y_um ) const noexcept
{
    double dx = x_um - ox_, dy = y_um - oy_;
    return { inv_[0] * dx + inv_[1] * dy, inv_[2] * dx + inv_[3] * dy };
}

void ScreenLayout::grid_to_film( const GridPoint &g, double &x_um, double &y_um ) const noexcept
{
    x_um = ox_ + g.u * au_x_ + g.v * av_x_;
    y_um = oy_ + g.u * au_y_ + g.v * av_y_;
}

Element element_at( const GridPoint &g, const ReseauGeometry &geom ) noexcept
{
    double fv = g.v - std::floor( g.v );
    if ( fv < geom.red_line_fraction )
        return Element::Red;
    double fu = g.u - std::floor( g.u );
    return fu < geom.green_fraction_u() ? Element::Green : Element::Blue;
}

std::array<double, 4> element_box( Element e, const ReseauGeometry &geom ) noexcept
{
    const double f  = geom.red_line_fraction;
    const double gu = geom.green_fraction_u();
    switch ( e )
    {
        case Element::Red: return { 0.0, 1.0, 0.0, f };
        case Element::Green: return { 0.0, gu, f, 1.0 };
        case Element::Blue: return { gu, 1.0, f, 1.0 };
    }
    return {};
}

GridPoint element_center( Element e, const ReseauGeometry &geom ) noexcept
{
    auto b = element_box( e, geom );
    return { 0.5 * ( b[0] + b[1] ), 0.5 * ( b[2] + b[3] ) };
}

std::array<double, 2> element_fourier( Element e, const ReseauGeometry &geom, int m, int n ) noexcept
{
    // Integral of exp(-2 pi i k t) over [a, b].
    auto segment = []( double a, double b, int k ) -> std::complex<double> {
        if ( k == 0 )
            return b - a;
        const double w = -2.0 * std::numbers::pi * k;
        std::complex<double> ea( std::cos( w * a ), std::sin( w * a ) );
        std::complex<double> eb( std::cos( w * b ), std::sin( w * b ) );
        return ( eb - ea ) / std::complex<double>( 0.0, w );
    };
    auto box = element_box( e, geom );
    auto c   = segment( box[0], box[1], m ) * segment( box[2], box[3], n );
    return { c.real(), c.imag() };
}

GridPoint ScreenMap::grid_at( int x, int y ) const noexcept
{
    ScreenLayout layout( geometry );
    return layout.film_to_grid( ( x + 0.5 ) / pixels_per_um, ( y + 0.5 ) / pixels_per_um );
}

AreaFractions ScreenMap::measured_fractions() const
{
    std::array<std::size_t, 3> counts{};
    for ( auto l: labels.pixels )
        ++counts[l];
    double n = static_cast<double>( labels.size() );
    if ( n == 0.0 )
        return {};
    return { counts[0] / n, counts[1] / n, counts[2] / n };
}

ScreenMap build_screen( const ReseauGeometry &g, double pixels_per_um, double extent_x_um, double extent_y_um )
{
    g.validate();
    if ( !( pixels_per_um > 0.0 ) )
        throw Error( ErrorCode::InvalidArgument, "build_screen: resolution must be positive" );
    if ( g.smallest_element_um() * pixels_per_um < 4.0 )
        throw Error(
            ErrorCode::ResolutionTooCoarse,
            "build_screen: smallest element spans " +
                std::to_string( g.smallest_element_um() * pixels_per_um ) + " px, need >= 4" );
    if ( extent_x_um < 0.0 || extent_y_um < 0.0 )
        throw Error( ErrorCode::InvalidArgument, "build_screen: negative extent" );

    ScreenMap map;
    map.geometry      = g;
    map.pixels_per_um = pixels_per_um;
    int w             = static_cast<int>( std::lround( extent_x_um * pixels_per_um ) );
    int h             = static_cast<int>( std::lround( extent_y_um * pixels_per_um ) );
    map.labels        = Raster<std::uint8_t>( w, h );

    ScreenLayout layout( g );
    parallel_for( h, [&]( int y0, int y1 ) {
        for ( int y = y0; y < y1; ++y )
            for ( int x = 0; x < w; ++x )
            {
                auto gp = layout.film_to_grid( ( x + 0.5 ) / pixels_per_um, ( y + 0.5 ) / pixels_per_um );
                map.labels.at( x, y ) = static_cast<std::uint8_t>( element_at( gp, g ) );
            }
    } );
    return map;
}

// ---------------------------------------------------------------------------
// Mixtures and balancing
// ---------------------------------------------------------------------------

XYZ mixture_XYZ( const PrimarySet &p, const AreaFractions &a )
{
    XYZ sum;
    for ( Element e: kElements )
        sum += a[e] * p.primary_XYZ( e );
    return sum;
}

XYZ mixture_XYZ( const BalancedPrimaries &p, const AreaFractions &a )
{
    XYZ sum;
    for ( Element e: kElements )
        sum += a[e] * p.primary_XYZ( e );
    return sum;
}

BalancedPrimaries white_balance( const PrimarySet &p, const AreaFractions &a, const Chromaticity &target )
{
    a.validate();
    if ( p.is_collinear() )
        throw Error( ErrorCode::SingularSystem, "white_balance: primaries are collinear" );
    if ( !target.is_valid() )
        throw Error( ErrorCode::InvalidArgument, "white_balance: invalid target chromaticity" );

    Eigen::Matrix3d m;
    for ( Element e: kElements )
    {
        XYZ c = a[e] * p.primary_XYZ( e );
        m.col( index( e ) ) << c.X, c.Y, c.Z;
    }
    XYZ             w = color::chromaticity_to_XYZ( target, 1.0 );
    Eigen::Vector3d rhs( w.X, w.Y, w.Z );
    Eigen::FullPivLU<Eigen::Matrix3d> lu( m );
    if ( !lu.isInvertible() )
        throw Error( ErrorCode::SingularSystem, "white_balance: singular primary matrix" );
    Eigen::Vector3d s = lu.solve( rhs );
    for ( int i = 0; i < 3; ++i )
        if ( !( s[i] > 0.0 ) )
            throw Error(
                ErrorCode::GamutInfeasible,
                "white_balance: target lies outside the primaries' gamut (negative " +
                    std::string( to_string( kElements[static_cast<std::size_t>( i )] ) ) + " scale)" );
    return { p, { s[0], s[1], s[2] }, target };
}

PrimarySet primaries_from_spectra(
    const color::SpectralCurve    &red,
    const color::SpectralCurve    &green,
    const color::SpectralCurve    &blue,
    const color::Illuminant       &backlight,
    const color::StandardObserver &observer,
    std::string                    source_label )
{
    auto one = [&]( const color::SpectralCurve &c ) {
        c.require_transmission();
        return color::XYZ_to_xyY( color::spectrum_to_XYZ( c, backlight, observer ) );
    };
    PrimarySet p;
    p.red                    = one( red );
    p.green                  = one( green );
    p.blue                   = one( blue );
    p.source_label           = std::move( source_label );
    p.measurement_illuminant = backlight;
    if ( p.is_collinear() )
        spdlog::warn( "primaries_from_spectra: primaries are collinear; white balance is impossible" );
    return p;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace
{

RenderResult render_colors( const ScreenMap &map, std::array<XYZ, 3> colors, const XYZ &simulation_white,
                            const RenderOptions &options )
{
    RenderResult out;
    AreaFractions a = fractions_from_geometry( map.geometry );
    XYZ           white;
    for ( Element e: kElements )
        white += a[e] * colors[static_cast<std::size_t>( index( e ) )];

    auto to_linear = [&]( const XYZ &c ) {
        XYZ d65 = color::d65_white() * simulation_white.Y;
        return color::XYZ_to_linear_sRGB( color::bradford_adapt( c, simulation_white, d65 ) );
    };

    color::RGB lw = to_linear( white );
    double     alpha = 0.0;
    if ( options.fit_gamut )
    {
        for ( const auto &c: colors )
        {
            color::RGB lc = to_linear( c );
            for ( auto [v, w]: { std::pair{ lc.r, lw.r }, std::pair{ lc.g, lw.g }, std::pair{ lc.b, lw.b } } )
                if ( v < 0.0 && w > v )
                    alpha = std::max( alpha, -v / ( w - v ) );
        }
        alpha = std::min( alpha, 1.0 );
        for ( auto &c: colors )
            c = ( 1.0 - alpha ) * c + alpha * white;
    }
    // Exposure: brightest channel of the brightest element maps to 1.
    double peak = 0.0;
    for ( const auto &c: colors )
    {
        color::RGB lc = to_linear( c );
        peak          = std::max( { peak, lc.r, lc.g, lc.b } );
    }
    double k = peak > 0.0 ? 1.0 / peak : 1.0;

    for ( std::size_t i = 0; i < 3; ++i )
    {
        color::RGB s = color::XYZ_to_sRGB( k * colors[i], simulation_white, &out.clip );
        auto q = []( double v ) {
            return static_cast<std::uint8_t>( std::lround( std::clamp( v, 0.0, 1.0 ) * 255.0 ) );
        };
        out.colors[i] = { q( s.r ), q( s.g ), q( s.b ) };
    }
    out.desaturation = alpha;
    out.image        = Image8( map.width(), map.height() );
    for ( std::size_t i = 0; i < map.labels.size(); ++i )
        out.image.pixels[i] = out.colors[map.labels.pixels[i]];
    return out;
}

} // namespace

RenderResult render_reseau(
    const ScreenMap &map, const BalancedPrimaries &p, const XYZ &simulation_white, const RenderOptions &options )
{
    return render_colors(
        map, { p.primary_XYZ( Element::Red ), p.primary_XYZ( Element::Green ), p.primary_XYZ( Element::Blue ) },
        simulation_white, options );
}

RenderResult render_reseau(
    const ScreenMap &map, const PrimarySet &p, const XYZ &simulation_white, const RenderOptions &options )
{
    return render_colors(
        map,
        { 0.01 * p.primary_XYZ( Element::Red ), 0.01 * p.primary_XYZ( Element::Green ),
          0.01 * p.primary_XYZ( Element::Blue ) },
        simulation_white, options );
}

} // namespace dufay::reseau
