// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/error.hpp>
#include <dufay/parallel.hpp>
#include <dufay/scan_synth.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dufay::synth
{

using reseau::Element;
using reseau::GridPoint;

namespace
{

std::uint64_t splitmix64( std::uint64_t z ) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = ( z ^ ( z >> 30 ) ) * 0xbf58476d1ce4e5b9ULL;
    z = ( z ^ ( z >> 27 ) ) * 0x94d049bb133111ebULL;
    return z ^ ( z >> 31 );
}

double to_unit( std::uint64_t h ) noexcept
{
    // 53 random bits in (0, 1).
    return ( static_cast<double>( h >> 11 ) + 0.5 ) * 0x1.0p-53;
}

// Catmull-Rom weights for fractional offset t in [0, 1).
std::array<double, 4> catmull_rom( double t ) noexcept
{
    double t2 = t * t, t3 = t2 * t;
    return { -0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0, -1.5 * t3 + 2.0 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2 };
}

} // namespace

double counter_normal( std::uint64_t seed, std::uint64_t stream, std::uint64_t x, std::uint64_t y ) noexcept
{
    std::uint64_t k  = splitmix64( splitmix64( splitmix64( seed ) ^ stream ) ^ ( x << 32 | ( y & 0xffffffffULL ) ) );
    double        u1 = to_unit( k );
    double        u2 = to_unit( splitmix64( k ) );
    return std::sqrt( -2.0 * std::log( u1 ) ) * std::cos( 2.0 * std::numbers::pi * u2 );
}

void ScanImage::validate() const
{
    if ( planes[0].empty() )
        throw Error( ErrorCode::DimensionMismatch, "scan: empty image" );
    for ( const auto &p: planes )
        if ( !p.same_shape( planes[0] ) || p.size() != planes[0].size() )
            throw Error( ErrorCode::DimensionMismatch, "scan: planes differ in size" );
}

void DegradationSpec::validate() const
{
    for ( double v: { psf_sigma_center_px, psf_sigma_corner_px, displacement_px, noise_sigma } )
        if ( !( v >= 0.0 ) || !std::isfinite( v ) )
            throw Error( ErrorCode::InvalidArgument, "degradation: sigmas and amplitudes must be >= 0" );
    if ( displacement_nodes < 2 )
        throw Error( ErrorCode::InvalidArgument, "degradation: need at least 2 displacement nodes" );
    double det = affine.a11 * affine.a22 - affine.a12 * affine.a21;
    if ( !( det > 0.0 ) )
        throw Error( ErrorCode::InvalidArgument, "degradation: affine map must preserve orientation" );
}

double DegradationSpec::sigma_at( double x, double y, int width, int height ) const noexcept
{
    if ( psf_sigma_center_px == psf_sigma_corner_px )
        return psf_sigma_center_px;
    double cx = 0.5 * width, cy = 0.5 * height;
    double r  = std::hypot( x - cx, y - cy ) / std::max( 1e-12, std::hypot( cx, cy ) );
    return psf_sigma_center_px + ( psf_sigma_corner_px - psf_sigma_center_px ) * std::min( r, 1.0 );
}

std::array<std::array<double, 3>, 3> ScannerModel::resolve( const reseau::BalancedPrimaries &p ) const
{
    if ( kind != Kind::Primaries )
        return response;
    std::array<std::array<double, 3>, 3> r{};
    double                               peak = 0.0;
    for ( Element e: reseau::kElements )
    {
        auto rgb = color::XYZ_to_linear_sRGB( p.primary_XYZ( e ) );
        auto k   = static_cast<std::size_t>( index( e ) );
        r[0][k]  = std::max( 0.0, rgb.r );
        r[1][k]  = std::max( 0.0, rgb.g );
        r[2][k]  = std::max( 0.0, rgb.b );
        peak     = std::max( { peak, r[0][k], r[1][k], r[2][k] } );
    }
    for ( auto &row: r )
        for ( auto &v: row )
            v = peak > 0.0 ? v / peak : 0.0;
    return r;
}

double GroundTruth::intensity_at( const GridPoint &g ) const noexcept
{
    const auto &f = intensities;
    if ( f.cols == 0 || f.rows == 0 )
        return 0.0;
    int     i = std::clamp( static_cast<int>( std::floor( g.u ) ), f.i0, f.i0 + f.cols - 1 );
    int     j = std::clamp( static_cast<int>( std::floor( g.v ) ), f.j0, f.j0 + f.rows - 1 );
    Element e = reseau::element_at( g, geometry );
    return f.is_valid( e, i, j ) ? f.value( e, i, j ) : 0.0;
}

// ---------------------------------------------------------------------------
// Warp
// ---------------------------------------------------------------------------

ScanWarp::ScanWarp( const DegradationSpec &deg, const ScanSettings &settings, int width, int height )
    : deg_( deg ), ppu_( settings.pixels_per_um ), cx_( 0.5 * width ), cy_( 0.5 * height )
{
    deg.validate();
    if ( deg.displacement_px <= 0.0 || width <= 0 || height <= 0 )
        return;
    nodes_  = deg.displacement_nodes;
    step_x_ = static_cast<double>( width ) / ( nodes_ - 1 );
    step_y_ = static_cast<double>( height ) / ( nodes_ - 1 );
    dx_.resize( static_cast<std::size_t>( nodes_ * nodes_ ) );
    dy_.resize( dx_.size() );
    for ( int j = 0; j < nodes_; ++j )
        for ( int i = 0; i < nodes_; ++i )
        {
            auto k = static_cast<std::size_t>( j * nodes_ + i );
            dx_[k] = counter_normal( settings.seed, 101, static_cast<std::uint64_t>( i ), static_cast<std::uint64_t>( j ) );
            dy_[k] = counter_normal( settings.seed, 102, static_cast<std::uint64_t>( i ), static_cast<std::uint64_t>( j ) );
        }

    // Scale so the largest displacement on a dense sample equals the amplitude.
    double peak = 0.0;
    for ( int y = 0; y <= height; y += 4 )
        for ( int x = 0; x <= width; x += 4 )
        {
            double ox, oy;
            displacement( x, y, ox, oy );
            peak = std::max( peak, std::hypot( ox, oy ) );
        }
    if ( peak > 0.0 )
        for ( std::size_t k = 0; k < dx_.size(); ++k )
        {
            dx_[k] *= deg.displacement_px / peak;
            dy_[k] *= deg.displacement_px / peak;
        }
}

void ScanWarp::displacement( double x, double y, double &ox, double &oy ) const noexcept
{
    ox = oy = 0.0;
    if ( nodes_ == 0 )
        return;
    double sx = std::clamp( x / step_x_, 0.0, nodes_ - 1.0 );
    double sy = std::clamp( y / step_y_, 0.0, nodes_ - 1.0 );
    int    ix = std::min( static_cast<int>( sx ), nodes_ - 2 );
    int    iy = std::min( static_cast<int>( sy ), nodes_ - 2 );
    auto   wx = catmull_rom( sx - ix );
    auto   wy = catmull_rom( sy - iy );
    for ( int m = 0; m < 4; ++m )
    {
        int jj = std::clamp( iy - 1 + m, 0, nodes_ - 1 );
        for ( int n = 0; n < 4; ++n )
        {
            int    ii = std::clamp( ix - 1 + n, 0, nodes_ - 1 );
            double w  = wx[static_cast<std::size_t>( n )] * wy[static_cast<std::size_t>( m )];
            auto   k  = static_cast<std::size_t>( jj * nodes_ + ii );
            ox += w * dx_[k];
            oy += w * dy_[k];
        }
    }
}

void ScanWarp::scan_to_film( double x, double y, double &fx_um, double &fy_um ) const noexcept
{
    const auto &a  = deg_.affine;
    double      px = x - cx_, py = y - cy_;
    double      ox, oy;
    displacement( x, y, ox, oy );
    fx_um = ( a.a11 * px + a.a12 * py + cx_ + a.tx + ox ) / ppu_;
    fy_um = ( a.a21 * px + a.a22 * py + cy_ + a.ty + oy ) / ppu_;
}

// ---------------------------------------------------------------------------
// Exposure
// ---------------------------------------------------------------------------

GroundTruth expose( const RGBImage &scene, const reseau::ScreenMap &map )
{
    if ( scene.width != map.width() || scene.height != map.height() )
        throw Error(
            ErrorCode::ExtentMismatch,
            "expose: scene is " + std::to_string( scene.width ) + "x" + std::to_string( scene.height ) +
                ", screen is " + std::to_string( map.width() ) + "x" + std::to_string( map.height() ) );

    GroundTruth gt;
    gt.geometry           = map.geometry;
    gt.film_pixels_per_um = map.pixels_per_um;
    gt.film_width         = map.width();
    gt.film_height        = map.height();
    if ( map.labels.empty() )
        return gt;

    int imin = INT32_MAX, imax = INT32_MIN, jmin = INT32_MAX, jmax = INT32_MIN;
    for ( auto [x, y]: { std::pair{ 0, 0 }, { map.width() - 1, 0 }, { 0, map.height() - 1 },
                         { map.width() - 1, map.height() - 1 } } )
    {
        auto g = map.grid_at( x, y );
        imin   = std::min( imin, static_cast<int>( std::floor( g.u ) ) - 1 );
        imax   = std::max( imax, static_cast<int>( std::floor( g.u ) ) + 1 );
        jmin   = std::min( jmin, static_cast<int>( std::floor( g.v ) ) - 1 );
        jmax   = std::max( jmax, static_cast<int>( std::floor( g.v ) ) + 1 );
    }
    reseau::ElementField field( imin, jmin, imax - imin + 1, jmax - jmin + 1 );
    std::array<std::vector<double>, 3> count;
    for ( auto &c: count )
        c.assign( field.values[0].size(), 0.0 );

    reseau::ScreenLayout layout( map.geometry );
    for ( int y = 0; y < map.height(); ++y )
        for ( int x = 0; x < map.width(); ++x )
        {
            auto g = layout.film_to_grid( ( x + 0.5 ) / map.pixels_per_um, ( y + 0.5 ) / map.pixels_per_um );
            int  i = static_cast<int>( std::floor( g.u ) );
            int  j = static_cast<int>( std::floor( g.v ) );
            auto k = static_cast<std::size_t>( map.labels.at( x, y ) );
            auto o = field.offset( i, j );
            const auto &c = scene.at( x, y );
            field.values[k][o] += k == 0 ? c.r : k == 1 ? c.g : c.b;
            count[k][o] += 1.0;
        }
    for ( std::size_t k = 0; k < 3; ++k )
        for ( std::size_t o = 0; o < count[k].size(); ++o )
            if ( count[k][o] > 0.0 )
            {
                field.values[k][o] = std::clamp( field.values[k][o] / count[k][o], 0.0, 1.0 );
                field.valid[k][o]  = 1;
            }
    gt.intensities = std::move( field );
    return gt;
}

// ---------------------------------------------------------------------------
// Scan rendering
// ---------------------------------------------------------------------------

Plane blur( const Plane &in, const std::function<double( int, int )> &sigma_at )
{
    const int w = in.width, h = in.height;
    Plane     tmp( w, h ), out( w, h );

    auto pass = [&]( const Plane &src, Plane &dst, bool horizontal ) {
        parallel_for( h, [&]( int y0, int y1 ) {
            std::vector<double> k;
            for ( int y = y0; y < y1; ++y )
                for ( int x = 0; x < w; ++x )
                {
                    double s = sigma_at( x, y );
                    if ( s < 1e-3 )
                    {
                        dst.at( x, y ) = src.at( x, y );
                        continue;
                    }
                    int r = static_cast<int>( std::ceil( 3.5 * s ) );
                    k.resize( static_cast<std::size_t>( 2 * r + 1 ) );
                    double norm = 0.0;
                    for ( int t = -r; t <= r; ++t )
                        norm += k[static_cast<std::size_t>( t + r )] = std::exp( -0.5 * t * t / ( s * s ) );
                    double acc = 0.0;
                    for ( int t = -r; t <= r; ++t )
                    {
                        double v = horizontal ? src.at( std::clamp( x + t, 0, w - 1 ), y )
                                              : src.at( x, std::clamp( y + t, 0, h - 1 ) );
                        acc += k[static_cast<std::size_t>( t + r )] * v;
                    }
                    dst.at( x, y ) = acc / norm;
                }
        } );
    };
    pass( in, tmp, true );
    pass( tmp, out, false );
    return out;
}

ScanImage render_scan(
    const GroundTruth               &gt,
    const reseau::BalancedPrimaries &primaries,
    const DegradationSpec           &deg,
    const ScannerModel              &scanner,
    const ScanSettings              &settings )
{
    deg.validate();
    if ( !( settings.pixels_per_um > 0.0 ) || settings.supersample < 1 )
        throw Error( ErrorCode::InvalidArgument, "render_scan: invalid scan settings" );
    const int w = settings.width > 0 ? settings.width
                                     : static_cast<int>( std::lround( gt.extent_x_um() * settings.pixels_per_um ) );
    const int h = settings.height > 0 ? settings.height
                                      : static_cast<int>( std::lround( gt.extent_y_um() * settings.pixels_per_um ) );

    ScanImage scan;
    scan.pixels_per_um = settings.pixels_per_um;
    if ( w <= 0 || h <= 0 )
        throw Error( ErrorCode::InvalidArgument, "render_scan: empty scan extent" );

    const auto           resp = scanner.resolve( primaries );
    ScanWarp             warp( deg, settings, w, h );
    reseau::ScreenLayout layout( gt.geometry );
    std::array<Plane, 4> planes;
    for ( auto &p: planes )
        p = Plane( w, h );

    const int    ss  = settings.supersample;
    const double inv = 1.0 / ( ss * ss );
    parallel_for( h, [&]( int y0, int y1 ) {
        for ( int y = y0; y < y1; ++y )
            for ( int x = 0; x < w; ++x )
            {
                std::array<double, 4> acc{};
                for ( int sy = 0; sy < ss; ++sy )
                    for ( int sx = 0; sx < ss; ++sx )
                    {
                        double fx, fy;
                        warp.scan_to_film( x + ( sx + 0.5 ) / ss, y + ( sy + 0.5 ) / ss, fx, fy );
                        auto   g = layout.film_to_grid( fx, fy );
                        double I = gt.intensity_at( g );
                        auto   e = static_cast<std::size_t>( index( reseau::element_at( g, gt.geometry ) ) );
                        acc[0] += resp[0][e] * I;
                        acc[1] += resp[1][e] * I;
                        acc[2] += resp[2][e] * I;
                        acc[3] += I;
                    }
                for ( std::size_t c = 0; c < 4; ++c )
                    planes[c].at( x, y ) = acc[c] * inv;
            }
    } );

    if ( deg.psf_sigma_center_px > 0.0 || deg.psf_sigma_corner_px > 0.0 )
    {
        auto sigma = [&]( int x, int y ) { return deg.sigma_at( x + 0.5, y + 0.5, w, h ); };
        for ( auto &p: planes )
            p = blur( p, sigma );
    }

    for ( std::size_t c = 0; c < 4; ++c )
    {
        Plane16 &out = scan.planes[c];
        out          = Plane16( w, h );
        parallel_for( h, [&]( int y0, int y1 ) {
            for ( int y = y0; y < y1; ++y )
                for ( int x = 0; x < w; ++x )
                {
                    double v = planes[c].at( x, y );
                    if ( deg.noise_sigma > 0.0 )
                        v += deg.noise_sigma *
                             counter_normal( settings.seed, c, static_cast<std::uint64_t>( x ), static_cast<std::uint64_t>( y ) );
                    out.at( x, y ) = static_cast<std::uint16_t>( std::lround( std::clamp( v, 0.0, 1.0 ) * 65535.0 ) );
                }
        } );
    }
    return scan;
}

// ---------------------------------------------------------------------------
// Targets
// ---------------------------------------------------------------------------

int checker_patch_at( double fx_px, double fy_px, int film_width, int film_height, std::size_t patch_count ) noexcept
{
    if ( patch_count == 0 || fx_px < 0.0 || fy_px < 0.0 || fx_px >= film_width || fy_px >= film_height )
        return -1;
    int rows = static_cast<int>( std::floor( std::sqrt( static_cast<double>( patch_count ) ) ) );
    int cols = static_cast<int>( ( patch_count + static_cast<std::size_t>( rows ) - 1 ) / static_cast<std::size_t>( rows ) );
    int c    = std::min( cols - 1, static_cast<int>( fx_px * cols / film_width ) );
    int r    = std::min( rows - 1, static_cast<int>( fy_px * rows / film_height ) );
    int k    = r * cols + c;
    return k < static_cast<int>( patch_count ) ? k : -1;
}

RGBImage checker_target( const reseau::ScreenMap &map, const std::vector<color::RGB> &patch_colors )
{
    if ( patch_colors.empty() )
        throw Error( ErrorCode::InvalidArgument, "checker_target: need at least one patch" );
    RGBImage scene( map.width(), map.height() );
    for ( int y = 0; y < scene.height; ++y )
        for ( int x = 0; x < scene.width; ++x )
        {
            int k = checker_patch_at( x + 0.5, y + 0.5, scene.width, scene.height, patch_colors.size() );
            scene.at( x, y ) = k < 0 ? color::RGB{} : patch_colors[static_cast<std::size_t>( k )];
        }
    return scene;
}

RGBImage scene_in_scan( const RGBImage &scene, const GroundTruth &gt, const DegradationSpec &deg,
                        const ScanSettings &settings, int width, int height )
{
    if ( scene.width != gt.film_width || scene.height != gt.film_height )
        throw Error( ErrorCode::ExtentMismatch, "scene_in_scan: scene does not match the film" );
    ScanWarp warp( deg, settings, width, height );
    RGBImage out( width, height );
    for ( int y = 0; y < height; ++y )
        for ( int x = 0; x < width; ++x )
        {
            double fx, fy;
            warp.scan_to_film( x + 0.5, y + 0.5, fx, fy );
            int sx = std::clamp( static_cast<int>( std::floor( fx * gt.film_pixels_per_um ) ), 0, scene.width - 1 );
            int sy = std::clamp( static_cast<int>( std::floor( fy * gt.film_pixels_per_um ) ), 0, scene.height - 1 );
            out.at( x, y ) = scene.at( sx, sy );
        }
    return out;
}

std::vector<color::RGB> default_patches()
{
    return {
        { 0.90, 0.90, 0.90 }, { 0.65, 0.65, 0.65 }, { 0.42, 0.42, 0.42 }, { 0.24, 0.24, 0.24 },
        { 0.11, 0.11, 0.11 }, { 0.04, 0.04, 0.04 }, { 0.80, 0.12, 0.10 }, { 0.12, 0.70, 0.14 },
        { 0.10, 0.16, 0.80 }, { 0.85, 0.78, 0.12 }, { 0.75, 0.14, 0.68 }, { 0.12, 0.66, 0.75 },
        { 0.70, 0.46, 0.36 }, { 0.36, 0.26, 0.21 }, { 0.30, 0.40, 0.62 }, { 0.34, 0.44, 0.20 },
        { 0.52, 0.50, 0.78 }, { 0.40, 0.76, 0.64 }, { 0.88, 0.50, 0.14 }, { 0.24, 0.30, 0.66 },
        { 0.80, 0.32, 0.38 }, { 0.34, 0.18, 0.42 }, { 0.62, 0.76, 0.22 }, { 0.92, 0.64, 0.18 },
    };
}

} // namespace dufay::synth
