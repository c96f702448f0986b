// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include "recon_detail.hpp"

#include <dufay/error.hpp>
#include <dufay/parallel.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>

#include <spdlog/spdlog.h>

namespace dufay::recon
{

using reseau::Element;
using reseau::ElementField;
using reseau::GridPoint;

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

double footprint_weight( const GridPoint &g, Element e, const GridModel &grid, const ExtractionOptions &options ) noexcept
{
    if ( reseau::element_at( g, grid.geometry ) != e )
        return 0.0;
    auto   box = reseau::element_box( e, grid.geometry );
    double fu  = g.u - std::floor( g.u );
    double fv  = g.v - std::floor( g.v );
    double dv  = std::min( fv - box[2], box[3] - fv ) * grid.period_v_px();
    double du  = std::min( fu - box[0], box[1] - fu ) * grid.period_u_px();
    double d   = std::min( du, dv );
    double span = options.edge_outer_px - options.edge_inner_px;
    double w    = span > 0.0 ? ( d - options.edge_inner_px ) / span : ( d >= options.edge_inner_px ? 1.0 : 0.0 );
    return std::clamp( w, 0.0, 1.0 );
}

ElementIntensities extract_intensities( const Plane &ir, const GridModel &grid, const ExtractionOptions &options )
{
    if ( ir.width != grid.width || ir.height != grid.height )
        throw Error( ErrorCode::DimensionMismatch, "extract_intensities: grid does not match the plane" );
    if ( !( options.white_level > 0.0 ) )
        throw Error( ErrorCode::InvalidArgument, "extract_intensities: white level must be positive" );

    int imin = INT32_MAX, imax = INT32_MIN, jmin = INT32_MAX, jmax = INT32_MIN;
    for ( auto [x, y]: { std::pair{ 0, 0 }, { ir.width, 0 }, { 0, ir.height }, { ir.width, ir.height } } )
    {
        auto g = grid.to_grid( x, y );
        imin   = std::min( imin, static_cast<int>( std::floor( g.u ) ) - 2 );
        imax   = std::max( imax, static_cast<int>( std::floor( g.u ) ) + 2 );
        jmin   = std::min( jmin, static_cast<int>( std::floor( g.v ) ) - 2 );
        jmax   = std::max( jmax, static_cast<int>( std::floor( g.v ) ) + 2 );
    }

    ElementIntensities out;
    out.grid  = grid;
    out.field = ElementField( imin, jmin, imax - imin + 1, jmax - jmin + 1 );
    std::array<std::vector<double>, 3> wsum;
    for ( auto &v: wsum )
        v.assign( out.field.values[0].size(), 0.0 );

    for ( int y = 0; y < ir.height; ++y )
        for ( int x = 0; x < ir.width; ++x )
        {
            GridPoint g = grid.to_grid( x + 0.5, y + 0.5 );
            int       i = static_cast<int>( std::floor( g.u ) ), j = static_cast<int>( std::floor( g.v ) );
            if ( !out.field.contains( i, j ) )
                continue;
            Element e = reseau::element_at( g, grid.geometry );
            double  w = footprint_weight( g, e, grid, options );
            auto    k = static_cast<std::size_t>( index( e ) );
            auto    o = out.field.offset( i, j );
            out.field.values[k][o] += w * ir.at( x, y );
            wsum[k][o] += w;
        }

    for ( std::size_t k = 0; k < 3; ++k )
        for ( std::size_t o = 0; o < wsum[k].size(); ++o )
        {
            if ( wsum[k][o] > 0.0 )
            {
                out.field.values[k][o] = std::clamp( out.field.values[k][o] / ( wsum[k][o] * options.white_level ), 0.0, 1.0 );
                out.field.valid[k][o]  = 1;
            }
            else
            {
                out.field.values[k][o] = 0.0;
                ++out.missing;
            }
        }
    return out;
}

ElementIntensities extract_intensities( const Plane16 &ir, const GridModel &grid, const ExtractionOptions &options )
{
    Plane p( ir.width, ir.height );
    std::copy( ir.pixels.begin(), ir.pixels.end(), p.pixels.begin() );
    return extract_intensities( p, grid, options );
}

std::size_t infill_missing( ElementField &field )
{
    std::size_t filled = 0;
    for ( Element e: reseau::kElements )
    {
        auto  k     = static_cast<std::size_t>( index( e ) );
        auto &vals  = field.values[k];
        auto &valid = field.valid[k];
        for ( bool changed = true; changed; )
        {
            changed         = false;
            auto snapshot   = valid;
            auto old_values = vals;
            for ( int j = field.j0; j < field.j0 + field.rows; ++j )
                for ( int i = field.i0; i < field.i0 + field.cols; ++i )
                {
                    auto o = field.offset( i, j );
                    if ( snapshot[o] )
                        continue;
                    double sum = 0.0;
                    int    n   = 0;
                    for ( int dj = -1; dj <= 1; ++dj )
                        for ( int di = -1; di <= 1; ++di )
                        {
                            if ( ( di == 0 && dj == 0 ) || !field.contains( i + di, j + dj ) )
                                continue;
                            auto q = field.offset( i + di, j + dj );
                            if ( snapshot[q] )
                            {
                                sum += old_values[q];
                                ++n;
                            }
                        }
                    if ( n > 0 )
                    {
                        vals[o]  = sum / n;
                        valid[o] = 1;
                        ++filled;
                        changed = true;
                    }
                }
        }
    }
    return filled;
}

RGBImage demosaic( const ElementIntensities &in )
{
    const auto &grid = in.grid;
    ElementField f   = in.field;
    if ( f.cols < 4 || f.rows < 4 )
        throw Error( ErrorCode::InsufficientData, "demosaic: need at least 4x4 elements per plane" );
    for ( const auto &v: f.valid )
        if ( std::count( v.begin(), v.end(), std::uint8_t{ 1 } ) < 16 )
            throw Error( ErrorCode::InsufficientData, "demosaic: fewer than 16 valid elements in a plane" );
    infill_missing( f );

    std::array<GridPoint, 3> centre;
    for ( Element e: reseau::kElements )
        centre[static_cast<std::size_t>( index( e ) )] = reseau::element_center( e, grid.geometry );

    RGBImage out( grid.width, grid.height );
    parallel_for( grid.height, [&]( int y0, int y1 ) {
        for ( int y = y0; y < y1; ++y )
            for ( int x = 0; x < grid.width; ++x )
            {
                GridPoint             g = grid.to_grid( x + 0.5, y + 0.5 );
                std::array<double, 3> v{};
                for ( std::size_t k = 0; k < 3; ++k )
                {
                    double s  = g.u - centre[k].u, t = g.v - centre[k].v;
                    int    i  = static_cast<int>( std::floor( s ) ), j = static_cast<int>( std::floor( t ) );
                    auto   wu = detail::catmull_rom( s - i );
                    auto   wv = detail::catmull_rom( t - j );
                    double acc = 0.0;
                    for ( int m = 0; m < 4; ++m )
                    {
                        int jj = std::clamp( j - 1 + m, f.j0, f.j0 + f.rows - 1 );
                        for ( int n = 0; n < 4; ++n )
                        {
                            int ii = std::clamp( i - 1 + n, f.i0, f.i0 + f.cols - 1 );
                            acc += wu[static_cast<std::size_t>( n )] * wv[static_cast<std::size_t>( m )] *
                                   f.values[k][f.offset( ii, jj )];
                        }
                    }
                    v[k] = acc;
                }
                out.at( x, y ) = { v[0], v[1], v[2] };
            }
    } );
    return out;
}

// ---------------------------------------------------------------------------
// Saturation compensation
// ---------------------------------------------------------------------------

RGBImage compensate_saturation( const RGBImage &img, const DotSpread &ds, CompensationStats *stats )
{
    if ( ds.regions_x < 1 || ds.regions_y < 1 ||
         ds.mixing.size() != static_cast<std::size_t>( ds.regions_x * ds.regions_y ) )
        throw Error( ErrorCode::InvalidArgument, "compensate_saturation: malformed dot spread" );

    std::vector<Matrix3> inv( ds.mixing.size() );
    int                  fallback = 0;
    for ( std::size_t r = 0; r < ds.mixing.size(); ++r )
    {
        if ( detail::condition_number( ds.mixing[r] ) >= 1e4 || !detail::invert( ds.mixing[r], inv[r] ) )
        {
            spdlog::warn( "compensate_saturation: region {} is ill-conditioned; left uncorrected", r );
            inv[r] = kIdentity3;
            ++fallback;
        }
    }

    const double sx = ds.width > 0 ? static_cast<double>( ds.regions_x ) / ds.width : 0.0;
    const double sy = ds.height > 0 ? static_cast<double>( ds.regions_y ) / ds.height : 0.0;
    RGBImage     out( img.width, img.height );
    std::vector<std::size_t> clamped( static_cast<std::size_t>( img.height ), 0 );
    parallel_for( img.height, [&]( int y0, int y1 ) {
        for ( int y = y0; y < y1; ++y )
        {
            double fy = std::clamp( ( y + 0.5 ) * sy - 0.5, 0.0, ds.regions_y - 1.0 );
            int    ry = std::min( static_cast<int>( fy ), std::max( 0, ds.regions_y - 2 ) );
            double ty = ds.regions_y > 1 ? fy - ry : 0.0;
            for ( int x = 0; x < img.width; ++x )
            {
                double fx = std::clamp( ( x + 0.5 ) * sx - 0.5, 0.0, ds.regions_x - 1.0 );
                int    rx = std::min( static_cast<int>( fx ), std::max( 0, ds.regions_x - 2 ) );
                double tx = ds.regions_x > 1 ? fx - rx : 0.0;

                Matrix3 m{};
                for ( int q = 0; q < 4; ++q )
                {
                    int    qx = std::min( rx + ( q & 1 ), ds.regions_x - 1 );
                    int    qy = std::min( ry + ( q >> 1 ), ds.regions_y - 1 );
                    double wq = ( ( q & 1 ) ? tx : 1.0 - tx ) * ( ( q >> 1 ) ? ty : 1.0 - ty );
                    if ( wq == 0.0 )
                        continue;
                    const auto &src = inv[static_cast<std::size_t>( qy * ds.regions_x + qx )];
                    for ( std::size_t a = 0; a < 3; ++a )
                        for ( std::size_t b = 0; b < 3; ++b )
                            m[a][b] += wq * src[a][b];
                }
                const auto &p = img.at( x, y );
                double      c[3];
                bool        hit = false;
                for ( std::size_t a = 0; a < 3; ++a )
                {
                    double v = m[a][0] * p.r + m[a][1] * p.g + m[a][2] * p.b;
                    c[a]     = std::clamp( v, 0.0, 1.5 );
                    hit |= c[a] != v;
                }
                clamped[static_cast<std::size_t>( y )] += hit;
                out.at( x, y ) = { c[0], c[1], c[2] };
            }
        }
    } );
    if ( stats )
    {
        for ( auto c: clamped )
            stats->clamped += c;
        stats->total += img.size();
        stats->fallback_regions += fallback;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Colorimetry
// ---------------------------------------------------------------------------

void ReconstructionParams::validate() const
{
    fractions.validate();
    if ( primaries.base.is_collinear() )
        throw Error( ErrorCode::SingularSystem, "reconstruction: primaries are collinear" );
    for ( double s: primaries.scale )
        if ( !( s > 0.0 ) || !std::isfinite( s ) )
            throw Error( ErrorCode::InvalidArgument, "reconstruction: primary scales must be positive" );
    for ( double g: gains )
        if ( !( g > 0.0 ) || !std::isfinite( g ) )
            throw Error( ErrorCode::InvalidArgument, "reconstruction: gains must be positive" );
    if ( !simulation_illuminant.whitepoint.is_valid() )
        throw Error( ErrorCode::InvalidArgument, "reconstruction: simulation illuminant has no valid whitepoint" );
}

Matrix3 colorimetric_matrix( const ReconstructionParams &params )
{
    double scale = 1.0;
    if ( !params.normalize_exposure )
        scale = reseau::mixture_XYZ( params.primaries.base, params.fractions ).Y / 100.0 /
                reseau::mixture_XYZ( params.primaries, params.fractions ).Y;
    Matrix3 m{};
    for ( Element e: reseau::kElements )
    {
        auto   k   = static_cast<std::size_t>( index( e ) );
        auto   xyz = params.primaries.primary_XYZ( e );
        double a   = params.fractions[e] * scale;
        m[0][k]    = a * xyz.X;
        m[1][k]    = a * xyz.Y;
        m[2][k]    = a * xyz.Z;
    }
    return m;
}

XYZImage to_colorimetric( const RGBImage &img, const ReconstructionParams &params )
{
    const Matrix3 m = colorimetric_matrix( params );
    const auto   &g = params.gains;
    XYZImage      out( img.width, img.height );
    for ( std::size_t k = 0; k < img.size(); ++k )
    {
        const auto &p = img.pixels[k];
        double      c[3] = { g[0] * p.r, g[1] * p.g, g[2] * p.b };
        out.pixels[k]    = { m[0][0] * c[0] + m[0][1] * c[1] + m[0][2] * c[2],
                             m[1][0] * c[0] + m[1][1] * c[1] + m[1][2] * c[2],
                             m[2][0] * c[0] + m[2][1] * c[1] + m[2][2] * c[2] };
    }
    return out;
}

color::XYZ output_white( const ReconstructionParams &params )
{
    const Matrix3 m = colorimetric_matrix( params );
    return { m[0][0] + m[0][1] + m[0][2], m[1][0] + m[1][1] + m[1][2], m[2][0] + m[2][1] + m[2][2] };
}

RGBImage to_srgb( const XYZImage &xyz, const color::XYZ &white, color::ClipStats *stats )
{
    if ( !( white.Y > 0.0 ) )
        throw Error( ErrorCode::DegenerateColor, "to_srgb: white has no luminance" );
    // Adapt chromaticity only; absolute luminance is kept.
    const color::XYZ src = ( 1.0 / white.Y ) * white;
    RGBImage         out( xyz.width, xyz.height );
    for ( std::size_t k = 0; k < xyz.size(); ++k )
        out.pixels[k] = color::XYZ_to_sRGB( xyz.pixels[k], src, stats );
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

PipelineResult run_pipeline(
    const synth::ScanImage &scan, const reseau::ReseauGeometry &geometry, const ReconstructionParams &params )
{
    PipelineResult result;
    RunReport     &rep   = result.report;
    std::string    stage = "validate";
    auto           clock = std::chrono::steady_clock::now();
    auto           lap   = [&]( const char *name ) {
        auto now = std::chrono::steady_clock::now();
        rep.timings_ms.emplace_back( name, std::chrono::duration<double, std::milli>( now - clock ).count() );
        clock = now;
    };

    try
    {
        params.validate();
        scan.validate();
        lap( "validate" );

        stage     = "register_grid";
        auto grid = register_grid( scan, geometry, params.registration );
        rep.mean_residual_px = grid.mean_residual_px;
        rep.max_residual_px  = grid.max_residual_px;
        rep.period_u_px      = grid.period_u_px();
        rep.period_v_px      = grid.period_v_px();
        rep.angle_deg        = grid.angle_deg();
        rep.affine           = grid.linear;
        rep.offset           = grid.offset;
        lap( "register_grid" );

        // Dot spread is measured with the registration's scanner response
        // and the extraction footprint actually used below.
        stage             = "estimate_dot_spread";
        DotSpreadOptions dso = params.dot_spread;
        dso.scanner_response = params.registration.scanner_response;
        dso.extraction       = params.extraction;
        DotSpread ds         = params.compensate_saturation ? estimate_dot_spread( scan, grid, dso )
                                                            : DotSpread::identity( scan.width(), scan.height() );
        rep.sigma_regions_x  = ds.regions_x;
        rep.sigma_regions_y  = ds.regions_y;
        rep.sigma_map        = ds.sigma;
        rep.sigma_confident  = ds.confident;
        lap( "estimate_dot_spread" );

        stage          = "extract_intensities";
        auto intensity = extract_intensities( scan.plane( synth::Channel::Infrared ), grid, params.extraction );
        rep.elements_total   = intensity.field.element_count();
        rep.elements_missing = intensity.missing;
        lap( "extract_intensities" );

        stage                  = "demosaic";
        intensity.infilled     = infill_missing( intensity.field );
        rep.elements_infilled  = intensity.infilled;
        RGBImage rgb           = demosaic( intensity );
        lap( "demosaic" );

        stage = "compensate_saturation";
        if ( params.compensate_saturation )
        {
            CompensationStats cs;
            rgb                  = compensate_saturation( rgb, ds, &cs );
            rep.clamp_fraction   = cs.clamp_fraction();
            rep.fallback_regions = cs.fallback_regions;
        }
        lap( "compensate_saturation" );

        stage      = "to_colorimetric";
        result.xyz = to_colorimetric( rgb, params );
        result.rgb = std::move( rgb );
        lap( "to_colorimetric" );
    }
    catch ( const Error &err )
    {
        rep.ok            = false;
        rep.failed_stage  = stage;
        rep.error_code    = std::string( to_string( err.code() ) );
        rep.error_message = err.what();
        throw PipelineFailure( err, rep );
    }
    rep.ok = true;
    return result;
}

} // namespace dufay::recon
