// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include "recon_detail.hpp"

#include <dufay/error.hpp>
#include <dufay/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <spdlog/spdlog.h>

namespace dufay::recon
{

using reseau::Element;
using reseau::GridPoint;

DotSpread DotSpread::identity( int width, int height )
{
    DotSpread d;
    d.width     = width;
    d.height    = height;
    d.regions_x = 1;
    d.regions_y = 1;
    d.sigma     = { 0.0 };
    d.confident = { 1 };
    d.mixing    = { kIdentity3 };
    return d;
}

namespace
{

constexpr int kHarmonics[4][2] = { { 1, 0 }, { 0, 1 }, { 1, 1 }, { 1, -1 } };
constexpr int kSub             = 4; // supersampling of simulated indicators

struct Box
{
    int x0, y0, x1, y1; // half-open
};

Box region_box( int rx, int ry, int regions_x, int regions_y, int w, int h )
{
    return { rx * w / regions_x, ry * h / regions_y, ( rx + 1 ) * w / regions_x, ( ry + 1 ) * h / regions_y };
}

// Fraction of a pixel covered by each element, from kSub x kSub samples
// placed with the local linear part of the grid map.
std::array<double, 3> pixel_coverage( const GridModel &grid, int x, int y )
{
    std::array<double, 3> cov{};
    GridPoint             c = grid.to_grid( x + 0.5, y + 0.5 );
    const auto           &B = grid.linear;
    for ( int sy = 0; sy < kSub; ++sy )
        for ( int sx = 0; sx < kSub; ++sx )
        {
            double    dx = ( sx + 0.5 ) / kSub - 0.5, dy = ( sy + 0.5 ) / kSub - 0.5;
            GridPoint g{ c.u + B[0] * dx + B[1] * dy, c.v + B[2] * dx + B[3] * dy };
            cov[static_cast<std::size_t>( index( reseau::element_at( g, grid.geometry ) ) )] += 1.0;
        }
    for ( auto &v: cov )
        v /= kSub * kSub;
    return cov;
}

struct Features
{
    // |H_e(m, n)| / DC_e, observed and for the unblurred pattern.
    std::array<std::array<double, 4>, 3> observed{};
    std::array<std::array<double, 4>, 3> sharp{};
    std::array<double, 3>                dc{};
};

Features measure( const std::array<Plane, 3> &labels, const GridModel &grid, const Box &b )
{
    using cplx = std::complex<double>;
    std::array<std::array<cplx, 4>, 3> ho{}, hs{};
    std::array<double, 3>              dco{}, dcs{};
    for ( int y = b.y0; y < b.y1; ++y )
        for ( int x = b.x0; x < b.x1; ++x )
        {
            GridPoint g   = grid.to_grid( x + 0.5, y + 0.5 );
            auto      cov = pixel_coverage( grid, x, y );
            std::array<cplx, 4> ph;
            for ( std::size_t k = 0; k < 4; ++k )
                ph[k] = std::polar( 1.0, -2.0 * std::numbers::pi * ( kHarmonics[k][0] * g.u + kHarmonics[k][1] * g.v ) );
            for ( std::size_t e = 0; e < 3; ++e )
            {
                double l = labels[e].at( x, y );
                dco[e] += l;
                dcs[e] += cov[e];
                for ( std::size_t k = 0; k < 4; ++k )
                {
                    ho[e][k] += l * ph[k];
                    hs[e][k] += cov[e] * ph[k];
                }
            }
        }
    Features f;
    const double n = static_cast<double>( b.x1 - b.x0 ) * static_cast<double>( b.y1 - b.y0 );
    for ( std::size_t e = 0; e < 3; ++e )
    {
        f.dc[e] = n > 0.0 ? dco[e] / n : 0.0;
        for ( std::size_t k = 0; k < 4; ++k )
        {
            f.observed[e][k] = dco[e] > 0.0 ? std::abs( ho[e][k] ) / dco[e] : 0.0;
            f.sharp[e][k]    = dcs[e] > 0.0 ? std::abs( hs[e][k] ) / dcs[e] : 0.0;
        }
    }
    return f;
}

// Squared frequency (cycles/px) of each harmonic under the linear map.
std::array<double, 4> harmonic_k2( const GridModel &grid )
{
    const auto           &B = grid.linear;
    std::array<double, 4> k2{};
    for ( std::size_t k = 0; k < 4; ++k )
    {
        double kx = kHarmonics[k][0] * B[0] + kHarmonics[k][1] * B[2];
        double ky = kHarmonics[k][0] * B[1] + kHarmonics[k][1] * B[3];
        k2[k]     = kx * kx + ky * ky;
    }
    return k2;
}

constexpr double kMinDC      = 0.02;
constexpr double kMinFeature = 0.02;

double misfit( const Features &f, const std::array<double, 4> &k2, double sigma )
{
    double err = 0.0;
    for ( std::size_t e = 0; e < 3; ++e )
    {
        if ( f.dc[e] < kMinDC )
            continue;
        for ( std::size_t k = 0; k < 4; ++k )
        {
            if ( f.sharp[e][k] < kMinFeature )
                continue;
            double model = f.sharp[e][k] * std::exp( -2.0 * std::numbers::pi * std::numbers::pi * sigma * sigma * k2[k] );
            double d     = f.observed[e][k] - model;
            err += d * d;
        }
    }
    return err;
}

bool usable( const Features &f )
{
    int n = 0;
    for ( std::size_t e = 0; e < 3; ++e )
        if ( f.dc[e] >= kMinDC )
            for ( std::size_t k = 0; k < 4; ++k )
                n += f.sharp[e][k] >= kMinFeature;
    return n >= 2;
}

double search_sigma( const Features &f, const std::array<double, 4> &k2, double max_sigma )
{
    double best = 0.0, best_err = misfit( f, k2, 0.0 );
    for ( double s = 0.25; s <= max_sigma + 1e-9; s += 0.25 )
    {
        double e = misfit( f, k2, s );
        if ( e < best_err )
        {
            best_err = e;
            best     = s;
        }
    }
    double a = std::max( 0.0, best - 0.25 ), b = std::min( max_sigma, best + 0.25 );
    const double r = 0.5 * ( std::sqrt( 5.0 ) - 1.0 );
    double       c = b - r * ( b - a ), d = a + r * ( b - a );
    double       fc = misfit( f, k2, c ), fd = misfit( f, k2, d );
    for ( int it = 0; it < 40 && b - a > 1e-4; ++it )
    {
        if ( fc < fd )
        {
            b  = d;
            d  = c;
            fd = fc;
            c  = b - r * ( b - a );
            fc = misfit( f, k2, c );
        }
        else
        {
            a  = c;
            c  = d;
            fc = fd;
            d  = a + r * ( b - a );
            fd = misfit( f, k2, d );
        }
    }
    double s = 0.5 * ( a + b );
    return misfit( f, k2, s ) <= best_err ? s : best;
}

// Footprint-weighted extraction of blurred element indicators.
Matrix3 mixing_matrix( const GridModel &grid, const Box &b, double sigma, const ExtractionOptions &opts )
{
    const int margin = static_cast<int>( std::ceil( 3.5 * sigma ) ) + 1;
    const int x0 = std::max( 0, b.x0 - margin ), y0 = std::max( 0, b.y0 - margin );
    const int x1 = std::min( grid.width, b.x1 + margin ), y1 = std::min( grid.height, b.y1 + margin );
    std::array<Plane, 3> ind{ Plane( x1 - x0, y1 - y0 ), Plane( x1 - x0, y1 - y0 ), Plane( x1 - x0, y1 - y0 ) };
    for ( int y = y0; y < y1; ++y )
        for ( int x = x0; x < x1; ++x )
        {
            auto cov = pixel_coverage( grid, x, y );
            for ( std::size_t k = 0; k < 3; ++k )
                ind[k].at( x - x0, y - y0 ) = cov[k];
        }
    for ( auto &p: ind )
        p = detail::gaussian_blur( p, sigma );

    Matrix3               acc{};
    std::array<double, 3> wsum{};
    for ( int y = b.y0; y < b.y1; ++y )
        for ( int x = b.x0; x < b.x1; ++x )
        {
            GridPoint g = grid.to_grid( x + 0.5, y + 0.5 );
            Element   e = reseau::element_at( g, grid.geometry );
            double    w = footprint_weight( g, e, grid, opts );
            auto      r = static_cast<std::size_t>( index( e ) );
            for ( std::size_t k = 0; k < 3; ++k )
                acc[r][k] += w * ind[k].at( x - x0, y - y0 );
            wsum[r] += w;
        }
    for ( std::size_t r = 0; r < 3; ++r )
    {
        if ( wsum[r] <= 0.0 )
        {
            acc[r]    = kIdentity3[r];
            continue;
        }
        double row = acc[r][0] + acc[r][1] + acc[r][2];
        for ( auto &v: acc[r] )
            v /= row;
    }
    return acc;
}

} // namespace

DotSpread estimate_dot_spread( const synth::ScanImage &scan, const GridModel &grid, const DotSpreadOptions &options )
{
    scan.validate();
    if ( scan.width() != grid.width || scan.height() != grid.height )
        throw Error( ErrorCode::DimensionMismatch, "estimate_dot_spread: grid does not match the scan" );
    if ( options.regions < 1 || !( options.max_sigma > 0.0 ) )
        throw Error( ErrorCode::InvalidArgument, "estimate_dot_spread: need regions >= 1 and max_sigma > 0" );

    const int w = scan.width(), h = scan.height();
    DotSpread ds;
    ds.width     = w;
    ds.height    = h;
    ds.regions_x = std::min( options.regions, w );
    ds.regions_y = std::min( options.regions, h );
    const int n  = ds.regions_x * ds.regions_y;
    ds.sigma.assign( static_cast<std::size_t>( n ), 0.0 );
    ds.confident.assign( static_cast<std::size_t>( n ), 0 );
    ds.mixing.assign( static_cast<std::size_t>( n ), kIdentity3 );

    auto labels = detail::label_planes( scan, options.scanner_response );
    auto k2     = harmonic_k2( grid );

    parallel_for( n, [&]( int r0, int r1 ) {
        for ( int r = r0; r < r1; ++r )
        {
            Box  b = region_box( r % ds.regions_x, r / ds.regions_x, ds.regions_x, ds.regions_y, w, h );
            auto f = measure( labels, grid, b );
            if ( !usable( f ) )
                continue;
            ds.sigma[static_cast<std::size_t>( r )]     = search_sigma( f, k2, options.max_sigma );
            ds.confident[static_cast<std::size_t>( r )] = 1;
        }
    } );

    // Inverse-distance fill of regions without usable contrast.
    int confident = 0;
    for ( auto c: ds.confident )
        confident += c;
    if ( confident == 0 )
        spdlog::warn( "estimate_dot_spread: no region has usable contrast; assuming no blur" );
    else if ( confident < n )
    {
        for ( int r = 0; r < n; ++r )
        {
            if ( ds.confident[static_cast<std::size_t>( r )] )
                continue;
            double num = 0.0, den = 0.0;
            for ( int q = 0; q < n; ++q )
            {
                if ( !ds.confident[static_cast<std::size_t>( q )] )
                    continue;
                double dx = r % ds.regions_x - q % ds.regions_x, dy = r / ds.regions_x - q / ds.regions_x;
                double wq = 1.0 / ( dx * dx + dy * dy );
                num += wq * ds.sigma[static_cast<std::size_t>( q )];
                den += wq;
            }
            ds.sigma[static_cast<std::size_t>( r )] = num / den;
        }
    }

    parallel_for( n, [&]( int r0, int r1 ) {
        for ( int r = r0; r < r1; ++r )
        {
            Box b = region_box( r % ds.regions_x, r / ds.regions_x, ds.regions_x, ds.regions_y, w, h );
            ds.mixing[static_cast<std::size_t>( r )] =
                mixing_matrix( grid, b, ds.sigma[static_cast<std::size_t>( r )], options.extraction );
        }
    } );
    return ds;
}

} // namespace dufay::recon
