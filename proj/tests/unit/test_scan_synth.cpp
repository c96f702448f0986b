// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include "synthetic.hpp"

#include <dufay/error.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace dufay;
using namespace dufay::synth;

TEST( Noise, CounterBasedAndNormal )
{
    EXPECT_EQ( counter_normal( 3, 0, 10, 20 ), counter_normal( 3, 0, 10, 20 ) );
    EXPECT_NE( counter_normal( 3, 0, 10, 20 ), counter_normal( 3, 1, 10, 20 ) );
    EXPECT_NE( counter_normal( 3, 0, 10, 20 ), counter_normal( 4, 0, 10, 20 ) );

    double sum = 0.0, sq = 0.0;
    const int n = 40000;
    for ( int k = 0; k < n; ++k )
    {
        double v = counter_normal( 11, 2, static_cast<std::uint64_t>( k % 200 ), static_cast<std::uint64_t>( k / 200 ) );
        sum += v;
        sq += v * v;
    }
    EXPECT_NEAR( sum / n, 0.0, 0.02 );
    EXPECT_NEAR( sq / n, 1.0, 0.03 );
}

TEST( Degradation, Validation )
{
    DegradationSpec d;
    EXPECT_NO_THROW( d.validate() );
    d.psf_sigma_center_px = -1.0;
    EXPECT_THROW( d.validate(), Error );
    d                     = {};
    d.affine.a11          = -1.0;
    EXPECT_THROW( d.validate(), Error );
    d                     = {};
    d.displacement_nodes  = 1;
    EXPECT_THROW( d.validate(), Error );
}

TEST( Degradation, SigmaProfile )
{
    DegradationSpec d;
    d.psf_sigma_center_px = 0.5;
    d.psf_sigma_corner_px = 1.5;
    EXPECT_DOUBLE_EQ( d.sigma_at( 50, 50, 100, 100 ), 0.5 );
    EXPECT_DOUBLE_EQ( d.sigma_at( 0, 0, 100, 100 ), 1.5 );
    EXPECT_NEAR( d.sigma_at( 75, 75, 100, 100 ), 1.0, 1e-12 );
}

TEST( Warp, IdentityAndAmplitude )
{
    ScanSettings s;
    s.pixels_per_um = 0.25;
    ScanWarp id( DegradationSpec::none(), s, 64, 64 );
    double   fx, fy;
    id.scan_to_film( 10.0, 20.0, fx, fy );
    EXPECT_DOUBLE_EQ( fx, 40.0 );
    EXPECT_DOUBLE_EQ( fy, 80.0 );

    DegradationSpec d;
    d.displacement_px = 2.0;
    ScanWarp warp( d, s, 64, 64 );
    double   peak = 0.0;
    for ( int y = 0; y <= 64; ++y )
        for ( int x = 0; x <= 64; ++x )
        {
            warp.scan_to_film( x, y, fx, fy );
            peak = std::max( peak, std::hypot( fx * 0.25 - x, fy * 0.25 - y ) );
        }
    EXPECT_GT( peak, 1.9 );
    EXPECT_LT( peak, 2.05 );
}

TEST( Expose, UniformSceneAndMismatch )
{
    auto film = fixture::make_film( 400.0, { { 0.3, 0.6, 0.9 } } );
    const auto &f = film.truth.intensities;
    EXPECT_GT( f.valid_count(), 0u );
    for ( std::size_t k = 0; k < 3; ++k )
        for ( std::size_t o = 0; o < f.values[k].size(); ++o )
            if ( f.valid[k][o] )
                EXPECT_NEAR( f.values[k][o], 0.3 * ( k + 1 ), 1e-12 );

    RGBImage wrong( film.map.width() + 1, film.map.height() );
    try
    {
        expose( wrong, film.map );
        FAIL();
    }
    catch ( const Error &e )
    {
        EXPECT_EQ( e.code(), ErrorCode::ExtentMismatch );
    }
}

TEST( Render, UndegradedUniformFilm )
{
    auto film = fixture::make_film( 800.0, { { 0.5, 0.5, 0.5 } } );
    auto scan = render_scan( film.truth, film.primaries, DegradationSpec::none(), ScannerModel::identity(),
                             fixture::scan_settings( 128 ) );
    ASSERT_EQ( scan.width(), 128 );
    // Element fragments cut by the film edge hold no exposure; skip the rim.
    const auto &ir = scan.plane( Channel::Infrared );
    for ( int y = 2; y < 126; ++y )
        for ( int x = 2; x < 126; ++x )
            EXPECT_NEAR( ir.at( x, y ), 32768, 1 );

    // Identity scanner: each colour channel carries its own elements only.
    for ( std::size_t c = 0; c < 3; ++c )
    {
        double mean = std::accumulate( scan.planes[c].pixels.begin(), scan.planes[c].pixels.end(), 0.0 ) /
                      ( 65535.0 * scan.planes[c].size() );
        EXPECT_NEAR( mean, 0.5 * film.fractions[static_cast<reseau::Element>( c )], 0.01 );
    }
}

TEST( Render, DeterministicPerSeed )
{
    auto            film = fixture::make_film( 500.0 );
    DegradationSpec d;
    d.psf_sigma_center_px = 0.8;
    d.psf_sigma_corner_px = 1.2;
    d.displacement_px     = 1.0;
    d.noise_sigma         = 0.01;
    auto a = render_scan( film.truth, film.primaries, d, ScannerModel::identity(), fixture::scan_settings( 96, 0.2, 5 ) );
    auto b = render_scan( film.truth, film.primaries, d, ScannerModel::identity(), fixture::scan_settings( 96, 0.2, 5 ) );
    auto c = render_scan( film.truth, film.primaries, d, ScannerModel::identity(), fixture::scan_settings( 96, 0.2, 6 ) );
    for ( std::size_t p = 0; p < 4; ++p )
    {
        EXPECT_EQ( a.planes[p], b.planes[p] );
        EXPECT_NE( a.planes[p], c.planes[p] );
    }
}

TEST( Render, EmptyExtentRejected )
{
    auto film = fixture::make_film( 100.0 );
    film.truth.film_width = 0;
    ScanSettings s;
    EXPECT_THROW( render_scan( film.truth, film.primaries, DegradationSpec::none(), ScannerModel::identity(), s ), Error );
}

TEST( Scanner, PrimariesResponseIsNormalised )
{
    auto film = fixture::make_film( 100.0 );
    auto r    = ScannerModel{ ScannerModel::Kind::Primaries, {} }.resolve( film.primaries );
    double peak = 0.0;
    for ( const auto &row: r )
        for ( double v: row )
        {
            EXPECT_GE( v, 0.0 );
            peak = std::max( peak, v );
        }
    EXPECT_DOUBLE_EQ( peak, 1.0 );
    // Each element dominates its own channel.
    for ( std::size_t e = 0; e < 3; ++e )
        for ( std::size_t c = 0; c < 3; ++c )
            if ( c != e )
                EXPECT_GT( r[e][e], r[c][e] );
}

TEST( Target, CheckerLayout )
{
    EXPECT_EQ( checker_patch_at( 0.5, 0.5, 600, 400, 24 ), 0 );
    EXPECT_EQ( checker_patch_at( 599.5, 0.5, 600, 400, 24 ), 5 );
    EXPECT_EQ( checker_patch_at( 599.5, 399.5, 600, 400, 24 ), 23 );
    EXPECT_EQ( checker_patch_at( -1.0, 0.5, 600, 400, 24 ), -1 );
    // 5 patches: 2 rows x 3 columns, last tile unused.
    EXPECT_EQ( checker_patch_at( 599.5, 399.5, 600, 400, 5 ), -1 );
    for ( const auto &c: default_patches() )
        for ( double v: { c.r, c.g, c.b } )
        {
            EXPECT_GE( v, 0.03 );
            EXPECT_LE( v, 0.95 );
        }
    EXPECT_EQ( default_patches().size(), 24u );
}

TEST( Blur, PreservesConstantsAndMass )
{
    Plane flat( 20, 20, 0.25 );
    for ( double v: blur( flat, []( int, int ) { return 1.7; } ).pixels )
        EXPECT_NEAR( v, 0.25, 1e-12 );

    Plane dot( 41, 41, 0.0 );
    dot.at( 20, 20 ) = 1.0;
    auto   out = blur( dot, []( int, int ) { return 2.0; } );
    double sum = std::accumulate( out.pixels.begin(), out.pixels.end(), 0.0 );
    EXPECT_NEAR( sum, 1.0, 1e-9 );
    EXPECT_NEAR( out.at( 20, 20 ), 1.0 / ( 2.0 * M_PI * 4.0 ), 2e-3 );
}
