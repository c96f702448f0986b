// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/colorimetry.hpp>
#include <dufay/error.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

using namespace dufay;
using namespace dufay::color;

namespace
{

const Chromaticity kE{ 1.0 / 3.0, 1.0 / 3.0 };
const Chromaticity kWhiteE{ 0.333, 0.333 };

void expect_xyz_near( const XYZ &a, const XYZ &b, double tol )
{
    EXPECT_NEAR( a.X, b.X, tol );
    EXPECT_NEAR( a.Y, b.Y, tol );
    EXPECT_NEAR( a.Z, b.Z, tol );
}

} // namespace

TEST( XyY, ToXYZRedRow )
{
    auto t = xyY_to_XYZ( { { 0.633, 0.365 }, 17.7 } );
    expect_xyz_near( t, { 30.696164, 17.7, 0.096986 }, 1e-5 );
}

TEST( XyY, ToXYZGreenRow )
{
    auto t = xyY_to_XYZ( { { 0.233, 0.647 }, 43.0 } );
    expect_xyz_near( t, { 15.485317, 43.0, 7.975270 }, 1e-5 );
}

TEST( XyY, EqualEnergy )
{
    expect_xyz_near( xyY_to_XYZ( { kE, 50.0 } ), { 50, 50, 50 }, 1e-12 );
}

TEST( XyY, ZeroYIsDegenerate )
{
    try
    {
        (void)xyY_to_XYZ( { { 0.3, 0.0 }, 1.0 } );
        FAIL();
    }
    catch ( const Error &e )
    {
        EXPECT_EQ( e.code(), ErrorCode::DegenerateChromaticity );
    }
}

TEST( XyY, FromXYZ )
{
    auto c = XYZ_to_xyY( { 50, 50, 50 } );
    EXPECT_NEAR( c.chroma.x, 1.0 / 3.0, 1e-15 );
    EXPECT_NEAR( c.chroma.y, 1.0 / 3.0, 1e-15 );
    EXPECT_EQ( c.Y, 50.0 );

    auto r = XYZ_to_xyY( { 30.696164, 17.7, 0.096986 } );
    EXPECT_NEAR( r.chroma.x, 0.633, 1e-6 );
    EXPECT_NEAR( r.chroma.y, 0.365, 1e-6 );

    auto y = XYZ_to_xyY( { 0, 10, 0 } );
    EXPECT_EQ( y.chroma.x, 0.0 );
    EXPECT_EQ( y.chroma.y, 1.0 );
    EXPECT_EQ( y.Y, 10.0 );
}

TEST( XyY, BlackIsDegenerate )
{
    EXPECT_THROW( XYZ_to_xyY( { 0, 0, 0 } ), Error );
}

TEST( XyY, RoundTripProperty )
{
    std::mt19937_64                        rng( 7 );
    std::uniform_real_distribution<double> u( 0.01, 0.98 );
    std::uniform_real_distribution<double> lum( 1e-3, 100.0 );
    for ( int i = 0; i < 2000; ++i )
    {
        double x = u( rng ), y = u( rng );
        if ( x + y >= 0.99 )
            continue;
        XyY  c{ { x, y }, lum( rng ) };
        auto back = XYZ_to_xyY( xyY_to_XYZ( c ) );
        EXPECT_NEAR( back.chroma.x, x, 1e-12 * x );
        EXPECT_NEAR( back.chroma.y, y, 1e-12 * y );
        EXPECT_NEAR( back.Y, c.Y, 1e-12 * c.Y );
    }
}

TEST( Spectral, CurveValidation )
{
    EXPECT_THROW( SpectralCurve( { 400 }, { 1 } ), Error );
    EXPECT_THROW( SpectralCurve( { 400, 400 }, { 1, 1 } ), Error );
    EXPECT_THROW( SpectralCurve( { 290, 400 }, { 1, 1 } ), Error );
    EXPECT_THROW( SpectralCurve( { 400, 500 }, { 1, -0.1 } ), Error );
    EXPECT_THROW( SpectralCurve( { 400, 500 }, { 1, 1.2 } ).require_transmission(), Error );
    EXPECT_NO_THROW( SpectralCurve( { 400, 500 }, { 1, 1.04 } ).require_transmission() );
}

TEST( Spectral, InterpolationClampsEnds )
{
    SpectralCurve c( { 400, 500 }, { 0.2, 0.6 } );
    EXPECT_DOUBLE_EQ( c.value_at( 450 ), 0.4 );
    EXPECT_DOUBLE_EQ( c.value_at( 350 ), 0.2 );
    EXPECT_DOUBLE_EQ( c.value_at( 700 ), 0.6 );
}

TEST( Spectral, CsvRoundTrip )
{
    auto c    = SpectralCurve::parse_csv( "wavelength_nm,value\n400,0.25\n405,0.5\n410,0.75\n" );
    auto back = SpectralCurve::parse_csv( c.to_csv() );
    ASSERT_EQ( back.size(), 3u );
    EXPECT_DOUBLE_EQ( back.value_at( 405 ), 0.5 );
    EXPECT_THROW( SpectralCurve::parse_csv( "400,0.25\n405,0.5\n" ), Error );
}

TEST( Spectral, PerfectTransmitter )
{
    const auto &t = tables();
    for ( const char *name: { "A", "B", "C", "D65", "E" } )
    {
        auto ill = t.illuminant( name );
        auto xyz = spectrum_to_XYZ( SpectralCurve::flat( 1.0 ), ill, t.observer() );
        EXPECT_NEAR( xyz.Y, 100.0, 1e-9 ) << name;
        auto c = XYZ_to_xyY( xyz ).chroma;
        EXPECT_NEAR( c.x, ill.whitepoint.x, 1e-3 ) << name;
        EXPECT_NEAR( c.y, ill.whitepoint.y, 1e-3 ) << name;
    }
}

TEST( Spectral, FlatHalfUnderE )
{
    const auto &t   = tables();
    auto        xyz = spectrum_to_XYZ( SpectralCurve::flat( 0.5 ), t.illuminant( "E" ), t.observer() );
    EXPECT_NEAR( xyz.Y, 50.0, 1e-9 );
    auto c = XYZ_to_xyY( xyz ).chroma;
    EXPECT_NEAR( c.x, 1.0 / 3.0, 0.002 );
    EXPECT_NEAR( c.y, 1.0 / 3.0, 0.002 );
}

TEST( Spectral, LinearInTransmission )
{
    const auto   &t   = tables();
    auto          ill = t.illuminant( "D65" );
    SpectralCurve a( { 380, 480, 580, 680, 780 }, { 0.1, 0.8, 0.3, 0.05, 0.0 } );
    SpectralCurve b( { 380, 480, 580, 680, 780 }, { 0.0, 0.1, 0.6, 0.9, 0.9 } );
    const double  alpha = 0.3, beta = 0.55;
    auto          mix   = spectrum_to_XYZ( a.combine( alpha, b, beta ), ill, t.observer() );
    auto          sum   = alpha * spectrum_to_XYZ( a, ill, t.observer() ) + beta * spectrum_to_XYZ( b, ill, t.observer() );
    expect_xyz_near( mix, sum, 1e-9 );
}

TEST( Spectral, NoOverlapIsError )
{
    const auto   &t = tables();
    try
    {
        (void)spectrum_to_XYZ( SpectralCurve( { 300, 310 }, { 1, 1 } ), t.illuminant( "D65" ), t.observer() );
        FAIL();
    }
    catch ( const Error &e )
    {
        EXPECT_EQ( e.code(), ErrorCode::SpectralRangeMismatch );
    }
}

TEST( Spectral, StoredWhitepoints )
{
    const auto &t = tables();
    EXPECT_NEAR( t.illuminant( "B" ).whitepoint.x, 0.3485, 1e-4 );
    EXPECT_NEAR( t.illuminant( "B" ).whitepoint.y, 0.3517, 1e-4 );
    EXPECT_NEAR( t.illuminant( "d65" ).whitepoint.x, 0.31271, 1e-5 );
    EXPECT_THROW( t.illuminant( "F2" ), Error );
}

// Oracle: independent segment intersection on the same 5 nm locus.
TEST( DominantWavelength, TableRows )
{
    const auto &obs = tables().observer();
    EXPECT_NEAR( dominant_wavelength( { 0.633, 0.365 }, kWhiteE, obs ), 601.740, 0.01 );
    EXPECT_NEAR( dominant_wavelength( { 0.233, 0.647 }, kWhiteE, obs ), 534.548, 0.01 );
    EXPECT_NEAR( dominant_wavelength( { 0.164, 0.089 }, kWhiteE, obs ), 466.161, 0.01 );
    EXPECT_NEAR( dominant_wavelength( { 0.233, 0.647 }, kE, obs ), 534.516, 0.01 );
}

TEST( DominantWavelength, PurpleLineIsNegative )
{
    const auto &obs = tables().observer();
    double      w   = dominant_wavelength( { 0.35, 0.2 }, kE, obs );
    EXPECT_LT( w, 0.0 );
    EXPECT_GT( -w, 490.0 );
    EXPECT_LT( -w, 570.0 );
}

TEST( DominantWavelength, ScaleInvariantAlongRay )
{
    const auto  &obs = tables().observer();
    Chromaticity s{ 0.45, 0.40 };
    double       ref = dominant_wavelength( s, kE, obs );
    for ( double k: { 0.1, 0.5, 1.5 } )
    {
        Chromaticity p{ kE.x + k * ( s.x - kE.x ), kE.y + k * ( s.y - kE.y ) };
        EXPECT_NEAR( dominant_wavelength( p, kE, obs ), ref, 1e-9 );
    }
}

TEST( DominantWavelength, AtWhitepointIsUndefined )
{
    try
    {
        (void)dominant_wavelength( kE, kE, tables().observer() );
        FAIL();
    }
    catch ( const Error &e )
    {
        EXPECT_EQ( e.code(), ErrorCode::UndefinedDominantWavelength );
    }
}

TEST( Bradford, IdentityAndWhitepoints )
{
    XYZ  d65 = d65_white();
    XYZ  e   = chromaticity_to_XYZ( kE );
    XYZ  c{ 0.3, 0.2, 0.7 };
    auto same = bradford_adapt( c, d65, d65 );
    EXPECT_NEAR( same.X, c.X, 1e-12 * c.X );
    EXPECT_NEAR( same.Y, c.Y, 1e-12 * c.Y );
    EXPECT_NEAR( same.Z, c.Z, 1e-12 * c.Z );
    expect_xyz_near( bradford_adapt( d65, d65, e ), e, 1e-9 );

    auto a = tables().illuminant( "A" ).white_XYZ();
    expect_xyz_near( bradford_adapt( bradford_adapt( c, a, d65 ), d65, a ), c, 1e-9 );
}

TEST( Bradford, ZeroConeResponseIsSingular )
{
    EXPECT_THROW( bradford_adapt( { 1, 1, 1 }, { 0, 0, 0 }, d65_white() ), Error );
}

TEST( Lab, KnownValues )
{
    XYZ  w = tables().illuminant( "D65" ).white_XYZ( 100.0 );
    auto l = XYZ_to_Lab( w, w );
    EXPECT_NEAR( l.L, 100.0, 1e-12 );
    EXPECT_NEAR( l.a, 0.0, 1e-12 );
    EXPECT_NEAR( l.b, 0.0, 1e-12 );

    auto k = XYZ_to_Lab( { 0, 0, 0 }, w );
    EXPECT_NEAR( k.L, 0.0, 1e-12 );

    auto g = XYZ_to_Lab( 0.18 * w, w );
    EXPECT_NEAR( g.L, 49.4961, 1e-4 );
    EXPECT_NEAR( g.a, 0.0, 1e-12 );
    EXPECT_NEAR( g.b, 0.0, 1e-12 );
}

TEST( Lab, NegativeInputsAreClampedAndCounted )
{
    reset_lab_clamp_count();
    XYZ  w = d65_white();
    auto l = XYZ_to_Lab( { -0.1, 0.5, 0.2 }, w );
    EXPECT_TRUE( std::isfinite( l.a ) );
    EXPECT_EQ( lab_clamp_count(), 1u );
}

TEST( DeltaE2000, ReferencePairs )
{
    std::ifstream in( DUFAY_TEST_DATA_DIR "/ciede2000_pairs.csv" );
    ASSERT_TRUE( in );
    std::string line;
    std::getline( in, line );
    int rows = 0;
    while ( std::getline( in, line ) )
    {
        std::stringstream ss( line );
        double            v[8];
        char              comma;
        for ( int i = 0; i < 8; ++i )
        {
            ss >> v[i];
            if ( i < 7 )
                ss >> comma;
        }
        Lab    a{ v[0], v[1], v[2] }, b{ v[3], v[4], v[5] };
        double d = delta_e_2000( a, b );
        EXPECT_NEAR( d, v[6], 1e-4 ) << "row " << rows;
        EXPECT_NEAR( d, v[7], 1e-6 ) << "row " << rows;
        EXPECT_EQ( d, delta_e_2000( b, a ) );
        ++rows;
    }
    EXPECT_EQ( rows, 34 );
}

TEST( DeltaE2000, Extremes )
{
    EXPECT_EQ( delta_e_2000( { 50, 10, -20 }, { 50, 10, -20 } ), 0.0 );
    EXPECT_NEAR( delta_e_2000( { 100, 0, 0 }, { 0, 0, 0 } ), 100.0, 0.01 );
}

TEST( DeltaE2000, SymmetryProperty )
{
    std::mt19937_64                        rng( 11 );
    std::uniform_real_distribution<double> L( 0, 100 ), ab( -120, 120 );
    for ( int i = 0; i < 1000; ++i )
    {
        Lab a{ L( rng ), ab( rng ), ab( rng ) }, b{ L( rng ), ab( rng ), ab( rng ) };
        EXPECT_EQ( delta_e_2000( a, b ), delta_e_2000( b, a ) );
        EXPECT_EQ( delta_e_2000( a, a ), 0.0 );
        EXPECT_GE( delta_e_2000( a, b ), 0.0 );
    }
}

TEST( SRGB, WhiteBlackNeutral )
{
    auto w = XYZ_to_sRGB( d65_white(), d65_white() );
    EXPECT_NEAR( w.r, 1.0, 1.0 / 1024 );
    EXPECT_NEAR( w.g, 1.0, 1.0 / 1024 );
    EXPECT_NEAR( w.b, 1.0, 1.0 / 1024 );

    auto k = XYZ_to_sRGB( { 0, 0, 0 }, d65_white() );
    EXPECT_EQ( k.r, 0.0 );
    EXPECT_EQ( k.g, 0.0 );
    EXPECT_EQ( k.b, 0.0 );

    XYZ  e = chromaticity_to_XYZ( kE );
    auto g = XYZ_to_sRGB( 0.18 * e, e );
    EXPECT_NEAR( g.r, g.g, 1.0 / 512 );
    EXPECT_NEAR( g.b, g.g, 1.0 / 512 );
}

TEST( SRGB, ClipStatsCountOutOfGamut )
{
    ClipStats s;
    (void)XYZ_to_sRGB( xyY_to_XYZ( { { 0.17, 0.70 }, 0.4 } ), d65_white(), &s );
    (void)XYZ_to_sRGB( 0.5 * d65_white(), d65_white(), &s );
    EXPECT_EQ( s.total, 2u );
    EXPECT_EQ( s.clipped, 1u );
}

TEST( SRGB, TransferCurveRoundTrip )
{
    for ( double v = 0.0; v <= 1.0; v += 0.01 )
        EXPECT_NEAR( srgb_decode( srgb_encode( v ) ), v, 1e-12 );
}

TEST( Daylight, Locus )
{
    auto d = daylight_whitepoint( 6504 );
    EXPECT_NEAR( d.x, 0.3127, 1e-3 );
    EXPECT_NEAR( d.y, 0.3290, 1e-3 );
    EXPECT_GT( daylight_whitepoint( 4000 ).x, d.x );
    try
    {
        (void)daylight_whitepoint( 3000 );
        FAIL();
    }
    catch ( const Error &e )
    {
        EXPECT_EQ( e.code(), ErrorCode::UnsupportedCCT );
    }
}
