// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include "cli.hpp"

#include <dufay/colorimetry.hpp>
#include <dufay/io.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <random>
#include <set>

using namespace dufay;
namespace fs = std::filesystem;

namespace
{

int dufay_main( std::vector<std::string> args )
{
    args.insert( args.begin(), "dufay" );
    std::vector<const char *> argv;
    for ( const auto &a: args )
        argv.push_back( a.c_str() );
    return cli::run( static_cast<int>( argv.size() ), argv.data() );
}

std::string slurp( const fs::path &p )
{
    std::ifstream in( p, std::ios::binary );
    return { std::istreambuf_iterator<char>( in ), {} };
}

class Cli : public ::testing::Test
{
protected:
    void SetUp() override
    {
        dir_ = fs::temp_directory_path() /
               ( std::string( "dufay_cli_" ) + ::testing::UnitTest::GetInstance()->current_test_info()->name() );
        fs::remove_all( dir_ );
        fs::create_directories( dir_ );
    }
    void TearDown() override { fs::remove_all( dir_ ); }

    std::string at( const std::string &name ) const { return ( dir_ / name ).string(); }

    // Small scan that still holds eight patch interiors.
    int small_synth( const std::string &name, const std::vector<std::string> &extra = {} )
    {
        std::vector<std::string> args{ "synth", "--out", at( name ), "--size", "256", "--extent", "1400", "--patches", "8" };
        args.insert( args.end(), extra.begin(), extra.end() );
        return dufay_main( args );
    }

    fs::path dir_;
};

} // namespace

TEST_F( Cli, UsageErrors )
{
    EXPECT_EQ( dufay_main( {} ), cli::kExitUsage );
    EXPECT_EQ( dufay_main( { "frobnicate" } ), cli::kExitUsage );
    EXPECT_EQ( dufay_main( { "synth", "--size", "abc", "--out", at( "x.tif" ) } ), cli::kExitUsage );
    EXPECT_EQ( dufay_main( { "--help" } ), cli::kExitOk );
}

TEST_F( Cli, SimulateReseau )
{
    ASSERT_EQ( dufay_main( { "simulate-reseau", "--primaries", "tab2", "--geometry", "default", "--out", at( "r.png" ) } ),
               cli::kExitOk );
    auto img = io::read_png( at( "r.png" ) );
    std::set<std::tuple<int, int, int>> colours;
    for ( const auto &p: img.pixels )
        colours.insert( { p.r, p.g, p.b } );
    EXPECT_EQ( colours.size(), 3u );

    EXPECT_EQ( dufay_main( { "simulate-reseau", "--primaries", "tab9", "--out", at( "x.png" ) } ), cli::kExitUsage );
    EXPECT_EQ( dufay_main( { "simulate-reseau", "--geometry", at( "none.toml" ), "--out", at( "x.png" ) } ),
               cli::kExitUsage );
}

TEST_F( Cli, SimulateWhiteBalancedMixture )
{
    ASSERT_EQ( dufay_main( { "simulate-reseau", "--white-balance", "E", "--out", at( "e.png" ) } ), cli::kExitOk );
    auto       img = io::read_png( at( "e.png" ) );
    color::RGB mean;
    for ( const auto &p: img.pixels )
    {
        mean.r += color::srgb_decode( p.r / 255.0 );
        mean.g += color::srgb_decode( p.g / 255.0 );
        mean.b += color::srgb_decode( p.b / 255.0 );
    }
    double n = static_cast<double>( img.size() );
    auto   d65 = color::linear_sRGB_to_XYZ( { mean.r / n, mean.g / n, mean.b / n } );
    // The render is adapted from the simulation white to D65; undo that.
    auto e  = color::tables().illuminant( "E" ).white_XYZ( 1.0 );
    auto xy = color::XYZ_to_xyY( color::bradford_adapt( d65, color::d65_white(), e ) ).chroma;
    EXPECT_NEAR( xy.x, 1.0 / 3.0, 0.005 );
    EXPECT_NEAR( xy.y, 1.0 / 3.0, 0.005 );
}

TEST_F( Cli, AnalyzePrimaries )
{
    ASSERT_EQ( dufay_main( { "analyze-primaries", "--primaries", "tab1", "--illuminant", "E", "--out", at( "t1.txt" ) } ),
               cli::kExitOk );
    auto t1 = slurp( at( "t1.txt" ) );
    EXPECT_NE( t1.find( "601.7" ), std::string::npos );
    EXPECT_NE( t1.find( "NON-NEUTRAL" ), std::string::npos );

    ASSERT_EQ( dufay_main( { "analyze-primaries", "--primaries", "tab2", "--out", at( "t2.txt" ) } ), cli::kExitOk );
    auto t2    = slurp( at( "t2.txt" ) );
    auto green = t2.substr( t2.find( "\ngreen" ) + 1 );
    green      = green.substr( 0, green.find( '\n' ) );
    EXPECT_NE( green.find( "differs from published 549.6" ), std::string::npos ) << green;
    EXPECT_NE( green.find( " 534." ), std::string::npos ) << green;

    EXPECT_EQ( dufay_main( { "analyze-primaries", "--illuminant", "Q42" } ), cli::kExitUsage );
}

TEST_F( Cli, SynthOutputsAndDeterminism )
{
    ASSERT_EQ( small_synth( "a.tif", { "--seed", "5", "--noise", "0.01", "--blur", "1" } ), cli::kExitOk );
    ASSERT_EQ( small_synth( "b.tif", { "--seed", "5", "--noise", "0.01", "--blur", "1" } ), cli::kExitOk );
    for ( const char *f: { "a.json", "a_truth.json", "a_truth.bin", "a_truth_xyz.tif" } )
        EXPECT_TRUE( fs::exists( dir_ / f ) ) << f;
    EXPECT_EQ( slurp( at( "a.tif" ) ), slurp( at( "b.tif" ) ) );
    EXPECT_EQ( slurp( at( "a_truth.bin" ) ), slurp( at( "b_truth.bin" ) ) );
    EXPECT_EQ( slurp( at( "a_truth_xyz.tif" ) ), slurp( at( "b_truth_xyz.tif" ) ) );

    auto f = io::read_scan( at( "a.tif" ) );
    EXPECT_EQ( f.scan.width(), 256 );
    EXPECT_EQ( f.metadata.seed, 5u );
    EXPECT_EQ( f.metadata.degradation.psf_sigma_center_px, 1.0 );

    ASSERT_EQ( small_synth( "c.tif", { "--seed", "6", "--noise", "0.01" } ), cli::kExitOk );
    EXPECT_NE( slurp( at( "a.tif" ) ), slurp( at( "c.tif" ) ) );
}

TEST_F( Cli, SynthRejectsBadSpecs )
{
    EXPECT_EQ( dufay_main( { "synth", "--extent", "0", "--out", at( "z.tif" ) } ), cli::kExitUsage );
    EXPECT_EQ( small_synth( "n.tif", { "--noise", "-1" } ), cli::kExitUsage );
    EXPECT_EQ( small_synth( "n.tif", { "--patches", "30" } ), cli::kExitUsage );
    EXPECT_EQ( small_synth( "n.tif", { "--scanner", "drum" } ), cli::kExitUsage );
    EXPECT_FALSE( fs::exists( dir_ / "z.tif" ) );
}

TEST_F( Cli, ReconstructWritesOutputs )
{
    ASSERT_EQ( small_synth( "s.tif" ), cli::kExitOk );
    ASSERT_EQ( dufay_main( { "reconstruct", at( "s.tif" ), "--out", at( "r.tif" ) } ), cli::kExitOk );
    EXPECT_TRUE( fs::exists( dir_ / "r_srgb.png" ) );
    auto report = nlohmann::json::parse( slurp( at( "r_report.json" ) ) );
    EXPECT_TRUE( report["ok"].get<bool>() );
    EXPECT_LT( report["registration"]["mean_residual_px"].get<double>(), 0.1 );
    EXPECT_EQ( report["dot_spread"]["sigma_px"].size(), 16u );
    EXPECT_EQ( io::read_xyz_tiff( at( "r.tif" ) ).width, 256 );

    EXPECT_EQ( dufay_main( { "reconstruct", at( "s.tif" ), "--primaries", "srgb", "--out", at( "q.tif" ) } ),
               cli::kExitOk );
    EXPECT_EQ( dufay_main( { "reconstruct", at( "missing.tif" ), "--out", at( "q.tif" ) } ), cli::kExitUsage );
}

TEST_F( Cli, ReconstructNoiseFails )
{
    synth::ScanImage scan;
    std::mt19937     rng( 3 );
    for ( auto &p: scan.planes )
    {
        p = Plane16( 256, 256 );
        for ( auto &v: p.pixels )
            v = static_cast<std::uint16_t>( 20000 + rng() % 20000 );
    }
    io::ScanMetadata meta;
    meta.pixels_per_um = 0.2;
    io::write_scan( at( "noise.tif" ), scan, meta );
    EXPECT_EQ( dufay_main( { "reconstruct", at( "noise.tif" ), "--out", at( "n.tif" ) } ), cli::kExitRuntime );
    auto report = nlohmann::json::parse( slurp( at( "n_report.json" ) ) );
    EXPECT_FALSE( report["ok"].get<bool>() );
    EXPECT_EQ( report["error"]["code"], "RegistrationFailed" );
    EXPECT_EQ( report["error"]["stage"], "register_grid" );
    EXPECT_FALSE( fs::exists( dir_ / "n.tif" ) );
}

TEST_F( Cli, Compare )
{
    ASSERT_EQ( small_synth( "s.tif" ), cli::kExitOk );
    auto truth = at( "s_truth_xyz.tif" );
    fs::copy_file( truth, at( "copy.tif" ) );
    ASSERT_EQ( dufay_main( { "compare", truth, at( "copy.tif" ), "--format", "csv", "--out", at( "same.csv" ) } ),
               cli::kExitOk );
    auto csv = slurp( at( "same.csv" ) );
    EXPECT_NE( csv.find( ",0.000000,0.000000," ), std::string::npos ) << csv;

    EXPECT_EQ( dufay_main( { "compare", truth } ), cli::kExitUsage );
    io::write_xyz_tiff( at( "small.tif" ), XYZImage( 8, 8 ) );
    EXPECT_EQ( dufay_main( { "compare", truth, at( "small.tif" ) } ), cli::kExitUsage );
    EXPECT_EQ( dufay_main( { "compare", truth, at( "copy.tif" ), "--trim", "0.7" } ), cli::kExitUsage );
}

TEST_F( Cli, CompareFiveReconstructions )
{
    ASSERT_EQ( small_synth( "s.tif" ), cli::kExitOk );
    std::vector<std::string> args{ "compare" };
    int                      k = 0;
    for ( const char *set: { "tab1", "tab2", "srgb" } )
        for ( const char *wb: { "D65", "none" } )
        {
            if ( k++ == 5 )
                break;
            auto out = at( std::string( set ) + "_" + wb + ".tif" );
            ASSERT_EQ( dufay_main( { "reconstruct", at( "s.tif" ), "--primaries", set, "--white-balance", wb, "--out", out } ),
                       cli::kExitOk );
            args.push_back( out );
        }
    args.insert( args.end(), { "--out", at( "m.txt" ) } );
    ASSERT_EQ( dufay_main( args ), cli::kExitOk );
    auto text = slurp( at( "m.txt" ) );
    // Two header lines and four rows holding 1 + 2 + 3 + 4 entries.
    EXPECT_EQ( std::count( text.begin(), text.end(), '\n' ), 6 );
    std::istringstream lines( text );
    std::string        line;
    std::getline( lines, line );
    std::getline( lines, line );
    for ( int row = 1; row <= 4; ++row )
    {
        std::getline( lines, line );
        std::istringstream cells( line );
        std::string        label;
        cells >> label;
        int    count = 0;
        double v;
        while ( cells >> v )
            ++count;
        EXPECT_EQ( count, 2 * row ) << line;
    }
}

TEST_F( Cli, ConfigFileWithOverrides )
{
    {
        std::ofstream toml( dir_ / "run.toml" );
        toml << "primaries = \"tab1\"\nilluminant = \"E\"\n\n[analyze-primaries]\nout = \"" << at( "cfg.txt" ) << "\"\n";
    }
    ASSERT_EQ( dufay_main( { "--config", at( "run.toml" ), "analyze-primaries" } ), cli::kExitOk );
    EXPECT_NE( slurp( at( "cfg.txt" ) ).find( "Tab1" ), std::string::npos );

    ASSERT_EQ( dufay_main( { "--config", at( "run.toml" ), "analyze-primaries", "--primaries", "srgb" } ), cli::kExitOk );
    EXPECT_NE( slurp( at( "cfg.txt" ) ).find( "sRGB" ), std::string::npos );

    {
        std::ofstream toml( dir_ / "bad.toml" );
        toml << "primaris = \"tab1\"\n";
    }
    EXPECT_EQ( dufay_main( { "--config", at( "bad.toml" ), "analyze-primaries" } ), cli::kExitUsage );
}
