// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/metrics.hpp>
#include <dufay/reconstruct.hpp>
#include <dufay/scan_synth.hpp>

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace dufay;

namespace
{

struct Scene
{
    reseau::ReseauGeometry    geometry = reseau::ReseauGeometry::nominal();
    reseau::AreaFractions     fractions;
    reseau::BalancedPrimaries primaries;
    synth::GroundTruth        truth;
    synth::ScanImage          scan;
};

const Scene &scene( int size )
{
    static std::map<int, Scene> cache;
    auto                        it = cache.find( size );
    if ( it != cache.end() )
        return it->second;
    Scene       s;
    const auto &t = color::tables();
    s.fractions   = reseau::fractions_from_geometry( s.geometry );
    s.primaries   = reseau::white_balance( reseau::PrimarySet::bundled( "tab2", t ), s.fractions,
                                           t.illuminant( "D65" ).whitepoint );
    double extent = size / 0.2 + 100.0;
    auto   map    = reseau::build_screen( s.geometry, 0.5, extent, extent );
    s.truth       = synth::expose( synth::checker_target( map, synth::default_patches() ), map );
    synth::ScanSettings settings;
    settings.width = settings.height = size;
    s.scan = synth::render_scan( s.truth, s.primaries, {}, synth::ScannerModel::identity(), settings );
    return cache.emplace( size, std::move( s ) ).first->second;
}

} // namespace

static void BM_DeltaE2000( benchmark::State &state )
{
    color::Lab a{ 50.0, 2.6772, -79.7751 }, b{ 50.0, 0.0, -82.7485 };
    for ( auto _: state )
    {
        benchmark::DoNotOptimize( color::delta_e_2000( a, b ) );
        a.a += 1e-9;
    }
}
BENCHMARK( BM_DeltaE2000 );

static void BM_TrimmedStats( benchmark::State &state )
{
    std::mt19937                           rng( 1 );
    std::uniform_real_distribution<double> u( 0.0, 10.0 );
    std::vector<double>                    v( static_cast<std::size_t>( state.range( 0 ) ) );
    for ( auto &x: v )
        x = u( rng );
    for ( auto _: state )
        benchmark::DoNotOptimize( metrics::trimmed_stats( v, 0.01 ) );
    state.SetItemsProcessed( state.iterations() * state.range( 0 ) );
}
BENCHMARK( BM_TrimmedStats )->Arg( 1 << 16 )->Arg( 1 << 20 );

static void BM_BuildScreen( benchmark::State &state )
{
    auto g = reseau::ReseauGeometry::nominal();
    for ( auto _: state )
        benchmark::DoNotOptimize( reseau::build_screen( g, 0.5, 2000.0, 2000.0 ) );
}
BENCHMARK( BM_BuildScreen )->Unit( benchmark::kMillisecond );

static void BM_RenderScan( benchmark::State &state )
{
    const auto         &s = scene( 256 );
    synth::ScanSettings settings;
    settings.width = settings.height = static_cast<int>( state.range( 0 ) );
    for ( auto _: state )
        benchmark::DoNotOptimize(
            synth::render_scan( s.truth, s.primaries, {}, synth::ScannerModel::identity(), settings ) );
}
BENCHMARK( BM_RenderScan )->Arg( 256 )->Unit( benchmark::kMillisecond );

static void BM_RegisterGrid( benchmark::State &state )
{
    const auto &s = scene( static_cast<int>( state.range( 0 ) ) );
    for ( auto _: state )
        benchmark::DoNotOptimize( recon::register_grid( s.scan, s.geometry ) );
}
BENCHMARK( BM_RegisterGrid )->Arg( 256 )->Arg( 512 )->Unit( benchmark::kMillisecond );

static void BM_Pipeline( benchmark::State &state )
{
    const auto                 &s = scene( static_cast<int>( state.range( 0 ) ) );
    recon::ReconstructionParams p;
    p.primaries             = s.primaries;
    p.fractions             = s.fractions;
    p.simulation_illuminant = color::tables().illuminant( "D65" );
    for ( auto _: state )
        benchmark::DoNotOptimize( recon::run_pipeline( s.scan, s.geometry, p ) );
}
BENCHMARK( BM_Pipeline )->Arg( 256 )->Arg( 512 )->Unit( benchmark::kMillisecond );
BENCHMARK_MAIN();
