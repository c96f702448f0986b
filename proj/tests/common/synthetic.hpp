// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <dufay/reconstruct.hpp>
#include <dufay/scan_synth.hpp>

namespace dufay::fixture
{

/// A film with a patch target, exposed and ready to scan.
struct Film
{
    reseau::ReseauGeometry    geometry = reseau::ReseauGeometry::nominal();
    reseau::AreaFractions     fractions;
    reseau::BalancedPrimaries primaries;
    reseau::ScreenMap         map;
    RGBImage                  scene;
    synth::GroundTruth        truth;
    std::size_t               patch_count = 0;
};

inline Film make_film( double extent_um, const std::vector<color::RGB> &patches = synth::default_patches(),
                       double film_ppu = 0.5 )
{
    Film        f;
    const auto &t = color::tables();
    f.fractions   = reseau::fractions_from_geometry( f.geometry );
    f.primaries   = reseau::white_balance(
        reseau::PrimarySet::bundled( "tab2", t ), f.fractions, t.illuminant( "D65" ).whitepoint );
    f.map   = reseau::build_screen( f.geometry, film_ppu, extent_um, extent_um );
    f.scene = synth::checker_target( f.map, patches );
    f.truth = synth::expose( f.scene, f.map );
    f.patch_count = patches.size();
    return f;
}

inline synth::ScanSettings scan_settings( int size, double ppu = 0.2, std::uint64_t seed = 1 )
{
    synth::ScanSettings s;
    s.pixels_per_um = ppu;
    s.width         = size;
    s.height        = size;
    s.seed          = seed;
    return s;
}

inline recon::ReconstructionParams params_for( const Film &f )
{
    recon::ReconstructionParams p;
    p.primaries             = f.primaries;
    p.fractions             = f.fractions;
    p.simulation_illuminant = color::tables().illuminant( "D65" );
    return p;
}

/// Patch index seen by each scan pixel, or -1 within `margin_cells` réseau
/// periods of a patch boundary or outside the target.
inline Raster<int> patch_interior( const Film &f, const synth::DegradationSpec &deg, const synth::ScanSettings &s,
                                   int width, int height, double margin_cells = 2.5 )
{
    synth::ScanWarp warp( deg, s, width, height );
    Raster<int>     out( width, height, -1 );
    const double    m = margin_cells * f.geometry.pitch_um();
    const double    k = f.truth.film_pixels_per_um;
    for ( int y = 0; y < height; ++y )
        for ( int x = 0; x < width; ++x )
        {
            double fx, fy;
            warp.scan_to_film( x + 0.5, y + 0.5, fx, fy );
            int first = -2;
            bool same = true;
            for ( int q = 0; q < 9 && same; ++q )
            {
                int p = synth::checker_patch_at(
                    ( fx + ( q % 3 - 1 ) * m ) * k, ( fy + ( q / 3 - 1 ) * m ) * k, f.truth.film_width,
                    f.truth.film_height, f.patch_count );
                same  = p >= 0 && ( first == -2 || p == first );
                first = p;
            }
            if ( same )
                out.at( x, y ) = first;
        }
    return out;
}

} // namespace dufay::fixture
