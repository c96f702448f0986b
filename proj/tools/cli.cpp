// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include "cli.hpp"

#include <dufay/config.hpp>
#include <dufay/error.hpp>
#include <dufay/io.hpp>
#include <dufay/metrics.hpp>
#include <dufay/parallel.hpp>
#include <dufay/reconstruct.hpp>
#include <dufay/reseau.hpp>
#include <dufay/scan_synth.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

namespace dufay::cli
{

namespace
{

using reseau::Element;

// Any library error raised while interpreting the configuration is a usage
// problem, not a runtime failure.
template <typename F>
auto resolve( F &&f ) -> decltype( f() )
{
    try
    {
        return f();
    }
    catch ( const Error &e )
    {
        throw ConfigError( e.what() );
    }
}

void require( bool ok, const std::string &message )
{
    if ( !ok )
        throw ConfigError( message );
}

bool names_file( const std::string &s )
{
    return s.find( '/' ) != std::string::npos || s.ends_with( ".toml" );
}

reseau::PrimarySet load_primaries( const std::string &source )
{
    const auto &t = color::tables();
    if ( names_file( source ) )
    {
        require( fs::exists( source ), "primary set file not found: " + source );
        return resolve( [&] { return reseau::PrimarySet::load( source, t ); } );
    }
    return resolve( [&] { return reseau::PrimarySet::bundled( source, t ); } );
}

// Published dominant wavelengths stored alongside a primary set, if any.
std::array<std::optional<double>, 3> published_dominant( const std::string &source )
{
    std::string lower = source;
    std::transform( lower.begin(), lower.end(), lower.begin(), []( unsigned char c ) { return static_cast<char>( std::tolower( c ) ); } );
    fs::path path = names_file( source ) ? fs::path( source ) : color::tables().data_dir() / "primaries" / ( lower + ".toml" );
    std::array<std::optional<double>, 3> out;
    auto doc = resolve( [&] { return config::Document::load( path ); } );
    for ( Element e: reseau::kElements )
        out[static_cast<std::size_t>( index( e ) )] =
            doc.number( std::string( reseau::to_string( e ) ) + ".published_dominant_nm" );
    return out;
}

reseau::ReseauGeometry load_geometry( const std::string &source )
{
    if ( source == "default" )
        return reseau::ReseauGeometry::nominal();
    require( fs::exists( source ), "geometry file not found: " + source );
    return resolve( [&] { return reseau::ReseauGeometry::load( source ); } );
}

color::Illuminant load_illuminant( const std::string &name )
{
    return resolve( [&] { return color::tables().illuminant( name ); } );
}

bool unbalanced( const std::string &wb )
{
    return wb.empty() || wb == "none";
}

reseau::BalancedPrimaries balance( const reseau::PrimarySet &p, const reseau::AreaFractions &a, const std::string &wb )
{
    if ( unbalanced( wb ) )
        return resolve( [&] { return reseau::BalancedPrimaries::unbalanced( p, a ); } );
    auto target = load_illuminant( wb ).whitepoint;
    return resolve( [&] { return reseau::white_balance( p, a, target ); } );
}

/// Illuminant the simulation is viewed under: explicit choice, else the
/// balance target, else the one the primaries were measured under.
color::Illuminant simulation_illuminant( const RunConfig &c, const reseau::PrimarySet &p )
{
    if ( !c.illuminant.empty() )
        return load_illuminant( c.illuminant );
    if ( !unbalanced( c.white_balance ) )
        return load_illuminant( c.white_balance );
    return p.measurement_illuminant;
}

fs::path with_suffix( const fs::path &p, const std::string &suffix, const std::string &ext )
{
    return p.parent_path() / ( p.stem().string() + suffix + ext );
}

void write_xyz( const fs::path &path, const XYZImage &img, const color::XYZ &white )
{
    io::write_xyz_tiff( path, img );
    nlohmann::json j;
    j["whitepoint"] = { white.X, white.Y, white.Z };
    io::write_text( io::sidecar_path( path ), j.dump( 2 ) + "\n" );
}

std::optional<color::XYZ> read_white( const fs::path &xyz_tiff )
{
    auto side = io::sidecar_path( xyz_tiff );
    if ( !fs::exists( side ) )
        return std::nullopt;
    std::ifstream in( side );
    auto          j = nlohmann::json::parse( in, nullptr, false );
    if ( j.is_discarded() || !j.contains( "whitepoint" ) )
        return std::nullopt;
    auto w = j["whitepoint"].get<std::vector<double>>();
    if ( w.size() != 3 )
        return std::nullopt;
    return color::XYZ{ w[0], w[1], w[2] };
}

std::string fmt( const char *f, double v )
{
    char buf[64];
    std::snprintf( buf, sizeof buf, f, v );
    return buf;
}

} // namespace

// ---------------------------------------------------------------------------

int cmd_simulate_reseau( const RunConfig &c )
{
    require( !c.output.empty(), "--out is required" );
    require( c.render_ppu > 0.0 && c.render_extent > 0.0, "--ppu and --extent must be positive" );
    auto primaries = load_primaries( c.primaries );
    auto geometry  = load_geometry( c.geometry );
    auto fractions = resolve( [&] { return reseau::fractions_from_geometry( geometry ); } );
    auto map       = resolve( [&] { return reseau::build_screen( geometry, c.render_ppu, c.render_extent, c.render_extent ); } );
    auto white     = simulation_illuminant( c, primaries ).white_XYZ( 1.0 );

    auto result = unbalanced( c.white_balance )
                      ? reseau::render_reseau( map, primaries, white )
                      : reseau::render_reseau( map, balance( primaries, fractions, c.white_balance ), white );
    io::write_png( c.output, result.image );

    for ( Element e: reseau::kElements )
    {
        const auto &rgb = result.colors[static_cast<std::size_t>( index( e ) )];
        std::printf( "%-6s #%02x%02x%02x\n", reseau::to_string( e ), rgb.r, rgb.g, rgb.b );
    }
    if ( result.desaturation > 0.0 )
        spdlog::info( "primaries pulled {:.1f}% toward white to fit sRGB", 100.0 * result.desaturation );
    return kExitOk;
}

int cmd_analyze_primaries( const RunConfig &c )
{
    auto        primaries = load_primaries( c.primaries );
    auto        published = published_dominant( c.primaries );
    auto        geometry  = load_geometry( c.geometry );
    auto        fractions = resolve( [&] { return reseau::fractions_from_geometry( geometry ); } );
    auto        white     = load_illuminant( c.illuminant.empty() ? "E" : c.illuminant );
    const auto &observer  = color::tables().observer();

    std::ostringstream out;
    out << "primary set " << primaries.source_label << " (measured under " << primaries.measurement_illuminant.name
        << ")\n";
    out << "whitepoint  " << white.name << " (" << fmt( "%.4f", white.whitepoint.x ) << ", "
        << fmt( "%.4f", white.whitepoint.y ) << ")\n\n";
    char line[256];
    std::snprintf( line, sizeof line, "%-8s %7s %7s %7s %8s %8s %8s  %s\n", "element", "x", "y", "Y", "X", "Y", "Z",
                   "dominant nm" );
    out << line;
    for ( Element e: reseau::kElements )
    {
        const auto &p   = primaries.primary( e );
        auto        xyz = primaries.primary_XYZ( e );
        std::string dom;
        try
        {
            dom = fmt( "%.1f", color::dominant_wavelength( p.chroma, white.whitepoint, observer ) );
            if ( auto pub = published[static_cast<std::size_t>( index( e ) )] )
            {
                double d = std::stod( dom );
                dom += std::abs( d - *pub ) > 1.0 ? "  (differs from published " + fmt( "%.1f", *pub ) + ")"
                                                  : "  (published " + fmt( "%.1f", *pub ) + ")";
            }
        }
        catch ( const Error & )
        {
            dom = "undefined";
        }
        std::snprintf( line, sizeof line, "%-8s %7.4f %7.4f %7.2f %8.3f %8.3f %8.3f  %s\n", reseau::to_string( e ),
                       p.chroma.x, p.chroma.y, p.Y, xyz.X, xyz.Y, xyz.Z, dom.c_str() );
        out << line;
    }

    auto        mix  = reseau::mixture_XYZ( primaries, fractions );
    auto        xy   = color::XYZ_to_xyY( mix ).chroma;
    double      dist = std::hypot( xy.x - white.whitepoint.x, xy.y - white.whitepoint.y );
    std::string mix_dom;
    try
    {
        mix_dom = fmt( "%.1f nm", color::dominant_wavelength( xy, white.whitepoint, observer ) );
    }
    catch ( const Error & )
    {
        mix_dom = "undefined";
    }
    out << "\nmixture at area fractions (" << fmt( "%.3f", fractions.red ) << ", " << fmt( "%.3f", fractions.green )
        << ", " << fmt( "%.3f", fractions.blue ) << ")\n";
    out << "  xy (" << fmt( "%.4f", xy.x ) << ", " << fmt( "%.4f", xy.y ) << ")  Y " << fmt( "%.3f", mix.Y )
        << "  dominant " << mix_dom << "\n";
    out << "  distance to whitepoint " << fmt( "%.4f", dist )
        << ( dist > 0.02 ? "  NON-NEUTRAL (> 0.02)" : "  neutral" ) << "\n";

    if ( !unbalanced( c.white_balance ) )
    {
        auto bp = balance( primaries, fractions, c.white_balance );
        out << "\nwhite balance to " << c.white_balance << ": luminance scale " << fmt( "%.4f", bp.scale[0] ) << ", "
            << fmt( "%.4f", bp.scale[1] ) << ", " << fmt( "%.4f", bp.scale[2] ) << "\n";
    }

    std::cout << out.str();
    if ( !c.output.empty() )
        io::write_text( c.output, out.str() );
    return kExitOk;
}

int cmd_synth( const RunConfig &c )
{
    const auto &s = c.synth;
    require( !c.output.empty(), "--out is required" );
    require( s.extent_um > 0.0, "--extent must be positive" );
    require( s.film_ppu > 0.0 && s.scan_ppu > 0.0, "resolutions must be positive" );
    require( s.size >= 0, "--size must not be negative" );
    require( s.patches >= 1 && s.patches <= static_cast<int>( synth::default_patches().size() ),
             "--patches must be between 1 and 24" );
    require( s.affine.empty() || s.affine.size() == 6, "--affine takes six numbers" );
    require( s.scanner == "identity" || s.scanner == "primaries", "--scanner is identity or primaries" );

    synth::DegradationSpec deg;
    deg.psf_sigma_center_px = s.blur_px;
    deg.psf_sigma_corner_px = s.blur_corner_px < 0.0 ? s.blur_px : s.blur_corner_px;
    if ( !s.affine.empty() )
        deg.affine = { s.affine[0], s.affine[1], s.affine[2], s.affine[3], s.affine[4], s.affine[5] };
    deg.displacement_px = s.displacement_px;
    deg.noise_sigma     = s.noise;
    resolve( [&] { deg.validate(); } );

    auto primaries = load_primaries( c.primaries );
    auto geometry  = load_geometry( c.geometry );
    auto fractions = resolve( [&] { return reseau::fractions_from_geometry( geometry ); } );
    auto balanced  = balance( primaries, fractions, c.white_balance );
    auto map       = resolve( [&] { return reseau::build_screen( geometry, s.film_ppu, s.extent_um, s.extent_um ); } );

    auto patches = synth::default_patches();
    patches.resize( static_cast<std::size_t>( s.patches ) );
    auto scene = synth::checker_target( map, patches );
    auto truth = synth::expose( scene, map );

    synth::ScannerModel scanner;
    scanner.kind = s.scanner == "primaries" ? synth::ScannerModel::Kind::Primaries : synth::ScannerModel::Kind::Identity;
    synth::ScanSettings settings;
    settings.pixels_per_um = s.scan_ppu;
    settings.width         = s.size;
    settings.height        = s.size;
    settings.seed          = c.seed;

    auto scan = synth::render_scan( truth, balanced, deg, scanner, settings );

    io::ScanMetadata meta;
    meta.pixels_per_um    = s.scan_ppu;
    meta.seed             = c.seed;
    meta.degradation      = deg;
    meta.scanner_response = scanner.resolve( balanced );
    io::write_scan( c.output, scan, meta );
    io::write_ground_truth( with_suffix( c.output, "_truth", ".json" ), truth );

    recon::ReconstructionParams params;
    params.primaries             = balanced;
    params.fractions             = fractions;
    params.simulation_illuminant = simulation_illuminant( c, primaries );
    auto reference = recon::to_colorimetric(
        synth::scene_in_scan( scene, truth, deg, settings, scan.width(), scan.height() ), params );
    write_xyz( with_suffix( c.output, "_truth_xyz", ".tif" ), reference, recon::output_white( params ) );

    spdlog::info( "synth: {}x{} scan, {} x {} elements", scan.width(), scan.height(), truth.intensities.cols,
                  truth.intensities.rows );
    return kExitOk;
}

int cmd_reconstruct( const RunConfig &c )
{
    require( c.inputs.size() == 1, "exactly one input scan is required" );
    require( !c.output.empty(), "--out is required" );
    require( fs::exists( c.inputs[0] ), "input not found: " + c.inputs[0].string() );
    require( c.pixels_per_um >= 0.0, "--ppu must not be negative" );

    auto primaries = load_primaries( c.primaries );
    auto geometry  = load_geometry( c.geometry );

    recon::ReconstructionParams params;
    params.fractions             = resolve( [&] { return reseau::fractions_from_geometry( geometry ); } );
    params.primaries             = balance( primaries, params.fractions, c.white_balance );
    params.simulation_illuminant = simulation_illuminant( c, primaries );
    params.normalize_exposure    = c.normalize_exposure;
    params.compensate_saturation = c.compensate;

    auto file = io::read_scan( c.inputs[0] );
    if ( c.pixels_per_um > 0.0 )
        file.scan.pixels_per_um = c.pixels_per_um;
    require( file.scan.pixels_per_um > 0.0, "scan resolution unknown; pass --ppu" );
    params.registration.scanner_response = file.metadata.scanner_response;
    resolve( [&] { params.validate(); } );

    auto report_path = c.report_path.empty() ? with_suffix( c.output, "_report", ".json" ) : c.report_path;
    recon::PipelineResult result;
    try
    {
        result = recon::run_pipeline( file.scan, geometry, params );
    }
    catch ( const recon::PipelineFailure &f )
    {
        io::write_report( report_path, f.report() );
        spdlog::error( "reconstruct: {} failed: {} ({})", f.report().failed_stage, f.what(), to_string( f.code() ) );
        return kExitRuntime;
    }

    auto white = recon::output_white( params );
    write_xyz( c.output, result.xyz, white );
    auto render_path = c.render_path.empty() ? with_suffix( c.output, "_srgb", ".png" ) : c.render_path;
    io::write_rgb16( render_path, recon::to_srgb( result.xyz, white ) );
    io::write_report( report_path, result.report );
    spdlog::info( "reconstruct: mean registration residual {:.3f} px", result.report.mean_residual_px );
    return kExitOk;
}

int cmd_compare( const RunConfig &c )
{
    require( c.inputs.size() >= 2, "at least two reconstructions are required" );
    require( c.labels.empty() || c.labels.size() == c.inputs.size(), "one label per input" );
    require( c.trim >= 0.0 && c.trim < 0.5, "--trim must be in [0, 0.5)" );
    require( c.format == "text" || c.format == "csv", "--format is text or csv" );
    for ( const auto &p: c.inputs )
        require( fs::exists( p ), "input not found: " + p.string() );

    std::vector<metrics::LabeledImage> images;
    for ( std::size_t k = 0; k < c.inputs.size(); ++k )
    {
        auto label = c.labels.empty() ? c.inputs[k].stem().string() : c.labels[k];
        images.push_back( { label, io::read_xyz_tiff( c.inputs[k] ) } );
        require( images.back().image.same_shape( images.front().image ), "image sizes differ" );
    }

    // Lab white: explicit illuminant, else the first input's recorded white.
    color::XYZ white = color::d65_white();
    if ( !c.illuminant.empty() )
        white = load_illuminant( c.illuminant ).white_XYZ( 1.0 );
    else if ( auto w = read_white( c.inputs[0] ) )
        white = *w;

    auto        m    = metrics::pairwise_matrix( images, white, c.trim );
    std::string text = c.format == "csv" ? m.to_csv() : m.to_text();
    std::cout << text;
    if ( !c.output.empty() )
        io::write_text( c.output, text );
    return kExitOk;
}

// ---------------------------------------------------------------------------

int run( int argc, const char *const *argv )
{
    RunConfig c;
    CLI::App  app{ "Colour reconstruction of additive screen-plate film scans", "dufay" };
    app.set_config( "--config", "", "TOML file with option values; command-line flags take precedence" );
    app.option_defaults()->always_capture_default();
    app.require_subcommand( 1 );
    app.fallthrough();
    app.allow_config_extras( CLI::config_extras_mode::error );

    bool verbose = false;
    app.add_option( "--threads", c.threads, "Worker thread cap (0: all cores)" );
    app.add_option( "--seed", c.seed, "Random seed" );
    app.add_flag( "-v,--verbose", verbose, "Log progress to standard error" );

    // Shared options live on the top-level app so that they can be given
    // before or after the subcommand and as top-level keys of the TOML file.
    // The white-balance default depends on the subcommand; resolved below.
    app.add_option( "--primaries", c.primaries, "Primary set: tab1, tab2, srgb or a TOML file" );
    app.add_option( "--geometry", c.geometry, "Screen geometry: default or a TOML file" );
    app.add_option( "--illuminant", c.illuminant, "Illuminant name (A, B, C, D65, E) or CCT in kelvin" );
    app.add_option( "--white-balance", c.white_balance, "Balance target illuminant, or none" );

    auto *sim = app.add_subcommand( "simulate-reseau", "Render the screen with chosen primaries to PNG" );
    sim->add_option( "--out", c.output, "Output PNG" )->required();
    sim->add_option( "--ppu", c.render_ppu, "Pixels per micrometre" );
    sim->add_option( "--extent", c.render_extent, "Square extent in micrometres" );

    auto *ana = app.add_subcommand( "analyze-primaries", "Report chromaticities, dominant wavelengths and mixture" );
    ana->add_option( "--out", c.output, "Also write the report to this file" );

    auto *syn = app.add_subcommand( "synth", "Generate a synthetic scan with ground truth" );
    syn->add_option( "--out", c.output, "Output scan TIFF" )->required();
    syn->add_option( "--extent", c.synth.extent_um, "Film extent in micrometres" );
    syn->add_option( "--film-ppu", c.synth.film_ppu, "Film raster pixels per micrometre" );
    syn->add_option( "--ppu", c.synth.scan_ppu, "Scan pixels per micrometre" );
    syn->add_option( "--size", c.synth.size, "Scan width and height in pixels (0: cover the film)" );
    syn->add_option( "--patches", c.synth.patches, "Number of target patches" );
    syn->add_option( "--blur", c.synth.blur_px, "PSF sigma at the centre, pixels" );
    syn->add_option( "--blur-corner", c.synth.blur_corner_px, "PSF sigma at the corners, pixels" );
    syn->add_option( "--affine", c.synth.affine, "a11 a12 a21 a22 tx ty" )->expected( 6 );
    syn->add_option( "--displacement", c.synth.displacement_px, "Peak smooth displacement, pixels" );
    syn->add_option( "--noise", c.synth.noise, "Noise sigma as a fraction of full scale" );
    syn->add_option( "--scanner", c.synth.scanner, "Scanner response: identity or primaries" );

    auto *rec = app.add_subcommand( "reconstruct", "Reconstruct colours from a scan" );
    rec->add_option( "scan", c.inputs, "Input scan TIFF" )->required();
    rec->add_option( "--out", c.output, "Output XYZ TIFF" )->required();
    rec->add_option( "--render", c.render_path, "sRGB render (default: <out>_srgb.png)" );
    rec->add_option( "--report", c.report_path, "JSON report (default: <out>_report.json)" );
    rec->add_option( "--ppu", c.pixels_per_um, "Scan pixels per micrometre when the sidecar lacks it" );
    rec->add_flag( "!--no-compensate", c.compensate, "Skip dot-spread saturation compensation" );
    rec->add_flag( "!--no-normalize-exposure", c.normalize_exposure, "Keep absolute exposure" );

    auto *cmp = app.add_subcommand( "compare", "Pairwise trimmed CIEDE2000 between reconstructions" );
    cmp->add_option( "inputs", c.inputs, "XYZ TIFFs" )->required();
    cmp->add_option( "--labels", c.labels, "Labels, one per input" );
    cmp->add_option( "--trim", c.trim, "Fraction of largest differences dropped" );
    cmp->add_option( "--format", c.format, "text or csv" );
    cmp->add_option( "--out", c.output, "Also write the matrix to this file" );


    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError &e )
    {
        int code = app.exit( e );
        return code == 0 ? kExitOk : kExitUsage;
    }

    spdlog::set_level( verbose ? spdlog::level::info : spdlog::level::warn );
    spdlog::set_pattern( "%^%l%$: %v" );
    set_max_threads( c.threads );

    const CLI::App *chosen = app.get_subcommands().front();
    c.subcommand           = chosen->get_name();
    if ( app.count( "--white-balance" ) == 0 )
        c.white_balance = ( chosen == syn || chosen == rec ) ? "D65" : "none";

    try
    {
        if ( chosen == sim )
            return cmd_simulate_reseau( c );
        if ( chosen == ana )
            return cmd_analyze_primaries( c );
        if ( chosen == syn )
            return cmd_synth( c );
        if ( chosen == rec )
            return cmd_reconstruct( c );
        return cmd_compare( c );
    }
    catch ( const ConfigError &e )
    {
        std::cerr << "dufay " << c.subcommand << ": " << e.what() << "\n";
        return kExitUsage;
    }
    catch ( const Error &e )
    {
        std::cerr << "dufay " << c.subcommand << ": " << e.what() << " (" << to_string( e.code() ) << ")\n";
        return kExitRuntime;
    }
    catch ( const std::exception &e )
    {
        std::cerr << "dufay " << c.subcommand << ": " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace dufay::cli
