// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/error.hpp>
#include <dufay/io.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>

#include <nlohmann/json.hpp>
#include <png.h>

namespace dufay::io
{

using json = nlohmann::json;

namespace
{

[[noreturn]] void io_error( const fs::path &p, const std::string &what )
{
    throw Error( ErrorCode::IoError, p.string() + ": " + what );
}

[[noreturn]] void parse_error( const fs::path &p, const std::string &what )
{
    throw Error( ErrorCode::ParseError, p.string() + ": " + what );
}

std::string read_bytes( const fs::path &p )
{
    std::ifstream in( p, std::ios::binary );
    if ( !in )
        io_error( p, "cannot open for reading" );
    return { std::istreambuf_iterator<char>( in ), std::istreambuf_iterator<char>() };
}

// ---------------------------------------------------------------------------
// TIFF: baseline, little-endian, uncompressed, one strip per page.
// ---------------------------------------------------------------------------

enum Tag : std::uint16_t
{
    ImageWidth      = 256,
    ImageLength     = 257,
    BitsPerSample   = 258,
    Compression     = 259,
    Photometric     = 262,
    StripOffsets    = 273,
    SamplesPerPixel = 277,
    RowsPerStrip    = 278,
    StripByteCounts = 279,
    PlanarConfig    = 284,
    PageName        = 285,
    SampleFormat    = 339,
};

struct Page
{
    std::uint32_t width = 0, height = 0;
    std::uint16_t bits = 0, samples = 0, format = 1, photometric = 1;
    std::string   name;
    std::string   data; // packed little-endian samples
};

class TiffWriter
{
public:
    void add( Page p ) { pages_.push_back( std::move( p ) ); }

    std::string encode() const
    {
        std::string out = { 'I', 'I', 42, 0, 0, 0, 0, 0 };
        std::size_t link = 4; // where the next IFD offset goes
        for ( const auto &p: pages_ )
        {
            align( out );
            std::uint32_t data_at = static_cast<std::uint32_t>( out.size() );
            out += p.data;
            align( out );

            // Out-of-line values: BitsPerSample / SampleFormat arrays, name.
            std::uint32_t bits_at = 0, fmt_at = 0, name_at = 0;
            if ( p.samples > 2 )
            {
                bits_at = static_cast<std::uint32_t>( out.size() );
                for ( int s = 0; s < p.samples; ++s )
                    put16( out, p.bits );
                align( out );
                fmt_at = static_cast<std::uint32_t>( out.size() );
                for ( int s = 0; s < p.samples; ++s )
                    put16( out, p.format );
                align( out );
            }
            std::string name = p.name + '\0';
            if ( name.size() > 4 )
            {
                name_at = static_cast<std::uint32_t>( out.size() );
                out += name;
                align( out );
            }

            auto ifd_at = static_cast<std::uint32_t>( out.size() );
            patch32( out, link, ifd_at );
            std::vector<std::array<std::uint32_t, 4>> e; // tag, type, count, value
            e.push_back( { ImageWidth, 4, 1, p.width } );
            e.push_back( { ImageLength, 4, 1, p.height } );
            e.push_back( { BitsPerSample, 3, p.samples, p.samples > 2 ? bits_at : p.bits } );
            e.push_back( { Compression, 3, 1, 1 } );
            e.push_back( { Photometric, 3, 1, p.photometric } );
            e.push_back( { StripOffsets, 4, 1, data_at } );
            e.push_back( { SamplesPerPixel, 3, 1, p.samples } );
            e.push_back( { RowsPerStrip, 4, 1, p.height } );
            e.push_back( { StripByteCounts, 4, 1, static_cast<std::uint32_t>( p.data.size() ) } );
            e.push_back( { PlanarConfig, 3, 1, 1 } );
            if ( !p.name.empty() )
                e.push_back( { PageName, 2, static_cast<std::uint32_t>( name.size() ), 0 } );
            e.push_back( { SampleFormat, 3, p.samples, p.samples > 2 ? fmt_at : p.format } );

            put16( out, static_cast<std::uint16_t>( e.size() ) );
            for ( const auto &t: e )
            {
                put16( out, static_cast<std::uint16_t>( t[0] ) );
                put16( out, static_cast<std::uint16_t>( t[1] ) );
                put32( out, t[2] );
                if ( t[0] == PageName )
                {
                    if ( name.size() <= 4 )
                    {
                        std::string inl = name;
                        inl.resize( 4, '\0' );
                        out += inl;
                    }
                    else
                        put32( out, name_at );
                }
                else if ( t[1] == 3 && t[2] == 1 )
                {
                    put16( out, static_cast<std::uint16_t>( t[3] ) );
                    put16( out, 0 );
                }
                else if ( t[1] == 3 && t[2] == 2 )
                {
                    put16( out, static_cast<std::uint16_t>( t[3] ) );
                    put16( out, static_cast<std::uint16_t>( t[3] ) );
                }
                else
                    put32( out, t[3] );
            }
            link = out.size();
            put32( out, 0 );
        }
        return out;
    }

private:
    static void put16( std::string &s, std::uint16_t v )
    {
        s += static_cast<char>( v & 0xff );
        s += static_cast<char>( v >> 8 );
    }
    static void put32( std::string &s, std::uint32_t v )
    {
        for ( int k = 0; k < 4; ++k )
            s += static_cast<char>( ( v >> ( 8 * k ) ) & 0xff );
    }
    static void patch32( std::string &s, std::size_t at, std::uint32_t v )
    {
        for ( int k = 0; k < 4; ++k )
            s[at + static_cast<std::size_t>( k )] = static_cast<char>( ( v >> ( 8 * k ) ) & 0xff );
    }
    static void align( std::string &s )
    {
        if ( s.size() % 2 )
            s += '\0';
    }

    std::vector<Page> pages_;
};

class TiffReader
{
public:
    TiffReader( const fs::path &path ) : path_( path ), buf_( read_bytes( path ) )
    {
        if ( buf_.size() < 8 || buf_[0] != buf_[1] || ( buf_[0] != 'I' && buf_[0] != 'M' ) )
            parse_error( path_, "not a TIFF file" );
        big_ = buf_[0] == 'M';
        if ( u16( 2 ) != 42 )
            parse_error( path_, "unsupported TIFF variant" );
        std::size_t ifd = u32( 4 );
        while ( ifd != 0 )
        {
            if ( pages_.size() > 64 )
                parse_error( path_, "too many pages" );
            pages_.push_back( read_page( ifd ) );
            std::size_t n = u16( ifd );
            ifd           = u32( ifd + 2 + 12 * n );
        }
    }

    const std::vector<Page> &pages() const noexcept { return pages_; }

    // Sample k of a page as double.
    double sample( const Page &p, std::size_t k ) const
    {
        const char *d = p.data.data();
        if ( p.bits == 16 && p.format == 1 )
        {
            std::uint16_t v;
            std::memcpy( &v, d + 2 * k, 2 );
            return v;
        }
        if ( p.bits == 32 && p.format == 3 )
        {
            float v;
            std::memcpy( &v, d + 4 * k, 4 );
            return v;
        }
        if ( p.bits == 8 && p.format == 1 )
            return static_cast<unsigned char>( d[k] );
        parse_error( path_, "unsupported sample layout" );
    }

private:
    void need( std::size_t at, std::size_t n ) const
    {
        if ( at + n > buf_.size() || at + n < at )
            parse_error( path_, "truncated file" );
    }
    std::uint32_t raw( std::size_t at, int n ) const
    {
        need( at, static_cast<std::size_t>( n ) );
        std::uint32_t v = 0;
        for ( int k = 0; k < n; ++k )
        {
            auto b = static_cast<std::uint32_t>( static_cast<unsigned char>( buf_[at + static_cast<std::size_t>( k )] ) );
            v |= big_ ? b << ( 8 * ( n - 1 - k ) ) : b << ( 8 * k );
        }
        return v;
    }
    std::uint16_t u16( std::size_t at ) const { return static_cast<std::uint16_t>( raw( at, 2 ) ); }
    std::uint32_t u32( std::size_t at ) const { return raw( at, 4 ); }

    // Values of an IFD entry as integers.
    std::vector<std::uint32_t> values( std::size_t entry ) const
    {
        std::uint16_t type  = u16( entry + 2 );
        std::uint32_t count = u32( entry + 4 );
        int           size  = type == 3 ? 2 : type == 4 ? 4 : 1;
        if ( count > ( 1u << 24 ) )
            parse_error( path_, "implausible tag count" );
        std::size_t at = count * static_cast<std::uint32_t>( size ) <= 4 ? entry + 8 : u32( entry + 8 );
        std::vector<std::uint32_t> v( count );
        for ( std::uint32_t k = 0; k < count; ++k )
            v[k] = raw( at + k * static_cast<std::size_t>( size ), size );
        return v;
    }

    Page read_page( std::size_t ifd ) const
    {
        Page                       p;
        std::vector<std::uint32_t> offsets, counts;
        std::uint32_t              compression = 1, planar = 1;
        std::size_t                n = u16( ifd );
        for ( std::size_t k = 0; k < n; ++k )
        {
            std::size_t e   = ifd + 2 + 12 * k;
            auto        tag = u16( e );
            auto        v   = values( e );
            if ( v.empty() )
                continue;
            switch ( tag )
            {
            case ImageWidth: p.width = v[0]; break;
            case ImageLength: p.height = v[0]; break;
            case BitsPerSample: p.bits = static_cast<std::uint16_t>( v[0] ); break;
            case Compression: compression = v[0]; break;
            case Photometric: p.photometric = static_cast<std::uint16_t>( v[0] ); break;
            case StripOffsets: offsets = v; break;
            case SamplesPerPixel: p.samples = static_cast<std::uint16_t>( v[0] ); break;
            case StripByteCounts: counts = v; break;
            case PlanarConfig: planar = v[0]; break;
            case SampleFormat: p.format = static_cast<std::uint16_t>( v[0] ); break;
            case PageName:
                for ( auto c: v )
                    if ( c )
                        p.name += static_cast<char>( c );
                break;
            default: break;
            }
        }
        if ( compression != 1 )
            parse_error( path_, "compressed TIFF is not supported" );
        if ( planar != 1 && p.samples > 1 )
            parse_error( path_, "planar TIFF is not supported" );
        if ( p.samples == 0 )
            p.samples = 1;
        if ( offsets.size() != counts.size() || offsets.empty() )
            parse_error( path_, "missing strip layout" );
        for ( std::size_t s = 0; s < offsets.size(); ++s )
        {
            need( offsets[s], counts[s] );
            p.data.append( buf_, offsets[s], counts[s] );
        }
        std::size_t expect = static_cast<std::size_t>( p.width ) * p.height * p.samples * ( p.bits / 8 );
        if ( p.data.size() < expect )
            parse_error( path_, "pixel data shorter than the image" );
        if ( big_ && p.bits > 8 )
            for ( std::size_t k = 0; k + p.bits / 8 <= expect; k += p.bits / 8 )
                std::reverse( p.data.begin() + static_cast<std::ptrdiff_t>( k ),
                              p.data.begin() + static_cast<std::ptrdiff_t>( k + p.bits / 8 ) );
        return p;
    }

    fs::path          path_;
    std::string       buf_;
    bool              big_ = false;
    std::vector<Page> pages_;
};

void put_u16( std::string &s, std::uint16_t v )
{
    s += static_cast<char>( v & 0xff );
    s += static_cast<char>( v >> 8 );
}

void put_f32( std::string &s, float v )
{
    std::uint32_t u;
    std::memcpy( &u, &v, 4 );
    for ( int k = 0; k < 4; ++k )
        s += static_cast<char>( ( u >> ( 8 * k ) ) & 0xff );
}

std::uint16_t quantise16( double v )
{
    return static_cast<std::uint16_t>( std::lround( std::clamp( v, 0.0, 1.0 ) * 65535.0 ) );
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

json to_json( const synth::DegradationSpec &d )
{
    return { { "psf_sigma_center_px", d.psf_sigma_center_px },
             { "psf_sigma_corner_px", d.psf_sigma_corner_px },
             { "affine", { d.affine.a11, d.affine.a12, d.affine.a21, d.affine.a22, d.affine.tx, d.affine.ty } },
             { "displacement_px", d.displacement_px },
             { "displacement_nodes", d.displacement_nodes },
             { "noise_sigma", d.noise_sigma } };
}

synth::DegradationSpec degradation_from_json( const json &j )
{
    synth::DegradationSpec d;
    d.psf_sigma_center_px = j.value( "psf_sigma_center_px", 0.0 );
    d.psf_sigma_corner_px = j.value( "psf_sigma_corner_px", d.psf_sigma_center_px );
    if ( j.contains( "affine" ) )
    {
        auto a = j.at( "affine" ).get<std::vector<double>>();
        if ( a.size() != 6 )
            throw Error( ErrorCode::ParseError, "degradation: affine needs 6 numbers" );
        d.affine = { a[0], a[1], a[2], a[3], a[4], a[5] };
    }
    d.displacement_px    = j.value( "displacement_px", 0.0 );
    d.displacement_nodes = j.value( "displacement_nodes", 4 );
    d.noise_sigma        = j.value( "noise_sigma", 0.0 );
    return d;
}

json to_json( const reseau::ReseauGeometry &g )
{
    return { { "line_density", g.line_density },
             { "print_angle_deg", g.print_angle_deg },
             { "red_line_fraction", g.red_line_fraction },
             { "green_blue_ratio", g.green_blue_ratio },
             { "square_width_um", g.square_width_um },
             { "second_pass_deviation_deg", g.second_pass_deviation_deg } };
}

reseau::ReseauGeometry geometry_from_json( const json &j )
{
    reseau::ReseauGeometry g;
    g.line_density              = j.at( "line_density" ).get<double>();
    g.print_angle_deg           = j.at( "print_angle_deg" ).get<double>();
    g.red_line_fraction         = j.at( "red_line_fraction" ).get<double>();
    g.green_blue_ratio          = j.at( "green_blue_ratio" ).get<double>();
    g.square_width_um           = j.value( "square_width_um", 0.0 );
    g.second_pass_deviation_deg = j.value( "second_pass_deviation_deg", 0.0 );
    return g;
}

json load_json( const fs::path &p )
{
    try
    {
        return json::parse( read_bytes( p ) );
    }
    catch ( const json::exception &e )
    {
        parse_error( p, e.what() );
    }
}

} // namespace

// ---------------------------------------------------------------------------

void write_text( const fs::path &path, const std::string &text )
{
    std::ofstream out( path, std::ios::binary | std::ios::trunc );
    if ( !out )
        io_error( path, "cannot open for writing" );
    out.write( text.data(), static_cast<std::streamsize>( text.size() ) );
    if ( !out )
        io_error( path, "write failed" );
}

fs::path sidecar_path( const fs::path &image )
{
    fs::path p = image;
    return p.replace_extension( ".json" );
}

void write_scan( const fs::path &tiff, const synth::ScanImage &scan, const ScanMetadata &meta )
{
    scan.validate();
    TiffWriter  w;
    const char *names[4] = { "R", "G", "B", "IR" };
    for ( std::size_t c = 0; c < 4; ++c )
    {
        Page p;
        p.width   = static_cast<std::uint32_t>( scan.width() );
        p.height  = static_cast<std::uint32_t>( scan.height() );
        p.bits    = 16;
        p.samples = 1;
        p.name    = names[c];
        p.data.reserve( scan.planes[c].size() * 2 );
        for ( auto v: scan.planes[c].pixels )
            put_u16( p.data, v );
        w.add( std::move( p ) );
    }
    write_text( tiff, w.encode() );

    json j;
    j["width"]            = scan.width();
    j["height"]           = scan.height();
    j["pixels_per_um"]    = meta.pixels_per_um > 0.0 ? meta.pixels_per_um : scan.pixels_per_um;
    j["seed"]             = meta.seed;
    j["degradation"]      = to_json( meta.degradation );
    j["scanner_response"] = meta.scanner_response;
    j["pages"]            = { "R", "G", "B", "IR" };
    write_text( sidecar_path( tiff ), j.dump( 2 ) + "\n" );
}

ScanFile read_scan( const fs::path &tiff )
{
    TiffReader r( tiff );
    if ( r.pages().size() != 4 )
        parse_error( tiff, "expected 4 pages (R, G, B, IR), found " + std::to_string( r.pages().size() ) );
    ScanFile f;
    for ( std::size_t c = 0; c < 4; ++c )
    {
        const auto &p = r.pages()[c];
        if ( p.samples != 1 || p.bits != 16 )
            parse_error( tiff, "scan pages must be 16-bit single-channel" );
        Plane16 plane( static_cast<int>( p.width ), static_cast<int>( p.height ) );
        std::memcpy( plane.pixels.data(), p.data.data(), plane.size() * 2 );
        f.scan.planes[c] = std::move( plane );
    }
    f.scan.validate();

    auto side = sidecar_path( tiff );
    if ( fs::exists( side ) )
    {
        auto j = load_json( side );
        try
        {
            f.metadata.pixels_per_um = j.value( "pixels_per_um", 0.0 );
            f.metadata.seed          = j.value( "seed", std::uint64_t{ 0 } );
            if ( j.contains( "degradation" ) )
                f.metadata.degradation = degradation_from_json( j.at( "degradation" ) );
            if ( j.contains( "scanner_response" ) )
                f.metadata.scanner_response = j.at( "scanner_response" ).get<recon::Matrix3>();
        }
        catch ( const json::exception &e )
        {
            parse_error( side, e.what() );
        }
    }
    f.scan.pixels_per_um = f.metadata.pixels_per_um;
    return f;
}

void write_xyz_tiff( const fs::path &path, const XYZImage &img )
{
    Page p;
    p.width       = static_cast<std::uint32_t>( img.width );
    p.height      = static_cast<std::uint32_t>( img.height );
    p.bits        = 32;
    p.samples     = 3;
    p.format      = 3;
    p.photometric = 2;
    p.name        = "XYZ";
    p.data.reserve( img.size() * 12 );
    for ( const auto &v: img.pixels )
    {
        put_f32( p.data, static_cast<float>( v.X ) );
        put_f32( p.data, static_cast<float>( v.Y ) );
        put_f32( p.data, static_cast<float>( v.Z ) );
    }
    TiffWriter w;
    w.add( std::move( p ) );
    write_text( path, w.encode() );
}

XYZImage read_xyz_tiff( const fs::path &path )
{
    TiffReader r( path );
    if ( r.pages().empty() )
        parse_error( path, "no image" );
    const auto &p = r.pages()[0];
    if ( p.samples != 3 || p.bits != 32 || p.format != 3 )
        parse_error( path, "expected a 3-sample float32 image" );
    XYZImage img( static_cast<int>( p.width ), static_cast<int>( p.height ) );
    for ( std::size_t k = 0; k < img.size(); ++k )
        img.pixels[k] = { r.sample( p, 3 * k ), r.sample( p, 3 * k + 1 ), r.sample( p, 3 * k + 2 ) };
    return img;
}

void write_rgb16( const fs::path &path, const RGBImage &img )
{
    auto ext = path.extension().string();
    std::transform( ext.begin(), ext.end(), ext.begin(), []( unsigned char c ) { return static_cast<char>( std::tolower( c ) ); } );
    if ( ext == ".png" )
    {
        std::unique_ptr<FILE, int ( * )( FILE * )> fp( std::fopen( path.string().c_str(), "wb" ), std::fclose );
        if ( !fp )
            io_error( path, "cannot open for writing" );
        png_structp png = png_create_write_struct( PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr );
        png_infop   info = png ? png_create_info_struct( png ) : nullptr;
        if ( !info )
        {
            png_destroy_write_struct( &png, nullptr );
            io_error( path, "libpng initialisation failed" );
        }
        std::vector<png_byte> row( static_cast<std::size_t>( img.width ) * 6 );
        if ( setjmp( png_jmpbuf( png ) ) )
        {
            png_destroy_write_struct( &png, &info );
            io_error( path, "PNG encoding failed" );
        }
        png_init_io( png, fp.get() );
        png_set_IHDR( png, info, static_cast<png_uint_32>( img.width ), static_cast<png_uint_32>( img.height ), 16,
                      PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT );
        png_write_info( png, info );
        for ( int y = 0; y < img.height; ++y )
        {
            for ( int x = 0; x < img.width; ++x )
            {
                const auto   &c = img.at( x, y );
                std::uint16_t v[3] = { quantise16( c.r ), quantise16( c.g ), quantise16( c.b ) };
                for ( std::size_t s = 0; s < 3; ++s )
                {
                    row[static_cast<std::size_t>( x ) * 6 + 2 * s]     = static_cast<png_byte>( v[s] >> 8 );
                    row[static_cast<std::size_t>( x ) * 6 + 2 * s + 1] = static_cast<png_byte>( v[s] & 0xff );
                }
            }
            png_write_row( png, row.data() );
        }
        png_write_end( png, nullptr );
        png_destroy_write_struct( &png, &info );
        return;
    }

    Page p;
    p.width       = static_cast<std::uint32_t>( img.width );
    p.height      = static_cast<std::uint32_t>( img.height );
    p.bits        = 16;
    p.samples     = 3;
    p.photometric = 2;
    p.data.reserve( img.size() * 6 );
    for ( const auto &c: img.pixels )
    {
        put_u16( p.data, quantise16( c.r ) );
        put_u16( p.data, quantise16( c.g ) );
        put_u16( p.data, quantise16( c.b ) );
    }
    TiffWriter w;
    w.add( std::move( p ) );
    write_text( path, w.encode() );
}

void write_png( const fs::path &path, const Image8 &img )
{
    png_image pi;
    std::memset( &pi, 0, sizeof pi );
    pi.version = PNG_IMAGE_VERSION;
    pi.width   = static_cast<png_uint_32>( img.width );
    pi.height  = static_cast<png_uint_32>( img.height );
    pi.format  = PNG_FORMAT_RGB;
    static_assert( sizeof( Rgb8 ) == 3 );
    if ( !png_image_write_to_file( &pi, path.string().c_str(), 0, img.pixels.data(), 0, nullptr ) )
        io_error( path, std::string( "PNG write failed: " ) + pi.message );
}

Image8 read_png( const fs::path &path )
{
    png_image pi;
    std::memset( &pi, 0, sizeof pi );
    pi.version = PNG_IMAGE_VERSION;
    if ( !png_image_begin_read_from_file( &pi, path.string().c_str() ) )
        io_error( path, std::string( "PNG read failed: " ) + pi.message );
    pi.format = PNG_FORMAT_RGB;
    Image8 img( static_cast<int>( pi.width ), static_cast<int>( pi.height ) );
    if ( !png_image_finish_read( &pi, nullptr, img.pixels.data(), 0, nullptr ) )
    {
        png_image_free( &pi );
        io_error( path, std::string( "PNG decode failed: " ) + pi.message );
    }
    return img;
}

void write_ground_truth( const fs::path &path, const synth::GroundTruth &gt )
{
    const auto &f   = gt.intensities;
    fs::path    bin = path;
    bin.replace_extension( ".bin" );

    std::string data;
    for ( std::size_t k = 0; k < 3; ++k )
    {
        for ( double v: f.values[k] )
            put_f32( data, static_cast<float>( v ) );
        data.append( f.valid[k].begin(), f.valid[k].end() );
    }
    write_text( bin, data );

    json j;
    j["geometry"]           = to_json( gt.geometry );
    j["film_pixels_per_um"] = gt.film_pixels_per_um;
    j["film_width"]         = gt.film_width;
    j["film_height"]        = gt.film_height;
    j["block"]              = { { "i0", f.i0 }, { "j0", f.j0 }, { "cols", f.cols }, { "rows", f.rows } };
    j["data"]               = bin.filename().string();
    j["layout"]             = "per plane R, G, B: float32 values then uint8 valid flags, row-major";
    write_text( path, j.dump( 2 ) + "\n" );
}

synth::GroundTruth read_ground_truth( const fs::path &path )
{
    auto               j = load_json( path );
    synth::GroundTruth gt;
    std::string        bin_name;
    try
    {
        gt.geometry           = geometry_from_json( j.at( "geometry" ) );
        gt.film_pixels_per_um = j.at( "film_pixels_per_um" ).get<double>();
        gt.film_width         = j.at( "film_width" ).get<int>();
        gt.film_height        = j.at( "film_height" ).get<int>();
        const auto &b         = j.at( "block" );
        gt.intensities        = reseau::ElementField(
            b.at( "i0" ).get<int>(), b.at( "j0" ).get<int>(), b.at( "cols" ).get<int>(), b.at( "rows" ).get<int>() );
        bin_name = j.at( "data" ).get<std::string>();
    }
    catch ( const json::exception &e )
    {
        parse_error( path, e.what() );
    }
    auto        bin  = path.parent_path() / bin_name;
    auto        data = read_bytes( bin );
    const auto  n    = gt.intensities.values[0].size();
    if ( data.size() != 3 * n * 5 )
        parse_error( bin, "size does not match the element block" );
    std::size_t at = 0;
    for ( std::size_t k = 0; k < 3; ++k )
    {
        for ( std::size_t o = 0; o < n; ++o, at += 4 )
        {
            float v;
            std::memcpy( &v, data.data() + at, 4 );
            gt.intensities.values[k][o] = v;
        }
        for ( std::size_t o = 0; o < n; ++o, ++at )
            gt.intensities.valid[k][o] = static_cast<std::uint8_t>( data[at] != 0 );
    }
    return gt;
}

std::string report_to_json( const recon::RunReport &r )
{
    json j;
    j["ok"] = r.ok;
    if ( !r.ok )
        j["error"] = { { "stage", r.failed_stage }, { "code", r.error_code }, { "message", r.error_message } };
    j["registration"] = { { "mean_residual_px", r.mean_residual_px },
                          { "max_residual_px", r.max_residual_px },
                          { "period_u_px", r.period_u_px },
                          { "period_v_px", r.period_v_px },
                          { "angle_deg", r.angle_deg },
                          { "affine", r.affine },
                          { "offset", r.offset } };
    j["dot_spread"]   = { { "regions_x", r.sigma_regions_x },
                          { "regions_y", r.sigma_regions_y },
                          { "sigma_px", r.sigma_map },
                          { "confident", r.sigma_confident } };
    j["elements"]     = { { "total", r.elements_total },
                          { "missing", r.elements_missing },
                          { "infilled", r.elements_infilled } };
    j["saturation"]   = { { "clamp_fraction", r.clamp_fraction }, { "fallback_regions", r.fallback_regions } };
    json t            = json::array();
    for ( const auto &[name, ms]: r.timings_ms )
        t.push_back( { { "stage", name }, { "ms", ms } } );
    j["timings"] = t;
    return j.dump( 2 ) + "\n";
}

void write_report( const fs::path &path, const recon::RunReport &report )
{
    write_text( path, report_to_json( report ) );
}

} // namespace dufay::io
