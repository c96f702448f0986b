// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/error.hpp>
#include <dufay/metrics.hpp>
#include <dufay/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace dufay::metrics
{

Plane delta_e_map( const XYZImage &a, const XYZImage &b, const color::XYZ &whitepoint )
{
    if ( !a.same_shape( b ) )
        throw Error(
            ErrorCode::DimensionMismatch, "delta_e_map: " + std::to_string( a.width ) + "x" + std::to_string( a.height ) +
                                              " vs " + std::to_string( b.width ) + "x" + std::to_string( b.height ) );
    Plane out( a.width, a.height );
    parallel_for( a.height, [&]( int y0, int y1 ) {
        for ( int y = y0; y < y1; ++y )
            for ( int x = 0; x < a.width; ++x )
                out.at( x, y ) = color::delta_e_2000(
                    color::XYZ_to_Lab( a.at( x, y ), whitepoint ), color::XYZ_to_Lab( b.at( x, y ), whitepoint ) );
    } );
    return out;
}

DeltaEReport trimmed_stats( const std::vector<double> &values, double trim_fraction )
{
    if ( values.empty() )
        throw Error( ErrorCode::EmptyInput, "trimmed_stats: no values" );
    if ( !( trim_fraction >= 0.0 && trim_fraction < 0.5 ) )
        throw Error( ErrorCode::InvalidArgument, "trimmed_stats: trim fraction must be in [0, 0.5)" );

    const std::size_t n = values.size();
    // The epsilon keeps e.g. 0.07 * 100 from rounding up to 8 exclusions.
    auto drop = static_cast<std::size_t>( std::ceil( trim_fraction * static_cast<double>( n ) - 1e-9 ) );
    drop      = std::min( drop, n - 1 );
    const std::size_t keep = n - drop;

    // Ties are interchangeable, so sorting values (not indices) gives the
    // same kept set; ascending summation keeps the mean reproducible.
    std::vector<double> kept( values );
    if ( keep < n )
        std::nth_element( kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>( keep ), kept.end() );
    kept.resize( keep );
    std::sort( kept.begin(), kept.end() );

    DeltaEReport r;
    r.trim_fraction = trim_fraction;
    r.pixel_count   = keep;
    double sum      = 0.0;
    for ( double v: kept )
        sum += v;
    r.avg = sum / static_cast<double>( keep );
    r.max = kept.back();
    return r;
}

DeltaEReport trimmed_stats( const Plane &map, double trim_fraction )
{
    return trimmed_stats( map.pixels, trim_fraction );
}

PairwiseMatrix pairwise_matrix( const std::vector<LabeledImage> &images, const color::XYZ &whitepoint, double trim_fraction )
{
    if ( images.size() < 2 )
        throw Error( ErrorCode::InvalidArgument, "pairwise_matrix: need at least two images" );
    PairwiseMatrix m;
    for ( const auto &im: images )
        m.labels.push_back( im.label );
    m.rows.resize( images.size() );
    for ( std::size_t i = 1; i < images.size(); ++i )
        for ( std::size_t j = 0; j < i; ++j )
            m.rows[i].push_back(
                trimmed_stats( delta_e_map( images[i].image, images[j].image, whitepoint ), trim_fraction ) );
    return m;
}

std::string PairwiseMatrix::to_csv() const
{
    std::ostringstream out;
    out << "label_a,label_b,avg_de,max_de,trim,pixels\n";
    char buf[128];
    for ( std::size_t i = 1; i < rows.size(); ++i )
        for ( std::size_t j = 0; j < i; ++j )
        {
            const auto &e = rows[i][j];
            std::snprintf( buf, sizeof buf, "%.6f,%.6f,%.4f,%zu", e.avg, e.max, e.trim_fraction, e.pixel_count );
            out << labels[i] << ',' << labels[j] << ',' << buf << '\n';
        }
    return out.str();
}

std::string PairwiseMatrix::to_text() const
{
    std::size_t lw = 4;
    for ( const auto &l: labels )
        lw = std::max( lw, l.size() );
    const int cell = 7;

    std::ostringstream out;
    char               buf[64];
    auto               pad = [&]( const std::string &s, std::size_t w ) {
        out << s << std::string( w > s.size() ? w - s.size() : 0, ' ' );
    };
    pad( "", lw + 2 );
    for ( std::size_t j = 0; j + 1 < labels.size(); ++j )
        pad( labels[j], 2 * cell + 2 );
    out << '\n';
    pad( "", lw + 2 );
    for ( std::size_t j = 0; j + 1 < labels.size(); ++j )
    {
        std::snprintf( buf, sizeof buf, "%*s %*s  ", cell, "Avg", cell, "Max" );
        out << buf;
    }
    out << '\n';
    for ( std::size_t i = 1; i < labels.size(); ++i )
    {
        pad( labels[i], lw + 2 );
        for ( std::size_t j = 0; j < i; ++j )
        {
            std::snprintf( buf, sizeof buf, "%*.2f %*.2f  ", cell, rows[i][j].avg, cell, rows[i][j].max );
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

} // namespace dufay::metrics
