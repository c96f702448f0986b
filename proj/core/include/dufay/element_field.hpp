// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <dufay/reseau.hpp>

namespace dufay::reseau
{

/// One value per réseau element over the cell block
/// [i0, i0 + cols) x [j0, j0 + rows). Elements without data are flagged
/// invalid rather than given a sentinel value.
struct ElementField
{
    int i0   = 0;
    int j0   = 0;
    int cols = 0;
    int rows = 0;

    std::array<std::vector<double>, 3>       values;
    std::array<std::vector<std::uint8_t>, 3> valid;

    ElementField() = default;
    ElementField( int first_i, int first_j, int ncols, int nrows )
        : i0( first_i ), j0( first_j ), cols( ncols ), rows( nrows )
    {
        std::size_t n = static_cast<std::size_t>( ncols ) * static_cast<std::size_t>( nrows );
        for ( auto &v: values )
            v.assign( n, 0.0 );
        for ( auto &v: valid )
            v.assign( n, 0 );
    }

    [[nodiscard]] bool contains( int i, int j ) const noexcept
    {
        return i >= i0 && j >= j0 && i < i0 + cols && j < j0 + rows;
    }

    [[nodiscard]] std::size_t offset( int i, int j ) const noexcept
    {
        return static_cast<std::size_t>( j - j0 ) * static_cast<std::size_t>( cols ) +
               static_cast<std::size_t>( i - i0 );
    }

    [[nodiscard]] double value( Element e, int i, int j ) const noexcept
    {
        return values[static_cast<std::size_t>( index( e ) )][offset( i, j )];
    }

    [[nodiscard]] bool is_valid( Element e, int i, int j ) const noexcept
    {
        return contains( i, j ) && valid[static_cast<std::size_t>( index( e ) )][offset( i, j )] != 0;
    }

    void set( Element e, int i, int j, double v ) noexcept
    {
        auto k = static_cast<std::size_t>( index( e ) );
        auto o = offset( i, j );
        values[k][o] = v;
        valid[k][o]  = 1;
    }

    [[nodiscard]] std::size_t element_count() const noexcept { return 3 * values[0].size(); }

    [[nodiscard]] std::size_t valid_count() const noexcept
    {
        std::size_t n = 0;
        for ( const auto &v: valid )
            for ( auto f: v )
                n += f;
        return n;
    }
};

} // namespace dufay::reseau
