// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <string>
#include <vector>

#include <dufay/image.hpp>

namespace dufay::metrics
{

struct DeltaEReport
{
    double      avg           = 0.0;
    double      max           = 0.0;
    double      trim_fraction = 0.01;
    std::size_t pixel_count   = 0; ///< pixels kept after trimming
};

/// Per-pixel CIEDE2000 in the Lab space of `whitepoint`.
/// Throws DimensionMismatch for differing sizes.
Plane delta_e_map( const XYZImage &a, const XYZImage &b, const color::XYZ &whitepoint );

/// Drops the ceil(trim * N) largest values (at most N - 1) and reports mean
/// and max of the rest. Throws EmptyInput for no
/// values and InvalidArgument unless 0 <= trim < 0.5.
DeltaEReport trimmed_stats( const std::vector<double> &values, double trim_fraction = 0.01 );
DeltaEReport trimmed_stats( const Plane &map, double trim_fraction = 0.01 );

struct LabeledImage
{
    std::string label;
    XYZImage    image;
};

/// Lower-triangular grid: entry(i, j) for j < i.
struct PairwiseMatrix
{
    std::vector<std::string>               labels;
    std::vector<std::vector<DeltaEReport>> rows; ///< rows[i] has i entries

    [[nodiscard]] const DeltaEReport &entry( std::size_t i, std::size_t j ) const
    {
        return i > j ? rows[i][j] : rows[j][i];
    }

    /// `label_a,label_b,avg_de,max_de,trim,pixels`, one line per pair.
    [[nodiscard]] std::string to_csv() const;

    /// Row label per image from the second on, Avg and Max columns per
    /// earlier image.
    [[nodiscard]] std::string to_text() const;
};

/// Throws InvalidArgument for fewer than two images.
PairwiseMatrix pairwise_matrix(
    const std::vector<LabeledImage> &images, const color::XYZ &whitepoint, double trim_fraction = 0.01 );

} // namespace dufay::metrics
