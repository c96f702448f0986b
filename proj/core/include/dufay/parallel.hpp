// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#pragma once

#include <functional>

namespace dufay
{

/// Upper bound on worker threads used by the library (0 = hardware).
void set_max_threads( unsigned n ) noexcept;
unsigned max_threads() noexcept;

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunks are
/// disjoint; results must not depend on how the range is split.
void parallel_for( int count, const std::function<void( int, int )> &body );

} // namespace dufay
