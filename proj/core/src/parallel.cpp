// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include <dufay/parallel.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dufay
{

namespace
{
std::atomic<unsigned> g_max_threads{ 0 };
}

void set_max_threads( unsigned n ) noexcept
{
    g_max_threads.store( n );
}

unsigned max_threads() noexcept
{
    unsigned n = g_max_threads.load();
    if ( n == 0 )
        n = std::max( 1u, std::thread::hardware_concurrency() );
    return n;
}

void parallel_for( int count, const std::function<void( int, int )> &body )
{
    if ( count <= 0 )
        return;
    int workers = static_cast<int>( std::min<unsigned>( max_threads(), static_cast<unsigned>( count ) ) );
    if ( workers <= 1 )
    {
        body( 0, count );
        return;
    }

    std::exception_ptr       error;
    std::mutex               error_mutex;
    std::vector<std::thread> pool;
    pool.reserve( static_cast<std::size_t>( workers ) );
    for ( int w = 0; w < workers; ++w )
    {
        int begin = static_cast<int>( static_cast<long long>( count ) * w / workers );
        int end   = static_cast<int>( static_cast<long long>( count ) * ( w + 1 ) / workers );
        pool.emplace_back( [&, begin, end] {
            try
            {
                body( begin, end );
            }
            catch ( ... )
            {
                std::lock_guard lock( error_mutex );
                if ( !error )
                    error = std::current_exception();
            }
        } );
    }
    for ( auto &t: pool )
        t.join();
    if ( error )
        std::rethrow_exception( error );
}

} // namespace dufay
