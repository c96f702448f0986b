// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the dufay Project.

#include "recon_detail.hpp"

#include <dufay/error.hpp>
#include <dufay/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <queue>
#include <sstream>

#include <Eigen/Dense>
#include <fftw3.h>
#include <spdlog/spdlog.h>

namespace dufay::recon
{

using reseau::Element;
using reseau::GridPoint;
using cplx = std::complex<double>;

namespace detail
{

bool invert( const Matrix3 &m, Matrix3 &out ) noexcept
{
    const double a = m[0][0], b = m[0][1], c = m[0][2];
    const double d = m[1][0], e = m[1][1], f = m[1][2];
    const double g = m[2][0], h = m[2][1], i = m[2][2];
    const double A = e * i - f * h, B = -( d * i - f * g ), C = d * h - e * g;
    const double det = a * A + b * B + c * C;
    double       scale = 0.0;
    for ( const auto &row: m )
        for ( double v: row )
            scale = std::max( scale, std::abs( v ) );
    if ( scale == 0.0 || std::abs( det ) < 1e-12 * scale * scale * scale )
        return false;
    const double r = 1.0 / det;
    out            = { { { A * r, -( b * i - c * h ) * r, ( b * f - c * e ) * r },
                         { B * r, ( a * i - c * g ) * r, -( a * f - c * d ) * r },
                         { C * r, -( a * h - b * g ) * r, ( a * e - b * d ) * r } } };
    return true;
}

double condition_number( const Matrix3 &m )
{
    Eigen::Matrix3d em;
    for ( int r = 0; r < 3; ++r )
        for ( int c = 0; c < 3; ++c )
            em( r, c ) = m[static_cast<std::size_t>( r )][static_cast<std::size_t>( c )];
    Eigen::JacobiSVD<Eigen::Matrix3d> svd( em );
    auto                              s = svd.singularValues();
    return s[2] > 0.0 ? s[0] / s[2] : std::numeric_limits<double>::infinity();
}

std::array<Plane, 3> label_planes( const synth::ScanImage &scan, const Matrix3 &response )
{
    scan.validate();
    Matrix3 inv;
    if ( !invert( response, inv ) )
    {
        spdlog::warn( "scanner response is singular; treating channels as elements" );
        inv = kIdentity3;
    }
    const int            w = scan.width(), h = scan.height();
    std::array<Plane, 3> out{ Plane( w, h ), Plane( w, h ), Plane( w, h ) };
    const double         s = 1.0 / 65535.0;
    for ( std::size_t k = 0; k < static_cast<std::size_t>( w ) * static_cast<std::size_t>( h ); ++k )
    {
        double c[3] = { scan.planes[0].pixels[k] * s, scan.planes[1].pixels[k] * s, scan.planes[2].pixels[k] * s };
        for ( std::size_t e = 0; e < 3; ++e )
            out[e].pixels[k] = inv[e][0] * c[0] + inv[e][1] * c[1] + inv[e][2] * c[2];
    }
    return out;
}

Plane gaussian_blur( const Plane &in, double sigma )
{
    if ( sigma < 1e-3 )
        return in;
    const int           w = in.width, h = in.height;
    const int           r = static_cast<int>( std::ceil( 3.5 * sigma ) );
    std::vector<double> k( static_cast<std::size_t>( 2 * r + 1 ) );
    double              norm = 0.0;
    for ( int t = -r; t <= r; ++t )
        norm += k[static_cast<std::size_t>( t + r )] = std::exp( -0.5 * t * t / ( sigma * sigma ) );
    for ( auto &v: k )
        v /= norm;

    Plane tmp( w, h ), out( w, h );
    for ( int y = 0; y < h; ++y )
        for ( int x = 0; x < w; ++x )
        {
            double acc = 0.0;
            for ( int t = -r; t <= r; ++t )
                acc += k[static_cast<std::size_t>( t + r )] * in.at( std::clamp( x + t, 0, w - 1 ), y );
            tmp.at( x, y ) = acc;
        }
    for ( int y = 0; y < h; ++y )
        for ( int x = 0; x < w; ++x )
        {
            double acc = 0.0;
            for ( int t = -r; t <= r; ++t )
                acc += k[static_cast<std::size_t>( t + r )] * tmp.at( x, std::clamp( y + t, 0, h - 1 ) );
            out.at( x, y ) = acc;
        }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// GridModel
// ---------------------------------------------------------------------------

GridPoint GridModel::affine_to_grid( double x, double y ) const noexcept
{
    return { linear[0] * x + linear[1] * y + offset[0], linear[2] * x + linear[3] * y + offset[1] };
}

GridPoint GridModel::to_grid( double x, double y ) const noexcept
{
    GridPoint g = affine_to_grid( x, y );
    if ( mesh.empty() )
        return g;
    double sx = std::clamp( x / mesh_step_x, 0.0, mesh_nx - 1.0 );
    double sy = std::clamp( y / mesh_step_y, 0.0, mesh_ny - 1.0 );
    int    ix = std::min( static_cast<int>( sx ), mesh_nx - 2 );
    int    iy = std::min( static_cast<int>( sy ), mesh_ny - 2 );
    auto   wx = detail::catmull_rom( sx - ix );
    auto   wy = detail::catmull_rom( sy - iy );
    for ( int m = 0; m < 4; ++m )
    {
        int jj = std::clamp( iy - 1 + m, 0, mesh_ny - 1 );
        for ( int n = 0; n < 4; ++n )
        {
            int         ii = std::clamp( ix - 1 + n, 0, mesh_nx - 1 );
            double      w  = wx[static_cast<std::size_t>( n )] * wy[static_cast<std::size_t>( m )];
            const auto &r  = mesh[static_cast<std::size_t>( jj * mesh_nx + ii )];
            g.u += w * r.u;
            g.v += w * r.v;
        }
    }
    return g;
}

void GridModel::to_pixel( const GridPoint &g, double &x, double &y ) const noexcept
{
    const double det = linear[0] * linear[3] - linear[1] * linear[2];
    const double i00 = linear[3] / det, i01 = -linear[1] / det;
    const double i10 = -linear[2] / det, i11 = linear[0] / det;
    double       tu = g.u - offset[0], tv = g.v - offset[1];
    x = i00 * tu + i01 * tv;
    y = i10 * tu + i11 * tv;
    for ( int it = 0; it < 8 && !mesh.empty(); ++it )
    {
        GridPoint a = affine_to_grid( x, y ), f = to_grid( x, y );
        double    ru = f.u - a.u, rv = f.v - a.v;
        tu = g.u - offset[0] - ru;
        tv = g.v - offset[1] - rv;
        x  = i00 * tu + i01 * tv;
        y  = i10 * tu + i11 * tv;
    }
}

double GridModel::period_u_px() const noexcept
{
    return 1.0 / std::hypot( linear[0], linear[1] );
}

double GridModel::period_v_px() const noexcept
{
    return 1.0 / std::hypot( linear[2], linear[3] );
}

double GridModel::angle_deg() const noexcept
{
    // Direction of increasing u at constant v: first column of B^-1.
    const double det = linear[0] * linear[3] - linear[1] * linear[2];
    return std::atan2( -linear[2] / det, linear[3] / det ) * 180.0 / std::numbers::pi;
}

double GridModel::jacobian( double x, double y ) const noexcept
{
    const double h  = 0.5;
    GridPoint    px = to_grid( x + h, y ), mx = to_grid( x - h, y );
    GridPoint    py = to_grid( x, y + h ), my = to_grid( x, y - h );
    double       ux = ( px.u - mx.u ) / ( 2 * h ), vx = ( px.v - mx.v ) / ( 2 * h );
    double       uy = ( py.u - my.u ) / ( 2 * h ), vy = ( py.v - my.v ) / ( 2 * h );
    return ux * vy - uy * vx;
}

bool GridModel::is_invertible() const noexcept
{
    const double det = linear[0] * linear[3] - linear[1] * linear[2];
    if ( !( std::abs( det ) > 0.0 ) || !std::isfinite( det ) )
        return false;
    if ( mesh.empty() )
        return true;
    for ( int j = 0; j <= 2 * ( mesh_ny - 1 ); ++j )
        for ( int i = 0; i <= 2 * ( mesh_nx - 1 ); ++i )
        {
            double x = std::min( 0.5 * i * mesh_step_x, width - 0.5 );
            double y = std::min( 0.5 * j * mesh_step_y, height - 0.5 );
            if ( !( jacobian( x, y ) * det > 0.0 ) )
                return false;
        }
    return true;
}

GridModel GridModel::from_layout( const reseau::ReseauGeometry &g, double pixels_per_um, int width, int height )
{
    reseau::ScreenLayout layout( g );
    GridModel            m;
    m.geometry = g;
    m.width    = width;
    m.height   = height;
    auto o     = layout.film_to_grid( 0.0, 0.0 );
    auto ex    = layout.film_to_grid( 1.0 / pixels_per_um, 0.0 );
    auto ey    = layout.film_to_grid( 0.0, 1.0 / pixels_per_um );
    m.linear   = { ex.u - o.u, ey.u - o.u, ex.v - o.v, ey.v - o.v };
    m.offset   = { o.u, o.v };
    return m;
}

// ---------------------------------------------------------------------------
// Registration
// ---------------------------------------------------------------------------

namespace
{

struct Peak
{
    double kx    = 0.0; ///< cycles per pixel
    double ky    = 0.0;
    double ratio = 0.0;
};

class Spectrum
{
public:
    Spectrum( const Plane &p, int x0, int y0, int n ) : n_( n ), half_( n / 2 + 1 )
    {
        double *in  = fftw_alloc_real( static_cast<std::size_t>( n ) * static_cast<std::size_t>( n ) );
        auto   *out = fftw_alloc_complex( static_cast<std::size_t>( n ) * static_cast<std::size_t>( half_ ) );
        double  mean = 0.0;
        for ( int y = 0; y < n; ++y )
            for ( int x = 0; x < n; ++x )
                mean += p.at( x0 + x, y0 + y );
        mean /= static_cast<double>( n ) * n;
        std::vector<double> hann( static_cast<std::size_t>( n ) );
        for ( int i = 0; i < n; ++i )
            hann[static_cast<std::size_t>( i )] = 0.5 - 0.5 * std::cos( 2.0 * std::numbers::pi * ( i + 0.5 ) / n );
        for ( int y = 0; y < n; ++y )
            for ( int x = 0; x < n; ++x )
                in[y * n + x] = ( p.at( x0 + x, y0 + y ) - mean ) * hann[static_cast<std::size_t>( x )] *
                                hann[static_cast<std::size_t>( y )];
        fftw_plan plan = fftw_plan_dft_r2c_2d( n, n, in, out, FFTW_ESTIMATE );
        fftw_execute( plan );
        power_.resize( static_cast<std::size_t>( n ) * static_cast<std::size_t>( half_ ) );
        for ( std::size_t k = 0; k < power_.size(); ++k )
            power_[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
        fftw_destroy_plan( plan );
        fftw_free( in );
        fftw_free( out );
    }

    // Power at integer frequency (fx, fy), any sign.
    [[nodiscard]] double power( int fx, int fy ) const noexcept
    {
        if ( fx < 0 )
        {
            fx = -fx;
            fy = -fy;
        }
        fy = ( ( fy % n_ ) + n_ ) % n_;
        return power_[static_cast<std::size_t>( fy ) * static_cast<std::size_t>( half_ ) + static_cast<std::size_t>( fx )];
    }

    Peak find( double kmin, double kmax, const std::function<bool( double, double )> &accept ) const
    {
        std::vector<double> ring;
        double              best = -1.0;
        int                 bx = 0, by = 0;
        const int           lim = static_cast<int>( std::ceil( kmax * n_ ) ) + 1;
        for ( int fy = -lim; fy <= lim; ++fy )
            for ( int fx = 0; fx <= std::min( lim, n_ / 2 ); ++fx )
            {
                if ( fx == 0 && fy <= 0 )
                    continue;
                double kx = static_cast<double>( fx ) / n_, ky = static_cast<double>( fy ) / n_;
                double k  = std::hypot( kx, ky );
                if ( k < kmin || k > kmax || !accept( kx, ky ) )
                    continue;
                double p = power( fx, fy );
                ring.push_back( p );
                if ( p > best )
                {
                    best = p;
                    bx   = fx;
                    by   = fy;
                }
            }
        Peak peak;
        if ( ring.size() < 8 || best <= 0.0 )
            return peak;
        auto mid = ring.begin() + static_cast<std::ptrdiff_t>( ring.size() / 2 );
        std::nth_element( ring.begin(), mid, ring.end() );
        peak.ratio = *mid > 0.0 ? best / *mid : std::numeric_limits<double>::infinity();

        auto refine = [&]( double lm, double l0, double lp ) {
            double den = lm - 2.0 * l0 + lp;
            return den < 0.0 ? std::clamp( 0.5 * ( lm - lp ) / den, -0.5, 0.5 ) : 0.0;
        };
        auto lg = [&]( int fx, int fy ) { return std::log( std::max( power( fx, fy ), 1e-300 ) ); };
        double l0 = lg( bx, by );
        peak.kx   = ( bx + refine( lg( bx - 1, by ), l0, lg( bx + 1, by ) ) ) / n_;
        peak.ky   = ( by + refine( lg( bx, by - 1 ), l0, lg( bx, by + 1 ) ) ) / n_;
        return peak;
    }

private:
    int                 n_;
    int                 half_;
    std::vector<double> power_;
};

struct NodeSample
{
    double x = 0.0, y = 0.0;
    double psi[2]{};    ///< unwrapped phase residual (cycles) for u, v
    double weight[2]{}; ///< demodulation amplitude
    bool   reached[2]{};
};

// Weighted least-squares plane a*x + b*y + c.
std::array<double, 3> fit_plane( const std::vector<NodeSample> &nodes, int axis, const std::vector<double> &value )
{
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for ( std::size_t n = 0; n < nodes.size(); ++n )
    {
        const auto &s = nodes[n];
        double      w = s.reached[axis] ? s.weight[axis] : 0.0;
        if ( w <= 0.0 )
            continue;
        Eigen::Vector3d row( s.x, s.y, 1.0 );
        ata += w * row * row.transpose();
        atb += w * value[n] * row;
    }
    Eigen::Vector3d sol = ata.ldlt().solve( atb );
    return { sol[0], sol[1], sol[2] };
}

} // namespace

GridModel register_grid(
    const synth::ScanImage &scan, const reseau::ReseauGeometry &geometry, const RegistrationOptions &options )
{
    geometry.validate();
    scan.validate();
    const int w = scan.width(), h = scan.height();

    double period = options.expected_period_px;
    if ( period <= 0.0 && scan.pixels_per_um > 0.0 )
        period = geometry.pitch_um() * scan.pixels_per_um;
    if ( period > 0.0 && geometry.smallest_element_um() / geometry.pitch_um() * period < 2.0 )
        throw Error(
            ErrorCode::ResolutionTooCoarse, "register_grid: elements span fewer than 2 pixels at this resolution" );

    const int n = [&] {
        int s = 1;
        while ( s * 2 <= std::min( { w, h, 1024 } ) )
            s *= 2;
        return s;
    }();
    if ( n < 32 )
        throw Error( ErrorCode::RegistrationFailed, "register_grid: scan too small for frequency analysis" );

    auto labels = detail::label_planes( scan, options.scanner_response );
    Plane gb( w, h );
    for ( std::size_t k = 0; k < gb.size(); ++k )
        gb.pixels[k] = labels[1].pixels[k] - labels[2].pixels[k];

    const int x0 = ( w - n ) / 2, y0 = ( h - n ) / 2;
    double    kmin = 4.0 / n, kmax = 0.25;
    if ( period > 0.0 )
    {
        kmin = 0.75 / period;
        kmax = std::min( 0.5, 1.33 / period );
    }

    Spectrum sr( labels[0], x0, y0, n );
    Peak     pv = sr.find( kmin, kmax, []( double, double ) { return true; } );
    Spectrum sg( gb, x0, y0, n );
    Peak     pu = sg.find( kmin, kmax, [&]( double kx, double ky ) {
        double c = ( kx * pv.kx + ky * pv.ky ) / ( std::hypot( kx, ky ) * std::hypot( pv.kx, pv.ky ) + 1e-300 );
        return std::abs( c ) < 0.7;
    } );
    if ( pv.ratio < options.min_peak_ratio || pu.ratio < options.min_peak_ratio )
    {
        std::ostringstream msg;
        msg << "register_grid: no periodic réseau pattern (peak/median power " << pv.ratio << " along v, "
            << pu.ratio << " along u; need " << options.min_peak_ratio << ")";
        throw Error( ErrorCode::RegistrationFailed, msg.str() );
    }

    // Canonical orientation: u increases rightwards, (u, v) right-handed.
    if ( pu.kx < 0.0 || ( pu.kx == 0.0 && pu.ky < 0.0 ) )
    {
        pu.kx = -pu.kx;
        pu.ky = -pu.ky;
    }
    if ( pu.kx * pv.ky - pu.ky * pv.kx < 0.0 )
    {
        pv.kx = -pv.kx;
        pv.ky = -pv.ky;
    }

    // Per-plane template coefficients for the two fundamentals.
    std::array<cplx, 3> cu, cv;
    for ( Element e: reseau::kElements )
    {
        auto a = reseau::element_fourier( e, geometry, 1, 0 );
        auto b = reseau::element_fourier( e, geometry, 0, 1 );
        cu[static_cast<std::size_t>( index( e ) )] = std::conj( cplx( a[0], a[1] ) );
        cv[static_cast<std::size_t>( index( e ) )] = std::conj( cplx( b[0], b[1] ) );
    }
    std::vector<cplx> su( gb.size() ), sv( gb.size() );
    for ( std::size_t k = 0; k < gb.size(); ++k )
    {
        su[k] = cu[0] * labels[0].pixels[k] + cu[1] * labels[1].pixels[k] + cu[2] * labels[2].pixels[k];
        sv[k] = cv[0] * labels[0].pixels[k] + cv[1] * labels[1].pixels[k] + cv[2] * labels[2].pixels[k];
    }

    const double meas_period = 1.0 / std::hypot( pv.kx, pv.ky );
    const double sigma_w     = options.window_periods * meas_period;
    const int    radius      = static_cast<int>( std::ceil( 3.0 * sigma_w ) );
    const double step        = options.node_step_px > 0.0 ? options.node_step_px : std::max( 4.0, 1.5 * meas_period );
    const double margin      = std::min( sigma_w, 0.25 * std::min( w, h ) );
    const int    nx          = std::max( 1, static_cast<int>( std::floor( ( w - 2 * margin ) / step ) ) + 1 );
    const int    ny          = std::max( 1, static_cast<int>( std::floor( ( h - 2 * margin ) / step ) ) + 1 );
    const double ox          = 0.5 * ( w - ( nx - 1 ) * step );
    const double oy          = 0.5 * ( h - ( ny - 1 ) * step );

    std::vector<double> win( static_cast<std::size_t>( 2 * radius + 1 ) );
    std::vector<NodeSample> nodes( static_cast<std::size_t>( nx * ny ) );

    double ku[2] = { pu.kx, pu.ky }, kv[2] = { pv.kx, pv.ky };
    std::vector<double> value[2];

    // Two passes: the second demodulates with the carriers refined by the
    // first affine fit.
    std::array<double, 3> plane[2];
    for ( int pass = 0; pass < 2; ++pass )
    {
        // Baseband signals: template response times the conjugate carrier.
        std::vector<cplx> bu( su.size() ), bv( sv.size() );
        parallel_for( h, [&]( int y0, int y1 ) {
            for ( int y = y0; y < y1; ++y )
                for ( int x = 0; x < w; ++x )
                {
                    auto   k  = static_cast<std::size_t>( y ) * static_cast<std::size_t>( w ) + static_cast<std::size_t>( x );
                    double au = -2.0 * std::numbers::pi * ( ku[0] * ( x + 0.5 ) + ku[1] * ( y + 0.5 ) );
                    double av = -2.0 * std::numbers::pi * ( kv[0] * ( x + 0.5 ) + kv[1] * ( y + 0.5 ) );
                    bu[k]     = su[k] * std::polar( 1.0, au );
                    bv[k]     = sv[k] * std::polar( 1.0, av );
                }
        } );

        parallel_for( ny, [&]( int r0, int r1 ) {
            std::vector<double> wx( static_cast<std::size_t>( 2 * radius + 1 ) ), wy( wx.size() );
            for ( int r = r0; r < r1; ++r )
                for ( int c = 0; c < nx; ++c )
                {
                    auto  &s = nodes[static_cast<std::size_t>( r * nx + c )];
                    s.x      = ox + c * step;
                    s.y      = oy + r * step;
                    int cxp  = static_cast<int>( std::floor( s.x ) );
                    int cyp  = static_cast<int>( std::floor( s.y ) );
                    for ( int t = -radius; t <= radius; ++t )
                    {
                        double dx = cxp + t + 0.5 - s.x, dy = cyp + t + 0.5 - s.y;
                        wx[static_cast<std::size_t>( t + radius )] = std::exp( -0.5 * dx * dx / ( sigma_w * sigma_w ) );
                        wy[static_cast<std::size_t>( t + radius )] = std::exp( -0.5 * dy * dy / ( sigma_w * sigma_w ) );
                    }
                    cplx   zu = 0.0, zv = 0.0;
                    double wsum = 0.0;
                    for ( int y = std::max( 0, cyp - radius ); y <= std::min( h - 1, cyp + radius ); ++y )
                    {
                        double wyy = wy[static_cast<std::size_t>( y - cyp + radius )];
                        cplx   rowu = 0.0, rowv = 0.0;
                        double roww = 0.0;
                        for ( int x = std::max( 0, cxp - radius ); x <= std::min( w - 1, cxp + radius ); ++x )
                        {
                            double ww = wx[static_cast<std::size_t>( x - cxp + radius )];
                            auto   k  = static_cast<std::size_t>( y ) * static_cast<std::size_t>( w ) + static_cast<std::size_t>( x );
                            rowu += ww * bu[k];
                            rowv += ww * bv[k];
                            roww += ww;
                        }
                        zu += wyy * rowu;
                        zv += wyy * rowv;
                        wsum += wyy * roww;
                    }
                    // arg(Z) / 2 pi is the lattice phase left after removing
                    // the carrier; it varies slowly between nodes.
                    s.psi[0]     = std::arg( zu ) / ( 2.0 * std::numbers::pi );
                    s.psi[1]     = std::arg( zv ) / ( 2.0 * std::numbers::pi );
                    s.weight[0]  = std::abs( zu ) / wsum;
                    s.weight[1]  = std::abs( zv ) / wsum;
                    s.reached[0] = s.reached[1] = false;
                }
        } );

        for ( int axis = 0; axis < 2; ++axis )
        {
            // Discard nodes with negligible modulation, then unwrap in order
            // of decreasing amplitude.
            std::vector<double> amps;
            for ( const auto &s: nodes )
                amps.push_back( s.weight[axis] );
            auto   mid    = amps.begin() + static_cast<std::ptrdiff_t>( amps.size() / 2 );
            std::nth_element( amps.begin(), mid, amps.end() );
            double cutoff = 0.05 * *mid;

            using Item = std::pair<double, int>;
            std::priority_queue<Item> queue;
            int                       start = -1;
            for ( int k = 0; k < static_cast<int>( nodes.size() ); ++k )
                if ( start < 0 || nodes[static_cast<std::size_t>( k )].weight[axis] > nodes[static_cast<std::size_t>( start )].weight[axis] )
                    start = k;
            if ( start < 0 || !( nodes[static_cast<std::size_t>( start )].weight[axis] > 0.0 ) )
                throw Error( ErrorCode::RegistrationFailed, "register_grid: no modulated region" );
            nodes[static_cast<std::size_t>( start )].reached[axis] = true;
            queue.push( { nodes[static_cast<std::size_t>( start )].weight[axis], start } );
            while ( !queue.empty() )
            {
                int k = queue.top().second;
                queue.pop();
                int r = k / nx, c = k % nx;
                for ( auto [dr, dc]: { std::pair{ -1, 0 }, { 1, 0 }, { 0, -1 }, { 0, 1 } } )
                {
                    int rr = r + dr, cc = c + dc;
                    if ( rr < 0 || rr >= ny || cc < 0 || cc >= nx )
                        continue;
                    auto &nb = nodes[static_cast<std::size_t>( rr * nx + cc )];
                    if ( nb.reached[axis] || nb.weight[axis] < cutoff )
                        continue;
                    double ref     = nodes[static_cast<std::size_t>( k )].psi[axis];
                    nb.psi[axis]  += std::round( ref - nb.psi[axis] );
                    nb.reached[axis] = true;
                    queue.push( { nb.weight[axis], rr * nx + cc } );
                }
            }
            value[axis].resize( nodes.size() );
            const double *kk = axis == 0 ? ku : kv;
            for ( std::size_t k = 0; k < nodes.size(); ++k )
                value[axis][k] = kk[0] * nodes[k].x + kk[1] * nodes[k].y + nodes[k].psi[axis];
            plane[axis] = fit_plane( nodes, axis, value[axis] );
        }
        if ( pass == 0 )
        {
            ku[0] = plane[0][0];
            ku[1] = plane[0][1];
            kv[0] = plane[1][0];
            kv[1] = plane[1][1];
        }
    }

    GridModel model;
    model.geometry = geometry;
    model.width    = w;
    model.height   = h;
    model.linear   = { plane[0][0], plane[0][1], plane[1][0], plane[1][1] };
    model.offset   = { plane[0][2], plane[1][2] };

    // Smooth residual: Catmull-Rom control mesh fitted by regularised
    // weighted least squares to the node residuals.
    const double mesh_step = options.mesh_step_px > 0.0 ? options.mesh_step_px : 6.0 * meas_period;
    model.mesh_nx          = std::max( 2, static_cast<int>( std::ceil( w / mesh_step ) ) + 1 );
    model.mesh_ny          = std::max( 2, static_cast<int>( std::ceil( h / mesh_step ) ) + 1 );
    model.mesh_step_x      = static_cast<double>( w ) / ( model.mesh_nx - 1 );
    model.mesh_step_y      = static_cast<double>( h ) / ( model.mesh_ny - 1 );
    const int mn           = model.mesh_nx * model.mesh_ny;

    auto basis = [&]( double x, double y, std::vector<std::pair<int, double>> &out ) {
        out.clear();
        double sx = std::clamp( x / model.mesh_step_x, 0.0, model.mesh_nx - 1.0 );
        double sy = std::clamp( y / model.mesh_step_y, 0.0, model.mesh_ny - 1.0 );
        int    ix = std::min( static_cast<int>( sx ), model.mesh_nx - 2 );
        int    iy = std::min( static_cast<int>( sy ), model.mesh_ny - 2 );
        auto   bx = detail::catmull_rom( sx - ix );
        auto   by = detail::catmull_rom( sy - iy );
        for ( int m = 0; m < 4; ++m )
            for ( int q = 0; q < 4; ++q )
            {
                int jj = std::clamp( iy - 1 + m, 0, model.mesh_ny - 1 );
                int ii = std::clamp( ix - 1 + q, 0, model.mesh_nx - 1 );
                out.emplace_back( jj * model.mesh_nx + ii, bx[static_cast<std::size_t>( q )] * by[static_cast<std::size_t>( m )] );
            }
    };

    Eigen::MatrixXd smooth = Eigen::MatrixXd::Zero( mn, mn );
    auto add_second_difference = [&]( int a, int b, int c ) {
        int idx[3]  = { a, b, c };
        double co[3] = { 1.0, -2.0, 1.0 };
        for ( int p = 0; p < 3; ++p )
            for ( int q = 0; q < 3; ++q )
                smooth( idx[p], idx[q] ) += co[p] * co[q];
    };
    for ( int j = 0; j < model.mesh_ny; ++j )
        for ( int i = 0; i + 2 < model.mesh_nx; ++i )
            add_second_difference( j * model.mesh_nx + i, j * model.mesh_nx + i + 1, j * model.mesh_nx + i + 2 );
    for ( int j = 0; j + 2 < model.mesh_ny; ++j )
        for ( int i = 0; i < model.mesh_nx; ++i )
            add_second_difference( j * model.mesh_nx + i, ( j + 1 ) * model.mesh_nx + i, ( j + 2 ) * model.mesh_nx + i );

    std::vector<std::pair<int, double>> bw;
    std::vector<double>                 residual[2];
    std::vector<double>                 robust[2];
    Eigen::VectorXd                     coef[2];
    for ( int axis = 0; axis < 2; ++axis )
    {
        residual[axis].resize( nodes.size() );
        robust[axis].assign( nodes.size(), 1.0 );
        for ( std::size_t k = 0; k < nodes.size(); ++k )
        {
            const auto &p     = plane[axis];
            residual[axis][k] = value[axis][k] - ( p[0] * nodes[k].x + p[1] * nodes[k].y + p[2] );
        }
        // Two rounds; the second down-weights nodes far off the first fit.
        for ( int round = 0; round < 2; ++round )
        {
            Eigen::MatrixXd ata = Eigen::MatrixXd::Zero( mn, mn );
            Eigen::VectorXd atb = Eigen::VectorXd::Zero( mn );
            for ( std::size_t k = 0; k < nodes.size(); ++k )
            {
                const auto &s  = nodes[k];
                double      wt = s.reached[axis] ? s.weight[axis] * robust[axis][k] : 0.0;
                if ( wt <= 0.0 )
                    continue;
                basis( s.x, s.y, bw );
                for ( auto [a, wa]: bw )
                {
                    atb[a] += wt * wa * residual[axis][k];
                    for ( auto [b, wb]: bw )
                        ata( a, b ) += wt * wa * wb;
                }
            }
            double lambda = 0.02 * ata.trace() / mn + 1e-12;
            coef[axis]    = ( ata + lambda * smooth ).ldlt().solve( atb );

            std::vector<double> dev;
            std::vector<double> fitted( nodes.size() );
            for ( std::size_t k = 0; k < nodes.size(); ++k )
            {
                basis( nodes[k].x, nodes[k].y, bw );
                double f = 0.0;
                for ( auto [a, wa]: bw )
                    f += wa * coef[axis][a];
                fitted[k] = f;
                if ( nodes[k].reached[axis] )
                    dev.push_back( std::abs( residual[axis][k] - f ) );
            }
            if ( dev.empty() )
                break;
            auto mid = dev.begin() + static_cast<std::ptrdiff_t>( dev.size() / 2 );
            std::nth_element( dev.begin(), mid, dev.end() );
            double mad = std::max( *mid, 1e-4 );
            for ( std::size_t k = 0; k < nodes.size(); ++k )
            {
                double d        = std::abs( residual[axis][k] - fitted[k] ) / ( 4.0 * mad );
                robust[axis][k] = d < 1.0 ? ( 1.0 - d * d ) * ( 1.0 - d * d ) : 0.0;
            }
        }
    }
    model.mesh.resize( static_cast<std::size_t>( mn ) );
    for ( int k = 0; k < mn; ++k )
        model.mesh[static_cast<std::size_t>( k )] = { coef[0][k], coef[1][k] };

    // Fit quality in pixels.
    double pu_px = model.period_u_px(), pv_px = model.period_v_px();
    double sum = 0.0, wsum = 0.0, worst = 0.0;
    int    used = 0;
    for ( std::size_t k = 0; k < nodes.size(); ++k )
    {
        if ( !nodes[k].reached[0] || !nodes[k].reached[1] )
            continue;
        auto   g  = model.to_grid( nodes[k].x, nodes[k].y );
        double du = ( value[0][k] - g.u ) * pu_px;
        double dv = ( value[1][k] - g.v ) * pv_px;
        double d  = std::hypot( du, dv );
        double wt = std::min( nodes[k].weight[0], nodes[k].weight[1] ) * std::min( robust[0][k], robust[1][k] );
        sum += wt * d;
        wsum += wt;
        if ( wt > 0.0 )
            worst = std::max( worst, d );
        ++used;
    }
    model.mean_residual_px = wsum > 0.0 ? sum / wsum : 0.0;
    model.max_residual_px  = worst;
    model.nodes_used       = used;
    if ( used < 4 )
        throw Error( ErrorCode::RegistrationFailed, "register_grid: too few usable measurement nodes" );
    if ( !model.is_invertible() )
        throw Error( ErrorCode::RegistrationFailed, "register_grid: fitted mapping folds over" );
    spdlog::debug(
        "register_grid: period {:.4f}/{:.4f} px, angle {:.3f} deg, residual {:.3f} px over {} nodes", pu_px,
        pv_px, model.angle_deg(), model.mean_residual_px, used );
    return model;
}

} // namespace dufay::recon
