/*
 * Copyright 2026 The lipcert Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIPCERT_STAGE_HPP
#define LIPCERT_STAGE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <lipcert/linalg.hpp>
#include <lipcert/network.hpp>
#include <lipcert/sdp.hpp>
#include <lipcert/slopes.hpp>

namespace lipcert {

    enum class Method { acc, fast, cf };
    enum class Variant { acc, fast, cf, automatic };

    inline std::string_view to_string( Method m ) {
        switch( m ) {
            case Method::acc: return "acc";
            case Method::fast: return "fast";
            case Method::cf: return "cf";
        }
        return "unknown";
    }

    inline std::string_view to_string( Variant v ) {
        switch( v ) {
            case Variant::acc: return "acc";
            case Variant::fast: return "fast";
            case Variant::cf: return "cf";
            case Variant::automatic: return "auto";
        }
        return "unknown";
    }

    inline Variant parse_variant( std::string_view s ) {
        for( auto v : { Variant::acc, Variant::fast, Variant::cf, Variant::automatic } )
            if( to_string( v ) == s )
                return v;
        throw InvalidArgument( "unknown variant \"" + std::string( s ) + "\" (expected acc, fast, cf or auto)" );
    }

    inline Method parse_method( std::string_view s ) {
        for( auto m : { Method::acc, Method::fast, Method::cf } )
            if( to_string( m ) == s )
                return m;
        throw InvalidArgument( "unknown method \"" + std::string( s ) + "\"" );
    }

    inline constexpr double default_cap        = 1e6;
    inline constexpr double fill_in_factor     = 100.0;
    inline constexpr Index auto_acc_width      = 128;
    inline constexpr double boundary_shrink    = 1e-6;
    /// Acc treats neuron j as affine when beta_j - alpha_j <= this * |beta_j|.
    inline constexpr double acc_affine_tolerance = 1e-4;

    /// Everything one stage needs: M_{i-1}, W_i, W_{i+1} and the slope
    /// bounds of layer i.
    struct StageInput {
        SpdFactor messenger;
        Matrix w_cur;
        std::optional<Matrix> w_next;
        LayerSlopeBounds bounds;
        double cap = default_cap;

        void validate() const {
            if( w_cur.cols() != messenger.order() )
                throw DimensionMismatch( "stage: W_i has " + std::to_string( w_cur.cols() )
                                         + " columns, messenger order is " + std::to_string( messenger.order() ) );
            if( bounds.width() != w_cur.rows() )
                throw DimensionMismatch( "stage: slope bounds do not match the width of W_i" );
            if( w_next && w_next->cols() != w_cur.rows() )
                throw DimensionMismatch( "stage: W_{i+1} does not conform with W_i" );
            if( !( cap > 0.0 ) )
                throw InvalidArgument( "stage: cap must be positive" );
        }
    };

    struct StageResult {
        Vector lambda;
        double c      = 0.0; ///< achieved by the full multiplier, degenerate neurons included
        double objective = 0.0; ///< optimum of the sub-problem on the active neurons
        Method method = Method::cf;
        double margin = 0.0;
        std::vector<std::string> fallback_log;
        LayerSlopeBounds bounds; ///< bounds the LMI was built from (widened for cf)
        SpdFactor messenger;     ///< M_i
    };

    namespace detail {

        /// Matrix weighed by c in the stage LMI: W_{i+1}, or I when it is
        /// absent or vanishes (the objective then becomes lambda_min(M_i)).
        inline Matrix objective_weight( const StageInput &s ) {
            if( s.w_next && s.w_next->cwiseAbs().maxCoeff() > 0.0 )
                return *s.w_next;
            return Matrix::Identity( s.w_cur.rows(), s.w_cur.rows() );
        }

        inline Matrix messenger_matrix( const StageInput &s ) { return s.messenger.reconstruct(); }

        /// X_{i-1} = M_{i-1} + W^T D_alpha Lambda D_beta W
        inline Matrix x_matrix( const StageInput &s, const Vector &lambda ) {
            const Vector p = s.bounds.product().cwiseProduct( lambda );
            Matrix x       = messenger_matrix( s );
            if( p.cwiseAbs().maxCoeff() > 0.0 )
                x.noalias() += s.w_cur.transpose() * p.asDiagonal() * s.w_cur;
            return symmetrize( x );
        }

        inline double achieved_c( const Matrix &wn, const SpdFactor &m ) {
            const double s = max_eig_quadratic( wn, m );
            return s > 0.0 ? 1.0 / s : std::numeric_limits<double>::infinity();
        }

    } // namespace detail

    /// Smallest eigenvalue (after unit-diagonal rescaling) of
    ///     [ Lambda - c Wn^T Wn        1/2 Lambda (Da+Db) W ]
    ///     [ 1/2 W^T (Da+Db) Lambda    X_{i-1}              ]
    /// Positive iff (lambda, c) is strictly feasible.
    inline double lmi_margin( const StageInput &s, const Vector &lambda, double c ) {
        s.validate();
        if( lambda.size() != s.w_cur.rows() )
            throw DimensionMismatch( "lmi_margin: lambda has the wrong length" );
        const Index a  = s.w_cur.rows();
        const Index b  = s.w_cur.cols();
        const Matrix wn = detail::objective_weight( s );
        Matrix g( a + b, a + b );
        g.topLeftCorner( a, a ) = Matrix( lambda.asDiagonal() ) - c * ( wn.transpose() * wn );
        const Matrix off = 0.5 * ( lambda.cwiseProduct( s.bounds.sum() ) ).asDiagonal() * s.w_cur;
        g.topRightCorner( a, b )    = off;
        g.bottomLeftCorner( b, a )  = off.transpose();
        g.bottomRightCorner( b, b ) = detail::x_matrix( s, lambda );
        return scaled_min_eig( symmetrize( g ) );
    }

    /// M_i = Lambda - 1/4 Lambda (Da+Db) W X^-1 W^T (Da+Db) Lambda.
    inline SpdFactor messenger_update( const StageInput &s, const Vector &lambda ) {
        s.validate();
        if( lambda.size() != s.w_cur.rows() )
            throw DimensionMismatch( "messenger_update: lambda has the wrong length" );
        const SpdFactor fx = factor_spd( SymMatrix( detail::x_matrix( s, lambda ) ) );
        const Matrix ws    = ( lambda.cwiseProduct( s.bounds.sum() ) ).asDiagonal() * s.w_cur;
        Matrix m           = Matrix( lambda.asDiagonal() ) - 0.25 * quadratic_form( ws, fx );
        return factor_spd( SymMatrix( symmetrize( m ) ) );
    }

    namespace detail {

        inline StageResult finish( const StageInput &s, Vector lambda, Method method ) {
            StageResult r;
            r.messenger = messenger_update( s, lambda );
            r.c         = achieved_c( objective_weight( s ), r.messenger );
            r.objective = r.c;
            r.margin    = lmi_margin( s, lambda, r.c * ( 1.0 - boundary_shrink ) );
            r.lambda    = std::move( lambda );
            r.method    = method;
            r.bounds    = s.bounds;
            return r;
        }

        /// Restriction of a stage to its active neurons.
        struct ActivePart {
            Matrix w;      ///< W_{M,.}
            Vector sum;    ///< (alpha + beta)_M
            Vector prod;   ///< (alpha * beta)_M
            Matrix wn;     ///< (W_{i+1})_{.,M}, or I
            Matrix m_prev; ///< M_{i-1}
        };

        inline ActivePart active_part( const StageInput &s ) {
            const auto &idx = s.bounds.active_set;
            if( idx.empty() )
                throw InvalidArgument( "stage: no active neurons (layer is affine and should be skipped)" );
            ActivePart a;
            a.w    = take_rows( s.w_cur, idx );
            a.sum  = take( s.bounds.sum(), idx );
            a.prod = take( s.bounds.product(), idx );
            if( s.w_next ) {
                a.wn = take_columns( *s.w_next, idx );
                if( a.wn.cwiseAbs().maxCoeff() == 0.0 )
                    a.wn = Matrix::Identity( a.w.rows(), a.w.rows() );
            } else {
                a.wn = Matrix::Identity( a.w.rows(), a.w.rows() );
            }
            a.m_prev = messenger_matrix( s );
            return a;
        }

        /// Largest c with the reduced scalar-multiplier LMI feasible at lambda.
        inline std::optional<double> reduced_c( const ActivePart &a, const SpdFactor &m_prev, double lambda ) {
            try {
                const bool coupled = a.prod.cwiseAbs().maxCoeff() > 0.0;
                const SpdFactor fx =
                    coupled ? factor_spd( SymMatrix( symmetrize(
                                  a.m_prev + lambda * ( a.w.transpose() * a.prod.asDiagonal() * a.w ) ) ) )
                            : m_prev;
                const Matrix sw = a.sum.asDiagonal() * a.w;
                const Index k   = a.w.rows();
                Matrix t = lambda * Matrix::Identity( k, k ) - 0.25 * lambda * lambda * quadratic_form( sw, fx );
                const SpdFactor ft = factor_spd( SymMatrix( symmetrize( t ) ) );
                const double s     = max_eig_quadratic( a.wn, ft );
                if( !( s > 0.0 ) || !std::isfinite( s ) )
                    return std::nullopt;
                return 1.0 / s;
            } catch( const Error & ) {
                return std::nullopt;
            }
        }

        /// Sign-carrying slope of the reduced c in log(lambda): with u the top
        /// eigenvector of Wn T^-1 Wn^T and y = T^-1 Wn^T u, dc/dlog(lambda) has
        /// the sign of y^T T'(lambda) y. Infeasible points count as negative.
        inline double reduced_slope( const ActivePart &a, const SpdFactor &m_prev, double lambda ) {
            try {
                const bool coupled = a.prod.cwiseAbs().maxCoeff() > 0.0;
                const SpdFactor fx =
                    coupled ? factor_spd( SymMatrix( symmetrize(
                                  a.m_prev + lambda * ( a.w.transpose() * a.prod.asDiagonal() * a.w ) ) ) )
                            : m_prev;
                const Matrix sw = a.sum.asDiagonal() * a.w;
                const Index k   = a.w.rows();
                Matrix t = lambda * Matrix::Identity( k, k ) - 0.25 * lambda * lambda * quadratic_form( sw, fx );
                const SpdFactor ft = factor_spd( SymMatrix( symmetrize( t ) ) );
                const Matrix b     = quadratic_form( a.wn, ft );
                Eigen::SelfAdjointEigenSolver<Matrix> es( b );
                const Vector u = es.eigenvectors().col( b.rows() - 1 );
                const Vector y = spd_solve( ft, a.wn.transpose() * u );
                const Vector h = sw.transpose() * y;
                const Vector z = spd_solve( fx, h );
                const Vector wz = a.w * z;
                return y.squaredNorm() - 0.5 * lambda * h.dot( z )
                       + 0.25 * lambda * lambda * wz.cwiseAbs2().dot( a.prod );
            } catch( const Error & ) {
                return -1.0;
            }
        }

        /// lambda that the closed form picks on the active rows.
        inline double reference_lambda( const ActivePart &a, const SpdFactor &m_prev, double cap ) {
            const double s = max_eig_quadratic( a.sum.asDiagonal() * a.w, m_prev );
            return s > 0.0 ? std::min( cap, 2.0 / s ) : cap;
        }

        struct ScalarSearch {
            double lambda = 0.0;
            double c      = 0.0; ///< reduced objective at lambda
        };

        /// Log grid around the reference multiplier, then bisection on the
        /// slope sign inside the bracket of the best grid point. Golden section
        /// covers brackets where the slope does not change sign.
        inline ScalarSearch fast_search( const StageInput &s, const ActivePart &a ) {
            constexpr int grid_points  = 64;
            constexpr int golden_iters = 40;
            const double ref = reference_lambda( a, s.messenger, s.cap );
            const double hi  = std::min( s.cap, ref * 1e6 );
            const double lo  = std::min( ref * 1e-8, hi * 1e-14 );
            const double llo = std::log( lo ), lhi = std::log( hi );

            auto score = [&]( double loglam ) {
                const auto c = reduced_c( a, s.messenger, std::exp( loglam ) );
                return c ? *c : -std::numeric_limits<double>::infinity();
            };

            std::vector<double> grid( grid_points ), val( grid_points );
            int best = -1;
            for( int k = 0; k < grid_points; ++k ) {
                grid[k] = llo + ( lhi - llo ) * k / ( grid_points - 1 );
                val[k]  = score( grid[k] );
                if( std::isfinite( val[k] ) && ( best < 0 || val[k] > val[best] ) )
                    best = k;
            }
            if( best < 0 )
                throw NoFeasibleLambda( "fast: no feasible multiplier on the search grid" );

            double a0 = grid[std::max( best - 1, 0 )];
            double b0 = grid[std::min( best + 1, grid_points - 1 )];

            // Bisection on the slope sign pins the maximizer to rounding level,
            // which golden section cannot do on the flat top of c.
            auto slope = [&]( double loglam ) { return reduced_slope( a, s.messenger, std::exp( loglam ) ); };
            if( slope( a0 ) > 0.0 && slope( b0 ) < 0.0 ) {
                double l = a0, h = b0;
                for( int it = 0; it < 200 && h - l > 1e-15 * std::max( 1.0, std::abs( l ) ); ++it ) {
                    const double mid = 0.5 * ( l + h );
                    if( slope( mid ) > 0.0 )
                        l = mid;
                    else
                        h = mid;
                }
                const double at = score( l );
                if( at >= val[best] * ( 1.0 - 1e-12 ) )
                    return { std::exp( l ), at };
            }

            const double phi = 0.5 * ( std::sqrt( 5.0 ) - 1.0 );
            double x1 = b0 - phi * ( b0 - a0 ), x2 = a0 + phi * ( b0 - a0 );
            double f1 = score( x1 ), f2 = score( x2 );
            for( int it = 0; it < golden_iters; ++it ) {
                if( f1 >= f2 ) {
                    b0 = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b0 - phi * ( b0 - a0 );
                    f1 = score( x1 );
                } else {
                    a0 = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a0 + phi * ( b0 - a0 );
                    f2 = score( x2 );
                }
            }
            ScalarSearch out{ std::exp( grid[best] ), val[best] };
            if( f1 > out.c )
                out = { std::exp( x1 ), f1 };
            if( f2 > out.c )
                out = { std::exp( x2 ), f2 };
            return out;
        }

    } // namespace detail

    /// Closed form on bounds widened to alpha * beta = 0:
    /// lambda = 2 / sigma_max(S W M^-1 W^T S), Lambda = lambda I.
    inline StageResult solve_cf( const StageInput &s ) {
        s.validate();
        StageInput adj = s;
        adj.bounds     = adjust_for_cf( s.bounds );
        const double sigma = max_eig_quadratic( adj.bounds.sum().asDiagonal() * s.w_cur, s.messenger );
        double lambda      = sigma > 0.0 ? 2.0 / sigma : s.cap;
        StageResult r;
        if( lambda > s.cap ) {
            lambda = s.cap;
            r.fallback_log.push_back( "cf: multiplier clamped to cap" );
        }
        StageResult done = detail::finish( adj, Vector::Constant( s.w_cur.rows(), lambda ), Method::cf );
        if( !( done.margin > 0.0 ) )
            throw NoFeasibleLambda( "cf: candidate failed LMI verification" );
        done.fallback_log.insert( done.fallback_log.begin(), r.fallback_log.begin(), r.fallback_log.end() );
        return done;
    }

    /// Scalar multiplier Lambda = lambda I chosen to maximize c on the
    /// active neurons.
    inline StageResult solve_fast( const StageInput &s ) {
        s.validate();
        const detail::ActivePart a       = detail::active_part( s );
        const detail::ScalarSearch found = detail::fast_search( s, a );
        StageResult r;
        try {
            r = detail::finish( s, Vector::Constant( s.w_cur.rows(), found.lambda ), Method::fast );
        } catch( const NotPositiveDefinite &e ) {
            throw NoFeasibleLambda( std::string( "fast: messenger update failed: " ) + e.what() );
        }
        if( !( r.margin > 0.0 ) )
            throw NoFeasibleLambda( "fast: candidate failed LMI verification" );
        r.objective = found.c;
        return r;
    }

    /// Diagonal multiplier on the active neurons from the small SDP; the
    /// degenerate neurons get fill_in_factor times the active mean.
    inline StageResult solve_acc( const StageInput &in ) {
        in.validate();
        // Nearly affine neurons join the degenerate set for the subproblem:
        // their optimal multipliers grow like 1/(beta - alpha)^2 and the
        // messenger update would cancel away their digits. The final LMI
        // is still checked with the true bounds.
        StageInput s = in;
        s.bounds.equal_set.clear();
        s.bounds.active_set.clear();
        for( Index j = 0; j < s.bounds.width(); ++j ) {
            const bool nearly = in.bounds.beta( j ) - in.bounds.alpha( j )
                                <= acc_affine_tolerance * std::abs( in.bounds.beta( j ) );
            const bool equal  = std::find( in.bounds.equal_set.begin(), in.bounds.equal_set.end(), j )
                               != in.bounds.equal_set.end();
            ( equal || nearly ? s.bounds.equal_set : s.bounds.active_set ).push_back( j );
        }
        if( s.bounds.active_set.empty() )
            throw SubsolverFailed( "acc: every neuron is nearly affine" );
        const detail::ActivePart a = detail::active_part( s );
        const auto &idx            = s.bounds.active_set;
        const Index k              = static_cast<Index>( idx.size() );
        const Index d              = s.w_cur.cols();
        const Index r              = a.wn.rows();
        const Index n              = k + d;

        double lambda0 = 0.0;
        try {
            lambda0 = detail::fast_search( s, a ).lambda;
        } catch( const NoFeasibleLambda & ) {
            lambda0 = detail::reference_lambda( a, s.messenger, s.cap );
        }
        lambda0 = std::min( lambda0, 0.5 * s.cap );
        const auto c_start = detail::reduced_c( a, s.messenger, lambda0 );

        SdpProblem p;
        p.base                          = Matrix::Zero( n, n );
        p.base.bottomRightCorner( d, d ) = a.m_prev;
        for( Index j = 0; j < k; ++j ) {
            LmiTerm t;
            t.u = Matrix::Zero( n, 2 );
            t.u( j, 0 )                   = 1.0;
            t.u.col( 1 ).tail( d )        = a.w.row( j ).transpose();
            t.c = Matrix( 2, 2 );
            t.c << 1.0, 0.5 * a.sum( j ), 0.5 * a.sum( j ), a.prod( j );
            p.terms.push_back( std::move( t ) );
        }
        LmiTerm ct;
        ct.u = Matrix::Zero( n, r );
        ct.u.topRows( k ) = a.wn.transpose();
        ct.c = -Matrix::Identity( r, r );
        p.terms.push_back( std::move( ct ) );
        p.objective = k;
        p.nonneg.assign( static_cast<std::size_t>( k + 1 ), true );
        p.nonneg.back() = false;
        p.upper         = Vector::Constant( k + 1, s.cap );
        p.upper( k )    = std::numeric_limits<double>::infinity();

        Vector x0( k + 1 );
        x0.head( k ).setConstant( lambda0 );
        x0( k ) = c_start ? 0.5 * *c_start : 0.0;

        SdpResult sol;
        try {
            sol = sdp_subsolve( p, x0 );
        } catch( const Error &e ) {
            throw SubsolverFailed( std::string( "acc: " ) + e.what() );
        }

        std::vector<std::string> log;
        Vector lambda    = Vector::Zero( s.w_cur.rows() );
        const Vector act = sol.x.head( k ).cwiseMax( 0.0 ).cwiseMin( s.cap );
        for( Index j = 0; j < k; ++j )
            lambda( idx[static_cast<std::size_t>( j )] ) = act( j );
        if( !s.bounds.equal_set.empty() ) {
            double fill = fill_in_factor * act.mean();
            if( fill > s.cap ) {
                fill = s.cap;
                log.push_back( "acc: degenerate multipliers clamped to cap" );
            }
            for( Index j : s.bounds.equal_set )
                lambda( j ) = fill;
        }
        StageResult res;
        try {
            res = detail::finish( in, std::move( lambda ), Method::acc );
        } catch( const NotPositiveDefinite &e ) {
            throw SubsolverFailed( std::string( "acc: messenger update failed: " ) + e.what() );
        }
        if( !( res.margin > 0.0 ) )
            throw SubsolverFailed( "acc: candidate failed LMI verification" );
        res.fallback_log = std::move( log );
        res.objective    = sol.x( k );
        return res;
    }

    /// Runs the requested variant with the safeguard chain:
    ///   acc  -> on failure the better (larger c) of fast and cf
    ///   fast -> on failure cf
    ///   auto -> acc, or fast when more than 128 neurons are active
    inline StageResult solve_stage( const StageInput &s, Variant v ) {
        std::vector<std::string> log;
        auto note = [&]( Method m, const std::string &what ) {
            log.push_back( std::string( to_string( m ) ) + ": " + what );
        };
        auto attempt = [&]( Method m, auto &&fn ) -> std::optional<StageResult> {
            try {
                StageResult r = fn( s );
                for( auto &line : r.fallback_log )
                    log.push_back( line );
                note( m, "ok" );
                return r;
            } catch( const Error &e ) {
                note( m, std::string( "failed (" ) + e.what() + ")" );
                return std::nullopt;
            }
        };
        auto seal = [&]( StageResult r ) {
            r.fallback_log = log;
            return r;
        };
        auto cf_or_throw = [&]() {
            auto r = attempt( Method::cf, solve_cf );
            if( !r )
                throw Error( "stage: closed-form fallback failed" );
            return seal( std::move( *r ) );
        };

        if( v == Variant::automatic ) {
            if( static_cast<Index>( s.bounds.active_set.size() ) > auto_acc_width ) {
                log.push_back( "auto: more than " + std::to_string( auto_acc_width ) + " active neurons, using fast" );
                v = Variant::fast;
            } else {
                v = Variant::acc;
            }
        }
        switch( v ) {
            case Variant::cf: return cf_or_throw();
            case Variant::fast: {
                if( auto r = attempt( Method::fast, solve_fast ) )
                    return seal( std::move( *r ) );
                return cf_or_throw();
            }
            case Variant::acc:
            default: {
                if( auto r = attempt( Method::acc, solve_acc ) )
                    return seal( std::move( *r ) );
                auto fast = attempt( Method::fast, solve_fast );
                auto cf   = attempt( Method::cf, solve_cf );
                if( fast && ( !cf || fast->c >= cf->c ) ) {
                    log.push_back( "selected fast" );
                    return seal( std::move( *fast ) );
                }
                if( !cf )
                    throw Error( "stage: closed-form fallback failed" );
                log.push_back( "selected cf" );
                return seal( std::move( *cf ) );
            }
        }
    }

} // namespace lipcert

#endif // LIPCERT_STAGE_HPP
