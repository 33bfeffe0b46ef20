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

#ifndef LIPCERT_SDP_HPP
#define LIPCERT_SDP_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <lipcert/linalg.hpp>

/*
 * Small dense SDP engine:
 *
 *     maximize  x[objective]
 *     s.t.      G(x) = base + sum_k x_k U_k C_k U_k^T  > 0,
 *               x_k > 0 where nonneg[k], x_k < upper[k].
 *
 * Each variable enters through a low-rank term, which keeps the Hessian of
 * -logdet G cheap: with V = L^-1 [U_1 .. U_K] and P = V^T V,
 *     d/dx_k  (-logdet G) = -tr(C_k P_kk)
 *     d2/dx_k dx_l        =  tr(C_k P_kl C_l P_lk).
 * Solved with a primal log-barrier method and damped Newton steps.
 */

namespace lipcert {

    /// Contributes x_k * U C U^T to the LMI. C is symmetric and small.
    struct LmiTerm {
        Matrix u;
        Matrix c;
    };

    struct SdpProblem {
        Matrix base;
        std::vector<LmiTerm> terms;
        Index objective = 0;
        std::vector<bool> nonneg; ///< empty means no sign constraints
        Vector upper;             ///< empty means no upper bounds; +inf entries are ignored

        Index variables() const noexcept { return static_cast<Index>( terms.size() ); }
    };

    struct SdpOptions {
        double rel_gap     = 1e-12;
        double growth      = 10.0;
        int max_outer      = 60;
        int max_newton     = 120; ///< per barrier parameter
        double newton_tol  = 1e-10;
    };

    struct SdpResult {
        Vector x;
        double margin   = 0.0; ///< smallest eigenvalue of the Jacobi-scaled G(x)
        int newton_steps = 0;
    };

    inline Matrix evaluate_lmi( const SdpProblem &p, const Vector &x ) {
        if( x.size() != p.variables() )
            throw DimensionMismatch( "evaluate_lmi: variable count mismatch" );
        Matrix g = p.base;
        for( Index k = 0; k < x.size(); ++k ) {
            const LmiTerm &t = p.terms[static_cast<std::size_t>( k )];
            g.noalias() += x( k ) * ( t.u * t.c * t.u.transpose() );
        }
        return symmetrize( g );
    }

    namespace detail {

        class Barrier {
        public:
            Barrier( const SdpProblem &p ) : p_( p ) {
                const Index n = p.variables();
                offsets_.resize( static_cast<std::size_t>( n + 1 ), 0 );
                for( Index k = 0; k < n; ++k ) {
                    const LmiTerm &t = p.terms[static_cast<std::size_t>( k )];
                    if( t.u.rows() != p.base.rows() || t.c.rows() != t.u.cols() || t.c.cols() != t.u.cols() )
                        throw DimensionMismatch( "sdp: term " + std::to_string( k ) + " does not conform" );
                    offsets_[static_cast<std::size_t>( k + 1 )] = offsets_[static_cast<std::size_t>( k )] + t.u.cols();
                }
                u_.resize( p.base.rows(), offsets_.back() );
                c_ = Matrix::Zero( offsets_.back(), offsets_.back() );
                for( Index k = 0; k < n; ++k ) {
                    const auto o = offsets_[static_cast<std::size_t>( k )];
                    const LmiTerm &t = p.terms[static_cast<std::size_t>( k )];
                    u_.middleCols( o, t.u.cols() ) = t.u;
                    c_.block( o, o, t.c.rows(), t.c.cols() ) = t.c;
                }
                m_ = static_cast<double>( p.base.rows() );
                for( Index k = 0; k < n; ++k ) {
                    if( is_nonneg( k ) )
                        m_ += 1.0;
                    if( has_upper( k ) )
                        m_ += 1.0;
                }
            }

            double terms() const noexcept { return m_; }

            bool is_nonneg( Index k ) const {
                return !p_.nonneg.empty() && p_.nonneg[static_cast<std::size_t>( k )];
            }
            bool has_upper( Index k ) const { return p_.upper.size() > 0 && std::isfinite( p_.upper( k ) ); }

            bool inside_box( const Vector &x ) const {
                for( Index k = 0; k < x.size(); ++k ) {
                    if( is_nonneg( k ) && !( x( k ) > 0.0 ) )
                        return false;
                    if( has_upper( k ) && !( x( k ) < p_.upper( k ) ) )
                        return false;
                }
                return true;
            }

            /// Barrier value, or nullopt outside the domain.
            std::optional<double> value( const Vector &x, double t ) const {
                if( !x.allFinite() || !inside_box( x ) )
                    return std::nullopt;
                Eigen::LLT<Matrix> llt( evaluate_lmi( p_, x ) );
                if( llt.info() != Eigen::Success )
                    return std::nullopt;
                const Vector d = llt.matrixLLT().diagonal();
                if( !( d.minCoeff() > 0.0 ) )
                    return std::nullopt;
                double f = -t * x( p_.objective ) - 2.0 * d.array().log().sum();
                for( Index k = 0; k < x.size(); ++k ) {
                    if( is_nonneg( k ) )
                        f -= std::log( x( k ) );
                    if( has_upper( k ) )
                        f -= std::log( p_.upper( k ) - x( k ) );
                }
                return std::isfinite( f ) ? std::optional<double>( f ) : std::nullopt;
            }

            void derivatives( const Vector &x, double t, Vector &grad, Matrix &hess ) const {
                const Index n = x.size();
                Eigen::LLT<Matrix> llt( evaluate_lmi( p_, x ) );
                const Matrix v = llt.matrixL().solve( u_ );
                const Matrix q = c_ * ( v.transpose() * v );
                const Matrix e = q.cwiseProduct( q.transpose() );
                grad.setZero( n );
                hess.setZero( n, n );
                for( Index k = 0; k < n; ++k ) {
                    const auto ok = offsets_[static_cast<std::size_t>( k )];
                    const auto nk = offsets_[static_cast<std::size_t>( k + 1 )] - ok;
                    grad( k ) = -q.block( ok, ok, nk, nk ).trace();
                    for( Index l = k; l < n; ++l ) {
                        const auto ol = offsets_[static_cast<std::size_t>( l )];
                        const auto nl = offsets_[static_cast<std::size_t>( l + 1 )] - ol;
                        hess( k, l ) = hess( l, k ) = e.block( ok, ol, nk, nl ).sum();
                    }
                    if( is_nonneg( k ) ) {
                        grad( k ) -= 1.0 / x( k );
                        hess( k, k ) += 1.0 / ( x( k ) * x( k ) );
                    }
                    if( has_upper( k ) ) {
                        const double gap = p_.upper( k ) - x( k );
                        grad( k ) += 1.0 / gap;
                        hess( k, k ) += 1.0 / ( gap * gap );
                    }
                }
                grad( p_.objective ) -= t;
            }

        private:
            const SdpProblem &p_;
            std::vector<Index> offsets_;
            Matrix u_;
            Matrix c_;
            double m_ = 0.0;
        };

        /// Newton direction with symmetric diagonal rescaling of the Hessian.
        inline Vector newton_direction( const Matrix &h, const Vector &g ) {
            Vector d( h.rows() );
            for( Index k = 0; k < h.rows(); ++k )
                d( k ) = h( k, k ) > 0.0 ? 1.0 / std::sqrt( h( k, k ) ) : 1.0;
            const Matrix hs = d.asDiagonal() * h * d.asDiagonal();
            const Vector gs = d.cwiseProduct( g );
            Eigen::LDLT<Matrix> ldlt( hs );
            Vector step = -ldlt.solve( gs );
            return d.cwiseProduct( step );
        }

        struct CenterOutcome {
            bool converged = false;
            int steps      = 0;
        };

        /// Damped Newton on the barrier at fixed t. `stop` may end the
        /// iteration early (used by phase I).
        template<class Stop>
        CenterOutcome center( const Barrier &b, Vector &x, double t, const SdpOptions &o, Stop stop ) {
            CenterOutcome out;
            Vector g;
            Matrix h;
            auto f = b.value( x, t );
            if( !f )
                return out;
            for( int it = 0; it < o.max_newton; ++it ) {
                b.derivatives( x, t, g, h );
                const Vector dx = newton_direction( h, g );
                const double dec = -g.dot( dx );
                ++out.steps;
                if( !std::isfinite( dec ) )
                    return out;
                if( dec * 0.5 <= o.newton_tol ) {
                    out.converged = true;
                    return out;
                }
                double s = 1.0;
                bool moved = false;
                for( int ls = 0; ls < 80; ++ls, s *= 0.5 ) {
                    const Vector trial = x + s * dx;
                    const auto ft      = b.value( trial, t );
                    if( ft && *ft <= *f - 0.25 * s * dec ) {
                        x     = trial;
                        f     = ft;
                        moved = true;
                        break;
                    }
                }
                if( !moved ) {
                    // no progress possible at working precision
                    out.converged = dec < 1e-6;
                    return out;
                }
                if( stop( x ) ) {
                    out.converged = true;
                    return out;
                }
            }
            return out;
        }

        inline double start_parameter( double m, double objective ) {
            return m / ( std::abs( objective ) > 0.0 ? std::abs( objective ) : 1.0 );
        }

        /// Finds x with G(x) > 0 by maximizing s subject to G(x) - s I > 0.
        inline Vector phase_one( const SdpProblem &p, const Vector &x0, const SdpOptions &o, int &steps ) {
            const Index n = p.variables();
            const Index d = p.base.rows();
            SdpProblem aux;
            aux.base  = p.base;
            aux.terms = p.terms;
            aux.terms.push_back( { Matrix::Identity( d, d ), -Matrix::Identity( d, d ) } );
            aux.objective = n;
            aux.nonneg    = p.nonneg;
            if( !aux.nonneg.empty() )
                aux.nonneg.push_back( false );
            if( p.upper.size() > 0 ) {
                aux.upper.resize( n + 1 );
                aux.upper.head( n ) = p.upper;
                aux.upper( n )      = std::numeric_limits<double>::infinity();
            }
            const Matrix g0    = evaluate_lmi( p, x0 );
            const double scale = std::max( max_abs( g0 ), std::numeric_limits<double>::min() );
            const double low   = eigenvalues_sym( g0 ).minCoeff();
            Vector y( n + 1 );
            y.head( n ) = x0;
            y( n )      = low - 1e-2 * scale;

            Barrier b( aux );
            double t  = start_parameter( b.terms(), std::abs( y( n ) ) );
            auto done = [&]( const Vector &z ) { return z( n ) > 0.0; };
            for( int outer = 0; outer < o.max_outer; ++outer ) {
                const auto r = center( b, y, t, o, done );
                steps += r.steps;
                if( done( y ) )
                    return y.head( n );
                if( b.terms() / t <= 1e-12 * scale )
                    throw SdpFailure( "sdp: LMI is infeasible (phase I optimum " + std::to_string( y( n ) / scale )
                                      + " relative)" );
                t *= o.growth;
            }
            throw SdpFailure( "sdp: MaxIterations in phase I" );
        }

    } // namespace detail

    /// Maximizes x[objective] over the strict LMI. x0 must satisfy the box
    /// constraints; if G(x0) is not positive definite a phase I search runs
    /// first. Throws SdpFailure on infeasibility or iteration exhaustion.
    inline SdpResult sdp_subsolve( const SdpProblem &p, const Vector &x0, const SdpOptions &o = {} ) {
        const Index n = p.variables();
        if( p.base.rows() != p.base.cols() || p.base.rows() == 0 )
            throw DimensionMismatch( "sdp: base matrix must be square and non-empty" );
        if( x0.size() != n || p.objective < 0 || p.objective >= n )
            throw DimensionMismatch( "sdp: bad variable count or objective index" );
        if( !p.nonneg.empty() && static_cast<Index>( p.nonneg.size() ) != n )
            throw DimensionMismatch( "sdp: nonneg mask has wrong length" );
        if( p.upper.size() != 0 && p.upper.size() != n )
            throw DimensionMismatch( "sdp: upper bound vector has wrong length" );

        detail::Barrier b( p );
        if( !b.inside_box( x0 ) )
            throw InvalidArgument( "sdp: starting point violates the sign or upper bounds" );

        SdpResult res;
        Vector x = x0;
        if( !b.value( x, 0.0 ) )
            x = detail::phase_one( p, x0, o, res.newton_steps );

        double t  = detail::start_parameter( b.terms(), x( p.objective ) );
        auto none = []( const Vector & ) { return false; };
        bool ok   = false;
        for( int outer = 0; outer < o.max_outer; ++outer ) {
            const auto r = detail::center( b, x, t, o, none );
            res.newton_steps += r.steps;
            if( !r.converged && !b.value( x, t ) )
                break;
            if( b.terms() / t <= o.rel_gap * std::abs( x( p.objective ) ) ) {
                ok = true;
                break;
            }
            t *= o.growth;
        }
        if( !ok )
            throw SdpFailure( "sdp: MaxIterations" );
        res.x      = x;
        res.margin = scaled_min_eig( evaluate_lmi( p, x ) );
        return res;
    }

} // namespace lipcert

#endif // LIPCERT_SDP_HPP
