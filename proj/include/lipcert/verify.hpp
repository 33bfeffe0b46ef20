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

#ifndef LIPCERT_VERIFY_HPP
#define LIPCERT_VERIFY_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <lipcert/certificate_io.hpp>
#include <lipcert/oracles.hpp>

namespace lipcert {

    struct OracleReport {
        double lmi_min_eig         = std::numeric_limits<double>::quiet_NaN();
        bool lmi_positive          = false;
        double trivial_bound       = 0.0;
        double jacobian_norm_center = std::numeric_limits<double>::quiet_NaN();
        double sampled_lower_bound = 0.0;
        int n_samples              = 0;
        std::uint64_t seed         = 0;
        std::vector<std::string> violations;

        bool ok() const noexcept { return violations.empty(); }
    };

    struct VerifyOptions {
        int samples        = 2000;
        std::uint64_t seed = 0;
        bool recompute     = true; ///< rerun the certifier and compare every non-timing field
        double shrink      = boundary_shrink;
        double rel_tol     = 1e-9;
        Index eig_limit    = 512; ///< report the LMI eigenvalue only up to this order
    };

    namespace detail {

        inline bool close( double a, double b, double tol ) {
            if( std::isnan( a ) || std::isnan( b ) )
                return std::isnan( a ) && std::isnan( b );
            if( std::isinf( a ) || std::isinf( b ) )
                return a == b;
            return std::abs( a - b ) <= tol * std::max( { 1e-300, std::abs( a ), std::abs( b ) } );
        }

        inline bool close( const Vector &a, const Vector &b, double tol ) {
            if( a.size() != b.size() )
                return false;
            const double scale = std::max( a.size() ? a.cwiseAbs().maxCoeff() : 0.0,
                                           b.size() ? b.cwiseAbs().maxCoeff() : 0.0 );
            for( Index k = 0; k < a.size(); ++k ) {
                if( std::isnan( a( k ) ) || std::isnan( b( k ) ) ) {
                    if( !( std::isnan( a( k ) ) && std::isnan( b( k ) ) ) )
                        return false;
                    continue;
                }
                if( std::abs( a( k ) - b( k ) ) > tol * std::max( scale, 1e-300 ) )
                    return false;
            }
            return true;
        }

        /// Names of the fields where two certificates disagree; timings are
        /// ignored.
        inline std::vector<std::string> compare( const Certificate &x, const Certificate &y, double tol ) {
            std::vector<std::string> diff;
            auto num = [&]( const char *name, double a, double b ) {
                if( !close( a, b, tol ) )
                    diff.push_back( name );
            };
            num( "bound", x.bound, y.bound );
            num( "trivial_bound", x.trivial_bound, y.trivial_bound );
            num( "cap", x.cap, y.cap );
            if( x.schedule != y.schedule )
                diff.push_back( "variant_schedule" );
            if( !close( x.output_bound, y.output_bound, tol ) )
                diff.push_back( "output_bounds" );
            if( !close( x.output_lo, y.output_lo, tol ) || !close( x.output_hi, y.output_hi, tol ) )
                diff.push_back( "output_intervals" );
            if( x.per_layer.size() != y.per_layer.size() ) {
                diff.push_back( "per_layer (count)" );
                return diff;
            }
            for( std::size_t k = 0; k < x.per_layer.size(); ++k ) {
                const LayerRecord &a = x.per_layer[k];
                const LayerRecord &b = y.per_layer[k];
                const std::string at = "per_layer[" + std::to_string( k ) + "].";
                if( a.layer != b.layer )
                    diff.push_back( at + "layer" );
                if( a.skipped != b.skipped )
                    diff.push_back( at + "skipped" );
                if( !a.skipped && !b.skipped && a.method != b.method )
                    diff.push_back( at + "method" );
                if( !close( a.c, b.c, tol ) )
                    diff.push_back( at + "c" );
                if( !close( a.margin, b.margin, std::max( tol, 1e-6 ) ) )
                    diff.push_back( at + "margin" );
                const std::pair<const char *, std::pair<const Vector *, const Vector *>> vecs[] = {
                    { "lambda", { &a.lambda, &b.lambda } },       { "alpha", { &a.alpha, &b.alpha } },
                    { "beta", { &a.beta, &b.beta } },             { "range_lo", { &a.range_lo, &b.range_lo } },
                    { "range_hi", { &a.range_hi, &b.range_hi } }, { "neuron_bound", { &a.neuron_bound, &b.neuron_bound } },
                };
                for( const auto &[name, pv] : vecs )
                    if( !close( *pv.first, *pv.second, tol ) )
                        diff.push_back( at + name );
                if( a.fallback_log != b.fallback_log )
                    diff.push_back( at + "fallback_log" );
            }
            return diff;
        }

    } // namespace detail

    /// Re-checks a certificate against its network with independent oracles.
    inline OracleReport verify_certificate( const Network &net, const Certificate &cert, const VerifyOptions &o = {} ) {
        OracleReport rep;
        rep.seed = o.seed;
        const double slack = 1.0 + o.rel_tol;
        const double L     = cert.bound;
        auto fail          = [&]( std::string what ) { rep.violations.push_back( std::move( what ) ); };

        if( !std::isfinite( L ) || L < 0.0 )
            fail( "bound is not a finite nonnegative number" );

        const LmiChain chain = certificate_chain( net, cert );
        if( std::isfinite( L ) && L > 0.0 ) {
            const double f  = ( 1.0 / ( L * L ) ) * ( 1.0 - o.shrink );
            const SymMatrix g = assemble_full_lmi( chain, f );
            rep.lmi_positive  = positive_definite( g.matrix() );
            if( g.order() <= o.eig_limit )
                rep.lmi_min_eig = scaled_min_eig( g.matrix() );
            if( !rep.lmi_positive )
                fail( "full LMI is not positive definite at F = (1 - " + std::to_string( o.shrink ) + ") / L^2" );
        } else {
            rep.lmi_positive = true;
        }

        for( const LayerRecord &r : cert.per_layer )
            if( !r.skipped && !( r.margin > 0.0 ) )
                fail( "layer " + std::to_string( r.layer ) + " has a non-positive stage margin" );

        const LayerSelection &sel = cert.selection;
        rep.trivial_bound         = trivial_bound( slice( net, sel ) );
        if( L > rep.trivial_bound * slack )
            fail( "bound exceeds the trivial bound" );

        if( sel.p == 0 && o.samples > 0 ) {
            InputRegion region = cert.region;
            if( region.center.size() == 0 )
                region.center = Vector::Zero( net.input_dim() );
            if( region.global() )
                region.radius = 1.0;
            if( region.radius > 0.0 ) {
                rep.n_samples           = o.samples;
                rep.sampled_lower_bound = sampled_lower_bound( net, region, o.samples, o.seed, sel );
                if( rep.sampled_lower_bound > L * slack )
                    fail( "sampled lower bound exceeds the certified bound" );
            }
            rep.jacobian_norm_center = jacobian_lower_bound( net, region.center, sel );
            if( rep.jacobian_norm_center > L * slack )
                fail( "Jacobian norm at the center exceeds the certified bound" );
        }

        if( o.recompute ) {
            const Certificate again = certify( net, request_of( cert ) );
            for( const auto &field : detail::compare( again, cert, o.rel_tol ) )
                fail( "field differs from recomputation: " + field );
        }
        return rep;
    }

    inline json report_to_json( const OracleReport &r ) {
        json v = json::array();
        for( const auto &s : r.violations )
            v.push_back( s );
        return json{ { "lmi_min_eig", detail::number( r.lmi_min_eig ) },
                     { "lmi_positive", r.lmi_positive },
                     { "trivial_bound", detail::number( r.trivial_bound ) },
                     { "jacobian_norm_center", detail::number( r.jacobian_norm_center ) },
                     { "sampled_lower_bound", detail::number( r.sampled_lower_bound ) },
                     { "n_samples", r.n_samples },
                     { "seed", r.seed },
                     { "violations", std::move( v ) } };
    }

} // namespace lipcert

#endif // LIPCERT_VERIFY_HPP
