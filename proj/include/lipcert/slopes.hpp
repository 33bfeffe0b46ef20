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

#ifndef LIPCERT_SLOPES_HPP
#define LIPCERT_SLOPES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <lipcert/activation.hpp>
#include <lipcert/linalg.hpp>

namespace lipcert {

    /// j is treated as degenerate (alpha_j == beta_j) when
    /// beta_j - alpha_j <= 1e-12 * max(1, |beta_j|).
    inline constexpr double slope_equality_tolerance = 1e-12;

    /// Per-neuron slope interval [alpha_j, beta_j] of one layer, with the
    /// partition into degenerate (equal) and active indices.
    struct LayerSlopeBounds {
        Vector alpha;
        Vector beta;
        std::vector<Index> equal_set;
        std::vector<Index> active_set;

        LayerSlopeBounds() = default;

        LayerSlopeBounds( Vector a, Vector b ) : alpha( std::move( a ) ), beta( std::move( b ) ) {
            if( alpha.size() != beta.size() )
                throw DimensionMismatch( "slope bounds: alpha and beta differ in length" );
            for( Index j = 0; j < alpha.size(); ++j ) {
                if( !( alpha( j ) <= beta( j ) ) )
                    throw InvalidArgument( "slope bounds: alpha exceeds beta at neuron " + std::to_string( j + 1 ) );
                if( beta( j ) - alpha( j ) <= slope_equality_tolerance * std::max( 1.0, std::abs( beta( j ) ) ) )
                    equal_set.push_back( j );
                else
                    active_set.push_back( j );
            }
        }

        Index width() const noexcept { return alpha.size(); }
        bool all_equal() const noexcept { return active_set.empty(); }

        /// alpha + beta
        Vector sum() const { return alpha + beta; }
        /// alpha * beta elementwise
        Vector product() const { return alpha.cwiseProduct( beta ); }
    };

    /// Pre-activation box [lo, hi] of one layer.
    struct NeuronRanges {
        Vector lo;
        Vector hi;
    };

    /// Tightest [inf, sup] of the subdifferential of the activation over
    /// [lo, hi]. Infinite endpoints saturate to the global bounds.
    inline std::pair<double, double> refine_interval( const ActivationSpec &act, double lo, double hi ) {
        if( !( lo <= hi ) )
            throw InvalidArgument( "refine_interval: lo > hi" );
        switch( act.kind ) {
            case ActivationKind::identity: return { 1.0, 1.0 };
            case ActivationKind::relu:
            case ActivationKind::leaky_relu: {
                const double neg = act.kind == ActivationKind::relu ? 0.0 : act.param;
                if( hi < 0.0 )
                    return { neg, neg };
                if( lo > 0.0 )
                    return { 1.0, 1.0 };
                return { neg, 1.0 };
            }
            case ActivationKind::tanh: {
                auto slope = []( double x ) {
                    if( std::isinf( x ) )
                        return 0.0;
                    const double t = std::tanh( x );
                    return 1.0 - t * t;
                };
                const double far  = std::max( std::abs( lo ), std::abs( hi ) );
                const double near = ( lo <= 0.0 && hi >= 0.0 ) ? 0.0 : std::min( std::abs( lo ), std::abs( hi ) );
                return { slope( far ), slope( near ) };
            }
            case ActivationKind::sigmoid: {
                auto slope = []( double x ) {
                    if( std::isinf( x ) )
                        return 0.0;
                    const double s = sigmoid( x );
                    return s * ( 1.0 - s );
                };
                const double a = std::min( slope( lo ), slope( hi ) );
                const double b = ( lo <= 0.0 && hi >= 0.0 ) ? 0.25 : std::max( slope( lo ), slope( hi ) );
                return { a, std::min( b, 0.25 ) };
            }
            case ActivationKind::elu: {
                // slope is gamma*e^x on x < 0, 1 on x > 0, [min(gamma,1), max(gamma,1)] at 0
                const double g = act.param;
                double a       = std::numeric_limits<double>::infinity();
                double b       = -std::numeric_limits<double>::infinity();
                auto include   = [&]( double s ) {
                    a = std::min( a, s );
                    b = std::max( b, s );
                };
                if( lo < 0.0 ) {
                    include( std::isinf( lo ) ? 0.0 : g * std::exp( lo ) );
                    include( g * std::exp( std::min( hi, 0.0 ) ) );
                }
                if( lo <= 0.0 && hi >= 0.0 ) {
                    include( g );
                    include( 1.0 );
                }
                if( hi > 0.0 )
                    include( 1.0 );
                return { a, b };
            }
        }
        return { 0.0, 1.0 };
    }

    /// Catalog bounds valid for every input: the refinement over (-inf, inf).
    inline LayerSlopeBounds global_bounds( const ActivationSpec &act, Index width ) {
        const double inf = std::numeric_limits<double>::infinity();
        const auto [a, b] = refine_interval( act, -inf, inf );
        return LayerSlopeBounds( Vector::Constant( width, a ), Vector::Constant( width, b ) );
    }

    /// center -/+ radius * L elementwise.
    inline NeuronRanges propagate_ranges( const Vector &pre_center, const Vector &lipschitz, double radius ) {
        if( pre_center.size() != lipschitz.size() )
            throw DimensionMismatch( "propagate_ranges: center and bound vectors differ in length" );
        if( radius < 0.0 || ( lipschitz.array() < 0.0 ).any() )
            throw InvalidArgument( "propagate_ranges: negative radius or bound" );
        Vector half = radius * lipschitz;
        if( radius == 0.0 )
            half.setZero();
        for( Index j = 0; j < half.size(); ++j )
            if( lipschitz( j ) == 0.0 )
                half( j ) = 0.0;
        return { pre_center - half, pre_center + half };
    }

    inline LayerSlopeBounds refine_layer( const ActivationSpec &act, const NeuronRanges &ranges ) {
        if( ranges.lo.size() != ranges.hi.size() )
            throw DimensionMismatch( "refine_layer: lo and hi differ in length" );
        Vector a( ranges.lo.size() ), b( ranges.lo.size() );
        for( Index j = 0; j < a.size(); ++j )
            std::tie( a( j ), b( j ) ) = refine_interval( act, ranges.lo( j ), ranges.hi( j ) );
        return LayerSlopeBounds( std::move( a ), std::move( b ) );
    }

    /// Widens each interval so that alpha_j * beta_j == 0: nonnegative pairs
    /// move alpha to 0, nonpositive pairs move beta to 0.
    inline LayerSlopeBounds adjust_for_cf( const LayerSlopeBounds &bounds ) {
        Vector a = bounds.alpha, b = bounds.beta;
        for( Index j = 0; j < a.size(); ++j ) {
            if( a( j ) >= 0.0 )
                a( j ) = 0.0;
            else if( b( j ) <= 0.0 )
                b( j ) = 0.0;
            else
                throw InvalidArgument( "adjust_for_cf: slope interval straddles zero at neuron "
                                       + std::to_string( j + 1 ) );
        }
        return LayerSlopeBounds( std::move( a ), std::move( b ) );
    }

} // namespace lipcert

#endif // LIPCERT_SLOPES_HPP
