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

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace lipcert;
using namespace lipcert::testing;

namespace {

    const ActivationSpec relu{ ActivationKind::relu, 0.0 };
    const ActivationSpec tanh_act{ ActivationKind::tanh, 0.0 };
    const ActivationSpec sigmoid_act{ ActivationKind::sigmoid, 0.0 };

    Vector vec( std::initializer_list<double> xs ) {
        Vector v( static_cast<Index>( xs.size() ) );
        Index k = 0;
        for( double x : xs )
            v( k++ ) = x;
        return v;
    }

    const ActivationSpec catalog[] = { { ActivationKind::relu, 0.0 },    { ActivationKind::leaky_relu, 0.01 },
                                       { ActivationKind::tanh, 0.0 },    { ActivationKind::sigmoid, 0.0 },
                                       { ActivationKind::elu, 1.0 },     { ActivationKind::identity, 0.0 } };

} // namespace

TEST( GlobalBounds, Catalog ) {
    auto relu_b = global_bounds( relu, 3 );
    EXPECT_EQ( relu_b.alpha, Vector::Zero( 3 ) );
    EXPECT_EQ( relu_b.beta, Vector::Ones( 3 ) );
    auto leaky = global_bounds( { ActivationKind::leaky_relu, 0.01 }, 2 );
    EXPECT_DOUBLE_EQ( leaky.alpha( 0 ), 0.01 );
    EXPECT_DOUBLE_EQ( leaky.beta( 0 ), 1.0 );
    auto id = global_bounds( { ActivationKind::identity, 0.0 }, 2 );
    EXPECT_TRUE( id.all_equal() );
    EXPECT_DOUBLE_EQ( id.alpha( 1 ), 1.0 );
    auto sig = global_bounds( sigmoid_act, 1 );
    EXPECT_DOUBLE_EQ( sig.alpha( 0 ), 0.0 );
    EXPECT_DOUBLE_EQ( sig.beta( 0 ), 0.25 );
    auto th = global_bounds( tanh_act, 1 );
    EXPECT_DOUBLE_EQ( th.alpha( 0 ), 0.0 );
    EXPECT_DOUBLE_EQ( th.beta( 0 ), 1.0 );
}

TEST( RefineInterval, Examples ) {
    auto [a0, b0] = refine_interval( relu, -1.0, 2.0 );
    EXPECT_EQ( a0, 0.0 );
    EXPECT_EQ( b0, 1.0 );

    auto [a1, b1] = refine_interval( tanh_act, 1.0, 2.0 );
    EXPECT_NEAR( a1, 1.0 - std::pow( std::tanh( 2.0 ), 2 ), 1e-15 );
    EXPECT_NEAR( b1, 1.0 - std::pow( std::tanh( 1.0 ), 2 ), 1e-15 );
    EXPECT_NEAR( a1, 0.070651, 1e-6 );
    EXPECT_NEAR( b1, 0.419974, 1e-6 );

    auto [a2, b2] = refine_interval( sigmoid_act, -1.0, 1.0 );
    EXPECT_NEAR( a2, 0.196612, 1e-6 );
    EXPECT_DOUBLE_EQ( b2, 0.25 );

    auto [a3, b3] = refine_interval( relu, 1.0, 2.0 );
    EXPECT_EQ( a3, 1.0 );
    EXPECT_EQ( b3, 1.0 );
}

TEST( RefineInterval, EluFollowsInfimumRule ) {
    const ActivationSpec elu{ ActivationKind::elu, 1.0 };
    auto [a, b] = refine_interval( elu, -1.0, 0.5 );
    EXPECT_NEAR( a, std::exp( -1.0 ), 1e-15 );
    EXPECT_EQ( b, 1.0 );
    auto [an, bn] = refine_interval( elu, -2.0, -1.0 );
    EXPECT_NEAR( an, std::exp( -2.0 ), 1e-15 );
    EXPECT_NEAR( bn, std::exp( -1.0 ), 1e-15 );
}

// With a scale above 1 the left derivative at 0 is the largest slope.
TEST( RefineInterval, EluLargeScale ) {
    const ActivationSpec elu{ ActivationKind::elu, 2.0 };
    auto [a, b] = refine_interval( elu, -1.0, 0.5 );
    EXPECT_NEAR( a, 2.0 * std::exp( -1.0 ), 1e-15 );
    EXPECT_EQ( b, 2.0 );
    auto [ap, bp] = refine_interval( elu, 0.5, 1.0 );
    EXPECT_EQ( ap, 1.0 );
    EXPECT_EQ( bp, 1.0 );
}

TEST( RefineInterval, SigmoidAwayFromZero ) {
    auto [a, b] = refine_interval( sigmoid_act, 1.0, 3.0 );
    const double s1 = sigmoid( 1.0 ), s3 = sigmoid( 3.0 );
    EXPECT_NEAR( a, s3 * ( 1 - s3 ), 1e-15 );
    EXPECT_NEAR( b, s1 * ( 1 - s1 ), 1e-15 );
}

TEST( RefineInterval, InfiniteEndpointsSaturate ) {
    const double inf = std::numeric_limits<double>::infinity();
    for( const auto &act : catalog ) {
        auto [a, b] = refine_interval( act, -inf, inf );
        auto g      = global_bounds( act, 1 );
        EXPECT_EQ( a, g.alpha( 0 ) ) << to_string( act.kind );
        EXPECT_EQ( b, g.beta( 0 ) ) << to_string( act.kind );
        EXPECT_TRUE( std::isfinite( a ) && std::isfinite( b ) );
    }
}

TEST( PropagateRanges, Examples ) {
    auto r = propagate_ranges( vec( { 0.5 } ), vec( { 2.0 } ), 0.1 );
    EXPECT_NEAR( r.lo( 0 ), 0.3, 1e-15 );
    EXPECT_NEAR( r.hi( 0 ), 0.7, 1e-15 );
    auto d = propagate_ranges( vec( { 0.5, -1 } ), vec( { 2.0, 3.0 } ), 0.0 );
    EXPECT_EQ( d.lo, d.hi );
    auto z = propagate_ranges( vec( { 0.5 } ), vec( { 0.0 } ), 10.0 );
    EXPECT_EQ( z.lo( 0 ), 0.5 );
    EXPECT_EQ( z.hi( 0 ), 0.5 );
}

TEST( RefineLayer, PartitionFollowsRanges ) {
    auto all_pos = refine_layer( relu, { vec( { 0.1, 1.0 } ), vec( { 0.5, 2.0 } ) } );
    EXPECT_TRUE( all_pos.all_equal() );
    EXPECT_EQ( all_pos.alpha, Vector::Ones( 2 ) );
    auto straddle = refine_layer( relu, { vec( { -0.1, -1.0 } ), vec( { 0.5, 2.0 } ) } );
    EXPECT_EQ( straddle.active_set, ( std::vector<Index>{ 0, 1 } ) );
    auto mixed = refine_layer( relu, { vec( { -0.1, 1.0, -3.0 } ), vec( { 0.5, 2.0, -2.0 } ) } );
    EXPECT_EQ( mixed.equal_set, ( std::vector<Index>{ 1, 2 } ) );
    EXPECT_EQ( mixed.active_set, ( std::vector<Index>{ 0 } ) );
}

TEST( AdjustForCf, Examples ) {
    auto a = adjust_for_cf( LayerSlopeBounds( vec( { 0.3, -0.5, 0.0 } ), vec( { 0.9, -0.1, 1.0 } ) ) );
    EXPECT_EQ( a.alpha, vec( { 0.0, -0.5, 0.0 } ) );
    EXPECT_EQ( a.beta, vec( { 0.9, 0.0, 1.0 } ) );
}

TEST( SlopeProperties, ProductNonnegativeAndPartition ) {
    std::mt19937_64 rng( 5 );
    std::uniform_real_distribution<double> u( -4.0, 4.0 );
    for( const auto &act : catalog ) {
        for( int t = 0; t < 200; ++t ) {
            double lo = u( rng ), hi = u( rng );
            if( lo > hi )
                std::swap( lo, hi );
            auto [a, b] = refine_interval( act, lo, hi );
            EXPECT_LE( a, b );
            EXPECT_GE( a * b, 0.0 );
        }
        auto l = refine_layer( act, { vec( { -1, 0.5, 2 } ), vec( { 1, 0.6, 3 } ) } );
        EXPECT_EQ( l.equal_set.size() + l.active_set.size(), 3u );
    }
}

TEST( SlopeProperties, Nesting ) {
    std::mt19937_64 rng( 6 );
    std::uniform_real_distribution<double> u( -3.0, 3.0 ), f( 0.0, 1.0 );
    for( const auto &act : catalog ) {
        for( int t = 0; t < 300; ++t ) {
            double lo = u( rng ), hi = u( rng );
            if( lo > hi )
                std::swap( lo, hi );
            const double ilo = lo + f( rng ) * ( hi - lo );
            const double ihi = ilo + f( rng ) * ( hi - ilo );
            auto [ao, bo] = refine_interval( act, lo, hi );
            auto [ai, bi] = refine_interval( act, ilo, ihi );
            EXPECT_GE( ai, ao - 1e-15 ) << to_string( act.kind );
            EXPECT_LE( bi, bo + 1e-15 ) << to_string( act.kind );
        }
    }
}

TEST( SlopeProperties, CfAdjustmentOnlyWidens ) {
    std::mt19937_64 rng( 7 );
    std::uniform_real_distribution<double> u( -3.0, 3.0 );
    for( const auto &act : catalog ) {
        for( int t = 0; t < 100; ++t ) {
            double lo = u( rng ), hi = u( rng );
            if( lo > hi )
                std::swap( lo, hi );
            auto [a, b] = refine_interval( act, lo, hi );
            const LayerSlopeBounds src( vec( { a } ), vec( { b } ) );
            const LayerSlopeBounds adj = adjust_for_cf( src );
            EXPECT_LE( adj.alpha( 0 ), a );
            EXPECT_GE( adj.beta( 0 ), b );
            EXPECT_EQ( adj.alpha( 0 ) * adj.beta( 0 ), 0.0 );
        }
    }
}

// Secant slopes between sampled pre-activations stay inside the refined
// bounds recorded in a local certificate.
TEST( SlopeProperties, SecantSoundness ) {
    const ActivationSpec acts[] = { { ActivationKind::relu, 0.0 },
                                    { ActivationKind::leaky_relu, 0.01 },
                                    { ActivationKind::tanh, 0.0 },
                                    { ActivationKind::sigmoid, 0.0 },
                                    { ActivationKind::elu, 1.0 } };
    std::uint64_t seed = 100;
    for( const auto &act : acts ) {
        const Network net     = small_net( seed++, 4, 8, act );
        const Vector center   = pattern_center( 5 );
        const double radius   = 0.5;
        const Certificate cert = certify( net, request( Variant::fast, radius, center ) );
        std::mt19937_64 rng( seed );
        std::vector<ForwardPass> passes;
        for( int s = 0; s < 1000; ++s )
            passes.push_back( forward( net, sample_ball( center, radius, rng ) ) );
        for( const auto &rec : cert.per_layer ) {
            const std::size_t layer = static_cast<std::size_t>( rec.layer - 1 );
            for( std::size_t s = 0; s + 1 < passes.size(); ++s ) {
                const Vector &v1 = passes[s].preacts[layer];
                const Vector &v2 = passes[s + 1].preacts[layer];
                for( Index j = 0; j < v1.size(); ++j ) {
                    if( std::abs( v1( j ) - v2( j ) ) < 1e-6 )
                        continue;
                    const double slope =
                        ( activate( act, v1( j ) ) - activate( act, v2( j ) ) ) / ( v1( j ) - v2( j ) );
                    ASSERT_GE( slope, rec.alpha( j ) - 1e-6 ) << to_string( act.kind ) << " layer " << rec.layer;
                    ASSERT_LE( slope, rec.beta( j ) + 1e-6 ) << to_string( act.kind ) << " layer " << rec.layer;
                }
            }
        }
    }
}
