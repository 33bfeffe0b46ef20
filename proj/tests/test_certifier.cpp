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
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace lipcert;
using namespace lipcert::testing;

namespace {

    Vector vec( std::initializer_list<double> xs ) {
        Vector v( static_cast<Index>( xs.size() ) );
        Index k = 0;
        for( double x : xs )
            v( k++ ) = x;
        return v;
    }

    double rel( double a, double b ) {
        if( a == b )
            return 0.0;
        return std::abs( a - b ) / std::max( std::abs( a ), std::abs( b ) );
    }

    /// Random net whose hidden layers 2 and 3 use the identity activation,
    /// plus the same net with layers 2..4 merged into one.
    std::pair<Network, Network> identity_run_pair( std::uint64_t seed, ActivationSpec act ) {
        std::mt19937_64 rng( seed );
        const Index w = 4 + static_cast<Index>( seed % 4 );
        std::vector<Layer> layers;
        const ActivationSpec id{ ActivationKind::identity, 0.0 };
        const ActivationSpec kinds[] = { act, id, id, act, act };
        for( Index i = 0; i < 5; ++i )
            layers.push_back( { random_matrix( w, i == 0 ? 5 : w, rng ) / std::sqrt( double( w ) ),
                                random_vector( w, rng, 0.5 ), kinds[i] } );
        layers.push_back( { random_matrix( 2, w, rng ), random_vector( 2, rng, 0.5 ), id } );
        const Network net( layers, act );

        const LayerSlopeBounds one( Vector::Ones( w ), Vector::Ones( w ) );
        const auto [mw, mb] = merge_affine( net, 2, 3, { one, one } );
        std::vector<Layer> merged{ layers[0], { mw, mb, layers[3].activation }, layers[4], layers[5] };
        return { net, Network( merged, act ) };
    }

} // namespace

TEST( Certify, ScalarGlobalAllVariants ) {
    for( Variant v : { Variant::cf, Variant::fast, Variant::acc, Variant::automatic } ) {
        const Certificate c = certify( scalar_relu(), request( v ) );
        EXPECT_NEAR( c.bound, 2.0, 1e-9 ) << to_string( v );
        EXPECT_DOUBLE_EQ( c.trivial_bound, 2.0 );
        ASSERT_EQ( c.per_layer.size(), 1u );
        EXPECT_FALSE( c.per_layer[0].skipped );
        EXPECT_NEAR( c.per_layer[0].lambda( 0 ), 0.5, 1e-4 );
    }
}

TEST( Certify, ScalarLocalSkipsAffineLayer ) {
    const Certificate c = certify( scalar_relu(), request( Variant::cf, 0.1, vec( { 1.0 } ) ) );
    ASSERT_EQ( c.per_layer.size(), 1u );
    EXPECT_TRUE( c.per_layer[0].skipped );
    EXPECT_NEAR( c.per_layer[0].range_lo( 0 ), 1.8, 1e-15 );
    EXPECT_NEAR( c.per_layer[0].range_hi( 0 ), 2.2, 1e-15 );
    EXPECT_NEAR( c.bound, 2.0, 1e-15 );
    EXPECT_NEAR( c.bound, jacobian_lower_bound( scalar_relu(), vec( { 1.0 } ) ), 1e-15 );
    EXPECT_NEAR( c.output_lo( 0 ), 2.0 - 0.2, 1e-14 );
    EXPECT_NEAR( c.output_hi( 0 ), 2.0 + 0.2, 1e-14 );
}

TEST( Certify, SingleLinearLayer ) {
    std::mt19937_64 rng( 1 );
    const Matrix w    = random_matrix( 3, 4, rng );
    const Network net = Network::uniform( { { w, Vector::Zero( 3 ) } }, {} );
    const Certificate c = certify( net, request( Variant::automatic ) );
    EXPECT_NEAR( c.bound, spectral_norm( w ), 1e-12 * spectral_norm( w ) );
    EXPECT_TRUE( c.per_layer.empty() );
}

TEST( Certify, InputErrors ) {
    const Network net = scalar_relu();
    EXPECT_THROW( certify( net, request( Variant::cf, 1.0, vec( { 1, 2 } ) ) ), DimensionMismatch );
    EXPECT_THROW( certify( net, request( Variant::cf, -1.0, vec( { 1 } ) ) ), InvalidArgument );
    CertRequest r = request( Variant::cf );
    r.schedule    = { Variant::cf, Variant::fast };
    EXPECT_THROW( certify( net, r ), InvalidArgument );
    r.schedule = { Variant::cf };
    r.cap      = 0.0;
    EXPECT_THROW( certify( net, r ), InvalidArgument );
}

TEST( Certify, PerStageSchedule ) {
    const Network net = small_net( 2, 4, 6, { ActivationKind::tanh, 0 } );
    CertRequest r     = request( Variant::cf );
    r.schedule        = { Variant::acc, Variant::fast, Variant::cf };
    const Certificate c = certify( net, r );
    ASSERT_EQ( c.per_layer.size(), 3u );
    EXPECT_EQ( c.per_layer[0].method, Method::acc );
    EXPECT_EQ( c.per_layer[1].method, Method::fast );
    EXPECT_EQ( c.per_layer[2].method, Method::cf );
}

TEST( NeuronBounds, FirstLayerRowNorms ) {
    Matrix w1( 3, 2 );
    w1 << 1, 2, 3, 4, 0, 0;
    const Network net = Network::uniform( { { w1, Vector::Zero( 3 ) }, { Matrix::Ones( 1, 3 ), Vector::Zero( 1 ) } },
                                          { ActivationKind::relu, 0 } );
    const Vector b = neuron_bounds( net, InputRegion::everywhere(), 1 );
    EXPECT_NEAR( b( 0 ), std::sqrt( 5.0 ), 1e-15 );
    EXPECT_NEAR( b( 1 ), 5.0, 1e-15 );
    EXPECT_EQ( b( 2 ), 0.0 );
}

TEST( NeuronBounds, LastLayerMatchesCertify ) {
    const Vector b = neuron_bounds( scalar_relu(), InputRegion::everywhere(), 2, { Variant::cf } );
    EXPECT_NEAR( b( 0 ), certify( scalar_relu(), request( Variant::cf ) ).bound, 1e-12 );
    EXPECT_THROW( neuron_bounds( scalar_relu(), InputRegion::everywhere(), 3 ), InvalidArgument );
}

TEST( Selection, FullSelectionIsBitIdentical ) {
    const Network net = small_net( 3, 4, 6, { ActivationKind::elu, 1.0 } );
    CertRequest r     = request( Variant::fast, 1.0, pattern_center( 5 ) );
    const Certificate plain = certify( net, r );
    r.selection             = LayerSelection::full( net );
    const Certificate sel   = certify( net, r );
    EXPECT_EQ( plain.bound, sel.bound );
    EXPECT_EQ( plain.output_bound, sel.output_bound );
}

TEST( Selection, SingleOutputMatchesNeuronBound ) {
    const Network net = small_net( 4, 4, 6, { ActivationKind::relu, 0 }, 5, 3 );
    const InputRegion region{ pattern_center( 5 ), 0.5 };
    const Vector nb = neuron_bounds( net, region, net.depth(), { Variant::fast } );
    for( Index l = 0; l < 3; ++l ) {
        CertRequest r = request( Variant::fast, region.radius, region.center );
        LayerSelection s = LayerSelection::full( net );
        s.outputs        = { l };
        r.selection      = s;
        EXPECT_LE( rel( certify( net, r ).bound, nb( l ) ), 1e-9 ) << "output " << l;
    }
}

TEST( Selection, ZeroInputColumnGivesZero ) {
    Matrix w1( 2, 2 );
    w1 << 1, 0, 2, 0;
    const Network net = Network::uniform( { { w1, Vector::Zero( 2 ) }, { Matrix::Ones( 1, 2 ), Vector::Zero( 1 ) } },
                                          { ActivationKind::relu, 0 } );
    CertRequest r = request( Variant::cf );
    r.selection   = LayerSelection{ 0, 2, { 1 }, { 0 } };
    EXPECT_NEAR( certify( net, r ).bound, 0.0, 1e-12 );
}

TEST( Selection, InnerSelectionBoundsSamplesAndUsesBox ) {
    const Network net = small_net( 5, 4, 6, { ActivationKind::tanh, 0 } );
    CertRequest r     = request( Variant::fast, 0.5, pattern_center( 5 ) );
    r.selection       = LayerSelection{ 1, 3, { 0, 2, 4 }, { 1, 2 } };
    const Certificate derived = certify( net, r );
    EXPECT_GT( derived.bound, 0.0 );
    EXPECT_LE( derived.bound, derived.trivial_bound * ( 1 + 1e-9 ) );

    CertRequest b = request( Variant::fast );
    b.selection   = r.selection;
    b.box         = PreactivationBox{ Vector::Constant( 6, -0.2 ), Vector::Constant( 6, 0.3 ) };
    const Certificate boxed = certify( net, b );
    EXPECT_GT( boxed.bound, 0.0 );
    EXPECT_LE( boxed.bound, boxed.trivial_bound * ( 1 + 1e-9 ) );
}

TEST( Sweep, SingleRadiusEqualsCertify ) {
    const Network net = small_net( 6, 3, 5, { ActivationKind::leaky_relu, 0.01 } );
    const auto list   = sweep_radius( net, pattern_center( 5 ), { 0.3 }, Variant::fast );
    ASSERT_EQ( list.size(), 1u );
    EXPECT_EQ( list[0].bound, certify( net, request( Variant::fast, 0.3, pattern_center( 5 ) ) ).bound );
}

TEST( Sweep, CollapsesToJacobianOnLeakyRelu ) {
    const Network net = small_net( 7, 5, 8, { ActivationKind::leaky_relu, 0.01 } );
    const Vector zc   = pattern_center( 5 );
    const double jac  = jacobian_lower_bound( net, zc );
    for( Variant v : { Variant::acc, Variant::fast, Variant::cf } ) {
        const double b = sweep_radius( net, zc, { 1.0 / 3125.0 }, v )[0].bound;
        EXPECT_LE( rel( b, jac ), 1e-8 ) << to_string( v );
        EXPECT_NEAR( certify( net, request( v, 0.0, zc ) ).bound, jac, 1e-12 * jac );
    }
}

// Deep saturated tanh nets have Jacobian norms far below 1/sqrt(cap); the
// bound must still collapse onto the Jacobian at a tiny radius.
TEST( Sweep, CollapsesToJacobianOnDeepTanh ) {
    const Network net = small_net( 4131, 30, 10, { ActivationKind::tanh, 0 } );
    const Vector zc   = pattern_center( 5 );
    const double jac  = jacobian_lower_bound( net, zc );
    ASSERT_LT( jac, 1e-3 );
    for( Variant v : { Variant::acc, Variant::fast } ) {
        const Certificate c = certify( net, request( v, 1e-4, zc ) );
        EXPECT_GE( c.bound, jac * ( 1 - 1e-9 ) ) << to_string( v );
        EXPECT_LE( c.bound, 1.05 * jac ) << to_string( v );
        EXPECT_TRUE( verify_certificate( net, c ).ok() ) << to_string( v );
    }
}

TEST( CertifierProperties, ValiditySandwich ) {
    const ActivationSpec acts[] = { { ActivationKind::relu, 0 },
                                    { ActivationKind::leaky_relu, 0.01 },
                                    { ActivationKind::tanh, 0 },
                                    { ActivationKind::sigmoid, 0 },
                                    { ActivationKind::elu, 1.0 } };
    std::uint64_t seed = 50;
    for( const auto &act : acts ) {
        const Network net = small_net( seed++, 4, 8, act );
        for( double radius : { std::numeric_limits<double>::infinity(), 1.0, 0.05 } ) {
            const InputRegion region{ pattern_center( 5 ), radius };
            // A global bound holds on any ball, so sample a wide one.
            const InputRegion sampled{ region.center, region.global() ? 2.0 : radius };
            const double lower = sampled_lower_bound( net, sampled, 500, seed );
            for( Variant v : { Variant::acc, Variant::fast, Variant::cf } ) {
                const Certificate c = certify( net, request( v, radius, pattern_center( 5 ) ) );
                EXPECT_GT( c.bound, 0.0 );
                EXPECT_LE( lower, c.bound ) << to_string( act.kind ) << " r=" << radius << " " << to_string( v );
                EXPECT_LE( c.bound, c.trivial_bound * ( 1 + 1e-9 ) );
                for( const auto &rec : c.per_layer )
                    EXPECT_TRUE( rec.skipped || rec.margin > 0.0 );
                if( !region.global() ) {
                    EXPECT_LE( jacobian_lower_bound( net, region.center ), c.bound * ( 1 + 1e-12 ) );
                }
            }
        }
    }
}

TEST( CertifierProperties, Deterministic ) {
    const Network net = small_net( 8, 4, 8, { ActivationKind::tanh, 0 } );
    const CertRequest r = request( Variant::automatic, 1.0, pattern_center( 5 ) );
    const Certificate a = certify( net, r ), b = certify( net, r );
    EXPECT_EQ( a.bound, b.bound );
    ASSERT_EQ( a.per_layer.size(), b.per_layer.size() );
    for( std::size_t k = 0; k < a.per_layer.size(); ++k )
        EXPECT_EQ( a.per_layer[k].lambda, b.per_layer[k].lambda );
}

TEST( CertifierProperties, SkipEquivalence ) {
    const ActivationSpec acts[] = { { ActivationKind::relu, 0 }, { ActivationKind::tanh, 0 } };
    for( std::uint64_t seed = 0; seed < 6; ++seed ) {
        const auto &act          = acts[seed % 2];
        const auto [net, merged] = identity_run_pair( seed, act );
        for( double radius : { std::numeric_limits<double>::infinity(), 0.5 } ) {
            for( Variant v : { Variant::fast, Variant::cf, Variant::acc } ) {
                const double a = certify( net, request( v, radius, pattern_center( 5 ) ) ).bound;
                const double b = certify( merged, request( v, radius, pattern_center( 5 ) ) ).bound;
                EXPECT_LE( rel( a, b ), 1e-9 ) << "seed " << seed << " r=" << radius << " " << to_string( v );
            }
        }
    }
}

TEST( CertifierProperties, AutoFallsBackToFastOnWideLayers ) {
    const Network net = small_net( 9, 2, 130, { ActivationKind::relu, 0 } );
    const Certificate c = certify( net, request( Variant::automatic ) );
    ASSERT_EQ( c.per_layer.size(), 1u );
    EXPECT_EQ( c.per_layer[0].method, Method::fast );
}
