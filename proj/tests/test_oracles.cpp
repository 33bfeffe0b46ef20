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

#include <Eigen/Eigenvalues>
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

    LmiChain scalar_chain( double lambda ) {
        LmiChain c;
        c.weights = { Matrix::Constant( 1, 1, 2.0 ), Matrix::Constant( 1, 1, 1.0 ) };
        c.bounds  = { LayerSlopeBounds( vec( { 0 } ), vec( { 1 } ) ) };
        c.lambdas = { vec( { lambda } ) };
        return c;
    }

    const ActivationSpec oracle_acts[] = { { ActivationKind::relu, 0 },
                                           { ActivationKind::leaky_relu, 0.01 },
                                           { ActivationKind::tanh, 0 },
                                           { ActivationKind::elu, 1.0 } };

} // namespace

TEST( FullLmi, ScalarHandAssembly ) {
    const SymMatrix g = assemble_full_lmi( scalar_chain( 0.5 ), 0.25 );
    Matrix expect( 2, 2 );
    expect << 1, -0.5, -0.5, 0.25;
    EXPECT_TRUE( g.matrix().isApprox( expect, 1e-15 ) );
    EXPECT_NEAR( min_eig_sym( g ), 0.0, 1e-15 );
}

// With F = 0 the scalar chain is [[1, -l], [-l, l]], positive iff l < 1.
TEST( FullLmi, ZeroOutputWeightIsPositive ) {
    std::mt19937_64 rng( 3 );
    std::uniform_real_distribution<double> u( 0.1, 0.95 );
    for( int t = 0; t < 10; ++t ) {
        LmiChain c = scalar_chain( u( rng ) );
        EXPECT_TRUE( positive_definite( assemble_full_lmi( c, 0.0 ).matrix() ) );
    }
}

TEST( FullLmi, SingleLayer ) {
    LmiChain c;
    std::mt19937_64 rng( 4 );
    const Matrix w = random_matrix( 2, 3, rng );
    c.weights      = { w };
    const SymMatrix g = assemble_full_lmi( c, 0.3 );
    EXPECT_TRUE( g.matrix().isApprox( Matrix::Identity( 3, 3 ) - 0.3 * w.transpose() * w, 1e-14 ) );
}

TEST( FullLmi, DimensionMismatch ) {
    LmiChain c = scalar_chain( 0.5 );
    c.lambdas  = { vec( { 0.5, 0.5 } ) };
    EXPECT_THROW( assemble_full_lmi( c, 0.1 ), DimensionMismatch );
}

TEST( TrivialBound, Examples ) {
    const Network id = Network::uniform( { { 2.0 * Matrix::Identity( 3, 3 ), Vector::Zero( 3 ) },
                                           { 2.0 * Matrix::Identity( 3, 3 ), Vector::Zero( 3 ) } },
                                         { ActivationKind::identity, 0 } );
    EXPECT_NEAR( trivial_bound( id ), 4.0, 1e-14 );
    EXPECT_NEAR( trivial_bound( scalar_relu() ), 2.0, 1e-15 );
    const double t = trivial_bound( small_net( 1, 6, 10, { ActivationKind::tanh, 0 } ) );
    EXPECT_TRUE( std::isfinite( t ) && t > 0.0 );
}

TEST( LowerBounds, LinearNetNeverExceedsNorm ) {
    std::mt19937_64 rng( 5 );
    const Matrix w    = random_matrix( 3, 4, rng );
    const Network net = Network::uniform( { { w, Vector::Zero( 3 ) } }, {} );
    const double s    = sampled_lower_bound( net, { Vector::Zero( 4 ), 1.0 }, 2000, 1 );
    EXPECT_LE( s, spectral_norm( w ) * ( 1 + 1e-12 ) );
    EXPECT_GT( s, 0.5 * spectral_norm( w ) );
    EXPECT_NEAR( jacobian_lower_bound( net, Vector::Zero( 4 ) ), spectral_norm( w ), 1e-12 );
}

TEST( LowerBounds, ScalarRelu ) {
    EXPECT_NEAR( sampled_lower_bound( scalar_relu(), { vec( { 1.0 } ), 0.1 }, 100, 2 ), 2.0, 1e-12 );
    EXPECT_NEAR( jacobian_lower_bound( scalar_relu(), vec( { 1.0 } ) ), 2.0, 1e-15 );
    EXPECT_EQ( jacobian_lower_bound( scalar_relu(), vec( { -1.0 } ) ), 0.0 );
}

TEST( LowerBounds, DeterministicPerSeed ) {
    const Network net = small_net( 6, 3, 6, { ActivationKind::tanh, 0 } );
    const InputRegion r{ pattern_center( 5 ), 1.0 };
    EXPECT_EQ( sampled_lower_bound( net, r, 300, 9 ), sampled_lower_bound( net, r, 300, 9 ) );
}

// Full-matrix definiteness agrees with the block elimination sequence.
TEST( OracleProperties, SequentialEquivalence ) {
    std::mt19937_64 rng( 2024 );
    std::uniform_int_distribution<Index> depth( 1, 5 ), width( 1, 8 );
    std::uniform_real_distribution<double> unit( 0.0, 1.0 );
    int positive = 0, disagreements = 0;
    for( int trial = 0; trial < 500; ++trial ) {
        const Index n = depth( rng );
        std::vector<Index> dims{ width( rng ) };
        for( Index k = 0; k < n; ++k )
            dims.push_back( width( rng ) );
        LmiChain c;
        const ActivationSpec &act = oracle_acts[static_cast<std::size_t>( trial ) % 4];
        for( Index k = 0; k < n; ++k ) {
            c.weights.push_back( random_matrix( dims[k + 1], dims[k], rng ) / std::sqrt( double( dims[k] ) ) );
            if( k + 1 < n ) {
                const Index d = dims[k + 1];
                Vector lo( d ), hi( d ), lam( d );
                for( Index j = 0; j < d; ++j ) {
                    lo( j )  = 4 * unit( rng ) - 2;
                    hi( j )  = lo( j ) + 2 * unit( rng );
                    lam( j ) = 0.05 + 3 * unit( rng );
                }
                c.bounds.push_back( refine_layer( act, { lo, hi } ) );
                c.lambdas.push_back( lam );
            }
        }
        const double f    = std::exp( std::log( 1e-3 ) + unit( rng ) * std::log( 1e4 ) );
        const bool full   = positive_definite( assemble_full_lmi( c, f ).matrix() );
        const bool staged = sequential_check( c, f );
        positive += full;
        disagreements += full != staged;
        EXPECT_EQ( full, staged ) << "trial " << trial;
    }
    EXPECT_EQ( disagreements, 0 );
    EXPECT_GT( positive, 50 );
    EXPECT_LT( positive, 450 );
}

TEST( OracleProperties, CertificatesPassFullLmiAndAreTight ) {
    int active = 0;
    std::uint64_t seed = 300;
    for( const auto &act : oracle_acts ) {
        const Network net = small_net( seed++, 4, 6, act );
        for( double radius : { std::numeric_limits<double>::infinity(), 1.0 } ) {
            for( Variant v : { Variant::acc, Variant::fast, Variant::cf } ) {
                const Certificate cert = certify( net, request( v, radius, pattern_center( 5 ) ) );
                const LmiChain chain   = certificate_chain( net, cert );
                const double f         = 1.0 / ( cert.bound * cert.bound );
                EXPECT_TRUE( positive_definite( assemble_full_lmi( chain, f * ( 1 - 1e-6 ) ).matrix() ) );
                EXPECT_TRUE( sequential_check( chain, f * ( 1 - 1e-6 ) ) );
                if( !positive_definite( assemble_full_lmi( chain, f * ( 1 + 1e-2 ) ).matrix() ) )
                    ++active;
            }
        }
    }
    EXPECT_GT( active, 0 );
}

TEST( Verify, AcceptsFreshCertificates ) {
    const Network net = small_net( 400, 4, 6, { ActivationKind::tanh, 0 } );
    for( Variant v : { Variant::acc, Variant::fast, Variant::cf, Variant::automatic } ) {
        const Certificate cert = certify( net, request( v, 1.0, pattern_center( 5 ) ) );
        const OracleReport rep = verify_certificate( net, cert );
        EXPECT_TRUE( rep.ok() ) << ( rep.violations.empty() ? "" : rep.violations.front() );
        EXPECT_LE( rep.sampled_lower_bound, cert.bound );
    }
    const Certificate g = certify( net, request( Variant::fast ) );
    EXPECT_TRUE( verify_certificate( net, g ).ok() );
}

TEST( Verify, JsonRoundTripKeepsEveryField ) {
    const Network net = small_net( 401, 4, 6, { ActivationKind::elu, 1.0 } );
    CertRequest r     = request( Variant::automatic, 0.7, pattern_center( 5 ) );
    const Certificate cert = certify( net, r );
    const json doc         = certificate_to_json( cert, &net );
    const Certificate back = certificate_from_json( json::parse( doc.dump() ) );
    EXPECT_TRUE( detail::compare( cert, back, 0.0 ).empty() );
    EXPECT_EQ( doc.at( "network" ).at( "fingerprint" ).get<std::string>(), network_fingerprint( net ) );
    EXPECT_TRUE( verify_certificate( net, back ).ok() );
}

TEST( Verify, HalvedBoundRejected ) {
    const Network net = small_net( 402, 3, 6, { ActivationKind::relu, 0 } );
    Certificate cert  = certify( net, request( Variant::fast, 1.0, pattern_center( 5 ) ) );
    cert.bound *= 0.5;
    const OracleReport rep = verify_certificate( net, cert );
    EXPECT_FALSE( rep.ok() );
    EXPECT_FALSE( rep.lmi_positive );
}

// Every single-field change to a result field must be caught. Wall-clock
// timings are measurements, not results.
TEST( Verify, RandomMutationsRejected ) {
    const Network net = small_net( 403, 4, 5, { ActivationKind::tanh, 0 } );
    const Certificate cert = certify( net, request( Variant::automatic, 1.0, pattern_center( 5 ) ) );
    const json flat        = certificate_to_json( cert, &net ).flatten();
    std::vector<std::string> paths;
    for( auto it = flat.begin(); it != flat.end(); ++it ) {
        const std::string &key = it.key();
        const bool input = key.rfind( "/cap", 0 ) == 0 || key.rfind( "/region", 0 ) == 0
                           || key.rfind( "/selection", 0 ) == 0 || key.rfind( "/timings_ms", 0 ) == 0
                           || key.rfind( "/network", 0 ) == 0 || key.rfind( "/variant_schedule", 0 ) == 0;
        const bool timing = key.size() >= 8 && key.compare( key.size() - 8, 8, "/time_ms" ) == 0;
        if( !input && !timing && ( it->is_number() || it->is_boolean() ) )
            paths.push_back( key );
    }
    ASSERT_GT( paths.size(), 20u );

    std::mt19937_64 rng( 7 );
    std::uniform_int_distribution<std::size_t> pick( 0, paths.size() - 1 );
    std::uniform_real_distribution<double> factor( 0.01, 1.0 );
    VerifyOptions vo;
    vo.samples = 200;
    for( int m = 0; m < 100; ++m ) {
        json doc                 = certificate_to_json( cert, &net ).flatten();
        const std::string &path  = paths[pick( rng )];
        json &leaf               = doc[path];
        if( leaf.is_boolean() )
            leaf = !leaf.get<bool>();
        else if( leaf.is_number_integer() )
            leaf = leaf.get<long long>() + 1;
        else
            leaf = leaf.get<double>() * ( 1.0 + factor( rng ) ) + 0.01;
        bool rejected = false;
        try {
            rejected = !verify_certificate( net, certificate_from_json( doc.unflatten() ), vo ).ok();
        } catch( const std::exception & ) {
            rejected = true;
        }
        EXPECT_TRUE( rejected ) << "mutation of " << path << " accepted";
    }
}
