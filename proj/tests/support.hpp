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

// Shared fixtures for the test binaries.

#ifndef LIPCERT_TESTS_SUPPORT_HPP
#define LIPCERT_TESTS_SUPPORT_HPP

#include <cstdint>
#include <random>

#include <lipcert.hpp>

namespace lipcert::testing {

    /// W1 = 2, W2 = 1, ReLU, zero biases.
    inline Network scalar_relu() {
        Matrix w1( 1, 1 ), w2( 1, 1 );
        w1 << 2.0;
        w2 << 1.0;
        return Network::uniform( { { w1, Vector::Zero( 1 ) }, { w2, Vector::Zero( 1 ) } },
                                 { ActivationKind::relu, 0.0 } );
    }

    inline Matrix random_matrix( Index rows, Index cols, std::mt19937_64 &rng ) {
        std::normal_distribution<double> g( 0.0, 1.0 );
        Matrix m( rows, cols );
        for( Index r = 0; r < rows; ++r )
            for( Index c = 0; c < cols; ++c )
                m( r, c ) = g( rng );
        return m;
    }

    inline Vector random_vector( Index n, std::mt19937_64 &rng, double scale = 1.0 ) {
        return scale * random_matrix( n, 1, rng ).col( 0 );
    }

    /// A A^T + n I, comfortably positive definite.
    inline Matrix random_spd( Index n, std::mt19937_64 &rng ) {
        const Matrix a = random_matrix( n, n, rng );
        return a * a.transpose() + static_cast<double>( n ) * Matrix::Identity( n, n );
    }

    inline Network small_net( std::uint64_t seed, Index depth, Index width, ActivationSpec act,
                              Index in = 5, Index out = 2 ) {
        RandomNetworkOptions o;
        o.depth      = depth;
        o.width      = width;
        o.input_dim  = in;
        o.output_dim = out;
        o.activation = act;
        o.seed       = seed;
        return random_network( o );
    }

    /// [0.4, 1.8, -0.5, -1.3, 0.9] repeated to length n.
    inline Vector pattern_center( Index n ) {
        static const double base[] = { 0.4, 1.8, -0.5, -1.3, 0.9 };
        Vector v( n );
        for( Index k = 0; k < n; ++k )
            v( k ) = base[k % 5];
        return v;
    }

    inline CertRequest request( Variant v, double radius = std::numeric_limits<double>::infinity(),
                                Vector center = {} ) {
        CertRequest r;
        r.schedule      = { v };
        r.region.radius = radius;
        r.region.center = std::move( center );
        return r;
    }

} // namespace lipcert::testing

#endif // LIPCERT_TESTS_SUPPORT_HPP
