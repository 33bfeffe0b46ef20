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

#ifndef LIPCERT_RANDOM_HPP
#define LIPCERT_RANDOM_HPP

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/SVD>

#include <lipcert/network.hpp>

namespace lipcert {

    struct RandomNetworkOptions {
        Index depth      = 5; ///< number of weight matrices N
        Index width      = 10;
        Index input_dim  = 5;
        Index output_dim = 2;
        ActivationSpec activation{ ActivationKind::relu, 0.0 };
        double norm_lo    = 0.8; ///< spectral norm of each weight is drawn from [norm_lo, norm_hi]
        double norm_hi    = 2.5;
        double bias_scale = 1.0; ///< biases uniform in [-bias_scale, bias_scale]
        std::uint64_t seed = 0;
    };

    inline double spectral_norm( const Matrix &w ) {
        if( w.size() == 0 )
            return 0.0;
        Eigen::JacobiSVD<Matrix> svd( w );
        return svd.singularValues()( 0 );
    }

    /// Gaussian weights rescaled so that each layer hits a spectral norm
    /// drawn uniformly from [norm_lo, norm_hi]. Deterministic per seed.
    inline Network random_network( const RandomNetworkOptions &o ) {
        if( o.depth < 1 || o.width < 1 || o.input_dim < 1 || o.output_dim < 1 )
            throw InvalidArgument( "random_network: depth and all widths must be positive" );
        if( !( o.norm_lo > 0.0 && o.norm_lo <= o.norm_hi ) )
            throw InvalidArgument( "random_network: need 0 < norm_lo <= norm_hi" );
        if( !( o.bias_scale >= 0.0 ) )
            throw InvalidArgument( "random_network: negative bias scale" );
        o.activation.validate();

        std::mt19937_64 rng( o.seed );
        std::normal_distribution<double> gauss( 0.0, 1.0 );
        std::uniform_real_distribution<double> unit( 0.0, 1.0 );

        std::vector<std::pair<Matrix, Vector>> affine;
        for( Index i = 1; i <= o.depth; ++i ) {
            const Index rows = i == o.depth ? o.output_dim : o.width;
            const Index cols = i == 1 ? o.input_dim : o.width;
            Matrix w( rows, cols );
            for( Index r = 0; r < rows; ++r )
                for( Index c = 0; c < cols; ++c )
                    w( r, c ) = gauss( rng );
            const double target = o.norm_lo + ( o.norm_hi - o.norm_lo ) * unit( rng );
            w *= target / spectral_norm( w );
            Vector b( rows );
            for( Index r = 0; r < rows; ++r )
                b( r ) = o.bias_scale * ( 2.0 * unit( rng ) - 1.0 );
            affine.emplace_back( std::move( w ), std::move( b ) );
        }
        return Network::uniform( std::move( affine ), o.activation );
    }

} // namespace lipcert

#endif // LIPCERT_RANDOM_HPP
