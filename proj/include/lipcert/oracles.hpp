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

#ifndef LIPCERT_ORACLES_HPP
#define LIPCERT_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <lipcert/certifier.hpp>

namespace lipcert {

    /// Linear chain of weights with slope bounds and multipliers for the
    /// hidden layers: weights.size() == bounds.size() + 1 == lambdas.size() + 1.
    struct LmiChain {
        std::vector<Matrix> weights;
        std::vector<LayerSlopeBounds> bounds;
        std::vector<Vector> lambdas;

        void validate() const {
            if( weights.empty() || bounds.size() + 1 != weights.size() || lambdas.size() + 1 != weights.size() )
                throw DimensionMismatch( "LMI chain: need N weights and N-1 bound and multiplier vectors" );
            for( std::size_t k = 0; k + 1 < weights.size(); ++k ) {
                const Index d = weights[k].rows();
                if( weights[k + 1].cols() != d || bounds[k].width() != d || lambdas[k].size() != d )
                    throw DimensionMismatch( "LMI chain: layer " + std::to_string( k + 1 ) + " does not conform" );
            }
        }
    };

    /// Block tridiagonal matrix with Lambda_0 = I:
    ///   P_0 = I + W_1^T Da Lambda_1 Db W_1
    ///   P_k = Lambda_k + W_{k+1}^T Da Lambda_{k+1} Db W_{k+1}
    ///   P_{N-1} = Lambda_{N-1} - F W_N^T W_N
    ///   R_k = -1/2 W_k^T (Da + Db) Lambda_k   between blocks k-1 and k.
    inline SymMatrix assemble_full_lmi( const LmiChain &chain, double f ) {
        chain.validate();
        const std::size_t n = chain.weights.size();
        std::vector<Index> offset( n + 1, 0 );
        for( std::size_t k = 0; k < n; ++k )
            offset[k + 1] = offset[k] + chain.weights[k].cols();
        const Index order = offset[n];
        Matrix g          = Matrix::Zero( order, order );
        for( std::size_t k = 0; k < n; ++k ) {
            const Index o = offset[k];
            const Index d = chain.weights[k].cols();
            auto block    = g.block( o, o, d, d );
            if( k == 0 )
                block = Matrix::Identity( d, d );
            else
                block = chain.lambdas[k - 1].asDiagonal();
            const Matrix &w = chain.weights[k];
            if( k + 1 < n ) {
                const LayerSlopeBounds &b = chain.bounds[k];
                const Vector &lam         = chain.lambdas[k];
                block += w.transpose() * b.product().cwiseProduct( lam ).asDiagonal() * w;
                const Matrix r = -0.5 * w.transpose() * b.sum().cwiseProduct( lam ).asDiagonal();
                g.block( o, offset[k + 1], d, w.rows() ) = r;
                g.block( offset[k + 1], o, w.rows(), d ) = r.transpose();
            } else {
                block -= f * ( w.transpose() * w );
            }
        }
        return SymMatrix( symmetrize( g ) );
    }

    /// Same matrix for a network, slicing to the selection first.
    inline SymMatrix assemble_full_lmi( const Network &net, const std::vector<LayerSlopeBounds> &bounds,
                                        const std::vector<Vector> &lambdas, double f,
                                        const std::optional<LayerSelection> &selection = std::nullopt ) {
        const Network sub = selection ? slice( net, *selection ) : net;
        LmiChain chain;
        for( const Layer &l : sub.layers() )
            chain.weights.push_back( l.weight );
        chain.bounds  = bounds;
        chain.lambdas = lambdas;
        return assemble_full_lmi( chain, f );
    }

    /// X_0..X_{N-2} > 0 and X_{N-1} - F W_N^T W_N > 0 via the recursion
    ///   X_0 = I + W_1^T Da Lambda_1 Db W_1
    ///   X_k = Lambda_k - 1/4 Lambda_k S_k W_k X_{k-1}^-1 W_k^T S_k Lambda_k
    ///         + W_{k+1}^T Da Lambda_{k+1} Db W_{k+1}.
    inline bool sequential_check( const LmiChain &chain, double f ) {
        chain.validate();
        const std::size_t n = chain.weights.size();
        auto coupling = [&]( std::size_t k ) -> Matrix {
            const Matrix &w = chain.weights[k];
            return w.transpose() * chain.bounds[k].product().cwiseProduct( chain.lambdas[k] ).asDiagonal() * w;
        };
        const Index d0 = chain.weights[0].cols();
        Matrix x       = Matrix::Identity( d0, d0 );
        if( n > 1 )
            x += coupling( 0 );
        for( std::size_t k = 1; k < n; ++k ) {
            if( !positive_definite( x ) )
                return false;
            const SpdFactor fx = factor_spd( SymMatrix( symmetrize( x ) ) );
            const Matrix ws =
                chain.bounds[k - 1].sum().cwiseProduct( chain.lambdas[k - 1] ).asDiagonal() * chain.weights[k - 1];
            x = Matrix( chain.lambdas[k - 1].asDiagonal() ) - 0.25 * quadratic_form( ws, fx );
            if( k + 1 < n )
                x += coupling( k );
        }
        const Matrix &wn = chain.weights[n - 1];
        return positive_definite( symmetrize( x - f * ( wn.transpose() * wn ) ) );
    }

    /// Chain actually certified: skipped layers are folded into the next
    /// weight using their (degenerate) slopes.
    inline LmiChain certificate_chain( const Network &net, const Certificate &cert ) {
        const LayerSelection &sel = cert.selection;
        sel.validate( net );
        if( static_cast<Index>( cert.per_layer.size() ) != sel.i - sel.p - 1 )
            throw DimensionMismatch( "certificate has " + std::to_string( cert.per_layer.size() )
                                     + " layer records, selection spans " + std::to_string( sel.i - sel.p - 1 ) );
        const Network sub = slice( net, sel );
        LmiChain chain;
        Matrix w = sub.weight( 1 );
        for( std::size_t k = 0; k < cert.per_layer.size(); ++k ) {
            const LayerRecord &r = cert.per_layer[k];
            const Matrix &next   = sub.weight( static_cast<Index>( k ) + 2 );
            if( r.alpha.size() != w.rows() || r.beta.size() != w.rows() )
                throw DimensionMismatch( "certificate slope vectors do not match layer " + std::to_string( r.layer ) );
            if( r.skipped ) {
                w = next * r.alpha.asDiagonal() * w;
                continue;
            }
            if( r.lambda.size() != w.rows() )
                throw DimensionMismatch( "certificate multipliers do not match layer " + std::to_string( r.layer ) );
            chain.weights.push_back( w );
            chain.bounds.emplace_back( r.alpha, r.beta );
            chain.lambdas.push_back( r.lambda );
            w = next;
        }
        chain.weights.push_back( w );
        return chain;
    }

    /// Uniform point in the l2 ball: Gaussian direction, radius * u^(1/d).
    template<class Rng>
    Vector sample_ball( const Vector &center, double radius, Rng &rng ) {
        std::normal_distribution<double> gauss( 0.0, 1.0 );
        std::uniform_real_distribution<double> unit( 0.0, 1.0 );
        const Index d = center.size();
        Vector dir( d );
        double nrm = 0.0;
        while( !( nrm > 0.0 ) ) {
            for( Index k = 0; k < d; ++k )
                dir( k ) = gauss( rng );
            nrm = dir.norm();
        }
        const double r = radius * std::pow( unit( rng ), 1.0 / static_cast<double>( d ) );
        return center + ( r / nrm ) * dir;
    }

    /// Largest ||f(z1) - f(z2)|| / ||z1 - z2|| over random pairs in the
    /// region. With a selection starting at layer 0, only the coordinates in
    /// K move and the value read is v^(i)_L.
    inline double sampled_lower_bound( const Network &net, const InputRegion &region, int n_pairs,
                                       std::uint64_t seed,
                                       const std::optional<LayerSelection> &selection = std::nullopt ) {
        if( n_pairs < 1 )
            throw InvalidArgument( "sampled_lower_bound: need at least one pair" );
        if( !( region.radius > 0.0 ) || !std::isfinite( region.radius ) )
            throw InvalidArgument( "sampled_lower_bound: radius must be finite and positive" );
        if( region.center.size() != net.input_dim() )
            throw DimensionMismatch( "sampled_lower_bound: center dimension mismatch" );
        LayerSelection sel = selection ? *selection : LayerSelection::full( net );
        sel.validate( net );
        if( sel.p != 0 )
            throw InvalidArgument( "sampled_lower_bound: selections must start at the input layer" );

        const Vector sub_center = detail::take( region.center, sel.inputs );
        auto lift               = [&]( const Vector &u ) {
            Vector z = region.center;
            for( std::size_t k = 0; k < sel.inputs.size(); ++k )
                z( sel.inputs[k] ) = u( static_cast<Index>( k ) );
            return z;
        };
        auto value = [&]( const Vector &z ) {
            const ForwardPass fp = forward( net, z );
            return detail::take( fp.preacts[static_cast<std::size_t>( sel.i - 1 )], sel.outputs );
        };

        std::mt19937_64 rng( seed );
        double best = 0.0;
        for( int k = 0; k < n_pairs; ++k ) {
            Vector a, b;
            double dist = 0.0;
            for( int attempt = 0; attempt < 100 && !( dist >= 1e-9 ); ++attempt ) {
                a    = sample_ball( sub_center, region.radius, rng );
                b    = sample_ball( sub_center, region.radius, rng );
                dist = ( a - b ).norm();
            }
            if( !( dist >= 1e-9 ) )
                continue;
            best = std::max( best, ( value( lift( a ) ) - value( lift( b ) ) ).norm() / dist );
        }
        return best;
    }

    /// sigma_max of the Jacobian at z; with a selection from layer 0, of the
    /// block d v^(i)_L / d z_K.
    inline double jacobian_lower_bound( const Network &net, const Vector &z,
                                        const std::optional<LayerSelection> &selection = std::nullopt ) {
        if( !selection )
            return spectral_norm( jacobian( net, z ) );
        const LayerSelection &sel = *selection;
        sel.validate( net );
        if( sel.p != 0 )
            throw InvalidArgument( "jacobian_lower_bound: selections must start at the input layer" );
        LayerSelection head = LayerSelection::full( net );
        head.i              = sel.i;
        head.outputs.resize( static_cast<std::size_t>( net.width( sel.i ) ) );
        for( std::size_t k = 0; k < head.outputs.size(); ++k )
            head.outputs[k] = static_cast<Index>( k );
        const Matrix j = jacobian( slice( net, head ), z );
        return spectral_norm( detail::take_columns( detail::take_rows( j, sel.outputs ), sel.inputs ) );
    }

} // namespace lipcert

#endif // LIPCERT_ORACLES_HPP
