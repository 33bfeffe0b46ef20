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

#ifndef LIPCERT_NETWORK_HPP
#define LIPCERT_NETWORK_HPP

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include <lipcert/activation.hpp>
#include <lipcert/linalg.hpp>
#include <lipcert/slopes.hpp>

namespace lipcert {

    /// One affine map v = W z + b followed by an elementwise activation.
    /// The last layer of a network always carries the identity.
    struct Layer {
        Matrix weight;
        Vector bias;
        ActivationSpec activation{ ActivationKind::identity, 0.0 };
    };

    /// Feedforward network z -> W_N phi(... phi(W_1 z + b_1) ...) + b_N.
    /// Layers are numbered 1..N; widths d_0..d_N.
    class Network {
    public:
        explicit Network( std::vector<Layer> layers ) : layers_( std::move( layers ) ) {
            nominal_ = layers_.size() > 1 ? layers_.front().activation : ActivationSpec{};
            check();
        }

        Network( std::vector<Layer> layers, ActivationSpec nominal )
            : layers_( std::move( layers ) ), nominal_( nominal ) {
            nominal_.validate();
            check();
        }

        /// Same activation on every hidden layer.
        static Network uniform( std::vector<std::pair<Matrix, Vector>> affine, ActivationSpec act ) {
            std::vector<Layer> layers;
            layers.reserve( affine.size() );
            for( std::size_t k = 0; k < affine.size(); ++k ) {
                const bool last = k + 1 == affine.size();
                layers.push_back( { std::move( affine[k].first ), std::move( affine[k].second ),
                                    last ? ActivationSpec{ ActivationKind::identity, 0.0 } : act } );
            }
            return Network( std::move( layers ), act );
        }

        Index depth() const noexcept { return static_cast<Index>( layers_.size() ); }

        /// 1-based.
        const Layer &layer( Index i ) const {
            if( i < 1 || i > depth() )
                throw InvalidArgument( "layer index " + std::to_string( i ) + " out of range 1.."
                                       + std::to_string( depth() ) );
            return layers_[static_cast<std::size_t>( i - 1 )];
        }
        const Matrix &weight( Index i ) const { return layer( i ).weight; }
        const Vector &bias( Index i ) const { return layer( i ).bias; }
        const ActivationSpec &activation( Index i ) const { return layer( i ).activation; }

        /// d_i for i = 0..N.
        Index width( Index i ) const {
            if( i == 0 )
                return layers_.front().weight.cols();
            return layer( i ).weight.rows();
        }
        Index input_dim() const { return width( 0 ); }
        Index output_dim() const { return width( depth() ); }

        const std::vector<Layer> &layers() const noexcept { return layers_; }

        /// Activation written as the file-level default.
        const ActivationSpec &nominal_activation() const noexcept { return nominal_; }

        void require_nonzero_weights() const {
            for( Index i = 1; i <= depth(); ++i )
                if( weight( i ).cwiseAbs().maxCoeff() == 0.0 )
                    throw NetworkFormatError( static_cast<std::size_t>( i ), "weight matrix is identically zero" );
        }

        friend bool operator==( const Network &a, const Network &b ) {
            if( a.depth() != b.depth() || !( a.nominal_ == b.nominal_ ) )
                return false;
            for( std::size_t k = 0; k < a.layers_.size(); ++k ) {
                const Layer &x = a.layers_[k];
                const Layer &y = b.layers_[k];
                if( x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols() || x.weight != y.weight
                    || x.bias != y.bias || !( x.activation == y.activation ) )
                    return false;
            }
            return true;
        }

    private:
        void check() const {
            if( layers_.empty() )
                throw NetworkFormatError( 0, "network has no layers" );
            for( std::size_t k = 0; k < layers_.size(); ++k ) {
                const auto n     = k + 1;
                const Layer &l   = layers_[k];
                if( l.weight.rows() == 0 || l.weight.cols() == 0 )
                    throw NetworkFormatError( n, "empty weight matrix" );
                if( l.bias.size() != l.weight.rows() )
                    throw NetworkFormatError( n, "bias has " + std::to_string( l.bias.size() ) + " entries, weight has "
                                                     + std::to_string( l.weight.rows() ) + " rows" );
                if( k > 0 && l.weight.cols() != layers_[k - 1].weight.rows() )
                    throw NetworkFormatError( n, "weight expects " + std::to_string( l.weight.cols() )
                                                     + " inputs but layer " + std::to_string( k ) + " produces "
                                                     + std::to_string( layers_[k - 1].weight.rows() ) );
                if( !l.weight.allFinite() || !l.bias.allFinite() )
                    throw NetworkFormatError( n, "non-finite weight or bias" );
                try {
                    l.activation.validate();
                } catch( const InvalidArgument &e ) {
                    throw NetworkFormatError( n, e.what() );
                }
            }
            if( layers_.back().activation.kind != ActivationKind::identity )
                throw NetworkFormatError( layers_.size(), "the output layer must be linear" );
        }

        std::vector<Layer> layers_;
        ActivationSpec nominal_;
    };

    struct ForwardPass {
        Vector output;
        std::vector<Vector> preacts; ///< v^(1)..v^(N)
    };

    inline ForwardPass forward( const Network &net, const Vector &z ) {
        if( z.size() != net.input_dim() )
            throw DimensionMismatch( "forward: input has " + std::to_string( z.size() ) + " entries, network expects "
                                     + std::to_string( net.input_dim() ) );
        ForwardPass out;
        out.preacts.reserve( net.layers().size() );
        Vector x = z;
        for( const Layer &l : net.layers() ) {
            Vector v = l.weight * x + l.bias;
            x        = v.unaryExpr( [&]( double t ) { return activate( l.activation, t ); } );
            out.preacts.push_back( std::move( v ) );
        }
        out.output = out.preacts.back();
        return out;
    }

    /// Pre- and post-activation values of every layer at one point.
    struct CenterValues {
        std::vector<Vector> pre;  ///< v^(1)..v^(N)
        std::vector<Vector> post; ///< z^(1)..z^(N); z^(N) = v^(N)
    };

    inline CenterValues center_values( const Network &net, const Vector &zc ) {
        ForwardPass fp = forward( net, zc );
        CenterValues cv;
        cv.post.reserve( fp.preacts.size() );
        for( Index i = 1; i <= net.depth(); ++i ) {
            const auto &act = net.activation( i );
            cv.post.push_back( fp.preacts[static_cast<std::size_t>( i - 1 )].unaryExpr(
                [&]( double t ) { return activate( act, t ); } ) );
        }
        cv.pre = std::move( fp.preacts );
        return cv;
    }

    /// d_N x d_0 Jacobian. Kinks take the right derivative.
    inline Matrix jacobian( const Network &net, const Vector &z ) {
        const ForwardPass fp = forward( net, z );
        Matrix j             = net.weight( net.depth() );
        for( Index i = net.depth() - 1; i >= 1; --i ) {
            const auto &act = net.activation( i );
            const Vector d  = fp.preacts[static_cast<std::size_t>( i - 1 )].unaryExpr(
                [&]( double t ) { return derivative( act, t ); } );
            j = ( j * d.asDiagonal() ) * net.weight( i );
        }
        return j;
    }

    /// Sub-network map z^(p)_K -> v^(i)_L. Neuron indices are 0-based.
    struct LayerSelection {
        Index p = 0;
        Index i = 0;
        std::vector<Index> inputs;
        std::vector<Index> outputs;

        static LayerSelection full( const Network &net ) {
            LayerSelection s;
            s.p = 0;
            s.i = net.depth();
            s.inputs.resize( static_cast<std::size_t>( net.input_dim() ) );
            s.outputs.resize( static_cast<std::size_t>( net.output_dim() ) );
            for( std::size_t k = 0; k < s.inputs.size(); ++k )
                s.inputs[k] = static_cast<Index>( k );
            for( std::size_t k = 0; k < s.outputs.size(); ++k )
                s.outputs[k] = static_cast<Index>( k );
            return s;
        }

        void validate( const Network &net ) const {
            if( p < 0 || i > net.depth() || p >= i )
                throw InvalidArgument( "selection: need 0 <= p < i <= " + std::to_string( net.depth() ) + ", got p="
                                       + std::to_string( p ) + " i=" + std::to_string( i ) );
            check_indices( inputs, net.width( p ), "input" );
            check_indices( outputs, net.width( i ), "output" );
        }

        bool is_full( const Network &net ) const {
            if( p != 0 || i != net.depth() )
                return false;
            auto identity = []( const std::vector<Index> &v, Index n ) {
                if( static_cast<Index>( v.size() ) != n )
                    return false;
                for( std::size_t k = 0; k < v.size(); ++k )
                    if( v[k] != static_cast<Index>( k ) )
                        return false;
                return true;
            };
            return identity( inputs, net.input_dim() ) && identity( outputs, net.output_dim() );
        }

    private:
        static void check_indices( const std::vector<Index> &idx, Index n, const char *what ) {
            if( idx.empty() )
                throw InvalidArgument( std::string( "selection: empty " ) + what + " index set" );
            std::vector<Index> sorted = idx;
            std::sort( sorted.begin(), sorted.end() );
            if( sorted.front() < 0 || sorted.back() >= n )
                throw InvalidArgument( std::string( "selection: " ) + what + " index out of range (width "
                                       + std::to_string( n ) + ")" );
            if( std::adjacent_find( sorted.begin(), sorted.end() ) != sorted.end() )
                throw InvalidArgument( std::string( "selection: duplicate " ) + what + " index" );
        }
    };

    namespace detail {

        inline Matrix take_columns( const Matrix &m, const std::vector<Index> &cols ) {
            Matrix out( m.rows(), static_cast<Index>( cols.size() ) );
            for( std::size_t k = 0; k < cols.size(); ++k )
                out.col( static_cast<Index>( k ) ) = m.col( cols[k] );
            return out;
        }

        inline Matrix take_rows( const Matrix &m, const std::vector<Index> &rows ) {
            Matrix out( static_cast<Index>( rows.size() ), m.cols() );
            for( std::size_t k = 0; k < rows.size(); ++k )
                out.row( static_cast<Index>( k ) ) = m.row( rows[k] );
            return out;
        }

        inline Vector take( const Vector &v, const std::vector<Index> &idx ) {
            Vector out( static_cast<Index>( idx.size() ) );
            for( std::size_t k = 0; k < idx.size(); ++k )
                out( static_cast<Index>( k ) ) = v( idx[k] );
            return out;
        }

    } // namespace detail

    /// Layers p+1..i with the first weight restricted to columns K and the
    /// last to rows L. The result ends in a linear layer.
    inline Network slice( const Network &net, const LayerSelection &sel ) {
        sel.validate( net );
        std::vector<Layer> layers;
        for( Index k = sel.p + 1; k <= sel.i; ++k )
            layers.push_back( net.layer( k ) );
        Layer &first = layers.front();
        first.weight = detail::take_columns( first.weight, sel.inputs );
        Layer &last  = layers.back();
        last.weight  = detail::take_rows( last.weight, sel.outputs );
        last.bias    = detail::take( last.bias, sel.outputs );
        last.activation = ActivationSpec{ ActivationKind::identity, 0.0 };
        return Network( std::move( layers ), net.nominal_activation() );
    }

    /// Folds layers start..start+count-1 into one affine layer, treating each
    /// intermediate activation as z = D_alpha v. `slopes` holds the bounds of
    /// layers start..start+count-2 and must be degenerate.
    inline std::pair<Matrix, Vector> merge_affine( const Network &net, Index start, Index count,
                                                   const std::vector<LayerSlopeBounds> &slopes ) {
        if( count < 1 || start < 1 || start + count - 1 > net.depth() )
            throw InvalidArgument( "merge_affine: layer range out of bounds" );
        if( static_cast<Index>( slopes.size() ) != count - 1 )
            throw InvalidArgument( "merge_affine: expected " + std::to_string( count - 1 ) + " slope vectors" );
        Matrix w = net.weight( start );
        Vector b = net.bias( start );
        for( Index k = 0; k + 1 < count; ++k ) {
            const LayerSlopeBounds &s = slopes[static_cast<std::size_t>( k )];
            if( s.width() != w.rows() )
                throw DimensionMismatch( "merge_affine: slope vector width does not match layer" );
            if( !s.all_equal() )
                throw InvalidArgument( "merge_affine: layer " + std::to_string( start + k )
                                       + " has non-degenerate slope bounds" );
            const Index next = start + k + 1;
            const Matrix wd  = net.weight( next ) * s.alpha.asDiagonal();
            w                = wd * w;
            b                = wd * b + net.bias( next );
        }
        return { std::move( w ), std::move( b ) };
    }

} // namespace lipcert

#endif // LIPCERT_NETWORK_HPP
