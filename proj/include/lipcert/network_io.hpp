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

#ifndef LIPCERT_NETWORK_IO_HPP
#define LIPCERT_NETWORK_IO_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <lipcert/network.hpp>

namespace lipcert {

    using json = nlohmann::json;

    inline constexpr int network_format_version = 1;

    inline json activation_to_json( const ActivationSpec &a ) {
        return json{ { "kind", std::string( to_string( a.kind ) ) }, { "param", a.param } };
    }

    inline ActivationSpec activation_from_json( const json &j ) {
        ActivationSpec a;
        a.kind  = parse_activation_kind( j.at( "kind" ).get<std::string>() );
        a.param = j.value( "param", 0.0 );
        a.validate();
        return a;
    }

    /// {version, activation, layers:[{rows, cols, weights (row-major), bias}]}.
    /// Hidden layers whose activation differs from the file default carry
    /// their own "activation" entry.
    inline json network_to_json( const Network &net ) {
        json layers = json::array();
        for( Index i = 1; i <= net.depth(); ++i ) {
            const Layer &l = net.layer( i );
            std::vector<double> w;
            w.reserve( static_cast<std::size_t>( l.weight.size() ) );
            for( Index r = 0; r < l.weight.rows(); ++r )
                for( Index c = 0; c < l.weight.cols(); ++c )
                    w.push_back( l.weight( r, c ) );
            json entry{ { "rows", l.weight.rows() },
                        { "cols", l.weight.cols() },
                        { "weights", w },
                        { "bias", std::vector<double>( l.bias.data(), l.bias.data() + l.bias.size() ) } };
            if( i < net.depth() && !( l.activation == net.nominal_activation() ) )
                entry["activation"] = activation_to_json( l.activation );
            layers.push_back( std::move( entry ) );
        }
        return json{ { "version", network_format_version },
                     { "activation", activation_to_json( net.nominal_activation() ) },
                     { "layers", std::move( layers ) } };
    }

    inline Network network_from_json( const json &doc ) {
        if( !doc.is_object() )
            throw NetworkFormatError( 0, "network document must be a JSON object" );
        if( doc.contains( "version" ) && doc.at( "version" ).get<int>() != network_format_version )
            throw NetworkFormatError( 0, "unsupported network format version" );
        if( !doc.contains( "layers" ) || !doc.at( "layers" ).is_array() || doc.at( "layers" ).empty() )
            throw NetworkFormatError( 0, "missing or empty \"layers\" array" );
        ActivationSpec nominal{ ActivationKind::relu, 0.0 };
        if( doc.contains( "activation" ) )
            nominal = activation_from_json( doc.at( "activation" ) );

        const json &arr = doc.at( "layers" );
        std::vector<Layer> layers;
        for( std::size_t k = 0; k < arr.size(); ++k ) {
            const std::size_t n = k + 1;
            const bool last     = n == arr.size();
            const json &e       = arr[k];
            try {
                const auto rows = e.at( "rows" ).get<Index>();
                const auto cols = e.at( "cols" ).get<Index>();
                const auto w    = e.at( "weights" ).get<std::vector<double>>();
                const auto b    = e.at( "bias" ).get<std::vector<double>>();
                if( rows <= 0 || cols <= 0 )
                    throw NetworkFormatError( n, "rows and cols must be positive" );
                if( static_cast<Index>( w.size() ) != rows * cols )
                    throw NetworkFormatError( n, "expected " + std::to_string( rows * cols ) + " weights, found "
                                                     + std::to_string( w.size() ) );
                if( static_cast<Index>( b.size() ) != rows )
                    throw NetworkFormatError( n, "expected " + std::to_string( rows ) + " bias entries, found "
                                                     + std::to_string( b.size() ) );
                if( !layers.empty() && layers.back().weight.rows() != cols )
                    throw NetworkFormatError( n, "expects " + std::to_string( cols ) + " inputs but layer "
                                                     + std::to_string( k ) + " produces "
                                                     + std::to_string( layers.back().weight.rows() ) );
                Layer l;
                l.weight.resize( rows, cols );
                for( Index r = 0; r < rows; ++r )
                    for( Index c = 0; c < cols; ++c )
                        l.weight( r, c ) = w[static_cast<std::size_t>( r * cols + c )];
                l.bias       = Eigen::Map<const Vector>( b.data(), rows );
                l.activation = last ? ActivationSpec{ ActivationKind::identity, 0.0 } : nominal;
                if( e.contains( "activation" ) ) {
                    ActivationSpec own = activation_from_json( e.at( "activation" ) );
                    if( last && own.kind != ActivationKind::identity )
                        throw NetworkFormatError( n, "the output layer must be linear, found activation "
                                                         + std::string( to_string( own.kind ) ) );
                    l.activation = own;
                }
                layers.push_back( std::move( l ) );
            } catch( const json::exception &ex ) {
                throw NetworkFormatError( n, std::string( "malformed layer entry: " ) + ex.what() );
            } catch( const InvalidArgument &ex ) {
                throw NetworkFormatError( n, ex.what() );
            }
        }
        Network net( std::move( layers ), nominal );
        net.require_nonzero_weights();
        return net;
    }

    inline Network parse_network( const std::string &text ) {
        json doc;
        try {
            doc = json::parse( text );
        } catch( const json::parse_error &ex ) {
            throw NetworkFormatError( 0, std::string( "malformed JSON: " ) + ex.what() );
        }
        try {
            return network_from_json( doc );
        } catch( const json::exception &ex ) {
            throw NetworkFormatError( 0, std::string( "malformed network: " ) + ex.what() );
        }
    }

    inline Network load_network( const std::filesystem::path &path ) {
        std::ifstream in( path );
        if( !in )
            throw NetworkFormatError( 0, "cannot open " + path.string() );
        std::stringstream buf;
        buf << in.rdbuf();
        return parse_network( buf.str() );
    }

    inline void save_network( const Network &net, const std::filesystem::path &path ) {
        std::ofstream out( path );
        if( !out )
            throw InvalidArgument( "cannot write " + path.string() );
        out << network_to_json( net ).dump( 1 ) << '\n';
    }

} // namespace lipcert

#endif // LIPCERT_NETWORK_IO_HPP
