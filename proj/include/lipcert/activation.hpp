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

#ifndef LIPCERT_ACTIVATION_HPP
#define LIPCERT_ACTIVATION_HPP

#include <cmath>
#include <string>
#include <string_view>

#include <lipcert/errors.hpp>

namespace lipcert {

    enum class ActivationKind { relu, leaky_relu, tanh, sigmoid, elu, identity };

    /// Elementwise activation. `param` is the negative-side slope of
    /// leaky_relu and the scale of elu; other kinds ignore it.
    struct ActivationSpec {
        ActivationKind kind = ActivationKind::relu;
        double param        = 0.0;

        void validate() const {
            if( kind == ActivationKind::leaky_relu && !( param > 0.0 && param < 1.0 ) )
                throw InvalidArgument( "leaky_relu requires a slope in (0, 1)" );
            if( kind == ActivationKind::elu && !( param > 0.0 && std::isfinite( param ) ) )
                throw InvalidArgument( "elu requires a positive scale" );
        }

        friend bool operator==( const ActivationSpec &, const ActivationSpec & ) = default;
    };

    inline std::string_view to_string( ActivationKind kind ) {
        switch( kind ) {
            case ActivationKind::relu: return "relu";
            case ActivationKind::leaky_relu: return "leaky_relu";
            case ActivationKind::tanh: return "tanh";
            case ActivationKind::sigmoid: return "sigmoid";
            case ActivationKind::elu: return "elu";
            case ActivationKind::identity: return "identity";
        }
        return "unknown";
    }

    inline ActivationKind parse_activation_kind( std::string_view name ) {
        for( auto kind : { ActivationKind::relu, ActivationKind::leaky_relu, ActivationKind::tanh,
                           ActivationKind::sigmoid, ActivationKind::elu, ActivationKind::identity } )
            if( to_string( kind ) == name )
                return kind;
        throw UnknownActivation( std::string( name ) );
    }

    inline double sigmoid( double x ) {
        return x >= 0.0 ? 1.0 / ( 1.0 + std::exp( -x ) ) : std::exp( x ) / ( 1.0 + std::exp( x ) );
    }

    inline double activate( const ActivationSpec &a, double x ) {
        switch( a.kind ) {
            case ActivationKind::relu: return x > 0.0 ? x : 0.0;
            case ActivationKind::leaky_relu: return x > 0.0 ? x : a.param * x;
            case ActivationKind::tanh: return std::tanh( x );
            case ActivationKind::sigmoid: return sigmoid( x );
            case ActivationKind::elu: return x >= 0.0 ? x : a.param * std::expm1( x );
            case ActivationKind::identity: return x;
        }
        return x;
    }

    /// Derivative with the x > 0 branch taken at the kink x == 0.
    inline double derivative( const ActivationSpec &a, double x ) {
        switch( a.kind ) {
            case ActivationKind::relu: return x >= 0.0 ? 1.0 : 0.0;
            case ActivationKind::leaky_relu: return x >= 0.0 ? 1.0 : a.param;
            case ActivationKind::tanh: {
                const double t = std::tanh( x );
                return 1.0 - t * t;
            }
            case ActivationKind::sigmoid: {
                const double s = sigmoid( x );
                return s * ( 1.0 - s );
            }
            case ActivationKind::elu: return x >= 0.0 ? 1.0 : a.param * std::exp( x );
            case ActivationKind::identity: return 1.0;
        }
        return 1.0;
    }

} // namespace lipcert

#endif // LIPCERT_ACTIVATION_HPP
