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

#ifndef LIPCERT_CERTIFICATE_IO_HPP
#define LIPCERT_CERTIFICATE_IO_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include <lipcert/certifier.hpp>
#include <lipcert/network_io.hpp>

namespace lipcert {

    namespace detail {

        inline json number( double v ) { return std::isfinite( v ) ? json( v ) : json( nullptr ); }

        inline double number_from( const json &j ) {
            return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
        }

        inline json vector_json( const Vector &v ) {
            json a = json::array();
            for( Index k = 0; k < v.size(); ++k )
                a.push_back( number( v( k ) ) );
            return a;
        }

        inline Vector vector_from( const json &j ) {
            Vector v( static_cast<Index>( j.size() ) );
            for( std::size_t k = 0; k < j.size(); ++k )
                v( static_cast<Index>( k ) ) = number_from( j[k] );
            return v;
        }

        inline json indices_json( const std::vector<Index> &idx ) {
            json a = json::array();
            for( Index k : idx )
                a.push_back( k + 1 );
            return a;
        }

        inline std::vector<Index> indices_from( const json &j ) {
            std::vector<Index> out;
            for( const auto &e : j )
                out.push_back( e.get<Index>() - 1 );
            return out;
        }

    } // namespace detail

    /// FNV-1a over the canonical JSON text of the network.
    inline std::string network_fingerprint( const Network &net ) {
        const std::string text = network_to_json( net ).dump();
        std::uint64_t h        = 1469598103934665603ull;
        for( unsigned char ch : text ) {
            h ^= ch;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf( buf, sizeof buf, "%016llx", static_cast<unsigned long long>( h ) );
        return buf;
    }

    /// Selection indices are written 1-based.
    inline json certificate_to_json( const Certificate &c, const Network *net = nullptr ) {
        json sched = json::array();
        for( Variant v : c.schedule )
            sched.push_back( std::string( to_string( v ) ) );
        json layers = json::array();
        json stage_ms = json::array();
        for( const LayerRecord &r : c.per_layer ) {
            json log = json::array();
            for( const auto &line : r.fallback_log )
                log.push_back( line );
            layers.push_back( json{ { "layer", r.layer },
                                    { "skipped", r.skipped },
                                    { "method", r.skipped ? json( nullptr ) : json( std::string( to_string( r.method ) ) ) },
                                    { "lambda", detail::vector_json( r.lambda ) },
                                    { "c", detail::number( r.c ) },
                                    { "margin", detail::number( r.margin ) },
                                    { "alpha", detail::vector_json( r.alpha ) },
                                    { "beta", detail::vector_json( r.beta ) },
                                    { "range_lo", detail::vector_json( r.range_lo ) },
                                    { "range_hi", detail::vector_json( r.range_hi ) },
                                    { "neuron_bound", detail::vector_json( r.neuron_bound ) },
                                    { "fallback_log", std::move( log ) },
                                    { "time_ms", r.time_ms } } );
            stage_ms.push_back( r.time_ms );
        }
        json region{ { "center", detail::vector_json( c.region.center ) },
                     { "radius", c.region.global() ? json( "inf" ) : json( c.region.radius ) } };
        json out{ { "bound", detail::number( c.bound ) },
                  { "trivial_bound", detail::number( c.trivial_bound ) },
                  { "variant_schedule", std::move( sched ) },
                  { "cap", c.cap },
                  { "region", std::move( region ) },
                  { "selection",
                    json{ { "p", c.selection.p },
                          { "i", c.selection.i },
                          { "inputs", detail::indices_json( c.selection.inputs ) },
                          { "outputs", detail::indices_json( c.selection.outputs ) } } },
                  { "per_layer", std::move( layers ) },
                  { "output_bounds", detail::vector_json( c.output_bound ) },
                  { "output_intervals",
                    json{ { "lo", detail::vector_json( c.output_lo ) }, { "hi", detail::vector_json( c.output_hi ) } } },
                  { "timings_ms", json{ { "total", c.total_ms }, { "stages", std::move( stage_ms ) } } } };
        if( c.box )
            out["box"] = json{ { "lo", detail::vector_json( c.box->lo ) }, { "hi", detail::vector_json( c.box->hi ) } };
        if( net )
            out["network"] = json{ { "fingerprint", network_fingerprint( *net ) },
                                   { "depth", net->depth() },
                                   { "input_dim", net->input_dim() },
                                   { "output_dim", net->output_dim() } };
        return out;
    }

    inline Certificate certificate_from_json( const json &j ) {
        try {
            Certificate c;
            c.bound         = detail::number_from( j.at( "bound" ) );
            c.trivial_bound = detail::number_from( j.at( "trivial_bound" ) );
            for( const auto &v : j.at( "variant_schedule" ) )
                c.schedule.push_back( parse_variant( v.get<std::string>() ) );
            c.cap = j.at( "cap" ).get<double>();
            const json &region = j.at( "region" );
            c.region.center    = detail::vector_from( region.at( "center" ) );
            const json &rad    = region.at( "radius" );
            c.region.radius    = rad.is_string() && rad.get<std::string>() == "inf"
                                     ? std::numeric_limits<double>::infinity()
                                     : rad.get<double>();
            const json &sel    = j.at( "selection" );
            c.selection.p      = sel.at( "p" ).get<Index>();
            c.selection.i      = sel.at( "i" ).get<Index>();
            c.selection.inputs = detail::indices_from( sel.at( "inputs" ) );
            c.selection.outputs = detail::indices_from( sel.at( "outputs" ) );
            if( j.contains( "box" ) )
                c.box = PreactivationBox{ detail::vector_from( j.at( "box" ).at( "lo" ) ),
                                          detail::vector_from( j.at( "box" ).at( "hi" ) ) };
            for( const auto &e : j.at( "per_layer" ) ) {
                LayerRecord r;
                r.layer   = e.at( "layer" ).get<Index>();
                r.skipped = e.at( "skipped" ).get<bool>();
                if( !r.skipped )
                    r.method = parse_method( e.at( "method" ).get<std::string>() );
                r.lambda       = detail::vector_from( e.at( "lambda" ) );
                r.c            = detail::number_from( e.at( "c" ) );
                r.margin       = detail::number_from( e.at( "margin" ) );
                r.alpha        = detail::vector_from( e.at( "alpha" ) );
                r.beta         = detail::vector_from( e.at( "beta" ) );
                r.range_lo     = detail::vector_from( e.at( "range_lo" ) );
                r.range_hi     = detail::vector_from( e.at( "range_hi" ) );
                r.neuron_bound = detail::vector_from( e.at( "neuron_bound" ) );
                for( const auto &line : e.at( "fallback_log" ) )
                    r.fallback_log.push_back( line.get<std::string>() );
                r.time_ms = e.value( "time_ms", 0.0 );
                c.per_layer.push_back( std::move( r ) );
            }
            c.output_bound = detail::vector_from( j.at( "output_bounds" ) );
            c.output_lo    = detail::vector_from( j.at( "output_intervals" ).at( "lo" ) );
            c.output_hi    = detail::vector_from( j.at( "output_intervals" ).at( "hi" ) );
            c.total_ms     = j.at( "timings_ms" ).value( "total", 0.0 );
            return c;
        } catch( const json::exception &e ) {
            throw InvalidArgument( std::string( "malformed certificate: " ) + e.what() );
        }
    }

    /// Request that reproduces a certificate.
    inline CertRequest request_of( const Certificate &c ) {
        CertRequest req;
        req.selection = c.selection;
        req.region    = c.region;
        req.schedule  = c.schedule.empty() ? std::vector<Variant>{ Variant::automatic } : c.schedule;
        req.cap       = c.cap;
        req.box       = c.box;
        return req;
    }

} // namespace lipcert

#endif // LIPCERT_CERTIFICATE_IO_HPP
