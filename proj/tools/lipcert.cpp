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

// lipcert command-line front end.
//
//   lipcert certify    --network net.json [--center c] [--radius r] [--variant v] ...
//   lipcert sweep      --network net.json --center c [--radii list] [--variant v]
//   lipcert gen-random --depth N --width W --activation kind --out net.json
//   lipcert neurons    --network net.json --layer i [--center c --radius r]
//   lipcert verify     --network net.json --certificate cert.json
//
// Exit status: 0 success, 1 input error, 2 verification failure.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <lipcert.hpp>

namespace {

    using namespace lipcert;

    constexpr int exit_ok     = 0;
    constexpr int exit_input  = 1;
    constexpr int exit_verify = 2;

    std::vector<std::string> split( const std::string &s, char sep ) {
        std::vector<std::string> out;
        std::stringstream in( s );
        std::string item;
        while( std::getline( in, item, sep ) ) {
            const auto b = item.find_first_not_of( " \t\r\n" );
            const auto e = item.find_last_not_of( " \t\r\n" );
            if( b != std::string::npos )
                out.push_back( item.substr( b, e - b + 1 ) );
        }
        return out;
    }

    double parse_number( const std::string &s ) {
        if( s == "inf" || s == "+inf" || s == "infinity" )
            return std::numeric_limits<double>::infinity();
        // allow simple fractions such as 1/625
        if( auto slash = s.find( '/' ); slash != std::string::npos )
            return parse_number( s.substr( 0, slash ) ) / parse_number( s.substr( slash + 1 ) );
        std::size_t used = 0;
        double v         = 0.0;
        try {
            v = std::stod( s, &used );
        } catch( const std::exception & ) {
            throw InvalidArgument( "not a number: \"" + s + "\"" );
        }
        if( used != s.size() )
            throw InvalidArgument( "not a number: \"" + s + "\"" );
        return v;
    }

    /// A vector given inline ("0.4,1.8,-0.5") or as a file holding a JSON
    /// array or whitespace/comma separated numbers.
    Vector parse_vector( const std::string &arg ) {
        std::string text = arg;
        if( std::filesystem::is_regular_file( arg ) ) {
            std::ifstream in( arg );
            std::stringstream buf;
            buf << in.rdbuf();
            text = buf.str();
            const auto first = text.find_first_not_of( " \t\r\n" );
            if( first != std::string::npos && text[first] == '[' ) {
                const auto arr = json::parse( text ).get<std::vector<double>>();
                return Eigen::Map<const Vector>( arr.data(), static_cast<Index>( arr.size() ) );
            }
            for( char &ch : text )
                if( ch == ' ' || ch == '\n' || ch == '\t' || ch == '\r' )
                    ch = ',';
        }
        const auto parts = split( text, ',' );
        Vector v( static_cast<Index>( parts.size() ) );
        for( std::size_t k = 0; k < parts.size(); ++k )
            v( static_cast<Index>( k ) ) = parse_number( parts[k] );
        return v;
    }

    std::vector<Index> parse_indices( const std::string &arg ) {
        std::vector<Index> out;
        for( const auto &p : split( arg, ',' ) ) {
            const double v = parse_number( p );
            if( v < 1 || v != std::floor( v ) )
                throw InvalidArgument( "indices are 1-based integers, got \"" + p + "\"" );
            out.push_back( static_cast<Index>( v ) - 1 );
        }
        return out;
    }

    std::vector<Variant> parse_schedule( const std::string &arg ) {
        std::vector<Variant> out;
        for( const auto &p : split( arg, ',' ) )
            out.push_back( parse_variant( p ) );
        if( out.empty() )
            throw InvalidArgument( "empty --variant" );
        return out;
    }

    void write_json( const std::string &path, const json &doc ) {
        std::ofstream out( path );
        if( !out )
            throw InvalidArgument( "cannot write " + path );
        out << doc.dump( 2 ) << '\n';
    }

    struct RegionArgs {
        std::string center;
        std::string radius = "inf";

        InputRegion region( const Network &net ) const {
            InputRegion r;
            r.radius = parse_number( radius );
            if( !center.empty() )
                r.center = parse_vector( center );
            if( !r.global() && center.empty() )
                throw InvalidArgument( "a finite --radius needs --center" );
            if( r.center.size() > 0 && r.center.size() != net.input_dim() )
                throw InvalidArgument( "--center has " + std::to_string( r.center.size() )
                                       + " entries, network input dimension is " + std::to_string( net.input_dim() ) );
            return r;
        }
    };

    struct CertifyArgs {
        std::string network;
        RegionArgs region;
        std::string variant = "auto";
        std::string layers;
        std::string inputs;
        std::string outputs;
        std::string box_lo;
        std::string box_hi;
        double cap   = default_cap;
        int samples  = 2000;
        std::uint64_t seed = 0;
        std::string out;
        bool verify = false;
    };

    void print_report( const OracleReport &rep ) {
        std::cout << "verification:\n"
                  << "  full LMI positive definite: " << ( rep.lmi_positive ? "yes" : "no" ) << '\n'
                  << "  LMI min eigenvalue (scaled): " << rep.lmi_min_eig << '\n'
                  << "  sampled lower bound:        " << rep.sampled_lower_bound << " (" << rep.n_samples
                  << " pairs, seed " << rep.seed << ")\n"
                  << "  Jacobian norm at center:    " << rep.jacobian_norm_center << '\n';
        for( const auto &v : rep.violations )
            std::cout << "  VIOLATION: " << v << '\n';
        std::cout << "  result: " << ( rep.ok() ? "pass" : "FAIL" ) << '\n';
    }

    int cmd_certify( const CertifyArgs &a ) {
        const Network net = load_network( a.network );
        CertRequest req;
        req.region   = a.region.region( net );
        req.schedule = parse_schedule( a.variant );
        req.cap      = a.cap;
        if( !a.layers.empty() ) {
            const auto parts = split( a.layers, ':' );
            if( parts.size() != 2 )
                throw InvalidArgument( "--layers expects p:i" );
            LayerSelection sel;
            sel.p = static_cast<Index>( parse_number( parts[0] ) );
            sel.i = static_cast<Index>( parse_number( parts[1] ) );
            if( sel.p < 0 || sel.i > net.depth() || sel.p >= sel.i )
                throw InvalidArgument( "--layers needs 0 <= p < i <= " + std::to_string( net.depth() ) );
            auto all = []( Index n ) {
                std::vector<Index> v( static_cast<std::size_t>( n ) );
                for( std::size_t k = 0; k < v.size(); ++k )
                    v[k] = static_cast<Index>( k );
                return v;
            };
            sel.inputs  = a.inputs.empty() ? all( net.width( sel.p ) ) : parse_indices( a.inputs );
            sel.outputs = a.outputs.empty() ? all( net.width( sel.i ) ) : parse_indices( a.outputs );
            req.selection = sel;
            if( !a.box_lo.empty() || !a.box_hi.empty() ) {
                if( a.box_lo.empty() || a.box_hi.empty() )
                    throw InvalidArgument( "--box-lo and --box-hi go together" );
                req.box = PreactivationBox{ parse_vector( a.box_lo ), parse_vector( a.box_hi ) };
            }
        } else if( !a.inputs.empty() || !a.outputs.empty() || !a.box_lo.empty() || !a.box_hi.empty() ) {
            throw InvalidArgument( "--inputs, --outputs and --box-* require --layers" );
        }

        const auto t0 = std::chrono::steady_clock::now();
        const Certificate cert = certify( net, req );
        const double ms = std::chrono::duration<double, std::milli>( std::chrono::steady_clock::now() - t0 ).count();

        std::cout << std::setprecision( 10 );
        std::cout << "bound: " << cert.bound << '\n'
                  << "trivial bound: " << cert.trivial_bound << '\n'
                  << "wall time: " << std::setprecision( 4 ) << ms << " ms\n"
                  << std::setprecision( 10 );

        json doc = certificate_to_json( cert, &net );
        int code = exit_ok;
        if( a.verify ) {
            VerifyOptions vo;
            vo.samples = a.samples;
            vo.seed    = a.seed;
            vo.recompute = false;
            const OracleReport rep = verify_certificate( net, cert, vo );
            print_report( rep );
            doc["verification"] = report_to_json( rep );
            if( !rep.ok() )
                code = exit_verify;
        }
        if( !a.out.empty() )
            write_json( a.out, doc );
        return code;
    }

    struct SweepArgs {
        std::string network;
        std::string center;
        std::string radii = "5,1,1/5,1/25,1/125,1/625,1/3125";
        std::string variant = "auto";
        double cap = default_cap;
        std::string out;
    };

    int cmd_sweep( const SweepArgs &a ) {
        const Network net = load_network( a.network );
        RegionArgs ra{ a.center, "1" };
        const Vector center = ra.region( net ).center;
        std::vector<double> radii;
        for( const auto &r : split( a.radii, ',' ) )
            radii.push_back( parse_number( r ) );
        if( radii.empty() )
            throw InvalidArgument( "--radii is empty" );
        const auto sched = parse_schedule( a.variant );
        if( sched.size() != 1 )
            throw InvalidArgument( "sweep takes a single --variant" );
        const auto certs    = sweep_radius( net, center, radii, sched.front(), a.cap );
        const double jac    = spectral_norm( jacobian( net, center ) );
        json arr            = json::array();
        std::cout << std::setw( 14 ) << "radius" << std::setw( 20 ) << "bound" << std::setw( 20 ) << "bound/jacobian"
                  << '\n';
        for( std::size_t k = 0; k < certs.size(); ++k ) {
            const double ratio = jac > 0.0 ? certs[k].bound / jac : std::numeric_limits<double>::infinity();
            std::cout << std::setprecision( 6 ) << std::setw( 14 ) << radii[k] << std::setprecision( 12 )
                      << std::setw( 20 ) << certs[k].bound << std::setw( 20 ) << ratio << '\n';
            json entry              = certificate_to_json( certs[k], &net );
            entry["jacobian_norm"]  = jac;
            entry["bound_over_jacobian"] = detail::number( ratio );
            arr.push_back( std::move( entry ) );
        }
        if( !a.out.empty() )
            write_json( a.out, arr );
        return exit_ok;
    }

    struct GenArgs {
        Index depth = 5;
        Index width = 10;
        Index input_dim  = 5;
        Index output_dim = 2;
        std::string activation = "relu";
        double param   = 0.0;
        double norm_lo = 0.8;
        double norm_hi = 2.5;
        std::uint64_t seed = 0;
        std::string out;
    };

    int cmd_gen_random( const GenArgs &a ) {
        RandomNetworkOptions o;
        o.depth      = a.depth;
        o.width      = a.width;
        o.input_dim  = a.input_dim;
        o.output_dim = a.output_dim;
        o.activation = { parse_activation_kind( a.activation ), a.param };
        if( o.activation.kind == ActivationKind::leaky_relu && a.param == 0.0 )
            o.activation.param = 0.01;
        if( o.activation.kind == ActivationKind::elu && a.param == 0.0 )
            o.activation.param = 1.0;
        o.norm_lo = a.norm_lo;
        o.norm_hi = a.norm_hi;
        o.seed    = a.seed;
        const Network net = random_network( o );
        save_network( net, a.out );
        std::cout << "wrote " << a.out << ": depth " << net.depth() << ", widths " << net.input_dim();
        for( Index i = 1; i <= net.depth(); ++i )
            std::cout << ( i == 1 ? " -> " : ", " ) << net.width( i );
        std::cout << '\n';
        return exit_ok;
    }

    struct NeuronArgs {
        std::string network;
        RegionArgs region;
        Index layer = 1;
        std::string variant = "auto";
        double cap = default_cap;
        std::string out;
    };

    int cmd_neurons( const NeuronArgs &a ) {
        const Network net = load_network( a.network );
        const Vector b    = neuron_bounds( net, a.region.region( net ), a.layer, parse_schedule( a.variant ), a.cap );
        std::cout << std::setprecision( 12 );
        for( Index k = 0; k < b.size(); ++k )
            std::cout << "neuron " << k + 1 << ": " << b( k ) << '\n';
        if( !a.out.empty() )
            write_json( a.out, json{ { "layer", a.layer }, { "bounds", detail::vector_json( b ) } } );
        return exit_ok;
    }

    struct VerifyArgs {
        std::string network;
        std::string certificate;
        int samples = 2000;
        std::uint64_t seed = 0;
        std::string out;
    };

    int cmd_verify( const VerifyArgs &a ) {
        const Network net = load_network( a.network );
        std::ifstream in( a.certificate );
        if( !in )
            throw InvalidArgument( "cannot open " + a.certificate );
        json doc;
        try {
            doc = json::parse( in );
        } catch( const json::exception &e ) {
            throw InvalidArgument( std::string( "malformed certificate JSON: " ) + e.what() );
        }
        if( doc.contains( "network" ) && doc["network"].contains( "fingerprint" )
            && doc["network"]["fingerprint"].get<std::string>() != network_fingerprint( net ) )
            throw InvalidArgument( "certificate was issued for a different network" );
        const Certificate cert = certificate_from_json( doc );
        VerifyOptions vo;
        vo.samples = a.samples;
        vo.seed    = a.seed;
        OracleReport rep;
        try {
            rep = verify_certificate( net, cert, vo );
        } catch( const DimensionMismatch &e ) {
            throw InvalidArgument( std::string( "certificate does not match the network: " ) + e.what() );
        }
        std::cout << std::setprecision( 10 ) << "bound: " << cert.bound << '\n';
        print_report( rep );
        if( !a.out.empty() )
            write_json( a.out, report_to_json( rep ) );
        return rep.ok() ? exit_ok : exit_verify;
    }

} // namespace

int main( int argc, char **argv ) {
    CLI::App app{ "Certified l2 Lipschitz bounds for feedforward networks" };
    app.require_subcommand( 1 );

    CertifyArgs ca;
    auto *certify_cmd = app.add_subcommand( "certify", "certify a network over a ball or globally" );
    certify_cmd->add_option( "-n,--network", ca.network, "network JSON file" )->required();
    certify_cmd->add_option( "--center", ca.region.center, "center as a file or comma list" );
    certify_cmd->add_option( "--radius", ca.region.radius, "ball radius, or inf for a global bound" );
    certify_cmd->add_option( "--variant", ca.variant, "acc, fast, cf or auto; comma list for per-layer choice" );
    certify_cmd->add_option( "--layers", ca.layers, "sub-network p:i" );
    certify_cmd->add_option( "--inputs", ca.inputs, "1-based input indices of layer p" );
    certify_cmd->add_option( "--outputs", ca.outputs, "1-based output indices of layer i" );
    certify_cmd->add_option( "--box-lo", ca.box_lo, "lower corner of a box on the pre-activations of layer p" );
    certify_cmd->add_option( "--box-hi", ca.box_hi, "upper corner of that box" );
    certify_cmd->add_option( "--cap", ca.cap, "multiplier cap, in units of the messenger scale" );
    certify_cmd->add_option( "--samples", ca.samples, "sampled pairs for --verify" );
    certify_cmd->add_option( "--seed", ca.seed, "sampling seed" );
    certify_cmd->add_option( "-o,--out", ca.out, "certificate JSON output" );
    certify_cmd->add_flag( "--verify", ca.verify, "run the independent oracles" );

    SweepArgs sa;
    auto *sweep_cmd = app.add_subcommand( "sweep", "certify over a list of radii" );
    sweep_cmd->add_option( "-n,--network", sa.network, "network JSON file" )->required();
    sweep_cmd->add_option( "--center", sa.center, "center as a file or comma list" )->required();
    sweep_cmd->add_option( "--radii", sa.radii, "comma list of radii (fractions allowed)" );
    sweep_cmd->add_option( "--variant", sa.variant, "acc, fast, cf or auto" );
    sweep_cmd->add_option( "--cap", sa.cap, "multiplier cap, in units of the messenger scale" );
    sweep_cmd->add_option( "-o,--out", sa.out, "JSON array output" );

    GenArgs ga;
    auto *gen_cmd = app.add_subcommand( "gen-random", "write a random network" );
    gen_cmd->add_option( "--depth", ga.depth, "number of weight layers" );
    gen_cmd->add_option( "--width", ga.width, "hidden width" );
    gen_cmd->add_option( "--input-dim", ga.input_dim, "input dimension" );
    gen_cmd->add_option( "--output-dim", ga.output_dim, "output dimension" );
    gen_cmd->add_option( "--activation", ga.activation, "relu, leaky_relu, tanh, sigmoid, elu or identity" );
    gen_cmd->add_option( "--param", ga.param, "leaky_relu slope or elu scale" );
    gen_cmd->add_option( "--norm-lo", ga.norm_lo, "smallest layer spectral norm" );
    gen_cmd->add_option( "--norm-hi", ga.norm_hi, "largest layer spectral norm" );
    gen_cmd->add_option( "--seed", ga.seed, "random seed" );
    gen_cmd->add_option( "-o,--out", ga.out, "output path" )->required();

    NeuronArgs na;
    auto *neuron_cmd = app.add_subcommand( "neurons", "per-neuron bounds at one layer" );
    neuron_cmd->add_option( "-n,--network", na.network, "network JSON file" )->required();
    neuron_cmd->add_option( "--layer", na.layer, "1-based layer index" )->required();
    neuron_cmd->add_option( "--center", na.region.center, "center as a file or comma list" );
    neuron_cmd->add_option( "--radius", na.region.radius, "ball radius, or inf" );
    neuron_cmd->add_option( "--variant", na.variant, "acc, fast, cf or auto" );
    neuron_cmd->add_option( "--cap", na.cap, "multiplier cap, in units of the messenger scale" );
    neuron_cmd->add_option( "-o,--out", na.out, "JSON output" );

    VerifyArgs va;
    auto *verify_cmd = app.add_subcommand( "verify", "re-check a certificate against its network" );
    verify_cmd->add_option( "-n,--network", va.network, "network JSON file" )->required();
    verify_cmd->add_option( "-c,--certificate", va.certificate, "certificate JSON file" )->required();
    verify_cmd->add_option( "--samples", va.samples, "sampled pairs" );
    verify_cmd->add_option( "--seed", va.seed, "sampling seed" );
    verify_cmd->add_option( "-o,--out", va.out, "report JSON output" );

    try {
        app.parse( argc, argv );
    } catch( const CLI::ParseError &e ) {
        return app.exit( e ) == 0 ? exit_ok : exit_input;
    }

    try {
        if( *certify_cmd )
            return cmd_certify( ca );
        if( *sweep_cmd )
            return cmd_sweep( sa );
        if( *gen_cmd ) {
            if( ga.depth < 1 || ga.width < 1 || ga.input_dim < 1 || ga.output_dim < 1 )
                throw InvalidArgument( "--depth, --width and dimensions must be positive" );
            return cmd_gen_random( ga );
        }
        if( *neuron_cmd )
            return cmd_neurons( na );
        if( *verify_cmd )
            return cmd_verify( va );
    } catch( const lipcert::Error &e ) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    } catch( const std::exception &e ) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_input;
    }
    return exit_input;
}
