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

#ifndef LIPCERT_CERTIFIER_HPP
#define LIPCERT_CERTIFIER_HPP

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <lipcert/network.hpp>
#include <lipcert/random.hpp>
#include <lipcert/slopes.hpp>
#include <lipcert/stage.hpp>

namespace lipcert {

    /// Ball B(center, radius) in l2. An infinite radius requests a global
    /// certificate; the center may then be empty.
    struct InputRegion {
        Vector center;
        double radius = std::numeric_limits<double>::infinity();

        bool global() const noexcept { return std::isinf( radius ); }

        static InputRegion everywhere() { return {}; }
    };

    /// Interval box on the pre-activations v^(p), used to describe the input
    /// of a selection that starts at a hidden layer.
    struct PreactivationBox {
        Vector lo;
        Vector hi;
    };

    struct CertRequest {
        std::optional<LayerSelection> selection; ///< whole network when empty
        InputRegion region;
        std::vector<Variant> schedule{ Variant::automatic }; ///< one entry, or one per stage
        /// Multipliers at a stage are capped at cap * max(1, trace(M)/n) of
        /// the incoming messenger M.
        double cap = default_cap;
        std::optional<PreactivationBox> box; ///< only for selections with p > 0
    };

    struct LayerRecord {
        Index layer  = 0; ///< 1-based index in the original network
        bool skipped = false;
        Method method = Method::cf;
        Vector lambda;
        double c      = std::numeric_limits<double>::quiet_NaN();
        double margin = std::numeric_limits<double>::quiet_NaN();
        Vector alpha;
        Vector beta;
        Vector range_lo; ///< empty for global certificates
        Vector range_hi;
        Vector neuron_bound; ///< L^(i) entering this layer
        std::vector<std::string> fallback_log;
        double time_ms = 0.0;
    };

    struct Certificate {
        double bound         = 0.0;
        double trivial_bound = 0.0;
        std::vector<Variant> schedule;
        InputRegion region;
        LayerSelection selection;
        std::optional<PreactivationBox> box;
        double cap = default_cap;
        std::vector<LayerRecord> per_layer;
        Vector output_bound; ///< per selected output neuron
        Vector output_lo;    ///< output intervals; empty unless local over the full input
        Vector output_hi;
        double total_ms = 0.0;
    };

    /// prod ||W_i||_2 times the largest global slope magnitude of each
    /// hidden activation.
    inline double trivial_bound( const Network &net ) {
        double b = 1.0;
        for( Index i = 1; i <= net.depth(); ++i ) {
            b *= spectral_norm( net.weight( i ) );
            if( i < net.depth() ) {
                const auto g = global_bounds( net.activation( i ), 1 );
                b *= std::max( std::abs( g.alpha( 0 ) ), std::abs( g.beta( 0 ) ) );
            }
        }
        return b;
    }

    namespace detail {

        using Clock = std::chrono::steady_clock;

        inline double elapsed_ms( Clock::time_point since ) {
            return std::chrono::duration<double, std::milli>( Clock::now() - since ).count();
        }

        /// Layer-by-layer pipeline over layers p+1..i. The first weight is
        /// restricted to `inputs`, the last to `outputs`; the multiplier
        /// search always sees the untrimmed next weight.
        struct Chain {
            const Network *net = nullptr;
            Index p            = 0;
            Index i            = 0;
            const std::vector<Index> *inputs  = nullptr; ///< null: all columns
            const std::vector<Index> *outputs = nullptr; ///< null: all rows
            const std::vector<Vector> *pre_centers = nullptr; ///< v^(p+1)..v^(i); null in global mode
            double radius = 0.0;
            const std::vector<LayerSlopeBounds> *fixed_bounds = nullptr; ///< per stage, overrides refinement
            const std::vector<NeuronRanges> *fixed_ranges     = nullptr;
            std::vector<Variant> schedule;
            double cap = default_cap;

            Matrix weight( Index k ) const {
                Matrix w = net->weight( k );
                if( k == p + 1 && inputs )
                    w = take_columns( w, *inputs );
                if( k == i && outputs )
                    w = take_rows( w, *outputs );
                return w;
            }
        };

        struct ChainResult {
            std::vector<LayerRecord> records;
            std::vector<LayerSlopeBounds> refined; ///< bounds before any cf widening
            std::vector<NeuronRanges> ranges;
            SpdFactor messenger;
            Matrix final_weight;
        };

        inline Variant variant_for( const std::vector<Variant> &schedule, std::size_t stage ) {
            return schedule.size() == 1 ? schedule.front() : schedule.at( stage );
        }

        /// W_{k+1} composed through the following layers whose activation is
        /// affine everywhere, so a stage sees the same next weight as it would
        /// on the explicitly merged network.
        inline Matrix lookahead_weight( const Network &net, Index k, Index last ) {
            Matrix w = net.weight( k + 1 );
            for( Index j = k + 1; j < last; ++j ) {
                const LayerSlopeBounds g = global_bounds( net.activation( j ), net.width( j ) );
                if( !g.all_equal() )
                    break;
                w = net.weight( j + 1 ) * g.alpha.asDiagonal() * w;
            }
            return w;
        }

        inline ChainResult run_chain( const Chain &ch ) {
            const Network &net = *ch.net;
            ChainResult out;
            Matrix w_eff = ch.weight( ch.p + 1 );
            SpdFactor m  = SpdFactor::identity( w_eff.cols() );
            for( Index k = ch.p + 1; k < ch.i; ++k ) {
                const auto t0       = Clock::now();
                const auto stage    = static_cast<std::size_t>( k - ch.p - 1 );
                const Vector nbound = diag_quadratic( w_eff, m ).cwiseMax( 0.0 ).cwiseSqrt();

                LayerSlopeBounds bounds;
                NeuronRanges ranges;
                if( ch.fixed_bounds ) {
                    bounds = ch.fixed_bounds->at( stage );
                    if( ch.fixed_ranges )
                        ranges = ch.fixed_ranges->at( stage );
                } else if( !ch.pre_centers ) {
                    bounds = global_bounds( net.activation( k ), net.width( k ) );
                } else {
                    ranges = propagate_ranges( ch.pre_centers->at( stage ), nbound, ch.radius );
                    bounds = refine_layer( net.activation( k ), ranges );
                }

                LayerRecord rec;
                rec.layer        = k;
                rec.neuron_bound = nbound;
                rec.range_lo     = ranges.lo;
                rec.range_hi     = ranges.hi;
                const Matrix w_next = ch.weight( k + 1 );
                // A zero effective weight makes the layer input constant, so
                // the layer is affine on it whatever its slopes are.
                const bool constant = w_eff.size() > 0 && w_eff.cwiseAbs().maxCoeff() == 0.0;
                if( bounds.all_equal() || constant ) {
                    rec.skipped = true;
                    rec.alpha   = bounds.alpha;
                    rec.beta    = bounds.beta;
                    w_eff       = w_next * bounds.alpha.asDiagonal() * w_eff;
                } else {
                    StageInput in;
                    in.messenger = m;
                    in.w_cur     = w_eff;
                    in.w_next    = lookahead_weight( net, k, ch.i );
                    in.bounds    = bounds;
                    // Cap bounds lambda relative to the messenger's scale. What
                    // limits accuracy is the cancellation in the messenger update,
                    // which depends on that ratio only.
                    in.cap = ch.cap * std::max( 1.0, m.lower().rowwise().squaredNorm().mean() );
                    StageResult r = solve_stage( in, variant_for( ch.schedule, stage ) );
                    rec.method       = r.method;
                    rec.lambda       = r.lambda;
                    rec.c            = r.c;
                    rec.margin       = r.margin;
                    rec.alpha        = r.bounds.alpha;
                    rec.beta         = r.bounds.beta;
                    rec.fallback_log = std::move( r.fallback_log );
                    m                = std::move( r.messenger );
                    w_eff            = w_next;
                }
                rec.time_ms = elapsed_ms( t0 );
                out.records.push_back( std::move( rec ) );
                out.refined.push_back( std::move( bounds ) );
                out.ranges.push_back( std::move( ranges ) );
            }
            out.messenger    = std::move( m );
            out.final_weight = std::move( w_eff );
            return out;
        }

        inline std::vector<Variant> expand_schedule( const std::vector<Variant> &s, Index stages ) {
            if( s.empty() )
                throw InvalidArgument( "certify: empty variant schedule" );
            if( s.size() == 1 )
                return std::vector<Variant>( static_cast<std::size_t>( std::max<Index>( stages, 0 ) ), s.front() );
            if( static_cast<Index>( s.size() ) != stages )
                throw InvalidArgument( "certify: schedule has " + std::to_string( s.size() ) + " entries, selection has "
                                       + std::to_string( stages ) + " stages" );
            return s;
        }

        inline void check_region( const Network &net, const InputRegion &r, bool need_center ) {
            if( std::isnan( r.radius ) || r.radius < 0.0 )
                throw InvalidArgument( "certify: radius must be nonnegative" );
            if( ( need_center || !r.global() || r.center.size() > 0 ) && r.center.size() != net.input_dim() )
                throw DimensionMismatch( "certify: center has " + std::to_string( r.center.size() )
                                         + " entries, network input dimension is " + std::to_string( net.input_dim() ) );
            if( r.center.size() > 0 && !r.center.allFinite() )
                throw InvalidArgument( "certify: center has non-finite entries" );
        }

        inline std::vector<Vector> pre_centers( const Network &net, const Vector &z, Index from, Index to ) {
            const CenterValues cv = center_values( net, z );
            return { cv.pre.begin() + from, cv.pre.begin() + to };
        }

    } // namespace detail

    /// Full-network certificate.
    inline Certificate certify_network( const Network &net, const CertRequest &req ) {
        const auto t0 = detail::Clock::now();
        detail::check_region( net, req.region, false );
        if( !( req.cap > 0.0 ) )
            throw InvalidArgument( "certify: cap must be positive" );
        const Index n = net.depth();

        Certificate cert;
        cert.schedule  = detail::expand_schedule( req.schedule, n - 1 );
        cert.region    = req.region;
        cert.selection = LayerSelection::full( net );
        cert.cap       = req.cap;

        const bool local = !req.region.global();
        std::vector<Vector> pre;
        if( local )
            pre = detail::pre_centers( net, req.region.center, 0, n );

        detail::Chain ch;
        ch.net         = &net;
        ch.p           = 0;
        ch.i           = n;
        ch.pre_centers = local ? &pre : nullptr;
        ch.radius      = req.region.radius;
        ch.schedule    = cert.schedule.empty() ? req.schedule : cert.schedule;
        ch.cap         = req.cap;
        detail::ChainResult res = detail::run_chain( ch );

        cert.per_layer    = std::move( res.records );
        cert.output_bound = diag_quadratic( res.final_weight, res.messenger ).cwiseMax( 0.0 ).cwiseSqrt();
        cert.bound        = std::sqrt( max_eig_quadratic( res.final_weight, res.messenger ) );
        if( local ) {
            cert.output_lo = pre.back() - req.region.radius * cert.output_bound;
            cert.output_hi = pre.back() + req.region.radius * cert.output_bound;
        }
        cert.trivial_bound = trivial_bound( net );
        cert.total_ms      = detail::elapsed_ms( t0 );
        return cert;
    }

    /// Per-neuron bounds L^(i) for layer i (1-based) from the same pipeline
    /// certify runs.
    inline Vector neuron_bounds( const Network &net, const InputRegion &region, Index layer,
                                 const std::vector<Variant> &schedule = { Variant::automatic },
                                 double cap                           = default_cap ) {
        if( layer < 1 || layer > net.depth() )
            throw InvalidArgument( "neuron_bounds: layer must be in 1.." + std::to_string( net.depth() ) );
        detail::check_region( net, region, false );
        const bool local = !region.global();
        std::vector<Vector> pre;
        if( local )
            pre = detail::pre_centers( net, region.center, 0, layer );
        detail::Chain ch;
        ch.net         = &net;
        ch.p           = 0;
        ch.i           = layer;
        ch.pre_centers = local ? &pre : nullptr;
        ch.radius      = region.radius;
        ch.schedule    = schedule.size() == 1 ? schedule
                                              : std::vector<Variant>( schedule.begin(),
                                                                      schedule.begin() + std::max<Index>( layer - 1, 0 ) );
        ch.cap = cap;
        const detail::ChainResult res = detail::run_chain( ch );
        return diag_quadratic( res.final_weight, res.messenger ).cwiseMax( 0.0 ).cwiseSqrt();
    }

    /// Certificate for the map z^(p)_K -> v^(i)_L. Slope bounds of the
    /// intermediate layers come from the untrimmed pipeline: from layer 0
    /// over the request region, or, for p > 0 with an explicit box, from
    /// layer p over the ball enclosing phi(box).
    inline Certificate certify_selection( const Network &net, const CertRequest &req ) {
        const auto t0 = detail::Clock::now();
        if( !req.selection )
            return certify_network( net, req );
        const LayerSelection &sel = *req.selection;
        sel.validate( net );
        if( sel.is_full( net ) && !req.box )
            return certify_network( net, req );
        if( !( req.cap > 0.0 ) )
            throw InvalidArgument( "certify: cap must be positive" );

        Certificate cert;
        cert.schedule  = detail::expand_schedule( req.schedule, sel.i - sel.p - 1 );
        cert.region    = req.region;
        cert.selection = sel;
        cert.box       = req.box;
        cert.cap       = req.cap;
        const std::vector<Variant> sched = cert.schedule.empty() ? req.schedule : cert.schedule;

        // context run supplying bounds for layers p+1..i-1
        std::vector<LayerSlopeBounds> ctx_bounds;
        std::vector<NeuronRanges> ctx_ranges;
        std::vector<Vector> pre;
        bool local = false;
        if( req.box && sel.p > 0 ) {
            const PreactivationBox &box = *req.box;
            if( box.lo.size() != net.width( sel.p ) || box.hi.size() != net.width( sel.p ) )
                throw DimensionMismatch( "certify: box dimension does not match layer " + std::to_string( sel.p ) );
            if( !( box.lo.array() <= box.hi.array() ).all() || !box.lo.allFinite() || !box.hi.allFinite() )
                throw InvalidArgument( "certify: box needs finite lo <= hi" );
            const auto &act = net.activation( sel.p );
            const Vector zlo = box.lo.unaryExpr( [&]( double t ) { return activate( act, t ); } );
            const Vector zhi = box.hi.unaryExpr( [&]( double t ) { return activate( act, t ); } );
            const Vector zc  = 0.5 * ( zlo + zhi );
            const double rad = 0.5 * ( zhi - zlo ).norm();
            LayerSelection head;
            head.p = sel.p;
            head.i = sel.i;
            head.inputs.resize( static_cast<std::size_t>( net.width( sel.p ) ) );
            for( std::size_t k = 0; k < head.inputs.size(); ++k )
                head.inputs[k] = static_cast<Index>( k );
            head.outputs.resize( static_cast<std::size_t>( net.width( sel.i ) ) );
            for( std::size_t k = 0; k < head.outputs.size(); ++k )
                head.outputs[k] = static_cast<Index>( k );
            const Network sub = slice( net, head );
            std::vector<Vector> sub_pre = detail::pre_centers( sub, zc, 0, sub.depth() );
            detail::Chain ctx;
            ctx.net         = &sub;
            ctx.p           = 0;
            ctx.i           = sub.depth();
            ctx.pre_centers = &sub_pre;
            ctx.radius      = rad;
            ctx.schedule    = sched;
            ctx.cap         = req.cap;
            detail::ChainResult r = detail::run_chain( ctx );
            ctx_bounds = std::move( r.refined );
            ctx_ranges = std::move( r.ranges );
            local      = true;
        } else if( !req.region.global() ) {
            detail::check_region( net, req.region, true );
            pre = detail::pre_centers( net, req.region.center, 0, sel.i );
            detail::Chain ctx;
            ctx.net         = &net;
            ctx.p           = 0;
            ctx.i           = sel.i;
            ctx.pre_centers = &pre;
            ctx.radius      = req.region.radius;
            if( req.schedule.size() == 1 ) {
                ctx.schedule = req.schedule;
            } else {
                // layers before p run with the first scheduled variant
                ctx.schedule.assign( static_cast<std::size_t>( sel.p ), sched.front() );
                ctx.schedule.insert( ctx.schedule.end(), sched.begin(), sched.end() );
            }
            ctx.cap = req.cap;
            detail::ChainResult r = detail::run_chain( ctx );
            ctx_bounds.assign( r.refined.begin() + sel.p, r.refined.end() );
            ctx_ranges.assign( r.ranges.begin() + sel.p, r.ranges.end() );
            local = true;
        } else {
            detail::check_region( net, req.region, false );
        }

        detail::Chain ch;
        ch.net      = &net;
        ch.p        = sel.p;
        ch.i        = sel.i;
        ch.inputs   = &sel.inputs;
        ch.outputs  = &sel.outputs;
        ch.radius   = req.region.radius;
        ch.schedule = sched;
        ch.cap      = req.cap;
        if( local ) {
            ch.fixed_bounds = &ctx_bounds;
            ch.fixed_ranges = &ctx_ranges;
        }
        detail::ChainResult res = detail::run_chain( ch );

        cert.per_layer    = std::move( res.records );
        cert.output_bound = diag_quadratic( res.final_weight, res.messenger ).cwiseMax( 0.0 ).cwiseSqrt();
        cert.bound        = std::sqrt( max_eig_quadratic( res.final_weight, res.messenger ) );
        const bool all_inputs = static_cast<Index>( sel.inputs.size() ) == net.input_dim();
        if( local && sel.p == 0 && all_inputs ) {
            const Vector centre = detail::take( pre.back(), sel.outputs );
            cert.output_lo      = centre - req.region.radius * cert.output_bound;
            cert.output_hi      = centre + req.region.radius * cert.output_bound;
        }
        cert.trivial_bound = trivial_bound( slice( net, sel ) );
        cert.total_ms      = detail::elapsed_ms( t0 );
        return cert;
    }

    /// Dispatches on the request's selection.
    inline Certificate certify( const Network &net, const CertRequest &req ) {
        if( req.selection )
            return certify_selection( net, req );
        return certify_network( net, req );
    }

    /// Independent certificates for each radius, in the given order.
    inline std::vector<Certificate> sweep_radius( const Network &net, const Vector &center,
                                                  const std::vector<double> &radii, Variant variant,
                                                  double cap = default_cap ) {
        std::vector<Certificate> out;
        out.reserve( radii.size() );
        for( double r : radii ) {
            CertRequest req;
            req.region   = { center, r };
            req.schedule = { variant };
            req.cap      = cap;
            out.push_back( certify( net, req ) );
        }
        return out;
    }

} // namespace lipcert

#endif // LIPCERT_CERTIFIER_HPP
