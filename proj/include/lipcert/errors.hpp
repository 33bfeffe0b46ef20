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

#ifndef LIPCERT_ERRORS_HPP
#define LIPCERT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lipcert {

    /// Base class of every error raised by the library.
    class Error : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
    };

    class DimensionMismatch : public Error {
    public:
        using Error::Error;
    };

    class InvalidArgument : public Error {
    public:
        using Error::Error;
    };

    /// A Cholesky pivot fell below the scale-relative threshold.
    /// `pivot()` is 1-based, matching the row of the failing pivot.
    class NotPositiveDefinite : public Error {
    public:
        explicit NotPositiveDefinite( std::size_t pivot )
            : Error( "matrix is not positive definite (pivot " + std::to_string( pivot ) + ")" ),
              pivot_( pivot ) {}

        std::size_t pivot() const noexcept { return pivot_; }

    private:
        std::size_t pivot_;
    };

    class ConvergenceError : public Error {
    public:
        using Error::Error;
    };

    class UnknownActivation : public Error {
    public:
        explicit UnknownActivation( const std::string &name )
            : Error( "unknown activation \"" + name + "\"" ), name_( name ) {}

        const std::string &name() const noexcept { return name_; }

    private:
        std::string name_;
    };

    /// Malformed or inconsistent network file. `layer()` is 1-based, 0 when
    /// the problem is not tied to a particular layer.
    class NetworkFormatError : public Error {
    public:
        NetworkFormatError( std::size_t layer, const std::string &what )
            : Error( layer == 0 ? what : "layer " + std::to_string( layer ) + ": " + what ),
              layer_( layer ) {}

        std::size_t layer() const noexcept { return layer_; }

    private:
        std::size_t layer_;
    };

    /// Fast variant found no strictly feasible multiplier.
    class NoFeasibleLambda : public Error {
    public:
        using Error::Error;
    };

    /// Accurate variant's small SDP did not produce a verified point.
    class SubsolverFailed : public Error {
    public:
        using Error::Error;
    };

    /// Barrier iterations exhausted or the problem is infeasible.
    class SdpFailure : public Error {
    public:
        using Error::Error;
    };

} // namespace lipcert

#endif // LIPCERT_ERRORS_HPP
