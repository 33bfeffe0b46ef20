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

#ifndef LIPCERT_LINALG_HPP
#define LIPCERT_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <lipcert/errors.hpp>

/*
 * Dense symmetric kernels. Everything here is a pure function of its
 * arguments; matrices are small (a few hundred rows at most) and dense.
 */

namespace lipcert {

    using Matrix = Eigen::MatrixXd;
    using Vector = Eigen::VectorXd;
    using Index  = Eigen::Index;

    inline constexpr double symmetry_tolerance = 1e-12;
    inline constexpr double pivot_tolerance    = 1e-12;

    namespace detail {

        inline double max_abs( const Matrix &m ) {
            return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
        }

        inline void require( bool condition, const std::string &what ) {
            if( !condition )
                throw DimensionMismatch( what );
        }

    } // namespace detail

    /// Symmetric part of a square matrix. Used to scrub rounding asymmetry
    /// from products like W M^-1 W^T before they are wrapped.
    inline Matrix symmetrize( const Matrix &m ) {
        detail::require( m.rows() == m.cols(), "symmetrize: matrix is not square" );
        return 0.5 * ( m + m.transpose() );
    }

    /// Dense symmetric matrix with finite entries.
    class SymMatrix {
    public:
        explicit SymMatrix( Matrix m ) {
            if( m.rows() != m.cols() || m.rows() == 0 )
                throw DimensionMismatch( "SymMatrix: expected a non-empty square matrix, got "
                                         + std::to_string( m.rows() ) + "x" + std::to_string( m.cols() ) );
            if( !m.allFinite() )
                throw InvalidArgument( "SymMatrix: non-finite entry" );
            const double scale = std::max( 1.0, detail::max_abs( m ) );
            if( ( m - m.transpose() ).cwiseAbs().maxCoeff() > symmetry_tolerance * scale )
                throw InvalidArgument( "SymMatrix: matrix is not symmetric" );
            matrix_ = 0.5 * ( m + m.transpose() );
        }

        const Matrix &matrix() const noexcept { return matrix_; }
        Index order() const noexcept { return matrix_.rows(); }

    private:
        Matrix matrix_;
    };

    /// Lower Cholesky factor L of an SPD matrix S = L L^T.
    class SpdFactor {
    public:
        const Matrix &lower() const noexcept { return lower_; }
        Index order() const noexcept { return lower_.rows(); }

        Matrix reconstruct() const { return lower_ * lower_.transpose(); }

        /// L^-1 B
        Matrix half_solve( const Matrix &b ) const {
            detail::require( b.rows() == order(), "half_solve: row count does not match factor order" );
            return lower_.triangularView<Eigen::Lower>().solve( b );
        }

        static SpdFactor identity( Index n ) {
            SpdFactor f;
            f.lower_ = Matrix::Identity( n, n );
            return f;
        }

    private:
        friend SpdFactor factor_spd( const SymMatrix & );
        Matrix lower_;
    };

    /// Cholesky factorization with a scale-relative pivot test: any pivot
    /// <= 1e-12 * (largest diagonal entry) is rejected.
    inline SpdFactor factor_spd( const SymMatrix &s ) {
        const Matrix &a = s.matrix();
        const Index n   = a.rows();
        const double threshold = pivot_tolerance * std::max( a.diagonal().maxCoeff(), 0.0 );

        SpdFactor f;
        f.lower_ = Matrix::Zero( n, n );
        Matrix &l = f.lower_;
        for( Index j = 0; j < n; ++j ) {
            const double pivot = a( j, j ) - l.row( j ).head( j ).squaredNorm();
            if( !( pivot > threshold ) || !std::isfinite( pivot ) )
                throw NotPositiveDefinite( static_cast<std::size_t>( j + 1 ) );
            const double root = std::sqrt( pivot );
            l( j, j ) = root;
            const Index rest = n - j - 1;
            if( rest > 0 ) {
                l.col( j ).tail( rest ) = ( a.col( j ).tail( rest )
                                            - l.bottomLeftCorner( rest, j ) * l.row( j ).head( j ).transpose() )
                                          / root;
            }
        }
        return f;
    }

    /// Solves S X = B given the factor of S.
    inline Matrix spd_solve( const SpdFactor &f, const Matrix &b ) {
        detail::require( b.rows() == f.order(), "spd_solve: right-hand side has "
                                                    + std::to_string( b.rows() ) + " rows, factor order is "
                                                    + std::to_string( f.order() ) );
        const auto lower = f.lower().triangularView<Eigen::Lower>();
        Matrix y = lower.solve( b );
        return lower.transpose().solve( y );
    }

    namespace detail {

        inline Vector eigenvalues_sym( const Matrix &s ) {
            require( s.rows() == s.cols(), "eigenvalues: matrix is not square" );
            if( s.rows() == 0 )
                throw DimensionMismatch( "eigenvalues: empty matrix" );
            if( s.rows() == 1 )
                return Vector::Constant( 1, s( 0, 0 ) );
            Eigen::SelfAdjointEigenSolver<Matrix> solver( s, Eigen::EigenvaluesOnly );
            if( solver.info() != Eigen::Success )
                throw ConvergenceError( "symmetric eigensolver did not converge" );
            return solver.eigenvalues();
        }

    } // namespace detail

    inline double max_eig_sym( const SymMatrix &s ) {
        return detail::eigenvalues_sym( s.matrix() ).maxCoeff();
    }

    inline double min_eig_sym( const SymMatrix &s ) {
        return detail::eigenvalues_sym( s.matrix() ).minCoeff();
    }

    /// diag(W M^-1 W^T) without forming the product: with Y = L^-1 W^T the
    /// l-th entry is the squared norm of column l of Y.
    inline Vector diag_quadratic( const Matrix &w, const SpdFactor &f ) {
        detail::require( w.cols() == f.order(), "diag_quadratic: W has " + std::to_string( w.cols() )
                                                    + " columns, factor order is " + std::to_string( f.order() ) );
        const Matrix y = f.half_solve( w.transpose() );
        return y.colwise().squaredNorm().transpose();
    }

    /// W M^-1 W^T formed explicitly (symmetric by construction).
    inline Matrix quadratic_form( const Matrix &w, const SpdFactor &f ) {
        detail::require( w.cols() == f.order(), "quadratic_form: dimension mismatch" );
        const Matrix y = f.half_solve( w.transpose() );
        return y.transpose() * y;
    }

    /// sigma_max(W M^-1 W^T), evaluated on whichever Gram matrix is smaller.
    inline double max_eig_quadratic( const Matrix &w, const SpdFactor &f ) {
        detail::require( w.cols() == f.order(), "max_eig_quadratic: dimension mismatch" );
        if( w.rows() == 0 )
            return 0.0;
        const Matrix y = f.half_solve( w.transpose() );
        const Matrix gram = y.rows() < y.cols() ? Matrix( y * y.transpose() ) : Matrix( y.transpose() * y );
        return std::max( 0.0, detail::eigenvalues_sym( gram ).maxCoeff() );
    }

    /// Unit-diagonal (Jacobi) rescaling D G D with D = diag(G)^-1/2. Zero or
    /// negative diagonal entries keep scale 1. The sign pattern of the
    /// eigenvalues is unchanged; graded matrices become well balanced.
    inline Matrix jacobi_scaled( const Matrix &g ) {
        detail::require( g.rows() == g.cols(), "jacobi_scaled: matrix is not square" );
        Vector d( g.rows() );
        for( Index k = 0; k < g.rows(); ++k )
            d( k ) = g( k, k ) > 0.0 ? 1.0 / std::sqrt( g( k, k ) ) : 1.0;
        return d.asDiagonal() * g * d.asDiagonal();
    }

    /// Smallest eigenvalue of the Jacobi-scaled matrix. Positive iff the
    /// matrix is positive definite; scale-free, so it stays meaningful when
    /// blocks differ by many orders of magnitude.
    inline double scaled_min_eig( const Matrix &g ) {
        return detail::eigenvalues_sym( symmetrize( jacobi_scaled( g ) ) ).minCoeff();
    }

    /// Strict positive definiteness via Cholesky on the Jacobi-scaled matrix.
    inline bool positive_definite( const Matrix &g ) {
        if( g.rows() != g.cols() || g.rows() == 0 || !g.allFinite() )
            return false;
        for( Index k = 0; k < g.rows(); ++k )
            if( !( g( k, k ) > 0.0 ) )
                return false;
        Eigen::LLT<Matrix> llt( symmetrize( jacobi_scaled( g ) ) );
        if( llt.info() != Eigen::Success )
            return false;
        return llt.matrixLLT().diagonal().minCoeff() > 0.0;
    }

} // namespace lipcert

#endif // LIPCERT_LINALG_HPP
