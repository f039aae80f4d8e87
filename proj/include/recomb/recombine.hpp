#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "recomb/error.hpp"
#include "recomb/measure.hpp"
#include "recomb/polybasis.hpp"

namespace recomb {

// Support reduction of discrete measures by repeated Caratheodory elimination.
//
// A measure on R^n is reduced to at most n + 1 particles drawn from its own
// support while keeping its mass and centre of mass. Reducing the law of
// x -> (p_1(x), ..., p_n(x)) this way yields a measure that integrates every
// p_j exactly like the original one.
//
// Points are passed to the low-level routines as the columns of a matrix.

enum class Algorithm {
    elimination,   ///< sequential elimination, one particle at a time
    hierarchical,  ///< halving via block centres of mass and Procedure A
};

/// Which of the two admissible scalings a Caratheodory step uses.
enum class Direction {
    automatic,  ///< the one that zeroes more weights; subtract on a tie
    add,        ///< w + c u with c = min_{u_i<0} (-w_i / u_i)
    subtract,   ///< w - c u with c = min_{u_i>0} (w_i / u_i)
};

struct ReductionReport {
    std::size_t input_support = 0;
    std::size_t output_support = 0;
    std::size_t procedure_a_calls = 0;
    std::size_t elimination_steps = 0;
    /// Max over coordinates (test functions) of |CoM deviation| divided by
    /// the L1 size of that coordinate under the input measure.
    double max_moment_error = 0.0;
};

struct Reduction {
    ParticleMeasure measure;
    /// Indices into the input measure, ascending; measure particle i is input
    /// particle support[i].
    std::vector<std::size_t> support;
    ReductionReport report;
};

/// Unit vector u with sum_i u_i x_i = 0 and sum_i u_i = 0 for exactly n + 2
/// points in R^n, taken from the smallest singular direction of the stacked
/// constraint matrix. Sign: first non-zero entry positive.
/// Throws NumericalDegeneracy when the residual exceeds 1e-10 (1 + max |x_i|).
Eigen::VectorXd null_vector(const Eigen::MatrixXd& points);

/// One elimination: returns w' = w +- c u, non-negative, with at least one
/// entry exactly zero, same sum and same centre of mass as w.
Eigen::VectorXd caratheodory_step(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                                  Direction direction = Direction::automatic);

/// Number of singular values of the centred point matrix above tol times the
/// largest one.
std::size_t affine_dimension(const Eigen::MatrixXd& points, double tol = 1e-10);
std::size_t affine_dimension(const ParticleMeasure& mu, double tol = 1e-10);

Reduction reduce_algorithm1(const ParticleMeasure& mu);

/// Reduces a measure with exactly 2(n + 1) particles in R^n to at most n + 1
/// by n + 1 elimination steps.
Reduction procedure_a(const ParticleMeasure& nu);

Reduction reduce_algorithm2(const ParticleMeasure& mu);

/// Reduced measure of mu with respect to the basis functions: support is a
/// subset of mu's, every basis integral is kept, and at most basis.size() + 1
/// particles remain.
Reduction reduce_measure(const ParticleMeasure& mu, const MonomialBasis& basis,
                         Algorithm algorithm = Algorithm::hierarchical);

/// Probability that k i.i.d. uniform points on the sphere in R^N contain the
/// origin in their convex hull: 1 - 2^{1-k} sum_{j<N} C(k-1, j).
double wendel_probability(unsigned N, unsigned k);

}  // namespace recomb
