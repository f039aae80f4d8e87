#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace recomb {

/// Binomial coefficient C(n, k) in exact integer arithmetic.
std::size_t binomial(std::size_t n, std::size_t k);

/// Monomials p_e(x) = prod_j ((x_j - c_j) / scale)^{e_j} for all multi-exponents
/// with 1 <= |e| <= degree. The constant is never part of the basis.
///
/// Exponents are ordered by total degree, and within a degree by descending
/// lexicographic order of the exponent tuple, so for N = 2, r = 2 the order is
/// x1, x2, x1^2, x1 x2, x2^2.
class MonomialBasis {
public:
    MonomialBasis(std::size_t dim, int degree, std::vector<double> center, double scale);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] int degree() const { return degree_; }
    [[nodiscard]] std::size_t size() const { return exponents_.size(); }
    [[nodiscard]] const std::vector<double>& center() const { return center_; }
    [[nodiscard]] double scale() const { return scale_; }
    [[nodiscard]] const std::vector<std::vector<int>>& exponents() const { return exponents_; }

    /// Writes all basis values at x into out (size() entries).
    void evaluate(std::span<const double> x, std::span<double> out) const;
    [[nodiscard]] std::vector<double> evaluate(std::span<const double> x) const;

private:
    std::size_t dim_;
    int degree_;
    std::vector<double> center_;
    double scale_;
    std::vector<std::vector<int>> exponents_;
    // Each monomial of degree >= 2 is its parent monomial times one coordinate.
    std::vector<std::ptrdiff_t> parent_;
    std::vector<std::size_t> factor_;
};

MonomialBasis build_basis(std::size_t dim, int degree, std::vector<double> center, double scale);

/// Basis centred at the origin with unit scale.
MonomialBasis raw_basis(std::size_t dim, int degree);

}  // namespace recomb
