#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "recomb/polybasis.hpp"

namespace recomb {

/// Weighted point cloud sum_i w_i delta_{x_i} in R^N with strictly positive
/// weights. Zero weights are dropped on construction; negative or non-finite
/// input is rejected with std::invalid_argument.
class ParticleMeasure {
public:
    ParticleMeasure() = default;

    /// coords is row-major: particle i occupies [i*dim, (i+1)*dim).
    ParticleMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights);

    static ParticleMeasure dirac(std::span<const double> x, double mass = 1.0);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] std::size_t size() const { return weights_.size(); }
    [[nodiscard]] bool empty() const { return weights_.empty(); }

    [[nodiscard]] std::span<const double> point(std::size_t i) const {
        return {coords_.data() + i * dim_, dim_};
    }
    [[nodiscard]] double weight(std::size_t i) const { return weights_[i]; }
    [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
    [[nodiscard]] const std::vector<double>& coords() const { return coords_; }

    /// Sub-measure on the given indices, in the given order.
    [[nodiscard]] ParticleMeasure subset(std::span<const std::size_t> indices) const;

    /// Same points, weights multiplied by factor (> 0).
    [[nodiscard]] ParticleMeasure scaled(double factor) const;

private:
    std::size_t dim_ = 0;
    std::vector<double> coords_;
    std::vector<double> weights_;
};

/// A measure together with, for each of its particles, the index of the
/// particle in a source measure it stands for.
struct IndexedMeasure {
    ParticleMeasure measure;
    std::vector<std::size_t> origin;
};

double total_mass(const ParticleMeasure& mu);

/// sum w_i x_i / sum w_i.
std::vector<double> center_of_mass(const ParticleMeasure& mu);

/// Law of x -> (p_1(x), ..., p_n(x)) under mu. origin[i] == i.
IndexedMeasure pushforward_by_basis(const ParticleMeasure& mu, const MonomialBasis& basis);

/// Combines particles within max-norm distance tol of an earlier
/// representative into that representative. Output is ordered by
/// representative index; origin maps back into mu.
IndexedMeasure merge_duplicates(const ParticleMeasure& mu, double tol);

/// Integral of every basis function against mu.
std::vector<double> moments(const ParticleMeasure& mu, const MonomialBasis& basis);

}  // namespace recomb
