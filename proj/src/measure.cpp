#include "recomb/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace recomb {

ParticleMeasure::ParticleMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim) {
    if (dim == 0) throw std::invalid_argument("ParticleMeasure: dimension must be >= 1");
    if (coords.size() != dim * weights.size())
        throw std::invalid_argument("ParticleMeasure: coordinate count does not match weights");
    for (double c : coords)
        if (!std::isfinite(c)) throw std::invalid_argument("ParticleMeasure: non-finite coordinate");

    coords_.reserve(coords.size());
    weights_.reserve(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double w = weights[i];
        if (!std::isfinite(w) || w < 0.0)
            throw std::invalid_argument("ParticleMeasure: weights must be finite and non-negative");
        if (w == 0.0) continue;
        weights_.push_back(w);
        coords_.insert(coords_.end(), coords.begin() + static_cast<std::ptrdiff_t>(i * dim),
                       coords.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim));
    }
    if (weights_.empty()) throw std::invalid_argument("ParticleMeasure: no particle with positive weight");
}

ParticleMeasure ParticleMeasure::dirac(std::span<const double> x, double mass) {
    return ParticleMeasure(x.size(), std::vector<double>(x.begin(), x.end()), {mass});
}

ParticleMeasure ParticleMeasure::subset(std::span<const std::size_t> indices) const {
    std::vector<double> c;
    std::vector<double> w;
    c.reserve(indices.size() * dim_);
    w.reserve(indices.size());
    for (std::size_t i : indices) {
        auto p = point(i);
        c.insert(c.end(), p.begin(), p.end());
        w.push_back(weights_[i]);
    }
    return ParticleMeasure(dim_, std::move(c), std::move(w));
}

ParticleMeasure ParticleMeasure::scaled(double factor) const {
    if (!(factor > 0.0)) throw std::invalid_argument("ParticleMeasure::scaled: factor must be positive");
    std::vector<double> w = weights_;
    for (double& v : w) v *= factor;
    return ParticleMeasure(dim_, coords_, std::move(w));
}

double total_mass(const ParticleMeasure& mu) {
    return std::accumulate(mu.weights().begin(), mu.weights().end(), 0.0);
}

std::vector<double> center_of_mass(const ParticleMeasure& mu) {
    std::vector<double> com(mu.dim(), 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        auto p = mu.point(i);
        for (std::size_t j = 0; j < mu.dim(); ++j) com[j] += mu.weight(i) * p[j];
    }
    const double m = total_mass(mu);
    for (double& c : com) c /= m;
    return com;
}

IndexedMeasure pushforward_by_basis(const ParticleMeasure& mu, const MonomialBasis& basis) {
    if (basis.dim() != mu.dim())
        throw std::invalid_argument("pushforward_by_basis: basis dimension does not match measure");
    if (basis.size() == 0) throw std::invalid_argument("pushforward_by_basis: empty basis");
    const std::size_t n = basis.size();
    std::vector<double> coords(mu.size() * n);
    for (std::size_t i = 0; i < mu.size(); ++i)
        basis.evaluate(mu.point(i), std::span<double>(coords.data() + i * n, n));
    std::vector<std::size_t> origin(mu.size());
    std::iota(origin.begin(), origin.end(), std::size_t{0});
    return {ParticleMeasure(n, std::move(coords), mu.weights()), std::move(origin)};
}

IndexedMeasure merge_duplicates(const ParticleMeasure& mu, double tol) {
    if (tol < 0.0) throw std::invalid_argument("merge_duplicates: tol must be >= 0");
    const std::size_t n = mu.size();
    const std::size_t dim = mu.dim();

    // Candidates for merging lie within tol in the first coordinate.
    std::vector<std::size_t> by_first(n);
    std::iota(by_first.begin(), by_first.end(), std::size_t{0});
    std::stable_sort(by_first.begin(), by_first.end(),
                     [&](std::size_t a, std::size_t b) { return mu.point(a)[0] < mu.point(b)[0]; });
    std::vector<double> firsts(n);
    for (std::size_t k = 0; k < n; ++k) firsts[k] = mu.point(by_first[k])[0];

    auto close = [&](std::size_t a, std::size_t b) {
        auto pa = mu.point(a);
        auto pb = mu.point(b);
        for (std::size_t j = 0; j < dim; ++j)
            if (std::abs(pa[j] - pb[j]) > tol) return false;
        return true;
    };

    std::vector<bool> absorbed(n, false);
    std::vector<double> coords;
    std::vector<double> weights;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < n; ++i) {
        if (absorbed[i]) continue;
        const double x0 = mu.point(i)[0];
        auto lo = std::lower_bound(firsts.begin(), firsts.end(), x0 - tol);
        double w = mu.weight(i);
        for (auto it = lo; it != firsts.end() && *it <= x0 + tol; ++it) {
            const std::size_t j = by_first[static_cast<std::size_t>(it - firsts.begin())];
            if (j <= i || absorbed[j]) continue;
            if (close(i, j)) {
                absorbed[j] = true;
                w += mu.weight(j);
            }
        }
        auto p = mu.point(i);
        coords.insert(coords.end(), p.begin(), p.end());
        weights.push_back(w);
        origin.push_back(i);
    }
    return {ParticleMeasure(dim, std::move(coords), std::move(weights)), std::move(origin)};
}

std::vector<double> moments(const ParticleMeasure& mu, const MonomialBasis& basis) {
    std::vector<double> result(basis.size(), 0.0);
    std::vector<double> values(basis.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        basis.evaluate(mu.point(i), values);
        for (std::size_t j = 0; j < values.size(); ++j) result[j] += mu.weight(i) * values[j];
    }
    return result;
}

}  // namespace recomb
