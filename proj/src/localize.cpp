#include "recomb/localize.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "recomb/parallel.hpp"

namespace recomb {

Localization cover_support(const ParticleMeasure& mu, double u, PatchCentre centre) {
    if (!(u > 0.0)) throw std::invalid_argument("cover_support: radius must be positive");
    const std::size_t dim = mu.dim();
    const double side = 2.0 * u / std::sqrt(static_cast<double>(dim));

    Localization loc;
    std::map<std::vector<long long>, std::size_t> cell_to_patch;
    std::vector<std::vector<long long>> cells;
    std::vector<long long> key(dim);
    for (std::size_t i = 0; i < mu.size(); ++i) {
        auto p = mu.point(i);
        for (std::size_t j = 0; j < dim; ++j) key[j] = static_cast<long long>(std::floor(p[j] / side));
        auto [it, inserted] = cell_to_patch.emplace(key, loc.patches.size());
        if (inserted) {
            loc.patches.emplace_back();
            cells.push_back(key);
        }
        loc.patches[it->second].indices.push_back(i);
    }

    for (std::size_t k = 0; k < loc.patches.size(); ++k) {
        Patch& patch = loc.patches[k];
        patch.radius = centre == PatchCentre::cell ? u : 2.0 * u;
        patch.centre.assign(dim, 0.0);
        if (centre == PatchCentre::cell) {
            for (std::size_t j = 0; j < dim; ++j)
                patch.centre[j] = (static_cast<double>(cells[k][j]) + 0.5) * side;
        } else {
            double mass = 0.0;
            for (std::size_t i : patch.indices) {
                auto p = mu.point(i);
                for (std::size_t j = 0; j < dim; ++j) patch.centre[j] += mu.weight(i) * p[j];
                mass += mu.weight(i);
            }
            for (double& c : patch.centre) c /= mass;
        }
    }
    return loc;
}

LocalizedReduction reduce_localized(const ParticleMeasure& mu, double u, int r, Algorithm algorithm,
                                    PatchCentre centre) {
    if (!(u > 0.0)) throw std::invalid_argument("reduce_localized: radius must be positive");
    if (r < 1) throw std::invalid_argument("reduce_localized: degree must be >= 1");
    const Localization loc = cover_support(mu, u, centre);
    const std::size_t patches = loc.patches.size();
    const std::size_t basis_size = binomial(mu.dim() + static_cast<std::size_t>(r), mu.dim()) - 1;

    std::vector<Reduction> results(patches);
    parallel_for(patches, [&](std::size_t k) {
        const Patch& patch = loc.patches[k];
        const ParticleMeasure local = mu.subset(patch.indices);
        ReductionReport report;
        report.input_support = local.size();
        if (local.size() < basis_size + 2) {
            report.output_support = local.size();
            std::vector<std::size_t> all(local.size());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
            results[k] = Reduction{local, std::move(all), report};
            return;
        }
        const MonomialBasis basis = build_basis(mu.dim(), r, patch.centre, u);
        try {
            results[k] = reduce_measure(local, basis, algorithm);
        } catch (const NumericalDegeneracy& e) {
            throw NumericalDegeneracy("patch " + std::to_string(k) + ": " + e.what());
        }
    });

    LocalizedReduction out;
    out.patch_count = patches;
    std::vector<double> coords;
    std::vector<double> weights;
    for (std::size_t k = 0; k < patches; ++k) {
        const Reduction& red = results[k];
        for (std::size_t q = 0; q < red.support.size(); ++q) {
            out.support.push_back(loc.patches[k].indices[red.support[q]]);
            auto p = red.measure.point(q);
            coords.insert(coords.end(), p.begin(), p.end());
            weights.push_back(red.measure.weight(q));
        }
        out.reports.push_back(red.report);
    }
    out.measure = ParticleMeasure(mu.dim(), std::move(coords), std::move(weights));
    return out;
}

}  // namespace recomb
