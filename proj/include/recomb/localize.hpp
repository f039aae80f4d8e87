#pragma once

#include <cstddef>
#include <vector>

#include "recomb/measure.hpp"
#include "recomb/recombine.hpp"

namespace recomb {

// Localisation of a particle measure: the particles are bucketed into
// axis-aligned grid cells of side 2u / sqrt(N) anchored at the origin, so every
// cell lies in a ball of radius u around its centre. Each non-empty cell is one
// patch; patches are numbered in order of their lowest particle index.

enum class PatchCentre {
    cell,  ///< geometric cell centre; every member within u
    mass,  ///< centre of mass of the members; members within 2u
};

struct Patch {
    std::vector<double> centre;
    double radius = 0.0;
    std::vector<std::size_t> indices;  ///< ascending
};

struct Localization {
    std::vector<Patch> patches;
};

Localization cover_support(const ParticleMeasure& mu, double u, PatchCentre centre = PatchCentre::cell);

struct LocalizedReduction {
    ParticleMeasure measure;
    /// For each output particle, its index in the input measure.
    std::vector<std::size_t> support;
    /// One report per patch, in patch order.
    std::vector<ReductionReport> reports;
    std::size_t patch_count = 0;
};

/// Reduces every patch against the degree-r monomials centred at the patch
/// centre and scaled by u, then concatenates the patches in patch order.
/// Patches with fewer than basis size + 2 particles are kept as they are.
/// NumericalDegeneracy is rethrown with the patch id in its message.
LocalizedReduction reduce_localized(const ParticleMeasure& mu, double u, int r,
                                    Algorithm algorithm = Algorithm::hierarchical,
                                    PatchCentre centre = PatchCentre::cell);

}  // namespace recomb
