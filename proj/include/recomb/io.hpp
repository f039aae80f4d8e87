#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "recomb/driver.hpp"
#include "recomb/measure.hpp"
#include "recomb/recombine.hpp"

namespace recomb {

// Particle CSV: header x1,...,xN,weight, one particle per row.

ParticleMeasure read_particles(std::istream& in);
ParticleMeasure read_particles(const std::filesystem::path& file);
void write_particles(std::ostream& out, const ParticleMeasure& mu);
void write_particles(const std::filesystem::path& file, const ParticleMeasure& mu);

/// step,s_j,u_j,particles_before,particles_after,patches,wall_ms; u_j is empty
/// on steps without recombination.
void write_diagnostics(std::ostream& out, const std::vector<StepDiagnostics>& diagnostics);

/// k,estimate,abs_error,max_particles,vanilla_estimate,vanilla_abs_error,vanilla_particles
void write_convergence(std::ostream& out, const ConvergenceTable& table);

nlohmann::json to_json(const ReductionReport& report);
nlohmann::json to_json(const RunResult& result, const RunConfig& config);
nlohmann::json to_json(const ConvergenceTable& table);

}  // namespace recomb
