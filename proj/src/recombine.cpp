#include "recomb/recombine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace recomb {

namespace {

constexpr double kResidualTol = 1e-10;
// Weights below this fraction of the step's mass are treated as eliminated.
constexpr double kSnap = 1e-14;
// Relative singular value below which a set of at most n + 1 points is taken
// to be affinely dependent.
constexpr double kDependenceTol = 1e-12;
// Pushforward points closer than this (times their magnitude) are merged.
constexpr double kMergeTol = 1e-13;

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd as_matrix(const ParticleMeasure& mu) {
    return Eigen::Map<const MatrixXd>(mu.coords().data(), static_cast<Eigen::Index>(mu.dim()),
                                      static_cast<Eigen::Index>(mu.size()));
}

VectorXd as_vector(const std::vector<double>& v) {
    return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Rows: points centred on their mean and scaled to unit max norm, then a row
// of ones. Its null space is the set of affine relations among the points.
MatrixXd constraint_matrix(const MatrixXd& points) {
    const Eigen::Index n = points.rows();
    const Eigen::Index m = points.cols();
    MatrixXd centred = points.colwise() - points.rowwise().mean();
    double scale = centred.colwise().norm().maxCoeff();
    if (!(scale > 0.0)) scale = 1.0;
    MatrixXd a(n + 1, m);
    a.topRows(n) = centred / scale;
    a.row(n).setOnes();
    return a;
}

double residual(const MatrixXd& points, const VectorXd& u) {
    const double sum = std::abs(u.sum());
    const double com = points.rows() > 0 ? (points * u).cwiseAbs().maxCoeff() : 0.0;
    return std::max(sum, com);
}

double residual_bound(const MatrixXd& points) {
    return kResidualTol * (1.0 + points.cwiseAbs().maxCoeff());
}

void normalise_sign(VectorXd& u) {
    u.normalize();
    const double cut = 1e-12 * u.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (std::abs(u[i]) > cut) {
            if (u[i] < 0.0) u = -u;
            return;
        }
    }
}

// Smallest singular direction of the constraint matrix, if it is an affine
// relation to working precision.
std::optional<VectorXd> find_relation(const MatrixXd& points, double dependence_tol) {
    const Eigen::Index m = points.cols();
    if (m < 2) return std::nullopt;
    const MatrixXd a = constraint_matrix(points);
    Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeFullV);
    if (m <= a.rows()) {
        const auto& s = svd.singularValues();
        if (s[m - 1] > dependence_tol * std::max(1.0, s[0])) return std::nullopt;
    }
    VectorXd u = svd.matrixV().col(m - 1);
    normalise_sign(u);
    if (residual(points, u) > residual_bound(points)) return std::nullopt;
    return u;
}

struct StepOutcome {
    VectorXd weights;
    int zeros = 0;
};

StepOutcome scale_along(const VectorXd& w, const VectorXd& u, double sign) {
    const VectorXd v = sign * u;
    double c = std::numeric_limits<double>::infinity();
    Eigen::Index arg = -1;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] < 0.0) {
            const double ratio = w[i] / -v[i];
            if (ratio < c) {
                c = ratio;
                arg = i;
            }
        }
    }
    StepOutcome out;
    if (arg < 0) {
        out.weights = w;
        return out;
    }
    out.weights = w + c * v;
    out.weights[arg] = 0.0;
    const double cut = kSnap * w.sum();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (out.weights[i] < cut) out.weights[i] = 0.0;
        if (out.weights[i] == 0.0) ++out.zeros;
    }
    return out;
}

VectorXd apply_relation(const VectorXd& w, const VectorXd& u, Direction direction) {
    switch (direction) {
        case Direction::add:
            return scale_along(w, u, 1.0).weights;
        case Direction::subtract:
            return scale_along(w, u, -1.0).weights;
        case Direction::automatic: {
            StepOutcome sub = scale_along(w, u, -1.0);
            StepOutcome add = scale_along(w, u, 1.0);
            return add.zeros > sub.zeros ? add.weights : sub.weights;
        }
    }
    return w;
}

MatrixXd columns(const MatrixXd& x, const std::vector<std::size_t>& idx) {
    MatrixXd out(x.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k)
        out.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(idx[k]));
    return out;
}

// Sequential elimination over the first n + 2 surviving particles until fewer
// than n + 2 remain. active is ascending and is replaced by the survivors.
std::size_t eliminate(const MatrixXd& x, VectorXd& w, std::vector<std::size_t>& active) {
    const std::size_t width = static_cast<std::size_t>(x.rows()) + 2;
    std::vector<std::size_t> window;
    window.reserve(width);
    std::size_t next = 0;
    auto refill = [&] {
        while (window.size() < width && next < active.size()) window.push_back(active[next++]);
    };
    refill();
    std::size_t steps = 0;
    while (window.size() == width) {
        VectorXd ww(static_cast<Eigen::Index>(width));
        for (std::size_t k = 0; k < width; ++k) ww[static_cast<Eigen::Index>(k)] = w[static_cast<Eigen::Index>(window[k])];
        const VectorXd updated = caratheodory_step(columns(x, window), ww);
        ++steps;
        std::vector<std::size_t> kept;
        kept.reserve(width);
        for (std::size_t k = 0; k < width; ++k) {
            w[static_cast<Eigen::Index>(window[k])] = updated[static_cast<Eigen::Index>(k)];
            if (updated[static_cast<Eigen::Index>(k)] > 0.0) kept.push_back(window[k]);
        }
        window.swap(kept);
        refill();
    }
    active = window;
    return steps;
}

// Keeps eliminating while the survivors are affinely dependent.
std::size_t eliminate_dependent(const MatrixXd& x, VectorXd& w, std::vector<std::size_t>& active) {
    std::size_t steps = 0;
    while (active.size() >= 2) {
        const MatrixXd pts = columns(x, active);
        auto u = find_relation(pts, kDependenceTol);
        if (!u) break;
        VectorXd ww(static_cast<Eigen::Index>(active.size()));
        for (std::size_t k = 0; k < active.size(); ++k) ww[static_cast<Eigen::Index>(k)] = w[static_cast<Eigen::Index>(active[k])];
        const VectorXd updated = apply_relation(ww, *u, Direction::automatic);
        ++steps;
        std::vector<std::size_t> kept;
        for (std::size_t k = 0; k < active.size(); ++k) {
            w[static_cast<Eigen::Index>(active[k])] = updated[static_cast<Eigen::Index>(k)];
            if (updated[static_cast<Eigen::Index>(k)] > 0.0) kept.push_back(active[k]);
        }
        if (kept.size() == active.size()) break;
        active.swap(kept);
    }
    return steps;
}

double com_error(const MatrixXd& x, const VectorXd& before, const VectorXd& after) {
    const VectorXd diff = x * (after - before);
    const VectorXd size = x.cwiseAbs() * before;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < diff.size(); ++j) {
        const double denom = size[j] > 0.0 ? size[j] : 1.0;
        worst = std::max(worst, std::abs(diff[j]) / denom);
    }
    return worst;
}

Reduction assemble(const ParticleMeasure& mu, const VectorXd& w, std::vector<std::size_t> support,
                   ReductionReport report) {
    std::vector<double> coords;
    std::vector<double> weights;
    coords.reserve(support.size() * mu.dim());
    for (std::size_t i : support) {
        auto p = mu.point(i);
        coords.insert(coords.end(), p.begin(), p.end());
        weights.push_back(w[static_cast<Eigen::Index>(i)]);
    }
    report.input_support = mu.size();
    report.output_support = support.size();
    return {ParticleMeasure(mu.dim(), std::move(coords), std::move(weights)), std::move(support), report};
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
}

}  // namespace

Eigen::VectorXd null_vector(const Eigen::MatrixXd& points) {
    if (points.cols() != points.rows() + 2)
        throw std::invalid_argument("null_vector: expected exactly n + 2 points in R^n");
    const MatrixXd a = constraint_matrix(points);
    Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeFullV);
    VectorXd u = svd.matrixV().col(points.cols() - 1);
    normalise_sign(u);
    if (!u.allFinite() || residual(points, u) > residual_bound(points))
        throw NumericalDegeneracy("null_vector: no affine relation within tolerance");
    return u;
}

Eigen::VectorXd caratheodory_step(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                                  Direction direction) {
    if (weights.size() != points.cols())
        throw std::invalid_argument("caratheodory_step: weight count does not match points");
    return apply_relation(weights, null_vector(points), direction);
}

std::size_t affine_dimension(const Eigen::MatrixXd& points, double tol) {
    if (points.cols() == 0) throw std::invalid_argument("affine_dimension: no points");
    if (points.cols() == 1) return 0;
    const MatrixXd centred = points.colwise() - points.rowwise().mean();
    Eigen::JacobiSVD<MatrixXd> svd(centred);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > tol * s[0]) ++rank;
    return rank;
}

std::size_t affine_dimension(const ParticleMeasure& mu, double tol) {
    return affine_dimension(as_matrix(mu), tol);
}

Reduction reduce_algorithm1(const ParticleMeasure& mu) {
    const MatrixXd x = as_matrix(mu);
    const VectorXd w0 = as_vector(mu.weights());
    VectorXd w = w0;
    std::vector<std::size_t> active = all_indices(mu.size());
    ReductionReport report;
    report.elimination_steps = eliminate(x, w, active);
    report.elimination_steps += eliminate_dependent(x, w, active);
    report.max_moment_error = com_error(x, w0, w);
    return assemble(mu, w, std::move(active), report);
}

Reduction procedure_a(const ParticleMeasure& nu) {
    if (nu.size() != 2 * (nu.dim() + 1))
        throw std::invalid_argument("procedure_a: expected exactly 2(n + 1) particles");
    const MatrixXd x = as_matrix(nu);
    const VectorXd w0 = as_vector(nu.weights());
    VectorXd w = w0;
    std::vector<std::size_t> active = all_indices(nu.size());
    ReductionReport report;
    report.procedure_a_calls = 1;
    report.elimination_steps = eliminate(x, w, active);
    report.max_moment_error = com_error(x, w0, w);
    return assemble(nu, w, std::move(active), report);
}

Reduction reduce_algorithm2(const ParticleMeasure& mu) {
    const MatrixXd x = as_matrix(mu);
    const VectorXd w0 = as_vector(mu.weights());
    VectorXd w = w0;
    const std::size_t n = mu.dim();
    std::vector<std::size_t> active = all_indices(mu.size());
    ReductionReport report;

    while (active.size() > n + 1) {
        const std::size_t count = active.size();
        const std::size_t blocks = std::min(2 * (n + 1), count);
        const std::size_t base = count / blocks;
        const std::size_t extra = count % blocks;

        // Contiguous blocks in index order; the larger ones come last.
        std::vector<std::size_t> start(blocks + 1, 0);
        for (std::size_t b = 0; b < blocks; ++b)
            start[b + 1] = start[b] + base + (b >= blocks - extra ? 1 : 0);

        MatrixXd centres = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(blocks));
        VectorXd mass = VectorXd::Zero(static_cast<Eigen::Index>(blocks));
        for (std::size_t b = 0; b < blocks; ++b) {
            const auto bi = static_cast<Eigen::Index>(b);
            for (std::size_t k = start[b]; k < start[b + 1]; ++k) {
                const auto i = static_cast<Eigen::Index>(active[k]);
                centres.col(bi) += w[i] * x.col(i);
                mass[bi] += w[i];
            }
            centres.col(bi) /= mass[bi];
        }

        VectorXd reduced = mass;
        std::vector<std::size_t> alive = all_indices(blocks);
        report.elimination_steps += eliminate(centres, reduced, alive);
        ++report.procedure_a_calls;

        std::vector<std::size_t> next;
        next.reserve(count / 2 + blocks);
        for (std::size_t b : alive) {
            const auto bi = static_cast<Eigen::Index>(b);
            const double factor = reduced[bi] / mass[bi];
            for (std::size_t k = start[b]; k < start[b + 1]; ++k) {
                w[static_cast<Eigen::Index>(active[k])] *= factor;
                next.push_back(active[k]);
            }
        }
        std::vector<bool> keep(mu.size(), false);
        for (std::size_t i : next) keep[i] = true;
        for (std::size_t i : active)
            if (!keep[i]) w[static_cast<Eigen::Index>(i)] = 0.0;
        active.swap(next);
    }

    report.elimination_steps += eliminate_dependent(x, w, active);
    report.max_moment_error = com_error(x, w0, w);
    return assemble(mu, w, std::move(active), report);
}

Reduction reduce_measure(const ParticleMeasure& mu, const MonomialBasis& basis, Algorithm algorithm) {
    if (basis.dim() != mu.dim())
        throw std::invalid_argument("reduce_measure: basis dimension does not match measure");
    const std::size_t n = basis.size();
    const double mass = total_mass(mu);

    ReductionReport report;
    report.input_support = mu.size();
    if (mu.size() <= n + 1) {
        report.output_support = mu.size();
        return {mu, all_indices(mu.size()), report};
    }
    if (n == 0) {
        // Only the mass has to be kept.
        report.output_support = 1;
        report.elimination_steps = 0;
        std::vector<std::size_t> first{0};
        ParticleMeasure one(mu.dim(), std::vector<double>(mu.point(0).begin(), mu.point(0).end()), {mass});
        return {std::move(one), std::move(first), report};
    }

    const ParticleMeasure normalised = mu.scaled(1.0 / mass);
    const IndexedMeasure pushed = pushforward_by_basis(normalised, basis);
    const auto& pc = pushed.measure.coords();
    double magnitude = 0.0;
    for (double c : pc) magnitude = std::max(magnitude, std::abs(c));
    const IndexedMeasure merged = merge_duplicates(pushed.measure, kMergeTol * (1.0 + magnitude));

    std::vector<std::size_t> kept;
    std::vector<double> kept_weights;
    if (merged.measure.size() <= n + 1) {
        kept = all_indices(merged.measure.size());
        kept_weights = merged.measure.weights();
    } else {
        Reduction r = algorithm == Algorithm::elimination ? reduce_algorithm1(merged.measure)
                                                          : reduce_algorithm2(merged.measure);
        report.procedure_a_calls = r.report.procedure_a_calls;
        report.elimination_steps = r.report.elimination_steps;
        kept = std::move(r.support);
        kept_weights = r.measure.weights();
    }

    std::vector<std::size_t> support(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) support[k] = merged.origin[kept[k]];

    double sum = std::accumulate(kept_weights.begin(), kept_weights.end(), 0.0);
    std::vector<double> coords;
    std::vector<double> weights;
    coords.reserve(support.size() * mu.dim());
    for (std::size_t k = 0; k < support.size(); ++k) {
        auto p = mu.point(support[k]);
        coords.insert(coords.end(), p.begin(), p.end());
        weights.push_back(kept_weights[k] * (mass / sum));
    }
    ParticleMeasure reduced(mu.dim(), std::move(coords), std::move(weights));

    // Moment deviation measured on the original basis values.
    const MatrixXd values = as_matrix(pushed.measure);
    VectorXd before = as_vector(normalised.weights());
    VectorXd after = VectorXd::Zero(before.size());
    for (std::size_t k = 0; k < support.size(); ++k)
        after[static_cast<Eigen::Index>(support[k])] = reduced.weight(k) / mass;
    report.max_moment_error = com_error(values, before, after);
    report.output_support = support.size();
    return {std::move(reduced), std::move(support), report};
}

double wendel_probability(unsigned N, unsigned k) {
    if (N == 0 || k == 0) throw std::invalid_argument("wendel_probability: N and k must be >= 1");
    if (k <= N) return 0.0;
    const unsigned top = k - 1;
    if (top <= 120) {
        using u128 = unsigned __int128;
        u128 binom = 1;
        u128 sum = 0;
        for (unsigned j = 0; j < N && j <= top; ++j) {
            sum += binom;
            binom = binom * (top - j) / (j + 1);
        }
        const u128 total = static_cast<u128>(1) << top;
        const u128 numerator = total - sum;
        return std::ldexp(static_cast<double>(numerator), -static_cast<int>(top));
    }
    long double sum = 0.0L;
    for (unsigned j = 0; j < N && j <= top; ++j) {
        const long double log_term = std::lgamma(static_cast<long double>(top) + 1) -
                                     std::lgamma(static_cast<long double>(j) + 1) -
                                     std::lgamma(static_cast<long double>(top - j) + 1) -
                                     static_cast<long double>(top) * std::log(2.0L);
        sum += std::exp(log_term);
    }
    return static_cast<double>(std::clamp(1.0L - sum, 0.0L, 1.0L));
}

}  // namespace recomb
