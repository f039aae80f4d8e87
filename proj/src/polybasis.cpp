#include "recomb/polybasis.hpp"

#include <map>
#include <stdexcept>

namespace recomb {

std::size_t binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t result = 1;
    for (std::size_t i = 1; i <= k; ++i) result = result * (n - k + i) / i;
    return result;
}

namespace {

// All exponent tuples of length dim summing to total, descending lex order.
void compositions(std::size_t dim, int total, std::vector<int>& prefix,
                  std::vector<std::vector<int>>& out) {
    if (prefix.size() + 1 == dim) {
        prefix.push_back(total);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (int e = total; e >= 0; --e) {
        prefix.push_back(e);
        compositions(dim, total - e, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

MonomialBasis::MonomialBasis(std::size_t dim, int degree, std::vector<double> center, double scale)
    : dim_(dim), degree_(degree), center_(std::move(center)), scale_(scale) {
    if (dim == 0) throw std::invalid_argument("MonomialBasis: dimension must be >= 1");
    if (degree < 0) throw std::invalid_argument("MonomialBasis: degree must be >= 0");
    if (!(scale > 0.0)) throw std::invalid_argument("MonomialBasis: scale must be positive");
    if (center_.empty()) center_.assign(dim, 0.0);
    if (center_.size() != dim) throw std::invalid_argument("MonomialBasis: center has wrong dimension");

    for (int k = 1; k <= degree; ++k) {
        std::vector<int> prefix;
        compositions(dim, k, prefix, exponents_);
    }

    std::map<std::vector<int>, std::size_t> index;
    for (std::size_t i = 0; i < exponents_.size(); ++i) index.emplace(exponents_[i], i);

    parent_.resize(exponents_.size());
    factor_.resize(exponents_.size());
    for (std::size_t i = 0; i < exponents_.size(); ++i) {
        std::vector<int> e = exponents_[i];
        std::size_t j = 0;
        while (e[j] == 0) ++j;
        factor_[i] = j;
        --e[j];
        int rest = 0;
        for (int v : e) rest += v;
        parent_[i] = rest == 0 ? -1 : static_cast<std::ptrdiff_t>(index.at(e));
    }
}

void MonomialBasis::evaluate(std::span<const double> x, std::span<double> out) const {
    if (x.size() != dim_) throw std::invalid_argument("MonomialBasis::evaluate: dimension mismatch");
    if (out.size() != exponents_.size())
        throw std::invalid_argument("MonomialBasis::evaluate: output has wrong size");
    double y[64];
    std::vector<double> heap;
    double* shifted = y;
    if (dim_ > 64) {
        heap.resize(dim_);
        shifted = heap.data();
    }
    for (std::size_t j = 0; j < dim_; ++j) shifted[j] = (x[j] - center_[j]) / scale_;
    // Parents always precede children in graded order.
    for (std::size_t i = 0; i < exponents_.size(); ++i) {
        const double v = shifted[factor_[i]];
        out[i] = parent_[i] < 0 ? v : out[static_cast<std::size_t>(parent_[i])] * v;
    }
}

std::vector<double> MonomialBasis::evaluate(std::span<const double> x) const {
    std::vector<double> out(size());
    evaluate(x, out);
    return out;
}

MonomialBasis build_basis(std::size_t dim, int degree, std::vector<double> center, double scale) {
    return MonomialBasis(dim, degree, std::move(center), scale);
}

MonomialBasis raw_basis(std::size_t dim, int degree) {
    return MonomialBasis(dim, degree, std::vector<double>(dim, 0.0), 1.0);
}

}  // namespace recomb
