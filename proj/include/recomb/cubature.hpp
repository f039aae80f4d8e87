#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "recomb/error.hpp"

namespace recomb {

/// One linear piece of a path: time advances by duration, the d driving
/// coordinates by increment.
struct Segment {
    double duration = 0.0;
    std::vector<double> increment;
};

/// Piecewise-linear bounded-variation path in (t, w^1, ..., w^d).
class BVPath {
public:
    BVPath() = default;
    explicit BVPath(std::vector<Segment> segments);

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] const std::vector<Segment>& segments() const { return segments_; }
    [[nodiscard]] double total_duration() const { return total_; }
    /// Euclidean length of the spatial part.
    [[nodiscard]] double length() const;

private:
    std::size_t dim_ = 0;
    std::vector<Segment> segments_;
    double total_ = 0.0;
};

BVPath concatenate(const BVPath& a, const BVPath& b);

/// Path over [0, T]: durations times T, spatial increments times sqrt(T).
BVPath rescale(const BVPath& path, double T);

/// Letters: 0 is time, 1..d the driving coordinates.
using Word = std::vector<int>;

/// Word length plus the number of time letters.
int word_degree(std::span<const int> word);

/// All words over {0..d} with word_degree <= m, shortest first.
std::vector<Word> words_up_to_degree(std::size_t d, int m);

/// Iterated integrals of all words up to a fixed length, stored densely per
/// level. Level k holds (d+1)^k coefficients, words read as base-(d+1)
/// numbers with the first letter most significant.
class TruncatedSignature {
public:
    /// The unit element: 1 on the empty word, 0 elsewhere.
    TruncatedSignature(std::size_t alphabet, int depth);

    [[nodiscard]] std::size_t alphabet() const { return alphabet_; }
    [[nodiscard]] int depth() const { return static_cast<int>(levels_.size()) - 1; }
    [[nodiscard]] const std::vector<double>& level(int k) const { return levels_[static_cast<std::size_t>(k)]; }
    std::vector<double>& level(int k) { return levels_[static_cast<std::size_t>(k)]; }

    [[nodiscard]] double coeff(std::span<const int> word) const;
    void set(std::span<const int> word, double value);

    /// Restriction to words of length <= depth.
    [[nodiscard]] TruncatedSignature truncated(int depth) const;

    /// Truncated tensor product (Chen concatenation).
    friend TruncatedSignature operator*(const TruncatedSignature& a, const TruncatedSignature& b);

    TruncatedSignature& operator+=(const TruncatedSignature& other);
    TruncatedSignature& operator*=(double factor);

private:
    [[nodiscard]] std::size_t index(std::span<const int> word) const;

    std::size_t alphabet_;
    std::vector<std::vector<double>> levels_;
};

/// Signature of one linear segment: exp(duration e_0 + sum_i increment_i e_i).
TruncatedSignature segment_signature(const Segment& segment, int depth);

TruncatedSignature signature(const BVPath& path, int depth);

/// Expected Stratonovich signature of (t, B^1..B^d) over [0, T], truncated at
/// word length m: the tensor exponential of T (e_0 + 1/2 sum_i e_i e_i).
/// Every word with word_degree <= m is included. Throws UnsupportedDepth for
/// m > 8.
TruncatedSignature bm_expected_iterated_integrals(std::size_t d, int m, double T = 1.0);

/// Paths on [0, 1] with weights; no degree guarantee.
struct CubatureFormula {
    std::size_t d = 0;
    int m = 0;
    std::vector<BVPath> paths;
    std::vector<double> weights;
};

struct CubatureCheck {
    double max_abs_deviation = 0.0;
    Word worst_word;
    bool passed = false;
};

/// Largest deviation, over words of degree <= m, between the weighted path
/// signatures and the Brownian expectations.
CubatureCheck verify_cubature(const CubatureFormula& formula, double tol);

/// A cubature formula on Wiener space that has passed verify_cubature for its
/// declared degree.
class WienerCubature {
public:
    /// Throws ParseError on a structurally invalid formula and
    /// DegreeCheckFailed if verification fails at tol.
    explicit WienerCubature(CubatureFormula formula, double tol = 1e-10);

    [[nodiscard]] std::size_t d() const { return formula_.d; }
    [[nodiscard]] int degree() const { return formula_.m; }
    [[nodiscard]] std::size_t size() const { return formula_.paths.size(); }
    [[nodiscard]] const std::vector<BVPath>& paths() const { return formula_.paths; }
    [[nodiscard]] const std::vector<double>& weights() const { return formula_.weights; }
    [[nodiscard]] const CubatureFormula& formula() const { return formula_; }
    /// Longest spatial path length.
    [[nodiscard]] double max_length() const;

private:
    CubatureFormula formula_;
};

/// 2d straight paths with increments +-sqrt(d) e_i, weights 1/(2d); degree 3.
WienerCubature degree3_formula(std::size_t d);

std::vector<BVPath> rescale(const WienerCubature& formula, double T);

/// JSON: {"d": .., "m": .., "weights": [..], "paths": [[[dt, [dw..]], ..], ..]}
/// Reads the JSON without checking the degree.
CubatureFormula formula_from_json(const std::string& text);
/// Reads and verifies at 1e-8.
WienerCubature parse_formula(const std::string& text);
WienerCubature load_formula(const std::filesystem::path& file);
std::string formula_to_json(const CubatureFormula& formula);

}  // namespace recomb
