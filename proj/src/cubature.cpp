#include "recomb/cubature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace recomb {

namespace {

constexpr double kDurationTol = 1e-12;
constexpr int kMaxDepth = 8;

std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace

BVPath::BVPath(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw std::invalid_argument("BVPath: no segments");
    dim_ = segments_.front().increment.size();
    for (const auto& s : segments_) {
        if (!(s.duration > 0.0) || !std::isfinite(s.duration))
            throw std::invalid_argument("BVPath: segment durations must be positive");
        if (s.increment.size() != dim_) throw std::invalid_argument("BVPath: inconsistent segment dimension");
        for (double v : s.increment)
            if (!std::isfinite(v)) throw std::invalid_argument("BVPath: non-finite increment");
        total_ += s.duration;
    }
}

double BVPath::length() const {
    double len = 0.0;
    for (const auto& s : segments_) {
        double sq = 0.0;
        for (double v : s.increment) sq += v * v;
        len += std::sqrt(sq);
    }
    return len;
}

BVPath concatenate(const BVPath& a, const BVPath& b) {
    std::vector<Segment> segs = a.segments();
    segs.insert(segs.end(), b.segments().begin(), b.segments().end());
    return BVPath(std::move(segs));
}

BVPath rescale(const BVPath& path, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("rescale: T must be positive");
    const double root = std::sqrt(T);
    std::vector<Segment> segs = path.segments();
    for (auto& s : segs) {
        s.duration *= T;
        for (double& v : s.increment) v *= root;
    }
    return BVPath(std::move(segs));
}

int word_degree(std::span<const int> word) {
    int deg = 0;
    for (int letter : word) deg += letter == 0 ? 2 : 1;
    return deg;
}

std::vector<Word> words_up_to_degree(std::size_t d, int m) {
    std::vector<Word> out{Word{}};
    std::vector<Word> frontier{Word{}};
    while (!frontier.empty()) {
        std::vector<Word> next;
        for (const auto& w : frontier) {
            for (int letter = 0; letter <= static_cast<int>(d); ++letter) {
                Word v = w;
                v.push_back(letter);
                if (word_degree(v) <= m) next.push_back(std::move(v));
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        frontier.swap(next);
    }
    return out;
}

TruncatedSignature::TruncatedSignature(std::size_t alphabet, int depth) : alphabet_(alphabet) {
    if (alphabet == 0) throw std::invalid_argument("TruncatedSignature: empty alphabet");
    if (depth < 0) throw std::invalid_argument("TruncatedSignature: negative depth");
    levels_.resize(static_cast<std::size_t>(depth) + 1);
    for (int k = 0; k <= depth; ++k) levels_[static_cast<std::size_t>(k)].assign(ipow(alphabet, k), 0.0);
    levels_[0][0] = 1.0;
}

std::size_t TruncatedSignature::index(std::span<const int> word) const {
    if (static_cast<int>(word.size()) > depth())
        throw std::out_of_range("TruncatedSignature: word longer than depth");
    std::size_t idx = 0;
    for (int letter : word) {
        if (letter < 0 || static_cast<std::size_t>(letter) >= alphabet_)
            throw std::out_of_range("TruncatedSignature: letter outside alphabet");
        idx = idx * alphabet_ + static_cast<std::size_t>(letter);
    }
    return idx;
}

double TruncatedSignature::coeff(std::span<const int> word) const {
    return levels_[word.size()][index(word)];
}

void TruncatedSignature::set(std::span<const int> word, double value) {
    levels_[word.size()][index(word)] = value;
}

TruncatedSignature TruncatedSignature::truncated(int depth) const {
    TruncatedSignature out(alphabet_, std::min(depth, this->depth()));
    for (int k = 0; k <= out.depth(); ++k) out.level(k) = level(k);
    return out;
}

TruncatedSignature operator*(const TruncatedSignature& a, const TruncatedSignature& b) {
    if (a.alphabet_ != b.alphabet_) throw std::invalid_argument("signature product: alphabet mismatch");
    const int depth = std::min(a.depth(), b.depth());
    TruncatedSignature out(a.alphabet_, depth);
    out.levels_[0][0] = 0.0;
    for (int k = 0; k <= depth; ++k) {
        auto& dst = out.level(k);
        for (int i = 0; i <= k; ++i) {
            const auto& left = a.level(i);
            const auto& right = b.level(k - i);
            const std::size_t rs = right.size();
            for (std::size_t p = 0; p < left.size(); ++p) {
                const double lv = left[p];
                if (lv == 0.0) continue;
                double* row = dst.data() + p * rs;
                for (std::size_t q = 0; q < rs; ++q) row[q] += lv * right[q];
            }
        }
    }
    return out;
}

TruncatedSignature& TruncatedSignature::operator+=(const TruncatedSignature& other) {
    if (other.alphabet_ != alphabet_ || other.depth() != depth())
        throw std::invalid_argument("signature sum: shape mismatch");
    for (std::size_t k = 0; k < levels_.size(); ++k)
        for (std::size_t i = 0; i < levels_[k].size(); ++i) levels_[k][i] += other.levels_[k][i];
    return *this;
}

TruncatedSignature& TruncatedSignature::operator*=(double factor) {
    for (auto& lvl : levels_)
        for (double& v : lvl) v *= factor;
    return *this;
}

TruncatedSignature segment_signature(const Segment& segment, int depth) {
    const std::size_t alphabet = segment.increment.size() + 1;
    std::vector<double> letters(alphabet);
    letters[0] = segment.duration;
    std::copy(segment.increment.begin(), segment.increment.end(), letters.begin() + 1);

    TruncatedSignature out(alphabet, depth);
    for (int k = 1; k <= depth; ++k) {
        const auto& prev = out.level(k - 1);
        auto& cur = out.level(k);
        for (std::size_t p = 0; p < prev.size(); ++p)
            for (std::size_t a = 0; a < alphabet; ++a)
                cur[p * alphabet + a] = prev[p] * letters[a] / static_cast<double>(k);
    }
    return out;
}

TruncatedSignature signature(const BVPath& path, int depth) {
    if (depth < 1) throw std::invalid_argument("signature: depth must be >= 1");
    TruncatedSignature out(path.dim() + 1, depth);
    for (const auto& seg : path.segments()) out = out * segment_signature(seg, depth);
    return out;
}

TruncatedSignature bm_expected_iterated_integrals(std::size_t d, int m, double T) {
    if (m > kMaxDepth) throw UnsupportedDepth("bm_expected_iterated_integrals: degree above 8");
    if (m < 0) throw std::invalid_argument("bm_expected_iterated_integrals: negative degree");
    if (!(T > 0.0)) throw std::invalid_argument("bm_expected_iterated_integrals: T must be positive");
    const std::size_t alphabet = d + 1;

    // Right multiplication by the generator T e_0 + T/2 sum_i e_i e_i.
    auto times_generator = [&](const TruncatedSignature& x) {
        TruncatedSignature y(alphabet, x.depth());
        y.level(0)[0] = 0.0;
        for (int k = 1; k <= x.depth(); ++k) {
            const auto& one_less = x.level(k - 1);
            auto& dst = y.level(k);
            for (std::size_t p = 0; p < one_less.size(); ++p) dst[p * alphabet] += T * one_less[p];
            if (k >= 2) {
                const auto& two_less = x.level(k - 2);
                for (std::size_t p = 0; p < two_less.size(); ++p)
                    for (std::size_t i = 1; i < alphabet; ++i)
                        dst[(p * alphabet + i) * alphabet + i] += 0.5 * T * two_less[p];
            }
        }
        return y;
    };

    TruncatedSignature result(alphabet, m);
    TruncatedSignature term(alphabet, m);
    for (int k = 1; k <= m; ++k) {
        term = times_generator(term);
        term *= 1.0 / static_cast<double>(k);
        result += term;
    }
    return result;
}

CubatureCheck verify_cubature(const CubatureFormula& formula, double tol) {
    CubatureCheck check;
    const int m = formula.m;
    const TruncatedSignature target = bm_expected_iterated_integrals(formula.d, m, 1.0);
    TruncatedSignature sum(formula.d + 1, m);
    sum *= 0.0;
    for (std::size_t j = 0; j < formula.paths.size(); ++j) {
        TruncatedSignature s = m >= 1 ? signature(formula.paths[j], m) : TruncatedSignature(formula.d + 1, 0);
        s *= formula.weights[j];
        sum += s;
    }
    check.max_abs_deviation = -1.0;
    for (const Word& w : words_up_to_degree(formula.d, m)) {
        const double dev = std::abs(sum.coeff(w) - target.coeff(w));
        if (dev > check.max_abs_deviation) {
            check.max_abs_deviation = dev;
            check.worst_word = w;
        }
    }
    check.passed = check.max_abs_deviation <= tol;
    return check;
}

WienerCubature::WienerCubature(CubatureFormula formula, double tol) : formula_(std::move(formula)) {
    if (formula_.d == 0) throw ParseError("cubature: d must be >= 1");
    if (formula_.m < 1) throw ParseError("cubature: m must be >= 1");
    if (formula_.m > kMaxDepth) throw UnsupportedDepth("cubature: degree above 8 is not supported");
    if (formula_.paths.empty()) throw ParseError("cubature: no paths");
    if (formula_.paths.size() != formula_.weights.size())
        throw ParseError("cubature: path and weight counts differ");
    for (double w : formula_.weights)
        if (!(w > 0.0) || !std::isfinite(w)) throw ParseError("cubature: weights must be positive");
    for (const auto& p : formula_.paths) {
        if (p.dim() != formula_.d) throw ParseError("cubature: path dimension differs from d");
        if (std::abs(p.total_duration() - 1.0) > kDurationTol)
            throw ParseError("cubature: path durations must sum to 1");
    }
    const CubatureCheck check = verify_cubature(formula_, tol);
    if (!check.passed) {
        std::ostringstream msg;
        msg << "cubature: formula does not integrate degree " << formula_.m << " (deviation "
            << check.max_abs_deviation << " at word (";
        for (std::size_t i = 0; i < check.worst_word.size(); ++i)
            msg << (i ? "," : "") << check.worst_word[i];
        msg << "))";
        throw DegreeCheckFailed(msg.str());
    }
}

double WienerCubature::max_length() const {
    double len = 0.0;
    for (const auto& p : formula_.paths) len = std::max(len, p.length());
    return len;
}

WienerCubature degree3_formula(std::size_t d) {
    if (d == 0) throw std::invalid_argument("degree3_formula: d must be >= 1");
    CubatureFormula f;
    f.d = d;
    f.m = 3;
    const double step = std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < d; ++i) {
        for (double sign : {1.0, -1.0}) {
            Segment s;
            s.duration = 1.0;
            s.increment.assign(d, 0.0);
            s.increment[i] = sign * step;
            f.paths.emplace_back(std::vector<Segment>{s});
            f.weights.push_back(1.0 / static_cast<double>(2 * d));
        }
    }
    return WienerCubature(std::move(f), 1e-10);
}

std::vector<BVPath> rescale(const WienerCubature& formula, double T) {
    std::vector<BVPath> out;
    out.reserve(formula.size());
    for (const auto& p : formula.paths()) out.push_back(rescale(p, T));
    return out;
}

CubatureFormula formula_from_json(const std::string& text) {
    CubatureFormula f;
    try {
        const auto j = nlohmann::json::parse(text);
        f.d = j.at("d").get<std::size_t>();
        f.m = j.at("m").get<int>();
        f.weights = j.at("weights").get<std::vector<double>>();
        for (const auto& jp : j.at("paths")) {
            std::vector<Segment> segs;
            for (const auto& js : jp) {
                if (!js.is_array() || js.size() != 2) throw ParseError("cubature file: segment must be [dt, [dw..]]");
                Segment s;
                s.duration = js.at(0).get<double>();
                s.increment = js.at(1).get<std::vector<double>>();
                segs.push_back(std::move(s));
            }
            f.paths.emplace_back(std::move(segs));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("cubature file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("cubature file: ") + e.what());
    }
    return f;
}

WienerCubature parse_formula(const std::string& text) { return WienerCubature(formula_from_json(text), 1e-8); }

WienerCubature load_formula(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ParseError("cubature file: cannot open " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_formula(buf.str());
}

std::string formula_to_json(const CubatureFormula& formula) {
    nlohmann::json j;
    j["d"] = formula.d;
    j["m"] = formula.m;
    j["weights"] = formula.weights;
    auto paths = nlohmann::json::array();
    for (const auto& p : formula.paths) {
        auto jp = nlohmann::json::array();
        for (const auto& s : p.segments()) jp.push_back(nlohmann::json::array({s.duration, s.increment}));
        paths.push_back(jp);
    }
    j["paths"] = paths;
    return j.dump(2);
}

}  // namespace recomb
