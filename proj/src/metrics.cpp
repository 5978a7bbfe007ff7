#include "kdist/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "kdist/error.hpp"

namespace kdist {
namespace {

std::size_t count_positives(std::span<const ScoredLabel> items) {
    std::size_t positives = 0;
    for (const auto& it : items) positives += it.positive ? 1 : 0;
    if (positives == 0 || positives == items.size()) throw DataError("degenerate label set");
    return positives;
}

}  // namespace

std::vector<ScoredLabel> rank_items(std::span<const ScoredLabel> items) {
    std::vector<ScoredLabel> ranked(items.begin(), items.end());
    std::sort(ranked.begin(), ranked.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    return ranked;
}

double average_precision(std::span<const ScoredLabel> items) {
    const std::size_t positives = count_positives(items);
    const auto ranked = rank_items(items);
    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        if (!ranked[k].positive) continue;
        ++hits;
        ap += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    return ap / static_cast<double>(positives);
}

double recall_at_precision(std::span<const ScoredLabel> items, double target_precision) {
    const std::size_t positives = count_positives(items);
    const auto ranked = rank_items(items);
    double best = 0.0;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < ranked.size(); ++k) {
        tp += ranked[k].positive ? 1 : 0;
        // Only cut between distinct scores: a threshold keeps all ties.
        if (k + 1 < ranked.size() && ranked[k + 1].score == ranked[k].score) continue;
        const double precision = static_cast<double>(tp) / static_cast<double>(k + 1);
        if (precision >= target_precision) {
            best = std::max(best, static_cast<double>(tp) / static_cast<double>(positives));
        }
    }
    return best;
}

std::size_t kept_count_for_fraction(double fraction, std::size_t n) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw UsageError("kept fraction must be in (0, 1]");
    const double raw = std::ceil(fraction * static_cast<double>(n) - 1e-9);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 0.0)), n == 0 ? 0 : 1, n);
}

PrecisionCurve precision_curve(std::span<const ScoredLabel> items, std::span<const double> grid) {
    count_positives(items);
    const auto ranked = rank_items(items);
    std::vector<double> fractions(grid.begin(), grid.end());
    std::sort(fractions.begin(), fractions.end(), std::greater<>());

    // prefix[k] = positives among the top k.
    std::vector<std::size_t> prefix(ranked.size() + 1, 0);
    for (std::size_t k = 0; k < ranked.size(); ++k) prefix[k + 1] = prefix[k] + (ranked[k].positive ? 1 : 0);

    PrecisionCurve curve;
    for (double f : fractions) {
        const std::size_t kept = kept_count_for_fraction(f, ranked.size());
        curve.points.push_back({ranked[kept - 1].score, f,
                                static_cast<double>(prefix[kept]) / static_cast<double>(kept), kept});
    }
    return curve;
}

Json PrecisionCurve::to_json() const {
    Json arr = Json::array();
    for (const auto& p : points) {
        Json j;
        j["kept_fraction"] = p.kept_fraction;
        j["kept_count"] = p.kept_count;
        j["threshold"] = p.threshold;
        j["precision"] = p.precision;
        arr.push_back(j);
    }
    return arr;
}

}  // namespace kdist
