#pragma once

#include <span>
#include <string>
#include <vector>

#include "kdist/jsonl.hpp"

namespace kdist {

/// One judged item: critic score and whether humans accepted it.
struct ScoredLabel {
    std::string id;
    double score;
    bool positive;
};

/// Items ordered by descending score, ties broken by ascending id.
std::vector<ScoredLabel> rank_items(std::span<const ScoredLabel> items);

/// Non-interpolated AP: sum over ranks k of (R_k - R_{k-1}) * P_k.
/// DataError "degenerate label set" unless both classes are present.
double average_precision(std::span<const ScoredLabel> items);

/// Largest recall among score thresholds (keep score >= t) whose precision
/// reaches target_precision; 0 when none does.
double recall_at_precision(std::span<const ScoredLabel> items, double target_precision = 0.8);

struct CurvePoint {
    double threshold;
    double kept_fraction;
    double precision;
    std::size_t kept_count;
};

struct PrecisionCurve {
    std::vector<CurvePoint> points;  // descending kept_fraction

    Json to_json() const;
};

/// ceil(f * n), guarded against floating-point overshoot, clamped to [1, n].
std::size_t kept_count_for_fraction(double fraction, std::size_t n);

/// For each kept fraction f in `grid` (0 < f <= 1), keep the top ceil(f n)
/// ranked items and report their precision.
PrecisionCurve precision_curve(std::span<const ScoredLabel> items, std::span<const double> grid);

}  // namespace kdist
