#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace kdist {

enum class Relation { xAttr, xReact, xEffect, xIntent, xWant, xNeed, HinderedBy };

inline constexpr std::array<Relation, 7> kAllRelations = {
    Relation::xAttr, Relation::xReact, Relation::xEffect, Relation::xIntent,
    Relation::xWant, Relation::xNeed, Relation::HinderedBy,
};

/// Canonical lowercase wire name ("xattr", "hinderedby", ...).
std::string_view to_string(Relation r);

/// Mixed-case name as used in reports ("xAttr", "HinderedBy").
std::string_view display_name(Relation r);

/// Human-readable description of what the relation captures.
std::string_view display_template(Relation r);

/// Connective phrase placed between event and tail when a triple is rendered
/// as a sentence (scoring, entropy estimation, student export).
std::string_view verbal_gloss(Relation r);

/// Case-insensitive parse of a relation name.
std::optional<Relation> parse_relation(std::string_view name);

}  // namespace kdist
