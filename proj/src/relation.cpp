#include "kdist/relation.hpp"

#include <cctype>
#include <string>

namespace kdist {
namespace {

struct RelationInfo {
    std::string_view wire;
    std::string_view display;
    std::string_view description;
    std::string_view gloss;
};

constexpr std::array<RelationInfo, 7> kInfo = {{
    {"xattr", "xAttr", "how X is perceived after event", "PersonX is seen as"},
    {"xreact", "xReact", "how X reacts in response to event", "PersonX feels"},
    {"xeffect", "xEffect", "what X does after event", "as a result, PersonX"},
    {"xintent", "xIntent", "X's intent in event", "PersonX intends to"},
    {"xwant", "xWant", "what X wants after event", "PersonX wants to"},
    {"xneed", "xNeed", "what X needed for event to take place", "before that, PersonX has to"},
    {"hinderedby", "HinderedBy", "what might hinder event", "this is hindered if"},
}};

const RelationInfo& info(Relation r) { return kInfo[static_cast<std::size_t>(r)]; }

}  // namespace

std::string_view to_string(Relation r) { return info(r).wire; }
std::string_view display_name(Relation r) { return info(r).display; }
std::string_view display_template(Relation r) { return info(r).description; }
std::string_view verbal_gloss(Relation r) { return info(r).gloss; }

std::optional<Relation> parse_relation(std::string_view name) {
    std::string lowered(name);
    for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (Relation r : kAllRelations) {
        if (info(r).wire == lowered) return r;
    }
    return std::nullopt;
}

}  // namespace kdist
