#include "kdist/prompt.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_set>

#include "kdist/error.hpp"
#include "kdist/hash.hpp"
#include "kdist/text.hpp"

namespace kdist {
namespace {

const std::set<std::string, std::less<>> kPlaceholders = {"index", "event", "tail", "nameX", "nameY"};

void check_placeholders(std::string_view pattern) {
    std::size_t pos = 0;
    while ((pos = pattern.find('{', pos)) != std::string_view::npos) {
        const std::size_t close = pattern.find('}', pos);
        if (close == std::string_view::npos) throw DataError("unterminated placeholder in \"" + std::string(pattern) + "\"");
        const std::string_view name = pattern.substr(pos + 1, close - pos - 1);
        if (!kPlaceholders.contains(name)) throw DataError("unknown placeholder {" + std::string(name) + "}");
        pos = close + 1;
    }
}

struct Fill {
    std::size_t index = 0;
    std::string_view event;
    std::string_view tail;
    const NameAssignment* names = nullptr;
};

std::string fill(std::string_view pattern, const Fill& f) {
    std::string out;
    std::size_t pos = 0;
    while (pos < pattern.size()) {
        const std::size_t open = pattern.find('{', pos);
        if (open == std::string_view::npos) break;
        const std::size_t close = pattern.find('}', open);
        out.append(pattern.substr(pos, open - pos));
        const std::string_view name = pattern.substr(open + 1, close - open - 1);
        if (name == "index") out += std::to_string(f.index);
        else if (name == "event") out += f.event;
        else if (name == "tail") out += f.tail;
        else if (name == "nameX") out += f.names ? f.names->x : std::string("PersonX");
        else if (name == "nameY") out += f.names ? f.names->y : std::string("PersonY");
        pos = close + 1;
    }
    out.append(pattern.substr(std::min(pos, pattern.size())));
    return out;
}

std::string rstrip_ws(std::string s) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\n' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    return s;
}

std::string parse_value(std::string_view raw) {
    const std::string v = trim(raw);
    if (!v.empty() && v.front() == '"') {
        try {
            return nlohmann::json::parse(v).get<std::string>();
        } catch (const nlohmann::json::exception&) {
            throw DataError("bad quoted value " + v);
        }
    }
    return v;
}

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

template <typename Fn>
void for_each_entry(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const std::size_t colon = line.find(':');
        if (colon == std::string_view::npos) {
            throw DataError("line " + std::to_string(line_no) + ": expected \"key: value\"");
        }
        try {
            fn(trim(line.substr(0, colon)), line.substr(colon + 1));
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

bool is_trailing_punct(char c) { return c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':'; }

std::string strip_trailing_punct(std::string s) {
    while (true) {
        s = trim(s);
        if (s.empty() || !is_trailing_punct(s.back())) return s;
        s.pop_back();
    }
}

}  // namespace

// ---- names ------------------------------------------------------------------

void NameAssignment::validate() const {
    if (x.empty() || y.empty()) throw DataError("name assignment has an empty name");
    if (x == y) throw DataError("name assignment uses the same name twice: " + x);
    if (x.find(y) != std::string::npos || y.find(x) != std::string::npos) {
        throw DataError("names overlap: " + x + " / " + y);
    }
}

NameAssignment NamePool::draw(std::uint64_t key) const {
    if (names.size() < 2) throw DataError("name pool needs at least two names");
    DeterministicRng rng(key);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const std::size_t i = static_cast<std::size_t>(rng.below(names.size()));
        std::size_t j = static_cast<std::size_t>(rng.below(names.size() - 1));
        if (j >= i) ++j;
        NameAssignment a{names[i], names[j]};
        if (a.x.find(a.y) == std::string::npos && a.y.find(a.x) == std::string::npos) return a;
    }
    throw DataError("name pool has no non-overlapping pair");
}

NamePool parse_name_pool(std::string_view text) {
    NamePool pool;
    for_each_entry(text, [&](const std::string& key, std::string_view value) {
        const auto words = split_ws(value);
        if (key == "slot") {
            if (words.size() != 2) throw DataError("slot needs exactly two names");
            NameAssignment a{words[0], words[1]};
            a.validate();
            pool.slots.push_back(std::move(a));
        } else if (key == "pool") {
            pool.names.insert(pool.names.end(), words.begin(), words.end());
        } else {
            throw DataError("unknown key \"" + key + "\"");
        }
    });
    std::unordered_set<std::string> seen;
    for (const auto& n : pool.names) {
        if (!seen.insert(n).second) throw DataError("duplicate pool name " + n);
    }
    return pool;
}

std::string substitute_names(std::string_view text, const NameAssignment& names) {
    return replace_all(replace_all(text, "PersonX", names.x), "PersonY", names.y);
}

std::string restore_markers(std::string_view text, const NameAssignment& names) {
    // Sentinels keep a restored marker from being matched by the second name.
    const std::string x = replace_whole_word(text, names.x, "\x01");
    const std::string xy = replace_whole_word(x, names.y, "\x02");
    return replace_all(replace_all(xy, "\x01", "PersonX"), "\x02", "PersonY");
}

// ---- templates ----------------------------------------------------------------

PromptTemplate parse_template(std::string_view text) {
    PromptTemplate t;
    bool explicit_n = false;
    for_each_entry(text, [&](const std::string& key, std::string_view raw) {
        if (key == "relation") {
            const auto r = parse_relation(parse_value(raw));
            if (!r) throw DataError("unknown relation \"" + parse_value(raw) + "\"");
            t.relation = r;
        } else if (key == "task_prompt") {
            t.task_prompt = parse_value(raw);
        } else if (key == "header_separator") {
            t.header_separator = parse_value(raw);
        } else if (key == "input") {
            t.input_pattern = parse_value(raw);
        } else if (key == "joiner") {
            t.joiner = parse_value(raw);
        } else if (key == "output") {
            t.output_pattern = parse_value(raw);
        } else if (key == "open") {
            t.open_pattern = parse_value(raw);
        } else if (key == "connective") {
            t.connective = parse_value(raw);
        } else if (key == "block_separator") {
            t.block_separator = parse_value(raw);
        } else if (key == "n_examples") {
            const std::string v = parse_value(raw);
            try {
                t.n_examples = static_cast<std::size_t>(std::stoul(v));
            } catch (const std::exception&) {
                throw DataError("n_examples must be a positive integer");
            }
            explicit_n = true;
        } else if (key == "example") {
            const std::string v(raw);
            const std::size_t bar = v.find('|');
            if (bar == std::string::npos) throw DataError("example needs \"event | tail\"");
            t.examples.push_back({normalize_text(v.substr(0, bar)), normalize_text(v.substr(bar + 1))});
        } else {
            throw DataError("unknown key \"" + key + "\"");
        }
    });
    for (const auto* p : {&t.input_pattern, &t.output_pattern, &t.open_pattern}) check_placeholders(*p);
    if (t.input_pattern.empty()) throw DataError("template has no input pattern");
    if (!explicit_n) t.n_examples = t.examples.size();
    if (t.n_examples < 1) throw DataError("template needs n_examples >= 1");
    if (t.relation && t.examples.size() != t.n_examples) {
        throw DataError("template lists " + std::to_string(t.examples.size()) + " examples but n_examples is " +
                        std::to_string(t.n_examples));
    }
    return t;
}

PromptTemplate load_template(const std::filesystem::path& path) {
    try {
        return parse_template(read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
    TemplateSet set;
    set.events_ = load_template(dir / "events.tmpl");
    for (Relation r : kAllRelations) {
        const auto path = dir / (std::string(to_string(r)) + ".tmpl");
        PromptTemplate t = load_template(path);
        if (t.relation != r) throw DataError(path.string() + ": relation field does not match file name");
        set.relations_.emplace(r, std::move(t));
    }
    try {
        set.names_ = parse_name_pool(read_file(dir / "names.txt"));
    } catch (const DataError& e) {
        throw DataError((dir / "names.txt").string() + ": " + e.what());
    }
    for (const auto& [r, t] : set.relations_) {
        if (set.names_.slots.size() < t.n_examples) {
            throw DataError("names.txt has fewer slots than the " + std::string(display_name(r)) + " template needs");
        }
    }
    return set;
}

const PromptTemplate& TemplateSet::for_relation(Relation r) const { return relations_.at(r); }

SeedPool SeedPool::load(const std::filesystem::path& path) {
    SeedPool pool;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    std::unordered_set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto ev = Event::try_make(t);
        if (!ev) throw DataError(path.string() + ": line " + std::to_string(line_no) + ": invalid event");
        if (!seen.insert(ev->text()).second) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + ": duplicate event");
        }
        pool.events.push_back(std::move(*ev));
    }
    return pool;
}

std::vector<Event> sample_seed_events(const SeedPool& pool, std::size_t k, std::uint64_t rng_seed) {
    if (k > pool.events.size()) {
        throw DataError("cannot sample " + std::to_string(k) + " seed events from a pool of " +
                        std::to_string(pool.events.size()));
    }
    std::vector<std::size_t> idx(pool.events.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    DeterministicRng rng(rng_seed);
    // Partial Fisher-Yates: the first k positions become the sample.
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    std::vector<Event> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.push_back(pool.events[idx[i]]);
    return out;
}

// ---- rendering ----------------------------------------------------------------

std::string render_event_prompt(const PromptTemplate& tmpl, std::span<const Event> seed_events) {
    if (seed_events.size() != tmpl.n_examples) {
        throw DataError("event prompt needs " + std::to_string(tmpl.n_examples) + " seed events, got " +
                        std::to_string(seed_events.size()));
    }
    std::string out;
    if (!tmpl.task_prompt.empty()) out += tmpl.task_prompt + tmpl.header_separator;
    for (std::size_t i = 0; i < seed_events.size(); ++i) {
        const Fill f{i + 1, seed_events[i].text(), {}, nullptr};
        out += fill(tmpl.input_pattern, f) + tmpl.joiner + fill(tmpl.output_pattern, f);
        out += tmpl.block_separator;
    }
    const Fill open{seed_events.size() + 1, {}, {}, nullptr};
    out += rstrip_ws(fill(tmpl.input_pattern, open) + tmpl.joiner + fill(tmpl.open_pattern, open));
    return out;
}

std::string render_inference_prompt(const PromptTemplate& tmpl, const Event& target,
                                    std::span<const FewShotExample> few_shot, const NameAssignment& names,
                                    std::span<const NameAssignment> slot_names) {
    if (few_shot.size() != tmpl.n_examples) {
        throw DataError("inference prompt needs " + std::to_string(tmpl.n_examples) + " few-shot examples, got " +
                        std::to_string(few_shot.size()));
    }
    if (slot_names.size() < few_shot.size()) throw DataError("not enough slot names for the few-shot examples");
    std::string out;
    if (!tmpl.task_prompt.empty()) out += tmpl.task_prompt + tmpl.header_separator;
    for (std::size_t i = 0; i < few_shot.size(); ++i) {
        const NameAssignment& slot = slot_names[i];
        const std::string event = substitute_names(few_shot[i].event, slot);
        const std::string tail = substitute_names(few_shot[i].tail, slot);
        const Fill f{i + 1, event, tail, &slot};
        out += fill(tmpl.input_pattern, f) + tmpl.joiner + fill(tmpl.output_pattern, f);
        out += tmpl.block_separator;
    }
    const std::string event = substitute_names(target.text(), names);
    const Fill open{few_shot.size() + 1, event, {}, &names};
    out += rstrip_ws(fill(tmpl.input_pattern, open) + tmpl.joiner + fill(tmpl.open_pattern, open));
    return out;
}

std::string render_inference_prompt(const TemplateSet& set, Relation relation, const Event& target,
                                    const NameAssignment& names) {
    const PromptTemplate& tmpl = set.for_relation(relation);
    return render_inference_prompt(tmpl, target, tmpl.examples, names, set.names().slots);
}

// ---- parsing ------------------------------------------------------------------

std::vector<std::string> parse_event_completion(std::string_view raw) {
    static const std::regex kMarker(R"(^\s*\d+\.\s*Event:(.*)$)");
    std::vector<std::string> out;
    auto accept = [&](std::string_view fragment) {
        std::string text = strip_trailing_punct(normalize_text(fragment));
        text = replace_whole_word(text, "X", "PersonX");
        text = replace_whole_word(text, "Y", "PersonY");
        if (auto ev = Event::try_make(text)) out.push_back(ev->text());
    };

    std::size_t pos = 0;
    bool first = true;
    while (pos <= raw.size()) {
        std::size_t nl = raw.find('\n', pos);
        if (nl == std::string_view::npos) nl = raw.size();
        const std::string line(raw.substr(pos, nl - pos));
        pos = nl + 1;
        if (first) {
            first = false;
            accept(line);
            continue;
        }
        if (trim(line).empty()) continue;
        std::smatch m;
        if (!std::regex_match(line, m, kMarker)) break;
        accept(m[1].str());
    }
    return out;
}

std::optional<std::string> parse_inference_completion(const PromptTemplate& tmpl, std::string_view raw) {
    static const std::regex kNextBlock(R"((^|\s)(Situation\b|\d+\.\s))");
    std::string line(raw.substr(0, std::min(raw.find('\n'), raw.size())));
    std::smatch m;
    if (std::regex_search(line, m, kNextBlock)) line.erase(static_cast<std::size_t>(m.position(0)));
    std::string text = normalize_text(line);
    if (!tmpl.connective.empty()) {
        const std::string& c = tmpl.connective;
        if (text == c) {
            text.clear();
        } else if (text.size() > c.size() && text.compare(0, c.size(), c) == 0 && text[c.size()] == ' ') {
            text.erase(0, c.size() + 1);
        }
    }
    text = strip_trailing_punct(text);
    if (text.empty()) return std::nullopt;
    return text;
}

}  // namespace kdist
