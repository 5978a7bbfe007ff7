#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kdist/corpus.hpp"
#include "kdist/hash.hpp"
#include "kdist/labels.hpp"

namespace kdist::testing {

inline std::filesystem::path data_dir() { return KDIST_DATA_DIR; }
inline std::filesystem::path test_dir() { return KDIST_TEST_DIR; }

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("kdist-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline KnowledgeTriple triple(const std::string& event, Relation r, const std::string& tail) {
    return KnowledgeTriple::make(Event(event), r, tail, {"test-model", "cfg0", "1970-01-01T00:00:00Z"});
}

/// Corpus of n distinct triples over a handful of events and relations.
inline Corpus random_corpus(DeterministicRng& rng, std::size_t n) {
    static const char* kEvents[] = {"PersonX bakes bread", "PersonX calls PersonY", "PersonX loses a bet",
                                    "PersonX plants a tree"};
    static const char* kWords[] = {"happy", "tired", "go", "home", "eat", "rest", "win", "money", "sad", "run"};
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) {
        std::string tail = kWords[rng.below(10)];
        tail += " ";
        tail += kWords[rng.below(10)];
        tail += " " + std::to_string(i);
        c.entries.push_back(triple(kEvents[rng.below(4)], kAllRelations[rng.below(7)], tail));
    }
    return c;
}

inline std::string slurp(const std::filesystem::path& p) { return read_file(p); }

}  // namespace kdist::testing
