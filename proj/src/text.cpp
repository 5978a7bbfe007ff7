#include "kdist/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <stdexcept>

namespace kdist {
namespace {

// Decodes the code point starting at byte offset i, advancing i.
UChar32 next_code_point(std::string_view s, std::size_t& i) {
    UChar32 c = 0;
    int32_t pos = static_cast<int32_t>(i);
    U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), pos, static_cast<int32_t>(s.size()), c);
    i = static_cast<std::size_t>(pos);
    return c < 0 ? 0xFFFD : c;
}

UChar32 prev_code_point(std::string_view s, std::size_t end) {
    UChar32 c = 0;
    int32_t pos = static_cast<int32_t>(end);
    U8_PREV(reinterpret_cast<const uint8_t*>(s.data()), 0, pos, c);
    return c < 0 ? 0xFFFD : c;
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }

bool is_word(UChar32 c) { return c == '_' || u_isalnum(c) != 0; }

bool is_punct(UChar32 c) {
    // Symbols (currency, math, modifier) count as punctuation for tokenizing.
    return u_ispunct(c) != 0 || (U_GET_GC_MASK(c) & U_GC_S_MASK) != 0;
}

std::string to_utf8(const icu::UnicodeString& u) {
    std::string out;
    u.toUTF8String(out);
    return out;
}

std::string nfc(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString out = norm->normalize(u, status);
    if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalization failed");
    return to_utf8(out);
}

bool boundary_before(std::string_view text, std::size_t pos) {
    return pos == 0 || !is_word(prev_code_point(text, pos));
}

bool boundary_after(std::string_view text, std::size_t end) {
    if (end >= text.size()) return true;
    std::size_t i = end;
    return !is_word(next_code_point(text, i));
}

}  // namespace

std::string normalize_text(std::string_view raw) {
    const std::string composed = nfc(raw);
    std::string out;
    out.reserve(composed.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < composed.size()) {
        const std::size_t start = i;
        const UChar32 c = next_code_point(composed, i);
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.append(composed, start, i - start);
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end) {
        std::size_t i = begin;
        if (!is_space(next_code_point(s, i))) break;
        begin = i;
    }
    while (end > begin) {
        const UChar32 c = prev_code_point(s, end);
        if (!is_space(c)) break;
        end -= static_cast<std::size_t>(U8_LENGTH(c));
    }
    return std::string(s.substr(begin, end - begin));
}

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        next_code_point(s, i);
        ++n;
    }
    return n;
}

bool is_degenerate(std::string_view tail) {
    const std::string trimmed = trim(tail);
    if (utf8_length(trimmed) < 3) return true;
    std::string rest = replace_all(trimmed, "PersonX", "");
    rest = replace_all(rest, "PersonY", "");
    std::size_t i = 0;
    while (i < rest.size()) {
        const UChar32 c = next_code_point(rest, i);
        if (!is_space(c) && !is_punct(c)) return false;
    }
    return true;
}

std::string to_lower(std::string_view s) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u.toLower(icu::Locale::getRoot());
    return to_utf8(u);
}

std::vector<std::string> tokenize(std::string_view text) {
    const std::string lowered = to_lower(text);
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    while (i < lowered.size()) {
        const std::size_t start = i;
        const UChar32 c = next_code_point(lowered, i);
        if (is_space(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else if (!is_punct(c)) {
            current.append(lowered, start, i - start);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::string replace_all(std::string_view text, std::string_view from, std::string_view to) {
    if (from.empty()) return std::string(text);
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (true) {
        const std::size_t hit = text.find(from, pos);
        if (hit == std::string_view::npos) break;
        out.append(text.substr(pos, hit - pos));
        out.append(to);
        pos = hit + from.size();
    }
    out.append(text.substr(pos));
    return out;
}

std::string replace_whole_word(std::string_view text, std::string_view word, std::string_view to) {
    if (word.empty()) return std::string(text);
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    std::size_t search = 0;
    while (true) {
        const std::size_t hit = text.find(word, search);
        if (hit == std::string_view::npos) break;
        const std::size_t end = hit + word.size();
        if (boundary_before(text, hit) && boundary_after(text, end)) {
            out.append(text.substr(pos, hit - pos));
            out.append(to);
            pos = end;
            search = end;
        } else {
            search = hit + 1;
        }
    }
    out.append(text.substr(pos));
    return out;
}

bool contains_whole_word(std::string_view text, std::string_view word) {
    if (word.empty()) return false;
    std::size_t search = 0;
    while (true) {
        const std::size_t hit = text.find(word, search);
        if (hit == std::string_view::npos) return false;
        if (boundary_before(text, hit) && boundary_after(text, hit + word.size())) return true;
        search = hit + 1;
    }
}

}  // namespace kdist
