#include "kgqa/text.hpp"

#include <cctype>

namespace kgqa {

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = true; // leading whitespace is dropped
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_ws) {
                out.push_back(' ');
                in_ws = true;
            }
        } else {
            out.push_back(c);
            in_ws = false;
        }
    }
    while (!out.empty() && out.back() == ' ')
        out.pop_back();
    return out;
}

int estimate_tokens(std::string_view text) {
    if (text.empty())
        return 0;
    return static_cast<int>((text.size() + 3) / 4);
}

std::vector<SentenceRange> split_sentences(std::string_view text) {
    std::vector<SentenceRange> ranges;
    if (text.empty())
        return ranges;
    std::size_t begin = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        char c = text[i];
        if ((c == '.' || c == '!' || c == '?') && i + 1 < n &&
            std::isspace(static_cast<unsigned char>(text[i + 1]))) {
            std::size_t end = i + 1;
            while (end < n && std::isspace(static_cast<unsigned char>(text[end])))
                ++end;
            ranges.push_back({begin, end});
            begin = end;
            i = end;
        } else {
            ++i;
        }
    }
    if (begin < n)
        ranges.push_back({begin, n});
    return ranges;
}

} // namespace kgqa
