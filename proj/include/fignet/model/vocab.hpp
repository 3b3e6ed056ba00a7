#pragma once

#include <map>
#include <string>
#include <vector>

namespace fignet {

// Whitespace tokenizer over lowercased text with a fixed <unk> slot at id 0.
struct Vocab {
    std::map<std::string, int> token_to_id;

    static constexpr const char* kUnk = "<unk>";

    static std::vector<std::string> tokenize(const std::string& text);
    static Vocab build(const std::vector<std::string>& texts);

    int size() const { return static_cast<int>(token_to_id.size()); }
    int id(const std::string& token) const;
    std::vector<int> encode(const std::string& text) const;

    std::string to_json() const;
    static Vocab from_json(const std::string& text);
};

}  // namespace fignet
