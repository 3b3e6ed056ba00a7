#include "fignet/model/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <json.hpp>
#include <set>
#include <sstream>

#include "fignet/common.hpp"

using nlohmann::json;

namespace fignet {

std::vector<std::string> Vocab::tokenize(const std::string& text) {
    std::string lowered = text;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::istringstream stream(lowered);
    std::vector<std::string> tokens;
    std::string tok;
    while (stream >> tok) tokens.push_back(tok);
    return tokens;
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
    std::set<std::string> seen;
    for (const auto& t : texts)
        for (auto& tok : tokenize(t)) seen.insert(tok);
    Vocab v;
    v.token_to_id[kUnk] = 0;
    int next = 1;
    for (const auto& tok : seen)
        if (tok != kUnk) v.token_to_id[tok] = next++;
    return v;
}

int Vocab::id(const std::string& token) const {
    const auto it = token_to_id.find(token);
    return it == token_to_id.end() ? 0 : it->second;
}

std::vector<int> Vocab::encode(const std::string& text) const {
    std::vector<int> ids;
    for (const auto& tok : tokenize(text)) ids.push_back(id(tok));
    if (ids.empty()) throw InputError("empty token sequence: '" + text + "'");
    return ids;
}

std::string Vocab::to_json() const {
    json j = json::object();
    for (const auto& [tok, id_] : token_to_id) j[tok] = id_;
    return j.dump();
}

Vocab Vocab::from_json(const std::string& text) {
    Vocab v;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw LoadError("vocabulary: " + std::string(e.what()));
    }
    for (const auto& [tok, id_] : j.items()) v.token_to_id[tok] = id_.get<int>();
    if (!v.token_to_id.count(kUnk)) throw LoadError("vocabulary is missing the <unk> token");
    return v;
}

}  // namespace fignet
