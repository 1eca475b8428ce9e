#include "kgfuse/node_text.hpp"

#include <algorithm>

#include "kgfuse/tokenize.hpp"

namespace kgfuse {

std::vector<embed::EmbeddingVector> embed_node_texts(const Node& n, const embed::EmbeddingProvider& provider) {
    std::vector<std::string> texts;
    auto push = [&](const std::string& s) {
        if (!ingest::normalize_text(s).empty()) texts.push_back(s);
    };
    push(n.label);
    for (const auto& a : n.aliases) push(a);
    if (texts.empty()) return {};
    return provider.embed_batch(texts);
}

double max_pair_similarity(const std::vector<embed::EmbeddingVector>& a,
                           const std::vector<embed::EmbeddingVector>& b) {
    double best = -1.0;
    for (const auto& x : a) {
        for (const auto& y : b) best = std::max(best, embed::cosine_sim(x, y));
    }
    return best;
}

}  // namespace kgfuse
