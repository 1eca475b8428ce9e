#pragma once

#include <string>
#include <vector>

#include "kgfuse/embed.hpp"
#include "kgfuse/graph.hpp"

namespace kgfuse {

// Embeddings of a node's label and aliases (texts that normalise to nothing
// are skipped).
std::vector<embed::EmbeddingVector> embed_node_texts(const Node& n, const embed::EmbeddingProvider& provider);

// Highest cosine similarity over all text pairs; -1 when either side is empty.
double max_pair_similarity(const std::vector<embed::EmbeddingVector>& a,
                           const std::vector<embed::EmbeddingVector>& b);

}  // namespace kgfuse
