#include "kgfuse/embed.hpp"

#include <algorithm>
#include <cmath>

#include "kgfuse/errors.hpp"
#include "kgfuse/tokenize.hpp"

namespace kgfuse::embed {
namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error("embedding vector must have positive dimension");
    for (double v : values_) {
        if (!std::isfinite(v)) throw Error("embedding vector contains a non-finite value");
    }
}

double EmbeddingVector::norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
}

double cosine_sim(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw DimensionError("cosine_sim: dimension mismatch " + std::to_string(a.dim()) + " vs " +
                             std::to_string(b.dim()));
    }
    if (a == b && a.norm() > 0.0) return 1.0;
    double dot = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    if (aa == 0.0 || bb == 0.0) throw DimensionError("cosine_sim: zero vector");
    // sqrt(aa)*sqrt(bb) commutes exactly, so sim(a,b) == sim(b,a) bitwise.
    return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed(t));
    return out;
}

DeterministicProvider::DeterministicProvider(std::uint64_t seed, std::size_t dim,
                                             const std::map<std::string, std::string>& alias_table)
    : seed_(seed), dim_(dim) {
    if (dim_ == 0) throw ConfigError("embedding dimension must be positive");
    for (const auto& [alias, canonical] : alias_table) {
        auto a = ingest::normalize_text(alias);
        auto c = ingest::normalize_text(canonical);
        if (a.empty() || c.empty()) throw ConfigError("alias table entries must not normalise to empty text");
        aliases_[std::move(a)] = std::move(c);
    }
}

std::string DeterministicProvider::canonicalize(std::string_view text) const {
    auto norm = ingest::normalize_text(text);
    if (norm.empty()) throw Error("cannot embed empty text");
    if (auto it = aliases_.find(norm); it != aliases_.end()) return it->second;
    return norm;
}

EmbeddingVector DeterministicProvider::embed(std::string_view text) const {
    const std::string padded = "#" + canonicalize(text) + "#";
    std::vector<double> acc(dim_, 0.0);
    const std::uint64_t salt = fnv1a64(std::to_string(seed_));
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        std::uint64_t state = fnv1a64(std::string_view(padded).substr(i, 3), salt);
        for (auto& v : acc) {
            const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
            v += 2.0 * u - 1.0;
        }
    }
    double n = 0.0;
    for (double v : acc) n += v * v;
    n = std::sqrt(n);
    if (n == 0.0) throw DimensionError("deterministic provider produced a zero vector");
    for (auto& v : acc) v /= n;
    return EmbeddingVector(std::move(acc));
}

}  // namespace kgfuse::embed
