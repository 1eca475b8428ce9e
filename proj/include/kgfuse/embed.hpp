#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kgfuse::embed {

// Fixed-length, finite, real vector.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    // Throws kgfuse::Error for an empty or non-finite input.
    explicit EmbeddingVector(std::vector<double> values);

    std::size_t dim() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double norm() const;

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    std::vector<double> values_;
};

// a.b / (|a||b|), clamped to [-1, 1]. Bitwise-equal inputs return exactly 1.
// Throws DimensionError on mismatched dims or an all-zero operand.
double cosine_sim(const EmbeddingVector& a, const EmbeddingVector& b);

// Implementations must be safe for concurrent embed() calls.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::size_t dim() const = 0;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;
};

inline EmbeddingVector embed_text(const EmbeddingProvider& p, std::string_view text) { return p.embed(text); }

// Offline stand-in for a language-model embedder. Text is normalised
// (tokenised, lowercased), resolved through the alias table, and embedded as
// the L2-normalised sum of seeded pseudo-random vectors, one per character
// trigram of the canonical text. Texts sharing trigrams land close together;
// alias-linked texts get identical vectors.
class DeterministicProvider final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDefaultDim = 64;

    explicit DeterministicProvider(std::uint64_t seed = 0, std::size_t dim = kDefaultDim,
                                   const std::map<std::string, std::string>& alias_table = {});

    std::size_t dim() const override { return dim_; }
    EmbeddingVector embed(std::string_view text) const override;

    // Normalised text after alias resolution. Throws kgfuse::Error if the
    // text normalises to nothing.
    std::string canonicalize(std::string_view text) const;

    std::uint64_t seed() const noexcept { return seed_; }
    const std::map<std::string, std::string>& alias_table() const noexcept { return aliases_; }

private:
    std::uint64_t seed_;
    std::size_t dim_;
    std::map<std::string, std::string> aliases_;  // normalised alias -> normalised canonical
};

// 64-bit FNV-1a; stable across platforms and runs, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace kgfuse::embed
