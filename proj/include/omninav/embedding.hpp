#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace omninav {

inline constexpr std::size_t kEmbeddingDim = 512;

/// Fixed-width text embedding. Unit norm unless built from empty text.
using TextEmbedding = std::array<double, kEmbeddingDim>;

/// Lowercased alphanumeric tokens in order of appearance.
std::vector<std::string> tokenize(std::string_view text);

/// 64-bit FNV-1a with a fixed offset basis.
std::uint64_t fnv1a(std::string_view token);

/// Hashed bag-of-words, L2-normalised. Empty text gives the zero vector.
TextEmbedding embed_text(std::string_view text);

/// Bag-of-words where each text contributes its tokens with a real weight.
TextEmbedding embed_weighted(std::span<const std::pair<std::string, double>> weighted_texts);

/// Dot product; equals cosine similarity for unit vectors and 0 for a zero vector.
double cosine(const TextEmbedding& a, const TextEmbedding& b);

}  // namespace omninav
