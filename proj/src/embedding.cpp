#include "omninav/embedding.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>

namespace omninav {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void normalize(TextEmbedding& v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 <= 0.0) return;
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::uint64_t fnv1a(std::string_view token) {
  std::uint64_t h = kFnvOffset;
  for (const char ch : token) {
    h ^= static_cast<unsigned char>(ch);
    h *= kFnvPrime;
  }
  return h;
}

TextEmbedding embed_text(std::string_view text) {
  TextEmbedding v{};
  for (const auto& token : tokenize(text)) v[fnv1a(token) % kEmbeddingDim] += 1.0;
  normalize(v);
  return v;
}

TextEmbedding embed_weighted(std::span<const std::pair<std::string, double>> weighted_texts) {
  TextEmbedding v{};
  for (const auto& [text, weight] : weighted_texts) {
    for (const auto& token : tokenize(text)) v[fnv1a(token) % kEmbeddingDim] += weight;
  }
  normalize(v);
  return v;
}

double cosine(const TextEmbedding& a, const TextEmbedding& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) dot += a[i] * b[i];
  return dot;
}

}  // namespace omninav
