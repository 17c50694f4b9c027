#include <cmath>

#include "curate/aligner.hpp"
#include "curate/config.hpp"
#include "curate/error.hpp"
#include "curate/text.hpp"

namespace curate {

Eigen::MatrixXd EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(texts.size()), dim());
  for (std::size_t i = 0; i < texts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = embed(texts[i]).transpose();
  return out;
}

std::size_t HashedTfEmbedding::bucket(std::string_view token, Eigen::Index dim) {
  // Multiplicative (x31) string hash over bytes.
  std::uint64_t h = 0;
  for (unsigned char c : token) h = h * 31 + c;
  return static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim));
}

Eigen::VectorXd HashedTfEmbedding::embed(std::string_view input) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim_);
  for (const auto& tok : text::tokenize(input)) v(static_cast<Eigen::Index>(bucket(tok, dim_))) += 1.0;
  return v;
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const Config& config) {
  const std::string profile = config.get("embedding_profile", "lexical");
  const auto dim = config.get_int("embedding_dim", 512);
  if (dim <= 0) throw Error(ErrorCode::InvalidConfig, "embedding_dim must be positive");
  if (profile == "lexical") return std::make_unique<HashedTfEmbedding>(dim);
  if (profile == "http") return std::make_unique<HttpEmbeddingProvider>(config.get("embedding_url"), dim);
  throw Error(ErrorCode::InvalidConfig, "unknown embedding_profile: " + profile);
}

}  // namespace curate
