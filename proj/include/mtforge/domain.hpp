// Copyright 2026 The mtforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mtforge/core.hpp"
#include "mtforge/ngram_lm.hpp"

namespace mtforge {

using Vector = std::vector<double>;

/// Maps a sentence to a fixed-dimension vector.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  /// `id` lets providers backed by precomputed vectors find the sentence.
  virtual Vector embed(std::uint64_t id, const Sentence& sentence) const = 0;
  /// Enough state to rebuild the provider from a saved DomainModel.
  virtual nlohmann::json to_json() const = 0;
};

inline constexpr std::size_t kDefaultEmbeddingDim = 4096;

/// Character 1- to 3-grams of the space-joined sentence, hashed (FNV-1a) into
/// `dim` buckets, weighted tf * idf and L2-normalized. idf is
/// log((1 + N) / (1 + df)) + 1 after fit(); all ones before. An empty sentence
/// maps to the zero vector.
class HashedTfIdf : public EmbeddingProvider {
 public:
  explicit HashedTfIdf(std::size_t dim = kDefaultEmbeddingDim);

  void fit(std::span<const Sentence> sentences);

  std::string name() const override { return "hashed-tfidf"; }
  std::size_t dim() const override { return dim_; }
  Vector embed(std::uint64_t id, const Sentence& sentence) const override;
  nlohmann::json to_json() const override;
  static HashedTfIdf from_json(const nlohmann::json& j);

  /// Bucket of one character n-gram.
  std::size_t bucket(std::string_view ngram) const;

 private:
  std::size_t dim_;
  std::vector<double> idf_;
};

/// Vectors computed elsewhere, one JSONL line {"id": int, "vec": [reals]} each.
class ExternalVectors : public EmbeddingProvider {
 public:
  static ExternalVectors load(const std::filesystem::path& path);

  std::string name() const override { return "external"; }
  std::size_t dim() const override { return dim_; }
  Vector embed(std::uint64_t id, const Sentence& sentence) const override;
  nlohmann::json to_json() const override;

  void add(std::uint64_t id, Vector v);

 private:
  std::size_t dim_ = 0;
  std::filesystem::path origin_;
  std::unordered_map<std::uint64_t, Vector> vectors_;
};

/// Rebuilds a provider from EmbeddingProvider::to_json output. External providers
/// reload their vector file, or `external_override` when given.
std::unique_ptr<EmbeddingProvider> provider_from_json(const nlohmann::json& j,
                                                      const std::filesystem::path& external_override = {});

/// Embeds one side of every pair.
std::vector<Vector> embed_corpus(const EmbeddingProvider& provider, const Corpus& corpus, Which side,
                                 unsigned workers = 1);

struct DomainModel {
  std::vector<Vector> centroids;
  double temperature = 1.0;
  nlohmann::json provider = nlohmann::json::object();

  std::size_t k() const { return centroids.size(); }
  nlohmann::json to_json() const;
  static DomainModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static DomainModel load(const std::filesystem::path& path);
};

struct KMeansResult {
  DomainModel model;
  std::vector<std::size_t> labels;
  /// Within-cluster SSE after each assignment step.
  std::vector<double> sse_trace;
  std::size_t iterations = 0;
};

inline constexpr std::size_t kDefaultClusters = 2;

/// k-means++ seeding from `seed`, then Lloyd iterations until no centroid moves
/// by `tol` or more (Euclidean) or `max_iter` is reached. A cluster left empty
/// is reseeded with the point farthest from its centroid. The temperature is
/// the mean squared distance between centroid pairs.
KMeansResult kmeans_fit(std::span<const Vector> vectors, std::size_t k = kDefaultClusters,
                        std::uint64_t seed = 0, std::size_t max_iter = 100, double tol = 1e-6,
                        unsigned workers = 1);

/// Mean squared distance over centroid pairs.
double mean_centroid_distance(std::span<const Vector> centroids);

/// Nearest centroid; ties go to the smaller index.
std::size_t domain_label(const DomainModel& model, std::span<const double> v);

/// softmax over d of -||v - c_d||^2 / temperature.
std::vector<double> domain_probs(const DomainModel& model, std::span<const double> v);
std::vector<double> domain_probs(const DomainModel& model, std::span<const double> v, double temperature);

}  // namespace mtforge
