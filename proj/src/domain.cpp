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

#include "mtforge/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "mtforge/kernels.hpp"
#include "mtforge/parallel.hpp"
#include "mtforge/utf8.hpp"

namespace mtforge {

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename Fn>
void for_each_char_ngram(const Sentence& sentence, Fn&& fn) {
  const std::string text = join(sentence);
  const auto chars = utf8::chars(text);
  std::string gram;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    gram.clear();
    for (std::size_t n = 1; n <= 3 && i + n <= chars.size(); ++n) {
      gram += chars[i + n - 1];
      fn(std::string_view(gram));
    }
  }
}

std::size_t nearest(std::span<const Vector> centroids, std::span<const double> v, double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = kernels::squared_distance(centroids[c], v);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

std::size_t count_distinct(std::span<const Vector> vectors, std::size_t stop_at) {
  std::vector<const Vector*> ptrs;
  for (const auto& v : vectors) ptrs.push_back(&v);
  std::sort(ptrs.begin(), ptrs.end(), [](const Vector* a, const Vector* b) { return *a < *b; });
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < ptrs.size() && distinct < stop_at; ++i) {
    if (i == 0 || *ptrs[i] != *ptrs[i - 1]) ++distinct;
  }
  return distinct;
}

}  // namespace

HashedTfIdf::HashedTfIdf(std::size_t dim) : dim_(dim), idf_(dim, 1.0) {
  if (dim == 0) throw Error("embedding dimension must be positive");
}

std::size_t HashedTfIdf::bucket(std::string_view ngram) const { return fnv1a(ngram) % dim_; }

void HashedTfIdf::fit(std::span<const Sentence> sentences) {
  std::vector<std::size_t> df(dim_, 0);
  std::vector<std::size_t> seen(dim_, std::numeric_limits<std::size_t>::max());
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    for_each_char_ngram(sentences[s], [&](std::string_view g) {
      const auto b = bucket(g);
      if (seen[b] != s) {
        seen[b] = s;
        ++df[b];
      }
    });
  }
  const double n = static_cast<double>(sentences.size());
  for (std::size_t b = 0; b < dim_; ++b) {
    idf_[b] = std::log((1.0 + n) / (1.0 + static_cast<double>(df[b]))) + 1.0;
  }
}

Vector HashedTfIdf::embed(std::uint64_t, const Sentence& sentence) const {
  Vector v(dim_, 0.0);
  for_each_char_ngram(sentence, [&](std::string_view g) { v[bucket(g)] += 1.0; });
  for (std::size_t b = 0; b < dim_; ++b) v[b] *= idf_[b];
  const double norm = std::sqrt(kernels::dot(v, v));
  if (norm > 0.0) kernels::scale(1.0 / norm, v);
  return v;
}

nlohmann::json HashedTfIdf::to_json() const {
  return {{"name", name()}, {"dim", dim_}, {"idf", idf_}};
}

HashedTfIdf HashedTfIdf::from_json(const nlohmann::json& j) {
  HashedTfIdf p(j.at("dim").get<std::size_t>());
  if (j.contains("idf")) {
    p.idf_ = j.at("idf").get<std::vector<double>>();
    if (p.idf_.size() != p.dim_) throw Error("hashed-tfidf: idf length does not match dim");
  }
  return p;
}

ExternalVectors ExternalVectors::load(const std::filesystem::path& path) {
  ExternalVectors ev;
  ev.origin_ = path;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    try {
      const auto j = nlohmann::json::parse(lines[i]);
      ev.add(j.at("id").get<std::uint64_t>(), j.at("vec").get<Vector>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (ev.vectors_.empty()) throw Error("no vectors in " + path.string());
  return ev;
}

void ExternalVectors::add(std::uint64_t id, Vector v) {
  if (v.empty()) throw Error("empty vector for id " + std::to_string(id));
  if (dim_ == 0) dim_ = v.size();
  if (v.size() != dim_) {
    throw Error("vector for id " + std::to_string(id) + " has dimension " + std::to_string(v.size()) +
                ", expected " + std::to_string(dim_));
  }
  if (!vectors_.emplace(id, std::move(v)).second) throw Error("duplicate vector id " + std::to_string(id));
}

Vector ExternalVectors::embed(std::uint64_t id, const Sentence&) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) throw Error("no external vector for sentence id " + std::to_string(id));
  return it->second;
}

nlohmann::json ExternalVectors::to_json() const {
  return {{"name", name()}, {"dim", dim_}, {"path", origin_.string()}};
}

std::unique_ptr<EmbeddingProvider> provider_from_json(const nlohmann::json& j,
                                                      const std::filesystem::path& external_override) {
  const auto name = j.at("name").get<std::string>();
  if (name == "hashed-tfidf") return std::make_unique<HashedTfIdf>(HashedTfIdf::from_json(j));
  if (name == "external") {
    const std::filesystem::path path =
        external_override.empty() ? std::filesystem::path(j.at("path").get<std::string>()) : external_override;
    return std::make_unique<ExternalVectors>(ExternalVectors::load(path));
  }
  throw Error("unknown embedding provider: " + name);
}

std::vector<Vector> embed_corpus(const EmbeddingProvider& provider, const Corpus& corpus, Which side,
                                 unsigned workers) {
  std::vector<Vector> out(corpus.pairs.size());
  parallel_for(corpus.pairs.size(), workers, [&](std::size_t i) {
    const auto& p = corpus.pairs[i];
    out[i] = provider.embed(p.id, side == Which::Src ? p.src : p.tgt);
  });
  return out;
}

nlohmann::json DomainModel::to_json() const {
  return {{"k", k()}, {"temperature", temperature}, {"centroids", centroids}, {"provider", provider}};
}

DomainModel DomainModel::from_json(const nlohmann::json& j) {
  DomainModel m;
  try {
    m.centroids = j.at("centroids").get<std::vector<Vector>>();
    m.temperature = j.at("temperature").get<double>();
    if (j.contains("provider")) m.provider = j.at("provider");
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("bad domain model: ") + e.what());
  }
  if (m.k() < 2) throw Error("a domain model needs at least two centroids");
  if (!(m.temperature > 0.0)) throw Error("domain model temperature must be positive");
  return m;
}

void DomainModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << to_json().dump() << '\n';
}

DomainModel DomainModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

double mean_centroid_distance(std::span<const Vector> centroids) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < centroids.size(); ++a) {
    for (std::size_t b = a + 1; b < centroids.size(); ++b) {
      total += kernels::squared_distance(centroids[a], centroids[b]);
      ++pairs;
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

KMeansResult kmeans_fit(std::span<const Vector> vectors, std::size_t k, std::uint64_t seed,
                        std::size_t max_iter, double tol, unsigned workers) {
  if (k < 2) throw Error("k-means needs k >= 2");
  if (vectors.empty()) throw Error("k-means needs at least one vector");
  const std::size_t dim = vectors.front().size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw Error("k-means: vectors have different dimensions");
  }
  if (count_distinct(vectors, k) < k) {
    throw Error("k-means: fewer than " + std::to_string(k) + " distinct vectors");
  }
  const std::size_t n = vectors.size();

  // k-means++ seeding.
  Rng rng(seed);
  std::vector<Vector> centroids;
  centroids.push_back(vectors[rng.below(n)]);
  std::vector<double> d2(n);
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest(centroids, vectors[i], &d2[i]);
      total += d2[i];
    }
    double u = rng.uniform() * total;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      u -= d2[i];
      if (u < 0.0) break;
    }
    centroids.push_back(vectors[pick]);
  }

  KMeansResult result;
  result.labels.assign(n, 0);
  std::vector<double> dist(n);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    parallel_for(n, workers, [&](std::size_t i) { result.labels[i] = nearest(centroids, vectors[i], &dist[i]); });

    std::vector<std::size_t> sizes(k, 0);
    for (auto l : result.labels) ++sizes[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[result.labels[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      }
      --sizes[result.labels[far]];
      result.labels[far] = c;
      dist[far] = 0.0;
      sizes[c] = 1;
    }
    double sse = 0.0;
    for (double d : dist) sse += d;
    result.sse_trace.push_back(sse);

    std::vector<Vector> next(k, Vector(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) kernels::axpy(1.0, vectors[i], next[result.labels[i]]);
    double moved = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      kernels::scale(1.0 / static_cast<double>(sizes[c]), next[c]);
      moved = std::max(moved, std::sqrt(kernels::squared_distance(next[c], centroids[c])));
    }
    centroids = std::move(next);
    result.iterations = iter + 1;
    if (moved < tol) break;
  }

  result.model.centroids = std::move(centroids);
  result.model.temperature = mean_centroid_distance(result.model.centroids);
  if (!(result.model.temperature > 0.0)) throw Error("k-means converged to coincident centroids");
  return result;
}

std::size_t domain_label(const DomainModel& model, std::span<const double> v) {
  return nearest(model.centroids, v);
}

std::vector<double> domain_probs(const DomainModel& model, std::span<const double> v) {
  return domain_probs(model, v, model.temperature);
}

std::vector<double> domain_probs(const DomainModel& model, std::span<const double> v, double temperature) {
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  std::vector<double> logits(model.k());
  for (std::size_t c = 0; c < model.k(); ++c) {
    logits[c] = -kernels::squared_distance(model.centroids[c], v) / temperature;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto& x : logits) {
    x = std::exp(x - top);
    z += x;
  }
  for (auto& x : logits) x /= z;
  return logits;
}

}  // namespace mtforge
