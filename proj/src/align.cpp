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

#include "mtforge/align.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "mtforge/parallel.hpp"

namespace mtforge {

namespace {

constexpr double kProbFloor = 1e-9;
constexpr std::size_t kShardSize = 256;
constexpr std::uint32_t kNullId = 0;
constexpr std::uint32_t kUnknown = UINT32_MAX;

double distance(std::size_t i, std::size_t j, std::size_t m, std::size_t n) {
  return std::fabs(static_cast<double>(i) / static_cast<double>(m) -
                   static_cast<double>(j) / static_cast<double>(n));
}

/// Expected statistics for the tension update: for every (m, n, j) the
/// posterior mass on non-NULL links, plus the posterior-weighted distance.
struct TensionStats {
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> mass;
  double weighted_distance = 0.0;

  void merge(const TensionStats& o) {
    for (const auto& [k, v] : o.mass) mass[k] += v;
    weighted_distance += o.weighted_distance;
  }

  // Q(tension) = -tension * D - sum P * log Z, with its first two derivatives.
  void evaluate(double tension, double& q, double& grad, double& hess) const {
    q = -tension * weighted_distance;
    grad = -weighted_distance;
    hess = 0.0;
    for (const auto& [key, p] : mass) {
      const auto [m, n, j] = key;
      double z = 0.0, ed = 0.0, ed2 = 0.0;
      for (std::size_t i = 1; i <= m; ++i) {
        const double d = distance(i, j, m, n);
        const double w = std::exp(-tension * d);
        z += w;
        ed += w * d;
        ed2 += w * d * d;
      }
      ed /= z;
      ed2 /= z;
      q -= p * std::log(z);
      grad += p * ed;
      hess -= p * (ed2 - ed * ed);
    }
  }

  double optimize(double tension) const {
    double q, g, h;
    evaluate(tension, q, g, h);
    for (int iter = 0; iter < 50; ++iter) {
      double step = h < -1e-12 ? -g / h : (g > 0 ? 1.0 : -1.0);
      bool improved = false;
      for (int half = 0; half < 40; ++half) {
        const double cand = std::max(0.0, tension + step);
        double qc, gc, hc;
        evaluate(cand, qc, gc, hc);
        if (qc >= q) {
          improved = cand != tension;
          tension = cand;
          q = qc;
          g = gc;
          h = hc;
          break;
        }
        step *= 0.5;
      }
      if (!improved || std::fabs(step) < 1e-10) break;
    }
    return tension;
  }
};

struct ShardResult {
  std::unordered_map<std::size_t, double> counts;
  TensionStats tension;
  double log_likelihood = 0.0;
};

}  // namespace

std::uint32_t AlignmentModel::src_id(const std::string& f) const {
  if (f == kNullToken) return kNullId;
  auto it = src_ids_.find(f);
  return it == src_ids_.end() ? kUnknown : it->second;
}

std::uint32_t AlignmentModel::tgt_id(const std::string& e) const {
  auto it = tgt_ids_.find(e);
  return it == tgt_ids_.end() ? kUnknown : it->second;
}

std::size_t AlignmentModel::entry_index(std::uint32_t f, std::uint32_t e) const {
  if (f == kUnknown || e == kUnknown) return rows_.size();
  const auto begin = rows_.begin() + static_cast<std::ptrdiff_t>(row_start_[f]);
  const auto end = rows_.begin() + static_cast<std::ptrdiff_t>(row_start_[f + 1]);
  auto it = std::lower_bound(begin, end, e, [](const Entry& x, std::uint32_t v) { return x.e < v; });
  if (it == end || it->e != e) return rows_.size();
  return static_cast<std::size_t>(it - rows_.begin());
}

double AlignmentModel::lookup(std::uint32_t f, std::uint32_t e) const {
  const std::size_t idx = entry_index(f, e);
  return idx == rows_.size() ? kProbFloor : rows_[idx].prob;
}

double AlignmentModel::t(const std::string& e, const std::string& f) const {
  return lookup(src_id(f), tgt_id(e));
}

double AlignmentModel::row_sum(const std::string& f) const {
  const std::uint32_t id = src_id(f);
  if (id == kUnknown) return 0.0;
  double s = 0.0;
  for (std::size_t k = row_start_[id]; k < row_start_[id + 1]; ++k) s += rows_[k].prob;
  return s;
}

std::vector<std::string> AlignmentModel::source_vocab() const { return src_tokens_; }

std::vector<double> AlignmentModel::position_prior(std::size_t j, std::size_t m, std::size_t n) const {
  std::vector<double> prior(m);
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    prior[i] = std::exp(-tension_ * distance(i + 1, j + 1, m, n));
    z += prior[i];
  }
  for (auto& p : prior) p *= (1.0 - p0_) / z;
  return prior;
}

double AlignmentModel::score(const Sentence& src, const Sentence& tgt) const {
  if (tgt.empty()) throw Error("align_score: empty target sentence");
  const std::size_t m = src.size();
  const std::size_t n = tgt.size();
  std::vector<std::uint32_t> f_ids(m);
  for (std::size_t i = 0; i < m; ++i) f_ids[i] = src_id(src.tokens[i]);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint32_t e = tgt_id(tgt.tokens[j]);
    double marginal;
    if (m == 0) {
      marginal = lookup(kNullId, e);
    } else {
      marginal = p0_ * lookup(kNullId, e);
      const auto prior = position_prior(j, m, n);
      for (std::size_t i = 0; i < m; ++i) marginal += prior[i] * lookup(f_ids[i], e);
    }
    total += std::log(marginal);
  }
  return total / static_cast<double>(n);
}

std::vector<Link> AlignmentModel::viterbi(const Sentence& src, const Sentence& tgt) const {
  std::vector<Link> links;
  const std::size_t m = src.size();
  const std::size_t n = tgt.size();
  if (m == 0) return links;
  std::vector<std::uint32_t> f_ids(m);
  for (std::size_t i = 0; i < m; ++i) f_ids[i] = src_id(src.tokens[i]);
  for (std::size_t j = 0; j < n; ++j) {
    const std::uint32_t e = tgt_id(tgt.tokens[j]);
    const auto prior = position_prior(j, m, n);
    std::size_t best = 0;
    double best_p = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double p = prior[i] * lookup(f_ids[i], e);
      if (p > best_p) {
        best_p = p;
        best = i;
      }
    }
    if (p0_ * lookup(kNullId, e) > best_p) continue;
    links.push_back({best, j});
  }
  return links;
}

AlignmentModel train_align(const Corpus& corpus, const AlignConfig& config, unsigned workers) {
  if (corpus.empty()) throw Error("cannot train an alignment model on an empty corpus");
  if (config.iterations < 1) throw Error("alignment training needs at least one iteration");
  if (!(config.p0 > 0.0 && config.p0 < 1.0)) throw Error("p0 must be in (0, 1)");
  if (config.tension < 0.0) throw Error("tension must be >= 0");

  AlignmentModel model;
  model.tension_ = config.tension;
  model.p0_ = config.p0;
  model.src_tokens_.emplace_back(kNullToken);
  for (const auto& p : corpus.pairs) {
    for (const auto& f : p.src.tokens) {
      if (model.src_ids_.try_emplace(f, model.src_tokens_.size()).second) model.src_tokens_.push_back(f);
    }
    for (const auto& e : p.tgt.tokens) {
      if (model.tgt_ids_.try_emplace(e, model.tgt_tokens_.size()).second) model.tgt_tokens_.push_back(e);
    }
  }
  if (model.tgt_tokens_.empty()) throw Error("alignment corpus has no target tokens");

  // Co-occurrence structure: row f holds every e seen in a pair with f (or NULL).
  std::vector<std::vector<std::uint32_t>> cooc(model.src_tokens_.size());
  for (const auto& p : corpus.pairs) {
    std::vector<std::uint32_t> es;
    for (const auto& e : p.tgt.tokens) es.push_back(model.tgt_ids_.at(e));
    cooc[kNullId].insert(cooc[kNullId].end(), es.begin(), es.end());
    for (const auto& f : p.src.tokens) {
      auto& row = cooc[model.src_ids_.at(f)];
      row.insert(row.end(), es.begin(), es.end());
    }
  }
  const double uniform = 1.0 / static_cast<double>(model.tgt_tokens_.size());
  model.row_start_.assign(cooc.size() + 1, 0);
  for (std::size_t f = 0; f < cooc.size(); ++f) {
    auto& row = cooc[f];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    model.row_start_[f] = model.rows_.size();
    for (std::uint32_t e : row) model.rows_.push_back({e, uniform});
    std::vector<std::uint32_t>().swap(row);
  }
  model.row_start_[cooc.size()] = model.rows_.size();

  const std::size_t shards = (corpus.size() + kShardSize - 1) / kShardSize;
  for (int iter = 1; iter <= config.iterations; ++iter) {
    std::vector<ShardResult> results(shards);
    parallel_for(shards, workers, [&](std::size_t shard) {
      ShardResult& res = results[shard];
      const std::size_t end = std::min(corpus.size(), (shard + 1) * kShardSize);
      std::vector<std::size_t> idx;
      std::vector<double> post;
      for (std::size_t s = shard * kShardSize; s < end; ++s) {
        const auto& pair = corpus.pairs[s];
        const std::size_t m = pair.src.size();
        const std::size_t n = pair.tgt.size();
        std::vector<std::uint32_t> f_ids(m);
        for (std::size_t i = 0; i < m; ++i) f_ids[i] = model.src_ids_.at(pair.src.tokens[i]);
        for (std::size_t j = 0; j < n; ++j) {
          const std::uint32_t e = model.tgt_ids_.at(pair.tgt.tokens[j]);
          idx.assign(m + 1, 0);
          post.assign(m + 1, 0.0);
          idx[0] = model.entry_index(kNullId, e);
          post[0] = (m == 0 ? 1.0 : model.p0_) * model.rows_[idx[0]].prob;
          double denom = post[0];
          if (m > 0) {
            const auto prior = model.position_prior(j, m, n);
            for (std::size_t i = 0; i < m; ++i) {
              idx[i + 1] = model.entry_index(f_ids[i], e);
              post[i + 1] = prior[i] * model.rows_[idx[i + 1]].prob;
              denom += post[i + 1];
            }
          }
          res.log_likelihood += std::log(denom);
          double mass = 0.0;
          for (std::size_t i = 0; i <= m; ++i) {
            const double pi = post[i] / denom;
            res.counts[idx[i]] += pi;
            if (i > 0) {
              mass += pi;
              res.tension.weighted_distance += pi * distance(i, j + 1, m, n);
            }
          }
          if (m > 0) res.tension.mass[{m, n, j + 1}] += mass;
        }
      }
    });

    std::vector<double> counts(model.rows_.size(), 0.0);
    TensionStats tension;
    double ll = 0.0;
    for (const auto& res : results) {
      // Shard maps are merged in shard order; within a shard each key is added once.
      for (const auto& [k, v] : res.counts) counts[k] += v;
      tension.merge(res.tension);
      ll += res.log_likelihood;
    }
    if (!model.ll_trace_.empty()) {
      const double prev = model.ll_trace_.back();
      if (ll < prev - 1e-9 * std::max(1.0, std::fabs(prev))) {
        throw Error("EM log-likelihood decreased at iteration " + std::to_string(iter));
      }
    }
    model.ll_trace_.push_back(ll);

    for (std::size_t f = 0; f + 1 < model.row_start_.size(); ++f) {
      double total = 0.0;
      for (std::size_t k = model.row_start_[f]; k < model.row_start_[f + 1]; ++k) total += counts[k];
      if (total <= 0.0) continue;
      for (std::size_t k = model.row_start_[f]; k < model.row_start_[f + 1]; ++k) {
        model.rows_[k].prob = counts[k] / total;
      }
    }
    if (config.optimize_tension && iter >= config.optimize_from) {
      model.tension_ = tension.optimize(model.tension_);
    }
  }
  return model;
}

void AlignmentModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  auto fmt = [](double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
  };
  out << "#mtforge-align p0=" << fmt(p0_) << " tension=" << fmt(tension_) << '\n';
  std::vector<std::tuple<std::string, std::string, double>> lines;
  lines.reserve(rows_.size());
  for (std::size_t f = 0; f + 1 < row_start_.size(); ++f) {
    for (std::size_t k = row_start_[f]; k < row_start_[f + 1]; ++k) {
      lines.emplace_back(src_tokens_[f], tgt_tokens_[rows_[k].e], rows_[k].prob);
    }
  }
  std::sort(lines.begin(), lines.end());
  for (const auto& [f, e, p] : lines) out << f << '\t' << e << '\t' << fmt(p) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

AlignmentModel AlignmentModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("#mtforge-align ", 0) != 0) {
    throw Error("not an mtforge alignment model: " + path.string());
  }
  AlignmentModel model;
  {
    std::istringstream header(line.substr(15));
    std::string field;
    while (header >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw Error("bad alignment header field: " + field);
      const double v = std::stod(field.substr(eq + 1));
      if (field.compare(0, eq, "p0") == 0) model.p0_ = v;
      if (field.compare(0, eq, "tension") == 0) model.tension_ = v;
    }
  }
  model.src_tokens_.emplace_back(kNullToken);
  std::vector<std::vector<Entry>> rows(1);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": expected f<TAB>e<TAB>prob");
    }
    const std::string f = line.substr(0, t1);
    const std::string e = line.substr(t1 + 1, t2 - t1 - 1);
    const double prob = std::stod(line.substr(t2 + 1));
    std::uint32_t fid = kNullId;
    if (f != kNullToken) {
      auto [it, inserted] = model.src_ids_.try_emplace(f, model.src_tokens_.size());
      if (inserted) {
        model.src_tokens_.push_back(f);
        rows.emplace_back();
      }
      fid = it->second;
    }
    auto [eit, einserted] = model.tgt_ids_.try_emplace(e, model.tgt_tokens_.size());
    if (einserted) model.tgt_tokens_.push_back(e);
    rows[fid].push_back({eit->second, prob});
  }
  model.row_start_.assign(rows.size() + 1, 0);
  for (std::size_t f = 0; f < rows.size(); ++f) {
    std::sort(rows[f].begin(), rows[f].end(), [](const Entry& a, const Entry& b) { return a.e < b.e; });
    model.row_start_[f] = model.rows_.size();
    model.rows_.insert(model.rows_.end(), rows[f].begin(), rows[f].end());
  }
  model.row_start_[rows.size()] = model.rows_.size();
  return model;
}

Corpus swap_sides(Corpus corpus) {
  for (auto& p : corpus.pairs) std::swap(p.src, p.tgt);
  return corpus;
}

double align_score(const AlignmentModel& model, const SentencePair& pair) {
  return model.score(pair.src, pair.tgt);
}

double align_score_symmetric(const AlignmentModel& forward, const AlignmentModel& reverse,
                             const SentencePair& pair) {
  return 0.5 * (forward.score(pair.src, pair.tgt) + reverse.score(pair.tgt, pair.src));
}

std::string to_pharaoh(const std::vector<Link>& links) {
  std::string out;
  for (std::size_t k = 0; k < links.size(); ++k) {
    if (k) out += ' ';
    out += std::to_string(links[k].src) + "-" + std::to_string(links[k].tgt);
  }
  return out;
}

}  // namespace mtforge
