#include "reid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "reid/rng.hpp"

namespace reid {

namespace {

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  if (a.size() != b.size()) {
    throw std::runtime_error("query/gallery dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

void check_protocol(const ProtocolConfig& config) {
  if (config.trials < 1) throw std::runtime_error("trials must be >= 1");
  if (config.max_rank < 1) throw std::runtime_error("max_rank must be >= 1");
}

}  // namespace

std::vector<std::size_t> rank_gallery(
    const FeatureVector& query, const std::vector<EmbeddingRecord>& gallery,
    const std::unordered_set<std::size_t>& exclusions) {
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    if (exclusions.count(i)) continue;
    order.emplace_back(squared_distance(query, gallery[i].vector), i);
  }
  if (order.empty()) throw std::runtime_error("empty effective gallery");
  std::sort(order.begin(), order.end());
  std::vector<std::size_t> ranked;
  ranked.reserve(order.size());
  for (const auto& [d2, i] : order) ranked.push_back(i);
  return ranked;
}

double average_precision(const std::vector<bool>& relevance) {
  std::size_t total_relevant = 0;
  for (bool flag : relevance) total_relevant += flag ? 1 : 0;
  if (total_relevant == 0) {
    throw std::runtime_error("average_precision: no relevant item");
  }
  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < relevance.size(); ++k) {
    if (relevance[k]) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return ap / static_cast<double>(total_relevant);
}

EvalReport evaluate_cross_camera(const std::vector<EmbeddingRecord>& queries,
                                 const std::vector<EmbeddingRecord>& gallery,
                                 const ProtocolConfig& config) {
  check_protocol(config);
  if (gallery.empty()) throw std::runtime_error("empty gallery");

  const std::size_t curve_len =
      std::min<std::size_t>(config.max_rank, gallery.size());
  std::vector<double> cmc(curve_len, 0.0);
  std::vector<double> per_query_ap;
  int skipped = 0;

  for (const EmbeddingRecord& q : queries) {
    std::unordered_set<std::size_t> junk;
    std::size_t relevant_count = 0;
    for (std::size_t i = 0; i < gallery.size(); ++i) {
      if (gallery[i].identity != q.identity) continue;
      if (gallery[i].camera == q.camera) {
        junk.insert(i);
      } else {
        ++relevant_count;
      }
    }
    if (relevant_count == 0) {
      ++skipped;
      continue;
    }

    const std::vector<std::size_t> ranked =
        rank_gallery(q.vector, gallery, junk);
    std::vector<bool> flags(ranked.size());
    std::size_t first_hit = ranked.size();
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      flags[k] = gallery[ranked[k]].identity == q.identity;
      if (flags[k] && first_hit == ranked.size()) first_hit = k;
    }
    for (std::size_t r = first_hit; r < curve_len; ++r) cmc[r] += 1.0;
    per_query_ap.push_back(average_precision(flags));
  }

  if (per_query_ap.empty()) {
    throw std::runtime_error("no evaluable query");
  }

  EvalReport report;
  const auto n = static_cast<double>(per_query_ap.size());
  for (double& v : cmc) v /= n;
  report.cmc = std::move(cmc);
  double ap_sum = 0.0;
  for (double ap : per_query_ap) ap_sum += ap;
  report.map = ap_sum / n;
  report.per_query_ap = std::move(per_query_ap);
  report.num_queries_evaluated = static_cast<int>(n);
  report.num_queries_skipped = skipped;
  report.protocol = config;
  return report;
}

EvalReport evaluate_single_shot(const std::vector<EmbeddingRecord>& queries,
                                const std::vector<EmbeddingRecord>& gallery,
                                const ProtocolConfig& config) {
  check_protocol(config);
  if (gallery.empty()) throw std::runtime_error("empty gallery");

  // Gallery records grouped by identity, ascending.
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    groups[gallery[i].identity].push_back(i);
  }

  std::vector<std::size_t> evaluable;
  int skipped = 0;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    if (groups.count(queries[qi].identity)) {
      evaluable.push_back(qi);
    } else {
      ++skipped;
    }
  }
  if (evaluable.empty()) throw std::runtime_error("no evaluable query");

  const std::size_t curve_len =
      std::min<std::size_t>(config.max_rank, groups.size());
  std::vector<double> cmc(curve_len, 0.0);
  std::vector<double> ap_sums(evaluable.size(), 0.0);

  for (int trial = 0; trial < config.trials; ++trial) {
    Rng rng(derive_seed(config.seed, "trial",
                        static_cast<std::uint64_t>(trial)));
    // One gallery record per identity.
    std::vector<std::size_t> sub;
    sub.reserve(groups.size());
    for (const auto& [identity, members] : groups) {
      sub.push_back(members[rng.next_below(members.size())]);
    }

    for (std::size_t e = 0; e < evaluable.size(); ++e) {
      const EmbeddingRecord& q = queries[evaluable[e]];
      std::vector<std::pair<double, std::size_t>> order;
      order.reserve(sub.size());
      for (std::size_t s = 0; s < sub.size(); ++s) {
        order.emplace_back(squared_distance(q.vector, gallery[sub[s]].vector),
                           sub[s]);
      }
      std::sort(order.begin(), order.end());
      std::size_t hit_rank = order.size();
      for (std::size_t k = 0; k < order.size(); ++k) {
        if (gallery[order[k].second].identity == q.identity) {
          hit_rank = k;
          break;
        }
      }
      for (std::size_t r = hit_rank; r < curve_len; ++r) cmc[r] += 1.0;
      // Exactly one ground truth in a single-shot gallery.
      ap_sums[e] += 1.0 / static_cast<double>(hit_rank + 1);
    }
  }

  EvalReport report;
  const double denom =
      static_cast<double>(evaluable.size()) * config.trials;
  for (double& v : cmc) v /= denom;
  report.cmc = std::move(cmc);
  report.per_query_ap.reserve(ap_sums.size());
  double total = 0.0;
  for (double s : ap_sums) {
    report.per_query_ap.push_back(s / config.trials);
    total += s / config.trials;
  }
  report.map = total / static_cast<double>(ap_sums.size());
  report.num_queries_evaluated = static_cast<int>(evaluable.size());
  report.num_queries_skipped = skipped;
  report.protocol = config;
  return report;
}

EvalReport evaluate(const std::vector<EmbeddingRecord>& queries,
                    const std::vector<EmbeddingRecord>& gallery,
                    const ProtocolConfig& config) {
  if (config.mode == ProtocolMode::CrossCamera) {
    return evaluate_cross_camera(queries, gallery, config);
  }
  return evaluate_single_shot(queries, gallery, config);
}

}  // namespace reid
