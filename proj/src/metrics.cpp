#include "memrag/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

#include "memrag/util.hpp"

namespace memrag {

std::string to_string(RewardMetric m) {
  switch (m) {
    case RewardMetric::RougeL: return "rouge-l";
    case RewardMetric::Rouge1: return "rouge-1";
    case RewardMetric::Rouge2: return "rouge-2";
    case RewardMetric::Bleu: return "bleu";
  }
  throw std::logic_error("unknown RewardMetric");
}

RewardMetric reward_metric_from_string(const std::string& s) {
  if (s == "rouge-l") return RewardMetric::RougeL;
  if (s == "rouge-1") return RewardMetric::Rouge1;
  if (s == "rouge-2") return RewardMetric::Rouge2;
  if (s == "bleu") return RewardMetric::Bleu;
  throw std::runtime_error("unknown reward metric: '" + s + "'");
}

namespace {

using Tokens = std::vector<std::string>;

std::map<Tokens, int> ngram_counts(const Tokens& toks, int n) {
  std::map<Tokens, int> counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    counts[Tokens(toks.begin() + i, toks.begin() + i + n)] += 1;
  }
  return counts;
}

double f1_times_100(double match, double cand_total, double ref_total) {
  if (cand_total == 0.0 || ref_total == 0.0) return 0.0;
  const double p = match / cand_total;
  const double r = match / ref_total;
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r) * 100.0;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        cur[j] = prev[j - 1] + 1;
      } else {
        cur[j] = std::max(prev[j], cur[j - 1]);
      }
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double rouge_n(const std::string& candidate, const std::string& reference, int n) {
  if (n != 1 && n != 2) throw std::invalid_argument("rouge_n: n must be 1 or 2");
  const Tokens c = tokenize_words(candidate);
  const Tokens r = tokenize_words(reference);
  const auto cc = ngram_counts(c, n);
  const auto rc = ngram_counts(r, n);
  double match = 0.0, c_total = 0.0, r_total = 0.0;
  for (const auto& [g, k] : cc) {
    c_total += k;
    auto it = rc.find(g);
    if (it != rc.end()) match += std::min(k, it->second);
  }
  for (const auto& [g, k] : rc) r_total += k;
  return f1_times_100(match, c_total, r_total);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
  const Tokens c = tokenize_words(candidate);
  const Tokens r = tokenize_words(reference);
  const double lcs = static_cast<double>(lcs_length(c, r));
  return f1_times_100(lcs, static_cast<double>(c.size()), static_cast<double>(r.size()));
}

double bleu(const std::string& candidate, const std::string& reference) {
  const Tokens c = tokenize_words(candidate);
  const Tokens r = tokenize_words(reference);
  if (c.empty() || r.empty()) return 0.0;

  const int max_n = static_cast<int>(std::min<std::size_t>(4, c.size()));
  double log_sum = 0.0;
  int levels = 0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cc = ngram_counts(c, n);
    const auto rc = ngram_counts(r, n);
    double match = 0.0, total = 0.0;
    for (const auto& [g, k] : cc) {
      total += k;
      auto it = rc.find(g);
      if (it != rc.end()) match += std::min(k, it->second);
    }
    if (total == 0.0) break;
    const double p = match > 0.0 ? match / total : 1.0 / (total + 1.0);
    log_sum += std::log(p);
    ++levels;
  }
  if (levels == 0) return 0.0;
  const double geo = std::exp(log_sum / levels);
  const double c_len = static_cast<double>(c.size());
  const double r_len = static_cast<double>(r.size());
  const double bp = c_len >= r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
  return bp * geo * 100.0;
}

std::string normalize_entity(const std::string& s) {
  return collapse_spaces(to_lower(trim(s)));
}

int exact_match(const std::string& predicted_entity, const std::string& gold_entity) {
  return normalize_entity(predicted_entity) == normalize_entity(gold_entity) ? 1 : 0;
}

double score_answer(RewardMetric metric, const std::string& candidate,
                    const std::string& reference) {
  switch (metric) {
    case RewardMetric::RougeL: return rouge_l(candidate, reference);
    case RewardMetric::Rouge1: return rouge_n(candidate, reference, 1);
    case RewardMetric::Rouge2: return rouge_n(candidate, reference, 2);
    case RewardMetric::Bleu: return bleu(candidate, reference);
  }
  throw std::logic_error("unknown RewardMetric");
}

}  // namespace memrag
