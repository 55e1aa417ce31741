#pragma once

#include <string>

namespace memrag {

enum class RewardMetric { RougeL, Rouge1, Rouge2, Bleu };

std::string to_string(RewardMetric m);
RewardMetric reward_metric_from_string(const std::string& s);

// All scores are on a 0..100 scale. Tokenization is lowercase runs of
// alphanumeric characters; empty strings score 0.
double rouge_n(const std::string& candidate, const std::string& reference, int n);
double rouge_l(const std::string& candidate, const std::string& reference);

// Up to 4-gram BLEU with brevity penalty; zero n-gram counts are add-one
// smoothed so single-sentence candidates do not collapse to 0.
double bleu(const std::string& candidate, const std::string& reference);

// 1 iff equal after lowercase/trim/whitespace-collapse.
int exact_match(const std::string& predicted_entity, const std::string& gold_entity);
std::string normalize_entity(const std::string& s);

double score_answer(RewardMetric metric, const std::string& candidate,
                    const std::string& reference);

}  // namespace memrag
