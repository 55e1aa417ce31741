#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "memrag/generation.hpp"
#include "memrag/memory.hpp"

namespace memrag {

struct CorpusSpec {
  int n_users = 50;
  int memories_per_user = 100;
  // Empty means uniform over the taxonomy; weights bias distractor and
  // one-hop subclass choice.
  std::map<std::string, double> subclass_mix;
  std::map<int, double> hop_distribution = {{1, 0.5}, {2, 0.35}, {3, 0.15}};
  double distractor_ratio = 0.4;  // distractor : chain memory ratio
  std::uint64_t seed = 42;
  std::string user_prefix = "user";
};

// Deterministic in (spec). Memory chains instantiate 1/2/3-hop question
// patterns; every QA answer embeds each required memory's tail entity, so
// the oracle template is reconstructible from the corpus alone.
std::vector<Session> gen_corpus(const CorpusSpec& spec);

// Entity-extraction query for the autofill / user-service applications.
struct AfUsQuery {
  std::string user_id;
  std::string app;  // "af", "us_reminder", "us_travel"
  QAPair qa;
  std::string gold_entity;
  std::vector<std::string> gold_source_ids;  // required ids whose tails form the gold

  bool operator==(const AfUsQuery&) const = default;
};

// Timestamp separating the corpus past from upcoming events.
std::int64_t corpus_reference_now();

std::vector<AfUsQuery> gen_af_us_queries(const std::vector<Session>& corpus);

// Rebuilds the slot oracle from a corpus: each required memory's tail
// entity is located in the answer (left to right, in required order) and
// becomes a slot sourced from that memory's text.
MockOracle build_mock_oracle(const std::vector<Session>& corpus,
                             const std::vector<AfUsQuery>& af_us = {});

struct EditStreamSpec {
  int weeks = 4;
  int edits_per_week = 25;
  std::vector<int> weekly_counts;  // overrides edits_per_week when nonempty
  std::map<EditKind, double> kind_mix = {{EditKind::Insertion, 1.0},
                                         {EditKind::Deletion, 1.0},
                                         {EditKind::Replacement, 2.0}};
  std::uint64_t seed = 7;
};

// One week of the continuous-edit experiment: the edits applied during the
// week plus the refreshed ground truth after them.
struct WeeklySlice {
  int week = 1;
  std::vector<EditStreamEntry> edits;
  std::vector<Session> sessions;  // live memories + current QA pairs
  std::vector<AfUsQuery> af_us;
  // Replaced tail values per user, cumulative; correct answers must no
  // longer contain them.
  std::map<std::string, std::vector<std::string>> superseded;
  std::int64_t eval_now = 0;  // sweep timestamp for this week
};

std::vector<WeeklySlice> gen_edit_stream(const EditStreamSpec& spec,
                                         const std::vector<Session>& corpus);

// After a replacement edit: swaps the superseded id for the payload id in
// required sets and substitutes the new tail value into affected answers.
void refresh_qa_after_replacement(std::vector<QAPair>& qa_pairs,
                                  const MemoryRecord& old_mem,
                                  const MemoryRecord& payload);

void save_af_us(const std::vector<AfUsQuery>& queries, const std::filesystem::path& path);
std::vector<AfUsQuery> load_af_us(const std::filesystem::path& path);

}  // namespace memrag
