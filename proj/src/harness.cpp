#include "memrag/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "memrag/util.hpp"

namespace memrag {

namespace {

nlohmann::json corpus_spec_to_json(const CorpusSpec& s) {
  nlohmann::json j;
  j["n_users"] = s.n_users;
  j["memories_per_user"] = s.memories_per_user;
  j["subclass_mix"] = s.subclass_mix;
  nlohmann::json hops = nlohmann::json::object();
  for (const auto& [h, p] : s.hop_distribution) hops[std::to_string(h)] = p;
  j["hop_distribution"] = std::move(hops);
  j["distractor_ratio"] = s.distractor_ratio;
  j["seed"] = s.seed;
  j["user_prefix"] = s.user_prefix;
  return j;
}

CorpusSpec corpus_spec_from_json(const nlohmann::json& j) {
  CorpusSpec s;
  s.n_users = j.value("n_users", s.n_users);
  s.memories_per_user = j.value("memories_per_user", s.memories_per_user);
  if (j.contains("subclass_mix")) {
    s.subclass_mix = j.at("subclass_mix").get<std::map<std::string, double>>();
  }
  if (j.contains("hop_distribution")) {
    s.hop_distribution.clear();
    for (const auto& [k, v] : j.at("hop_distribution").items()) {
      s.hop_distribution[std::stoi(k)] = v.get<double>();
    }
  }
  s.distractor_ratio = j.value("distractor_ratio", s.distractor_ratio);
  s.seed = j.value("seed", s.seed);
  s.user_prefix = j.value("user_prefix", s.user_prefix);
  return s;
}

nlohmann::json edit_spec_to_json(const EditStreamSpec& s) {
  nlohmann::json j;
  j["weeks"] = s.weeks;
  j["edits_per_week"] = s.edits_per_week;
  j["weekly_counts"] = s.weekly_counts;
  nlohmann::json mix = nlohmann::json::object();
  for (const auto& [k, w] : s.kind_mix) mix[to_string(k)] = w;
  j["kind_mix"] = std::move(mix);
  j["seed"] = s.seed;
  return j;
}

EditStreamSpec edit_spec_from_json(const nlohmann::json& j) {
  EditStreamSpec s;
  s.weeks = j.value("weeks", s.weeks);
  s.edits_per_week = j.value("edits_per_week", s.edits_per_week);
  s.weekly_counts = j.value("weekly_counts", s.weekly_counts);
  if (j.contains("kind_mix")) {
    s.kind_mix.clear();
    for (const auto& [k, w] : j.at("kind_mix").items()) {
      s.kind_mix[edit_kind_from_string(k)] = w.get<double>();
    }
  }
  s.seed = j.value("seed", s.seed);
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

std::uint64_t user_seed(const RunConfig& config, const std::string& user_id) {
  return splitmix64(config.seed ^ fnv1a64(user_id));
}

std::filesystem::path graphs_dir(const RunConfig& c) { return c.out_dir / "graphs"; }
std::filesystem::path models_dir(const RunConfig& c) { return c.out_dir / "models"; }

std::vector<std::string> naive_top_k(const Emg& graph, const std::string& question, int k) {
  const Vector q = embed_text(question);
  struct Scored {
    double score;
    std::string id;
  };
  std::vector<Scored> scored;
  for (const auto& id : graph.live_memory_ids()) {
    scored.push_back({cosine(q, graph.find_memory(id)->embedding), id});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (scored.size() > static_cast<std::size_t>(k)) scored.resize(k);
  std::vector<std::string> ids;
  for (const auto& s : scored) ids.push_back(s.id);
  return ids;
}

std::vector<std::string> memory_texts(const Emg& graph, const std::vector<std::string>& ids) {
  std::vector<std::string> texts;
  texts.reserve(ids.size());
  for (const auto& id : ids) texts.push_back(graph.find_memory(id)->record.text);
  return texts;
}

struct RecallPrecision {
  double recall = 0.0;
  double precision = 0.0;
};

RecallPrecision recall_precision(const std::vector<std::string>& selected,
                                 const std::vector<std::string>& required) {
  if (required.empty()) return {0.0, 0.0};
  const std::set<std::string> sel(selected.begin(), selected.end());
  int hit = 0;
  for (const auto& id : required) {
    if (sel.count(id)) ++hit;
  }
  RecallPrecision rp;
  rp.recall = static_cast<double>(hit) / static_cast<double>(required.size());
  rp.precision = selected.empty()
                     ? 0.0
                     : static_cast<double>(hit) / static_cast<double>(selected.size());
  return rp;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  c.train_corpus.n_users = 50;
  c.train_corpus.memories_per_user = 100;
  c.train_corpus.seed = 42;
  c.train_corpus.user_prefix = "train_user";
  c.test_corpus = c.train_corpus;
  c.test_corpus.n_users = 10;
  c.test_corpus.seed = splitmix64(42 ^ 0x7e57ULL);
  c.test_corpus.user_prefix = "test_user";
  return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["top_k"] = c.top_k;
  j["max_selected"] = c.max_selected;
  j["reward_metric"] = to_string(c.reward_metric);
  j["generator"] = c.generator;
  j["out_dir"] = c.out_dir.string();
  j["train_corpus"] = corpus_spec_to_json(c.train_corpus);
  j["test_corpus"] = corpus_spec_to_json(c.test_corpus);
  j["edit_stream"] = edit_spec_to_json(c.edit_stream);
  j["train"] = {{"lr", c.train.lr},
                {"discount", c.train.discount},
                {"ws_episodes", c.train.ws_episodes},
                {"pg_episodes", c.train.pg_episodes},
                {"seed", c.train.seed}};
  j["transe"] = {{"dim", c.transe.dim},
                 {"margin", c.transe.margin},
                 {"lr", c.transe.lr},
                 {"epochs", c.transe.epochs}};
  return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c = default_run_config();
  c.seed = j.value("seed", c.seed);
  c.top_k = j.value("top_k", c.top_k);
  c.max_selected = j.value("max_selected", c.max_selected);
  if (j.contains("reward_metric")) {
    c.reward_metric = reward_metric_from_string(j.at("reward_metric").get<std::string>());
  }
  c.generator = j.value("generator", c.generator);
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("train_corpus")) c.train_corpus = corpus_spec_from_json(j.at("train_corpus"));
  if (j.contains("test_corpus")) c.test_corpus = corpus_spec_from_json(j.at("test_corpus"));
  if (j.contains("edit_stream")) c.edit_stream = edit_spec_from_json(j.at("edit_stream"));
  if (j.contains("train")) {
    const auto& t = j.at("train");
    c.train.lr = t.value("lr", c.train.lr);
    c.train.discount = t.value("discount", c.train.discount);
    c.train.ws_episodes = t.value("ws_episodes", c.train.ws_episodes);
    c.train.pg_episodes = t.value("pg_episodes", c.train.pg_episodes);
    c.train.seed = t.value("seed", c.train.seed);
  }
  if (j.contains("transe")) {
    const auto& t = j.at("transe");
    c.transe.dim = t.value("dim", c.transe.dim);
    c.transe.margin = t.value("margin", c.transe.margin);
    c.transe.lr = t.value("lr", c.transe.lr);
    c.transe.epochs = t.value("epochs", c.transe.epochs);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  nlohmann::json j;
  in >> j;
  return config_from_json(j);
}

std::string config_hash(const RunConfig& config) {
  nlohmann::json j = config_to_json(config);
  j.erase("out_dir");  // relocating artifacts must not invalidate them
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

GenDataResult cmd_gen_data(const RunConfig& config) {
  std::filesystem::create_directories(config.out_dir);

  const auto train = gen_corpus(config.train_corpus);
  const auto test = gen_corpus(config.test_corpus);
  const auto af_us = gen_af_us_queries(test);
  const auto weeks = gen_edit_stream(config.edit_stream, test);

  save_corpus(train, config.out_dir / "corpus_train.jsonl");
  save_corpus(test, config.out_dir / "corpus_test.jsonl");
  save_af_us(af_us, config.out_dir / "afus_test.jsonl");

  std::vector<EditStreamEntry> all_edits;
  nlohmann::json weeks_meta = nlohmann::json::array();
  for (const auto& w : weeks) {
    for (const auto& e : w.edits) all_edits.push_back(e);
    save_corpus(w.sessions,
                config.out_dir / ("week" + std::to_string(w.week) + "_corpus.jsonl"));
    save_af_us(w.af_us,
               config.out_dir / ("week" + std::to_string(w.week) + "_afus.jsonl"));
    nlohmann::json meta;
    meta["week"] = w.week;
    meta["eval_now"] = format_iso8601_utc(w.eval_now);
    meta["superseded"] = w.superseded;
    weeks_meta.push_back(std::move(meta));
  }
  save_edit_stream(all_edits, config.out_dir / "edits.jsonl");
  {
    std::ofstream out(config.out_dir / "weeks_meta.json");
    if (!out) throw std::runtime_error("cannot write weeks_meta.json");
    out << weeks_meta.dump(2) << '\n';
  }

  GenDataResult result;
  result.train_users = static_cast<int>(train.size());
  result.test_users = static_cast<int>(test.size());
  for (const auto& s : train) {
    result.train_memories += static_cast<int>(s.memories.size());
    result.train_qa += static_cast<int>(s.qa_pairs.size());
  }
  for (const auto& s : test) {
    result.test_memories += static_cast<int>(s.memories.size());
    result.test_qa += static_cast<int>(s.qa_pairs.size());
  }
  result.af_us_queries = static_cast<int>(af_us.size());
  result.edits = static_cast<int>(all_edits.size());

  nlohmann::json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["config_hash"] = config_hash(config);
  manifest["seed"] = config.seed;
  manifest["counts"] = {{"train_users", result.train_users},
                        {"test_users", result.test_users},
                        {"train_memories", result.train_memories},
                        {"test_memories", result.test_memories},
                        {"train_qa", result.train_qa},
                        {"test_qa", result.test_qa},
                        {"af_us_queries", result.af_us_queries},
                        {"edits", result.edits}};
  std::ofstream mf(config.out_dir / "manifest.json");
  if (!mf) throw std::runtime_error("cannot write manifest.json");
  mf << manifest.dump(2) << '\n';
  return result;
}

std::vector<Session> load_split(const RunConfig& config, const std::string& split) {
  const auto path = config.out_dir / ("corpus_" + split + ".jsonl");
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("missing corpus (run gen-data first): " + path.string());
  }
  return load_corpus(path);
}

std::map<std::string, Emg> load_graphs(const RunConfig& config,
                                       const std::vector<Session>& sessions) {
  std::map<std::string, Emg> graphs;
  for (const auto& s : sessions) {
    const auto path = graphs_dir(config) / (s.user_id + ".emg.json");
    if (!std::filesystem::exists(path)) {
      throw std::runtime_error("missing graph (run build first): " + path.string());
    }
    graphs[s.user_id] = load_emg(path);
  }
  return graphs;
}

BuildResult cmd_build(const RunConfig& config) {
  std::filesystem::create_directories(graphs_dir(config));
  std::filesystem::create_directories(models_dir(config));
  BuildResult result;
  for (const std::string split : {"train", "test"}) {
    for (const auto& session : load_split(config, split)) {
      TransEConfig tc = config.transe;
      tc.seed = user_seed(config, session.user_id);
      const auto triples = training_triples(session);
      if (triples.empty()) continue;
      const TransEModel model = train_transe(triples, tc);
      save_transe(model, models_dir(config) / (session.user_id + ".transe.json"));
      const Emg graph = Emg::build(session, model);
      save_emg(graph, graphs_dir(config) / (session.user_id + ".emg.json"));
      ++result.graphs_built;
      result.entities += static_cast<int>(graph.entity_nodes().size());
      result.edges += static_cast<int>(graph.edges().size());
    }
  }
  return result;
}

namespace {
constexpr const char* kCkptFormat = "memrag-checkpoint";
constexpr int kCkptVersion = 1;
}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = kCkptFormat;
  j["version"] = kCkptVersion;
  j["policy"] = nlohmann::json::parse(policy_to_json(ckpt.net));
  j["ws_done"] = ckpt.ws_done;
  j["pg_done"] = ckpt.pg_done;
  j["config_hash"] = ckpt.config_hash;
  j["code_version"] = kCodeVersion;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << j.dump();
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("corrupt checkpoint: ") + e.what());
  }
  if (j.value("format", "") != kCkptFormat || j.value("version", -1) != kCkptVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  Checkpoint ckpt;
  ckpt.net = policy_from_json(j.at("policy").dump());
  ckpt.ws_done = j.at("ws_done").get<int>();
  ckpt.pg_done = j.at("pg_done").get<int>();
  ckpt.config_hash = j.at("config_hash").get<std::string>();
  return ckpt;
}

std::unique_ptr<GeneratorInterface> make_generator(const RunConfig& config,
                                                   const MockOracle& oracle) {
  if (config.generator == "mock") {
    return std::make_unique<MockOracle>(oracle);
  }
  if (config.generator == "remote") {
    return std::make_unique<RemoteGenerator>(remote_config_from_env());
  }
  throw std::runtime_error("unknown generator backend: '" + config.generator + "'");
}

TrainResult cmd_train(const RunConfig& config, const TrainOptions& options) {
  const auto sessions = load_split(config, "train");
  const auto graphs = load_graphs(config, sessions);
  const MockOracle oracle = build_mock_oracle(sessions);
  auto generator = make_generator(config, oracle);
  AnswerCache cache;
  AnswerScorer scorer(*generator, config.reward_metric, &cache);

  struct PairRef {
    const Emg* graph;
    const QAPair* qa;
  };
  std::vector<PairRef> pairs;
  for (const auto& s : sessions) {
    for (const auto& qa : s.qa_pairs) pairs.push_back({&graphs.at(s.user_id), &qa});
  }

  TrainResult result;
  Checkpoint ckpt;
  if (options.resume) {
    ckpt = *options.resume;
    if (ckpt.config_hash != config_hash(config)) {
      throw std::runtime_error("checkpoint/config mismatch: " + ckpt.config_hash +
                               " vs " + config_hash(config));
    }
  } else {
    ckpt.net = PolicyNet(splitmix64(config.seed ^ 0x90110c7ULL));
    ckpt.config_hash = config_hash(config);
  }

  EpisodeConfig ecfg;
  ecfg.top_k = config.top_k;
  ecfg.max_selected = config.max_selected;
  ecfg.activate_from_root = options.activate_from_root;

  const int ws_total = options.ws_episodes.value_or(config.train.ws_episodes);
  const int pg_total = options.pg_episodes.value_or(config.train.pg_episodes);

  if (!pairs.empty()) {
    for (int ep = ckpt.ws_done; ep < ws_total; ++ep) {
      const PairRef& p = pairs[ep % pairs.size()];
      const auto states = collect_labeled_states(*p.graph, *p.qa, ecfg);
      if (states.empty()) {
        result.ws_loss.push_back(0.0);
        continue;
      }
      result.ws_loss.push_back(warm_start_step(ckpt.net, states, config.train.lr));
    }
    for (int ep = ckpt.pg_done; ep < pg_total; ++ep) {
      const PairRef& p = pairs[ep % pairs.size()];
      const auto run = run_episode(*p.graph, *p.qa, ckpt.net, scorer, ecfg,
                                   RunMode::Sample,
                                   splitmix64(config.seed ^ (0xa5a5ULL + ep)));
      if (run.trajectory.empty()) {
        result.pg_return.push_back(0.0);
        continue;
      }
      pg_update(ckpt.net, run.trajectory, config.train);
      double total = 0.0;
      for (const auto& rec : run.trajectory) total += rec.reward;
      result.pg_return.push_back(total);
    }
  }
  ckpt.ws_done = std::max(ckpt.ws_done, ws_total);
  ckpt.pg_done = std::max(ckpt.pg_done, pg_total);
  result.checkpoint = std::move(ckpt);
  return result;
}

EvalReport evaluate(const RunConfig& config, const PolicyNet& net,
                    const std::vector<Session>& sessions,
                    const std::map<std::string, Emg>& graphs,
                    const std::vector<AfUsQuery>& af_us, const MockOracle& oracle,
                    const EvalOptions& options) {
  auto generator = make_generator(config, oracle);
  AnswerCache cache;
  AnswerScorer scorer(*generator, config.reward_metric, &cache);

  EpisodeConfig ecfg;
  ecfg.top_k = options.k_override.value_or(config.top_k);
  ecfg.max_selected = config.max_selected;
  ecfg.activate_from_root = options.activate_from_root;

  EvalReport report;
  report.config_hash = config_hash(config);
  report.code_version = kCodeVersion;

  std::vector<double> r1, r2, rl, bl, rec, prec, lat;
  std::vector<double> b_r1, b_r2, b_rl, b_bl, b_rec, b_prec, b_lat;
  int superseded_hits = 0;

  using Clock = std::chrono::steady_clock;
  for (const auto& session : sessions) {
    const Emg& graph = graphs.at(session.user_id);
    const auto sup = options.superseded.find(session.user_id);
    for (const auto& qa : session.qa_pairs) {
      const auto t0 = Clock::now();
      const auto run = run_episode(graph, qa, net, scorer, ecfg, RunMode::Greedy);
      const auto t1 = Clock::now();
      lat.push_back(std::chrono::duration<double>(t1 - t0).count());
      r1.push_back(rouge_n(run.final_answer, qa.answer, 1));
      r2.push_back(rouge_n(run.final_answer, qa.answer, 2));
      rl.push_back(rouge_l(run.final_answer, qa.answer));
      bl.push_back(bleu(run.final_answer, qa.answer));
      const auto rp = recall_precision(run.selected, qa.required_memory_ids);
      rec.push_back(rp.recall * 100.0);
      prec.push_back(rp.precision * 100.0);
      if (sup != options.superseded.end()) {
        for (const auto& value : sup->second) {
          if (!value.empty() && run.final_answer.find(value) != std::string::npos) {
            ++superseded_hits;
            break;
          }
        }
      }

      const auto bt0 = Clock::now();
      const auto base_ids = naive_top_k(graph, qa.question, config.top_k);
      const std::string base_answer =
          generator->generate(qa.question, memory_texts(graph, base_ids));
      const auto bt1 = Clock::now();
      b_lat.push_back(std::chrono::duration<double>(bt1 - bt0).count());
      b_r1.push_back(rouge_n(base_answer, qa.answer, 1));
      b_r2.push_back(rouge_n(base_answer, qa.answer, 2));
      b_rl.push_back(rouge_l(base_answer, qa.answer));
      b_bl.push_back(bleu(base_answer, qa.answer));
      const auto brp = recall_precision(base_ids, qa.required_memory_ids);
      b_rec.push_back(brp.recall * 100.0);
      b_prec.push_back(brp.precision * 100.0);
      ++report.n_qa;
    }
  }

  std::vector<double> af_em, us_rem_em, us_trav_em;
  for (const auto& q : af_us) {
    auto git = graphs.find(q.user_id);
    if (git == graphs.end()) continue;
    const auto run = run_episode(git->second, q.qa, net, scorer, ecfg, RunMode::Greedy);
    const std::string predicted =
        oracle.extract_entity(q.qa.question, memory_texts(git->second, run.selected));
    const double em = exact_match(predicted, q.gold_entity) * 100.0;
    if (q.app == "af") {
      af_em.push_back(em);
      ++report.n_af;
    } else if (q.app == "us_reminder") {
      us_rem_em.push_back(em);
      ++report.n_us_reminder;
    } else if (q.app == "us_travel") {
      us_trav_em.push_back(em);
      ++report.n_us_travel;
    }
  }

  report.qa = {mean(r1), mean(r2), mean(rl), mean(bl), mean(rec), mean(prec), median(lat)};
  report.baseline = {mean(b_r1), mean(b_r2), mean(b_rl), mean(b_bl),
                     mean(b_rec), mean(b_prec), median(b_lat)};
  report.af_em = mean(af_em);
  report.us_reminder_em = mean(us_rem_em);
  report.us_travel_em = mean(us_trav_em);
  report.us_mean_em = 0.5 * (report.us_reminder_em + report.us_travel_em);
  report.superseded_share =
      report.n_qa == 0 ? 0.0 : 100.0 * superseded_hits / report.n_qa;
  return report;
}

nlohmann::json eval_report_to_json(const EvalReport& r) {
  auto scores = [](const AppScores& s) {
    return nlohmann::json{{"rouge1", s.rouge1},
                          {"rouge2", s.rouge2},
                          {"rougel", s.rougel},
                          {"bleu", s.bleu},
                          {"recall", s.recall},
                          {"precision", s.precision},
                          {"median_latency_s", s.median_latency_s}};
  };
  nlohmann::json j;
  j["config_hash"] = r.config_hash;
  j["code_version"] = r.code_version;
  j["n_qa"] = r.n_qa;
  j["n_af"] = r.n_af;
  j["n_us_reminder"] = r.n_us_reminder;
  j["n_us_travel"] = r.n_us_travel;
  j["qa"] = scores(r.qa);
  j["baseline"] = scores(r.baseline);
  j["af_em"] = r.af_em;
  j["us_reminder_em"] = r.us_reminder_em;
  j["us_travel_em"] = r.us_travel_em;
  j["us_mean_em"] = r.us_mean_em;
  j["superseded_share"] = r.superseded_share;
  return j;
}

std::string eval_report_to_text(const EvalReport& r) {
  char buf[512];
  std::string out;
  out += "                 R-1     R-2     R-L    BLEU  Recall    Prec  Lat(s)\n";
  std::snprintf(buf, sizeof(buf),
                "policy       %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f %7.4f\n",
                r.qa.rouge1, r.qa.rouge2, r.qa.rougel, r.qa.bleu, r.qa.recall,
                r.qa.precision, r.qa.median_latency_s);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "naive top-k  %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f %7.4f\n",
                r.baseline.rouge1, r.baseline.rouge2, r.baseline.rougel,
                r.baseline.bleu, r.baseline.recall, r.baseline.precision,
                r.baseline.median_latency_s);
  out += buf;
  std::snprintf(buf, sizeof(buf),
                "AF EM %.2f | US reminder EM %.2f | US travel EM %.2f | US mean %.2f\n",
                r.af_em, r.us_reminder_em, r.us_travel_em, r.us_mean_em);
  out += buf;
  std::snprintf(buf, sizeof(buf), "queries: qa=%d af=%d us=%d+%d | config %s\n",
                r.n_qa, r.n_af, r.n_us_reminder, r.n_us_travel,
                r.config_hash.c_str());
  out += buf;
  return out;
}

EvalReport cmd_eval(const RunConfig& config, const Checkpoint& ckpt) {
  if (ckpt.config_hash != config_hash(config)) {
    throw std::runtime_error("checkpoint/config mismatch: " + ckpt.config_hash +
                             " vs " + config_hash(config));
  }
  const auto sessions = load_split(config, "test");
  const auto graphs = load_graphs(config, sessions);
  const auto af_us = load_af_us(config.out_dir / "afus_test.jsonl");
  const MockOracle oracle = build_mock_oracle(sessions, af_us);
  return evaluate(config, ckpt.net, sessions, graphs, af_us, oracle);
}

std::vector<WeeklyReport> cmd_edits_experiment(const RunConfig& config,
                                               const Checkpoint& ckpt) {
  if (ckpt.config_hash != config_hash(config)) {
    throw std::runtime_error("checkpoint/config mismatch");
  }
  const auto sessions0 = load_split(config, "test");
  auto graphs = load_graphs(config, sessions0);
  std::map<std::string, TransEModel> models;
  for (const auto& s : sessions0) {
    models[s.user_id] = load_transe(models_dir(config) / (s.user_id + ".transe.json"));
  }
  const auto edits = load_edit_stream(config.out_dir / "edits.jsonl");

  nlohmann::json weeks_meta;
  {
    std::ifstream in(config.out_dir / "weeks_meta.json");
    if (!in) throw std::runtime_error("missing weeks_meta.json (run gen-data first)");
    in >> weeks_meta;
  }

  std::vector<WeeklyReport> out;
  {
    const auto af_us0 = load_af_us(config.out_dir / "afus_test.jsonl");
    const MockOracle oracle0 = build_mock_oracle(sessions0, af_us0);
    WeeklyReport wr;
    wr.week = 0;
    wr.report = evaluate(config, ckpt.net, sessions0, graphs, af_us0, oracle0);
    out.push_back(std::move(wr));
  }

  for (const auto& meta : weeks_meta) {
    const int week = meta.at("week").get<int>();
    const std::int64_t eval_now = parse_iso8601_utc(meta.at("eval_now").get<std::string>());
    for (const auto& e : edits) {
      if (e.week != week) continue;
      graphs.at(e.user_id).apply_edit(e.cmd, models.at(e.user_id));
    }
    for (auto& [user, graph] : graphs) graph.sweep_expired(eval_now);

    const auto sessions_w =
        load_corpus(config.out_dir / ("week" + std::to_string(week) + "_corpus.jsonl"));
    const auto af_us_w =
        load_af_us(config.out_dir / ("week" + std::to_string(week) + "_afus.jsonl"));
    const MockOracle oracle_w = build_mock_oracle(sessions_w, af_us_w);

    EvalOptions options;
    options.superseded =
        meta.at("superseded").get<std::map<std::string, std::vector<std::string>>>();
    WeeklyReport wr;
    wr.week = week;
    wr.report = evaluate(config, ckpt.net, sessions_w, graphs, af_us_w, oracle_w, options);
    out.push_back(std::move(wr));
  }
  return out;
}

std::vector<AblationRow> cmd_ablate(const RunConfig& config) {
  const auto sessions = load_split(config, "test");
  const auto graphs = load_graphs(config, sessions);
  const auto af_us = load_af_us(config.out_dir / "afus_test.jsonl");
  const MockOracle oracle = build_mock_oracle(sessions, af_us);

  struct Variant {
    std::string name;
    TrainOptions train;
    bool eval_from_root;
  };
  std::vector<Variant> variants;
  variants.push_back({"full", {}, false});
  {
    TrainOptions t;
    t.activate_from_root = true;
    variants.push_back({"wo_act_nodes", t, true});
  }
  {
    TrainOptions t;
    t.ws_episodes = 0;
    variants.push_back({"wo_ws", t, false});
  }
  {
    TrainOptions t;
    t.pg_episodes = 0;
    variants.push_back({"wo_pg", t, false});
  }

  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    const TrainResult tr = cmd_train(config, v.train);
    EvalOptions eo;
    eo.activate_from_root = v.eval_from_root;
    AblationRow row;
    row.variant = v.name;
    row.report = evaluate(config, tr.checkpoint.net, sessions, graphs, af_us, oracle, eo);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ParamKRow> cmd_param_k(const RunConfig& config, const Checkpoint& ckpt) {
  if (ckpt.config_hash != config_hash(config)) {
    throw std::runtime_error("checkpoint/config mismatch");
  }
  const auto sessions = load_split(config, "test");
  const auto graphs = load_graphs(config, sessions);
  const auto af_us = load_af_us(config.out_dir / "afus_test.jsonl");
  const MockOracle oracle = build_mock_oracle(sessions, af_us);

  std::vector<ParamKRow> rows;
  for (int k = 1; k <= 5; ++k) {
    EvalOptions eo;
    eo.k_override = k;
    const EvalReport r = evaluate(config, ckpt.net, sessions, graphs, {}, oracle, eo);
    rows.push_back({k, r.qa.rougel, r.qa.recall, r.qa.median_latency_s});
  }
  return rows;
}

void cmd_repl(const RunConfig& config, const Checkpoint& ckpt, std::istream& in,
              std::ostream& out, const std::string& user_id) {
  auto sessions = load_split(config, "test");
  if (sessions.empty()) throw std::runtime_error("empty test corpus");
  Session* session = &sessions.front();
  if (!user_id.empty()) {
    session = nullptr;
    for (auto& s : sessions) {
      if (s.user_id == user_id) session = &s;
    }
    if (!session) throw std::runtime_error("unknown user: '" + user_id + "'");
  }
  Emg graph = load_emg(graphs_dir(config) / (session->user_id + ".emg.json"));
  TransEModel transe =
      load_transe(models_dir(config) / (session->user_id + ".transe.json"));
  MockOracle oracle = build_mock_oracle({*session});
  auto rebuild_oracle = [&] { oracle = build_mock_oracle({*session}); };

  out << "user " << session->user_id << ": " << graph.live_memory_count()
      << " memories, " << session->qa_pairs.size() << " questions\n";
  const std::string usage =
      "commands: ask <question> | insert <json> | delete <json> | replace <json> "
      "| sweep <iso-time> | show <entity> | quit\n";
  out << usage;

  std::string line;
  while (std::getline(in, line)) {
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto space = trimmed.find(' ');
    const std::string cmd = trimmed.substr(0, space);
    const std::string rest = space == std::string::npos ? "" : trim(trimmed.substr(space + 1));
    try {
      if (cmd == "quit" || cmd == "exit") break;
      if (cmd == "ask") {
        QAPair qa;
        qa.question = rest;
        AnswerCache cache;
        auto generator = make_generator(config, oracle);
        AnswerScorer scorer(*generator, config.reward_metric, &cache);
        EpisodeConfig ecfg{config.top_k, config.max_selected, false};
        const auto run = run_episode(graph, qa, ckpt.net, scorer, ecfg, RunMode::Greedy);
        for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
          const auto& rec = run.trajectory[i];
          char buf[160];
          std::snprintf(buf, sizeof(buf),
                        "  step %zu: state=(%.3f, %.3f, %.3f) action=%d\n", i + 1,
                        rec.state.sim_entity, rec.state.sim_relation,
                        rec.state.sim_memory, rec.action);
          out << buf;
        }
        out << "selected:";
        for (const auto& id : run.selected) out << ' ' << id;
        out << "\nanswer: " << run.final_answer << '\n';
      } else if (cmd == "insert" || cmd == "delete" || cmd == "replace") {
        const MemoryRecord payload = memory_from_json(nlohmann::json::parse(rest));
        EditCommand edit;
        edit.kind = cmd == "insert"   ? EditKind::Insertion
                    : cmd == "delete" ? EditKind::Deletion
                                      : EditKind::Replacement;
        edit.payload = payload;
        edit.effective_at = payload.created_at;
        const EditOutcome outcome = graph.apply_edit(edit, transe);
        if (edit.kind == EditKind::Replacement) {
          for (const auto& retired_id : outcome.memories_retired) {
            for (auto& m : session->memories) {
              if (m.id == retired_id) {
                refresh_qa_after_replacement(session->qa_pairs, m, payload);
              }
            }
          }
          std::erase_if(session->memories, [&](const MemoryRecord& m) {
            return std::find(outcome.memories_retired.begin(),
                             outcome.memories_retired.end(),
                             m.id) != outcome.memories_retired.end();
          });
        }
        session->memories.push_back(payload);
        rebuild_oracle();
        out << "applied " << to_string(outcome.kind_applied) << ": created="
            << outcome.nodes_created.size() << " retired="
            << outcome.memories_retired.size();
        if (outcome.matched_memory_id) out << " matched=" << *outcome.matched_memory_id;
        out << '\n';
      } else if (cmd == "sweep") {
        const int n = graph.sweep_expired(parse_iso8601_utc(rest));
        out << "retired " << n << " expired memories\n";
      } else if (cmd == "show") {
        auto it = graph.entity_nodes().find(rest);
        if (it == graph.entity_nodes().end()) {
          out << "no such entity: '" << rest << "'\n";
          continue;
        }
        out << "node '" << it->second.name << "' subclass '" << it->second.subclass
            << "'\n";
        for (const auto& id : graph.live_attachments(rest)) {
          out << "  " << id << ": " << graph.find_memory(id)->record.text << '\n';
        }
      } else {
        out << usage;
      }
    } catch (const std::exception& e) {
      out << "error: " << e.what() << '\n' << usage;
    }
  }
}

}  // namespace memrag
