#include "memrag/env.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "json.hpp"
#include "memrag/util.hpp"

namespace memrag {

AnswerCache::Entry AnswerScorer::score(const std::string& question_id,
                                       const std::string& question,
                                       const std::string& reference, const Emg& graph,
                                       const std::vector<std::string>& memory_ids) {
  if (cache_) {
    if (auto hit = cache_->get(question_id, memory_ids)) return *hit;
  }
  std::vector<std::string> texts;
  texts.reserve(memory_ids.size());
  for (const auto& id : memory_ids) {
    const StoredMemory* m = graph.find_memory(id);
    if (!m) throw std::runtime_error("unknown memory id in selection: '" + id + "'");
    texts.push_back(m->record.text);
  }
  AnswerCache::Entry entry;
  entry.answer = generator_.generate(question, texts);
  entry.metric = score_answer(metric_, entry.answer, reference);
  if (cache_) cache_->put(question_id, memory_ids, entry);
  return entry;
}

std::vector<std::string> activate(const Emg& graph, const QAPair& question, int k) {
  if (k < 1) throw std::invalid_argument("activate: k must be >= 1");
  const Vector q = embed_text(question.question);
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

  std::vector<std::string> nodes;
  for (const auto& s : scored) {
    const std::string& node = graph.find_memory(s.id)->attached_node;
    if (std::find(nodes.begin(), nodes.end(), node) == nodes.end()) {
      nodes.push_back(node);
    }
  }
  return nodes;
}

std::pair<std::string, std::string> extract_question_anchor(const QAPair& question) {
  if (!question.q_entity.empty() || !question.q_relation.empty()) {
    return {question.q_entity, question.q_relation};
  }
  // Fallback: longest run of capitalized tokens, and the first verb from a
  // fixed pattern table.
  std::string entity;
  {
    std::string best, current;
    std::string token;
    auto flush_token = [&] {
      if (!token.empty() && (std::isupper(static_cast<unsigned char>(token[0])) ||
                             std::isdigit(static_cast<unsigned char>(token[0])))) {
        if (!current.empty()) current += ' ';
        current += token;
      } else {
        if (current.size() > best.size()) best = current;
        current.clear();
      }
      token.clear();
    };
    for (char c : question.question) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        token.push_back(c);
      } else {
        flush_token();
      }
    }
    flush_token();
    if (current.size() > best.size()) best = current;
    entity = best;
  }
  static const std::vector<std::string> kVerbs = {
      "departs", "depart",  "booked",   "book",   "likes",  "like",
      "visits",  "visit",   "travels",  "travel", "lives",  "live",
      "starts",  "start",   "ends",     "end",    "is",     "are"};
  std::string relation;
  const auto words = tokenize_words(question.question);
  for (const auto& w : words) {
    if (std::find(kVerbs.begin(), kVerbs.end(), w) != kVerbs.end()) {
      relation = w;
      break;
    }
  }
  return {entity, relation};
}

namespace {

// Push decision items for a node's live memories (ids descending so they
// pop in ascending order).
void push_node_items(EpisodeContext& ctx, const std::string& node) {
  const Emg& g = *ctx.graph;
  auto ids = g.live_attachments(node);
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    const StoredMemory* m = g.find_memory(*it);
    ctx.frontier.push_back({node, m->record.triple.relation, *it});
  }
}

// Expands a node: unvisited neighbors gain decision items; neighbors with
// no live memories are traversed through transparently so hub entities do
// not dead-end the walk.
void expand_node(EpisodeContext& ctx, const std::string& node) {
  if (ctx.expanded.count(node)) return;
  ctx.expanded.insert(node);
  const Emg& g = *ctx.graph;
  const auto neighbors = g.neighbors(node);
  // Reverse order so the lexicographically smallest neighbor pops first.
  for (auto it = neighbors.rbegin(); it != neighbors.rend(); ++it) {
    const std::string& next = *it;
    if (ctx.visited.count(next)) continue;
    ctx.visited.insert(next);
    if (g.live_attachments(next).empty()) {
      expand_node(ctx, next);
    } else {
      push_node_items(ctx, next);
    }
  }
}

void advance(EpisodeContext& ctx) {
  if (static_cast<int>(ctx.selected.size()) >= ctx.max_selected) {
    ctx.current.reset();
    ctx.frontier.clear();
    return;
  }
  if (ctx.frontier.empty()) {
    ctx.current.reset();
    return;
  }
  ctx.current = ctx.frontier.back();
  ctx.frontier.pop_back();
}

}  // namespace

EpisodeContext begin_episode(const Emg& graph, const QAPair& question,
                             const EpisodeConfig& config, AnswerScorer& scorer) {
  EpisodeContext ctx;
  ctx.graph = &graph;
  ctx.question = question;
  ctx.question_id = graph.user_id() + '\x1f' + question.question;
  ctx.max_selected = config.max_selected;
  ctx.q_vec = embed_text(question.question);
  const auto [nq, rq] = extract_question_anchor(question);
  ctx.nq_vec = embed_text(nq);
  ctx.rq_vec = embed_text(rq);

  if (config.activate_from_root) {
    // Traversal from the root reaches every partition: seed with every node
    // holding live memories, in name order.
    for (const auto& [node, ids] : graph.attachments()) {
      if (!graph.live_attachments(node).empty()) ctx.activated.push_back(node);
    }
  } else {
    ctx.activated = activate(graph, question, config.top_k);
  }

  for (auto it = ctx.activated.rbegin(); it != ctx.activated.rend(); ++it) {
    ctx.visited.insert(*it);
    push_node_items(ctx, *it);
  }
  const auto first = scorer.score(ctx.question_id, question.question, question.answer,
                                  graph, {});
  ctx.initial_metric = first.metric;
  ctx.current_metric = first.metric;
  advance(ctx);
  return ctx;
}

bool episode_done(const EpisodeContext& ctx) { return !ctx.current.has_value(); }

EnvState make_state(const EpisodeContext& ctx, const std::string& node,
                    const std::string& incoming_relation, const MemoryRecord& memory) {
  EnvState s;
  const auto node_it = ctx.graph->entity_nodes().find(node);
  const Vector node_vec =
      node_it != ctx.graph->entity_nodes().end() ? node_it->second.embedding
                                                 : embed_text(node);
  s.sim_entity = cosine(ctx.nq_vec, node_vec);
  s.sim_relation = cosine(ctx.rq_vec, embed_text(incoming_relation));
  s.sim_memory = cosine(ctx.q_vec, embed_text(memory.text));
  return s;
}

EnvState current_state(const EpisodeContext& ctx) {
  if (!ctx.current) throw std::logic_error("current_state: episode is done");
  const StoredMemory* m = ctx.graph->find_memory(ctx.current->memory_id);
  return make_state(ctx, ctx.current->node, ctx.current->relation, m->record);
}

StepResult step(EpisodeContext& ctx, int action, AnswerScorer& scorer) {
  if (episode_done(ctx)) throw std::logic_error("step: episode is done");
  if (action != 0 && action != 1) throw std::invalid_argument("step: action must be 0 or 1");

  const FrontierItem item = *ctx.current;
  StepResult result;
  if (action == 1) {
    ctx.selected.push_back(item.memory_id);
    expand_node(ctx, item.node);
    const auto scored = scorer.score(ctx.question_id, ctx.question.question,
                                     ctx.question.answer, *ctx.graph, ctx.selected);
    result.reward = scored.metric - ctx.current_metric;
    ctx.current_metric = scored.metric;
  } else {
    result.reward = 0.0;
  }
  ctx.step_count += 1;
  advance(ctx);
  result.done = episode_done(ctx);
  if (!result.done) result.next_state = current_state(ctx);
  return result;
}

RunResult run_episode(const Emg& graph, const QAPair& question, const PolicyNet& policy,
                      AnswerScorer& scorer, const EpisodeConfig& config, RunMode mode,
                      std::uint64_t seed) {
  EpisodeContext ctx = begin_episode(graph, question, config, scorer);
  Rng rng(seed);
  RunResult result;
  result.initial_metric = ctx.initial_metric;
  while (!episode_done(ctx)) {
    const EnvState state = current_state(ctx);
    const auto [p_include, p_stop] = policy.forward(state);
    int action;
    if (mode == RunMode::Greedy) {
      action = p_include >= p_stop ? 1 : 0;
    } else {
      action = rng.uniform() < p_include ? 1 : 0;
    }
    const StepResult sr = step(ctx, action, scorer);
    result.trajectory.push_back({state, action, sr.reward});
  }
  result.selected = ctx.selected;
  result.final_metric = ctx.current_metric;
  result.final_answer = scorer
                            .score(ctx.question_id, question.question, question.answer,
                                   graph, ctx.selected)
                            .answer;
  return result;
}

std::vector<LabeledState> collect_labeled_states(const Emg& graph, const QAPair& question,
                                                 const EpisodeConfig& config) {
  EpisodeContext ctx;
  ctx.graph = &graph;
  ctx.question = question;
  ctx.max_selected = 1 << 30;  // label collection walks everything reachable
  ctx.q_vec = embed_text(question.question);
  const auto [nq, rq] = extract_question_anchor(question);
  ctx.nq_vec = embed_text(nq);
  ctx.rq_vec = embed_text(rq);
  if (config.activate_from_root) {
    for (const auto& [node, ids] : graph.attachments()) {
      if (!graph.live_attachments(node).empty()) ctx.activated.push_back(node);
    }
  } else {
    ctx.activated = activate(graph, question, config.top_k);
  }
  for (auto it = ctx.activated.rbegin(); it != ctx.activated.rend(); ++it) {
    ctx.visited.insert(*it);
    push_node_items(ctx, *it);
  }
  advance(ctx);

  const std::set<std::string> required(question.required_memory_ids.begin(),
                                       question.required_memory_ids.end());
  std::vector<LabeledState> out;
  while (ctx.current) {
    const FrontierItem item = *ctx.current;
    out.push_back({current_state(ctx), required.count(item.memory_id) ? 1 : 0});
    ctx.selected.push_back(item.memory_id);
    expand_node(ctx, item.node);
    advance(ctx);
  }
  return out;
}

void dump_trajectory(std::ostream& out, const std::vector<StepRecord>& trajectory) {
  for (const auto& rec : trajectory) {
    nlohmann::json j;
    j["state"] = {rec.state.sim_entity, rec.state.sim_relation, rec.state.sim_memory};
    j["action"] = rec.action;
    j["reward"] = rec.reward;
    out << j.dump() << '\n';
  }
}

}  // namespace memrag
