#include <stdexcept>
#include <string>

#include "httplib.h"
#include "json.hpp"
#include "memrag/generation.hpp"

namespace memrag {

std::string RemoteGenerator::generate(const std::string& question,
                                      const std::vector<std::string>& memories) {
  nlohmann::json body;
  body["model"] = config_.model;
  body["messages"] = nlohmann::json::array(
      {{{"role", "user"}, {"content", build_prompt(question, memories)}}});

  std::string last_error;
  const int attempts = config_.max_retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    try {
      nlohmann::json reply = nlohmann::json::parse(res->body);
      std::string answer =
          reply.at("choices").at(0).at("message").at("content").get<std::string>();
      if (answer.empty()) {
        last_error = "generator returned an empty answer";
        continue;
      }
      return answer;
    } catch (const std::exception& e) {
      last_error = std::string("malformed generator response: ") + e.what();
    }
  }
  throw std::runtime_error("remote generation failed after " +
                           std::to_string(attempts) + " attempts: " + last_error);
}

}  // namespace memrag
