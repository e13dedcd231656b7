/*
 * Copyright 2026 The chunkpipe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <spdlog/spdlog.h>

#include "chunkpipe/clients.h"
#include "chunkpipe/error.h"
#include "httplib.h"

namespace chunkpipe {
namespace {

// POSTs `body` to base_url + path, retrying transport failures and non-200
// replies `retries` times. Throws kTimeout when the final attempt timed out
// and kModelUnavailable otherwise.
Json post_json(const EndpointConfig& config, const std::string& path, const Json& body) {
  config.validate();
  httplib::Client client(config.base_url);
  const auto sec = config.timeout_ms / 1000;
  const auto usec = (config.timeout_ms % 1000) * 1000;
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  if (config.auth_token) client.set_bearer_token_auth(*config.auth_token);

  const std::string payload = body.dump();
  std::string last_error;
  bool timed_out = false;
  for (int attempt = 0; attempt <= config.retries; ++attempt) {
    auto res = client.Post(path, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      last_error = httplib::to_string(err);
    } else if (res->status != 200) {
      timed_out = false;
      last_error = "HTTP " + std::to_string(res->status);
    } else {
      try {
        return Json::parse(res->body);
      } catch (const Json::parse_error& e) {
        timed_out = false;
        last_error = std::string("bad JSON reply: ") + e.what();
      }
    }
    spdlog::warn("POST {}{} attempt {}/{} failed: {}", config.base_url, path, attempt + 1, config.retries + 1,
                 last_error);
  }
  throw Error(timed_out ? ErrorCode::kTimeout : ErrorCode::kModelUnavailable,
              "POST " + config.base_url + path + ": " + last_error);
}

}  // namespace

HttpGenerator::HttpGenerator(EndpointConfig config) : config_(std::move(config)) { config_.validate(); }

std::string HttpGenerator::do_generate(std::string_view prompt, int max_tokens) {
  Json reply = post_json(config_, "/generate",
                         Json{{"prompt", prompt}, {"max_tokens", max_tokens}, {"temperature", 0}});
  if (!reply.contains("text") || !reply["text"].is_string()) {
    throw Error(ErrorCode::kModelUnavailable, "/generate reply lacks a string 'text'");
  }
  return reply["text"].get<std::string>();
}

HttpEmbedder::HttpEmbedder(EndpointConfig config, std::size_t batch_size)
    : config_(std::move(config)), batch_size_(batch_size) {
  config_.validate();
  if (batch_size_ == 0) throw Error(ErrorCode::kInvalidArgument, "embed batch size must be > 0");
}

std::vector<EmbeddingVector> HttpEmbedder::do_embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
    const std::size_t end = std::min(texts.size(), start + batch_size_);
    Json batch = Json::array();
    for (std::size_t i = start; i < end; ++i) batch.push_back(texts[i]);
    Json reply = post_json(config_, "/embed", Json{{"texts", batch}});
    try {
      const auto& vectors = reply.at("vectors");
      if (vectors.size() != end - start) {
        throw Error(ErrorCode::kModelUnavailable, "/embed returned " + std::to_string(vectors.size()) +
                                                      " vectors for " + std::to_string(end - start) + " texts");
      }
      for (const auto& v : vectors) out.push_back(EmbeddingVector{v.get<std::vector<float>>()});
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kModelUnavailable, std::string("/embed reply malformed: ") + e.what());
    }
  }
  return out;
}

HttpScorer::HttpScorer(EndpointConfig config) : config_(std::move(config)) { config_.validate(); }

int HttpScorer::do_score(std::string_view question, const Chunk& chunk) {
  Json reply = post_json(config_, "/score", Json{{"question", question}, {"chunk", render_chunk(chunk)}});
  if (!reply.contains("rank") || !reply["rank"].is_number_integer()) {
    throw Error(ErrorCode::kModelUnavailable, "/score reply lacks an integer 'rank'");
  }
  return reply["rank"].get<int>();
}

}  // namespace chunkpipe
