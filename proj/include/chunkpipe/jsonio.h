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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace chunkpipe {

using Json = nlohmann::json;

std::string read_text_file(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_text_file(const std::filesystem::path& path, std::string_view contents);

// One compact JSON object per line, '\n' terminated.
std::string dump_jsonl(const std::vector<Json>& rows);
std::vector<Json> parse_jsonl(std::string_view text, const std::string& source);

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);
std::vector<Json> read_jsonl(const std::filesystem::path& path);

// Pretty JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& value);
Json read_json(const std::filesystem::path& path);

}  // namespace chunkpipe
