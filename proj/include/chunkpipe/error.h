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

#include <stdexcept>
#include <string>
#include <string_view>

namespace chunkpipe {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kConfig,
  // corpus
  kMalformedHeading,
  kEmptyDocument,
  // embedx
  kDimMismatch,
  kDuplicateChunkId,
  kCorruptIndex,
  // ranker
  kEmptyInput,
  kUnknownChunkId,
  kScorerUnavailable,
  kLabelerUnavailable,
  // qa
  kSchemaError,
  kAnswerMismatch,
  kAnswerOutOfRange,
  kEvalTooLarge,
  kTooManyOptions,
  kUnparseable,
  kOutOfRange,
  kEmptyEvalSet,
  // clients
  kModelUnavailable,
  kTimeout,
  // merge
  kStructureMismatch,
  kBadWeights,
  kCorruptBundle,
};

std::string_view error_code_name(ErrorCode code);

// Process exit status for a failure of this kind:
// 1 config, 2 io, 3 endpoint, 4 data.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace chunkpipe
