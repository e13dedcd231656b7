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

#include "chunkpipe/error.h"

namespace chunkpipe {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kMalformedHeading: return "MalformedHeading";
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kDuplicateChunkId: return "DuplicateChunkId";
    case ErrorCode::kCorruptIndex: return "CorruptIndex";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kUnknownChunkId: return "UnknownChunkId";
    case ErrorCode::kScorerUnavailable: return "ScorerUnavailable";
    case ErrorCode::kLabelerUnavailable: return "LabelerUnavailable";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kAnswerMismatch: return "AnswerMismatch";
    case ErrorCode::kAnswerOutOfRange: return "AnswerOutOfRange";
    case ErrorCode::kEvalTooLarge: return "EvalTooLarge";
    case ErrorCode::kTooManyOptions: return "TooManyOptions";
    case ErrorCode::kUnparseable: return "Unparseable";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kEmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::kModelUnavailable: return "ModelUnavailable";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kStructureMismatch: return "StructureMismatch";
    case ErrorCode::kBadWeights: return "BadWeights";
    case ErrorCode::kCorruptBundle: return "CorruptBundle";
  }
  return "Error";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
      return 1;
    case ErrorCode::kIo:
      return 2;
    case ErrorCode::kModelUnavailable:
    case ErrorCode::kTimeout:
    case ErrorCode::kScorerUnavailable:
    case ErrorCode::kLabelerUnavailable:
      return 3;
    default:
      return 4;
  }
}

}  // namespace chunkpipe
