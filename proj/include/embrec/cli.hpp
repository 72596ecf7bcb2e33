// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "embrec/model.hpp"

namespace embrec::cli {

/// One corpus line: {"doc_id": ..., "tokens": [...]} or {"doc_id": ..., "text": "..."}.
/// Text is tokenized one byte per id, so it needs vocab_size >= 256.
struct CorpusRecord {
  std::string doc_id;
  std::vector<std::int32_t> tokens;
};

/// Parses JSON-lines, skipping blank lines. Records longer than max_seq are
/// split into max_seq windows with ids "<doc_id>#w<i>". Throws kInput.
std::vector<CorpusRecord> parse_corpus(std::string_view jsonl, const ModelConfig& config);

std::vector<std::int32_t> byte_tokens(std::string_view text);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace embrec::cli
