// Copyright 2026 The embrec Authors
// SPDX-License-Identifier: Apache-2.0

#include <string>

#include <json.hpp>

#include "embrec/cli.hpp"
#include "embrec/error.hpp"

namespace embrec::cli {

std::vector<std::int32_t> byte_tokens(std::string_view text) {
  std::vector<std::int32_t> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(c);
  return out;
}

std::vector<CorpusRecord> parse_corpus(std::string_view jsonl, const ModelConfig& config) {
  std::vector<CorpusRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const std::string where = "corpus line " + std::to_string(line_no);
    CorpusRecord rec;
    try {
      const auto j = nlohmann::json::parse(line);
      if (!j.is_object() || !j.contains("doc_id") || !j["doc_id"].is_string()) {
        throw Error(ErrorKind::kInput, where + ": needs a string doc_id");
      }
      rec.doc_id = j["doc_id"].get<std::string>();
      if (rec.doc_id.empty()) throw Error(ErrorKind::kInput, where + ": empty doc_id");
      const bool has_tokens = j.contains("tokens");
      const bool has_text = j.contains("text");
      if (has_tokens == has_text) throw Error(ErrorKind::kInput, where + ": exactly one of tokens or text");
      if (has_text) {
        if (config.vocab_size < 256) {
          throw Error(ErrorKind::kInput, where + ": text records need vocab_size >= 256");
        }
        rec.tokens = byte_tokens(j["text"].get<std::string>());
      } else {
        rec.tokens = j["tokens"].get<std::vector<std::int32_t>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kInput, where + ": " + e.what());
    }
    if (rec.tokens.empty()) throw Error(ErrorKind::kInput, where + ": document has no tokens");
    for (auto t : rec.tokens) {
      if (t < 0 || t >= config.vocab_size) {
        throw Error(ErrorKind::kInput, where + ": token id " + std::to_string(t) + " outside the vocabulary");
      }
    }

    const auto window = static_cast<std::size_t>(config.max_seq);
    if (rec.tokens.size() <= window) {
      records.push_back(std::move(rec));
      continue;
    }
    for (std::size_t start = 0, i = 0; start < rec.tokens.size(); start += window, ++i) {
      const std::size_t stop = std::min(rec.tokens.size(), start + window);
      records.push_back({rec.doc_id + "#w" + std::to_string(i),
                         std::vector<std::int32_t>(rec.tokens.begin() + static_cast<std::ptrdiff_t>(start),
                                                   rec.tokens.begin() + static_cast<std::ptrdiff_t>(stop))});
    }
  }
  return records;
}

}  // namespace embrec::cli
