#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dfalab {

/// Byte-level token stream over a 256-entry vocabulary. Files are
/// concatenated in ingestion order with one separator token (byte 0)
/// between consecutive files; doc_offsets records where each file begins.
struct Corpus {
  static constexpr int kVocabSize = 256;
  static constexpr std::uint8_t kSeparator = 0;

  std::vector<std::uint8_t> tokens;
  std::vector<std::uint64_t> doc_offsets;

  std::uint64_t size() const { return tokens.size(); }
};

/// Reads each path as raw bytes. Unreadable path -> I/O error; zero total
/// tokens -> validation error. Deterministic: same files, same Corpus.
Corpus ingest(const std::vector<std::string>& paths);

/// Binary corpus container ("DFLC"): see README for the byte layout.
void save_corpus(const Corpus& corpus, const std::string& path);
Corpus load_corpus(const std::string& path);

}  // namespace dfalab
