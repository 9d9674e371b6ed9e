#include "dfalab/corpus.hpp"

#include <cstring>
#include <fstream>

#include "dfalab/errors.hpp"

namespace dfalab {

namespace {

constexpr char kMagic[4] = {'D', 'F', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated corpus file while reading " + what);
  return value;
}

}  // namespace

Corpus ingest(const std::vector<std::string>& paths) {
  Corpus corpus;
  for (const std::string& path : paths) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    if (!corpus.tokens.empty()) corpus.tokens.push_back(Corpus::kSeparator);
    corpus.doc_offsets.push_back(corpus.tokens.size());
    corpus.tokens.insert(corpus.tokens.end(), std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path + "'");
  }
  if (corpus.tokens.empty()) throw ValidationError("ingested corpus is empty");
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint64_t>(corpus.tokens.size()));
  write_raw(out, static_cast<std::uint64_t>(corpus.doc_offsets.size()));
  for (const std::uint64_t off : corpus.doc_offsets) write_raw(out, off);
  out.write(reinterpret_cast<const char*>(corpus.tokens.data()),
            static_cast<std::streamsize>(corpus.tokens.size()));
  if (!out) throw IoError("write failure on '" + path + "'");
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw ValidationError("'" + path + "' is not a corpus file (bad magic)");
  }
  const auto version = read_raw<std::uint32_t>(in, "version");
  if (version != kVersion) {
    throw ValidationError("unsupported corpus version " + std::to_string(version));
  }
  const auto n_tokens = read_raw<std::uint64_t>(in, "token count");
  const auto n_docs = read_raw<std::uint64_t>(in, "document count");
  Corpus corpus;
  corpus.doc_offsets.resize(n_docs);
  for (std::uint64_t i = 0; i < n_docs; ++i) {
    corpus.doc_offsets[i] = read_raw<std::uint64_t>(in, "document offset");
  }
  corpus.tokens.resize(n_tokens);
  in.read(reinterpret_cast<char*>(corpus.tokens.data()),
          static_cast<std::streamsize>(n_tokens));
  if (!in) throw IoError("truncated corpus file while reading tokens");
  if (n_tokens == 0) throw ValidationError("corpus file holds zero tokens");
  return corpus;
}

}  // namespace dfalab
