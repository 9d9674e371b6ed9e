#include "dfalab/synthtext.hpp"

#include <array>
#include <cctype>
#include <vector>

#include "dfalab/errors.hpp"
#include "dfalab/rng.hpp"

namespace dfalab {

namespace {

constexpr std::array<const char*, 24> kSyllables = {
    "ba", "co", "da", "el", "fo", "ga", "hi", "in", "ka", "lo", "ma", "ne",
    "or", "pa", "qui", "ra", "sen", "ta", "un", "ver", "wa", "xi", "yo", "zu"};

std::vector<std::string> build_lexicon(RngState& rng, std::size_t n_words) {
  std::vector<std::string> words;
  words.reserve(n_words);
  for (std::size_t i = 0; i < n_words; ++i) {
    const int syllables = 1 + static_cast<int>(rng.next_u64() % 3);
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      w += kSyllables[rng.next_u64() % kSyllables.size()];
    }
    words.push_back(std::move(w));
  }
  return words;
}

/// Zipf-like rank sampling: word ranks drawn with weight 1/(rank+1) via a
/// precomputed cumulative table and one uniform draw.
std::size_t sample_rank(RngState& rng, const std::vector<double>& cumulative) {
  const double u = rng.next_unit() * cumulative.back();
  std::size_t lo = 0, hi = cumulative.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (cumulative[mid] < u) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return lo;
}

}  // namespace

std::string synth_text(std::uint64_t seed, std::size_t n_bytes) {
  if (n_bytes == 0) throw ParameterError("synth_text needs n_bytes >= 1");
  RngState rng(seed);
  RngState lex_rng = rng.split("lexicon");
  const std::vector<std::string> lexicon = build_lexicon(lex_rng, 512);

  std::vector<double> cumulative(lexicon.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    acc += 1.0 / static_cast<double>(i + 1);
    cumulative[i] = acc;
  }

  RngState text_rng = rng.split("text");
  std::string out;
  out.reserve(n_bytes + 64);
  bool sentence_start = true;
  int words_in_sentence = 0;
  int sentences_in_paragraph = 0;
  int sentence_len = 4 + static_cast<int>(text_rng.next_u64() % 9);
  int paragraph_len = 3 + static_cast<int>(text_rng.next_u64() % 4);

  while (out.size() < n_bytes) {
    std::string word = lexicon[sample_rank(text_rng, cumulative)];
    if (sentence_start) {
      word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
      sentence_start = false;
    } else {
      out += ' ';
    }
    out += word;
    ++words_in_sentence;
    if (words_in_sentence >= sentence_len) {
      words_in_sentence = 0;
      sentence_len = 4 + static_cast<int>(text_rng.next_u64() % 9);
      ++sentences_in_paragraph;
      if (sentences_in_paragraph >= paragraph_len) {
        sentences_in_paragraph = 0;
        paragraph_len = 3 + static_cast<int>(text_rng.next_u64() % 4);
        out += ".\n\n";
        sentence_start = true;
      } else if (text_rng.next_unit() < 0.15) {
        out += ",";  // clause break: the sentence runs on uncapitalized
      } else {
        out += ". ";
        sentence_start = true;
      }
    }
  }
  out.resize(n_bytes);
  return out;
}

}  // namespace dfalab
