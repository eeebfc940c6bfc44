#pragma once

// Prefix Diversity Coverage: how many of the distinct early-proof n-grams
// seen across a reference set of attempts are already covered by the first
// s attempts.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace econ::diversity {

using Lexemes = std::vector<std::string>;
using Tokenizer = std::function<Lexemes(const std::string&)>;

// Default lexer: whitespace-delimited.
Lexemes WhitespaceTokenize(const std::string& text);

// Index just past a ":= by" lexeme pair, when present.
std::optional<std::size_t> FindStatementBoundary(std::span<const std::string> stream);

struct Prefix {
  Lexemes lexemes;
  bool degenerate = false;  // nothing left after the boundary
};

// Up to prefix_len lexemes following the boundary. Throws DomainError if the
// boundary lies beyond the stream end.
Prefix ExtractPrefix(std::span<const std::string> stream, std::size_t boundary,
                     std::size_t prefix_len);

// An n-gram is stored as its lexemes joined by U+001F.
using NGram = std::string;
std::vector<NGram> NGramSet(std::span<const std::string> prefix, std::size_t n);

struct PrefixProfile {
  std::string problem_id;
  std::vector<Lexemes> attempts;  // token streams in draw order
  std::size_t prefix_len = 20;
  std::size_t ngram = 3;
  std::size_t reference_size = 512;
  // Used when a stream has no ":= by" marker.
  std::size_t fallback_boundary = 0;

  void Validate() const;
  // Attempts forming the reference set: the first min(reference_size, |attempts|).
  std::size_t ReferenceCount() const;
};

struct CoverageCurve {
  std::vector<std::size_t> sample_sizes;
  std::vector<double> coverage;

  double At(std::size_t sample_size) const;
};

// Incremental union over the first s attempts divided by the reference union.
// Throws DomainError("degenerate corpus") when the reference union is empty.
CoverageCurve PdcCurve(const PrefixProfile& profile, std::span<const std::size_t> sample_sizes);

// Mean coverage at s over problems. Profiles must share parameters.
double MeanPdc(std::span<const PrefixProfile> profiles, std::size_t s);

// problem_id,sample_size,coverage
void WriteCoverageCsv(std::ostream& out, std::span<const std::string> problem_ids,
                      std::span<const CoverageCurve> curves);

}  // namespace econ::diversity
