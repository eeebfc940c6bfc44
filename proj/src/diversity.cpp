#include "econ/diversity.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "econ/errors.hpp"

namespace econ::diversity {

Lexemes WhitespaceTokenize(const std::string& text) {
  Lexemes out;
  std::istringstream in(text);
  std::string lex;
  while (in >> lex) out.push_back(std::move(lex));
  return out;
}

std::optional<std::size_t> FindStatementBoundary(std::span<const std::string> stream) {
  for (std::size_t i = 0; i + 1 < stream.size(); ++i) {
    if (stream[i] == ":=" && stream[i + 1] == "by") return i + 2;
  }
  return std::nullopt;
}

Prefix ExtractPrefix(std::span<const std::string> stream, std::size_t boundary,
                     std::size_t prefix_len) {
  if (boundary > stream.size()) {
    throw DomainError("statement boundary " + std::to_string(boundary) +
                      " lies beyond the stream end (" + std::to_string(stream.size()) + ")");
  }
  const std::size_t take = std::min(prefix_len, stream.size() - boundary);
  Prefix p;
  p.lexemes.assign(stream.begin() + static_cast<std::ptrdiff_t>(boundary),
                   stream.begin() + static_cast<std::ptrdiff_t>(boundary + take));
  p.degenerate = take == 0;
  return p;
}

std::vector<NGram> NGramSet(std::span<const std::string> prefix, std::size_t n) {
  std::vector<NGram> grams;
  if (n == 0 || prefix.size() < n) return grams;
  std::unordered_set<NGram> seen;
  for (std::size_t i = 0; i + n <= prefix.size(); ++i) {
    NGram g = prefix[i];
    for (std::size_t j = 1; j < n; ++j) {
      g += '\x1f';
      g += prefix[i + j];
    }
    if (seen.insert(g).second) grams.push_back(std::move(g));
  }
  return grams;
}

void PrefixProfile::Validate() const {
  if (attempts.empty()) throw DomainError("prefix profile '" + problem_id + "' has no attempts");
  if (ngram == 0) throw DomainError("n-gram size must be positive");
  if (prefix_len < ngram) throw DomainError("prefix_len must be >= ngram");
  if (reference_size == 0) throw DomainError("reference_size must be positive");
}

std::size_t PrefixProfile::ReferenceCount() const {
  return std::min(reference_size, attempts.size());
}

double CoverageCurve::At(std::size_t sample_size) const {
  auto it = std::find(sample_sizes.begin(), sample_sizes.end(), sample_size);
  if (it == sample_sizes.end()) {
    throw DomainError("sample size " + std::to_string(sample_size) + " not on the curve");
  }
  return coverage[static_cast<std::size_t>(it - sample_sizes.begin())];
}

namespace {

std::vector<NGram> AttemptGrams(const PrefixProfile& profile, const Lexemes& stream) {
  const std::size_t boundary =
      FindStatementBoundary(stream).value_or(std::min(profile.fallback_boundary, stream.size()));
  const Prefix prefix = ExtractPrefix(stream, boundary, profile.prefix_len);
  return NGramSet(prefix.lexemes, profile.ngram);
}

}  // namespace

CoverageCurve PdcCurve(const PrefixProfile& profile, std::span<const std::size_t> sample_sizes) {
  profile.Validate();
  const std::size_t reference = profile.ReferenceCount();
  for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
    if (sample_sizes[i] > reference) {
      throw DomainError("sample size " + std::to_string(sample_sizes[i]) +
                        " exceeds the reference set (" + std::to_string(reference) + ")");
    }
    if (i > 0 && sample_sizes[i] <= sample_sizes[i - 1]) {
      throw DomainError("sample sizes must be strictly ascending");
    }
  }

  std::vector<std::vector<NGram>> grams(reference);
  std::unordered_set<std::string_view> universe;
  for (std::size_t a = 0; a < reference; ++a) {
    grams[a] = AttemptGrams(profile, profile.attempts[a]);
    for (const NGram& g : grams[a]) universe.insert(g);
  }
  if (universe.empty()) throw DomainError("degenerate corpus: no n-grams in '" + profile.problem_id + "'");

  CoverageCurve curve;
  curve.sample_sizes.assign(sample_sizes.begin(), sample_sizes.end());
  curve.coverage.reserve(sample_sizes.size());
  std::unordered_set<std::string_view> covered;
  std::size_t next = 0;
  const double total = static_cast<double>(universe.size());
  for (std::size_t s : sample_sizes) {
    for (; next < s; ++next) {
      for (const NGram& g : grams[next]) covered.insert(g);
    }
    curve.coverage.push_back(covered.size() == universe.size()
                                 ? 1.0
                                 : static_cast<double>(covered.size()) / total);
  }
  return curve;
}

double MeanPdc(std::span<const PrefixProfile> profiles, std::size_t s) {
  if (profiles.empty()) throw DomainError("mean PDC over an empty corpus");
  const PrefixProfile& first = profiles.front();
  double sum = 0.0;
  const std::size_t sizes[] = {s};
  for (const PrefixProfile& p : profiles) {
    if (p.prefix_len != first.prefix_len || p.ngram != first.ngram ||
        p.reference_size != first.reference_size) {
      throw DomainError("prefix profiles must share prefix_len, ngram and reference_size");
    }
    sum += PdcCurve(p, sizes).coverage.front();
  }
  return sum / static_cast<double>(profiles.size());
}

void WriteCoverageCsv(std::ostream& out, std::span<const std::string> problem_ids,
                      std::span<const CoverageCurve> curves) {
  if (problem_ids.size() != curves.size()) throw DomainError("one curve per problem id");
  out << "problem_id,sample_size,coverage\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    for (std::size_t j = 0; j < curves[i].sample_sizes.size(); ++j) {
      out << fmt::format("{},{},{:.6f}\n", problem_ids[i], curves[i].sample_sizes[j],
                         curves[i].coverage[j]);
    }
  }
}

}  // namespace econ::diversity
