#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ssg3d/common.hpp"

namespace ssg3d {

struct MetricReport {
  std::string name;
  double value = 0.0;
  int samples = 0;
};

/// Lowercased whitespace tokenization with ASCII punctuation detached as
/// single-character tokens.
inline std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&]() {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (char raw : text) {
    const unsigned char c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      tokens.emplace_back(1, raw);
    } else {
      current += static_cast<char>(std::tolower(c));
    }
  }
  flush();
  return tokens;
}

namespace detail {

using NgramCounts = std::map<std::vector<std::string>, int>;

inline NgramCounts ngram_counts(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                      tokens.begin() + static_cast<long>(i) + n)];
  return counts;
}

}  // namespace detail

/// Sentence BLEU with modified 1..4-gram precisions, geometric mean, and
/// brevity penalty. A zero match count takes the add-one ratio
/// (m+1)/(c+1); that rule only ever fires at n=1 when candidate and
/// references share no token at all.
inline double bleu4(const std::string& candidate,
                    const std::vector<std::string>& references) {
  const std::vector<std::string> cand = tokenize(candidate);
  if (cand.empty()) throw ValidationError("candidate must be non-empty");
  if (references.empty()) throw ValidationError("need at least one reference");

  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const std::string& r : references) refs.push_back(tokenize(r));

  double log_sum = 0.0;
  for (int n = 1; n <= 4; ++n) {
    const detail::NgramCounts cand_counts = detail::ngram_counts(cand, n);
    detail::NgramCounts max_ref;
    for (const auto& ref : refs)
      for (const auto& [gram, count] : detail::ngram_counts(ref, n))
        max_ref[gram] = std::max(max_ref[gram], count);
    long matched = 0, total = 0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) matched += std::min(count, it->second);
    }
    const double precision =
        matched > 0 ? static_cast<double>(matched) / static_cast<double>(total)
                    : (static_cast<double>(matched) + 1.0) /
                          (static_cast<double>(total) + 1.0);
    log_sum += 0.25 * std::log(precision);
  }

  // effective reference length: closest to the candidate, shorter on ties
  const long c = static_cast<long>(cand.size());
  long r = static_cast<long>(refs[0].size());
  for (const auto& ref : refs) {
    const long len = static_cast<long>(ref.size());
    const long best = std::abs(r - c), cur = std::abs(len - c);
    if (cur < best || (cur == best && len < r)) r = len;
  }
  const double bp =
      c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_sum);
}

/// Highest BLEU-4 among the candidates against shared references.
inline double bleu4_at_k(const std::vector<std::string>& candidates,
                         const std::vector<std::string>& references) {
  if (candidates.empty()) throw ValidationError("need at least one candidate");
  double best = 0.0;
  for (const std::string& c : candidates)
    best = std::max(best, bleu4(c, references));
  return best;
}

/// Mutual BLEU-4: mean leave-one-out BLEU among the candidates. Lower means
/// the set is more diverse; identical sentences give exactly 1.
inline double mbleu4(const std::vector<std::string>& candidates) {
  if (candidates.size() < 2)
    throw ValidationError("mbleu4 needs at least 2 candidates");
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::vector<std::string> rest;
    rest.reserve(candidates.size() - 1);
    for (std::size_t j = 0; j < candidates.size(); ++j)
      if (j != i) rest.push_back(candidates[j]);
    sum += bleu4(candidates[i], rest);
  }
  return sum / static_cast<double>(candidates.size());
}

}  // namespace ssg3d
