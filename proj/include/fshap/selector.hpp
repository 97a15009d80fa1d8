#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "fshap/multi_index.hpp"

namespace fshap {

// Truncation-set selector mini-language: clauses joined with '&', each one of
//   order<=D   keep indices with interaction order <= D
//   abs>=T     keep indices whose |coefficient| >= T
//   top=N      after the filters, keep the N largest by |coefficient|
//              (ties: lexicographically smaller index wins)
// Whitespace around clauses and operators is ignored. Repeated or malformed
// clauses raise ParameterError.
struct Selector {
  std::optional<int> max_order;
  std::optional<double> min_abs;
  std::optional<std::size_t> top;

  static Selector parse(const std::string& text);

  // Filter part only (order / abs); usable without a coefficient map when
  // min_abs is unset (coef then defaults to 0).
  bool filter_match(const MultiIndex& k, double coef) const;

  // Applies filters then top-N to a coefficient map (model entries or a
  // kernel spectrum) and returns the kept index set.
  std::set<MultiIndex> select(const std::map<MultiIndex, double>& coefficients) const;

  // Canonical text form (clauses in fixed order); feeds config hashing.
  std::string canonical() const;
};

}  // namespace fshap
