#include "fshap/selector.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "fshap/errors.hpp"
#include "fshap/format.hpp"

namespace fshap {

namespace {

std::string strip(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// Every malformed clause surfaces as ParameterError, including non-numeric
// bounds that the shared parser reports as NumericError.
double parse_clause_number(const std::string& text, const std::string& clause) {
  try {
    return parse_double(text);
  } catch (const Error&) {
    throw ParameterError("selector: '" + text + "' is not a number in clause '" +
                         clause + "'");
  }
}

}  // namespace

Selector Selector::parse(const std::string& text) {
  Selector sel;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t amp = text.find('&', pos);
    const std::string clause =
        strip(text.substr(pos, amp == std::string::npos ? std::string::npos
                                                        : amp - pos));
    pos = amp == std::string::npos ? text.size() + 1 : amp + 1;
    if (clause.empty()) {
      if (amp == std::string::npos && pos > text.size()) break;
      throw ParameterError("selector: empty clause in '" + text + "'");
    }
    if (clause.rfind("order", 0) == 0) {
      const std::string rest = strip(clause.substr(5));
      if (rest.rfind("<=", 0) != 0) {
        throw ParameterError("selector: expected order<=D in '" + clause + "'");
      }
      if (sel.max_order) throw ParameterError("selector: duplicate order clause");
      const double d = parse_clause_number(strip(rest.substr(2)), clause);
      if (d < 0 || d != std::floor(d)) {
        throw ParameterError("selector: order bound must be a nonnegative integer");
      }
      sel.max_order = static_cast<int>(d);
    } else if (clause.rfind("abs", 0) == 0) {
      const std::string rest = strip(clause.substr(3));
      if (rest.rfind(">=", 0) != 0) {
        throw ParameterError("selector: expected abs>=T in '" + clause + "'");
      }
      if (sel.min_abs) throw ParameterError("selector: duplicate abs clause");
      const double t = parse_clause_number(strip(rest.substr(2)), clause);
      if (!(t >= 0)) throw ParameterError("selector: abs threshold must be >= 0");
      sel.min_abs = t;
    } else if (clause.rfind("top", 0) == 0) {
      const std::string rest = strip(clause.substr(3));
      if (rest.rfind("=", 0) != 0) {
        throw ParameterError("selector: expected top=N in '" + clause + "'");
      }
      if (sel.top) throw ParameterError("selector: duplicate top clause");
      const double n = parse_clause_number(strip(rest.substr(1)), clause);
      if (n < 0 || n != std::floor(n)) {
        throw ParameterError("selector: top count must be a nonnegative integer");
      }
      sel.top = static_cast<std::size_t>(n);
    } else {
      throw ParameterError("selector: unknown clause '" + clause + "'");
    }
    if (amp == std::string::npos) break;
  }
  if (!sel.max_order && !sel.min_abs && !sel.top) {
    throw ParameterError("selector: no clauses in '" + text + "'");
  }
  return sel;
}

bool Selector::filter_match(const MultiIndex& k, double coef) const {
  if (max_order && k.order() > *max_order) return false;
  if (min_abs && std::abs(coef) < *min_abs) return false;
  return true;
}

std::set<MultiIndex> Selector::select(
    const std::map<MultiIndex, double>& coefficients) const {
  std::vector<std::pair<MultiIndex, double>> kept;
  for (const auto& [k, c] : coefficients) {
    if (filter_match(k, c)) kept.emplace_back(k, c);
  }
  if (top && kept.size() > *top) {
    // Rank by |coefficient| descending, lexicographic index ascending on ties.
    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
      const double aa = std::abs(a.second), bb = std::abs(b.second);
      if (aa != bb) return aa > bb;
      return a.first < b.first;
    });
    kept.resize(*top);
  }
  std::set<MultiIndex> out;
  for (auto& [k, c] : kept) out.insert(std::move(k));
  return out;
}

std::string Selector::canonical() const {
  std::string out;
  const auto add = [&](const std::string& clause) {
    if (!out.empty()) out += "&";
    out += clause;
  };
  if (max_order) add("order<=" + std::to_string(*max_order));
  if (min_abs) add("abs>=" + format_g17(*min_abs));
  if (top) add("top=" + std::to_string(*top));
  return out;
}

}  // namespace fshap
