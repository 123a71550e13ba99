#include "genspec/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "genspec/errors.hpp"

namespace genspec {
namespace {

constexpr double kRatioEps = 1e-9;

std::string format_ratio(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

std::string list_ratios(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_ratio(v[i]);
  }
  return out + "]";
}

double parse_ratio(const std::string& text, const std::string& whole) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw DomainError("objective '" + whole + "': cannot parse ratio '" + text + "'");
  }
  return v;
}

TrainingPair masked_pair(int u, const LabeledSequence& x, Rng& rng) {
  const int s = static_cast<int>(x.tokens.size());
  std::vector<int> positions(static_cast<std::size_t>(s));
  std::iota(positions.begin(), positions.end(), 1);
  // partial Fisher-Yates: first u entries are a uniform u-subset
  for (int i = 0; i < u; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   uniform_index(rng, static_cast<std::uint64_t>(s - i));
    std::swap(positions[static_cast<std::size_t>(i)], positions[j]);
  }
  std::vector<std::pair<int, TokenId>> items;
  items.reserve(static_cast<std::size_t>(u));
  for (int i = 0; i < u; ++i) {
    const int p = positions[static_cast<std::size_t>(i)];
    items.emplace_back(p, x.tokens[static_cast<std::size_t>(p - 1)]);
  }
  const int masked = s - u;
  const int pick = u + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(masked)));
  TrainingPair out;
  out.target_position = positions[static_cast<std::size_t>(pick)];
  out.target = x.tokens[static_cast<std::size_t>(out.target_position - 1)];
  out.conditional = ConditionalText::unmasked(std::move(items));
  out.rho = static_cast<double>(masked) / s;
  return out;
}

}  // namespace

ObjectiveSpec ObjectiveSpec::masked(double rho) {
  ObjectiveSpec o;
  o.kind = Kind::masked;
  o.rho = rho;
  return o;
}

ObjectiveSpec ObjectiveSpec::dar(int window) {
  ObjectiveSpec o;
  o.kind = Kind::dar;
  o.window = window;
  return o;
}

ObjectiveSpec ObjectiveSpec::vlm(double lo, double hi) {
  ObjectiveSpec o;
  o.kind = Kind::vlm;
  o.lo = lo;
  o.hi = hi;
  return o;
}

ObjectiveSpec ObjectiveSpec::parse(const std::string& text) {
  if (text == "ar") return ar();
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw DomainError("objective '" + text + "': unknown kind");
  const std::string head = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  if (head == "masked") {
    const double rho = parse_ratio(arg, text);
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("objective '" + text + "': rho_m not in (0,1)");
    return masked(rho);
  }
  if (head == "dar") {
    std::size_t used = 0;
    int t = 0;
    try {
      t = std::stoi(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != arg.size() || arg.empty()) {
      throw DomainError("objective '" + text + "': cannot parse window '" + arg + "'");
    }
    if (t < 1) throw DomainError("objective '" + text + "': window t must be >= 1");
    return dar(t);
  }
  if (head == "vlm") {
    const auto dash = arg.find('-');
    if (dash == std::string::npos) {
      throw DomainError("objective '" + text + "': expected vlm:<lo>-<hi>");
    }
    const double lo = parse_ratio(arg.substr(0, dash), text);
    const double hi = parse_ratio(arg.substr(dash + 1), text);
    if (!(lo > 0.0 && lo <= hi && hi < 1.0)) {
      throw DomainError("objective '" + text + "': need 0 < lo <= hi < 1");
    }
    return vlm(lo, hi);
  }
  throw DomainError("objective '" + text + "': unknown kind '" + head + "'");
}

std::string ObjectiveSpec::to_string() const {
  switch (kind) {
    case Kind::ar:
      return "ar";
    case Kind::masked:
      return "masked:" + format_ratio(rho);
    case Kind::dar:
      return "dar:" + std::to_string(window);
    case Kind::vlm:
      return "vlm:" + format_ratio(lo) + "-" + format_ratio(hi);
  }
  return "?";
}

void ObjectiveSpec::validate(int s) const {
  switch (kind) {
    case Kind::ar:
      return;
    case Kind::masked:
      unmasked_count(s, rho);
      return;
    case Kind::dar:
      if (window < 1) throw DomainError("dar: window t must be >= 1");
      return;
    case Kind::vlm:
      if (admissible_ratios(s, lo, hi).empty()) {
        throw DomainError("vlm: no admissible ratio m/" + std::to_string(s) + " in [" +
                          format_ratio(lo) + ", " + format_ratio(hi) + "]; admissible values are " +
                          list_ratios(admissible_ratios(s, 0.0, 1.0)));
      }
      return;
  }
}

std::vector<double> admissible_ratios(int s, double lo, double hi) {
  std::vector<double> out;
  for (int m = 1; m <= s - 1; ++m) {
    const double rho = static_cast<double>(m) / s;
    if (rho >= lo - kRatioEps && rho <= hi + kRatioEps) out.push_back(rho);
  }
  return out;
}

int unmasked_count(int s, double rho) {
  const double masked = rho * s;
  const double rounded = std::round(masked);
  const int u = s - static_cast<int>(rounded);
  if (std::abs(masked - rounded) > kRatioEps || u < 1 || u > s - 1) {
    throw DomainError("rho_m = " + format_ratio(rho) + " gives non-integer or out-of-range u = s(1-rho_m) for s = " +
                      std::to_string(s) + "; admissible ratios are " +
                      list_ratios(admissible_ratios(s, 0.0, 1.0)));
  }
  return u;
}

TrainingPair sample_pair(const ObjectiveSpec& spec, const LabeledSequence& x, Rng& rng) {
  const int s = static_cast<int>(x.tokens.size());
  if (s < 2) throw DomainError("sample_pair: sequence length must be >= 2");
  switch (spec.kind) {
    case ObjectiveSpec::Kind::ar:
    case ObjectiveSpec::Kind::dar: {
      const int window = spec.kind == ObjectiveSpec::Kind::ar ? 1 : spec.window;
      if (window < 1) throw DomainError("dar: window t must be >= 1");
      const int k = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(s - 1)));
      const int last = std::min(k + window, s);
      const int p =
          k + 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(last - k)));
      TrainingPair out;
      out.conditional = ConditionalText::prefix(x.tokens, k);
      out.target_position = p;
      out.target = x.tokens[static_cast<std::size_t>(p - 1)];
      return out;
    }
    case ObjectiveSpec::Kind::masked:
      return masked_pair(unmasked_count(s, spec.rho), x, rng);
    case ObjectiveSpec::Kind::vlm: {
      spec.validate(s);
      const auto ratios = admissible_ratios(s, spec.lo, spec.hi);
      const double rho = ratios[uniform_index(rng, ratios.size())];
      return masked_pair(unmasked_count(s, rho), x, rng);
    }
  }
  throw DomainError("sample_pair: unknown objective");
}

}  // namespace genspec
