#include "pipemdp/hazard.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pipemdp/errors.hpp"

namespace pipemdp {

namespace {

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw DomainError(std::string("hazard parameter ") + what + " must be finite and > 0");
  }
}

constexpr std::array<std::string_view, kEdgeCount> kEdgeLabels = {
    "1->2", "2->3", "3->4", "4->5", "1->F", "2->F", "3->F", "4->F", "5->F"};

}  // namespace

std::string_view to_string(HazardFamily family) {
  switch (family) {
    case HazardFamily::Exponential: return "exponential";
    case HazardFamily::Gompertz: return "gompertz";
    case HazardFamily::Weibull: return "weibull";
  }
  return "?";
}

std::optional<HazardFamily> parse_family(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "exponential") return HazardFamily::Exponential;
  if (lower == "gompertz") return HazardFamily::Gompertz;
  if (lower == "weibull") return HazardFamily::Weibull;
  return std::nullopt;
}

HazardSpec::HazardSpec(HazardFamily family, double p0, double p1)
    : family_(family), p0_(p0), p1_(p1) {}

HazardSpec HazardSpec::exponential(double epsilon) {
  require_positive(epsilon, "epsilon");
  return {HazardFamily::Exponential, epsilon, 0.0};
}

HazardSpec HazardSpec::gompertz(double alpha, double beta) {
  require_positive(alpha, "alpha");
  require_positive(beta, "beta");
  return {HazardFamily::Gompertz, alpha, beta};
}

HazardSpec HazardSpec::weibull(double scale_eta, double shape_rho) {
  require_positive(scale_eta, "eta");
  require_positive(shape_rho, "rho");
  return {HazardFamily::Weibull, scale_eta, shape_rho};
}

double HazardSpec::rate(double t) const {
  if (!(t >= 0.0)) throw DomainError("hazard evaluated at negative time");
  switch (family_) {
    case HazardFamily::Exponential:
      return p0_;
    case HazardFamily::Gompertz:
      return p0_ * p1_ * std::exp(p1_ * t);
    case HazardFamily::Weibull: {
      const double eta = p0_;
      const double rho = p1_;
      if (t == 0.0) {
        if (rho < 1.0) throw SingularityError("Weibull hazard with shape < 1 is singular at t = 0");
        return rho == 1.0 ? 1.0 / eta : 0.0;
      }
      return rho / eta * std::pow(t / eta, rho - 1.0);
    }
  }
  return 0.0;
}

Severity edge_from(Edge e) {
  const int i = static_cast<int>(e);
  return static_cast<Severity>(i < 4 ? i : i - 4);
}

Severity edge_to(Edge e) {
  const int i = static_cast<int>(e);
  return i < 4 ? static_cast<Severity>(i + 1) : Severity::F;
}

std::string_view edge_label(Edge e) { return kEdgeLabels[static_cast<int>(e)]; }

std::optional<Edge> parse_edge(std::string_view label) {
  std::string norm;
  for (char c : label) {
    if (c == ' ') continue;
    norm.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  // accept "1->2", "1-2", "12", "1F"
  std::string compact;
  for (char c : norm) {
    if (c != '-' && c != '>') compact.push_back(c);
  }
  for (int i = 0; i < kEdgeCount; ++i) {
    std::string ref;
    for (char c : kEdgeLabels[i]) {
      if (c != '-' && c != '>') ref.push_back(c);
    }
    if (compact == ref) return static_cast<Edge>(i);
  }
  return std::nullopt;
}

bool HazardTable::complete() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.has_value(); });
}

bool HazardTable::empty() const {
  return std::none_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.has_value(); });
}

double HazardTable::rate(Edge e, double t) const {
  const auto& spec = entries_[static_cast<int>(e)];
  return spec ? spec->rate(t) : 0.0;
}

SeverityVector renormalize(const SeverityVector& v) {
  double total = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("probability vector has a negative or non-finite entry");
    total += x;
  }
  if (total <= 0.0) throw DomainError("probability vector sums to zero");
  SeverityVector out{};
  for (int k = 0; k < kStates; ++k) out[k] = v[k] / total;
  return out;
}

// Table values for cohort CMW, in edge order 1->2, 2->3, 3->4, 4->5, 1->F .. 5->F.
namespace {

constexpr std::array<double, kEdgeCount> kCmwEpsilon = {
    2.4E-02, 9.4E-03, 5.7E-03, 1.8E-02, 3.0E-18, 6.0E-04, 1.0E-18, 1.0E-18, 1.0E-18};

constexpr std::array<std::array<double, 2>, kEdgeCount> kCmwGompertz = {{
    {2.3E+00, 8.4E-03},
    {2.1E-02, 5.5E-02},
    {3.3E+00, 2.8E-03},
    {2.4E+00, 8.7E-03},
    {1.4E-01, 3.1E-04},
    {8.8E-01, 7.0E-19},
    {2.2E-03, 4.5E-02},
    {9.8E-05, 8.6E-03},
    {7.0E-19, 3.8E-01},
}};

// Columns as printed. The first column holds the shape and the second the
// scale in years; read the other way round every rate overflows within a
// few years of age.
constexpr std::array<std::array<double, 2>, kEdgeCount> kCmwWeibullPrinted = {{
    {1.3E+00, 4.4E+01},
    {2.9E+00, 7.7E+01},
    {3.5E+00, 8.1E+01},
    {7.0E+00, 5.5E+01},
    {4.1E-06, 4.6E+01},
    {2.7E-04, 4.6E+01},
    {3.0E-05, 4.7E+01},
    {1.1E-03, 4.5E+01},
    {1.7E+00, 5.9E+01},
}};

constexpr SeverityVector kS0Exponential = {9.89E-01, 1.26E-17, 3.70E-23, 1.11E-02, 2.11E-22, 3.87E-22};
constexpr SeverityVector kS0Gompertz = {9.58E-01, 0.00E+00, 4.00E-02, 1.61E-03, 2.00E-15, 1.56E-04};
constexpr SeverityVector kS0Weibull = {9.23E-01, 2.59E-02, 3.10E-02, 1.13E-02, 2.07E-03, 6.40E-03};

}  // namespace

SeverityVector builtin_cmw_initial_printed(HazardFamily family) {
  switch (family) {
    case HazardFamily::Exponential: return kS0Exponential;
    case HazardFamily::Gompertz: return kS0Gompertz;
    case HazardFamily::Weibull: return kS0Weibull;
  }
  return {};
}

CohortParameters builtin_cmw(HazardFamily family) {
  HazardTable table;
  for (int i = 0; i < kEdgeCount; ++i) {
    const auto e = static_cast<Edge>(i);
    switch (family) {
      case HazardFamily::Exponential:
        table.set(e, HazardSpec::exponential(kCmwEpsilon[i]));
        break;
      case HazardFamily::Gompertz:
        table.set(e, HazardSpec::gompertz(kCmwGompertz[i][0], kCmwGompertz[i][1]));
        break;
      case HazardFamily::Weibull:
        table.set(e, HazardSpec::weibull(kCmwWeibullPrinted[i][1], kCmwWeibullPrinted[i][0]));
        break;
    }
  }
  return {family, table, renormalize(builtin_cmw_initial_printed(family))};
}

CohortParameters parse_cohort_json(std::string_view text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("cohort file is not valid JSON: ") + e.what());
  }
  try {
    const auto family = parse_family(doc.at("family").get<std::string>());
    if (!family) throw FormatError("unknown hazard family '" + doc.at("family").get<std::string>() + "'");

    CohortParameters out{*family, {}, {}};
    for (const auto& [label, params] : doc.at("transitions").items()) {
      const auto edge = parse_edge(label);
      if (!edge) throw FormatError("unknown transition '" + label + "'");
      if (out.hazards.get(*edge)) throw FormatError("duplicate transition '" + label + "'");
      switch (*family) {
        case HazardFamily::Exponential:
          out.hazards.set(*edge, HazardSpec::exponential(params.at("epsilon").get<double>()));
          break;
        case HazardFamily::Gompertz:
          out.hazards.set(*edge, HazardSpec::gompertz(params.at("alpha").get<double>(),
                                                      params.at("beta").get<double>()));
          break;
        case HazardFamily::Weibull:
          out.hazards.set(*edge, HazardSpec::weibull(params.at("eta").get<double>(),
                                                     params.at("rho").get<double>()));
          break;
      }
    }
    if (!out.hazards.complete()) throw FormatError("cohort file must define all nine transitions");

    const auto& s0 = doc.at("S0");
    if (!s0.is_array() || s0.size() != kStates) throw FormatError("S0 must be an array of 6 probabilities");
    SeverityVector v{};
    for (int k = 0; k < kStates; ++k) v[k] = s0.at(k).get<double>();
    out.initial = renormalize(v);
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed cohort file: ") + e.what());
  } catch (const DomainError& e) {
    throw FormatError(std::string("invalid cohort parameters: ") + e.what());
  }
}

CohortParameters load_cohort_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open cohort file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cohort_json(ss.str());
}

}  // namespace pipemdp
