#include "effham/io.hpp"

#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "effham/error.hpp"

namespace effham {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* what) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + what);
  }
}

template <typename T>
T get(const json& j, const char* key, const char* what) {
  if (!j.contains(key)) throw ConfigError(std::string(what) + " is missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(what) + ": bad value for '" + key + "': " + e.what());
  }
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  return j.get<double>();
}

PeriodicScalarField field_from_json(const json& j, int dim, double period, bool allow_exp,
                                    const char* what) {
  reject_unknown(j, {"coeffs", "slope", "exp"}, what);
  std::vector<FourierTerm> terms;
  if (j.contains("coeffs")) {
    if (!j["coeffs"].is_array()) throw ConfigError(std::string(what) + ": coeffs must be a list");
    for (const auto& c : j["coeffs"]) {
      if (!c.is_array() || static_cast<int>(c.size()) != dim + 2) {
        throw ConfigError(std::string(what) + ": each coefficient is [k_1..k_d, a, b]");
      }
      FourierTerm t;
      for (int a = 0; a < dim; ++a) {
        if (!c[a].is_number_integer()) throw ConfigError("wave-vector entries must be integers");
        t.wave.push_back(c[a].get<int>());
      }
      t.cos_coeff = number(c[dim], what);
      t.sin_coeff = number(c[dim + 1], what);
      terms.push_back(std::move(t));
    }
  }
  std::vector<double> slope;
  if (j.contains("slope")) {
    slope = j["slope"].is_number() ? std::vector<double>{j["slope"].get<double>()}
                                   : get<std::vector<double>>(j, "slope", what);
    if (static_cast<int>(slope.size()) != dim) {
      throw ConfigError(std::string(what) + ": slope must have dim entries");
    }
  }
  const bool exp_form = j.value("exp", false);
  if (exp_form && !allow_exp) throw ConfigError(std::string(what) + ": exp form not allowed here");
  try {
    return PeriodicScalarField(dim, std::move(terms), std::move(slope), period,
                               exp_form ? FieldForm::kExponential : FieldForm::kSeries);
  } catch (const ModelError& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

json field_to_json(const PeriodicScalarField& f) {
  json coeffs = json::array();
  for (const auto& t : f.terms()) {
    json c = json::array();
    for (int k : t.wave) c.push_back(k);
    c.push_back(t.cos_coeff);
    c.push_back(t.sin_coeff);
    coeffs.push_back(std::move(c));
  }
  json out = {{"coeffs", coeffs}, {"slope", f.slope()}};
  if (f.form() == FieldForm::kExponential) out["exp"] = true;
  return out;
}

// A per-state (or per-pair) rate: scalar or one value per site.
std::vector<double> site_values(const json& j, int length, const std::string& what) {
  if (j.is_number()) return std::vector<double>(length, j.get<double>());
  if (j.is_array() && static_cast<int>(j.size()) == length) {
    std::vector<double> out;
    for (const auto& x : j) out.push_back(number(x, what));
    return out;
  }
  throw ConfigError(what + " must be a number or a list of " + std::to_string(length) + " numbers");
}

json site_values_to_json(const std::vector<double>& v) {
  for (double x : v) {
    if (x != v.front()) return v;
  }
  return v.front();
}

ContinuousModel continuous_from_json(const json& j) {
  reject_unknown(j, {"kind", "dim", "J", "regime", "period", "name", "potentials", "rates"},
                 "continuous model");
  const int dim = j.value("dim", 1);
  if (dim < 1) throw ConfigError("dim must be >= 1");
  const double period = j.value("period", 1.0);
  const auto& pots = j.at("potentials");
  if (!pots.is_array() || pots.empty()) throw ConfigError("potentials must be a non-empty list");
  const int states = j.value("J", static_cast<int>(pots.size()));
  if (static_cast<int>(pots.size()) != states) {
    throw ConfigError("J = " + std::to_string(states) + " but " + std::to_string(pots.size()) +
                      " potentials given");
  }
  std::vector<PeriodicScalarField> potentials;
  for (const auto& p : pots) potentials.push_back(field_from_json(p, dim, period, false, "potential"));

  std::vector<std::vector<PeriodicScalarField>> entries(
      states, std::vector<PeriodicScalarField>(states, PeriodicScalarField::zero(dim, period)));
  if (j.contains("rates") && !j["rates"].is_null()) {
    const auto& r = j["rates"];
    if (!r.is_array() || static_cast<int>(r.size()) != states) {
      throw ConfigError("rates must be a J x J list");
    }
    for (int a = 0; a < states; ++a) {
      if (!r[a].is_array() || static_cast<int>(r[a].size()) != states) {
        throw ConfigError("rates must be a J x J list");
      }
      for (int b = 0; b < states; ++b) {
        const auto& e = r[a][b];
        if (a == b || e.is_null()) continue;
        entries[a][b] = e.is_number()
                            ? PeriodicScalarField::constant(dim, e.get<double>(), period)
                            : field_from_json(e, dim, period, true, "rate");
      }
    }
  } else if (states > 1) {
    throw ConfigError("a model with J >= 2 needs 'rates'");
  }
  try {
    return ContinuousModel(std::move(potentials), SwitchingRateMatrix(std::move(entries)),
                           parse_regime(j.value("regime", "I")), j.value("name", ""));
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

DiscreteModel discrete_from_json(const json& j) {
  reject_unknown(j, {"kind", "J", "length", "regime", "name", "hop_plus", "hop_minus",
                     "switching", "dim"},
                 "discrete model");
  if (j.contains("dim") && j["dim"] != 1) throw ConfigError("discrete models are one-dimensional");
  const int length = get<int>(j, "length", "discrete model");
  if (length < 2) throw ConfigError("length must be >= 2");
  const auto& plus = j.at("hop_plus");
  const auto& minus = j.at("hop_minus");
  if (!plus.is_array() || !minus.is_array() || plus.size() != minus.size() || plus.empty()) {
    throw ConfigError("hop_plus and hop_minus must be lists with one entry per state");
  }
  const int states = j.value("J", static_cast<int>(plus.size()));
  if (static_cast<int>(plus.size()) != states) throw ConfigError("hop rate lists must have J entries");
  DiscreteModel::SiteRates hp, hm;
  for (int i = 0; i < states; ++i) {
    hp.push_back(site_values(plus[i], length, "hop_plus entry"));
    hm.push_back(site_values(minus[i], length, "hop_minus entry"));
  }
  DiscreteModel::Switching sw(states, std::vector<std::vector<double>>(
                                          states, std::vector<double>(length, 0.0)));
  if (j.contains("switching") && !j["switching"].is_null()) {
    const auto& s = j["switching"];
    if (!s.is_array() || static_cast<int>(s.size()) != states) {
      throw ConfigError("switching must be a J x J list");
    }
    for (int a = 0; a < states; ++a) {
      if (!s[a].is_array() || static_cast<int>(s[a].size()) != states) {
        throw ConfigError("switching must be a J x J list");
      }
      for (int b = 0; b < states; ++b) {
        if (a == b || s[a][b].is_null()) continue;
        sw[a][b] = site_values(s[a][b], length, "switching entry");
      }
    }
  }
  try {
    return DiscreteModel(length, std::move(hp), std::move(hm), std::move(sw),
                         parse_regime(j.value("regime", "I")), j.value("name", ""));
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

Regime parse_regime(const std::string& text) {
  if (text == "I" || text == "1") return Regime::kI;
  if (text == "II" || text == "2") return Regime::kII;
  throw ConfigError("regime must be \"I\" or \"II\", got \"" + text + "\"");
}

Model model_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("model must be a JSON object");
  const std::string kind = j.value("kind", "");
  try {
    if (kind == "continuous") return continuous_from_json(j);
    if (kind == "discrete") return discrete_from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model: ") + e.what());
  }
  throw ConfigError("model kind must be \"continuous\" or \"discrete\"");
}

json model_to_json(const Model& model) {
  if (const auto* cm = std::get_if<ContinuousModel>(&model)) {
    json pots = json::array();
    for (const auto& p : cm->potentials()) {
      json f = field_to_json(p);
      f.erase("exp");
      pots.push_back(std::move(f));
    }
    json rates = json::array();
    for (int a = 0; a < cm->states(); ++a) {
      json row = json::array();
      for (int b = 0; b < cm->states(); ++b) {
        row.push_back(a == b ? json(nullptr) : field_to_json(cm->rates().entry(a, b)));
      }
      rates.push_back(std::move(row));
    }
    return {{"kind", "continuous"}, {"dim", cm->dim()},          {"J", cm->states()},
            {"regime", to_string(cm->regime())}, {"period", cm->period()}, {"name", cm->name()},
            {"potentials", pots},              {"rates", rates}};
  }
  const auto& dm = std::get<DiscreteModel>(model);
  json plus = json::array(), minus = json::array(), sw = json::array();
  for (int i = 0; i < dm.states(); ++i) {
    std::vector<double> p, m;
    for (int k = 0; k < dm.length(); ++k) {
      p.push_back(dm.hop_plus(i, k));
      m.push_back(dm.hop_minus(i, k));
    }
    plus.push_back(site_values_to_json(p));
    minus.push_back(site_values_to_json(m));
    json row = json::array();
    for (int b = 0; b < dm.states(); ++b) {
      if (b == i) {
        row.push_back(nullptr);
        continue;
      }
      std::vector<double> s;
      for (int k = 0; k < dm.length(); ++k) s.push_back(dm.switching(i, b, k));
      row.push_back(site_values_to_json(s));
    }
    sw.push_back(std::move(row));
  }
  return {{"kind", "discrete"},  {"J", dm.states()},         {"length", dm.length()},
          {"regime", to_string(dm.regime())}, {"name", dm.name()}, {"hop_plus", plus},
          {"hop_minus", minus}, {"switching", sw}};
}

Model load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file " + path.string());
  try {
    return model_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("model file " + path.string() + " is not valid JSON: " + e.what());
  }
}

ContinuousModel detailed_balance_model(std::vector<PeriodicScalarField> potentials,
                                       const Eigen::MatrixXd& sigma, Regime regime,
                                       std::string name) {
  const int states = static_cast<int>(potentials.size());
  if (sigma.rows() != states || sigma.cols() != states) {
    throw ModelError("sigma must be J x J");
  }
  const int dim = potentials.front().dim();
  const double period = potentials.front().period();
  std::vector<std::vector<PeriodicScalarField>> entries(
      states, std::vector<PeriodicScalarField>(states, PeriodicScalarField::zero(dim, period)));
  for (int i = 0; i < states; ++i) {
    for (int j = 0; j < states; ++j) {
      if (i == j) continue;
      if (sigma(i, j) != sigma(j, i)) throw ModelError("sigma must be symmetric");
      if (sigma(i, j) < 0.0) throw ModelError("sigma must be nonnegative");
      entries[i][j] = PeriodicScalarField::exp_of(potentials[i].scaled(2.0)).scaled(sigma(i, j));
    }
  }
  return ContinuousModel(std::move(potentials), SwitchingRateMatrix(std::move(entries)), regime,
                         std::move(name));
}

// ---------------------------------------------------------------- presets

namespace {

PeriodicScalarField cosine(double amplitude, int k = 1) {
  return PeriodicScalarField(1, {{{k}, amplitude, 0.0}});
}

Model constant_drift(double force, std::string name) {
  // psi = -F y, so the drift -psi' is +F.
  return ContinuousModel({PeriodicScalarField::affine({-force})}, SwitchingRateMatrix::none(1),
                         Regime::kI, std::move(name));
}

Model tilted_cosine(double force, std::string name) {
  PeriodicScalarField psi(1, {{{1}, 0.25, 0.0}}, {-force});
  return ContinuousModel({psi}, SwitchingRateMatrix::none(1), Regime::kI, std::move(name));
}

Model two_state_flashing() {
  // psi^2 = sin 2 pi y = cos(2 pi (y - 1/4)). Leaving state 1 is fastest at
  // the top of psi^1 (y = 0) and impossible at its bottom (y = 1/2); this
  // breaks detailed balance and the reflection symmetry that would otherwise
  // cancel the drift.
  std::vector<PeriodicScalarField> psi{cosine(1.0),
                                       PeriodicScalarField(1, {{{1}, 0.0, 1.0}})};
  std::vector<std::vector<PeriodicScalarField>> r(
      2, std::vector<PeriodicScalarField>(2, PeriodicScalarField::zero(1)));
  r[0][1] = PeriodicScalarField(1, {{{0}, 3.0, 0.0}, {{1}, 3.0, 0.0}});
  r[1][0] = PeriodicScalarField::constant(1, 3.0);
  return ContinuousModel(std::move(psi), SwitchingRateMatrix(std::move(r)), Regime::kI,
                         "two_state_flashing");
}

Model detailed_balance_pair() {
  std::vector<PeriodicScalarField> psi{
      PeriodicScalarField(1, {{{1}, 0.5, 0.0}, {{2}, 0.0, 0.2}}),
      PeriodicScalarField(1, {{{1}, 0.0, 0.3}}),
  };
  Eigen::MatrixXd sigma(2, 2);
  sigma << 0.0, 1.5, 1.5, 0.0;
  return detailed_balance_model(std::move(psi), sigma, Regime::kI, "detailed_balance_pair");
}

Model discrete_asymmetric(double plus, double minus, std::string name) {
  const double p[1] = {plus};
  const double m[1] = {minus};
  return DiscreteModel::uniform(2, p, m, Eigen::MatrixXd::Zero(1, 1), Regime::kI,
                                std::move(name));
}

std::string format_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"constant_drift(F)",          "tilted_cosine(F)", "two_state_flashing",
          "discrete_asymmetric(r+,r-)", "detailed_balance_pair", "quadratic"};
}

Model preset(const std::string& spec) {
  static const std::regex pattern(R"(\s*([a-z_]+)\s*(?:\(([^)]*)\))?\s*)");
  std::smatch m;
  if (!std::regex_match(spec, m, pattern)) throw ConfigError("cannot parse preset '" + spec + "'");
  const std::string name = m[1];
  std::vector<double> args;
  if (m[2].matched) {
    std::stringstream ss(m[2].str());
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        args.push_back(std::stod(item, &used));
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ConfigError("preset argument '" + item + "' is not a number");
      }
    }
  }
  const auto want = [&](std::size_t n, std::vector<double> defaults) {
    if (args.empty()) args = std::move(defaults);
    if (args.size() != n) {
      throw ConfigError("preset " + name + " takes " + std::to_string(n) + " argument(s)");
    }
  };
  const auto label = [&] {
    std::string out = name + "(";
    for (std::size_t i = 0; i < args.size(); ++i) out += (i ? "," : "") + format_number(args[i]);
    return out + ")";
  };
  if (name == "constant_drift") {
    want(1, {1.0});
    return constant_drift(args[0], label());
  }
  if (name == "tilted_cosine") {
    want(1, {0.5});
    return tilted_cosine(args[0], label());
  }
  if (name == "discrete_asymmetric") {
    want(2, {2.0, 1.0});
    return discrete_asymmetric(args[0], args[1], label());
  }
  if (name == "quadratic") {
    want(0, {});
    return constant_drift(0.0, "quadratic");
  }
  if (name == "two_state_flashing") {
    want(0, {});
    return two_state_flashing();
  }
  if (name == "detailed_balance_pair") {
    want(0, {});
    return detailed_balance_pair();
  }
  throw ConfigError("unknown preset '" + name + "'");
}

}  // namespace effham
