#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "effham/model.hpp"
#include "json.hpp"

namespace effham {

// Model schema. Continuous:
//   {"kind":"continuous","dim":d,"J":J,"regime":"I"|"II","period":1,"name":"...",
//    "potentials":[{"coeffs":[[k_1..k_d,a,b],...],"slope":[...]}, ...],
//    "rates":[[null|number|field, ...], ...]}
// where a rate field is {"coeffs":..., "slope":..., "exp":true|false} and
// "exp":true means the rate is exp(series). Discrete:
//   {"kind":"discrete","J":J,"length":l,"regime":"I"|"II","name":"...",
//    "hop_plus":[number|[l numbers], ...], "hop_minus":[...],
//    "switching":[[null|number|[l numbers], ...], ...]}
// Unknown keys are rejected.
Model model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const Model& model);
Model load_model_file(const std::filesystem::path& path);

// Named scenarios: constant_drift(F), tilted_cosine(F), two_state_flashing,
// discrete_asymmetric(r+,r-), detailed_balance_pair, quadratic.
Model preset(const std::string& spec);
std::vector<std::string> preset_names();

// r_ij = sigma_ij exp(2 psi^i) with symmetric sigma satisfies detailed balance
// exactly: r_ij e^{-2 psi^i} = sigma_ij = r_ji e^{-2 psi^j}.
ContinuousModel detailed_balance_model(std::vector<PeriodicScalarField> potentials,
                                       const Eigen::MatrixXd& sigma, Regime regime = Regime::kI,
                                       std::string name = {});

Regime parse_regime(const std::string& text);

}  // namespace effham
