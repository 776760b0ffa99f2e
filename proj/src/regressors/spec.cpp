#include "zonecast/error.hpp"
#include "zonecast/regressors.hpp"

#include <cmath>

namespace zonecast::regressors {
namespace {

using Hyper = std::map<std::string, double>;

const Hyper kForest{{"n_trees", 100}, {"max_depth", 6}, {"min_leaf", 5}, {"feature_frac", 0.5}, {"bootstrap", 1}};
// length_scale 0 and noise_std -1 mean "select on a grid"; signal_std 0 means std(y).
const Hyper kGp{{"length_scale", 0}, {"noise_std", -1}, {"signal_std", 0}, {"max_samples", 2000}};
const Hyper kAda{{"n_estimators", 50}, {"max_depth", 6}, {"min_leaf", 5}};
const Hyper kGbt{{"n_rounds", 200}, {"learning_rate", 0.1}, {"max_depth", 6}, {"min_leaf", 5}};
const Hyper kXgb{{"n_rounds", 200}, {"learning_rate", 0.1}, {"max_depth", 6},
                 {"min_leaf", 5},   {"l2_leaf", 1.0},       {"min_gain", 0.0}};

bool is_integral_key(const std::string& key) {
  return key == "n_trees" || key == "max_depth" || key == "min_leaf" || key == "bootstrap" ||
         key == "max_samples" || key == "n_estimators" || key == "n_rounds";
}

TreeParams tree_params(const RegressorSpec& s) {
  TreeParams t;
  t.max_depth = s.get_int("max_depth");
  t.min_leaf = s.get_int("min_leaf");
  return t;
}

}  // namespace

std::string_view to_string(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::RANDOM_FOREST: return "RANDOM_FOREST";
    case RegressorKind::GP: return "GP";
    case RegressorKind::ADABOOST_R2: return "ADABOOST_R2";
    case RegressorKind::GRADIENT_BOOSTING: return "GRADIENT_BOOSTING";
    case RegressorKind::XGB_STYLE: return "XGB_STYLE";
  }
  return "?";
}

std::optional<RegressorKind> parse_regressor_kind(std::string_view name) {
  for (RegressorKind k : kAllRegressorKinds) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

const Hyper& RegressorSpec::default_hyper(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::RANDOM_FOREST: return kForest;
    case RegressorKind::GP: return kGp;
    case RegressorKind::ADABOOST_R2: return kAda;
    case RegressorKind::GRADIENT_BOOSTING: return kGbt;
    case RegressorKind::XGB_STYLE: return kXgb;
  }
  return kForest;
}

RegressorSpec RegressorSpec::defaults(RegressorKind kind, std::uint64_t seed) {
  return RegressorSpec{kind, default_hyper(kind), seed};
}

void RegressorSpec::set(const std::string& key, double value) {
  if (!default_hyper(kind).contains(key)) {
    throw ValidationError("regressor " + std::string(to_string(kind)) + ": unknown hyperparameter '" + key + "'");
  }
  hyper[key] = value;
}

double RegressorSpec::get(const std::string& key) const {
  const auto it = hyper.find(key);
  if (it == hyper.end()) {
    throw ValidationError("regressor " + std::string(to_string(kind)) + ": missing hyperparameter '" + key + "'");
  }
  return it->second;
}

int RegressorSpec::get_int(const std::string& key) const { return static_cast<int>(get(key)); }

void RegressorSpec::validate() const {
  const Hyper& def = default_hyper(kind);
  const std::string who = "regressor " + std::string(to_string(kind));
  for (const auto& [key, value] : hyper) {
    if (!def.contains(key)) throw ValidationError(who + ": unknown hyperparameter '" + key + "'");
    if (!std::isfinite(value)) throw ValidationError(who + ": " + key + " must be finite");
    if (is_integral_key(key) && value != std::floor(value)) {
      throw ValidationError(who + ": " + key + " must be an integer");
    }
  }
  for (const auto& entry : def) {
    if (!hyper.contains(entry.first)) throw ValidationError(who + ": missing hyperparameter '" + entry.first + "'");
  }
  const auto at_least = [&](const char* key, double lo) {
    if (hyper.contains(key) && hyper.at(key) < lo) {
      throw ValidationError(who + ": " + key + " must be >= " + std::to_string(static_cast<long long>(lo)));
    }
  };
  at_least("n_trees", 1);
  at_least("max_depth", 0);
  at_least("min_leaf", 1);
  at_least("n_estimators", 1);
  at_least("n_rounds", 0);
  at_least("max_samples", 1);
  at_least("l2_leaf", 0);
  at_least("min_gain", 0);
  if (hyper.contains("feature_frac")) {
    const double f = hyper.at("feature_frac");
    if (!(f > 0.0 && f <= 1.0)) throw ValidationError(who + ": feature_frac must be in (0, 1]");
  }
  if (hyper.contains("learning_rate") && !(hyper.at("learning_rate") > 0.0)) {
    throw ValidationError(who + ": learning_rate must be > 0");
  }
  if (hyper.contains("bootstrap") && hyper.at("bootstrap") != 0 && hyper.at("bootstrap") != 1) {
    throw ValidationError(who + ": bootstrap must be 0 or 1");
  }
}

std::unique_ptr<Regressor> fit(const RegressorSpec& spec, const Matrix& X, std::span<const double> y) {
  spec.validate();
  std::unique_ptr<Regressor> model;
  switch (spec.kind) {
    case RegressorKind::RANDOM_FOREST: {
      ForestParams p;
      p.n_trees = spec.get_int("n_trees");
      p.tree = tree_params(spec);
      p.tree.feature_frac = spec.get("feature_frac");
      p.bootstrap = spec.get("bootstrap") != 0.0;
      p.seed = spec.seed;
      model = std::make_unique<ForestModel>(forest_fit(X, y, p));
      break;
    }
    case RegressorKind::GP: {
      GpParams p;
      p.length_scale = spec.get("length_scale");
      p.noise_std = spec.get("noise_std");
      p.signal_std = spec.get("signal_std");
      p.max_samples = static_cast<std::size_t>(spec.get_int("max_samples"));
      p.seed = spec.seed;
      p = gp_select_params(X, y, p, p.length_scale > 0.0, p.noise_std >= 0.0);
      model = std::make_unique<GpModel>(gp_fit(X, y, p));
      break;
    }
    case RegressorKind::ADABOOST_R2: {
      AdaBoostParams p;
      p.n_estimators = spec.get_int("n_estimators");
      p.tree = tree_params(spec);
      p.seed = spec.seed;
      model = std::make_unique<AdaBoostModel>(adaboost_fit(X, y, p));
      break;
    }
    case RegressorKind::GRADIENT_BOOSTING:
    case RegressorKind::XGB_STYLE: {
      BoostParams p;
      p.n_rounds = spec.get_int("n_rounds");
      p.learning_rate = spec.get("learning_rate");
      p.tree = tree_params(spec);
      if (spec.kind == RegressorKind::XGB_STYLE) {
        p.tree.xgb = true;
        p.tree.lambda = spec.get("l2_leaf");
        p.tree.gamma = spec.get("min_gain");
      }
      model = std::make_unique<BoostedModel>(gbt_fit(X, y, p));
      break;
    }
  }
  model->spec = spec;
  return model;
}

}  // namespace zonecast::regressors
