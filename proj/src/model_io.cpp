#include "zonecast/model_io.hpp"

#include "zonecast/csv.hpp"
#include "zonecast/error.hpp"

#include <array>
#include <bit>
#include <cstdint>

namespace zonecast::model_io {

using namespace regressors;
using nlohmann::json;

namespace {

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
constexpr std::string_view kFormat = "zonecast-model-v1";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

void tree_node_to_json(const Tree& t, int id, json& out) {
  const TreeNode& n = t.nodes[static_cast<std::size_t>(id)];
  out["n"] = n.n_samples;
  if (n.is_leaf()) {
    out["value"] = n.value;
    return;
  }
  out["feature"] = n.feature;
  out["threshold"] = n.threshold;
  out["value"] = n.value;
  tree_node_to_json(t, n.left, out["left"]);
  tree_node_to_json(t, n.right, out["right"]);
}

int tree_node_from_json(const json& j, Tree& t, int depth) {
  if (depth > 1000) throw ValidationError("model: tree too deep");
  const int id = static_cast<int>(t.nodes.size());
  TreeNode node;
  node.n_samples = j.at("n").get<std::uint32_t>();
  node.value = j.at("value").get<double>();
  t.nodes.push_back(node);
  if (j.contains("feature")) {
    const int feature = j.at("feature").get<int>();
    if (feature < 0) throw ValidationError("model: negative feature index");
    const double threshold = j.at("threshold").get<double>();
    const int left = tree_node_from_json(j.at("left"), t, depth + 1);
    const int right = tree_node_from_json(j.at("right"), t, depth + 1);
    TreeNode& self = t.nodes[static_cast<std::size_t>(id)];
    self.feature = feature;
    self.threshold = threshold;
    self.left = left;
    self.right = right;
  }
  return id;
}

json trees_to_json(const std::vector<Tree>& trees) {
  json arr = json::array();
  for (const Tree& t : trees) arr.push_back(tree_to_json(t));
  return arr;
}

std::vector<Tree> trees_from_json(const json& arr) {
  std::vector<Tree> out;
  for (const json& t : arr) out.push_back(tree_from_json(t));
  return out;
}

void check_feature_bounds(const std::vector<Tree>& trees, std::size_t d) {
  for (const Tree& t : trees) {
    for (const TreeNode& n : t.nodes) {
      if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= d) {
        throw ValidationError("model: feature index out of range");
      }
    }
  }
}

}  // namespace

std::string base64_encode(std::span<const double> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::size_t rem = bytes.size() - i;
    const std::uint32_t chunk = (std::uint32_t{bytes[i]} << 16) | (rem > 1 ? std::uint32_t{bytes[i + 1]} << 8 : 0) |
                                (rem > 2 ? std::uint32_t{bytes[i + 2]} : 0);
    out += kAlphabet[(chunk >> 18) & 63];
    out += kAlphabet[(chunk >> 12) & 63];
    out += rem > 1 ? kAlphabet[(chunk >> 6) & 63] : '=';
    out += rem > 2 ? kAlphabet[chunk & 63] : '=';
  }
  return out;
}

std::vector<double> base64_decode_doubles(std::string_view text) {
  if (text.size() % 4 != 0) throw ValidationError("base64: length is not a multiple of 4");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> v{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        v[static_cast<std::size_t>(k)] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw ValidationError("base64: data after padding");
      v[static_cast<std::size_t>(k)] = decode_char(c);
      if (v[static_cast<std::size_t>(k)] < 0) throw ValidationError("base64: invalid character");
    }
    const std::uint32_t chunk = (static_cast<std::uint32_t>(v[0]) << 18) | (static_cast<std::uint32_t>(v[1]) << 12) |
                                (static_cast<std::uint32_t>(v[2]) << 6) | static_cast<std::uint32_t>(v[3]);
    bytes.push_back(static_cast<std::uint8_t>(chunk >> 16));
    if (pad < 2) bytes.push_back(static_cast<std::uint8_t>(chunk >> 8));
    if (pad < 1) bytes.push_back(static_cast<std::uint8_t>(chunk));
  }
  if (bytes.size() % 8 != 0) throw ValidationError("base64: byte count is not a multiple of 8");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t{bytes[i * 8 + static_cast<std::size_t>(k)]} << (8 * k);
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

json spec_to_json(const RegressorSpec& spec) {
  return json{{"kind", std::string(to_string(spec.kind))}, {"seed", spec.seed}, {"hyper", spec.hyper}};
}

RegressorSpec spec_from_json(const json& j) {
  const auto name = j.at("kind").get<std::string>();
  const auto kind = parse_regressor_kind(name);
  if (!kind) throw ValidationError("model: unknown regressor kind '" + name + "'");
  RegressorSpec s;
  s.kind = *kind;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.hyper = j.at("hyper").get<std::map<std::string, double>>();
  s.validate();
  return s;
}

json tree_to_json(const Tree& tree) {
  json out = json::object();
  if (!tree.nodes.empty()) tree_node_to_json(tree, 0, out);
  return out;
}

Tree tree_from_json(const json& j) {
  Tree t;
  tree_node_from_json(j, t, 0);
  return t;
}

json to_json(const Regressor& model) {
  json j;
  j["format"] = kFormat;
  j["spec"] = model.spec ? spec_to_json(*model.spec) : json(nullptr);
  j["n_features"] = model.n_features();
  if (const auto* f = dynamic_cast<const ForestModel*>(&model)) {
    j["type"] = "forest";
    j["trees"] = trees_to_json(f->trees);
  } else if (const auto* b = dynamic_cast<const BoostedModel*>(&model)) {
    j["type"] = "boosted";
    j["base_score"] = b->base_score;
    j["learning_rate"] = b->learning_rate;
    j["xgb"] = b->xgb;
    j["lambda"] = b->lambda;
    j["gamma"] = b->gamma;
    j["trees"] = trees_to_json(b->trees);
  } else if (const auto* a = dynamic_cast<const AdaBoostModel*>(&model)) {
    j["type"] = "adaboost";
    j["estimators"] = trees_to_json(a->estimators);
    j["weights"] = a->weights;
  } else if (const auto* g = dynamic_cast<const GpModel*>(&model)) {
    j["type"] = "gp";
    j["params"] = {{"length_scale", g->params.length_scale}, {"signal_std", g->params.signal_std},
                   {"noise_std", g->params.noise_std},       {"max_samples", g->params.max_samples},
                   {"standardize", g->params.standardize},   {"seed", g->params.seed}};
    j["jitter"] = g->jitter;
    j["y_mean"] = g->y_mean;
    j["n_train"] = g->X_train.rows();
    j["means"] = base64_encode(g->means);
    j["stds"] = base64_encode(g->stds);
    j["x_train"] = base64_encode(g->X_train.data());
    j["alpha"] = base64_encode(g->alpha);
  } else {
    throw ValidationError("model: this regressor type cannot be saved");
  }
  return j;
}

std::unique_ptr<Regressor> from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormat) throw ValidationError("model: unsupported format");
    const auto d = j.at("n_features").get<std::size_t>();
    const auto type = j.at("type").get<std::string>();
    std::unique_ptr<Regressor> out;
    if (type == "forest") {
      auto m = std::make_unique<ForestModel>();
      m->n_features_ = d;
      m->trees = trees_from_json(j.at("trees"));
      if (m->trees.empty()) throw ValidationError("model: forest without trees");
      check_feature_bounds(m->trees, d);
      out = std::move(m);
    } else if (type == "boosted") {
      auto m = std::make_unique<BoostedModel>();
      m->n_features_ = d;
      m->base_score = j.at("base_score").get<double>();
      m->learning_rate = j.at("learning_rate").get<double>();
      m->xgb = j.at("xgb").get<bool>();
      m->lambda = j.at("lambda").get<double>();
      m->gamma = j.at("gamma").get<double>();
      m->trees = trees_from_json(j.at("trees"));
      check_feature_bounds(m->trees, d);
      out = std::move(m);
    } else if (type == "adaboost") {
      auto m = std::make_unique<AdaBoostModel>();
      m->n_features_ = d;
      m->estimators = trees_from_json(j.at("estimators"));
      m->weights = j.at("weights").get<std::vector<double>>();
      if (m->estimators.empty() || m->weights.size() != m->estimators.size()) {
        throw ValidationError("model: adaboost estimators and weights do not match");
      }
      check_feature_bounds(m->estimators, d);
      out = std::move(m);
    } else if (type == "gp") {
      auto m = std::make_unique<GpModel>();
      const json& p = j.at("params");
      m->params.length_scale = p.at("length_scale").get<double>();
      m->params.signal_std = p.at("signal_std").get<double>();
      m->params.noise_std = p.at("noise_std").get<double>();
      m->params.max_samples = p.at("max_samples").get<std::size_t>();
      m->params.standardize = p.at("standardize").get<bool>();
      m->params.seed = p.at("seed").get<std::uint64_t>();
      m->jitter = j.at("jitter").get<double>();
      m->y_mean = j.at("y_mean").get<double>();
      const auto n = j.at("n_train").get<std::size_t>();
      m->means = base64_decode_doubles(j.at("means").get<std::string>());
      m->stds = base64_decode_doubles(j.at("stds").get<std::string>());
      m->alpha = base64_decode_doubles(j.at("alpha").get<std::string>());
      if (m->means.size() != d || m->stds.size() != d || m->alpha.size() != n) {
        throw ValidationError("model: gp array sizes do not match");
      }
      m->X_train = Matrix(n, d, base64_decode_doubles(j.at("x_train").get<std::string>()));
      m->refactor();
      out = std::move(m);
    } else {
      throw ValidationError("model: unknown type '" + type + "'");
    }
    if (!j.at("spec").is_null()) out->spec = spec_from_json(j.at("spec"));
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: malformed document: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Regressor& model) {
  csv::write_file(path, to_json(model).dump(1) + "\n");
}

std::unique_ptr<Regressor> load_model(const std::filesystem::path& path) {
  try {
    return from_json(json::parse(csv::read_file(path)));
  } catch (const json::parse_error& e) {
    throw ValidationError("model " + path.string() + ": " + e.what());
  }
}

}  // namespace zonecast::model_io
