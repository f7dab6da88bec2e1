#include "stgformer/config.hpp"

#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include "stgformer/skeleton_graph.hpp"

namespace stg {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  size_t pos = 0;
  int out = 0;
  try {
    out = std::stoi(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

long long to_ll(const std::string& key, const std::string& v) {
  size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || v.empty()) throw std::invalid_argument("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: " + key + " expects true/false, got '" + v + "'");
}

const char* groups_name(AttentionGroups g) {
  switch (g) {
    case AttentionGroups::kBoth: return "both";
    case AttentionGroups::kTemporalOnly: return "temporal";
    case AttentionGroups::kSpatialOnly: return "spatial";
  }
  return "both";
}

AttentionGroups to_groups(const std::string& key, const std::string& v) {
  if (v == "both") return AttentionGroups::kBoth;
  if (v == "temporal") return AttentionGroups::kTemporalOnly;
  if (v == "spatial") return AttentionGroups::kSpatialOnly;
  throw std::invalid_argument("config: " + key + " expects both/temporal/spatial, got '" + v + "'");
}

Activation to_activation(const std::string& key, const std::string& v) {
  if (v == "gelu") return Activation::kGelu;
  if (v == "identity") return Activation::kIdentity;
  throw std::invalid_argument("config: " + key + " expects gelu/identity, got '" + v + "'");
}

using Setter = std::function<void(const std::string&, const std::string&)>;

std::map<std::string, Setter> model_setters(ModelConfig* m) {
  return {
      {"frames", [m](auto& k, auto& v) { m->frames = to_int(k, v); }},
      {"skeleton", [m](auto&, auto& v) { m->skeleton = v; }},
      {"joints", [m](auto& k, auto& v) { m->joints = to_int(k, v); }},
      {"embed_dim", [m](auto& k, auto& v) { m->embed_dim = to_int(k, v); }},
      {"heads", [m](auto& k, auto& v) { m->heads = to_int(k, v); }},
      {"blocks", [m](auto& k, auto& v) { m->blocks = to_int(k, v); }},
      {"spatial_hops", [m](auto& k, auto& v) { m->spatial_hops = to_int(k, v); }},
      {"temporal_hops", [m](auto& k, auto& v) { m->temporal_hops = to_int(k, v); }},
      {"gcn_layers", [m](auto& k, auto& v) { m->gcn_layers = to_int(k, v); }},
      {"spatial_clip", [m](auto& k, auto& v) { m->spatial_clip = to_int(k, v); }},
      {"temporal_clip", [m](auto& k, auto& v) { m->temporal_clip = to_int(k, v); }},
      {"use_stga", [m](auto& k, auto& v) { m->use_stga = to_bool(k, v); }},
      {"stga_groups", [m](auto& k, auto& v) { m->stga_groups = to_groups(k, v); }},
      {"use_smhr", [m](auto& k, auto& v) { m->use_smhr = to_bool(k, v); }},
      {"use_tmhr", [m](auto& k, auto& v) { m->use_tmhr = to_bool(k, v); }},
      {"activation", [m](auto& k, auto& v) { m->activation = to_activation(k, v); }},
      {"norm_eps", [m](auto& k, auto& v) { m->norm_eps = to_double(k, v); }},
      {"root_joint", [m](auto& k, auto& v) { m->root_joint = to_int(k, v); }},
      {"image_width", [m](auto& k, auto& v) { m->image_width = to_double(k, v); }},
      {"image_height", [m](auto& k, auto& v) { m->image_height = to_double(k, v); }},
      {"target_unit_mm", [m](auto& k, auto& v) { m->target_unit_mm = to_double(k, v); }},
  };
}

std::map<std::string, Setter> train_setters(TrainConfig* t) {
  return {
      {"base_lr", [t](auto& k, auto& v) { t->base_lr = to_double(k, v); }},
      {"lr_decay", [t](auto& k, auto& v) { t->lr_decay = to_double(k, v); }},
      {"beta1", [t](auto& k, auto& v) { t->beta1 = to_double(k, v); }},
      {"beta2", [t](auto& k, auto& v) { t->beta2 = to_double(k, v); }},
      {"adam_eps", [t](auto& k, auto& v) { t->adam_eps = to_double(k, v); }},
      {"batch_size", [t](auto& k, auto& v) { t->batch_size = to_int(k, v); }},
      {"epochs", [t](auto& k, auto& v) { t->epochs = to_int(k, v); }},
      {"max_steps", [t](auto& k, auto& v) { t->max_steps = to_ll(k, v); }},
      {"seed", [t](auto& k, auto& v) { t->seed = static_cast<std::uint64_t>(to_ll(k, v)); }},
  };
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (frames < 1) fail("frames must be >= 1");
  if (joints < 1) fail("joints must be >= 1");
  if (embed_dim < 2 || embed_dim % 2 != 0) fail("embed_dim must be even and positive");
  if (heads < 2 || heads % 2 != 0) fail("heads must be even and positive");
  if ((embed_dim / 2) % (heads / 2) != 0) fail("heads/2 must divide embed_dim/2");
  if (blocks < 0) fail("blocks must be >= 0");
  if (spatial_hops < 1 || spatial_hops > embed_dim / 2) fail("spatial_hops must be in [1, embed_dim/2]");
  if (temporal_hops < 1 || temporal_hops > embed_dim / 2) fail("temporal_hops must be in [1, embed_dim/2]");
  if (gcn_layers < 1) fail("gcn_layers must be >= 1");
  if (spatial_clip < 1 || temporal_clip < 1) fail("clip radii must be >= 1");
  if (root_joint < 0 || root_joint >= joints) fail("root_joint out of range");
  if (!(norm_eps > 0.0)) fail("norm_eps must be positive");
  if (!(image_width > 0.0) || !(image_height > 0.0) || !(target_unit_mm > 0.0)) fail("data scales must be positive");
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.frames = 4;
  c.skeleton = "chain:5";
  c.joints = 5;
  c.embed_dim = 8;
  c.heads = 2;
  c.blocks = 1;
  c.spatial_hops = 2;
  c.temporal_hops = 2;
  c.gcn_layers = 2;
  c.spatial_clip = 4;
  c.temporal_clip = 16;
  return c;
}

void parse_config_text(const std::string& text, ModelConfig* model, TrainConfig* train) {
  ModelConfig mscratch;
  TrainConfig tscratch;
  auto ms = model_setters(model ? model : &mscratch);
  auto ts = train_setters(train ? train : &tscratch);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (auto it = ms.find(key); it != ms.end()) {
      it->second(key, value);
    } else if (auto jt = ts.find(key); jt != ts.end()) {
      jt->second(key, value);
    } else {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
}

std::string format_config_text(const ModelConfig& m, const TrainConfig* t) {
  std::ostringstream o;
  o << std::setprecision(17);
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "frames=" << m.frames << '\n'
    << "skeleton=" << m.skeleton << '\n'
    << "joints=" << m.joints << '\n'
    << "embed_dim=" << m.embed_dim << '\n'
    << "heads=" << m.heads << '\n'
    << "blocks=" << m.blocks << '\n'
    << "spatial_hops=" << m.spatial_hops << '\n'
    << "temporal_hops=" << m.temporal_hops << '\n'
    << "gcn_layers=" << m.gcn_layers << '\n'
    << "spatial_clip=" << m.spatial_clip << '\n'
    << "temporal_clip=" << m.temporal_clip << '\n'
    << "use_stga=" << b(m.use_stga) << '\n'
    << "stga_groups=" << groups_name(m.stga_groups) << '\n'
    << "use_smhr=" << b(m.use_smhr) << '\n'
    << "use_tmhr=" << b(m.use_tmhr) << '\n'
    << "activation=" << (m.activation == Activation::kGelu ? "gelu" : "identity") << '\n'
    << "norm_eps=" << m.norm_eps << '\n'
    << "root_joint=" << m.root_joint << '\n'
    << "image_width=" << m.image_width << '\n'
    << "image_height=" << m.image_height << '\n'
    << "target_unit_mm=" << m.target_unit_mm << '\n';
  if (t) {
    o << "base_lr=" << t->base_lr << '\n'
      << "lr_decay=" << t->lr_decay << '\n'
      << "beta1=" << t->beta1 << '\n'
      << "beta2=" << t->beta2 << '\n'
      << "adam_eps=" << t->adam_eps << '\n'
      << "batch_size=" << t->batch_size << '\n'
      << "epochs=" << t->epochs << '\n'
      << "max_steps=" << t->max_steps << '\n'
      << "seed=" << t->seed << '\n';
  }
  return o.str();
}

void read_config_file(const std::string& path, ModelConfig* model, TrainConfig* train) {
  std::ifstream f(path);
  if (!f) throw IoError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  parse_config_text(ss.str(), model, train);
}

}  // namespace stg
