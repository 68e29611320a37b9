#include "vng/model_io.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace vng {

using nlohmann::json;

namespace {

ModelError schema_error(const std::string& where, const std::string& msg) {
  return ModelError(ModelError::Kind::schema, where, msg);
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw schema_error(where.empty() ? key : where + "." + key, "missing field");
  return *it;
}

double number_at(const json& v, const std::string& where) {
  if (!v.is_number()) throw schema_error(where, "expected a number");
  double d = v.get<double>();
  if (!std::isfinite(d)) throw schema_error(where, "expected a finite number");
  return d;
}

Vector vector_at(const json& v, const std::string& where, std::optional<int> dim = std::nullopt) {
  if (!v.is_array()) throw schema_error(where, "expected an array of numbers");
  if (dim && static_cast<int>(v.size()) != *dim) {
    throw schema_error(where, "expected " + std::to_string(*dim) + " coordinates, got " + std::to_string(v.size()));
  }
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(i) = number_at(v[i], where + "[" + std::to_string(i) + "]");
  return out;
}

json vector_json(const Eigen::Ref<const Vector>& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i))) throw std::invalid_argument("non-finite value in result document");
    arr.push_back(v(i));
  }
  return arr;
}

bool optional_flag(const json& doc, const std::string& key) {
  auto it = doc.find(key);
  if (it == doc.end()) return false;
  if (!it->is_boolean()) throw schema_error(key, "expected true or false");
  return it->get<bool>();
}

std::optional<double> optional_number(const json& doc, const std::string& key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  return number_at(*it, key);
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw schema_error(path, std::string("malformed JSON: ") + e.what());
  }
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

ConeSpec free_disposal_closure(const ConeSpec& cone) {
  const int n = cone.dim();
  ConeSpec out = cone;
  for (int i = 0; i < n; ++i) out.add(Vector::Unit(n, i), Vector::Zero(n));
  for (int k = 0; k < cone.size(); ++k) {
    Vector b = cone.output(k);
    // Only coordinates that are nonzero give a new variant.
    std::vector<int> nz;
    for (int i = 0; i < n; ++i) {
      if (b(i) != 0.0) nz.push_back(i);
    }
    const unsigned subsets = 1u << nz.size();
    for (unsigned mask = 1; mask < subsets; ++mask) {
      Vector reduced = b;
      for (std::size_t j = 0; j < nz.size(); ++j) {
        if (mask & (1u << j)) reduced(nz[j]) = 0.0;
      }
      out.add(cone.input(k), reduced);
    }
  }
  return out;
}

Model parse_model(const json& doc) {
  if (!doc.is_object()) throw schema_error("", "model document must be a JSON object");
  const json& version = require(doc, "schema_version", "");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw schema_error("schema_version", "unsupported version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  const json& dim_j = require(doc, "dim", "");
  if (!dim_j.is_number_integer() || dim_j.get<int>() < 1) throw schema_error("dim", "expected a positive integer");
  const int n = dim_j.get<int>();

  const json& nodes = require(doc, "nodes", "");
  if (!nodes.is_array() || nodes.empty()) throw schema_error("nodes", "expected a nonempty array");

  std::vector<ScenarioNode> records;
  std::vector<std::optional<ConeSpec>> cone_of;
  records.reserve(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    const std::string where = "nodes[" + std::to_string(r) + "]";
    const json& nd = nodes[r];
    if (!nd.is_object()) throw schema_error(where, "expected an object");
    ScenarioNode rec;
    const json& id = require(nd, "id", where);
    if (!id.is_string() || id.get<std::string>().empty()) throw schema_error(where + ".id", "expected a nonempty string");
    rec.id = id.get<std::string>();
    const json& time = require(nd, "time", where);
    if (!time.is_number_integer() || time.get<int>() < 0) {
      throw schema_error(where + ".time", "expected a nonnegative integer");
    }
    rec.time = time.get<int>();
    auto par = nd.find("parent");
    if (par != nd.end() && !par->is_null()) {
      if (!par->is_string()) throw schema_error(where + ".parent", "expected a string or null");
      rec.parent = par->get<std::string>();
    }
    auto cp = nd.find("cond_prob");
    rec.cond_prob = cp == nd.end() ? 1.0 : number_at(*cp, where + ".cond_prob");

    auto gens = nd.find("generators");
    if (gens == nd.end() || gens->is_null()) {
      cone_of.emplace_back();
    } else {
      if (!gens->is_array()) throw schema_error(where + ".generators", "expected an array");
      ConeSpec cone(Matrix(n, 0), Matrix(n, 0));
      for (std::size_t k = 0; k < gens->size(); ++k) {
        const std::string gw = where + ".generators[" + std::to_string(k) + "]";
        const json& g = (*gens)[k];
        if (!g.is_object()) throw schema_error(gw, "expected an object with fields a and b");
        cone.add(vector_at(require(g, "a", gw), gw + ".a", n), vector_at(require(g, "b", gw), gw + ".b", n));
      }
      cone_of.emplace_back(std::move(cone));
    }
    records.push_back(std::move(rec));
  }

  Model model;
  model.name = doc.value("name", std::string("model"));
  std::vector<std::string> ids;
  for (const auto& r : records) ids.push_back(r.id);
  model.tree = build_tree(std::move(records), n);

  auto hz = doc.find("horizon");
  if (hz != doc.end()) {
    if (!hz->is_number_integer() || hz->get<int>() != model.tree.horizon()) {
      throw schema_error("horizon", "declared horizon does not match the node table (" +
                                        std::to_string(model.tree.horizon()) + ")");
    }
  }

  model.free_disposal_closure = optional_flag(doc, "free_disposal_closure");
  model.stationary = optional_flag(doc, "stationary");
  model.cones.at_node.assign(model.tree.size(), ConeSpec{});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    NodeIndex i = *model.tree.find(ids[r]);
    if (i == model.tree.root()) {
      if (cone_of[r] && cone_of[r]->size() > 0) {
        throw schema_error("nodes[" + std::to_string(r) + "].generators", "the root node carries no cone");
      }
      continue;
    }
    if (!cone_of[r] || cone_of[r]->size() == 0) {
      throw schema_error("node " + ids[r], "missing cone generators");
    }
    model.cones[i] = model.free_disposal_closure ? free_disposal_closure(*cone_of[r]) : *cone_of[r];
  }

  model.x0 = vector_at(require(doc, "x0", ""), "x0", n);
  model.declared_delta = optional_number(doc, "delta");
  model.declared_D = optional_number(doc, "D");
  check_structure(model);
  return model;
}

LoadedModel load_model(const json& doc) {
  LoadedModel out{parse_model(doc), {}};
  out.constants = compute_constants(out.model);
  return out;
}

json model_to_json(const Model& model) {
  const ScenarioTree& tree = model.tree;
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["name"] = model.name;
  doc["dim"] = tree.dim();
  doc["horizon"] = tree.horizon();
  doc["x0"] = vector_json(model.x0);
  if (model.stationary) doc["stationary"] = true;
  // Cones are written after closure; the flag is not repeated so that a
  // reload does not close them twice.
  if (model.declared_delta) doc["delta"] = *model.declared_delta;
  if (model.declared_D) doc["D"] = *model.declared_D;
  json nodes = json::array();
  for (NodeIndex i = 0; i < static_cast<NodeIndex>(tree.size()); ++i) {
    json nd;
    nd["id"] = tree.id(i);
    nd["time"] = tree.time(i);
    nd["parent"] = i == tree.root() ? json(nullptr) : json(tree.id(tree.parent(i)));
    nd["cond_prob"] = tree.cond_prob(i);
    if (i != tree.root()) {
      json gens = json::array();
      const ConeSpec& c = model.cones[i];
      for (int k = 0; k < c.size(); ++k) gens.push_back({{"a", vector_json(c.input(k))}, {"b", vector_json(c.output(k))}});
      nd["generators"] = std::move(gens);
    }
    nodes.push_back(std::move(nd));
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

// ---------------------------------------------------------------- examples

namespace {

class GridRng {
 public:
  explicit GridRng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on [0, 1) from the top 53 bits; independent of the standard
  // library's distribution implementations.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform on the grid lo, lo + step, ..., <= hi.
  double grid(double lo, double hi, double step) {
    if (hi <= lo) return lo;
    auto count = static_cast<std::uint64_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    auto j = static_cast<std::uint64_t>(uniform() * static_cast<double>(count));
    return lo + step * static_cast<double>(std::min(j, count - 1));
  }

  std::uint64_t below(std::uint64_t m) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(m)); }

 private:
  std::mt19937_64 eng_;
};

// Dyadic probabilities m_j / 2^k with m_j >= 1 summing to 2^k.
std::vector<double> dyadic_probabilities(GridRng& rng, int branching) {
  if (branching == 1) return {1.0};
  int k = 3;
  while ((1 << k) < 2 * branching) ++k;
  const int total = 1 << k;
  std::vector<int> units(branching, 1);
  for (int r = total - branching; r > 0; --r) ++units[rng.below(branching)];
  std::vector<double> p;
  for (int u : units) p.push_back(std::ldexp(static_cast<double>(u), -k));
  return p;
}

json generator_json(const Vector& a, const Vector& b) {
  return {{"a", vector_json(a)}, {"b", vector_json(b)}};
}

json neumann_cone(GridRng& rng, const ExampleParams& prm) {
  const int n = prm.dim;
  json gens = json::array();
  for (int i = 0; i < n; ++i) gens.push_back(generator_json(Vector::Unit(n, i), Vector::Zero(n)));
  const double gamma = rng.grid(prm.gamma_low, prm.gamma_high, 0.125);
  for (int k = 0; k < prm.productive; ++k) {
    Vector a(n), b(n);
    for (int i = 0; i < n; ++i) a(i) = rng.grid(prm.input_low, prm.input_high, 0.25);
    if (l1_norm(a) == 0.0) a(static_cast<Eigen::Index>(rng.below(n))) = 1.0;
    for (int i = 0; i < n; ++i) b(i) = gamma + rng.grid(0.0, prm.output_spread, 0.125);
    gens.push_back(generator_json(a, b));
  }
  return gens;
}

json currency_cone(GridRng& rng, const ExampleParams& prm) {
  const int n = prm.dim;
  Vector ret(n);
  for (int i = 0; i < n; ++i) ret(i) = rng.grid(prm.return_low, prm.return_high, 0.0625);
  json gens = json::array();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      // One unit of asset i, exchanged into asset j (cost charged when
      // j != i), then carried with the node's gross return of asset j.
      double factor = (i == j ? 1.0 : 1.0 - prm.cost) * ret(j);
      gens.push_back(generator_json(Vector::Unit(n, i), factor * Vector::Unit(n, j)));
    }
  }
  return gens;
}

void check_params(std::string_view kind, const ExampleParams& p) {
  auto bad = [](const std::string& m) { throw std::invalid_argument("invalid example parameters: " + m); };
  if (kind != "neumann" && kind != "currency") bad("unknown kind '" + std::string(kind) + "'");
  if (p.dim < 1 || p.dim > 8) bad("dim must be in 1..8");
  if (p.horizon < 1 || p.horizon > 12) bad("horizon must be in 1..12");
  if (p.branching < 1 || p.branching > 8) bad("branching must be in 1..8");
  if (std::pow(static_cast<double>(p.branching), p.horizon) > 1e5) bad("tree too large");
  if (kind == "neumann") {
    if (p.productive < 1) bad("productive must be >= 1");
    if (!(p.input_low >= 0.0) || p.input_high < p.input_low) bad("input range");
    if (!(p.gamma_low > 0.0) || p.gamma_high < p.gamma_low) bad("gamma range must be positive");
    if (!(p.output_spread >= 0.0)) bad("output spread");
  } else {
    if (p.dim < 2) bad("currency models need at least two assets");
    if (!(p.cost >= 0.0 && p.cost < 1.0)) bad("cost must lie in [0, 1)");
    if (!(p.return_low > 0.0) || p.return_high < p.return_low) bad("return range must be positive");
  }
}

}  // namespace

json generate_example(std::string_view kind, const ExampleParams& prm, std::uint64_t seed) {
  check_params(kind, prm);
  GridRng rng(seed);
  const bool neumann = kind == "neumann";
  auto draw_cone = [&] { return neumann ? neumann_cone(rng, prm) : currency_cone(rng, prm); };

  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["name"] = std::string(kind) + "-" + std::to_string(seed);
  doc["dim"] = prm.dim;
  doc["horizon"] = prm.horizon;
  Vector x0(prm.dim);
  for (int i = 0; i < prm.dim; ++i) x0(i) = rng.grid(0.5, 2.0, 0.25);
  doc["x0"] = vector_json(x0);
  if (prm.stationary) doc["stationary"] = true;

  json nodes = json::array();
  nodes.push_back({{"id", "r"}, {"time", 0}, {"parent", nullptr}, {"cond_prob", 1.0}});

  // A stationary model repeats one level-1 template under every node.
  std::vector<double> tmpl_prob;
  std::vector<json> tmpl_cone;
  if (prm.stationary) {
    tmpl_prob = dyadic_probabilities(rng, prm.branching);
    for (int j = 0; j < prm.branching; ++j) tmpl_cone.push_back(draw_cone());
  }

  std::vector<std::string> frontier{"r"};
  for (int t = 1; t <= prm.horizon; ++t) {
    std::vector<std::string> next;
    for (const auto& pid : frontier) {
      std::vector<double> probs = prm.stationary ? tmpl_prob : dyadic_probabilities(rng, prm.branching);
      for (int j = 0; j < prm.branching; ++j) {
        std::string id = pid + "." + std::to_string(j + 1);
        nodes.push_back({{"id", id},
                         {"time", t},
                         {"parent", pid},
                         {"cond_prob", probs[j]},
                         {"generators", prm.stationary ? tmpl_cone[j] : draw_cone()}});
        next.push_back(std::move(id));
      }
    }
    frontier = std::move(next);
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

// ----------------------------------------------------------------- results

namespace {

json adapted_table(const ScenarioTree& tree, const std::vector<AdaptedVector>& seq, int first, int last,
                   int level_offset = 0) {
  json arr(tree.size(), nullptr);
  for (int t = first; t <= last; ++t) {
    for (NodeIndex i : tree.level(t - level_offset)) arr[i] = vector_json(seq.at(t).at(tree, i));
  }
  return arr;
}

void read_table(const json& arr, const std::string& where, const ScenarioTree& tree, const std::vector<int>& order,
                std::vector<AdaptedVector>& seq, int first, int last, int level_offset = 0) {
  if (!arr.is_array() || arr.size() != tree.size()) throw schema_error(where, "expected one entry per node");
  for (int t = first; t <= last; ++t) {
    for (NodeIndex i : tree.level(t - level_offset)) {
      const json& v = arr[order[i]];
      if (v.is_null()) throw schema_error(where + "[" + std::to_string(order[i]) + "]", "missing value");
      seq.at(t).at(tree, i) = vector_at(v, where + "[" + std::to_string(order[i]) + "]", tree.dim());
    }
  }
}

}  // namespace

json constants_to_json(const GrowthConstants& gc) {
  auto list = [](const std::vector<double>& v, std::size_t from) {
    json arr = json::array();
    for (std::size_t i = from; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) throw std::invalid_argument("non-finite constant");
      arr.push_back(v[i]);
    }
    return arr;
  };
  return {{"M", list(gc.M, 1)},        {"gamma", list(gc.gamma, 1)}, {"C", list(gc.C, 1)},
          {"C_cum", list(gc.C_cum, 1)}, {"M_cum", list(gc.M_cum, 0)}, {"delta", gc.delta},
          {"D", gc.D},                  {"dim", gc.dim},              {"horizon", gc.horizon}};
}

json save_results(const ResultDocument& r, const ScenarioTree& tree) {
  const int N = tree.horizon();
  json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["kind"] = "result";
  doc["model"] = r.model_name;
  doc["dim"] = tree.dim();
  doc["horizon"] = N;
  json ids = json::array();
  for (NodeIndex i = 0; i < static_cast<NodeIndex>(tree.size()); ++i) ids.push_back(tree.id(i));
  doc["nodes"] = std::move(ids);
  doc["status"] = r.status;
  if (!r.label.empty()) doc["label"] = r.label;
  if (r.path) doc["path"] = adapted_table(tree, r.path->x, 0, N);
  if (r.dynkin) {
    doc["dynkin"] = {{"p", adapted_table(tree, r.dynkin->p, 1, N)},
                     {"p_terminal", adapted_table(tree, r.dynkin->p, N + 1, N + 1, 1)}};
  }
  if (r.radner) doc["radner"] = adapted_table(tree, r.radner->q, 0, N);
  if (r.multipliers) doc["multipliers"] = adapted_table(tree, r.multipliers->g, 1, N);
  if (!r.residuals.empty()) {
    json res = json::object();
    for (const auto& [k, v] : r.residuals) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite residual '" + k + "'");
      res[k] = v;
    }
    doc["residuals"] = std::move(res);
  }
  if (r.constants) doc["constants"] = constants_to_json(*r.constants);
  if (r.certificate) doc["certificate"] = vector_json(Eigen::Map<const Vector>(r.certificate->data(),
                                                                               static_cast<Eigen::Index>(r.certificate->size())));
  json prov = {{"tool_version", r.provenance.tool_version},
               {"tolerances",
                {{"membership", r.provenance.membership_tolerance},
                 {"certification", r.provenance.certification_tolerance}}}};
  if (r.provenance.seed) prov["seed"] = *r.provenance.seed;
  doc["provenance"] = std::move(prov);
  return doc;
}

ResultDocument load_results(const json& doc, const ScenarioTree& tree) {
  if (!doc.is_object()) throw schema_error("", "result document must be a JSON object");
  const json& version = require(doc, "schema_version", "");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw schema_error("schema_version", "unsupported version");
  }
  const json& ids = require(doc, "nodes", "");
  if (!ids.is_array() || ids.size() != tree.size()) throw schema_error("nodes", "node list does not match the model");
  // order[i] = position of tree node i in the document arrays.
  std::vector<int> order(tree.size(), -1);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (!ids[r].is_string()) throw schema_error("nodes[" + std::to_string(r) + "]", "expected a string");
    auto i = tree.find(ids[r].get<std::string>());
    if (!i || order[*i] != -1) throw schema_error("nodes[" + std::to_string(r) + "]", "unknown or repeated node id");
    order[*i] = static_cast<int>(r);
  }
  const int N = tree.horizon();
  ResultDocument r;
  r.model_name = doc.value("model", std::string());
  r.status = doc.value("status", std::string());
  r.label = doc.value("label", std::string());
  if (doc.contains("path")) {
    r.path = zero_path(tree);
    read_table(doc["path"], "path", tree, order, r.path->x, 0, N);
  }
  if (doc.contains("dynkin")) {
    const json& d = doc["dynkin"];
    if (!d.is_object()) throw schema_error("dynkin", "expected an object");
    r.dynkin = zero_dynkin(tree);
    read_table(require(d, "p", "dynkin"), "dynkin.p", tree, order, r.dynkin->p, 1, N);
    read_table(require(d, "p_terminal", "dynkin"), "dynkin.p_terminal", tree, order, r.dynkin->p, N + 1, N + 1, 1);
  }
  if (doc.contains("radner")) {
    r.radner = zero_radner(tree);
    read_table(doc["radner"], "radner", tree, order, r.radner->q, 0, N);
  }
  if (doc.contains("multipliers")) {
    Multipliers g;
    g.g.push_back(zero_adapted(tree, 0));
    for (int t = 1; t <= N; ++t) g.g.push_back(zero_adapted(tree, t));
    read_table(doc["multipliers"], "multipliers", tree, order, g.g, 1, N);
    r.multipliers = std::move(g);
  }
  if (doc.contains("residuals")) {
    const json& res = doc["residuals"];
    if (!res.is_object()) throw schema_error("residuals", "expected an object");
    for (auto it = res.begin(); it != res.end(); ++it) r.residuals[it.key()] = number_at(*it, "residuals." + it.key());
  }
  if (doc.contains("constants")) {
    const json& c = doc["constants"];
    GrowthConstants gc;
    auto list = [&](const char* key, std::size_t pad) {
      std::vector<double> v(pad, 0.0);
      Vector x = vector_at(require(c, key, "constants"), std::string("constants.") + key);
      for (Eigen::Index i = 0; i < x.size(); ++i) v.push_back(x(i));
      return v;
    };
    gc.M = list("M", 1);
    gc.gamma = list("gamma", 1);
    gc.C = list("C", 1);
    gc.C_cum = list("C_cum", 1);
    gc.M_cum = list("M_cum", 0);
    gc.delta = number_at(require(c, "delta", "constants"), "constants.delta");
    gc.D = number_at(require(c, "D", "constants"), "constants.D");
    gc.dim = c.value("dim", tree.dim());
    gc.horizon = c.value("horizon", N);
    r.constants = std::move(gc);
  }
  if (doc.contains("certificate")) {
    Vector v = vector_at(doc["certificate"], "certificate");
    r.certificate = std::vector<double>(v.data(), v.data() + v.size());
  }
  if (doc.contains("provenance")) {
    const json& p = doc["provenance"];
    r.provenance.tool_version = p.value("tool_version", std::string());
    if (p.contains("seed")) r.provenance.seed = p["seed"].get<std::uint64_t>();
    if (p.contains("tolerances")) {
      r.provenance.membership_tolerance = p["tolerances"].value("membership", kMembershipTolerance);
      r.provenance.certification_tolerance = p["tolerances"].value("certification", kCertificationTolerance);
    }
  }
  return r;
}

}  // namespace vng
