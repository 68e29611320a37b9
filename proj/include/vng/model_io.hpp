#pragma once

#include "vng/model.hpp"
#include "vng/paths.hpp"
#include "vng/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace vng {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolVersion = "0.3.1";

/// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

/// Schema, tree and structural checks only (assumptions are not enforced),
/// free-disposal closure applied. Throws ModelError.
Model parse_model(const nlohmann::json& doc);

/// parse_model plus (G.1)-(G.3) and the initial-state bounds.
struct LoadedModel {
  Model model;
  GrowthConstants constants;
};

LoadedModel load_model(const nlohmann::json& doc);

nlohmann::json model_to_json(const Model& model);

/// Adds (e_i, 0) for every i and, for every generator, the variants with any
/// nonempty subset of output coordinates set to zero.
ConeSpec free_disposal_closure(const ConeSpec& cone);

struct ExampleParams {
  int dim = 2;
  int horizon = 3;
  int branching = 2;
  int productive = 2;        // neumann: productive generators per node
  double input_low = 0.25;   // neumann: input coordinates grid range
  double input_high = 1.0;
  double gamma_low = 0.5;    // neumann: output floor range
  double gamma_high = 1.5;
  double output_spread = 1.0;  // neumann: b - gamma e in [0, spread]
  double cost = 0.01;        // currency: proportional transaction cost
  double return_low = 0.9;   // currency: gross return range
  double return_high = 1.25;
  bool stationary = false;
};

/// kind is "neumann" or "currency". Deterministic in (kind, params, seed);
/// all generated numbers are dyadic rationals. Throws std::invalid_argument.
nlohmann::json generate_example(std::string_view kind, const ExampleParams& params, std::uint64_t seed);

struct Provenance {
  std::string tool_version = std::string(kToolVersion);
  std::optional<std::uint64_t> seed;
  double membership_tolerance = kMembershipTolerance;
  double certification_tolerance = kCertificationTolerance;
};

/// Serialized solve/certify/convert output. Optional members are omitted
/// from the document when empty.
struct ResultDocument {
  std::string model_name;
  std::string status;
  std::string label;
  std::optional<PrimalPath> path;
  std::optional<DynkinDual> dynkin;
  std::optional<RadnerDual> radner;
  std::optional<Multipliers> multipliers;
  std::map<std::string, double> residuals;
  std::optional<GrowthConstants> constants;
  std::optional<std::vector<double>> certificate;
  Provenance provenance;
};

/// Throws std::invalid_argument on non-finite values.
nlohmann::json save_results(const ResultDocument& result, const ScenarioTree& tree);

/// Throws ModelError(schema) when the document does not match the tree.
ResultDocument load_results(const nlohmann::json& doc, const ScenarioTree& tree);

nlohmann::json constants_to_json(const GrowthConstants& gc);

}  // namespace vng
