#pragma once

// JSON problem documents. Complex entries are [re, im] pairs (plain numbers
// are accepted as real), matrices are row-major nested arrays, subspaces are
// arrays of matrices and states are density matrices.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "opsyslab/hermitian.hpp"
#include "opsyslab/sdp.hpp"

namespace opsyslab {

using json = nlohmann::json;

inline constexpr const char* kSchema = "opsyslab/1";

enum class ProblemKind {
  Unperforated,
  ExtensionInterval,
  Uep,
  Purity,
  Decompose,
  Riesz,
  Boundary,
  Nosp,
  Korovkin,
  Repro,
};

std::string to_string(ProblemKind k);
/// Throws InputError for unknown names.
ProblemKind problem_kind_from_string(const std::string& s);
/// CLI command for a kind ("check-unperforated" for unperforated).
std::string command_name(ProblemKind k);

struct ProblemDocument {
  ProblemKind kind = ProblemKind::Repro;
  json payload = json::object();  // normalized: matrices as [re, im] entries
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_gap;
  std::optional<double> tol_psd;

  SdpConfig sdp_config() const;
  friend bool operator==(const ProblemDocument&, const ProblemDocument&) = default;
};

/// Parses and validates a document; error messages start with the JSON path
/// of the offending field (e.g. "/payload/a/0/1"). Throws InputError.
ProblemDocument parse_problem(const std::string& text);
ProblemDocument parse_problem(const json& doc);
inline ProblemDocument parse_problem(const char* text) { return parse_problem(std::string(text)); }

/// Validates and normalizes a payload for the given kind. Throws InputError.
json normalize_payload(ProblemKind kind, const json& payload);

json serialize_problem(const ProblemDocument& doc);

// Matrix encoding.
json matrix_to_json(const MatrixXc& m);
json matrix_to_json(const Hermitian& h);
json matrices_to_json(const std::vector<Hermitian>& hs);

/// Rectangular complex matrix at `path`. Throws InputError naming the path.
MatrixXc matrix_from_json(const json& j, const std::string& path);
Hermitian hermitian_from_json(const json& j, const std::string& path);
std::vector<Hermitian> hermitians_from_json(const json& j, const std::string& path);

}  // namespace opsyslab
