#include "opsyslab/problem.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace opsyslab {

namespace {

constexpr std::pair<ProblemKind, const char*> kKindNames[] = {
    {ProblemKind::Unperforated, "unperforated"},
    {ProblemKind::ExtensionInterval, "extension-interval"},
    {ProblemKind::Uep, "uep"},
    {ProblemKind::Purity, "purity"},
    {ProblemKind::Decompose, "decompose"},
    {ProblemKind::Riesz, "riesz"},
    {ProblemKind::Boundary, "boundary"},
    {ProblemKind::Nosp, "nosp"},
    {ProblemKind::Korovkin, "korovkin"},
    {ProblemKind::Repro, "repro"},
};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw InputError((path.empty() ? std::string("/") : path) + ": " + what);
}

const char* type_name(const json& j) { return j.type_name(); }

double number_at(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, std::string("expected a number, got ") + type_name(j));
  return j.get<double>();
}

cplx entry_at(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2)
    return {number_at(j[0], path + "/0"), number_at(j[1], path + "/1")};
  fail(path, std::string("expected a number or [re, im], got ") + type_name(j));
}

// Field kinds of payload schemas.
enum class F {
  Herm,         // hermitian matrix
  HermList,     // non-empty list of hermitian matrices
  HermListAny,  // possibly empty list
  Algebra,      // "full" | "diagonal" | generator list
  Map,          // "identity" | "diagonal" | {kraus} | {choi, dim_in, dim_out}
  Int1,         // integer ≥ 1
  Int0,         // integer ≥ 0
  Int2,         // integer ≥ 2
  IntOrList,    // integer ≥ 1 or non-empty list of them
  Pos,          // positive number
  Bool,
  Str,
  StrList,
};

struct FieldSpec {
  const char* name;
  F type;
  bool required;
};

const std::map<ProblemKind, std::vector<FieldSpec>>& schemas() {
  static const std::map<ProblemKind, std::vector<FieldSpec>> s = {
      {ProblemKind::Unperforated,
       {{"S", F::HermList, true},
        {"T", F::HermList, true},
        {"a", F::Herm, false},
        {"b", F::Herm, false},
        {"trials", F::Int1, false},
        {"shortcuts", F::Bool, false}}},
      {ProblemKind::ExtensionInterval,
       {{"S", F::HermList, true},
        {"state", F::Herm, true},
        {"t", F::Herm, true},
        {"ambient", F::Algebra, false}}},
      {ProblemKind::Uep,
       {{"S", F::HermList, true}, {"state", F::Herm, true}, {"ambient", F::Algebra, false}}},
      {ProblemKind::Purity, {{"state", F::Herm, true}, {"algebra", F::Algebra, false}}},
      {ProblemKind::Decompose, {{"state", F::Herm, true}, {"algebra", F::Algebra, false}}},
      {ProblemKind::Riesz,
       {{"B", F::Algebra, true},
        {"a", F::Herm, true},
        {"lowers", F::HermListAny, false},
        {"uppers", F::HermListAny, false},
        {"epsilon", F::Pos, false},
        {"length", F::Int1, false},
        {"extreme_bounds", F::Int0, false}}},
      {ProblemKind::Boundary, {{"S", F::HermList, true}, {"algebra", F::Algebra, false}}},
      {ProblemKind::Nosp,
       {{"algebra", F::Algebra, true}, {"pi", F::Map, true}, {"Pi", F::Map, true}, {"n", F::Int1, false}}},
      {ProblemKind::Korovkin,
       {{"n", F::IntOrList, true}, {"grid_size", F::Int2, false}, {"tests", F::StrList, false}}},
      {ProblemKind::Repro, {{"id", F::Str, true}}},
  };
  return s;
}

std::int64_t int_at(const json& j, const std::string& path, std::int64_t min) {
  if (!j.is_number_integer()) fail(path, std::string("expected an integer, got ") + type_name(j));
  const auto v = j.get<std::int64_t>();
  if (v < min) fail(path, "must be at least " + std::to_string(min));
  return v;
}

// Normalizes one field and records hermitian sizes that must agree.
class Normalizer {
 public:
  json field(const json& j, F type, const std::string& path) {
    switch (type) {
      case F::Herm: return herm(j, path);
      case F::HermList: return herm_list(j, path, false);
      case F::HermListAny: return herm_list(j, path, true);
      case F::Algebra:
        if (j.is_string()) {
          const auto s = j.get<std::string>();
          if (s != "full" && s != "diagonal")
            fail(path, "expected \"full\", \"diagonal\" or a list of generators");
          return j;
        }
        return herm_list(j, path, false);
      case F::Map: return map(j, path);
      case F::Int1: return int_at(j, path, 1);
      case F::Int0: return int_at(j, path, 0);
      case F::Int2: return int_at(j, path, 2);
      case F::IntOrList: {
        if (!j.is_array()) return int_at(j, path, 1);
        if (j.empty()) fail(path, "list must not be empty");
        json out = json::array();
        for (std::size_t i = 0; i < j.size(); ++i)
          out.push_back(int_at(j[i], path + "/" + std::to_string(i), 1));
        return out;
      }
      case F::Pos: {
        const double v = number_at(j, path);
        if (!(v > 0)) fail(path, "must be positive");
        return v;
      }
      case F::Bool:
        if (!j.is_boolean()) fail(path, std::string("expected a boolean, got ") + type_name(j));
        return j;
      case F::Str:
        if (!j.is_string()) fail(path, std::string("expected a string, got ") + type_name(j));
        return j;
      case F::StrList: {
        if (!j.is_array()) fail(path, std::string("expected a list of strings, got ") + type_name(j));
        for (std::size_t i = 0; i < j.size(); ++i)
          if (!j[i].is_string()) fail(path + "/" + std::to_string(i), "expected a string");
        return j;
      }
    }
    fail(path, "unsupported field");
  }

  std::optional<Index> dim;

 private:
  json herm(const json& j, const std::string& path) {
    const Hermitian h = hermitian_from_json(j, path);
    if (dim && *dim != h.dim())
      fail(path, "matrix is " + std::to_string(h.dim()) + "x" + std::to_string(h.dim()) +
                     " but the document uses " + std::to_string(*dim) + "x" +
                     std::to_string(*dim));
    dim = h.dim();
    return matrix_to_json(h);
  }

  json herm_list(const json& j, const std::string& path, bool allow_empty) {
    if (!j.is_array()) fail(path, std::string("expected a list of matrices, got ") + type_name(j));
    if (j.empty() && !allow_empty) fail(path, "list of matrices must not be empty");
    json out = json::array();
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(herm(j[i], path + "/" + std::to_string(i)));
    return out;
  }

  // Maps may change size, so their matrices do not join the size check.
  static json map(const json& j, const std::string& path) {
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      if (s != "identity" && s != "diagonal")
        fail(path, "expected \"identity\", \"diagonal\", {\"kraus\": ...} or {\"choi\": ...}");
      return j;
    }
    if (!j.is_object()) fail(path, std::string("expected a map description, got ") + type_name(j));
    json out = json::object();
    for (const auto& [key, val] : j.items()) {
      const std::string p = path + "/" + key;
      if (key == "kraus") {
        if (!val.is_array() || val.empty()) fail(p, "expected a non-empty list of matrices");
        json ks = json::array();
        for (std::size_t i = 0; i < val.size(); ++i)
          ks.push_back(matrix_to_json(matrix_from_json(val[i], p + "/" + std::to_string(i))));
        out[key] = ks;
      } else if (key == "choi") {
        out[key] = matrix_to_json(hermitian_from_json(val, p));
      } else if (key == "dim_in" || key == "dim_out") {
        out[key] = int_at(val, p, 1);
      } else if (key == "unital") {
        if (!val.is_boolean()) fail(p, "expected a boolean");
        out[key] = val;
      } else {
        fail(p, "unknown field in map description");
      }
    }
    const bool kraus = out.contains("kraus"), choi = out.contains("choi");
    if (kraus == choi) fail(path, "give exactly one of \"kraus\" or \"choi\"");
    if (choi && (!out.contains("dim_in") || !out.contains("dim_out")))
      fail(path, "a Choi description needs dim_in and dim_out");
    return out;
  }
};

void check_kind_rules(ProblemKind kind, const json& p) {
  if (kind == ProblemKind::Unperforated) {
    const bool ab = p.contains("a") || p.contains("b");
    if (ab && !(p.contains("a") && p.contains("b")))
      fail("/payload", "give both a and b, or neither");
    if (!ab && !p.contains("trials")) fail("/payload", "give a and b, or trials for a search");
  }
  if (kind == ProblemKind::Nosp && !p.contains("n") && p.at("algebra").is_string())
    fail("/payload/n", "required when the algebra is given by name");
}

}  // namespace

std::string to_string(ProblemKind k) {
  for (const auto& [kind, name] : kKindNames)
    if (kind == k) return name;
  return "unknown";
}

ProblemKind problem_kind_from_string(const std::string& s) {
  for (const auto& [kind, name] : kKindNames)
    if (s == name) return kind;
  throw InputError("unknown problem kind '" + s + "'");
}

std::string command_name(ProblemKind k) {
  return k == ProblemKind::Unperforated ? "check-unperforated" : to_string(k);
}

SdpConfig ProblemDocument::sdp_config() const {
  SdpConfig c;
  if (tol_gap) c.gap_tol = *tol_gap;
  if (tol_psd) c.psd_slack = *tol_psd;
  return c;
}

json matrix_to_json(const MatrixXc& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

json matrix_to_json(const Hermitian& h) { return matrix_to_json(h.matrix()); }

json matrices_to_json(const std::vector<Hermitian>& hs) {
  json out = json::array();
  for (const auto& h : hs) out.push_back(matrix_to_json(h));
  return out;
}

MatrixXc matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, std::string("expected a matrix (list of rows), got ") + type_name(j));
  if (j.empty()) fail(path, "matrix must have at least one row");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  MatrixXc m(Index(j.size()), Index(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "/" + std::to_string(r);
    if (!j[r].is_array()) fail(rp, std::string("expected a row (list of entries), got ") + type_name(j[r]));
    if (j[r].empty()) fail(rp, "row must not be empty");
    if (j[r].size() != cols)
      fail(rp, "row has " + std::to_string(j[r].size()) + " entries, expected " + std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c)
      m(Index(r), Index(c)) = entry_at(j[r][c], rp + "/" + std::to_string(c));
  }
  if (!m.allFinite()) fail(path, "matrix contains non-finite entries");
  return m;
}

Hermitian hermitian_from_json(const json& j, const std::string& path) {
  MatrixXc m = matrix_from_json(j, path);
  if (m.rows() != m.cols())
    fail(path, "matrix must be square, got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  if (m.rows() > kMaxEigenDim) fail(path, "matrix is larger than " + std::to_string(kMaxEigenDim));
  try {
    return Hermitian(std::move(m));
  } catch (const InputError& e) {
    fail(path, e.what());
  }
}

std::vector<Hermitian> hermitians_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, std::string("expected a list of matrices, got ") + type_name(j));
  std::vector<Hermitian> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(hermitian_from_json(j[i], path + "/" + std::to_string(i)));
  return out;
}

json normalize_payload(ProblemKind kind, const json& payload) {
  if (!payload.is_object()) fail("/payload", std::string("expected an object, got ") + type_name(payload));
  const auto& spec = schemas().at(kind);
  std::set<std::string> known;
  for (const auto& f : spec) known.insert(f.name);
  for (const auto& [key, val] : payload.items())
    if (!known.count(key)) fail("/payload/" + key, "unknown field for kind " + to_string(kind));
  Normalizer norm;
  json out = json::object();
  for (const auto& f : spec) {
    const std::string path = std::string("/payload/") + f.name;
    if (!payload.contains(f.name)) {
      if (f.required) fail(path, "required field is missing");
      continue;
    }
    out[f.name] = norm.field(payload.at(f.name), f.type, path);
  }
  check_kind_rules(kind, out);
  return out;
}

ProblemDocument parse_problem(const json& doc) {
  if (!doc.is_object()) fail("", std::string("expected a JSON object, got ") + type_name(doc));
  for (const auto& [key, val] : doc.items())
    if (key != "kind" && key != "payload" && key != "seed" && key != "tolerances" && key != "schema")
      fail("/" + key, "unknown top-level field");
  if (doc.contains("schema") && doc.at("schema") != kSchema)
    fail("/schema", std::string("unsupported schema, expected \"") + kSchema + "\"");
  if (!doc.contains("kind")) fail("/kind", "required field is missing");
  if (!doc.at("kind").is_string()) fail("/kind", "expected a string");
  ProblemDocument out;
  try {
    out.kind = problem_kind_from_string(doc.at("kind").get<std::string>());
  } catch (const InputError& e) {
    fail("/kind", e.what());
  }
  out.payload = normalize_payload(out.kind, doc.contains("payload") ? doc.at("payload") : json::object());
  if (doc.contains("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      fail("/seed", "expected a nonnegative integer");
    out.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("tolerances")) {
    const json& t = doc.at("tolerances");
    if (!t.is_object()) fail("/tolerances", "expected an object");
    for (const auto& [key, val] : t.items()) {
      const std::string p = "/tolerances/" + key;
      if (key != "gap" && key != "psd") fail(p, "unknown tolerance (expected gap or psd)");
      const double v = number_at(val, p);
      if (!(v > 0 && v < 1)) fail(p, "must lie in (0, 1)");
      (key == "gap" ? out.tol_gap : out.tol_psd) = v;
    }
  }
  return out;
}

ProblemDocument parse_problem(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("/: invalid JSON: ") + e.what());
  }
  return parse_problem(doc);
}

json serialize_problem(const ProblemDocument& doc) {
  json out = {{"schema", kSchema}, {"kind", to_string(doc.kind)}, {"payload", doc.payload}};
  if (doc.seed) out["seed"] = *doc.seed;
  if (doc.tol_gap || doc.tol_psd) {
    json t = json::object();
    if (doc.tol_gap) t["gap"] = *doc.tol_gap;
    if (doc.tol_psd) t["psd"] = *doc.tol_psd;
    out["tolerances"] = t;
  }
  return out;
}

}  // namespace opsyslab
