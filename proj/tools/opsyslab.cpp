// opsyslab command line front end.

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "opsyslab/errors.hpp"
#include "opsyslab/run.hpp"

using namespace opsyslab;

namespace {

struct Options {
  std::vector<std::string> files;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::optional<double> tol_gap, tol_psd;
  bool table = false;
  // repro
  std::string id;
  // korovkin
  std::vector<int> n;
  int grid = 1001;
  std::vector<std::string> tests;
};

std::string read_source(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Parses one file for `kind`; CLI overrides are applied on top of the document.
Report load_and_run(const std::string& path, ProblemKind kind, const Options& o, std::size_t index) {
  ProblemDocument doc;
  try {
    doc = parse_problem(read_source(path));
  } catch (const InputError& e) {
    Report r = failure_report(path + ": " + e.what(), kExitInput);
    return r;
  }
  if (doc.kind != kind) {
    return failure_report(path + ": /kind: document is '" + to_string(doc.kind) + "' but the command is '" +
                              command_name(kind) + "'",
                          kExitInput);
  }
  if (!doc.seed && o.seed) doc.seed = *o.seed + index;
  if (o.tol_gap) doc.tol_gap = o.tol_gap;
  if (o.tol_psd) doc.tol_psd = o.tol_psd;
  Report r = run(doc);
  r.body["file"] = path;
  return r;
}

ProblemDocument inline_document(ProblemKind kind, const Options& o) {
  json payload = json::object();
  if (kind == ProblemKind::Repro) {
    if (o.id.empty()) throw InputError("--id: required (one of the repro ids)");
    payload["id"] = o.id;
  } else {
    if (o.n.empty()) throw InputError("--n: required");
    payload["n"] = o.n.size() == 1 ? json(o.n[0]) : json(o.n);
    payload["grid_size"] = o.grid;
    if (!o.tests.empty()) payload["tests"] = o.tests;
  }
  json doc = {{"schema", kSchema}, {"kind", to_string(kind)}, {"payload", payload}};
  if (o.seed) doc["seed"] = *o.seed;
  if (o.tol_gap || o.tol_psd) {
    doc["tolerances"] = json::object();
    if (o.tol_gap) doc["tolerances"]["gap"] = *o.tol_gap;
    if (o.tol_psd) doc["tolerances"]["psd"] = *o.tol_psd;
  }
  return parse_problem(doc);
}

int execute(ProblemKind kind, const Options& o) {
  std::vector<Report> reports;
  if (o.files.empty() && (kind == ProblemKind::Repro || kind == ProblemKind::Korovkin)) {
    try {
      reports.push_back(run(inline_document(kind, o)));
    } catch (const InputError& e) {
      reports.push_back(failure_report(e.what(), kExitInput));
    }
  } else {
    const std::vector<std::string> files = o.files.empty() ? std::vector<std::string>{"-"} : o.files;
    reports.resize(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i; (i = next++) < files.size();) reports[i] = load_and_run(files[i], kind, o, i);
    };
    const int workers = std::clamp(o.jobs, 1, int(files.size()));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }

  int code = kExitOk;
  for (const auto& r : reports) code = std::max(code, r.exit_code);
  json out;
  if (reports.size() == 1) {
    out = reports[0].body;
  } else {
    out = {{"schema", kSchema}, {"reports", json::array()}};
    for (const auto& r : reports) out["reports"].push_back(r.body);
  }
  if (o.table)
    std::cout << render_table(out);
  else
    std::cout << out.dump(2) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator system lab: unperforation, extension intervals, purity and related checks"};
  app.require_subcommand(1);
  Options o;

  const std::vector<ProblemKind> kinds = {
      ProblemKind::Unperforated, ProblemKind::ExtensionInterval, ProblemKind::Uep,
      ProblemKind::Purity,       ProblemKind::Decompose,         ProblemKind::Riesz,
      ProblemKind::Boundary,     ProblemKind::Nosp,              ProblemKind::Korovkin,
      ProblemKind::Repro};
  std::vector<std::pair<CLI::App*, ProblemKind>> subs;
  for (ProblemKind k : kinds) {
    CLI::App* sub = app.add_subcommand(command_name(k));
    sub->add_option("--file", o.files, "problem document (repeatable; '-' reads stdin)");
    sub->add_option("--seed", o.seed, "seed for documents without one (batch: seed + file index)");
    sub->add_option("--jobs", o.jobs, "documents solved concurrently")->check(CLI::Range(1, 256));
    sub->add_option("--tol-gap", o.tol_gap, "SDP duality gap tolerance")->check(CLI::Range(1e-14, 0.5));
    sub->add_option("--tol-psd", o.tol_psd, "PSD tolerance")->check(CLI::Range(1e-14, 0.5));
    auto* json_flag = sub->add_flag("--json", "JSON report (default)");
    sub->add_flag("--table", o.table, "plain-text report")->excludes(json_flag);
    if (k == ProblemKind::Repro) {
      std::string ids;
      for (const auto& id : repro_ids()) ids += (ids.empty() ? "" : ", ") + id;
      sub->add_option("--id", o.id, "example id: " + ids);
    }
    if (k == ProblemKind::Korovkin) {
      sub->add_option("--n", o.n, "Bernstein degree (repeatable)")->check(CLI::PositiveNumber);
      sub->add_option("--grid", o.grid, "grid points on [0, 1]")->check(CLI::Range(2, 10000000));
      sub->add_option("--test", o.tests, "extra test function (repeatable)");
    }
    subs.emplace_back(sub, k);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }
  for (const auto& [sub, k] : subs)
    if (sub->parsed()) return execute(k, o);
  return kExitInput;
}
