#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "engel/report.hpp"

namespace {

struct Options {
  std::string manifest;
  std::string out;
  std::string report;
  std::string format = "json";
  std::string task;
  std::optional<int> grid;
  std::optional<int> random;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol_rank;
  std::optional<double> tol_zero;
  std::optional<double> fd_step;
};

void shared_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("manifest", o.manifest, "manifest file")->required();
  cmd->add_option("--samples-grid", o.grid, "grid resolution per coordinate")->check(CLI::Range(2, 1000));
  cmd->add_option("--samples-random", o.random, "additional random samples")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", o.seed, "random sample seed (default 0)");
  cmd->add_option("--tol-rank", o.tol_rank, "singular-value ratio for numerical rank")->check(CLI::PositiveNumber);
  cmd->add_option("--tol-zero", o.tol_zero, "relative threshold for identically-zero checks")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--fd-step", o.fd_step, "finite-difference step of the bracket oracle")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--report", o.report, "write the report here instead of stdout");
  cmd->add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "text"}));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Engel, even-contact and contact structure verification"};
  app.require_subcommand(1);
  Options o;
  auto* verify = app.add_subcommand("verify", "run verify and identities tasks");
  auto* invariant = app.add_subcommand("invariant", "run invariant tasks");
  auto* construct = app.add_subcommand("construct", "run construct tasks and write the frame as a manifest");
  auto* run = app.add_subcommand("run", "run every task");
  for (auto* c : {verify, invariant, construct, run}) shared_flags(c, o);
  construct->add_option("--out", o.out, "output manifest")->required();
  construct->add_option("--task", o.task, "construct task to write (default: the first)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  engel::Manifest m;
  try {
    m = engel::parse_manifest(slurp(o.manifest));
  } catch (const std::exception& e) {
    std::cerr << o.manifest << ": " << e.what() << "\n";
    return 2;
  }
  if (o.grid) m.plan.grid = {*o.grid};
  if (o.random) m.plan.random = *o.random;
  if (o.seed) m.plan.seed = *o.seed;
  if (o.tol_rank) m.tol.rank = *o.tol_rank;
  if (o.tol_zero) m.tol.zero = *o.tol_zero;
  if (o.fd_step) m.tol.fd_step = *o.fd_step;

  std::set<engel::TaskKind> kinds;
  if (verify->parsed()) kinds = {engel::TaskKind::Verify, engel::TaskKind::Identities};
  if (invariant->parsed()) kinds = {engel::TaskKind::Invariant};
  if (construct->parsed()) kinds = {engel::TaskKind::Construct};

  engel::Report report = engel::run_tasks(m, kinds);
  std::string text =
      engel::emit_report(report, o.format == "text" ? engel::ReportFormat::Text : engel::ReportFormat::Json);
  if (o.report.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(o.report, std::ios::binary);
    if (!(out << text)) {
      std::cerr << "cannot write " << o.report << "\n";
      return 2;
    }
  }

  if (construct->parsed()) {
    const engel::TaskRecord* pick = nullptr;
    for (const auto& t : report.tasks)
      if (o.task.empty() || t.id == o.task) {
        pick = &t;
        break;
      }
    if (!pick) {
      std::cerr << (o.task.empty() ? "manifest has no construct task" : "no construct task '" + o.task + "'") << "\n";
      return 2;
    }
    if (pick->constructed) {
      std::ofstream out(o.out, std::ios::binary);
      if (!(out << engel::frame_manifest(*pick->constructed, pick->target, engel::plan_for(m.plan, *pick->constructed->chart()), m.tol))) {
        std::cerr << "cannot write " << o.out << "\n";
        return 2;
      }
    }
  }
  return engel::exit_code(report);
}
