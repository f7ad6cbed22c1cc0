#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "engel/manifest.hpp"

namespace engel {

using ordered_json = nlohmann::ordered_json;

struct TaskRecord {
  std::string id;
  std::string kind;
  std::string target;
  std::string verdict;  // pass | fail | match | mismatch | done | error
  ordered_json detail = ordered_json::object();
  std::optional<Distribution2> constructed;

  bool ok() const { return verdict == "pass" || verdict == "match" || verdict == "done"; }
};

struct Report {
  std::string version;
  std::string manifest_digest;
  std::vector<TaskRecord> tasks;
  double duration_ms = 0.0;

  bool ok() const;
};

/// Hex SHA-256 of the manifest text.
std::string manifest_digest(const std::string& text);

/// Runs the tasks in declared order. An empty `kinds` runs every task.
/// Task-level failures are recorded, never thrown.
Report run_tasks(const Manifest& manifest, const std::set<TaskKind>& kinds = {});

enum class ReportFormat { Json, Text };

std::string emit_report(const Report& report, ReportFormat format);

/// 0 when every task passed or matched, 1 otherwise.
int exit_code(const Report& report);

}  // namespace engel
