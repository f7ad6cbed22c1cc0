#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "engel/error.hpp"
#include "engel/extension.hpp"

namespace engel {

/// Malformed or inconsistent manifest; `line` is 1-based.
class ManifestError : public Error {
public:
  ManifestError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

struct ContactDecl {
  std::optional<KForm> form;
  std::optional<ContactFrame> frame;
};

struct EvenContactDecl {
  KForm form;
};

struct EngelPairDecl {
  EngelPair pair;
};

struct EngelFrameDecl {
  Distribution2 frame;
};

struct ProlongationDecl {
  ContactFrame base;
  int n = 1;
};

/// Single extension, or a family when `s_grid` is non-empty: a, b (and g)
/// may then depend on the parameter `s`, and `family_n` gives n per slice.
struct ExtensionDecl {
  ExtensionSpec spec;
  std::vector<double> s_grid;
  std::vector<int> family_n;
};

using StructureBody =
    std::variant<ContactDecl, EvenContactDecl, EngelPairDecl, EngelFrameDecl, ProlongationDecl, ExtensionDecl>;

struct StructureDecl {
  std::string name;
  std::string kind;
  std::size_t line = 0;
  StructureBody body;
};

enum class TaskKind { Verify, Invariant, Construct, Identities };

std::string to_string(TaskKind k);

struct TaskDecl {
  std::string name;
  TaskKind kind = TaskKind::Verify;
  std::string target;
  std::size_t line = 0;
  std::string invariant;              // invariant tasks only
  std::optional<std::string> expect;  // integer, number or text
  std::optional<double> expect_max;   // numeric witness upper bound
  double tolerance = 1e-8;            // for numeric `expect`
};

struct Manifest {
  std::string text;
  ChartPtr chart;
  SamplePlan plan;
  Tolerances tol;
  std::map<std::string, ScalarExpr> expressions;
  std::map<std::string, VectorField> fields;
  std::map<std::string, KForm> forms;
  std::vector<StructureDecl> structures;
  std::vector<TaskDecl> tasks;

  const StructureDecl& structure(const std::string& name) const;
};

/// Line-oriented manifest:
///
///   [chart]            x = interval(-1, 1)   theta = circle(2*pi)
///   [sampling]         grid = 5   random = 200   seed = 0
///   [tolerances]       rank, nv, zero, nonzero, proj, period, fd_step
///   [expressions]      name = expression
///   [fields]           name = (c1, c2, c3[, c4])
///   [forms]            name = 1-form in dx, dy, ...
///   [structure NAME]   kind = contact | even_contact | engel_pair | engel_frame | prolongation | extension
///   [task NAME]        kind = verify | invariant | construct | identities, target = NAME
///
/// '#' starts a comment. Names must be defined before use.
Manifest parse_manifest(const std::string& text);

/// Same sampling plan adapted to another chart (per-axis grids are extended
/// with their last entry).
SamplePlan plan_for(const SamplePlan& plan, const Chart& chart);

/// Manifest text for an Engel frame, carrying over sampling and tolerances.
std::string frame_manifest(const Distribution2& d, const std::string& name, const SamplePlan& plan,
                           const Tolerances& tol);

}  // namespace engel
