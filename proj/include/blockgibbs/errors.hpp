#pragma once

#include <stdexcept>
#include <string>

namespace blockgibbs {

/// Base class for all library errors. Carries the module and operation that
/// raised it so CLI wrappers can emit machine-readable error lines.
class Error : public std::runtime_error {
public:
  Error(std::string module, std::string op, const std::string& message)
      : std::runtime_error(message), module_(std::move(module)), op_(std::move(op)) {}

  const std::string& module_name() const { return module_; }
  const std::string& op_name() const { return op_; }

private:
  std::string module_;
  std::string op_;
};

struct NotPositiveDefinite : Error {
  NotPositiveDefinite(const std::string& op, const std::string& msg)
      : Error("symmat", op, msg) {}
};

struct DowndateBrokePositivity : Error {
  explicit DowndateBrokePositivity(const std::string& msg)
      : Error("symmat", "rank_one_update", msg) {}
};

struct IndexAlreadyAssigned : Error {
  explicit IndexAlreadyAssigned(const std::string& msg)
      : Error("collapsed-model", "add_observation", msg) {}
};

struct IndexNotAssigned : Error {
  explicit IndexNotAssigned(const std::string& msg)
      : Error("collapsed-model", "remove_observation", msg) {}
};

struct EnumerationTooLarge : Error {
  EnumerationTooLarge(const std::string& op, const std::string& msg)
      : Error("sampler", op, msg) {}
};

struct DegenerateMarginal : Error {
  explicit DegenerateMarginal(const std::string& msg)
      : Error("latent-correlation", "pair_correlation", msg) {}
};

struct AllSplitsDegenerate : Error {
  explicit AllSplitsDegenerate(const std::string& msg)
      : Error("latent-correlation", "rate_lower_bound", msg) {}
};

struct EmptyTrace : Error {
  explicit EmptyTrace(const std::string& msg) : Error("diagnostics", "psm", msg) {}
};

struct DegenerateSeries : Error {
  explicit DegenerateSeries(const std::string& msg)
      : Error("diagnostics", "acf_binary", msg) {}
};

struct ConfigError : Error {
  ConfigError(const std::string& op, const std::string& msg)
      : Error("cli-harness", op, msg) {}
};

}  // namespace blockgibbs
