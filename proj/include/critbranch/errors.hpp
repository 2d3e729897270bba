#pragma once

#include <stdexcept>
#include <string>

namespace critbranch {

enum class Errc {
  DomainError,
  NonConvergence,
  NotIrreducible,
  NotCritical,
  StepSizeError,
  SingularStart,
  QuadratureError,
  FitError,
  Diverges,
  InsufficientReplicas,
  PopulationExplosion,
  DivisionByNegligible,
  ConfigError,
  TaskError,
  ReplayMismatch,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DomainError: return "DomainError";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::NotIrreducible: return "NotIrreducible";
    case Errc::NotCritical: return "NotCritical";
    case Errc::StepSizeError: return "StepSizeError";
    case Errc::SingularStart: return "SingularStart";
    case Errc::QuadratureError: return "QuadratureError";
    case Errc::FitError: return "FitError";
    case Errc::Diverges: return "Diverges";
    case Errc::InsufficientReplicas: return "InsufficientReplicas";
    case Errc::PopulationExplosion: return "PopulationExplosion";
    case Errc::DivisionByNegligible: return "DivisionByNegligible";
    case Errc::ConfigError: return "ConfigError";
    case Errc::TaskError: return "TaskError";
    case Errc::ReplayMismatch: return "ReplayMismatch";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace critbranch
