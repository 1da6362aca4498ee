#pragma once

#include <stdexcept>
#include <string>

namespace nfqs {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flow scale output |s|^2 fell below the invertibility floor.
struct ScalePinch : Error {
  explicit ScalePinch(const std::string& msg) : Error("ScalePinch: " + msg) {}
};

// A state component left the finite range during ODE integration or training.
struct NonFinite : Error {
  explicit NonFinite(const std::string& msg) : Error("NonFinite: " + msg) {}
};

struct CoincidentParticles : Error {
  explicit CoincidentParticles(const std::string& msg)
      : Error("CoincidentParticles: " + msg) {}
};

struct InitialStateNotReached : Error {
  explicit InitialStateNotReached(const std::string& msg)
      : Error("InitialStateNotReached: " + msg) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg)
      : Error("DimensionMismatch: " + msg) {}
};

// Bad experiment configuration; the CLI maps this to exit code 2.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("ConfigError: " + msg) {}
};

}  // namespace nfqs
