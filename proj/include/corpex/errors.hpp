#pragma once

#include <stdexcept>

namespace corpex {

// Error categories; each maps to a distinct CLI exit code so that scripted
// pipelines can tell a bad config from bad data or a dead endpoint.

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NetworkError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitTraining = 4;
inline constexpr int kExitNetwork = 5;

}  // namespace corpex
