#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace twinpurify {

/// Invalid input, configuration, or I/O. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values, divergence, or iteration caps exceeded. Exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningSink = std::function<void(const std::string&)>;

inline WarningSink& warning_sink() {
  static WarningSink sink = [](const std::string& msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(const std::string& msg) {
  if (warning_sink()) warning_sink()(msg);
}

/// Replaces the warning sink for the lifetime of the guard.
class ScopedWarningSink {
 public:
  explicit ScopedWarningSink(WarningSink sink)
      : previous_(std::exchange(warning_sink(), std::move(sink))) {}
  ~ScopedWarningSink() { warning_sink() = std::move(previous_); }
  ScopedWarningSink(const ScopedWarningSink&) = delete;
  ScopedWarningSink& operator=(const ScopedWarningSink&) = delete;

 private:
  WarningSink previous_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ValidationError(msg);
}

}  // namespace twinpurify
