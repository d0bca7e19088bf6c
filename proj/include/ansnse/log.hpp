#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <utility>

namespace ansnse::log {

using Sink = std::function<void(const std::string&)>;

namespace detail {
inline std::mutex& mutex() {
  static std::mutex m;
  return m;
}
inline Sink& sink() {
  static Sink s = [](const std::string& msg) { std::clog << "warning: " << msg << '\n'; };
  return s;
}
}  // namespace detail

/// Replaces the warning sink, returning the previous one.
inline Sink set_sink(Sink sink) {
  std::lock_guard lock(detail::mutex());
  return std::exchange(detail::sink(), std::move(sink));
}

inline void warn(const std::string& msg) {
  std::lock_guard lock(detail::mutex());
  if (detail::sink()) detail::sink()(msg);
}

/// Restores the previous sink on scope exit.
class ScopedSink {
 public:
  explicit ScopedSink(Sink sink) : previous_(set_sink(std::move(sink))) {}
  ScopedSink(const ScopedSink&) = delete;
  ScopedSink& operator=(const ScopedSink&) = delete;
  ~ScopedSink() { set_sink(std::move(previous_)); }

 private:
  Sink previous_;
};

}  // namespace ansnse::log
