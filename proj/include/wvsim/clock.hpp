#pragma once

#include <chrono>
#include <cstdint>

namespace wvsim {

// Monotonic time source; injectable so tests control TTL and rate windows.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual uint64_t now_ms() const = 0;
};

class SteadyClock final : public Clock {
 public:
  uint64_t now_ms() const override {
    auto t = std::chrono::steady_clock::now().time_since_epoch();
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(t).count());
  }
};

class ScriptedClock final : public Clock {
 public:
  explicit ScriptedClock(uint64_t start_ms = 0) : now_(start_ms) {}
  uint64_t now_ms() const override { return now_; }
  void advance_ms(uint64_t delta) { now_ += delta; }
  void advance_s(uint64_t delta) { now_ += delta * 1000; }
  void set_ms(uint64_t t) { now_ = t; }

 private:
  uint64_t now_;
};

}  // namespace wvsim
