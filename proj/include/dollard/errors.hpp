#pragma once
#include <stdexcept>
#include <string>

namespace dollard {

//! Invalid parameters: grid, packet, stepper or experiment configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! An operation was called on a state that violates its precondition.
class PreconditionError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! A propagated packet leaked out of the monitored window (it would wrap
//! around the periodic box). Carries the time at which it was detected.
class SupportViolation : public std::runtime_error {
public:
  SupportViolation(const std::string &what, double time)
      : std::runtime_error(what), m_time(time) {}
  double time() const { return m_time; }

private:
  double m_time;
};

} // namespace dollard
