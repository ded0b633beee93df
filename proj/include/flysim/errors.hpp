#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flysim {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameter set.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NonFiniteState : public Error {
 public:
  using Error::Error;
};

class EmptyScene : public Error {
 public:
  EmptyScene() : Error("scene has no objects") {}
};

class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& message)
      : Error(source + ":" + std::to_string(line) + ": " + message),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

class InvalidNoiseForSensor : public Error {
 public:
  InvalidNoiseForSensor(const std::string& noise, const std::string& sensor)
      : Error("noise model '" + noise + "' is not valid for " + sensor + " data") {}
};

class SpawnFailure : public Error {
 public:
  using Error::Error;
};

class NotReset : public Error {
 public:
  NotReset() : Error("environment must be reset before step()") {}
};

class ActionShapeMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace flysim
