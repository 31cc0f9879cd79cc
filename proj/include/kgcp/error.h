/*
 * Copyright 2026 The kgcp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef KGCP_ERROR_H_
#define KGCP_ERROR_H_

#include <stdexcept>
#include <string>

namespace kgcp {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : Error(path + (line > 0 ? ":" + std::to_string(line) : "") + ": " +
              what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Invalid configuration or arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage found its input artifact missing.
class MissingArtifactError : public Error {
 public:
  MissingArtifactError(const std::string& artifact, const std::string& stage)
      : Error("missing artifact '" + artifact + "'; run the '" + stage +
              "' stage first"),
        stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace kgcp

#endif  // KGCP_ERROR_H_
