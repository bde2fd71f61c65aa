// Copyright 2026 The lmdecide Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LMDECIDE_COMMON_HPP_
#define LMDECIDE_COMMON_HPP_

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace lmdecide {

// Dense types, templated on scalar.
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Vector<double>;
using MatrixXd = Matrix<double>;

// Pseudo-random stream used everywhere. Streams are never shared between
// instances; derive independent ones with `SubStream`.
using Rng = std::mt19937_64;

// Derives a named sub-stream seed from a master seed (splitmix64 over the
// master seed mixed with an FNV-1a hash of the name).
std::uint64_t SubSeed(std::uint64_t master, std::string_view name);
Rng SubStream(std::uint64_t master, std::string_view name);

std::string SerializeRng(const Rng& rng);
Rng DeserializeRng(const std::string& state);

// Uniform integer in [0, n).
int UniformIndex(Rng& rng, int n);
double Uniform01(Rng& rng);

// Error taxonomy. Every module throws one of these.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class UnknownActionError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};
class IllegalActionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};
class ContextOverflowError : public std::length_error {
 public:
  using std::length_error::length_error;
};
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rounds half away from zero to two decimals.
double Round2(double x);

// Two-decimal rendering used in every prompt and rationale: the value is
// rounded to two decimals and printed in shortest form with at least one
// fractional digit ("0.3", "1.0", "-1.91", "-0.0").
std::string Format2(double x);

// Shortest round-trip rendering (for CSV/JSON numeric columns).
std::string FormatExact(double x);

std::string ToLower(std::string_view s);
std::string Trim(std::string_view s);
std::string Join(std::span<const std::string> parts, std::string_view sep);
std::vector<std::string> SplitWhitespace(std::string_view s);

// Whitespace-delimited token count, the context budget proxy.
int CountTokens(std::string_view text);
// Keeps at most `budget` whitespace-delimited tokens of `text`.
std::string TruncateTokens(std::string_view text, int budget);

// Hex SHA-256 of a byte string.
std::string Sha256Hex(std::string_view data);

// Incremental SHA-256 for streamed output.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void Update(std::string_view data);
  // Finalizes; further updates are not allowed.
  std::string HexDigest();

 private:
  void* ctx_;
};

}  // namespace lmdecide

#endif  // LMDECIDE_COMMON_HPP_
