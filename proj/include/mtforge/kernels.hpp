// Copyright 2026 The mtforge Authors
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

#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <string_view>

/// Dense double-precision vector kernels. Each kernel has a scalar reference
/// implementation and, where the build supports it, an AVX2/FMA variant. The
/// variant is chosen once at startup from CPUID; MTFORGE_SIMD=scalar|avx2
/// overrides the choice.
namespace mtforge::kernels {

enum class Isa { Scalar, Avx2 };

struct Table {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* y, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  void (*max_inplace)(double* y, const double* x, std::size_t n);
};

const Table& scalar_table();
/// nullptr when the AVX2 variant was not compiled in.
const Table* avx2_table();

bool supported(Isa isa);
const Table& active();
/// Switches the process-wide variant; throws if unsupported.
void select(Isa isa);
std::string_view name(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  return active().squared_distance(a.data(), b.data(), a.size());
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> y) { active().scale(alpha, y.data(), y.size()); }

inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

/// y = max(y, x) elementwise
inline void max_inplace(std::span<double> y, std::span<const double> x) {
  assert(x.size() == y.size());
  active().max_inplace(y.data(), x.data(), x.size());
}

}  // namespace mtforge::kernels
