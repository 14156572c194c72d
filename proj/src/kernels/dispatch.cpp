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

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mtforge/kernels.hpp"

namespace mtforge::kernels {

#ifndef MTFORGE_HAVE_AVX2
const Table* avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* initial_table() {
  const char* forced = std::getenv("MTFORGE_SIMD");
  if (forced != nullptr && std::string(forced) == "scalar") return &scalar_table();
  if (supported(Isa::Avx2)) return avx2_table();
  return &scalar_table();
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> table{initial_table()};
  return table;
}

}  // namespace

bool supported(Isa isa) {
  if (isa == Isa::Scalar) return true;
  return avx2_table() != nullptr && cpu_has_avx2();
}

const Table& active() { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) {
  if (!supported(isa)) throw std::runtime_error("kernel variant not supported: " + std::string(name(isa)));
  current().store(isa == Isa::Scalar ? &scalar_table() : avx2_table());
}

std::string_view name(Isa isa) { return isa == Isa::Scalar ? "scalar" : "avx2"; }

}  // namespace mtforge::kernels
