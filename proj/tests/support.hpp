#pragma once

#include <cstddef>
#include <deque>
#include <stdexcept>

#include "fvlab/random.hpp"

namespace fvlab::testing {

// Every normal is zero; uniforms are 1/2 and indices 0.
class ZeroNoise final : public RandomSource {
public:
  double normal() override { return 0.0; }
  double uniform() override { return 0.5; }
  std::size_t uniform_index(std::size_t) override { return 0; }
};

// Replays scripted normals and indices, then falls back to a constant.
class ScriptedSource final : public RandomSource {
public:
  std::deque<double> normals;
  std::deque<std::size_t> indices;
  double fallback_normal = 0.0;
  std::size_t index_calls = 0;
  std::size_t last_index_range = 0;

  double normal() override {
    if (normals.empty()) {
      return fallback_normal;
    }
    const double v = normals.front();
    normals.pop_front();
    return v;
  }
  double uniform() override { return 0.5; }
  std::size_t uniform_index(std::size_t n) override {
    ++index_calls;
    last_index_range = n;
    if (indices.empty()) {
      return 0;
    }
    const std::size_t v = indices.front();
    indices.pop_front();
    if (v >= n) {
      throw std::logic_error("scripted index out of range");
    }
    return v;
  }
};

} // namespace fvlab::testing
