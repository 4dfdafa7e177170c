#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace fvlab {

/// Source of randomness consumed by every sampler and simulator. RngStream
/// is the production implementation; tests substitute scripted sources.
class RandomSource {
public:
  virtual ~RandomSource() = default;

  virtual double normal() = 0;
  /// Uniform on the open interval (0, 1).
  virtual double uniform() = 0;
  /// Uniform on {0, ..., n-1}; n >= 1.
  virtual std::size_t uniform_index(std::size_t n) = 0;
};

/// Philox4x64-10 counter-based generator keyed by (seed, stream_id). Block k
/// of a stream is Philox(counter = k, key = {seed, stream_id}), k = 0, 1, ...
/// Each stream has period 2^258 and distinct keys give independent streams.
/// Normals come from the Marsaglia polar method.
class RngStream final : public RandomSource {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  double normal() override;
  double uniform() override;
  std::size_t uniform_index(std::size_t n) override;

  std::uint64_t seed() const { return key_[0]; }
  std::uint64_t stream_id() const { return key_[1]; }

  using Block = std::array<std::uint64_t, 4>;
  static Block philox4x64_10(Block counter, std::array<std::uint64_t, 2> key);

private:
  std::array<std::uint64_t, 2> key_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  unsigned buffer_pos_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

} // namespace fvlab
