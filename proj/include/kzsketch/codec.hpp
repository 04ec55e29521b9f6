#pragma once

#include <cstdint>
#include <vector>

#include "kzsketch/coreset.hpp"
#include "kzsketch/geometry.hpp"

namespace kz {

struct ScalarCode {
  bool is_zero = true;
  bool sign = false;  // true for negative values
  std::int32_t expo = 0;
  std::uint64_t fraction = 0;

  friend bool operator==(const ScalarCode&, const ScalarCode&) = default;
};

// Round-to-nearest-even on f fraction bits below an implicit leading one.
// Values with |v| <= zero_threshold become the zero code.
ScalarCode encode_scalar(double value, unsigned f, double zero_threshold);
double decode_scalar(const ScalarCode& code, unsigned f);

// Epsilon as stored in the header: 32-bit mantissa times 2^exponent.
struct CanonicalEps {
  std::uint32_t mantissa = 0;
  std::int16_t exponent = 0;
  double value() const;
  static CanonicalEps from(double eps);
};

// Smallest f with 2^f >= 4/eps (weights) or 4z/eps (coordinates).
unsigned weight_fraction_bits(double eps);
unsigned coordinate_fraction_bits(double eps, const ZRational& z);

struct SketchHeader {
  std::uint32_t k = 0;
  std::uint32_t d = 0;
  ZRational z;
  std::uint64_t delta = 2;
  CanonicalEps eps;
  std::uint64_t n = 0;
  std::uint64_t size = 0;  // |S|
  std::uint8_t f_w = 0;
  std::uint8_t f_x = 0;
  std::uint8_t center_width = 0;
  std::uint8_t w_expo_width = 0;
  std::int16_t x_expo_min = 0;
  std::uint8_t x_expo_width = 0;
  bool real_deltas = false;  // coordinate deltas are arbitrary reals (merged streams)
  std::vector<std::uint64_t> group_counts;
};

struct BitLedger {
  std::uint64_t header_bits = 0;
  std::uint64_t center_bits = 0;
  std::uint64_t weight_bits = 0;
  std::uint64_t coordinate_bits = 0;
  std::uint64_t total_bits = 0;
};

struct Sketch {
  SketchHeader header;
  BitLedger ledger;
  std::vector<std::uint8_t> bytes;
};

struct DecodedSketch {
  SketchHeader header;
  CenterSet centers;
  std::vector<std::size_t> groups;  // center index per stored point
  std::vector<double> weights;
  RealDataset deltas;
  RealDataset points;  // center + delta
};

struct EncodeOptions {
  // Permit non-integer coordinates and centers off the coreset; centers are
  // still required to be grid points.
  bool real_deltas = false;
};

Sketch encode(const WeightedCoreset& coreset, const CenterSet& centers, const ProblemConfig& config,
              const EncodeOptions& opts = {});
DecodedSketch decode(const std::vector<std::uint8_t>& bytes);
inline DecodedSketch decode(const Sketch& sketch) { return decode(sketch.bytes); }
// Encodes a decoded sketch again, keeping its grouping.
Sketch reencode(const DecodedSketch& decoded);

double estimate_cost(const DecodedSketch& decoded, const CenterSet& centers);
double estimate_cost(const Sketch& sketch, const CenterSet& centers);

BitLedger bit_size(const Sketch& sketch);

// Reporting formula with unit constants, in bits.
double theoretical_upper_bound(std::uint64_t n, std::uint64_t k, std::uint64_t d, std::uint64_t delta, double eps,
                               const ZRational& z, std::uint64_t coreset_size);

struct CompressResult {
  ApproxCenters centers;
  WeightedCoreset coreset;
  Sketch sketch;
};

// approx_centers + build_coreset + encode. The sensitivity path samples at
// eps/5 as the codec expects.
CompressResult compress(const GridDataset& data, const ProblemConfig& config, CoresetMethod method,
                        std::uint64_t seed, const CoresetOptions& opts = {});

}  // namespace kz
