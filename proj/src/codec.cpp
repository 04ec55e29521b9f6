#include "kzsketch/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kzsketch/bitstream.hpp"
#include "kzsketch/error.hpp"

namespace kz {

namespace {

constexpr std::uint16_t kSketchVersion = 1;
constexpr unsigned kMaxFractionBits = 62;

}  // namespace

ScalarCode encode_scalar(double value, unsigned f, double zero_threshold) {
  if (f < 1 || f > kMaxFractionBits) throw Error(ErrorCode::InvalidArgument, "fraction bit count out of range");
  if (!std::isfinite(value)) throw Error(ErrorCode::NonFinite, "cannot encode a non-finite value");
  ScalarCode code;
  const double a = std::abs(value);
  if (a == 0.0 || a <= zero_threshold) return code;

  int e = 0;
  const double m = std::frexp(a, &e);  // a = m * 2^e, m in [0.5, 1)
  std::int32_t expo = e - 1;
  const double x = std::ldexp(2.0 * m - 1.0, static_cast<int>(f));
  const double fl = std::floor(x);
  const double rem = x - fl;
  double q = fl;
  if (rem > 0.5 || (rem == 0.5 && std::fmod(fl, 2.0) != 0.0)) q += 1.0;
  if (q >= std::ldexp(1.0, static_cast<int>(f))) {
    q = 0.0;
    ++expo;
  }
  code.is_zero = false;
  code.sign = value < 0.0;
  code.expo = expo;
  code.fraction = static_cast<std::uint64_t>(q);
  return code;
}

double decode_scalar(const ScalarCode& code, unsigned f) {
  if (code.is_zero) return 0.0;
  const double mant = 1.0 + std::ldexp(static_cast<double>(code.fraction), -static_cast<int>(f));
  const double v = std::ldexp(mant, code.expo);
  return code.sign ? -v : v;
}

double CanonicalEps::value() const { return std::ldexp(static_cast<double>(mantissa), exponent); }

CanonicalEps CanonicalEps::from(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  int e = 0;
  const double m = std::frexp(eps, &e);
  double mant = std::nearbyint(std::ldexp(m, 32));
  if (mant >= 4294967296.0) {
    mant = 2147483648.0;
    ++e;
  }
  CanonicalEps c;
  c.mantissa = static_cast<std::uint32_t>(mant);
  c.exponent = static_cast<std::int16_t>(e - 32);
  // Drop trailing zero bits so equal values have one representation.
  while (c.mantissa != 0 && (c.mantissa & 1u) == 0) {
    c.mantissa >>= 1;
    ++c.exponent;
  }
  return c;
}

namespace {

unsigned smallest_power_at_least(double ratio_num, double eps) {
  // smallest f with 2^f * eps >= ratio_num
  unsigned f = 0;
  while (f < kMaxFractionBits && std::ldexp(eps, static_cast<int>(f)) < ratio_num) ++f;
  return std::max(f, 1u);
}

}  // namespace

unsigned weight_fraction_bits(double eps) { return smallest_power_at_least(4.0, eps); }

unsigned coordinate_fraction_bits(double eps, const ZRational& z) {
  // 2^f >= 4 num / (den eps)  <=>  2^f * eps * den >= 4 num
  return smallest_power_at_least(4.0 * static_cast<double>(z.num), eps * static_cast<double>(z.den));
}

namespace {

unsigned group_count_width(std::uint64_t size) { return ceil_log2(size + 1); }

unsigned grid_coordinate_expo_width(std::uint64_t delta) { return ceil_log2(ceil_log2(delta) + 1); }

unsigned formula_weight_expo_width(std::uint64_t n, double eps) {
  const double nd = static_cast<double>(std::max<std::uint64_t>(n, 1));
  const double hi = std::ceil(std::log2((1.0 + 4.0 * eps) * nd));
  const double lo = std::floor(std::log2(eps / (4.0 * nd)));
  const double range = std::max(hi - lo, 1.0);
  return ceil_log2(static_cast<std::uint64_t>(range)) + 1;
}

void write_header(BitWriter& w, const SketchHeader& h) {
  for (char ch : {'K', 'Z', 'S', 'K'}) w.write(static_cast<std::uint8_t>(ch), 8);
  w.write(kSketchVersion, 16);
  w.write(h.k, 32);
  w.write(h.d, 32);
  w.write(static_cast<std::uint64_t>(h.z.num), 32);
  w.write(static_cast<std::uint64_t>(h.z.den), 32);
  w.write(h.delta, 64);
  w.write(h.eps.mantissa, 32);
  w.write_signed(h.eps.exponent, 16);
  w.write(h.n, 64);
  w.write(h.size, 64);
  w.write(h.f_w, 8);
  w.write(h.f_x, 8);
  w.write(h.center_width, 8);
  w.write(h.w_expo_width, 8);
  w.write_signed(h.x_expo_min, 16);
  w.write(h.x_expo_width, 8);
  w.write(h.real_deltas ? 1u : 0u, 8);
  const unsigned gw = group_count_width(h.size);
  for (auto c : h.group_counts) w.write(c, gw);
}

struct GroupedInput {
  CenterSet centers;
  std::vector<std::size_t> groups;
  std::vector<double> weights;
  RealDataset deltas;
};

// Shared by encode and reencode. `h` carries k, d, z, delta, eps, n, size and
// the real_deltas flag; the remaining fields are derived here.
Sketch encode_grouped(SketchHeader h, const GroupedInput& in) {
  const std::size_t size = in.weights.size();
  const std::size_t d = h.d;
  const double eps = h.eps.value();
  h.size = size;
  h.f_w = static_cast<std::uint8_t>(weight_fraction_bits(eps));
  h.f_x = static_cast<std::uint8_t>(coordinate_fraction_bits(eps, h.z));
  h.center_width = static_cast<std::uint8_t>(ceil_log2(h.delta));

  const double thr = size > 0 ? eps / (4.0 * static_cast<double>(size)) : 0.0;
  std::vector<ScalarCode> wcodes(size);
  std::int64_t wmin = 0, wmax = 0;
  bool any_w = false;
  for (std::size_t i = 0; i < size; ++i) {
    ScalarCode c = encode_scalar(in.weights[i], h.f_w, thr);
    // A weight that rounds down onto the threshold is dropped as well, so a
    // decoded sketch re-encodes to the same bytes.
    if (!c.is_zero && decode_scalar(c, h.f_w) <= thr) c = ScalarCode{};
    wcodes[i] = c;
    if (!c.is_zero) {
      wmin = any_w ? std::min<std::int64_t>(wmin, c.expo) : c.expo;
      wmax = any_w ? std::max<std::int64_t>(wmax, c.expo) : c.expo;
      any_w = true;
    }
  }
  h.w_expo_width = static_cast<std::uint8_t>(
      std::max(formula_weight_expo_width(h.n, eps), any_w ? signed_width(wmin, wmax) : 1u));

  std::vector<ScalarCode> xcodes(size * d);
  std::int64_t xmin = 0, xmax = 0;
  bool any_x = false;
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      ScalarCode c = encode_scalar(in.deltas.row(i)[j], h.f_x, 0.0);
      xcodes[i * d + j] = c;
      if (!c.is_zero) {
        xmin = any_x ? std::min<std::int64_t>(xmin, c.expo) : c.expo;
        xmax = any_x ? std::max<std::int64_t>(xmax, c.expo) : c.expo;
        any_x = true;
      }
    }
  }
  if (h.real_deltas) {
    h.x_expo_min = static_cast<std::int16_t>(any_x ? xmin : 0);
    h.x_expo_width = static_cast<std::uint8_t>(any_x ? ceil_log2(static_cast<std::uint64_t>(xmax - xmin) + 1) : 0);
  } else {
    h.x_expo_min = 0;
    h.x_expo_width = static_cast<std::uint8_t>(grid_coordinate_expo_width(h.delta));
    if (any_x && (xmin < 0 || xmax >= (std::int64_t{1} << h.x_expo_width)))
      throw Error(ErrorCode::OutOfGrid, "coordinate delta exponent outside the grid range");
  }

  h.group_counts.assign(h.k, 0);
  for (auto g : in.groups) ++h.group_counts[g];

  Sketch out;
  BitWriter w;
  write_header(w, h);
  out.ledger.header_bits = w.bit_count();

  for (std::size_t c = 0; c < in.centers.n; ++c)
    for (std::size_t j = 0; j < d; ++j) {
      double v = in.centers.row(c)[j];
      w.write(static_cast<std::uint64_t>(v) - 1, h.center_width);
    }
  out.ledger.center_bits = w.bit_count() - out.ledger.header_bits;

  for (std::size_t l = 0; l < h.k; ++l) {
    for (std::size_t i = 0; i < size; ++i) {
      if (in.groups[i] != l) continue;
      std::uint64_t before = w.bit_count();
      const ScalarCode& wc = wcodes[i];
      w.write_bit(wc.is_zero);
      if (!wc.is_zero) {
        w.write_signed(wc.expo, h.w_expo_width);
        w.write(wc.fraction, h.f_w);
      }
      std::uint64_t mid = w.bit_count();
      out.ledger.weight_bits += mid - before;
      for (std::size_t j = 0; j < d; ++j) {
        const ScalarCode& xc = xcodes[i * d + j];
        w.write_bit(xc.is_zero);
        if (!xc.is_zero) {
          w.write_bit(xc.sign);
          w.write(static_cast<std::uint64_t>(xc.expo - h.x_expo_min), h.x_expo_width);
          w.write(xc.fraction, h.f_x);
        }
      }
      out.ledger.coordinate_bits += w.bit_count() - mid;
    }
  }
  out.ledger.total_bits = w.bit_count();
  out.header = std::move(h);
  out.bytes = w.take();
  return out;
}

void check_grid_centers(const CenterSet& centers, std::uint64_t delta) {
  for (double v : centers.coords) {
    if (v != std::floor(v) || v < 1.0 || v > static_cast<double>(delta))
      throw Error(ErrorCode::OutOfGrid, "center coordinate " + std::to_string(v) + " is not a grid value in [1, delta]");
  }
}

}  // namespace

Sketch encode(const WeightedCoreset& coreset, const CenterSet& centers, const ProblemConfig& config,
              const EncodeOptions& opts) {
  config.validate();
  if (centers.n == 0) throw Error(ErrorCode::InvalidArgument, "need at least one center");
  if (centers.d != config.d || (coreset.points.n > 0 && coreset.points.d != config.d))
    throw Error(ErrorCode::DimensionMismatch, "coreset, centers and config disagree on dimension");
  if (coreset.weights.size() != coreset.points.n)
    throw Error(ErrorCode::DimensionMismatch, "weight count does not match coreset size");
  coreset.points.validate();
  for (double w : coreset.weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::NonFinite, "non-finite weight");
    if (w < 0.0) throw Error(ErrorCode::NegativeWeight, "negative weight");
  }
  check_grid_centers(centers, config.delta);
  if (!opts.real_deltas) {
    for (double v : coreset.points.coords)
      if (v != std::floor(v) || v < 1.0 || v > static_cast<double>(config.delta))
        throw Error(ErrorCode::OutOfGrid, "coreset coordinate " + std::to_string(v) + " is outside [1, delta]");
  }

  SketchHeader h;
  h.k = static_cast<std::uint32_t>(centers.n);
  h.d = static_cast<std::uint32_t>(config.d);
  h.z = config.z;
  h.delta = config.delta;
  h.eps = CanonicalEps::from(config.epsilon);
  h.n = coreset.source_n;
  h.real_deltas = opts.real_deltas;

  GroupedInput in;
  in.centers = centers;
  in.weights = coreset.weights;
  in.deltas = RealDataset(coreset.points.n, config.d);
  if (coreset.points.n > 0) {
    in.groups = nearest_assignment(coreset.points, centers);
    for (std::size_t i = 0; i < coreset.points.n; ++i)
      for (std::size_t j = 0; j < config.d; ++j)
        in.deltas.row(i)[j] = coreset.points.row(i)[j] - centers.row(in.groups[i])[j];
  }
  return encode_grouped(std::move(h), in);
}

Sketch reencode(const DecodedSketch& decoded) {
  GroupedInput in;
  in.centers = decoded.centers;
  in.groups = decoded.groups;
  in.weights = decoded.weights;
  in.deltas = decoded.deltas;
  return encode_grouped(decoded.header, in);
}

DecodedSketch decode(const std::vector<std::uint8_t>& bytes) {
  BitReader r(bytes);
  auto corrupt = [&](const std::string& what) {
    return Error(ErrorCode::Corrupt, what + " (bit offset " + std::to_string(r.position()) + ")", r.position());
  };
  for (char ch : {'K', 'Z', 'S', 'K'})
    if (r.read(8) != static_cast<std::uint8_t>(ch)) throw corrupt("bad sketch magic");
  if (r.read(16) != kSketchVersion) throw corrupt("unsupported sketch version");

  DecodedSketch out;
  SketchHeader& h = out.header;
  h.k = static_cast<std::uint32_t>(r.read(32));
  h.d = static_cast<std::uint32_t>(r.read(32));
  auto znum = static_cast<std::int64_t>(r.read(32));
  auto zden = static_cast<std::int64_t>(r.read(32));
  if (znum <= 0 || zden <= 0) throw corrupt("bad z");
  h.z = ZRational(znum, zden);
  h.delta = r.read(64);
  h.eps.mantissa = static_cast<std::uint32_t>(r.read(32));
  h.eps.exponent = static_cast<std::int16_t>(r.read_signed(16));
  h.n = r.read(64);
  h.size = r.read(64);
  h.f_w = static_cast<std::uint8_t>(r.read(8));
  h.f_x = static_cast<std::uint8_t>(r.read(8));
  h.center_width = static_cast<std::uint8_t>(r.read(8));
  h.w_expo_width = static_cast<std::uint8_t>(r.read(8));
  h.x_expo_min = static_cast<std::int16_t>(r.read_signed(16));
  h.x_expo_width = static_cast<std::uint8_t>(r.read(8));
  auto flags = r.read(8);
  if (flags > 1) throw corrupt("unknown header flags");
  h.real_deltas = flags == 1;

  if (h.k == 0 || h.d == 0) throw corrupt("k and d must be positive");
  if (h.delta < 2) throw corrupt("delta must be at least 2");
  const double eps = h.eps.value();
  if (!(eps > 0.0 && eps < 1.0)) throw corrupt("epsilon outside (0,1)");
  if (h.f_w != weight_fraction_bits(eps) || h.f_x != coordinate_fraction_bits(eps, h.z))
    throw corrupt("fraction widths inconsistent with epsilon");
  if (h.center_width != ceil_log2(h.delta)) throw corrupt("center width inconsistent with delta");
  if (h.w_expo_width == 0 || h.w_expo_width > 32 || h.x_expo_width > 16) throw corrupt("bad exponent width");
  if (h.size > r.remaining() / (1 + static_cast<std::uint64_t>(h.d)))
    throw Error(ErrorCode::Truncated, "payload too short for the declared coreset size", r.position());

  const unsigned gw = group_count_width(h.size);
  h.group_counts.resize(h.k);
  std::uint64_t total = 0;
  for (auto& c : h.group_counts) {
    c = r.read(gw);
    total += c;
  }
  if (total != h.size) throw corrupt("group counts do not add up to the coreset size");

  if (static_cast<std::uint64_t>(h.k) * h.d * h.center_width > r.remaining())
    throw Error(ErrorCode::Truncated, "payload too short for the center block", r.position());
  out.centers = CenterSet(h.k, h.d);
  for (auto& v : out.centers.coords) {
    std::uint64_t c = r.read(h.center_width) + 1;
    if (c > h.delta) throw corrupt("center coordinate outside [1, delta]");
    v = static_cast<double>(c);
  }

  const std::size_t size = h.size;
  out.weights.reserve(size);
  out.groups.reserve(size);
  out.deltas = RealDataset(size, h.d);
  out.points = RealDataset(size, h.d);
  std::size_t i = 0;
  for (std::size_t l = 0; l < h.k; ++l) {
    for (std::uint64_t t = 0; t < h.group_counts[l]; ++t, ++i) {
      ScalarCode wc;
      wc.is_zero = r.read_bit();
      if (!wc.is_zero) {
        wc.expo = static_cast<std::int32_t>(r.read_signed(h.w_expo_width));
        wc.fraction = r.read(h.f_w);
      }
      out.weights.push_back(decode_scalar(wc, h.f_w));
      out.groups.push_back(l);
      for (std::size_t j = 0; j < h.d; ++j) {
        ScalarCode xc;
        xc.is_zero = r.read_bit();
        if (!xc.is_zero) {
          xc.sign = r.read_bit();
          xc.expo = static_cast<std::int32_t>(r.read(h.x_expo_width)) + h.x_expo_min;
          xc.fraction = r.read(h.f_x);
        }
        double delta = decode_scalar(xc, h.f_x);
        out.deltas.row(i)[j] = delta;
        out.points.row(i)[j] = out.centers.row(l)[j] + delta;
      }
    }
  }
  // Anything after the payload must be the zero padding of the final byte.
  if (r.remaining() >= 8) throw corrupt("trailing bytes after payload");
  if (r.remaining() > 0 && r.read(static_cast<unsigned>(r.remaining())) != 0) throw corrupt("nonzero padding bits");
  return out;
}

double estimate_cost(const DecodedSketch& decoded, const CenterSet& centers) {
  if (centers.d != decoded.header.d)
    throw Error(ErrorCode::DimensionMismatch, "query centers have dimension " + std::to_string(centers.d) +
                                                  ", sketch has " + std::to_string(decoded.header.d));
  if (decoded.points.n == 0) return 0.0;
  return weighted_cost(decoded.points, decoded.weights, centers, decoded.header.z);
}

double estimate_cost(const Sketch& sketch, const CenterSet& centers) { return estimate_cost(decode(sketch), centers); }

BitLedger bit_size(const Sketch& sketch) { return sketch.ledger; }

double theoretical_upper_bound(std::uint64_t n, std::uint64_t k, std::uint64_t d, std::uint64_t delta, double eps,
                               const ZRational& z, std::uint64_t coreset_size) {
  if (n == 0 || k == 0 || d == 0 || delta < 2) throw Error(ErrorCode::InvalidArgument, "bound arguments must be positive");
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0,1)");
  const double dd = static_cast<double>(d);
  const double log_delta = std::log2(static_cast<double>(delta));
  if (n <= k) return static_cast<double>(n) * dd * log_delta;
  if (coreset_size == 0) return static_cast<double>(k) * dd * log_delta;
  const double s = static_cast<double>(coreset_size);
  const double inner = std::max(std::log2(4.0 * s / eps), std::log2(static_cast<double>(n)));
  const double per_point = std::log2(4.0 / eps) + std::log2(inner) + dd * std::log2(4.0 * z.value() / eps) +
                           dd * std::log2(log_delta);
  return static_cast<double>(k) * dd * log_delta + s * per_point;
}

CompressResult compress(const GridDataset& data, const ProblemConfig& config, CoresetMethod method,
                        std::uint64_t seed, const CoresetOptions& opts) {
  config.validate();
  data.validate();
  if (data.d != config.d || data.n != config.n)
    throw Error(ErrorCode::DimensionMismatch, "dataset shape does not match the configuration");
  if (data.delta > config.delta) throw Error(ErrorCode::OutOfGrid, "dataset grid exceeds configured delta");
  CompressResult out;
  out.centers = approx_centers(data, config.k, config.z, derive_seed(seed, 10));
  const double coreset_eps = method == CoresetMethod::Identity ? config.epsilon : config.epsilon / 5.0;
  out.coreset = build_coreset(data, config.k, config.z, coreset_eps, method, derive_seed(seed, 11), opts);
  out.sketch = encode(out.coreset, out.centers.centers, config);
  return out;
}

}  // namespace kz
