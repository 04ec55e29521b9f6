#include "kzsketch/bitstream.hpp"

#include <string>

#include "kzsketch/error.hpp"

namespace kz {

void BitWriter::write(std::uint64_t value, unsigned width) {
  if (width > 64) throw Error(ErrorCode::InvalidArgument, "bit field wider than 64");
  if (width < 64 && (value >> width) != 0)
    throw Error(ErrorCode::InvalidArgument,
                "value " + std::to_string(value) + " does not fit in " + std::to_string(width) + " bits");
  for (unsigned i = width; i-- > 0;) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if ((value >> i) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
    ++bits_;
  }
}

void BitWriter::write_signed(std::int64_t value, unsigned width) {
  if (width == 0 || width > 64) throw Error(ErrorCode::InvalidArgument, "bad signed field width");
  if (width < 64) {
    std::int64_t lo = -(std::int64_t{1} << (width - 1));
    std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;
    if (value < lo || value > hi)
      throw Error(ErrorCode::InvalidArgument,
                  "value " + std::to_string(value) + " does not fit a signed " + std::to_string(width) + "-bit field");
  }
  auto u = static_cast<std::uint64_t>(value);
  if (width < 64) u &= (std::uint64_t{1} << width) - 1;
  write(u, width);
}

std::uint64_t BitReader::read(unsigned width) {
  if (width > 64) throw Error(ErrorCode::InvalidArgument, "bit field wider than 64");
  if (width > remaining())
    throw Error(ErrorCode::Truncated,
                "payload ends at bit " + std::to_string(bytes_.size() * 8) + ", needed " + std::to_string(width) +
                    " bits at offset " + std::to_string(pos_),
                pos_);
  std::uint64_t v = 0;
  for (unsigned i = 0; i < width; ++i) {
    unsigned bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    v = (v << 1) | bit;
    ++pos_;
  }
  return v;
}

std::int64_t BitReader::read_signed(unsigned width) {
  if (width == 0) throw Error(ErrorCode::InvalidArgument, "bad signed field width");
  std::uint64_t u = read(width);
  if (width < 64 && (u >> (width - 1)) & 1u) u |= ~((std::uint64_t{1} << width) - 1);
  return static_cast<std::int64_t>(u);
}

unsigned ceil_log2(std::uint64_t x) {
  unsigned w = 0;
  while (w < 64 && (std::uint64_t{1} << w) < x) ++w;
  return w;
}

unsigned signed_width(std::int64_t lo, std::int64_t hi) {
  for (unsigned w = 1; w < 64; ++w) {
    std::int64_t min = -(std::int64_t{1} << (w - 1));
    std::int64_t max = (std::int64_t{1} << (w - 1)) - 1;
    if (lo >= min && hi <= max) return w;
  }
  return 64;
}

}  // namespace kz
