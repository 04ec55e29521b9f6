#pragma once

#include <cstdint>
#include <vector>

namespace kz {

// MSB-first bit packing; the final byte is zero-padded.
class BitWriter {
 public:
  void write(std::uint64_t value, unsigned width);
  void write_signed(std::int64_t value, unsigned width);
  void write_bit(bool b) { write(b ? 1u : 0u, 1); }

  std::uint64_t bit_count() const { return bits_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  // Throws Error(Truncated) carrying the offset of the failed read.
  std::uint64_t read(unsigned width);
  std::int64_t read_signed(unsigned width);
  bool read_bit() { return read(1) != 0; }

  std::uint64_t position() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() * 8 - pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::uint64_t pos_ = 0;
};

// Smallest w with 2^w >= x (0 for x <= 1).
unsigned ceil_log2(std::uint64_t x);
// Width of a two's complement field able to hold every value in [lo, hi].
unsigned signed_width(std::int64_t lo, std::int64_t hi);

}  // namespace kz
