#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kzsketch/geometry.hpp"

namespace kz {

// Binary dataset: "KZDS", u16 version, u64 n, u32 d, u64 delta, then n*d u64
// coordinates, all little-endian.
std::vector<std::uint8_t> serialize_dataset(const GridDataset& data);
GridDataset deserialize_dataset(const std::vector<std::uint8_t>& bytes);
void write_dataset(const std::string& path, const GridDataset& data);
GridDataset read_dataset(const std::string& path);

// One point per line, comma or whitespace separated integers. If delta is 0
// it is taken as max(2, largest coordinate).
GridDataset parse_dataset_csv(const std::string& text, std::uint64_t delta = 0);
// Dispatches on the magic bytes: KZDS binary or CSV text.
GridDataset load_dataset(const std::string& path, std::uint64_t delta = 0);

RealDataset parse_real_csv(const std::string& text);
RealDataset load_real_csv(const std::string& path);
std::string format_real_csv(const RealDataset& data);

// Column-major matrix dump: "KZOB", u16 version, u32 rows, u32 cols, then doubles.
std::vector<std::uint8_t> serialize_matrix(const Eigen::MatrixXd& m);
Eigen::MatrixXd deserialize_matrix(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::string& path, const std::string& text);

}  // namespace kz
