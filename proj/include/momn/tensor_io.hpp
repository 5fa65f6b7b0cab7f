#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "momn/attention.hpp"
#include "momn/matrix.hpp"

// CSV: one row per line, comma separated, '.' decimal point regardless of locale.
// Binary: "MOMN" | u16 version | u16 rank | u64 dims[rank] | f64 data (row-major),
// all little-endian. A file may hold several records back to back.

namespace momn::io {

enum class Format { Csv, Bin };

inline constexpr std::uint16_t kBinVersion = 1;

Format parse_format(const std::string& name);

/// A tensor record of rank 0, 1 or 2.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  Matrix as_matrix() const;  // rank 0 -> 1x1, rank 1 -> 1xn
  static Tensor from_matrix(const Matrix& m);
  static Tensor vector(const std::vector<double>& v);
  static Tensor scalar(double s);

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

Matrix parse_csv(const std::string& text);
std::string format_csv(const Matrix& m);

std::vector<std::uint8_t> encode(const std::vector<Tensor>& tensors);
std::vector<Tensor> decode(const std::vector<std::uint8_t>& bytes);

Matrix load_tensor(const std::filesystem::path& path, Format format);
void save_tensor(const std::filesystem::path& path, const Matrix& m, Format format);

/// Four tensors (w1, b1, w2, b2) followed by the reduction r as a rank-0 record.
void save_attention_params(const std::filesystem::path& path, const attention::AttentionParams& p);
attention::AttentionParams load_attention_params(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace momn::io
