#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

namespace assertctl::lora {

// Row-major d x k matrix of finite doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);  // zero-filled
  // Throws Error(ShapeMismatch) if values.size() != rows * cols or a dimension
  // is zero, Error(InvalidConfig) on a non-finite entry.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const noexcept { return data_; }

  std::vector<double> multiply(std::span<const double> x) const;  // throws ShapeMismatch
  DenseMatrix multiply(const DenseMatrix& rhs) const;             // throws ShapeMismatch

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Update W + scaling * B A with A: r x k and B: d x r.
struct LoraAdapter {
  DenseMatrix a;
  DenseMatrix b;
  double scaling = 1.0;

  std::size_t rank() const noexcept { return a.rows(); }
  std::size_t out_dim() const noexcept { return b.rows(); }
  std::size_t in_dim() const noexcept { return a.cols(); }

  // Throws ShapeMismatch if B and A do not compose, RankTooLarge if
  // r > min(d, k), InvalidConfig unless scaling > 0.
  void validate() const;

  friend bool operator==(const LoraAdapter&, const LoraAdapter&) = default;
};

// Seeded standard normal source; same seed, same sequence on every platform.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed);
  double next();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
  double uniform();
};

// B = 0, A ~ N(0, 1) from `seed`, scaling = 1.
LoraAdapter init_adapter(std::size_t d, std::size_t k, std::size_t r, std::uint64_t seed);

DenseMatrix delta(const LoraAdapter& adapter);
DenseMatrix merge(const DenseMatrix& w, const LoraAdapter& adapter);
// W x + scaling * B (A x); the merged matrix is never formed.
std::vector<double> forward(std::span<const double> x, const DenseMatrix& w, const LoraAdapter& adapter);

struct ParamSavings {
  std::size_t adapter_params = 0;
  std::size_t full_params = 0;
  double ratio = 0.0;
};

ParamSavings param_savings(std::size_t d, std::size_t k, std::size_t r);

// Text form: "lora d k r scaling", then the r rows of A, then the d rows of B.
void save_adapter(const LoraAdapter& adapter, std::ostream& out);
void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& path);
LoraAdapter load_adapter(std::istream& in);
LoraAdapter load_adapter(const std::filesystem::path& path);

}  // namespace assertctl::lora
