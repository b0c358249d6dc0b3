#include "assertctl/lora.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "assertctl/error.hpp"

namespace assertctl::lora {

namespace {

std::string shape(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw Error(ErrorKind::ShapeMismatch, "empty matrix " + shape(rows, cols));
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows == 0 || cols == 0) throw Error(ErrorKind::ShapeMismatch, "empty matrix " + shape(rows, cols));
  if (data_.size() != rows * cols) {
    throw Error(ErrorKind::ShapeMismatch,
                std::to_string(data_.size()) + " entries for a " + shape(rows, cols) + " matrix");
  }
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorKind::InvalidConfig, "non-finite matrix entry");
  }
}

std::vector<double> DenseMatrix::multiply(std::span<const double> x) const {
  if (x.size() != cols_) {
    throw Error(ErrorKind::ShapeMismatch, shape(rows_, cols_) + " times length-" + std::to_string(x.size()));
  }
  std::vector<double> y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) acc += data_[i * cols_ + j] * x[j];
    y[i] = acc;
  }
  return y;
}

DenseMatrix DenseMatrix::multiply(const DenseMatrix& rhs) const {
  if (cols_ != rhs.rows_) throw Error(ErrorKind::ShapeMismatch, shape(rows_, cols_) + " times " + shape(rhs.rows_, rhs.cols_));
  DenseMatrix out(rows_, rhs.cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t p = 0; p < cols_; ++p) {
      const double lhs = data_[i * cols_ + p];
      for (std::size_t j = 0; j < rhs.cols_; ++j) out.data_[i * rhs.cols_ + j] += lhs * rhs.data_[p * rhs.cols_ + j];
    }
  }
  return out;
}

void LoraAdapter::validate() const {
  if (b.cols() != a.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "B " + shape(b.rows(), b.cols()) + " and A " + shape(a.rows(), a.cols()));
  }
  if (rank() > std::min(out_dim(), in_dim())) {
    throw Error(ErrorKind::RankTooLarge, "rank " + std::to_string(rank()) + " exceeds min(" +
                                             std::to_string(out_dim()) + ", " + std::to_string(in_dim()) + ")");
  }
  if (!(scaling > 0.0) || !std::isfinite(scaling)) throw Error(ErrorKind::InvalidConfig, "scaling must be > 0");
}

// Box-Muller over the raw 64-bit engine output. std::normal_distribution is
// implementation-defined, so adapters would differ between standard libraries.
NormalSource::NormalSource(std::uint64_t seed) : engine_(seed) {}

double NormalSource::uniform() {
  // 53 random bits -> (0, 1)
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double NormalSource::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

LoraAdapter init_adapter(std::size_t d, std::size_t k, std::size_t r, std::uint64_t seed) {
  if (r == 0 || d == 0 || k == 0) throw Error(ErrorKind::ShapeMismatch, "d, k and r must be positive");
  if (r > std::min(d, k)) {
    throw Error(ErrorKind::RankTooLarge,
                "rank " + std::to_string(r) + " exceeds min(" + std::to_string(d) + ", " + std::to_string(k) + ")");
  }
  NormalSource normal(seed);
  std::vector<double> a(r * k);
  for (auto& v : a) v = normal.next();
  return {DenseMatrix(r, k, std::move(a)), DenseMatrix(d, r), 1.0};
}

DenseMatrix delta(const LoraAdapter& adapter) {
  adapter.validate();
  DenseMatrix out = adapter.b.multiply(adapter.a);
  if (adapter.scaling != 1.0) {
    for (std::size_t i = 0; i < out.rows(); ++i) {
      for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= adapter.scaling;
    }
  }
  return out;
}

DenseMatrix merge(const DenseMatrix& w, const LoraAdapter& adapter) {
  adapter.validate();
  if (w.rows() != adapter.out_dim() || w.cols() != adapter.in_dim()) {
    throw Error(ErrorKind::ShapeMismatch, "W " + shape(w.rows(), w.cols()) + " vs adapter " +
                                              shape(adapter.out_dim(), adapter.in_dim()));
  }
  DenseMatrix out = delta(adapter);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += w(i, j);
  }
  return out;
}

std::vector<double> forward(std::span<const double> x, const DenseMatrix& w, const LoraAdapter& adapter) {
  adapter.validate();
  if (w.rows() != adapter.out_dim() || w.cols() != adapter.in_dim()) {
    throw Error(ErrorKind::ShapeMismatch, "W " + shape(w.rows(), w.cols()) + " vs adapter " +
                                              shape(adapter.out_dim(), adapter.in_dim()));
  }
  auto y = w.multiply(x);
  const auto ax = adapter.a.multiply(x);
  const auto bax = adapter.b.multiply(ax);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += adapter.scaling * bax[i];
  return y;
}

ParamSavings param_savings(std::size_t d, std::size_t k, std::size_t r) {
  if (d == 0 || k == 0 || r == 0) throw Error(ErrorKind::ShapeMismatch, "d, k and r must be positive");
  if (r > std::min(d, k)) throw Error(ErrorKind::RankTooLarge, "rank " + std::to_string(r) + " too large");
  ParamSavings s;
  s.adapter_params = r * (d + k);
  s.full_params = d * k;
  s.ratio = static_cast<double>(s.adapter_params) / static_cast<double>(s.full_params);
  return s;
}

// --- text format ---------------------------------------------------------

namespace {

void write_rows(const DenseMatrix& m, std::ostream& out) {
  char buf[32];
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

DenseMatrix read_rows(std::istream& in, std::size_t rows, std::size_t cols, std::size_t& line_no) {
  std::vector<double> values;
  values.reserve(rows * cols);
  std::string line;
  for (std::size_t i = 0; i < rows; ++i) {
    ++line_no;
    if (!std::getline(in, line)) throw LineError(ErrorKind::MalformedRecord, line_no, "missing matrix row");
    std::istringstream row(line);
    std::string field;
    std::size_t count = 0;
    while (row >> field) {
      double v = 0.0;
      try {
        std::size_t used = 0;
        v = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw LineError(ErrorKind::MalformedRecord, line_no, "not a number: '" + field + "'");
      }
      values.push_back(v);
      ++count;
    }
    if (count != cols) {
      throw LineError(ErrorKind::ShapeMismatch, line_no,
                      "expected " + std::to_string(cols) + " entries, got " + std::to_string(count));
    }
  }
  return DenseMatrix(rows, cols, std::move(values));
}

}  // namespace

void save_adapter(const LoraAdapter& adapter, std::ostream& out) {
  adapter.validate();
  char scale[32];
  std::snprintf(scale, sizeof scale, "%.17g", adapter.scaling);
  out << "lora " << adapter.out_dim() << ' ' << adapter.in_dim() << ' ' << adapter.rank() << ' ' << scale << '\n';
  write_rows(adapter.a, out);
  write_rows(adapter.b, out);
}

void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write '" + path.string() + "'");
  save_adapter(adapter, out);
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for '" + path.string() + "'");
}

LoraAdapter load_adapter(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw LineError(ErrorKind::MalformedRecord, 1, "missing header");
  std::istringstream fields(header);
  std::string magic;
  long long d = 0, k = 0, r = 0;
  double scaling = 0.0;
  std::string extra;
  if (!(fields >> magic >> d >> k >> r >> scaling) || magic != "lora" || (fields >> extra) || d <= 0 || k <= 0 ||
      r <= 0) {
    throw LineError(ErrorKind::MalformedRecord, 1, "expected 'lora d k r scaling'");
  }
  std::size_t line_no = 1;
  LoraAdapter adapter;
  adapter.a = read_rows(in, static_cast<std::size_t>(r), static_cast<std::size_t>(k), line_no);
  adapter.b = read_rows(in, static_cast<std::size_t>(d), static_cast<std::size_t>(r), line_no);
  adapter.scaling = scaling;
  adapter.validate();
  return adapter;
}

LoraAdapter load_adapter(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path.string() + "'");
  return load_adapter(in);
}

}  // namespace assertctl::lora
