#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace qaa {

/// Dense row-major tensor of 64-bit floats. Values are held in f64 so that
/// finite-difference checks have enough precision; the on-disk payload is f32.
class Tensor {
public:
  Tensor() = default;

  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<int> dims);

  Tensor(std::vector<int> dims, std::vector<double> data);

  static Tensor zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }
  static Tensor full(std::vector<int> dims, double value);
  static Tensor scalar(double value) { return Tensor({1}, {value}); }

  const std::vector<int>& dims() const { return dims_; }
  int ndim() const { return static_cast<int>(dims_.size()); }
  int size() const { return static_cast<int>(data_.size()); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& operator[](int i) { return data_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return data_[static_cast<std::size_t>(i)]; }

  // 2-D access; the tensor must have exactly two dims.
  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * dims_[1] + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * dims_[1] + c]; }

  int rows() const { return dims_[0]; }
  int cols() const { return dims_[1]; }

  bool same_dims(const Tensor& other) const { return dims_ == other.dims_; }
  bool all_finite() const;
  void fill(double value);

  const std::vector<double>& vec() const { return data_; }

private:
  std::vector<int> dims_;
  std::vector<double> data_;
};

std::string dims_to_string(const std::vector<int>& dims);

// --- QTNS binary tensor format -------------------------------------------
//
// magic "QTNS" (0x51 0x54 0x4E 0x53), u8 version = 1, u8 ndim,
// ndim x u32 little-endian dims, then the payload as little-endian f32 in
// row-major order. Reading back converts to f64.

void write_qtns(std::ostream& out, const Tensor& t);
Tensor read_qtns(std::istream& in);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

// --- Named-tensor container ------------------------------------------------
//
// A checkpoint block is a concatenation of named tensors, each encoded as
// u16 little-endian name length, the UTF-8 name bytes, then a QTNS block.

void write_named_tensors(std::ostream& out,
                         const std::vector<std::pair<std::string, const Tensor*>>& entries);
std::vector<std::pair<std::string, Tensor>> read_named_tensors(std::istream& in);

}  // namespace qaa
