#include "qaa/tensor.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "qaa/errors.hpp"

namespace qaa {

namespace {

std::size_t checked_size(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d <= 0) throw ShapeError("tensor dims must be positive, got " + dims_to_string(dims));
    n *= static_cast<std::size_t>(d);
    if (n > (1u << 30)) throw ShapeError("tensor too large: " + dims_to_string(dims));
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> dims) : dims_(std::move(dims)), data_(checked_size(dims_), 0.0) {}

Tensor::Tensor(std::vector<int> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (checked_size(dims_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match dims " + dims_to_string(dims_));
  }
}

Tensor Tensor::full(std::vector<int> dims, double value) {
  Tensor t(std::move(dims));
  t.fill(value);
  return t;
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double value) {
  for (double& v : data_) v = value;
}

std::string dims_to_string(const std::vector<int>& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ", ";
    os << dims[i];
  }
  os << ']';
  return os.str();
}

namespace {

constexpr unsigned char kMagic[4] = {0x51, 0x54, 0x4E, 0x53};  // "QTNS"
constexpr unsigned char kVersion = 1;

void put_u16(std::ostream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ParseError("truncated tensor stream while reading u32");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  if (!in) throw ParseError("truncated tensor stream while reading u16");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void put_f32(std::ostream& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

float get_f32(std::istream& in) {
  std::uint32_t bits = get_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void write_qtns(std::ostream& out, const Tensor& t) {
  out.write(reinterpret_cast<const char*>(kMagic), 4);
  out.put(static_cast<char>(kVersion));
  out.put(static_cast<char>(t.ndim()));
  for (int d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  for (int i = 0; i < t.size(); ++i) put_f32(out, static_cast<float>(t[i]));
}

Tensor read_qtns(std::istream& in) {
  unsigned char magic[4];
  in.read(reinterpret_cast<char*>(magic), 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ParseError("bad tensor magic, expected QTNS");
  }
  int version = in.get();
  if (version != kVersion) {
    throw ParseError("unsupported tensor version " + std::to_string(version));
  }
  int ndim = in.get();
  if (ndim <= 0 || ndim > 8) throw ParseError("bad tensor ndim " + std::to_string(ndim));
  std::vector<int> dims(static_cast<std::size_t>(ndim));
  for (int i = 0; i < ndim; ++i) {
    std::uint32_t d = get_u32(in);
    if (d == 0 || d > (1u << 30)) throw ParseError("bad tensor dim " + std::to_string(d));
    dims[static_cast<std::size_t>(i)] = static_cast<int>(d);
  }
  Tensor t(dims);
  for (int i = 0; i < t.size(); ++i) t[i] = static_cast<double>(get_f32(in));
  if (!in) throw ParseError("truncated tensor payload");
  return t;
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  write_qtns(out, t);
  if (!out) throw IoError("write failed: " + path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  return read_qtns(in);
}

void write_named_tensors(std::ostream& out,
                         const std::vector<std::pair<std::string, const Tensor*>>& entries) {
  for (const auto& [name, tensor] : entries) {
    if (name.size() > 0xFFFF) throw DomainError("tensor name too long: " + name);
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_qtns(out, *tensor);
  }
}

std::vector<std::pair<std::string, Tensor>> read_named_tensors(std::istream& in) {
  std::vector<std::pair<std::string, Tensor>> entries;
  while (in.peek() != std::istream::traits_type::eof()) {
    std::uint16_t len = get_u16(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw ParseError("truncated tensor name");
    entries.emplace_back(std::move(name), read_qtns(in));
  }
  return entries;
}

}  // namespace qaa
