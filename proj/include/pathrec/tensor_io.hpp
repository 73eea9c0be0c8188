#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pathrec {

// An ordered collection of named matrices; the unit the optimizer updates
// and the checkpoint format serializes.
class TensorBag {
 public:
  Eigen::MatrixXd& add(const std::string& name, Eigen::Index rows,
                       Eigen::Index cols) {
    return add(name, Eigen::MatrixXd::Zero(rows, cols));
  }

  Eigen::MatrixXd& add(const std::string& name, Eigen::MatrixXd value) {
    if (has(name)) throw std::invalid_argument("duplicate tensor: " + name);
    names_.push_back(name);
    tensors_.push_back(std::move(value));
    return tensors_.back();
  }

  bool has(const std::string& name) const {
    for (const auto& n : names_) {
      if (n == name) return true;
    }
    return false;
  }

  Eigen::MatrixXd& at(const std::string& name) {
    for (size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return tensors_[i];
    }
    throw std::out_of_range("no tensor named " + name);
  }
  const Eigen::MatrixXd& at(const std::string& name) const {
    return const_cast<TensorBag*>(this)->at(name);
  }

  size_t size() const { return tensors_.size(); }
  const std::string& name(size_t i) const { return names_[i]; }
  Eigen::MatrixXd& tensor(size_t i) { return tensors_[i]; }
  const Eigen::MatrixXd& tensor(size_t i) const { return tensors_[i]; }

  // A bag with the same names and shapes, all zeros.
  TensorBag zeros_like() const {
    TensorBag out;
    for (size_t i = 0; i < size(); ++i) {
      out.add(names_[i], tensors_[i].rows(), tensors_[i].cols());
    }
    return out;
  }

  void set_zero() {
    for (auto& t : tensors_) t.setZero();
  }

  bool all_finite() const {
    for (const auto& t : tensors_) {
      if (!t.allFinite()) return false;
    }
    return true;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Eigen::MatrixXd> tensors_;
};

namespace tensor_io {

inline constexpr char kContainerMagic[8] = {'P', 'R', 'T', 'E',
                                            'N', 'S', '0', '1'};

inline void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated tensor container");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

inline void write_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32(out, bits);
}

inline float read_f32(std::istream& in) {
  uint32_t bits = read_u32(in);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void write_matrix_rows(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      write_f32(out, static_cast<float>(m(r, c)));
    }
  }
}

inline void read_matrix_rows(std::istream& in, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = static_cast<double>(read_f32(in));
    }
  }
}

}  // namespace tensor_io

// Container layout: magic, tensor count, then per tensor a length-prefixed
// name, row/col counts, and row-major little-endian float32 payload.
inline void save_tensors(const TensorBag& bag, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write tensor file: " + path);
  out.write(tensor_io::kContainerMagic, 8);
  tensor_io::write_u32(out, static_cast<uint32_t>(bag.size()));
  for (size_t i = 0; i < bag.size(); ++i) {
    const std::string& name = bag.name(i);
    const Eigen::MatrixXd& m = bag.tensor(i);
    tensor_io::write_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    tensor_io::write_u32(out, static_cast<uint32_t>(m.rows()));
    tensor_io::write_u32(out, static_cast<uint32_t>(m.cols()));
    tensor_io::write_matrix_rows(out, m);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline TensorBag load_tensors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open tensor file: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, tensor_io::kContainerMagic, 8) != 0) {
    throw std::runtime_error("bad tensor container magic in " + path);
  }
  uint32_t count = tensor_io::read_u32(in);
  TensorBag bag;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t name_len = tensor_io::read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    uint32_t rows = tensor_io::read_u32(in);
    uint32_t cols = tensor_io::read_u32(in);
    Eigen::MatrixXd& m = bag.add(name, rows, cols);
    tensor_io::read_matrix_rows(in, m);
  }
  return bag;
}

}  // namespace pathrec
