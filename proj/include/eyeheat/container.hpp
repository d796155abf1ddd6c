#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace eyeheat::io {

/// Binary/JSON hybrid artifact.
///
/// Layout on disk:
///   8 bytes   magic "EYEHEAT\x01"
///   8 bytes   little-endian uint64 header length H
///   H bytes   UTF-8 JSON header {"kind", "meta", "blocks": [{name, dtype, shape, offset, count}]}
///   payload   concatenated little-endian blocks; offsets are relative to the payload start
///
/// dtype is "f64" or "i64". Dense matrices are stored column-major with
/// shape [rows, cols]; a sparse matrix `m` is three blocks m.rows, m.cols (i64)
/// and m.values (f64) of triplets plus shape [rows, cols] on m.values.
class Container {
 public:
  explicit Container(std::string kind = {}) : kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }
  nlohmann::json& meta() noexcept { return meta_; }
  const nlohmann::json& meta() const noexcept { return meta_; }

  void put(const std::string& name, const Eigen::VectorXd& v);
  void put(const std::string& name, const Eigen::MatrixXd& m);
  void put(const std::string& name, const Eigen::SparseMatrix<double>& m);
  void put(const std::string& name, const std::vector<std::int64_t>& v);

  bool has(const std::string& name) const { return blocks_.count(name) > 0; }
  Eigen::VectorXd vector(const std::string& name) const;
  Eigen::MatrixXd matrix(const std::string& name) const;
  Eigen::SparseMatrix<double> sparse(const std::string& name) const;
  std::vector<std::int64_t> integers(const std::string& name) const;

  std::string serialize() const;
  /// Throws ParseError on a malformed container and ValidationError when
  /// expected_kind is non-empty and differs.
  static Container deserialize(std::string_view bytes, const std::string& expected_kind = {});

  void save(const std::string& path) const;
  static Container load(const std::string& path, const std::string& expected_kind = {});

 private:
  struct Block {
    std::string dtype;
    std::vector<std::int64_t> shape;
    std::vector<double> f64;
    std::vector<std::int64_t> i64;
  };
  const Block& block(const std::string& name, const char* dtype) const;

  std::string kind_;
  nlohmann::json meta_ = nlohmann::json::object();
  std::map<std::string, Block> blocks_;
};

}  // namespace eyeheat::io
