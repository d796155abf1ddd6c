#include "eyeheat/container.hpp"

#include <bit>
#include <cstring>

#include "eyeheat/error.hpp"
#include "eyeheat/io.hpp"

namespace eyeheat::io {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'E', 'Y', 'E', 'H', 'E', 'A', 'T', '\x01'};

template <class T>
void append(std::string& out, const T* data, std::size_t count) {
  out.append(reinterpret_cast<const char*>(data), count * sizeof(T));
}

}  // namespace

void Container::put(const std::string& name, const Eigen::VectorXd& v) {
  Block b{"f64", {v.size()}, std::vector<double>(v.data(), v.data() + v.size()), {}};
  blocks_[name] = std::move(b);
}

void Container::put(const std::string& name, const Eigen::MatrixXd& m) {
  Block b{"f64", {m.rows(), m.cols()}, std::vector<double>(m.data(), m.data() + m.size()), {}};
  blocks_[name] = std::move(b);
}

void Container::put(const std::string& name, const Eigen::SparseMatrix<double>& m) {
  std::vector<std::int64_t> rows, cols;
  std::vector<double> vals;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      rows.push_back(it.row());
      cols.push_back(it.col());
      vals.push_back(it.value());
    }
  const auto nnz = static_cast<std::int64_t>(vals.size());
  blocks_[name + ".rows"] = Block{"i64", {nnz}, {}, std::move(rows)};
  blocks_[name + ".cols"] = Block{"i64", {nnz}, {}, std::move(cols)};
  blocks_[name + ".values"] = Block{"f64", {m.rows(), m.cols()}, std::move(vals), {}};
}

void Container::put(const std::string& name, const std::vector<std::int64_t>& v) {
  blocks_[name] = Block{"i64", {static_cast<std::int64_t>(v.size())}, {}, v};
}

const Container::Block& Container::block(const std::string& name, const char* dtype) const {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw ValidationError("container has no block '" + name + "'");
  if (it->second.dtype != dtype)
    throw ValidationError("block '" + name + "' has dtype " + it->second.dtype);
  return it->second;
}

Eigen::VectorXd Container::vector(const std::string& name) const {
  const auto& b = block(name, "f64");
  return Eigen::Map<const Eigen::VectorXd>(b.f64.data(), static_cast<Eigen::Index>(b.f64.size()));
}

Eigen::MatrixXd Container::matrix(const std::string& name) const {
  const auto& b = block(name, "f64");
  if (b.shape.size() != 2) throw ValidationError("block '" + name + "' is not a matrix");
  return Eigen::Map<const Eigen::MatrixXd>(b.f64.data(), b.shape[0], b.shape[1]);
}

Eigen::SparseMatrix<double> Container::sparse(const std::string& name) const {
  const auto& r = block(name + ".rows", "i64");
  const auto& c = block(name + ".cols", "i64");
  const auto& v = block(name + ".values", "f64");
  if (v.shape.size() != 2 || r.i64.size() != v.f64.size() || c.i64.size() != v.f64.size())
    throw ValidationError("sparse block '" + name + "' is inconsistent");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(v.f64.size());
  for (std::size_t k = 0; k < v.f64.size(); ++k) {
    if (r.i64[k] < 0 || r.i64[k] >= v.shape[0] || c.i64[k] < 0 || c.i64[k] >= v.shape[1])
      throw ValidationError("sparse block '" + name + "' has an index out of range");
    t.emplace_back(r.i64[k], c.i64[k], v.f64[k]);
  }
  Eigen::SparseMatrix<double> m(v.shape[0], v.shape[1]);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

std::vector<std::int64_t> Container::integers(const std::string& name) const {
  return block(name, "i64").i64;
}

std::string Container::serialize() const {
  nlohmann::json header;
  header["kind"] = kind_;
  header["meta"] = meta_;
  header["blocks"] = nlohmann::json::array();
  std::string payload;
  for (const auto& [name, b] : blocks_) {
    const std::size_t count = b.dtype == "f64" ? b.f64.size() : b.i64.size();
    header["blocks"].push_back(
        {{"name", name}, {"dtype", b.dtype}, {"shape", b.shape}, {"offset", payload.size()},
         {"count", count}});
    if (b.dtype == "f64")
      append(payload, b.f64.data(), count);
    else
      append(payload, b.i64.data(), count);
  }
  const std::string h = header.dump();
  const std::uint64_t len = h.size();
  std::string out(kMagic, sizeof kMagic);
  append(out, &len, 1);
  out += h;
  out += payload;
  return out;
}

Container Container::deserialize(std::string_view bytes, const std::string& expected_kind) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw ParseError("not an eyeheat container (bad magic)", 0);
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 8, 8);
  if (len > bytes.size() - 16) throw ParseError("container header truncated", 0);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("container header is not JSON: ") + e.what(), 0);
  }
  const std::string_view payload = bytes.substr(16 + len);
  Container c;
  try {
    c.kind_ = header.at("kind").get<std::string>();
    c.meta_ = header.at("meta");
    for (const auto& jb : header.at("blocks")) {
      Block b;
      b.dtype = jb.at("dtype").get<std::string>();
      b.shape = jb.at("shape").get<std::vector<std::int64_t>>();
      const auto offset = jb.at("offset").get<std::size_t>();
      const auto count = jb.at("count").get<std::size_t>();
      if (b.dtype != "f64" && b.dtype != "i64")
        throw ParseError("unknown block dtype '" + b.dtype + "'", 0);
      if (offset > payload.size() || count > (payload.size() - offset) / 8)
        throw ParseError("block '" + jb.at("name").get<std::string>() + "' exceeds payload", 0);
      if (b.dtype == "f64") {
        b.f64.resize(count);
        std::memcpy(b.f64.data(), payload.data() + offset, count * 8);
      } else {
        b.i64.resize(count);
        std::memcpy(b.i64.data(), payload.data() + offset, count * 8);
      }
      c.blocks_[jb.at("name").get<std::string>()] = std::move(b);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed container header: ") + e.what(), 0);
  }
  if (!expected_kind.empty() && c.kind_ != expected_kind)
    throw ValidationError("container holds '" + c.kind_ + "', expected '" + expected_kind + "'");
  return c;
}

void Container::save(const std::string& path) const { write_file(path, serialize()); }

Container Container::load(const std::string& path, const std::string& expected_kind) {
  return deserialize(read_file(path), expected_kind);
}

}  // namespace eyeheat::io
