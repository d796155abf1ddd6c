// Gmsh ASCII reader (formats 2.2 and 4.1) and 2.2 writer.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "eyeheat/error.hpp"
#include "eyeheat/mesh.hpp"

namespace eyeheat::mesh {
namespace {

struct Token {
  std::string_view text;
  std::size_t line;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t line = 1, i = 0;
  while (i < text.size()) {
    const char ch = text[i];
    if (ch == '\n') {
      ++line;
      ++i;
    } else if (ch == ' ' || ch == '\t' || ch == '\r') {
      ++i;
    } else if (ch == '"') {
      const std::size_t end = text.find('"', i + 1);
      if (end == std::string_view::npos) throw ParseError("unterminated quoted string", line);
      out.push_back({text.substr(i + 1, end - i - 1), line});
      i = end + 1;
    } else {
      std::size_t j = i;
      while (j < text.size() && text[j] != ' ' && text[j] != '\t' && text[j] != '\r' &&
             text[j] != '\n')
        ++j;
      out.push_back({text.substr(i, j - i), line});
      i = j;
    }
  }
  return out;
}

class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  bool done() const { return pos_ >= tokens_.size(); }
  std::size_t line() const {
    if (tokens_.empty()) return 0;
    return pos_ < tokens_.size() ? tokens_[pos_].line : tokens_.back().line;
  }
  const Token& peek() const {
    if (done()) throw ParseError("unexpected end of file", line());
    return tokens_[pos_];
  }
  Token next() {
    const Token& t = peek();
    ++pos_;
    return t;
  }
  void expect(std::string_view word) {
    Token t = next();
    if (t.text != word)
      throw ParseError("expected '" + std::string(word) + "', found '" + std::string(t.text) + "'",
                       t.line);
  }
  long long integer() {
    Token t = next();
    long long v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || p != t.text.data() + t.text.size())
      throw ParseError("expected integer, found '" + std::string(t.text) + "'", t.line);
    return v;
  }
  double real() {
    Token t = next();
    double v = 0;
    auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || p != t.text.data() + t.text.size())
      throw ParseError("expected number, found '" + std::string(t.text) + "'", t.line);
    return v;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

int nodes_per_element(int type, std::size_t line) {
  switch (type) {
    case 1: return 2;
    case 2: return 3;
    case 4: return 4;
    case 15: return 1;
    default:
      throw ParseError("unsupported element type " + std::to_string(type) +
                           " (only points, lines, triangles and tetrahedra)",
                       line);
  }
}

int element_dimension(int type) {
  switch (type) {
    case 15: return 0;
    case 1: return 1;
    case 2: return 2;
    default: return 3;
  }
}

struct RawElement {
  long long tag;
  int type;
  int physical;  // 0 = none
  std::vector<long long> nodes;
  std::size_t line;
};

struct RawMesh {
  std::string version;
  std::map<std::pair<int, int>, std::string> physical_names;
  std::map<std::pair<int, int>, int> entity_physical;  // v4: (dim, entity) -> physical
  std::map<long long, std::array<double, 3>> nodes;
  std::vector<RawElement> elements;
};

void skip_section(TokenStream& ts, std::string_view name) {
  const std::string end = "$End" + std::string(name.substr(1));
  while (ts.next().text != end) {
  }
}

void read_physical_names(TokenStream& ts, RawMesh& raw) {
  const long long n = ts.integer();
  for (long long i = 0; i < n; ++i) {
    const int dim = static_cast<int>(ts.integer());
    const int tag = static_cast<int>(ts.integer());
    raw.physical_names[{dim, tag}] = std::string(ts.next().text);
  }
  ts.expect("$EndPhysicalNames");
}

void read_entities(TokenStream& ts, RawMesh& raw) {
  long long counts[4];
  for (auto& c : counts) c = ts.integer();
  for (int dim = 0; dim < 4; ++dim) {
    for (long long i = 0; i < counts[dim]; ++i) {
      const int tag = static_cast<int>(ts.integer());
      const int ncoords = dim == 0 ? 3 : 6;
      for (int k = 0; k < ncoords; ++k) ts.real();
      const long long nphys = ts.integer();
      int first = 0;
      for (long long k = 0; k < nphys; ++k) {
        const int p = static_cast<int>(ts.integer());
        if (k == 0) first = std::abs(p);
      }
      raw.entity_physical[{dim, tag}] = first;
      if (dim > 0) {
        const long long nbound = ts.integer();
        for (long long k = 0; k < nbound; ++k) ts.integer();
      }
    }
  }
  ts.expect("$EndEntities");
}

void read_nodes_v2(TokenStream& ts, RawMesh& raw) {
  const long long n = ts.integer();
  for (long long i = 0; i < n; ++i) {
    const long long tag = ts.integer();
    std::array<double, 3> x{};
    for (auto& c : x) c = ts.real();
    raw.nodes[tag] = x;
  }
  ts.expect("$EndNodes");
}

void read_nodes_v4(TokenStream& ts, RawMesh& raw) {
  const long long blocks = ts.integer();
  ts.integer();  // total node count
  ts.integer();
  ts.integer();
  for (long long b = 0; b < blocks; ++b) {
    ts.integer();  // entity dim
    ts.integer();  // entity tag
    const std::size_t line = ts.line();
    if (ts.integer() != 0) throw ParseError("parametric node blocks are not supported", line);
    const long long n = ts.integer();
    std::vector<long long> tags(n);
    for (auto& t : tags) t = ts.integer();
    for (long long t : tags) {
      std::array<double, 3> x{};
      for (auto& c : x) c = ts.real();
      raw.nodes[t] = x;
    }
  }
  ts.expect("$EndNodes");
}

void read_elements_v2(TokenStream& ts, RawMesh& raw) {
  const long long n = ts.integer();
  for (long long i = 0; i < n; ++i) {
    RawElement e;
    e.line = ts.line();
    e.tag = ts.integer();
    e.type = static_cast<int>(ts.integer());
    const long long ntags = ts.integer();
    e.physical = 0;
    for (long long k = 0; k < ntags; ++k) {
      const long long t = ts.integer();
      if (k == 0) e.physical = static_cast<int>(t);
    }
    e.nodes.resize(nodes_per_element(e.type, e.line));
    for (auto& v : e.nodes) v = ts.integer();
    raw.elements.push_back(std::move(e));
  }
  ts.expect("$EndElements");
}

void read_elements_v4(TokenStream& ts, RawMesh& raw) {
  const long long blocks = ts.integer();
  ts.integer();
  ts.integer();
  ts.integer();
  for (long long b = 0; b < blocks; ++b) {
    const int edim = static_cast<int>(ts.integer());
    const int etag = static_cast<int>(ts.integer());
    const std::size_t line = ts.line();
    const int type = static_cast<int>(ts.integer());
    const long long n = ts.integer();
    const int nn = nodes_per_element(type, line);
    auto it = raw.entity_physical.find({edim, etag});
    const int phys = it == raw.entity_physical.end() ? 0 : it->second;
    for (long long i = 0; i < n; ++i) {
      RawElement e;
      e.line = ts.line();
      e.tag = ts.integer();
      e.type = type;
      e.physical = phys;
      e.nodes.resize(nn);
      for (auto& v : e.nodes) v = ts.integer();
      raw.elements.push_back(std::move(e));
    }
  }
  ts.expect("$EndElements");
}

RawMesh read_raw(std::string_view text) {
  TokenStream ts(tokenize(text));
  if (ts.done() || ts.peek().text != "$MeshFormat")
    throw ParseError("missing $MeshFormat header", ts.done() ? 1 : ts.peek().line);
  ts.next();
  RawMesh raw;
  const Token version = ts.next();
  raw.version = std::string(version.text);
  if (raw.version != "2.2" && raw.version != "4.1" && raw.version != "4")
    throw ParseError("unsupported MSH version " + raw.version, version.line);
  const std::size_t ftline = ts.line();
  if (ts.integer() != 0) throw ParseError("binary MSH files are not supported", ftline);
  ts.integer();  // data size
  ts.expect("$EndMeshFormat");
  const bool v4 = raw.version[0] == '4';

  bool have_nodes = false, have_elements = false;
  while (!ts.done()) {
    const Token head = ts.next();
    if (head.text == "$PhysicalNames") {
      read_physical_names(ts, raw);
    } else if (head.text == "$Entities") {
      read_entities(ts, raw);
    } else if (head.text == "$Nodes") {
      v4 ? read_nodes_v4(ts, raw) : read_nodes_v2(ts, raw);
      have_nodes = true;
    } else if (head.text == "$Elements") {
      v4 ? read_elements_v4(ts, raw) : read_elements_v2(ts, raw);
      have_elements = true;
    } else if (!head.text.empty() && head.text[0] == '$') {
      skip_section(ts, head.text);
    } else {
      throw ParseError("unexpected token '" + std::string(head.text) + "' outside a section",
                       head.line);
    }
  }
  if (!have_nodes) throw ParseError("missing $Nodes section", 0);
  if (!have_elements) throw ParseError("missing $Elements section", 0);
  return raw;
}

std::string resolve_name(const RawMesh& raw, const AliasMap& aliases, int dim, int physical) {
  auto it = raw.physical_names.find({dim, physical});
  std::string name = it != raw.physical_names.end() ? it->second : std::to_string(physical);
  auto alias = aliases.find(name);
  return alias != aliases.end() ? alias->second : name;
}

}  // namespace

Mesh parse_msh(std::string_view text, const AliasMap& aliases) {
  const RawMesh raw = read_raw(text);

  int dim = 0;
  for (const auto& e : raw.elements) {
    if (e.type == 4) dim = 3;
    if (e.type == 2 && dim < 2) dim = 2;
  }
  if (dim == 0) throw ValidationError("mesh contains no triangles or tetrahedra");
  const int cell_type = dim == 3 ? 4 : 2;
  const int facet_type = dim == 3 ? 2 : 1;

  // Regions ordered by physical tag so that write/read round-trips preserve indices.
  std::map<int, std::string> region_by_tag;
  for (const auto& e : raw.elements) {
    if (e.type != cell_type) continue;
    if (e.physical == 0)
      throw ValidationError("cell element " + std::to_string(e.tag) + " (line " +
                            std::to_string(e.line) + ") has no physical group");
    region_by_tag.emplace(e.physical, resolve_name(raw, aliases, dim, e.physical));
  }
  std::vector<std::string> region_names;
  std::map<int, int> region_index;
  for (const auto& [tag, name] : region_by_tag) {
    auto pos = std::find(region_names.begin(), region_names.end(), name);
    if (pos == region_names.end()) {
      region_index[tag] = static_cast<int>(region_names.size());
      region_names.push_back(name);
    } else {
      region_index[tag] = static_cast<int>(pos - region_names.begin());
    }
  }

  std::map<long long, int> vertex_of;
  for (const auto& e : raw.elements)
    if (e.type == cell_type)
      for (long long n : e.nodes) vertex_of.emplace(n, 0);
  std::vector<double> coords;
  coords.reserve(vertex_of.size() * dim);
  int next = 0;
  for (auto& [tag, idx] : vertex_of) {
    auto it = raw.nodes.find(tag);
    if (it == raw.nodes.end())
      throw ValidationError("element references undefined node " + std::to_string(tag));
    idx = next++;
    for (int d = 0; d < dim; ++d) coords.push_back(it->second[d]);
  }
  auto vid = [&](long long tag, const RawElement& e) {
    auto it = vertex_of.find(tag);
    if (it == vertex_of.end())
      throw ValidationError("facet element " + std::to_string(e.tag) + " (line " +
                            std::to_string(e.line) + ") references a node outside every cell");
    return it->second;
  };

  std::vector<int> cells, cell_regions, facets;
  std::vector<BoundaryLabel> labels;
  for (const auto& e : raw.elements) {
    if (e.type == cell_type) {
      std::vector<int> v;
      for (long long n : e.nodes) v.push_back(vid(n, e));
      // Fix orientation so that the signed measure is positive.
      double measure;
      if (dim == 2) {
        const double* a = &coords[2 * v[0]];
        const double* b = &coords[2 * v[1]];
        const double* c = &coords[2 * v[2]];
        measure = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
      } else {
        double m[3][3];
        for (int j = 0; j < 3; ++j)
          for (int i = 0; i < 3; ++i) m[i][j] = coords[3 * v[j + 1] + i] - coords[3 * v[0] + i];
        measure = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                  m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                  m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
      }
      if (measure < 0) std::swap(v[dim - 1], v[dim]);
      cells.insert(cells.end(), v.begin(), v.end());
      cell_regions.push_back(region_index.at(e.physical));
    } else if (e.type == facet_type) {
      if (e.physical == 0)
        throw ValidationError("facet element " + std::to_string(e.tag) + " (line " +
                              std::to_string(e.line) + ") has no physical group");
      const std::string name = resolve_name(raw, aliases, dim - 1, e.physical);
      auto label = boundary_label_from_string(name);
      if (!label)
        throw ValidationError("facet element " + std::to_string(e.tag) + " (line " +
                              std::to_string(e.line) + ") has label '" + name +
                              "', expected amb or body (use an alias)");
      for (long long n : e.nodes) facets.push_back(vid(n, e));
      labels.push_back(*label);
    }
  }
  return Mesh(dim, std::move(coords), std::move(cells), std::move(cell_regions),
              std::move(region_names), std::move(facets), std::move(labels));
}

Mesh load_msh(const std::string& path, const AliasMap& aliases) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mesh file '" + path + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_msh(ss.str(), aliases);
}

std::string format_msh(const Mesh& mesh) {
  const int dim = mesh.dimension();
  const auto& regions = mesh.region_names();
  const int amb_tag = static_cast<int>(regions.size()) + 1;
  const int body_tag = amb_tag + 1;
  std::ostringstream os;
  os << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  os << "$PhysicalNames\n" << regions.size() + 2 << "\n";
  for (std::size_t r = 0; r < regions.size(); ++r)
    os << dim << " " << r + 1 << " \"" << regions[r] << "\"\n";
  os << dim - 1 << " " << amb_tag << " \"amb\"\n";
  os << dim - 1 << " " << body_tag << " \"body\"\n";
  os << "$EndPhysicalNames\n";

  os << "$Nodes\n" << mesh.num_vertices() << "\n";
  char buf[96];
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    auto x = mesh.vertex(v);
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g %.17g\n", v + 1, x[0], x[1],
                  dim == 3 ? x[2] : 0.0);
    os << buf;
  }
  os << "$EndNodes\n";

  os << "$Elements\n" << mesh.num_facets() + mesh.num_cells() << "\n";
  std::size_t id = 1;
  const int facet_type = dim == 3 ? 2 : 1;
  const int cell_type = dim == 3 ? 4 : 2;
  for (std::size_t f = 0; f < mesh.num_facets(); ++f) {
    const int tag = mesh.facet_label(f) == BoundaryLabel::amb ? amb_tag : body_tag;
    os << id++ << " " << facet_type << " 2 " << tag << " " << tag;
    for (int v : mesh.facet(f)) os << " " << v + 1;
    os << "\n";
  }
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const int tag = mesh.cell_region(c) + 1;
    os << id++ << " " << cell_type << " 2 " << tag << " " << tag;
    for (int v : mesh.cell(c)) os << " " << v + 1;
    os << "\n";
  }
  os << "$EndElements\n";
  return os.str();
}

void write_msh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write mesh file '" + path + "'");
  out << format_msh(mesh);
}

}  // namespace eyeheat::mesh
