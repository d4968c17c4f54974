#include "mgcn/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "mgcn/errors.hpp"

namespace mgcn {

namespace {

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  return in;
}

// Strips trailing CR so CRLF files parse like LF files.
void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t") == std::string::npos;
}

int parse_int(std::string_view tok, const std::string& context) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ConfigError("bad integer '" + std::string(tok) + "' in " + context);
  }
  return value;
}

double parse_double(std::string_view tok, const std::string& context) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw ConfigError("non-numeric entry '" + std::string(tok) + "' in " + context);
  }
  return value;
}

std::vector<std::pair<int, int>> read_edges(const std::filesystem::path& p) {
  auto in = open_input(p);
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    chomp(line);
    if (is_blank(line)) continue;
    std::istringstream ss(line);
    std::string a, b, extra;
    if (!(ss >> a >> b) || (ss >> extra)) {
      throw ConfigError("expected two node ids at " + p.string() + ":" +
                        std::to_string(lineno));
    }
    std::string ctx = p.string() + ":" + std::to_string(lineno);
    edges.emplace_back(parse_int(a, ctx), parse_int(b, ctx));
  }
  return edges;
}

Mat read_features(const std::filesystem::path& p) {
  auto in = open_input(p);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    chomp(line);
    if (is_blank(line)) continue;
    std::string ctx = p.string() + ":" + std::to_string(lineno);
    std::vector<double> row;
    if (width) row.reserve(width);
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view tok(line.data() + start,
                           (comma == std::string::npos ? line.size() : comma) - start);
      row.push_back(parse_double(tok, ctx));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (width == 0) {
      width = row.size();
    } else if (row.size() != width) {
      throw ConfigError("row width " + std::to_string(row.size()) +
                        " differs from " + std::to_string(width) + " at " + ctx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("no feature rows in " + p.string());
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return m;
}

std::vector<int> read_labels(const std::filesystem::path& p) {
  auto in = open_input(p);
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    chomp(line);
    if (is_blank(line)) continue;
    labels.push_back(parse_int(line, p.string() + ":" + std::to_string(lineno)));
  }
  return labels;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Dataset load_dataset(const std::filesystem::path& dir, double train_fraction,
                     double val_fraction, std::uint64_t split_seed) {
  auto edges = read_edges(dir / "edges.txt");
  Dataset ds;
  ds.features = read_features(dir / "features.csv");
  ds.labels = read_labels(dir / "labels.txt");

  int num_nodes = static_cast<int>(ds.features.rows());
  if (static_cast<int>(ds.labels.size()) != num_nodes) {
    throw ConfigError("labels.txt has " + std::to_string(ds.labels.size()) +
                      " entries but features.csv has " +
                      std::to_string(num_nodes) + " rows");
  }
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes || u < 0 || v < 0) {
      throw ConfigError("edges.txt references node " +
                        std::to_string(std::max(u, v)) + " but only " +
                        std::to_string(num_nodes) + " nodes are declared");
    }
  }
  ds.graph = Graph::from_edges(num_nodes, edges);

  int max_label = 0;
  for (int y : ds.labels) max_label = std::max(max_label, y);
  ds.num_classes = max_label + 1;

  ds.splits = make_splits(ds.labels, train_fraction, val_fraction, split_seed);
  ds.validate();
  return ds;
}

Dataset load_dataset(const std::filesystem::path& dir) {
  return load_dataset(dir, 0.025, 0.025, 0);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open_output = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);  // binary: no newline translation
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
  };
  {
    auto out = open_output(dir / "edges.txt");
    const auto& g = ds.graph;
    for (int u = 0; u < g.num_nodes; ++u) {
      for (int k = g.row_offsets[u]; k < g.row_offsets[u + 1]; ++k) {
        int v = g.col_indices[k];
        if (u < v) out << u << ' ' << v << '\n';
      }
    }
  }
  {
    auto out = open_output(dir / "features.csv");
    std::string line;
    for (Index i = 0; i < ds.features.rows(); ++i) {
      line.clear();
      for (Index j = 0; j < ds.features.cols(); ++j) {
        if (j) line += ',';
        line += format_double(ds.features(i, j));
      }
      line += '\n';
      out << line;
    }
  }
  {
    auto out = open_output(dir / "labels.txt");
    for (int y : ds.labels) out << y << '\n';
  }
}

}  // namespace mgcn
