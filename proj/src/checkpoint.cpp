#include "mgcn/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "mgcn/errors.hpp"

namespace mgcn {

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json root = nlohmann::json::object();
  for (const auto& [name, m] : ckpt) {
    nlohmann::json entry;
    entry["shape"] = {m.rows(), m.cols()};
    auto& values = entry["values"] = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) values.push_back(m(i, j));
    }
    root[name] = std::move(entry);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << root.dump(2) << '\n';
  if (!out) throw ConfigError("write failure on checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  nlohmann::json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError("checkpoint root must be an object");
  Checkpoint ckpt;
  for (const auto& [name, entry] : root.items()) {
    if (!entry.contains("shape") || !entry.contains("values")) {
      throw ConfigError("checkpoint entry '" + name + "' missing shape/values");
    }
    auto shape = entry["shape"];
    if (!shape.is_array() || shape.size() != 2) {
      throw ConfigError("checkpoint entry '" + name + "' has a bad shape");
    }
    Index rows = shape[0].get<Index>();
    Index cols = shape[1].get<Index>();
    const auto& values = entry["values"];
    if (rows < 0 || cols < 0 ||
        static_cast<Index>(values.size()) != rows * cols) {
      throw ConfigError("checkpoint entry '" + name + "' value count mismatch");
    }
    Mat m(rows, cols);
    std::size_t k = 0;
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) m(i, j) = values[k++].get<double>();
    }
    ckpt.emplace(name, std::move(m));
  }
  return ckpt;
}

}  // namespace mgcn
