#pragma once

#include <cstdint>
#include <filesystem>

#include "mgcn/graph.hpp"

namespace mgcn {

// Directory layout: edges.txt (two whitespace-separated node ids per line),
// features.csv (N rows, D real columns, no header), labels.txt (one class id
// per line). Edge lists are symmetrized and de-duplicated on load; stored
// self-loops are dropped. Splits are drawn with make_splits on the given
// fractions and seed. Throws ConfigError on malformed input.
Dataset load_dataset(const std::filesystem::path& dir, double train_fraction,
                     double val_fraction, std::uint64_t split_seed);
Dataset load_dataset(const std::filesystem::path& dir);

// Writes the canonical form of the same layout: each undirected edge once as
// "u v" with u < v in ascending order, features with shortest round-trip
// decimals. save followed by load followed by save is byte-identical.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Shortest decimal string that parses back to exactly v.
std::string format_double(double v);

}  // namespace mgcn
