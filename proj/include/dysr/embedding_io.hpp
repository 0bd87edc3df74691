#pragma once

// Embedding files. Binary layout: magic "DYSR", then u32 version, u32 count,
// u32 dim (little-endian), followed by count*dim 64-bit floats in row-major
// order. Rows are positional with respect to the registry (services) or the
// raw record order (requirements). The CSV fallback carries explicit row ids:
// one line per row, "id,v_0,...,v_{d-1}".

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dysr/numerics.hpp"

namespace dysr {

static_assert(std::endian::native == std::endian::little,
              "embedding binaries are little-endian");

inline constexpr char kEmbeddingMagic[4] = {'D', 'Y', 'S', 'R'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

inline void write_embeddings_binary(const std::string& path,
                                    const std::vector<DenseVector>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open embedding file for writing: " + path);
  const std::uint32_t count = static_cast<std::uint32_t>(rows.size());
  const std::uint32_t dim = rows.empty() ? 0 : static_cast<std::uint32_t>(rows.front().size());
  out.write(kEmbeddingMagic, 4);
  out.write(reinterpret_cast<const char*>(&kEmbeddingVersion), 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  for (const DenseVector& r : rows) {
    if (r.size() != dim)
      throw std::invalid_argument("write_embeddings_binary: ragged rows in " + path);
    out.write(reinterpret_cast<const char*>(r.data()),
              static_cast<std::streamsize>(r.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("short write on embedding file: " + path);
}

inline std::vector<DenseVector> read_embeddings_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  char magic[4];
  std::uint32_t version = 0, count = 0, dim = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&count), 4);
  in.read(reinterpret_cast<char*>(&dim), 4);
  if (!in || std::string(magic, 4) != std::string(kEmbeddingMagic, 4))
    throw std::runtime_error("bad embedding file magic: " + path);
  if (version != kEmbeddingVersion)
    throw std::runtime_error("unsupported embedding file version " + std::to_string(version) +
                             ": " + path);
  std::vector<DenseVector> rows(count, DenseVector(dim, 0.0));
  for (auto& r : rows) {
    in.read(reinterpret_cast<char*>(r.data()),
            static_cast<std::streamsize>(dim * sizeof(double)));
    if (!in) throw std::runtime_error("truncated embedding file: " + path);
    if (!all_finite(r))
      throw std::runtime_error("non-finite embedding entry in: " + path);
  }
  return rows;
}

/// CSV rows with explicit ids. Values are printed with %.17g so that a write
/// followed by a read reproduces every double bit-exactly.
inline void write_embeddings_csv(const std::string& path, const std::vector<std::string>& ids,
                                 const std::vector<DenseVector>& rows) {
  if (ids.size() != rows.size())
    throw std::invalid_argument("write_embeddings_csv: ids/rows size mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open embedding csv for writing: " + path);
  char buf[64];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << ids[i];
    for (double x : rows[i]) {
      std::snprintf(buf, sizeof(buf), "%.17g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline std::pair<std::vector<std::string>, std::vector<DenseVector>> read_embeddings_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding csv: " + path);
  std::vector<std::string> ids;
  std::vector<DenseVector> rows;
  std::string line;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ',')) continue;
    ids.push_back(cell);
    DenseVector row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("bad numeric cell in " + path + " row id=" + ids.back());
      }
    }
    if (!all_finite(row))
      throw std::runtime_error("non-finite embedding entry in " + path + " row id=" + ids.back());
    if (dim == 0) dim = row.size();
    if (row.size() != dim)
      throw std::runtime_error("inconsistent embedding dimension in " + path +
                               " at row id=" + ids.back());
    rows.push_back(std::move(row));
  }
  return {std::move(ids), std::move(rows)};
}

inline bool ends_with_csv(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

}  // namespace dysr
