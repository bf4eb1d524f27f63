#include "mne/embedding_io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "binio.hpp"

namespace mne {

namespace binio {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw FormatError("cannot open '" + path + "' for reading");
  std::fseek(f, 0, SEEK_END);
  const long size = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(size < 0 ? 0 : size));
  if (!buf.empty() && std::fread(buf.data(), 1, buf.size(), f) != buf.size()) {
    std::fclose(f);
    throw FormatError("short read from '" + path + "'");
  }
  std::fclose(f);
  return buf;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& buf) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw FormatError("cannot open '" + path + "' for writing");
  if (!buf.empty() && std::fwrite(buf.data(), 1, buf.size(), f) != buf.size()) {
    std::fclose(f);
    throw FormatError("short write to '" + path + "'");
  }
  std::fclose(f);
}

}  // namespace binio

void write_embeddings(const std::string& path, const Dataset& data) {
  data.validate();
  const bool has_labels = data.labeled();
  const std::size_t n = data.size();
  const std::size_t d = data.dim();
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw CapacityError("write_embeddings: too many records");
  }

  std::vector<std::uint8_t> buf;
  buf.reserve(13 + n * (4 * d + (has_labels ? 4 : 0)));
  binio::put_bytes(buf, "MNE1", 4);
  binio::put_u32(buf, static_cast<std::uint32_t>(n));
  binio::put_u32(buf, static_cast<std::uint32_t>(d));
  binio::put_u8(buf, has_labels ? 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const auto v = static_cast<float>(data.features[i][j]);
      if (!std::isfinite(v)) {
        throw NumericError("write_embeddings: non-finite value in record " + std::to_string(i));
      }
      binio::put_f32(buf, v);
    }
    if (has_labels) binio::put_i32(buf, data.labels[i]);
  }
  binio::write_file(path, buf);
}

Dataset read_embeddings(const std::string& path) {
  const auto buf = binio::read_file(path);
  binio::Reader r(buf, "embedding file '" + path + "'");
  r.expect_magic("MNE1");
  const std::uint32_t n = r.u32();
  const std::uint32_t d = r.u32();
  const std::uint8_t has_labels = r.u8();
  if (has_labels > 1) r.fail("has_labels flag must be 0 or 1");
  if (d == 0 && n > 0) r.fail("zero dimension with nonzero count");

  const std::size_t expected =
      13 + static_cast<std::size_t>(n) * (4 * static_cast<std::size_t>(d) + (has_labels ? 4 : 0));
  if (buf.size() != expected) {
    throw FormatError("embedding file '" + path + "': expected " + std::to_string(expected) +
                      " bytes for N=" + std::to_string(n) + " D=" + std::to_string(d) +
                      ", file has " + std::to_string(buf.size()));
  }

  Dataset data;
  data.features.resize(n, Vec(d));
  if (has_labels) data.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      const std::size_t at = r.offset();
      const float v = r.f32();
      if (!std::isfinite(v)) {
        throw FormatError("embedding file '" + path + "': non-finite float at byte offset " +
                          std::to_string(at));
      }
      data.features[i][j] = static_cast<double>(v);
    }
    if (has_labels) data.labels[i] = r.i32();
  }
  r.expect_exhausted();
  return data;
}

}  // namespace mne
