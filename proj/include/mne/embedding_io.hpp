#ifndef MNE_EMBEDDING_IO_HPP
#define MNE_EMBEDDING_IO_HPP

#include <string>

#include "mne/dataset.hpp"

namespace mne {

// Embedding file format (little-endian):
//   magic "MNE1" (4 bytes)
//   count N      u32
//   dim D        u32
//   has_labels   u8 (0 or 1)
//   N records: D f32 values, then an i32 label iff has_labels
// Total length is exactly 13 + N * (4*D + 4*has_labels) bytes. Values are
// stored at single precision; all floats must be finite.
void write_embeddings(const std::string& path, const Dataset& data);
Dataset read_embeddings(const std::string& path);

}  // namespace mne

#endif  // MNE_EMBEDDING_IO_HPP
