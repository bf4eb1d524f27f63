#ifndef MNE_CHECKPOINT_HPP
#define MNE_CHECKPOINT_HPP

#include <optional>
#include <string>

#include "mne/embed.hpp"
#include "mne/model.hpp"

namespace mne {

// Training configuration carried alongside the parameters.
struct CheckpointMeta {
  int k = 12;
  double lambda = 1.0;
  AggMode mode = AggMode::attention;
};

struct Checkpoint {
  ModelParams params;
  CheckpointMeta meta;
};

// Checkpoint format (little-endian):
//   magic "MNEC", version u16 (currently 1)
//   header: dim u32, diff_dim u32, rounds u32, classes u32,
//           encoder_kind u8 (0 identity / 1 mlp), encoder_in u32,
//           encoder_hidden u32, agg_mode u8, k u32, lambda f64
//   payload: all parameters as f64 in the flattening order of param_layout()
// The reader never exposes partial state: it either returns a complete
// checkpoint or throws.
void checkpoint_save(const std::string& path, const ModelParams& params,
                     const CheckpointMeta& meta);

// expected_dim, when given, must match the stored feature dimension.
Checkpoint checkpoint_load(const std::string& path,
                           std::optional<std::size_t> expected_dim = std::nullopt);

}  // namespace mne

#endif  // MNE_CHECKPOINT_HPP
