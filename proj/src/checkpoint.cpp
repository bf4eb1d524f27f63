#include "mne/checkpoint.hpp"

#include "binio.hpp"

namespace mne {

namespace {
constexpr std::uint16_t kVersion = 1;
}

void checkpoint_save(const std::string& path, const ModelParams& params,
                     const CheckpointMeta& meta) {
  const ModelDims dims = dims_of(params);
  std::vector<std::uint8_t> buf;
  binio::put_bytes(buf, "MNEC", 4);
  binio::put_u16(buf, kVersion);
  binio::put_u32(buf, static_cast<std::uint32_t>(dims.feature_dim));
  binio::put_u32(buf, static_cast<std::uint32_t>(dims.diff_dim));
  binio::put_u32(buf, static_cast<std::uint32_t>(dims.rounds));
  binio::put_u32(buf, static_cast<std::uint32_t>(dims.classes));
  binio::put_u8(buf, dims.encoder == EncoderKind::identity ? 0 : 1);
  binio::put_u32(buf, static_cast<std::uint32_t>(dims.encoder_in));
  binio::put_u32(buf, static_cast<std::uint32_t>(dims.encoder_hidden));
  binio::put_u8(buf, static_cast<std::uint8_t>(meta.mode));
  binio::put_u32(buf, static_cast<std::uint32_t>(meta.k));
  binio::put_f64(buf, meta.lambda);
  for (double v : flatten(params)) binio::put_f64(buf, v);
  binio::write_file(path, buf);
}

Checkpoint checkpoint_load(const std::string& path, std::optional<std::size_t> expected_dim) {
  const auto buf = binio::read_file(path);
  binio::Reader r(buf, "checkpoint '" + path + "'");
  r.expect_magic("MNEC");
  const std::uint16_t version = r.u16();
  if (version != kVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }

  ModelDims dims;
  dims.feature_dim = r.u32();
  dims.diff_dim = r.u32();
  dims.rounds = static_cast<int>(r.u32());
  dims.classes = r.u32();
  const std::uint8_t enc_kind = r.u8();
  if (enc_kind > 1) r.fail("bad encoder kind " + std::to_string(enc_kind));
  dims.encoder = enc_kind == 0 ? EncoderKind::identity : EncoderKind::mlp;
  dims.encoder_in = r.u32();
  dims.encoder_hidden = r.u32();
  const std::uint8_t mode = r.u8();
  if (mode > 2) r.fail("bad aggregation mode " + std::to_string(mode));

  Checkpoint ckpt;
  ckpt.meta.mode = static_cast<AggMode>(mode);
  ckpt.meta.k = static_cast<int>(r.u32());
  ckpt.meta.lambda = r.f64();

  if (expected_dim && *expected_dim != dims.feature_dim) {
    throw ShapeError("checkpoint '" + path + "': expected feature dim " +
                     std::to_string(*expected_dim) + ", found " +
                     std::to_string(dims.feature_dim));
  }
  if (dims.feature_dim == 0 || dims.rounds < 0 || dims.classes < 2) {
    r.fail("implausible header");
  }

  // shape the parameter container, then bulk-read the payload
  ckpt.params = init_model(dims, 0);
  const std::size_t count = param_count(ckpt.params);
  if (r.remaining() != count * 8) {
    throw FormatError("checkpoint '" + path + "': expected " + std::to_string(count * 8) +
                      " payload bytes at offset " + std::to_string(r.offset()) + ", have " +
                      std::to_string(r.remaining()));
  }
  Vec flat(count);
  for (std::size_t i = 0; i < count; ++i) flat[i] = r.f64();
  unflatten(ckpt.params, flat);
  r.expect_exhausted();
  return ckpt;
}

}  // namespace mne
